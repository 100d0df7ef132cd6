//! Downlink precoding by UL-DL reciprocity and the resulting SINR.

use log::warn;
use num_complex::Complex64;

use crate::channel::{inner, norm_sqr, ChannelRealization, PairVectors};
use crate::clustering::ClusterGraph;
use crate::pathloss::SnrCalibration;
use crate::uplink::{CombinerWeights, EdgeProjections, QuantizationPlan, ReceiverBank};

#[derive(Clone, Debug)]
pub struct PrecoderSet {
    /// Block `u_lk`, zero for `l` outside the (pruned) cluster.
    pub u: PairVectors,
    pub power: Vec<f64>,
    pub serving: Vec<Vec<usize>>,
}

/// Stacks `w0_lk v_lk` over the pruned cluster of each UE and normalizes the
/// stacked vector. A UE whose stacked vector vanishes gets no precoder.
pub fn build_precoders(bank: &ReceiverBank, weights: &CombinerWeights, pruned: &ClusterGraph) -> PrecoderSet {
    let (nl, nk, m) = (pruned.num_rus(), pruned.num_ues(), bank.v.antennas());
    let mut u = PairVectors::zeros(nl, nk, m);
    let mut serving = vec![Vec::new(); nk];
    for k in 0..nk {
        let c = pruned.serving(k);
        let norm2: f64 = c.iter().map(|&l| weights.w0(l, k).norm_sqr() * norm_sqr(bank.v.get(l, k))).sum();
        if norm2 <= 0.0 {
            if !c.is_empty() {
                warn!("UE {k} has a zero precoder and is treated as unserved");
            }
            continue;
        }
        let scale = 1.0 / norm2.sqrt();
        for &l in c {
            let w = weights.w0(l, k) * scale;
            for (o, v) in u.get_mut(l, k).iter_mut().zip(bank.v.get(l, k)) {
                *o = w * v;
            }
        }
        serving[k] = c.to_vec();
    }
    PrecoderSet { u, power: vec![1.0; nk], serving }
}

/// `SINR_k = q_k |h_k^H u_k|^2 / (1/SNR + sum_{j != k} q_j |h_k^H u_j|^2)`.
pub fn dl_sinr(real: &ChannelRealization, precoders: &PrecoderSet, snr: &SnrCalibration) -> Vec<f64> {
    let nk = precoders.serving.len();
    let cross = |k: usize, j: usize| -> Complex64 {
        precoders.serving[j].iter().map(|&l| inner(real.get(l, k), precoders.u.get(l, j))).sum()
    };
    (0..nk)
        .map(|k| {
            if precoders.serving[k].is_empty() {
                return 0.0;
            }
            let mut interference = 1.0 / snr.snr;
            for j in (0..nk).filter(|&j| j != k) {
                interference += precoders.power[j] * cross(k, j).norm_sqr();
            }
            precoders.power[k] * cross(k, k).norm_sqr() / interference
        })
        .collect()
}

/// [`dl_sinr`] with unit powers, evaluated from precomputed projections.
/// Uses `h_lk^H v_lj = conj(v_lj^H h_lk)`; `clusters` is the unpruned graph
/// the projections and `plan` were built on.
pub fn dl_sinr_projected(
    projections: &EdgeProjections,
    weights: &CombinerWeights,
    plan: &QuantizationPlan,
    clusters: &ClusterGraph,
    snr: &SnrCalibration,
) -> Vec<f64> {
    let nk = clusters.num_ues();
    let mut signal = vec![0.0; nk];
    let mut interference = vec![1.0 / snr.snr; nk];
    let mut served = vec![false; nk];
    let mut z = vec![Complex64::default(); nk];
    for j in 0..nk {
        let kept: Vec<(usize, usize)> = clusters
            .serving(j)
            .iter()
            .map(|&l| (l, clusters.edge(l, j).unwrap()))
            .filter(|&(_, e)| !plan.edges[e].pruned)
            .collect();
        let norm2: f64 = kept.iter().map(|&(l, e)| weights.w0(l, j).norm_sqr() * projections.v_norm2[e]).sum();
        if norm2 <= 0.0 {
            continue;
        }
        served[j] = true;
        let scale = 1.0 / norm2.sqrt();
        z.iter_mut().for_each(|x| *x = Complex64::default());
        for &(l, e) in &kept {
            let w = weights.w0(l, j) * scale;
            for (x, g) in z.iter_mut().zip(projections.gains(e)) {
                *x += w * g.conj();
            }
        }
        for (k, x) in z.iter().enumerate() {
            if k == j {
                signal[k] = x.norm_sqr();
            } else {
                interference[k] += x.norm_sqr();
            }
        }
    }
    (0..nk).map(|k| if served[k] { signal[k] / interference[k] } else { 0.0 }).collect()
}
