//! Pilot assignment and subspace-projection channel estimation.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{complex_normal, ChannelRealization, PairVectors, SubspaceSet};
use crate::clustering::ClusterGraph;
use crate::pathloss::{LsfcMatrix, SnrCalibration};
use crate::rng::{stream, Stream};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PilotAssignment {
    pub pilot_index: Vec<usize>,
    pub dimension: usize,
}

impl PilotAssignment {
    /// UEs sharing pilot `t`.
    pub fn users_of(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        self.pilot_index.iter().enumerate().filter(move |(_, &p)| p == t).map(|(k, _)| k)
    }
}

/// Greedy overlap-minimizing assignment.
///
/// UEs are visited by decreasing strongest LSFC. A UE takes the pilot whose
/// worst normalized subspace overlap with already assigned co-pilot UEs at
/// any of its serving RUs is smallest. Among equal costs the least used pilot
/// wins, then the lowest index, so `K <= tau_p` yields distinct pilots.
pub fn assign_pilots(clusters: &ClusterGraph, bases: &SubspaceSet, tau_p: usize, lsfc: &LsfcMatrix) -> PilotAssignment {
    assert!(tau_p >= 1, "tau_p must be positive");
    let nk = clusters.num_ues();
    let mut order: Vec<usize> = (0..nk).collect();
    order.sort_by(|&a, &b| lsfc.max_over_rus(b).total_cmp(&lsfc.max_over_rus(a)).then(a.cmp(&b)));

    let mut pilot: Vec<Option<usize>> = vec![None; nk];
    let mut cost = vec![0.0f64; tau_p];
    let mut usage = vec![0usize; tau_p];
    for &k in &order {
        cost.iter_mut().for_each(|c| *c = 0.0);
        for &l in clusters.serving(k) {
            let bk = bases.get(l, k);
            for &i in clusters.served(l) {
                if let Some(t) = pilot[i] {
                    cost[t] = cost[t].max(bk.normalized_overlap(bases.get(l, i)));
                }
            }
        }
        let mut best = 0;
        for t in 1..tau_p {
            if (cost[t], usage[t]) < (cost[best], usage[best]) {
                best = t;
            }
        }
        usage[best] += 1;
        pilot[k] = Some(best);
    }
    PilotAssignment { pilot_index: pilot.into_iter().map(|p| p.unwrap_or(0)).collect(), dimension: tau_p }
}

/// Estimates on the association edges, zero elsewhere.
pub type ChannelEstimateSet = PairVectors;

/// Subspace-projection estimates.
///
/// RU `l` observes, per pilot `t`, the sum of the channels of every UE on `t`
/// plus noise of variance `1/(tau_p SNR)` per entry. The estimate of UE `k` is
/// the projection of that observation onto the subspace of `(l, k)`; the
/// noise draw of `(l, t)` is shared by all co-pilot UEs.
pub fn estimate_channels(
    real: &ChannelRealization,
    pilots: &PilotAssignment,
    clusters: &ClusterGraph,
    bases: &SubspaceSet,
    snr: &SnrCalibration,
    seed: u64,
    drop: u64,
    r: u64,
) -> ChannelEstimateSet {
    let m = real.antennas();
    let noise_std = (1.0 / (pilots.dimension as f64 * snr.snr)).sqrt();
    estimate_channels_with(real, pilots, clusters, bases, |l, t| {
        let mut rng = stream(seed, Stream::PilotNoise, &[drop, r, l as u64, t as u64]);
        noise_vector(&mut rng, m, noise_std)
    })
}

fn noise_vector<R: Rng>(rng: &mut R, m: usize, std: f64) -> Vec<Complex64> {
    (0..m).map(|_| complex_normal(rng) * std).collect()
}

/// As [`estimate_channels`] with caller-supplied pilot noise per `(l, t)`.
pub fn estimate_channels_with(
    real: &ChannelRealization,
    pilots: &PilotAssignment,
    clusters: &ClusterGraph,
    bases: &SubspaceSet,
    mut noise: impl FnMut(usize, usize) -> Vec<Complex64>,
) -> ChannelEstimateSet {
    let (nl, nk, m) = (clusters.num_rus(), clusters.num_ues(), real.antennas());
    let mut est = PairVectors::zeros(nl, nk, m);
    let mut received: Vec<Option<Vec<Complex64>>> = vec![None; pilots.dimension];
    for l in 0..nl {
        received.iter_mut().for_each(|y| *y = None);
        for &k in clusters.served(l) {
            let t = pilots.pilot_index[k];
            let y = received[t].get_or_insert_with(|| {
                let mut y = noise(l, t);
                for i in pilots.users_of(t) {
                    for (y, h) in y.iter_mut().zip(real.get(l, i)) {
                        *y += h;
                    }
                }
                y
            });
            bases.get(l, k).project(y, est.get_mut(l, k));
        }
    }
    est
}
