//! Uplink: local LMMSE receivers, rate-distortion quantization, cluster
//! combining and the actual SINR.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::{inner, norm_sqr, ChannelRealization, PairVectors};
use crate::clustering::ClusterGraph;
use crate::pathloss::{LsfcMatrix, SnrCalibration};
use crate::pilots::ChannelEstimateSet;

#[derive(Clone, Debug)]
pub struct ReceiverBank {
    /// Unknown-interference-plus-noise level per RU.
    pub nu: Vec<f64>,
    /// Receivers on the association edges, zero elsewhere.
    pub v: PairVectors,
}

/// `v_lk = (nu_l I + SNR sum_{i in U_l} h^_li h^_li^H)^{-1} h^_lk`, one
/// Cholesky factorization per RU.
pub fn compute_lmmse_receivers(
    est: &ChannelEstimateSet,
    clusters: &ClusterGraph,
    lsfc: &LsfcMatrix,
    snr: &SnrCalibration,
) -> ReceiverBank {
    let (nl, nk, m) = (clusters.num_rus(), clusters.num_ues(), est.antennas());
    let mut nu = vec![0.0; nl];
    let mut v = PairVectors::zeros(nl, nk, m);
    for l in 0..nl {
        let outside: f64 = (0..nk).filter(|&i| !clusters.is_assoc(l, i)).map(|i| lsfc.get(l, i)).sum();
        nu[l] = 1.0 + snr.snr * outside;
        let served = clusters.served(l);
        if served.is_empty() {
            continue;
        }
        let mut a = DMatrix::<Complex64>::identity(m, m) * Complex64::from(nu[l]);
        for &i in served {
            let h = DVector::from_column_slice(est.get(l, i));
            a.gerc(Complex64::from(snr.snr), &h, &h, Complex64::from(1.0));
        }
        let chol = a.cholesky().expect("nu >= 1 keeps the receiver matrix positive definite");
        for &k in served {
            let x = chol.solve(&DVector::from_column_slice(est.get(l, k)));
            v.get_mut(l, k).copy_from_slice(x.as_slice());
        }
    }
    ReceiverBank { nu, v }
}

/// Scalar projections of one realization on the edges of a cluster graph.
///
/// Everything the cluster processors and the SINR expressions need is an
/// inner product of a receiver with a channel or an estimate, so these are
/// computed once per realization and reused across distortion levels.
#[derive(Clone, Debug)]
pub struct EdgeProjections {
    num_ues: usize,
    /// `||v_lk||^2`.
    pub v_norm2: Vec<f64>,
    /// `v_lk^H h^_lk`.
    pub v_hat_self: Vec<Complex64>,
    /// `SNR sum_{i in U_l, i != k} |v_lk^H h^_li|^2`.
    pub hat_interference: Vec<f64>,
    /// `nu_l` of the edge's RU.
    pub nu: Vec<f64>,
    gains: Vec<Complex64>,
}

impl EdgeProjections {
    pub fn compute(
        real: &ChannelRealization,
        est: &ChannelEstimateSet,
        bank: &ReceiverBank,
        clusters: &ClusterGraph,
        snr: &SnrCalibration,
    ) -> Self {
        let nk = clusters.num_ues();
        let ne = clusters.num_edges();
        let mut out = EdgeProjections {
            num_ues: nk,
            v_norm2: Vec::with_capacity(ne),
            v_hat_self: Vec::with_capacity(ne),
            hat_interference: Vec::with_capacity(ne),
            nu: Vec::with_capacity(ne),
            gains: Vec::with_capacity(ne * nk),
        };
        for &(l, k) in clusters.edges() {
            let v = bank.v.get(l, k);
            out.v_norm2.push(norm_sqr(v));
            out.v_hat_self.push(inner(v, est.get(l, k)));
            let interf: f64 =
                clusters.served(l).iter().filter(|&&i| i != k).map(|&i| inner(v, est.get(l, i)).norm_sqr()).sum();
            out.hat_interference.push(snr.snr * interf);
            out.nu.push(bank.nu[l]);
            out.gains.extend((0..nk).map(|i| inner(v, real.get(l, i))));
        }
        out
    }

    /// `v_lk^H h_li` for all `i`, for edge `e`.
    #[inline]
    pub fn gains(&self, e: usize) -> &[Complex64] {
        &self.gains[e * self.num_ues..(e + 1) * self.num_ues]
    }

    /// Per-realization contribution to `sigma^2` of edge `e`:
    /// `SNR sum_i |v^H h_i|^2 + ||v||^2`.
    pub fn observation_power(&self, e: usize, snr: f64) -> f64 {
        snr * self.gains(e).iter().map(|g| g.norm_sqr()).sum::<f64>() + self.v_norm2[e]
    }
}

/// Long-term observation power per edge, averaged over realizations.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationStats {
    pub sigma2: Vec<f64>,
    pub sample_count: usize,
}

impl ObservationStats {
    /// Averages per-realization powers; samples are summed in the given order.
    pub fn from_samples<'a>(samples: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut sigma2: Vec<f64> = Vec::new();
        let mut n = 0;
        for s in samples {
            if n == 0 {
                sigma2 = s.to_vec();
            } else {
                assert_eq!(s.len(), sigma2.len(), "edge count mismatch");
                sigma2.iter_mut().zip(s).for_each(|(a, b)| *a += b);
            }
            n += 1;
        }
        assert!(n > 0, "at least one realization is required");
        sigma2.iter_mut().for_each(|a| *a /= n as f64);
        ObservationStats { sigma2, sample_count: n }
    }

    /// Smallest `sigma^2` over all edges.
    pub fn min(&self) -> Option<f64> {
        self.sigma2.iter().copied().reduce(f64::min)
    }
}

pub fn estimate_observation_stats(projections: &[EdgeProjections], snr: &SnrCalibration) -> ObservationStats {
    let samples: Vec<Vec<f64>> =
        projections.iter().map(|p| (0..p.v_norm2.len()).map(|e| p.observation_power(e, snr.snr)).collect()).collect();
    ObservationStats::from_samples(samples.iter().map(Vec::as_slice))
}

/// Rate-distortion quantizer of one observation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeQuantizer {
    pub bits: f64,
    pub alpha: f64,
    pub err_var: f64,
    pub pruned: bool,
}

/// Quantizer for observation power `sigma2` at distortion `d`. The edge is
/// dropped when `sigma2 <= d`.
pub fn quantize(sigma2: f64, d: f64) -> EdgeQuantizer {
    if sigma2 <= d {
        return EdgeQuantizer { bits: 0.0, alpha: 0.0, err_var: 0.0, pruned: true };
    }
    EdgeQuantizer {
        bits: (sigma2 / d).log2().max(0.0),
        alpha: (sigma2 - d) / sigma2,
        err_var: (1.0 - d / sigma2) * d,
        pruned: false,
    }
}

/// Quantizers for every edge of the unpruned graph at distortion `D`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizationPlan {
    pub distortion: f64,
    /// Indexed by edge id of the graph the plan was built on.
    pub edges: Vec<EdgeQuantizer>,
}

impl QuantizationPlan {
    /// Ideal plan: unit gain, no error, nothing pruned.
    pub fn lossless(num_edges: usize) -> Self {
        QuantizationPlan {
            distortion: 0.0,
            edges: vec![EdgeQuantizer { bits: f64::INFINITY, alpha: 1.0, err_var: 0.0, pruned: false }; num_edges],
        }
    }

    pub fn pruned_count(&self) -> usize {
        self.edges.iter().filter(|q| q.pruned).count()
    }
}

/// Plan at distortion `d` and the graph with the dropped edges removed.
pub fn build_quantization_plan(
    stats: &ObservationStats,
    d: f64,
    clusters: &ClusterGraph,
) -> (QuantizationPlan, ClusterGraph) {
    assert!(d > 0.0, "distortion must be positive");
    assert_eq!(stats.sigma2.len(), clusters.num_edges());
    let edges: Vec<EdgeQuantizer> = stats.sigma2.iter().map(|&s| quantize(s, d)).collect();
    let pruned = clusters.without(|l, k| edges[clusters.edge(l, k).unwrap()].pruned);
    (QuantizationPlan { distortion: d, edges }, pruned)
}

/// Per-edge combining weights, dense over `[l][k]` and zero off the support.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinerWeights {
    num_ues: usize,
    /// Weights under the plan's quantization, on the pruned graph.
    pub w: Vec<Complex64>,
    /// Weights at zero distortion, on the unpruned graph.
    pub w0: Vec<Complex64>,
}

impl CombinerWeights {
    #[inline]
    pub fn w(&self, l: usize, k: usize) -> Complex64 {
        self.w[l * self.num_ues + k]
    }

    #[inline]
    pub fn w0(&self, l: usize, k: usize) -> Complex64 {
        self.w0[l * self.num_ues + k]
    }
}

fn rayleigh_weight(p: &EdgeProjections, e: usize, q: &EdgeQuantizer) -> Complex64 {
    let a = p.v_hat_self[e] * q.alpha;
    let gamma = q.alpha * q.alpha * (p.v_norm2[e] * p.nu[e] + p.hat_interference[e]) + q.err_var;
    a / gamma
}

/// `w_k = Gamma_k^{-1} a_k` with `a_l = alpha v^H h^_k` and the diagonal
/// nominal noise `Gamma_ll = alpha^2 (||v||^2 nu_l + SNR sum_{i in U_l \ k}
/// |v^H h^_i|^2) + sigma^2_err`. `projections` and `plan` refer to the edge
/// ids of `clusters` (the unpruned graph).
pub fn compute_combiner_weights(
    projections: &EdgeProjections,
    plan: &QuantizationPlan,
    clusters: &ClusterGraph,
) -> CombinerWeights {
    let (nl, nk) = (clusters.num_rus(), clusters.num_ues());
    let mut w = vec![Complex64::default(); nl * nk];
    let mut w0 = vec![Complex64::default(); nl * nk];
    let ideal = EdgeQuantizer { bits: f64::INFINITY, alpha: 1.0, err_var: 0.0, pruned: false };
    for (e, &(l, k)) in clusters.edges().iter().enumerate() {
        w0[l * nk + k] = rayleigh_weight(projections, e, &ideal);
        if !plan.edges[e].pruned {
            w[l * nk + k] = rayleigh_weight(projections, e, &plan.edges[e]);
        }
    }
    CombinerWeights { num_ues: nk, w, w0 }
}

/// Actual per-user SINR given all channels. Unserved users get 0.
pub fn actual_ul_sinr(
    projections: &EdgeProjections,
    weights: &CombinerWeights,
    plan: &QuantizationPlan,
    clusters: &ClusterGraph,
    snr: &SnrCalibration,
) -> Vec<f64> {
    let nk = clusters.num_ues();
    let mut combined = vec![Complex64::default(); nk];
    (0..nk)
        .map(|k| {
            combined.iter_mut().for_each(|c| *c = Complex64::default());
            let mut distortion = 0.0;
            let mut any = false;
            for &l in clusters.serving(k) {
                let e = clusters.edge(l, k).unwrap();
                let q = &plan.edges[e];
                if q.pruned {
                    continue;
                }
                any = true;
                let w = weights.w(l, k);
                let c = w.conj() * q.alpha;
                for (acc, g) in combined.iter_mut().zip(projections.gains(e)) {
                    *acc += c * g;
                }
                distortion += w.norm_sqr() * (q.alpha * q.alpha * projections.v_norm2[e] + q.err_var);
            }
            if !any {
                return 0.0;
            }
            let signal = snr.snr * combined[k].norm_sqr();
            let interference: f64 =
                snr.snr * combined.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, g)| g.norm_sqr()).sum::<f64>();
            let den = distortion + interference;
            if den > 0.0 {
                signal / den
            } else {
                0.0
            }
        })
        .collect()
}

/// Optimistic ergodic rates: per-user mean of `log2(1 + SINR)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub per_user_rate: Vec<f64>,
    pub realization_count: usize,
}

impl RateReport {
    /// Rates from per-realization SINR vectors, summed in the given order.
    pub fn from_sinr<'a>(samples: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut acc: Vec<f64> = Vec::new();
        let mut n = 0;
        for s in samples {
            if acc.is_empty() {
                acc = vec![0.0; s.len()];
            }
            acc.iter_mut().zip(s).for_each(|(a, x)| *a += (1.0 + x).log2());
            n += 1;
        }
        assert!(n > 0, "at least one realization is required");
        acc.iter_mut().for_each(|a| *a /= n as f64);
        RateReport { per_user_rate: acc, realization_count: n }
    }

    pub fn sum_rate(&self) -> f64 {
        self.per_user_rate.iter().sum()
    }
}
