//! Per-drop physical-layer pipeline.
//!
//! A drop fixes the UE positions, LSFCs, clusters and pilots. Realizations of
//! the small-scale fading are evaluated in parallel; each one is regenerated
//! from its own seeds, so the first pass (long-term observation powers) and
//! the second pass (rates at every distortion level) see identical channels.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_realization, SubspaceSet};
use crate::clustering::{form_clusters, ClusterGraph};
use crate::downlink::dl_sinr_projected;
use crate::error::{Error, Result};
use crate::geometry::{place_rus_grid, place_ues_uniform, NetworkArea, NetworkLayout};
use crate::pathloss::{calibrate_snr, compute_lsfc, LsfcMatrix, PathlossConfig, SnrCalibration};
use crate::pilots::{assign_pilots, estimate_channels, PilotAssignment};
use crate::rng::{stream, Stream};
use crate::uplink::{
    actual_ul_sinr, build_quantization_plan, compute_combiner_weights, compute_lmmse_receivers, EdgeProjections,
    ObservationStats, QuantizationPlan, RateReport,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhyConfig {
    pub width: f64,
    pub height: f64,
    pub torus: bool,
    pub num_rus: usize,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub antennas: usize,
    /// Angular spread of the one-ring model, radians.
    pub angular_spread: f64,
    pub tau_p: usize,
    pub c_max: usize,
    pub eta: f64,
    pub pathloss: PathlossConfig,
}

impl Default for PhyConfig {
    fn default() -> Self {
        PhyConfig {
            width: 200.0,
            height: 200.0,
            torus: true,
            num_rus: 20,
            grid_rows: 4,
            grid_cols: 5,
            antennas: 10,
            angular_spread: std::f64::consts::PI / 8.0,
            tau_p: 20,
            c_max: 7,
            eta: 1.0,
            pathloss: PathlossConfig::default(),
        }
    }
}

impl PhyConfig {
    pub fn area(&self) -> Result<NetworkArea> {
        NetworkArea::new(self.width, self.height, self.torus)
    }

    pub fn validate(&self) -> Result<()> {
        self.area()?;
        self.pathloss.validate()?;
        if self.num_rus == 0 || self.antennas == 0 || self.tau_p == 0 || self.c_max == 0 {
            return Err(Error::Config("RU, antenna, pilot and cluster counts must be positive".into()));
        }
        if self.grid_rows * self.grid_cols != self.num_rus {
            return Err(Error::Config(format!(
                "grid {}x{} does not hold {} RUs",
                self.grid_rows, self.grid_cols, self.num_rus
            )));
        }
        if !(self.angular_spread > 0.0 && self.angular_spread < 2.0 * std::f64::consts::PI) {
            return Err(Error::Config("angular spread must lie in (0, 2 pi)".into()));
        }
        if !(self.eta > 0.0) {
            return Err(Error::Config("eta must be positive".into()));
        }
        Ok(())
    }
}

/// Large-scale state of one drop.
#[derive(Clone, Debug)]
pub struct Drop {
    pub index: u64,
    pub seed: u64,
    pub layout: NetworkLayout,
    pub lsfc: LsfcMatrix,
    pub bases: SubspaceSet,
    pub clusters: ClusterGraph,
    pub pilots: PilotAssignment,
    pub calibration: SnrCalibration,
}

/// Per-realization state needed by every distortion level.
pub struct Realization {
    pub projections: EdgeProjections,
}

/// Rates and pruning at one distortion level.
#[derive(Clone, Debug)]
pub struct PhyOutcome {
    pub distortion: f64,
    pub plan: QuantizationPlan,
    pub pruned: ClusterGraph,
    pub ul: RateReport,
    pub dl: RateReport,
}

pub fn setup_drop(cfg: &PhyConfig, num_ues: usize, seed: u64, drop: u64) -> Result<Drop> {
    cfg.validate()?;
    if num_ues == 0 {
        return Err(Error::Config("at least one UE is required".into()));
    }
    let area = cfg.area()?;
    let rus = place_rus_grid(cfg.num_rus, cfg.grid_rows, cfg.grid_cols, &area)?;
    let mut rng = stream(seed, Stream::UePlacement, &[drop, num_ues as u64]);
    let ues = place_ues_uniform(num_ues, &area, &mut rng);
    let layout = NetworkLayout { area, rus, ues, antennas: cfg.antennas };
    let lsfc = compute_lsfc(&layout, &cfg.pathloss, seed, drop);
    let calibration = calibrate_snr(&area, cfg.num_rus, cfg.antennas, &cfg.pathloss);
    let bases = SubspaceSet::build(&layout.rus, &layout.ues, cfg.antennas, cfg.angular_spread, &area);
    let clusters = form_clusters(&lsfc, &calibration, cfg.eta, cfg.antennas, cfg.c_max);
    let pilots = assign_pilots(&clusters, &bases, cfg.tau_p, &lsfc);
    Ok(Drop { index: drop, seed, layout, lsfc, bases, clusters, pilots, calibration })
}

impl Drop {
    pub fn realize(&self, r: u64) -> Realization {
        let m = self.layout.antennas;
        let h = draw_realization(&self.lsfc, &self.bases, m, self.seed, self.index, r);
        let est = estimate_channels(
            &h,
            &self.pilots,
            &self.clusters,
            &self.bases,
            &self.calibration,
            self.seed,
            self.index,
            r,
        );
        let bank = compute_lmmse_receivers(&est, &self.clusters, &self.lsfc, &self.calibration);
        let projections = EdgeProjections::compute(&h, &est, &bank, &self.clusters, &self.calibration);
        Realization { projections }
    }

    /// Long-term observation power of every association edge.
    pub fn observation_stats(&self, realizations: usize) -> ObservationStats {
        let snr = self.calibration.snr;
        let samples: Vec<Vec<f64>> = (0..realizations as u64)
            .into_par_iter()
            .map(|r| {
                let p = self.realize(r).projections;
                (0..self.clusters.num_edges()).map(|e| p.observation_power(e, snr)).collect()
            })
            .collect();
        ObservationStats::from_samples(samples.iter().map(Vec::as_slice))
    }

    /// UL and DL rates at every distortion level in `distortions`.
    pub fn evaluate(&self, realizations: usize, stats: &ObservationStats, distortions: &[f64]) -> Vec<PhyOutcome> {
        let plans: Vec<(QuantizationPlan, ClusterGraph)> =
            distortions.iter().map(|&d| build_quantization_plan(stats, d, &self.clusters)).collect();
        let per_real: Vec<Vec<(Vec<f64>, Vec<f64>)>> = (0..realizations as u64)
            .into_par_iter()
            .map(|r| {
                let p = self.realize(r).projections;
                plans
                    .iter()
                    .map(|(plan, _)| {
                        let w = compute_combiner_weights(&p, plan, &self.clusters);
                        let ul = actual_ul_sinr(&p, &w, plan, &self.clusters, &self.calibration);
                        let dl = dl_sinr_projected(&p, &w, plan, &self.clusters, &self.calibration);
                        (ul, dl)
                    })
                    .collect()
            })
            .collect();
        plans
            .into_iter()
            .enumerate()
            .map(|(i, (plan, pruned))| PhyOutcome {
                distortion: plan.distortion,
                ul: RateReport::from_sinr(per_real.iter().map(|v| v[i].0.as_slice())),
                dl: RateReport::from_sinr(per_real.iter().map(|v| v[i].1.as_slice())),
                plan,
                pruned,
            })
            .collect()
    }
}
