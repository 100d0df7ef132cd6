//! Sweeps over user load and distortion level: PHY rates, fronthaul demands,
//! placement MILPs and the CSV/JSON outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fronthaul::{
    build_milp, default_topology, half_load_limit, link_load_report, solve_problem, validate_solution, FronthaulGraph,
    FronthaulProblem, LoadWeights, SolverConfig, TrafficDemand,
};
use crate::simulation::{setup_drop, Drop, PhyConfig, PhyOutcome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FronthaulConfig {
    pub routers: usize,
    pub dus: usize,
    /// Topology file; the default topology is generated when absent.
    pub topology: Option<PathBuf>,
    /// Cluster processors per DU; `ceil(K/2)` when absent.
    pub du_limit: Option<usize>,
    pub weights: LoadWeights,
}

impl Default for FronthaulConfig {
    fn default() -> Self {
        FronthaulConfig { routers: 5, dus: 4, topology: None, du_limit: None, weights: LoadWeights::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub drops: usize,
    /// Small-scale fading realizations per drop.
    pub realizations: usize,
    pub num_ues: Vec<usize>,
    /// Distortion levels as multiples of the smallest observation power of
    /// the drop.
    pub distortion_ratios: Vec<f64>,
    /// Signal dimensions per coherence block.
    pub coherence_block: usize,
    pub gamma_dl: f64,
    /// Also write per-link loads of every solved MILP.
    pub link_loads: bool,
    pub phy: PhyConfig,
    pub fronthaul: FronthaulConfig,
    pub solver: SolverConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 1,
            drops: 1,
            realizations: 100,
            num_ues: vec![75, 100, 125, 150, 175, 200],
            distortion_ratios: vec![0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
            coherence_block: 200,
            gamma_dl: 0.8,
            link_loads: false,
            phy: PhyConfig::default(),
            fronthaul: FronthaulConfig::default(),
            solver: SolverConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Reduced preset for quick runs: 20 realizations, one drop.
    pub fn desk() -> Self {
        ExperimentConfig { realizations: 20, drops: 1, ..ExperimentConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.phy.validate()?;
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.gamma_dl > 0.0 && self.gamma_dl < 1.0) {
            return bad("gamma_dl must lie in (0, 1)");
        }
        if self.phy.tau_p >= self.coherence_block {
            return bad("tau_p must be smaller than the coherence block");
        }
        if self.drops == 0 || self.realizations == 0 {
            return bad("drops and realizations must be positive");
        }
        if self.num_ues.is_empty() || self.num_ues.contains(&0) {
            return bad("num_ues must list positive user counts");
        }
        if self.distortion_ratios.is_empty() || self.distortion_ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad("distortion_ratios must list positive finite values");
        }
        if self.fronthaul.routers == 0 || self.fronthaul.dus == 0 {
            return bad("router and DU counts must be positive");
        }
        if self.fronthaul.du_limit == Some(0) {
            return bad("du_limit must be positive");
        }
        if self.solver.node_limit == 0 {
            return bad("solver node_limit must be positive");
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        ExperimentConfig::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml_string().as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Fraction of the coherence block left for data.
    pub fn data_fraction(&self) -> f64 {
        1.0 - self.phy.tau_p as f64 / self.coherence_block as f64
    }
}

/// Linear-interpolation percentile over the sorted values with inclusive
/// endpoints: rank `p (n - 1)`, so `p = 0` is the minimum and `p = 1` the
/// maximum.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("percentile {p} outside [0, 1]")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = p * (v.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Ok(v[lo] + (rank - lo as f64) * (v[hi] - v[lo]))
}

/// One CSV row: a drop, a user count and a distortion level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config_hash: String,
    pub seed: u64,
    pub drop: u64,
    pub num_ues: usize,
    pub d_ratio: f64,
    pub distortion: f64,
    pub se_ul: f64,
    pub se_dl: f64,
    pub se_tot: f64,
    pub fh_objective: f64,
    pub fh_bound: f64,
    pub c_l: f64,
    pub c_q: f64,
    pub c_d: f64,
    pub mean_cluster_size: f64,
    pub p5_se_dl: f64,
    pub p5_se_ul: f64,
    pub unserved: usize,
    pub pruned_edges: usize,
    pub solver_status: String,
    pub solver_nodes: usize,
    /// Whether the solution passed the independent feasibility check.
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkLoadRow {
    pub drop: u64,
    pub num_ues: usize,
    pub d_ratio: f64,
    pub link: String,
    pub class: String,
    pub load: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskTiming {
    pub drop: u64,
    pub num_ues: usize,
    pub phy_seconds: f64,
    pub milp_seconds: f64,
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub link_loads: Vec<LinkLoadRow>,
    pub timings: Vec<TaskTiming>,
}

impl SweepOutput {
    /// True when no row has a usable MILP solution.
    pub fn all_solves_failed(&self) -> bool {
        self.rows.iter().all(|r| !r.fh_objective.is_finite())
    }
}

struct TaskOutput {
    rows: Vec<SweepRow>,
    link_loads: Vec<LinkLoadRow>,
    timing: TaskTiming,
}

/// Runs every (drop, K) pair in parallel; within a pair the distortion
/// levels are solved in increasing order, each MILP seeded with the previous
/// placement. External solvers work in subdirectories of `workdir`.
pub fn run_sweep(cfg: &ExperimentConfig, workdir: &Path) -> Result<SweepOutput> {
    cfg.validate()?;
    let topology = load_topology(cfg)?;
    let hash = cfg.hash();
    let tasks: Vec<(u64, usize)> =
        (0..cfg.drops as u64).flat_map(|d| cfg.num_ues.iter().map(move |&k| (d, k))).collect();
    let done: Vec<Result<TaskOutput>> =
        tasks.into_par_iter().map(|(d, k)| run_task(cfg, &hash, d, k, topology.as_ref(), workdir)).collect();
    let mut out = SweepOutput::default();
    for t in done {
        let t = t?;
        out.rows.extend(t.rows);
        out.link_loads.extend(t.link_loads);
        out.timings.push(t.timing);
    }
    Ok(out)
}

struct Prepared {
    drop: Drop,
    distortions: Vec<f64>,
    outcomes: Vec<PhyOutcome>,
    graph: FronthaulGraph,
    limits: Vec<f64>,
}

fn load_topology(cfg: &ExperimentConfig) -> Result<Option<FronthaulGraph>> {
    let Some(path) = &cfg.fronthaul.topology else { return Ok(None) };
    let g = FronthaulGraph::load(path)?;
    if g.num_rus != cfg.phy.num_rus {
        return Err(Error::Config(format!("topology has {} RUs but the network has {}", g.num_rus, cfg.phy.num_rus)));
    }
    Ok(Some(g))
}

/// Drop setup and rates at every configured distortion ratio.
fn evaluate_drop(cfg: &ExperimentConfig, drop_index: u64, k: usize) -> Result<(Drop, Vec<f64>, Vec<PhyOutcome>)> {
    let drop = setup_drop(&cfg.phy, k, cfg.seed, drop_index)?;
    let stats = drop.observation_stats(cfg.realizations);
    let sigma2_min = stats.min().ok_or(Error::EmptySample)?;
    let distortions: Vec<f64> = cfg.distortion_ratios.iter().map(|r| r * sigma2_min).collect();
    let outcomes = drop.evaluate(cfg.realizations, &stats, &distortions);
    Ok((drop, distortions, outcomes))
}

/// PHY evaluation of one drop at every configured distortion level, plus the
/// fronthaul graph and DU limits it is routed over.
fn prepare(cfg: &ExperimentConfig, drop_index: u64, k: usize, topology: Option<&FronthaulGraph>) -> Result<Prepared> {
    let (drop, distortions, outcomes) = evaluate_drop(cfg, drop_index, k)?;
    let graph = match topology {
        Some(g) => g.clone(),
        None => default_topology(&drop.layout.rus, cfg.fronthaul.routers, cfg.fronthaul.dus, &drop.layout.area)?,
    };
    let limits = match cfg.fronthaul.du_limit {
        Some(z) => vec![z as f64; graph.num_dus],
        None => half_load_limit(k, graph.num_dus),
    };
    Ok(Prepared { drop, distortions, outcomes, graph, limits })
}

/// The placement MILP of a single sweep point.
pub fn point_problem(cfg: &ExperimentConfig, drop_index: u64, k: usize, ratio: f64) -> Result<FronthaulProblem> {
    let cfg = ExperimentConfig { distortion_ratios: vec![ratio], num_ues: vec![k], ..cfg.clone() };
    cfg.validate()?;
    let topology = load_topology(&cfg)?;
    let p = prepare(&cfg, drop_index, k, topology.as_ref())?;
    let o = &p.outcomes[0];
    let demand = TrafficDemand::from_plan(&o.plan, &p.drop.clusters, &o.dl.per_user_rate, cfg.gamma_dl);
    build_milp(&p.graph, &demand, &p.limits, cfg.fronthaul.weights)
}

/// Sweep row with the PHY columns filled in and the fronthaul columns empty.
fn phy_row(cfg: &ExperimentConfig, hash: &str, drop_index: u64, ratio: f64, o: &PhyOutcome) -> Result<SweepRow> {
    let pre = cfg.data_fraction();
    let ul_se: Vec<f64> = o.ul.per_user_rate.iter().map(|r| (1.0 - cfg.gamma_dl) * pre * r).collect();
    let dl_se: Vec<f64> = o.dl.per_user_rate.iter().map(|r| cfg.gamma_dl * pre * r).collect();
    let se_ul: f64 = ul_se.iter().sum();
    let se_dl: f64 = dl_se.iter().sum();
    Ok(SweepRow {
        config_hash: hash.to_string(),
        seed: cfg.seed,
        drop: drop_index,
        num_ues: o.pruned.num_ues(),
        d_ratio: ratio,
        distortion: o.distortion,
        se_ul,
        se_dl,
        se_tot: se_ul + se_dl,
        fh_objective: f64::NAN,
        fh_bound: f64::NAN,
        c_l: f64::NAN,
        c_q: f64::NAN,
        c_d: f64::NAN,
        mean_cluster_size: o.pruned.mean_cluster_size(),
        p5_se_dl: percentile(&dl_se, 0.05)?,
        p5_se_ul: percentile(&ul_se, 0.05)?,
        unserved: o.pruned.unserved_count(),
        pruned_edges: o.plan.pruned_count(),
        solver_status: String::new(),
        solver_nodes: 0,
        valid: false,
    })
}

/// The PHY half of [`run_sweep`]: every row has `solver_status` "skipped".
pub fn run_phy_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let hash = cfg.hash();
    let tasks: Vec<(u64, usize)> =
        (0..cfg.drops as u64).flat_map(|d| cfg.num_ues.iter().map(move |&k| (d, k))).collect();
    let done: Vec<Result<Vec<SweepRow>>> = tasks
        .into_par_iter()
        .map(|(d, k)| {
            let (_, _, outcomes) = evaluate_drop(cfg, d, k)?;
            cfg.distortion_ratios
                .iter()
                .zip(&outcomes)
                .map(|(&ratio, o)| {
                    let mut row = phy_row(cfg, &hash, d, ratio, o)?;
                    row.solver_status = "skipped".into();
                    Ok(row)
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in done {
        rows.extend(r?);
    }
    Ok(rows)
}

fn run_task(
    cfg: &ExperimentConfig,
    hash: &str,
    drop_index: u64,
    k: usize,
    topology: Option<&FronthaulGraph>,
    workdir: &Path,
) -> Result<TaskOutput> {
    let start = Instant::now();
    let Prepared { drop, distortions, outcomes, graph, limits } = prepare(cfg, drop_index, k, topology)?;
    let phy_seconds = start.elapsed().as_secs_f64();

    let dir = workdir.join(format!("drop{drop_index}_k{k}"));

    let mut order: Vec<usize> = (0..outcomes.len()).collect();
    order.sort_by(|&a, &b| distortions[a].total_cmp(&distortions[b]).then(a.cmp(&b)));
    let mut rows: Vec<Option<SweepRow>> = vec![None; outcomes.len()];
    let mut link_loads: Vec<Vec<LinkLoadRow>> = vec![Vec::new(); outcomes.len()];
    let mut previous: Option<Vec<Option<usize>>> = None;
    let milp_start = Instant::now();
    for i in order {
        let o = &outcomes[i];
        let ratio = cfg.distortion_ratios[i];
        let mut row = phy_row(cfg, hash, drop_index, ratio, o)?;
        log::info!(
            "drop {drop_index} K={k} D/sigma2_min={ratio}: {} of {} edges pruned, {} users unserved",
            row.pruned_edges,
            drop.clusters.num_edges(),
            row.unserved
        );
        let demand = TrafficDemand::from_plan(&o.plan, &drop.clusters, &o.dl.per_user_rate, cfg.gamma_dl);
        match build_milp(&graph, &demand, &limits, cfg.fronthaul.weights) {
            Err(e) => {
                log::warn!("drop {drop_index} K={k} ratio {ratio}: {e}");
                row.solver_status = "build-error".into();
            }
            Ok(problem) => match solve_problem(&problem, &cfg.solver, previous.as_deref(), &dir) {
                Err(e) => {
                    log::warn!("drop {drop_index} K={k} ratio {ratio}: {e}");
                    row.solver_status = "solver-error".into();
                }
                Ok(sol) => {
                    row.solver_status = sol.status.to_string();
                    row.solver_nodes = sol.nodes;
                    row.fh_bound = sol.bound;
                    if sol.status.has_solution() {
                        let report = link_load_report(&problem, &sol.values);
                        row.fh_objective = sol.objective;
                        row.c_l = report.c_l;
                        row.c_q = report.c_q;
                        row.c_d = report.c_d;
                        let check = validate_solution(&problem, &sol.values, sol.objective, 1e-6);
                        if !check.is_valid() {
                            log::warn!("drop {drop_index} K={k} ratio {ratio}: solution fails validation: {check:?}");
                        }
                        row.valid = check.is_valid();
                        if cfg.link_loads {
                            link_loads[i] = report
                                .links
                                .into_iter()
                                .map(|l| LinkLoadRow {
                                    drop: drop_index,
                                    num_ues: k,
                                    d_ratio: ratio,
                                    link: l.link,
                                    class: l.class.to_string(),
                                    load: l.load,
                                })
                                .collect();
                        }
                        previous = Some(problem.placement(&sol.values));
                    } else {
                        log::warn!("drop {drop_index} K={k} ratio {ratio}: solver status {}", sol.status);
                    }
                }
            },
        }
        rows[i] = Some(row);
    }
    Ok(TaskOutput {
        rows: rows.into_iter().map(|r| r.expect("every level evaluated")).collect(),
        link_loads: link_loads.into_iter().flatten().collect(),
        timing: TaskTiming {
            drop: drop_index,
            num_ues: k,
            phy_seconds,
            milp_seconds: milp_start.elapsed().as_secs_f64(),
        },
    })
}

#[derive(Serialize)]
struct Metadata<'a> {
    version: &'static str,
    config_hash: String,
    config: &'a ExperimentConfig,
    threads: usize,
    total_seconds: f64,
    timings: &'a [TaskTiming],
    rows: usize,
    failed_solves: usize,
}

pub const RESULTS_FILE: &str = "results.csv";
pub const LINK_LOADS_FILE: &str = "link_loads.csv";
pub const METADATA_FILE: &str = "metadata.json";

/// Writes `results.csv`, `metadata.json` and, when present, `link_loads.csv`.
/// Wall-clock times go to the metadata only so the CSV stays reproducible.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, out: &SweepOutput, total_seconds: f64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(RESULTS_FILE))?;
    for r in &out.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    if !out.link_loads.is_empty() {
        let mut w = csv::Writer::from_path(dir.join(LINK_LOADS_FILE))?;
        for r in &out.link_loads {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    let meta = Metadata {
        version: env!("CARGO_PKG_VERSION"),
        config_hash: cfg.hash(),
        config: cfg,
        threads: rayon::current_num_threads(),
        total_seconds,
        timings: &out.timings,
        rows: out.rows.len(),
        failed_solves: out.rows.iter().filter(|r| !r.fh_objective.is_finite()).count(),
    };
    fs::write(dir.join(METADATA_FILE), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_examples() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!((percentile(&v, 0.05).unwrap() - 5.95).abs() < 1e-12);
        assert_eq!(percentile(&v, 1.0).unwrap(), 100.0);
        assert_eq!(percentile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(percentile(&[3.5], 0.3).unwrap(), 3.5);
        assert!(percentile(&[], 0.5).is_err());
    }

    #[test]
    fn prefactor_arithmetic() {
        let cfg = ExperimentConfig::default();
        let se = (1.0 - cfg.gamma_dl) * cfg.data_fraction() * 10.0;
        assert!((se - 1.8).abs() < 1e-12);
    }

    #[test]
    fn config_round_trip_and_hash() {
        let cfg = ExperimentConfig::desk();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 16);
        let other = ExperimentConfig { seed: 2, ..cfg.clone() };
        assert_ne!(other.hash(), cfg.hash());
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            ExperimentConfig { gamma_dl: 1.0, ..ExperimentConfig::desk() },
            ExperimentConfig { coherence_block: 20, ..ExperimentConfig::desk() },
            ExperimentConfig { num_ues: vec![], ..ExperimentConfig::desk() },
            ExperimentConfig { distortion_ratios: vec![0.0], ..ExperimentConfig::desk() },
            ExperimentConfig { drops: 0, ..ExperimentConfig::desk() },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
        assert!(ExperimentConfig::from_toml_str("unknown_key = 1").is_err());
    }
}
