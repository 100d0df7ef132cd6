use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cellfree::experiment::{
    point_problem, run_phy_sweep, run_sweep, write_outputs, ExperimentConfig, SweepOutput, RESULTS_FILE,
};
use cellfree::fronthaul::default_topology;
use cellfree::geometry::place_rus_grid;
use cellfree::Error;
use cellfree_milp::{read_lp, solve, write_lp, write_simple_solution, BranchOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "cellfree", version, about = "Cell-free massive MIMO sweeps with fronthaul-aware DU placement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep over user counts and distortion levels.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory for results.csv and metadata.json.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Also write link_loads.csv.
        #[arg(long)]
        link_loads: bool,
        /// Skip the placement MILPs; fronthaul columns are left empty.
        #[arg(long)]
        phy_only: bool,
    },
    /// Print a configuration file.
    DefaultConfig {
        #[arg(long, value_enum, default_value_t = Preset::Paper)]
        preset: Preset,
    },
    /// Print the default fronthaul topology for the configured network.
    DefaultTopology {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write the placement MILP of one sweep point as an LP file.
    ExportLp {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        drop: Option<u64>,
        /// Distortion ratio; the first configured one when absent.
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an LP file with the built-in branch-and-bound and write a
    /// `name value` solution file. Usable as an external solver command.
    SolveLp {
        lp: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        node_limit: usize,
        #[arg(long)]
        time_limit: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Paper,
    Desk,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration; starts from the preset when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Preset::Desk)]
    preset: Preset,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated user counts.
    #[arg(long, value_delimiter = ',')]
    num_ues: Option<Vec<usize>>,
    /// Comma-separated distortion ratios.
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    drops: Option<usize>,
    /// External solver command with `{lp}` and `{sol}` placeholders.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    node_limit: Option<usize>,
    /// Solver time limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    topology: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> cellfree::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => preset(self.preset),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(k) = &self.num_ues {
            cfg.num_ues = k.clone();
        }
        if let Some(r) = &self.ratios {
            cfg.distortion_ratios = r.clone();
        }
        if let Some(r) = self.realizations {
            cfg.realizations = r;
        }
        if let Some(d) = self.drops {
            cfg.drops = d;
        }
        if let Some(s) = &self.solver {
            cfg.solver.external_command = Some(s.clone());
        }
        if let Some(n) = self.node_limit {
            cfg.solver.node_limit = n;
        }
        if let Some(t) = self.time_limit {
            cfg.solver.time_limit = Some(t);
        }
        if let Some(t) = &self.topology {
            cfg.fronthaul.topology = Some(t.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn preset(p: Preset) -> ExperimentConfig {
    match p {
        Preset::Paper => ExperimentConfig::default(),
        Preset::Desk => ExperimentConfig::desk(),
    }
}

enum Failure {
    Config(String),
    Runtime(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Toml(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, out, link_loads, phy_only } => {
            let mut cfg = config.resolve()?;
            cfg.link_loads |= link_loads;
            let start = Instant::now();
            let output = if phy_only {
                SweepOutput { rows: run_phy_sweep(&cfg)?, ..SweepOutput::default() }
            } else {
                run_sweep(&cfg, &out.join("solver"))?
            };
            write_outputs(&out, &cfg, &output, start.elapsed().as_secs_f64())?;
            eprintln!("wrote {} rows to {}", output.rows.len(), out.join(RESULTS_FILE).display());
            if !phy_only && output.all_solves_failed() {
                return Err(Failure::Solver("no fronthaul MILP produced a solution".into()));
            }
        }
        Command::DefaultConfig { preset: p } => print!("{}", preset(p).to_toml_string()),
        Command::DefaultTopology { config } => {
            let cfg = config.resolve()?;
            let area = cfg.phy.area()?;
            let rus = place_rus_grid(cfg.phy.num_rus, cfg.phy.grid_rows, cfg.phy.grid_cols, &area)?;
            let g = default_topology(&rus, cfg.fronthaul.routers, cfg.fronthaul.dus, &area)?;
            print!("{}", g.to_toml_string());
        }
        Command::ExportLp { config, drop, ratio, out } => {
            let cfg = config.resolve()?;
            let ratio = ratio.unwrap_or(cfg.distortion_ratios[0]);
            let problem = point_problem(&cfg, drop.unwrap_or(0), cfg.num_ues[0], ratio)?;
            write_file(&out, &write_lp(&problem.model).map_err(Error::from)?)?;
        }
        Command::SolveLp { lp, solution, node_limit, time_limit } => {
            let text = std::fs::read_to_string(&lp).map_err(|e| Failure::Runtime(format!("{}: {e}", lp.display())))?;
            let model = read_lp(&text).map_err(|e| Failure::Config(format!("{}: {e}", lp.display())))?;
            let opts = BranchOptions {
                node_limit: Some(node_limit),
                time_limit: time_limit.map(Duration::from_secs_f64),
                ..BranchOptions::default()
            };
            let sol = solve(&model, &opts, &[]);
            write_file(&solution, &write_simple_solution(&model, sol.status, sol.objective, &sol.values))?;
            eprintln!("{}: {} objective {}", lp.display(), sol.status, sol.objective);
        }
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}
