use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gittins::harness::{nonzero_cells, oracle_csv, run_experiment, write_grid_search, ExperimentConfig};

#[derive(Parser)]
#[command(name = "gittins", version, about = "Exact and learned Gittins indices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the exact index table as CSV.
    Oracle(Common),
    /// Train a learner on a bandit and write per-seed CSVs.
    Train(Common),
    /// Sweep a learning-rate grid and write convergence_map.csv.
    Gridsearch(Common),
    /// Learn scheduling indices on job batches and write per-seed CSVs.
    Schedule(Common),
}

#[derive(Args)]
struct Common {
    /// Config file of `section.key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// A seed, a list `0,3,5` or a range `0..10`.
    #[arg(long)]
    seed: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// qgi, restart, qwi or dgn.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    episodes: Option<u64>,
    /// Record every n-th step (or episode).
    #[arg(long)]
    cadence: Option<u64>,
}

impl Common {
    fn load(&self, extra: &[(&'static str, String)]) -> gittins::Result<ExperimentConfig> {
        let mut o: Vec<(&str, String)> = extra.to_vec();
        if let Some(s) = &self.seed {
            o.push(("run.seeds", s.clone()));
        }
        if let Some(p) = &self.out {
            o.push(("run.out", p.display().to_string()));
        }
        if let Some(a) = &self.algo {
            o.push(("run.algo", a.clone()));
        }
        if let Some(n) = self.steps {
            o.push(("run.steps", n.to_string()));
        }
        if let Some(n) = self.episodes {
            o.push(("run.episodes", n.to_string()));
        }
        if let Some(n) = self.cadence {
            o.push(("run.cadence", n.to_string()));
        }
        ExperimentConfig::load(self.config.as_deref(), &o)
    }
}

fn run(cli: Cli) -> gittins::Result<()> {
    match cli.command {
        Command::Oracle(c) => {
            let cfg = c.load(&[])?;
            let csv = oracle_csv(&cfg)?;
            if c.out.is_some() {
                std::fs::create_dir_all(&cfg.out)?;
                std::fs::write(cfg.out.join("oracle.csv"), csv)?;
            } else {
                print!("{csv}");
            }
        }
        Command::Train(c) => {
            let cfg = c.load(&[])?;
            if cfg.env.is_scheduling() {
                return Err(gittins::Error::InvalidConfig("use `schedule` for scheduling configs".into()));
            }
            for p in run_experiment(&cfg)? {
                eprintln!("wrote {}", p.display());
            }
        }
        Command::Gridsearch(c) => {
            let cfg = c.load(&[])?;
            let cells = write_grid_search(&cfg, &cfg.out)?;
            for &d in &cfg.grid.deltas {
                eprintln!("delta {d}: {} of {} cells converged at least once", nonzero_cells(&cells, d), cells.len() / cfg.grid.deltas.len());
            }
            eprintln!("wrote {}", cfg.out.join("convergence_map.csv").display());
        }
        Command::Schedule(c) => {
            let mut cfg = c.load(&[])?;
            if !cfg.env.is_scheduling() {
                cfg = c.load(&[("env.kind", "scheduling".into())])?;
            }
            for p in run_experiment(&cfg)? {
                eprintln!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
