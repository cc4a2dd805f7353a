use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use cone_blowup_cli::config::{parse_config, RunConfig};
use cone_blowup_cli::pipeline::{run_pipeline, run_sweep, SNAPSHOTS};
use cone_blowup_cli::{exit_code, stages};

#[derive(Parser)]
#[command(name = "cone-blowup", version, about = "Construct and evolve concentrating blow-up profiles near the cone")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Base {
    /// Flat key=value run configuration; flags given on the command line win.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

impl Base {
    fn load(&self) -> Result<RunConfig> {
        match &self.config {
            Some(p) => Ok(parse_config(p)?),
            None => Ok(RunConfig::default()),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve for the ground state and fit its tail.
    GroundState {
        #[command(flatten)]
        base: Base,
        #[arg(long)]
        rho_max: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value = "q.csv")]
        out: PathBuf,
    },
    /// Tabulate the conjugated potential and sample Rayleigh quotients.
    Spectral {
        #[command(flatten)]
        base: Base,
        #[arg(long)]
        rayleigh_samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "potential.csv")]
        out: PathBuf,
    },
    /// Build the inner layers and tabulate the inner profile at time t.
    Inner {
        #[command(flatten)]
        base: Base,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value = "vin.csv")]
        out: PathBuf,
    },
    /// Solve the low self-similar orders and tabulate the profile at time t.
    SelfSimilar {
        #[command(flatten)]
        base: Base,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value = "wss.csv")]
        out: PathBuf,
    },
    /// Build the remote layers from the cutoff Cauchy data.
    Remote {
        #[command(flatten)]
        base: Base,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long, default_value = "gk.csv")]
        out: PathBuf,
    },
    /// Glue the regional profiles and optionally measure the remainder.
    Compose {
        #[command(flatten)]
        base: Base,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        remainder: bool,
        #[arg(long, default_value = "uN.csv")]
        out: PathBuf,
    },
    /// Evolve the composite data from t1 to t-end.
    Evolve {
        #[command(flatten)]
        base: Base,
        #[arg(long)]
        t1: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        cfl: Option<f64>,
        #[arg(long)]
        cells_per_core: Option<usize>,
        #[arg(long, default_value_t = SNAPSHOTS)]
        snapshots: usize,
        #[arg(long, default_value = "traj")]
        out: PathBuf,
    },
    /// Run every stage in order and write report.json.
    Pipeline {
        #[command(flatten)]
        base: Base,
        /// Output directory (overrides `out` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run independent pipelines over the product of parameter lists.
    Sweep {
        #[command(flatten)]
        base: Base,
        /// `key=v1,v2,...`; repeat for a product over several keys.
        #[arg(long, required = true)]
        vary: Vec<String>,
        /// Pipelines run at once.
        #[arg(long, default_value_t = 4)]
        jobs: usize,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn checked(rc: RunConfig) -> Result<RunConfig> {
    rc.validate()?;
    Ok(rc)
}

fn print_json(path: &Path, v: &serde_json::Value) {
    println!("wrote {}", path.display());
    println!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::GroundState { base, rho_max, tol, out } => {
            let mut rc = base.load()?;
            set(&mut rc.rho_max, rho_max);
            set(&mut rc.tol, tol);
            let rc = checked(rc)?;
            let gs = stages::ground_state(&rc).context("stage ground-state")?;
            print_json(&out, &stages::write_ground_state(&gs, &out)?);
        }
        Cmd::Spectral { base, rayleigh_samples, seed, out } => {
            let mut rc = base.load()?;
            set(&mut rc.rayleigh_samples, rayleigh_samples);
            set(&mut rc.seed, seed);
            let rc = checked(rc)?;
            let op = stages::operator(&stages::ground_state(&rc)?).context("stage spectral")?;
            print_json(&out, &stages::write_spectral(&op, &rc, &out)?);
        }
        Cmd::Inner { base, n, t, out } => {
            let mut rc = base.load()?;
            set(&mut rc.core.n_inner, n);
            set(&mut rc.t, t);
            let rc = checked(rc)?;
            let ip = stages::inner(&rc, stages::operator(&stages::ground_state(&rc)?)?).context("stage inner")?;
            print_json(&out, &stages::write_inner(&ip, rc.t, &out)?);
        }
        Cmd::SelfSimilar { base, t, out } => {
            let mut rc = base.load()?;
            set(&mut rc.t, t);
            let rc = checked(rc)?;
            let ip = stages::inner(&rc, stages::operator(&stages::ground_state(&rc)?)?)?;
            let ss = stages::self_similar(&ip).context("stage self-similar")?;
            print_json(&out, &stages::write_self_similar(&ss, rc.t, &out)?);
        }
        Cmd::Remote { base, delta, n, out } => {
            let mut rc = base.load()?;
            set(&mut rc.core.delta, delta);
            set(&mut rc.core.n_remote, n);
            let rc = checked(rc)?;
            let ip = stages::inner(&rc, stages::operator(&stages::ground_state(&rc)?)?)?;
            let ss = stages::self_similar(&ip)?;
            let rp = stages::remote(&ss, &rc).context("stage remote")?;
            print_json(&out, &stages::write_remote(&rp, &out)?);
        }
        Cmd::Compose { base, t, remainder, out } => {
            let mut rc = base.load()?;
            set(&mut rc.t, t);
            let rc = checked(rc)?;
            let ca = composite(&rc)?;
            print_json(&out, &stages::write_composite(&ca, rc.t, remainder, &out)?);
        }
        Cmd::Evolve { base, t1, t_end, n, cfl, cells_per_core, snapshots, out } => {
            let mut rc = base.load()?;
            set(&mut rc.t1, t1);
            set(&mut rc.t_end, t_end);
            set(&mut rc.core.n_inner, n);
            set(&mut rc.cfl, cfl);
            set(&mut rc.cells_per_core, cells_per_core);
            let rc = checked(rc)?;
            let ca = composite(&rc)?;
            let v = stages::run_evolution(&ca, &rc, snapshots, &out).context("stage evolve")?;
            print_json(&out.join("evolve.json"), &v);
        }
        Cmd::Pipeline { base, out } => {
            let mut rc = base.load()?;
            set(&mut rc.out, out);
            let rc = checked(rc)?;
            let run = run_pipeline(&rc)?;
            println!("wrote {}", rc.out.join("report.json").display());
            if let Some(f) = run.failure {
                eprintln!("error: {f}");
                return Ok(ExitCode::from(exit_code(&f.error)));
            }
        }
        Cmd::Sweep { base, vary, jobs, out } => {
            let rc = base.load()?;
            let failed = run_sweep(&rc, &vary, jobs, &out)?;
            println!("wrote {}", out.join("sweep.json").display());
            if failed > 0 {
                eprintln!("error: {failed} run(s) failed");
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn composite(rc: &RunConfig) -> Result<std::sync::Arc<cone_blowup::composite::CompositeApprox>> {
    let ip = stages::inner(rc, stages::operator(&stages::ground_state(rc)?)?)?;
    let ss = stages::self_similar(&ip)?;
    let rp = stages::remote(&ss, rc)?;
    stages::composite(ip, ss, rp).context("stage compose")
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
