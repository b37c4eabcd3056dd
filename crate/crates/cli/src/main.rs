use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sortlet_cli::commands::{self, EvaluateOptions, ProbeKind};
use sortlet_cli::output::{output_root, OUT_ENV};
use sortlet_cli::{CliError, Overrides, RayonExec, RunConfig};

#[derive(Parser)]
#[command(name = "sortlet", version, about = "Variational Monte Carlo with the sortlet ansatz")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output root; run directories are created beneath it.
    #[arg(long, global = true, env = OUT_ENV)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct OverrideArgs {
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    walkers: Option<usize>,
    #[arg(long)]
    sortlets: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
}

impl OverrideArgs {
    fn overrides(&self) -> Overrides {
        Overrides { iterations: self.iters, walkers: self.walkers, sortlets: self.sortlets, seed: self.seed, lr: self.lr }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Optimise the wavefunction and report the final energy.
    Train {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
        /// Continue from the newest checkpoint of this run.
        #[arg(long)]
        resume: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate the energy of a checkpoint with fresh walkers.
    Evaluate {
        checkpoint: PathBuf,
        /// Refuse unless this config matches the checkpoint's hash.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        estimates: Option<usize>,
        #[arg(long)]
        equilibration: Option<usize>,
        #[arg(long)]
        walkers: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a structural check and exit 0 iff it passes.
    Probe {
        #[arg(value_enum)]
        kind: ProbeKind,
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Use one term (K = 1) regardless of the config.
        #[arg(long)]
        single_sortlet: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Train once per number of sortlets and record the error curves.
    Ablate {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [4usize, 16, 32])]
        ks: Vec<usize>,
        /// Iterations per curve point.
        #[arg(long, default_value_t = 100)]
        window: usize,
        #[command(flatten)]
        overrides: OverrideArgs,
        #[command(flatten)]
        common: Common,
    },
}

fn read_config(path: &Path, o: &Overrides) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut cfg = RunConfig::parse(&text)?;
    cfg.apply(o)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let mut log = std::io::stderr();
    match cli.command {
        Command::Train { config, overrides, resume, common } => {
            let cfg = read_config(&config, &overrides.overrides())?;
            let exec = RayonExec::new(common.threads);
            let out = commands::train(&cfg, &output_root(common.out.as_deref()), resume, &exec, &mut log)?;
            println!("{}", out.summary.display());
            Ok(true)
        }
        Command::Evaluate { checkpoint, config, estimates, equilibration, walkers, common } => {
            let expected = config.map(|p| read_config(&p, &Overrides::default())).transpose()?;
            let exec = RayonExec::new(common.threads);
            let opts = EvaluateOptions { estimates, equilibration, walkers };
            let s = commands::evaluate(&checkpoint, expected.as_ref(), opts, &output_root(common.out.as_deref()), &exec, &mut log)?;
            println!("{}", s.display());
            Ok(true)
        }
        Command::Probe { kind, config, seed, single_sortlet, common } => {
            let cfg = read_config(&config, &Overrides { seed, ..Default::default() })?;
            let exec = RayonExec::new(common.threads);
            let out = commands::probe(kind, &cfg, single_sortlet, &output_root(common.out.as_deref()), &exec, &mut log)?;
            println!("{} [{}]", out.summary, if out.passed { "pass" } else { "FAIL" });
            Ok(out.passed)
        }
        Command::Ablate { config, ks, window, overrides, common } => {
            let cfg = read_config(&config, &overrides.overrides())?;
            let exec = RayonExec::new(common.threads);
            let recs = commands::ablate(&cfg, &ks, window, &output_root(common.out.as_deref()), &exec, &mut log)?;
            for r in recs {
                println!("K={:>3}  {}", r.sortlets, r.summary.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
