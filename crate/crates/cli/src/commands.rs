//! The work behind each subcommand, callable without the binary.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sortlet_core::ansatz::SortletModel;
use sortlet_core::backbone::ParamStore;
use sortlet_core::exec::Executor;
use sortlet_core::optimizer::{batch_estimates, window_means, EnergyStats, Trainer};
use sortlet_core::probes;
use sortlet_core::sampler::WalkerEnsemble;

use crate::checkpoint::{self, Checkpoint};
use crate::config::RunConfig;
use crate::format::with_uncertainty;
use crate::output::{LineWriter, MetricsLine, RunDir};
use crate::CliError;

/// Evaluation chains use this seed offset so they never replay the
/// training chains.
pub const EVAL_SEED_OFFSET: u64 = 1;

fn model_for(cfg: &RunConfig, single_sortlet: bool) -> Result<SortletModel, CliError> {
    let mut ansatz = cfg.ansatz;
    if single_sortlet {
        ansatz.sortlets = 1;
    }
    Ok(SortletModel::new(cfg.system_spec()?, ansatz))
}

fn with_values(template: &ParamStore, values: &[f64]) -> ParamStore {
    ParamStore { values: values.to_vec(), ..template.clone() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySummary {
    pub energy: f64,
    pub stderr: f64,
    pub variance: f64,
    pub estimates: usize,
    /// `3 * stderr`.
    pub radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
}

impl EnergySummary {
    fn new(stats: &EnergyStats, reference: Option<f64>) -> Self {
        Self {
            energy: stats.mean,
            stderr: stats.stderr,
            variance: stats.variance,
            estimates: stats.n_samples,
            radius: stats.confidence(),
            error: reference.map(|r| stats.mean - r),
        }
    }

    pub fn display(&self) -> String {
        let mut s = format!(
            "energy {} Ha (3 sigma over {} estimates)",
            with_uncertainty(self.energy, self.radius),
            self.estimates
        );
        if let Some(e) = self.error {
            s.push_str(&format!(", {:+.2} mHa from reference", 1e3 * e));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub dir: RunDir,
    pub iterations: u64,
    pub summary: EnergySummary,
    pub checkpoint: PathBuf,
}

/// Train, checkpoint, and finish with a fixed-parameter energy estimate
/// from the final walkers.
///
/// With `resume`, training continues from the newest checkpoint in the run
/// directory. Without it, an existing run directory is an error so earlier
/// output is never appended to by accident.
pub fn train<E: Executor>(
    cfg: &RunConfig,
    root: &Path,
    resume: bool,
    exec: &E,
    log: &mut dyn Write,
) -> Result<TrainOutcome, CliError> {
    let model = model_for(cfg, false)?;
    let template = model.init(cfg.run.seed);
    let dir = RunDir::create(root, cfg)?;
    let latest = checkpoint::latest(&dir.checkpoints())?;
    let mut trainer = match (resume, latest) {
        (true, Some(path)) => {
            let ck = Checkpoint::load(&path)?;
            ck.check_config(cfg)?;
            let _ = writeln!(log, "resuming from {}", path.display());
            Trainer::from_state(&model, cfg.train, ck.trainer, exec).map_err(CliError::Setup)?
        }
        (false, Some(_)) => {
            return Err(CliError::Usage(format!(
                "{} already holds a run; pass --resume or remove it",
                dir.path.display()
            )))
        }
        (_, None) => {
            let mut ensemble = WalkerEnsemble::new(&model.system, cfg.train.walkers, cfg.run.seed);
            ensemble.proposal = cfg.run.proposal;
            Trainer::new(&model, cfg.train, template.values.clone(), ensemble, exec)
        }
    };
    let _ = writeln!(log, "{} -> {}", model.layout.describe(), dir.path.display());

    let save = |t: &Trainer<'_, SortletModel>| -> Result<PathBuf, CliError> {
        let path = dir.checkpoints().join(checkpoint::file_name(t.iteration));
        Checkpoint::new(cfg, with_values(&template, &t.params), t.state()).save(&path)?;
        Ok(path)
    };

    let mut metrics = LineWriter::append(&dir.metrics())?;
    let start = Instant::now();
    let every = cfg.train.checkpoint_every;
    let mut io_error = None;
    let result = trainer.run(exec, |t, rec| {
        let line = MetricsLine { record: *rec, elapsed_s: start.elapsed().as_secs_f64() };
        let r = metrics.write(&line).and_then(|_| {
            if every > 0 && rec.iteration % every == 0 {
                metrics.flush()?;
                save(t)?;
            }
            Ok(())
        });
        if rec.iteration % 100 == 0 {
            let _ = writeln!(
                log,
                "iter {:>6}  E {:+.6}  stderr {:.2e}  acc {:.3}  step {:.3}",
                rec.iteration, rec.energy, rec.stderr, rec.acceptance, rec.step_size
            );
        }
        match r {
            Ok(()) => true,
            Err(e) => {
                io_error = Some(e);
                false
            }
        }
    });
    metrics.flush()?;
    if let Some(e) = io_error {
        return Err(e);
    }
    let last = save(&trainer)?;
    if let Err(source) = result {
        return Err(CliError::Train { source, checkpoint: last });
    }

    let mut ensemble = trainer.ensemble.clone();
    ensemble.freeze();
    let (stats, _) = batch_estimates(&model, &trainer.params, &mut ensemble, cfg.evaluate.estimates, cfg.evaluate.spacing, exec)
        .map_err(|source| CliError::Train { source, checkpoint: last.clone() })?;
    let summary = EnergySummary::new(&stats, cfg.run.reference_energy);

    #[derive(Serialize)]
    struct TrainReport<'a> {
        name: &'static str,
        seed: u64,
        iterations: u64,
        checkpoint: &'a Path,
        #[serde(flatten)]
        summary: EnergySummary,
    }
    let mut report = LineWriter::append(&dir.report("train"))?;
    report.write(&TrainReport { name: "train", seed: cfg.run.seed, iterations: trainer.iteration, checkpoint: &last, summary })?;
    report.flush()?;
    let _ = writeln!(log, "final {}", summary.display());
    Ok(TrainOutcome { dir, iterations: trainer.iteration, summary, checkpoint: last })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvaluateOptions {
    pub estimates: Option<usize>,
    pub equilibration: Option<usize>,
    pub walkers: Option<usize>,
}

/// Fresh walkers, burn-in with step adaptation, then independent energy
/// estimates at fixed parameters and a frozen step size.
///
/// When `expected` is given, its hash must match the checkpoint's.
pub fn evaluate<E: Executor>(
    checkpoint_path: &Path,
    expected: Option<&RunConfig>,
    opts: EvaluateOptions,
    root: &Path,
    exec: &E,
    log: &mut dyn Write,
) -> Result<EnergySummary, CliError> {
    let ck = Checkpoint::load(checkpoint_path)?;
    if let Some(cfg) = expected {
        ck.check_config(cfg)?;
    }
    let cfg = &ck.config;
    let model = model_for(cfg, false)?;
    if !ck.params.same_layout(&model.init(0)) {
        return Err(CliError::Mismatch("checkpoint parameters do not fit the configured model".into()));
    }
    let estimates = opts.estimates.unwrap_or(cfg.evaluate.estimates);
    let equilibration = opts.equilibration.unwrap_or(cfg.evaluate.equilibration);
    let walkers = opts.walkers.unwrap_or(cfg.train.walkers);
    let params = &ck.params.values;

    let mut ensemble = WalkerEnsemble::new(&model.system, walkers, cfg.run.seed.wrapping_add(EVAL_SEED_OFFSET));
    ensemble.proposal = cfg.run.proposal;
    ensemble.refresh(&model, params, exec);
    ensemble.burn_in(&model, params, equilibration, cfg.train.adapt_window, exec);
    ensemble.freeze();
    let (stats, _) = batch_estimates(&model, params, &mut ensemble, estimates, cfg.evaluate.spacing, exec)
        .map_err(CliError::Setup)?;
    let summary = EnergySummary::new(&stats, cfg.run.reference_energy);

    #[derive(Serialize)]
    struct EvalReport<'a> {
        name: &'static str,
        seed: u64,
        checkpoint: &'a Path,
        iteration: u64,
        equilibration: usize,
        walkers: usize,
        #[serde(flatten)]
        summary: EnergySummary,
    }
    let dir = RunDir::create(root, cfg)?;
    let mut report = LineWriter::append(&dir.report("evaluate"))?;
    report.write(&EvalReport {
        name: "evaluate",
        seed: cfg.run.seed,
        checkpoint: checkpoint_path,
        iteration: ck.trainer.iteration,
        equilibration,
        walkers,
        summary,
    })?;
    report.flush()?;
    let _ = writeln!(log, "{}", summary.display());
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ProbeKind {
    Antisymmetry,
    Nodes,
    Smoothness,
    Variational,
    Gradcheck,
}

impl ProbeKind {
    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::Antisymmetry => "antisymmetry",
            ProbeKind::Nodes => "nodes",
            ProbeKind::Smoothness => "smoothness",
            ProbeKind::Variational => "variational",
            ProbeKind::Gradcheck => "gradcheck",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProbeOutcome {
    pub passed: bool,
    pub summary: String,
    pub report: PathBuf,
}

/// Run one probe and append its report. `passed` is false only for a
/// failed assertion; exploratory probes always pass.
pub fn probe<E: Executor>(
    kind: ProbeKind,
    cfg: &RunConfig,
    single_sortlet: bool,
    root: &Path,
    exec: &E,
    log: &mut dyn Write,
) -> Result<ProbeOutcome, CliError> {
    let seed = cfg.run.seed;
    let p = cfg.probe;
    let dir = RunDir::create(root, cfg)?;
    let path = dir.report(kind.name());
    let mut out = LineWriter::append(&path)?;
    let (passed, summary) = match kind {
        ProbeKind::Antisymmetry => {
            let model = model_for(cfg, single_sortlet)?;
            let r = probes::antisymmetry_suite(&model, |s| model.init(s), p.trials, seed, exec)?;
            out.write(&r)?;
            let s = format!(
                "antisymmetry: {} violations in {} trials, max log-magnitude deviation {:.1e}; opposite-spin control: {} same sign, {} flipped",
                r.violations, r.trials, r.max_logmag_deviation, r.opposite_spin_same_sign, r.opposite_spin_flipped_sign
            );
            (r.passed, s)
        }
        ProbeKind::Nodes => {
            let model = model_for(cfg, single_sortlet)?;
            let mut r = probes::node_crossing_suite(&model, |s| model.init(s), p.paths, p.resolution, seed, exec)?;
            // only a single term is covered by the crossing argument
            let asserted = model.config().sortlets == 1;
            if !asserted {
                r.asserted = false;
                r.passed = true;
            }
            out.write(&r)?;
            let mut s = format!(
                "nodes ({:?}, K={}{}): sign change on {}/{} exchange paths, {} skipped on a node",
                model.config().kind,
                model.config().sortlets,
                if asserted { "" } else { ", exploratory" },
                r.paths_with_crossing,
                r.paths,
                r.skipped_on_node
            );
            let params = model.init(seed);
            match probes::triple_exchange_suite(&model, &params, p.paths, p.resolution, seed, exec) {
                Ok(t) => {
                    out.write(&t)?;
                    s.push_str(&format!(
                        "; three-cycle paths with a sign change: {}/{} (exploratory)",
                        t.paths_with_crossing, t.paths
                    ));
                }
                Err(probes::ProbeError::Precondition(_)) => {}
                Err(e) => return Err(e.into()),
            }
            (r.passed, s)
        }
        ProbeKind::Smoothness => {
            let model = model_for(cfg, single_sortlet)?;
            let params = model.init(seed);
            let r = probes::smoothness_probe(&model, &params, p.trials.min(200), seed);
            out.write(&r)?;
            let worst = |kind: &str| {
                r.records.iter().filter(|t| t.kind == kind).map(|t| t.measure).fold(0.0f64, f64::max)
            };
            let s = format!(
                "smoothness: {} single ties (worst relative disagreement {:.1e}), {} double ties (worst |derivative| {:.1e}), {} smooth points, {} failed constructions",
                r.single_ties,
                worst("single"),
                r.double_ties,
                worst("double"),
                r.smooth_points,
                r.failed_constructions
            );
            (r.passed, s)
        }
        ProbeKind::Variational => {
            let r = probes::variational_floor_check(p.dim, p.draws, seed)?;
            out.write(&r)?;
            let s = format!(
                "variational: dim {}, lambda_min {:.12}, R(v_min) - lambda_min {:.1e}, {} of {} draws below the floor",
                r.dim,
                r.lambda_min,
                r.quotient_at_ground_state - r.lambda_min,
                r.violations,
                r.draws
            );
            (r.passed, s)
        }
        ProbeKind::Gradcheck => {
            let toy = cfg.toy()?;
            let mut r = probes::gradcheck(&toy.toy(), &toy.theta, toy.samples, exec)?;
            r.seed = seed;
            out.write(&r)?;
            let s = format!(
                "gradcheck: max relative error {:.2e} against finite differences of the quadrature energy (doubled baseline would give {:.2e})",
                r.max_relative_error, r.doubled_baseline_error
            );
            (r.passed, s)
        }
    };
    out.flush()?;
    let _ = writeln!(log, "{} [{}]", summary, if passed { "pass" } else { "FAIL" });
    Ok(ProbeOutcome { passed, summary, report: path })
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationRecord {
    pub name: &'static str,
    pub sortlets: usize,
    pub run: String,
    #[serde(flatten)]
    pub summary: EnergySummary,
    /// `(last iteration of window, window mean energy, window standard
    /// error)`, minus the reference energy when one is configured.
    pub curve: Vec<(u64, f64, f64)>,
}

/// Train once per `K` and write each run's windowed energy (or error
/// against the reference) curve to the base run's ablation report.
pub fn ablate<E: Executor>(
    cfg: &RunConfig,
    ks: &[usize],
    window: usize,
    root: &Path,
    exec: &E,
    log: &mut dyn Write,
) -> Result<Vec<AblationRecord>, CliError> {
    let base = RunDir::create(root, cfg)?;
    let mut out = LineWriter::append(&base.report("ablation"))?;
    let mut records = Vec::new();
    for &k in ks {
        let mut c = cfg.clone();
        c.apply(&crate::config::Overrides { sortlets: Some(k), ..Default::default() })?;
        let _ = writeln!(log, "K = {k}");
        let outcome = train(&c, root, false, exec, log)?;
        let energies = read_metric(&outcome.dir.metrics(), "energy")?;
        let offset = c.run.reference_energy.unwrap_or(0.0);
        let curve = window_means(&energies, window)
            .into_iter()
            .enumerate()
            .map(|(w, (m, e))| (((w + 1) * window) as u64, m - offset, e))
            .collect();
        let rec = AblationRecord { name: "ablation", sortlets: k, run: c.hash(), summary: outcome.summary, curve };
        out.write(&rec)?;
        out.flush()?;
        records.push(rec);
    }
    Ok(records)
}

/// One numeric field from every line of a metrics file.
pub fn read_metric(path: &Path, field: &str) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l)?;
            v.get(field)
                .and_then(|x| x.as_f64())
                .ok_or_else(|| CliError::Mismatch(format!("{}: record without {field}", path.display())))
        })
        .collect()
}
