use std::fs;
use std::path::Path;
use std::process::Command;

use sortlet_cli::checkpoint::{self, Checkpoint};
use sortlet_cli::commands::{self, EvaluateOptions};
use sortlet_cli::{CliError, RunConfig};
use sortlet_core::ansatz::SortletModel;
use sortlet_core::exec::Serial;
use sortlet_core::optimizer::{Adam, TrainerState};
use sortlet_core::sampler::WalkerEnsemble;

const SMALL_H: &str = r#"
[system]
nuclei = [{ element = "H", xyz = [0.0, 0.0, 0.0] }]
[run]
seed = 4
[ansatz]
sortlets = 1
hidden = 4
layers = 1
[train]
iterations = 20
walkers = 32
burn_in = 20
checkpoint_every = 10
[evaluate]
estimates = 20
equilibration = 50
spacing = 5
"#;

fn small_h() -> RunConfig {
    RunConfig::parse(SMALL_H).unwrap()
}

/// A checkpoint whose parameters make the model the exact 1s orbital:
/// constant score, unit envelope rate.
fn oracle_checkpoint(cfg: &RunConfig, path: &Path) {
    let model = SortletModel::new(cfg.system_spec().unwrap(), cfg.ansatz);
    let mut p = model.init(cfg.run.seed);
    p.get_mut("head.w").unwrap().fill(0.0);
    p.get_mut("head.b").unwrap()[0] = 1.0;
    p.get_mut("envelope.gamma").unwrap()[0] = (1f64.exp() - 1.0).ln();
    let state = TrainerState {
        iteration: 0,
        params: p.values.clone(),
        adam: Adam::new(cfg.train.adam, p.len()),
        ensemble: WalkerEnsemble::new(&model.system, 4, 0).state(),
    };
    Checkpoint::new(cfg, p, state).save(path).unwrap();
}

fn without_elapsed(path: &Path) -> Vec<serde_json::Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
            assert!(v.as_object_mut().unwrap().remove("elapsed_s").is_some());
            v
        })
        .collect()
}

#[test]
fn oracle_hydrogen_checkpoint_evaluates_to_minus_half() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_h();
    let path = dir.path().join("oracle.json");
    oracle_checkpoint(&cfg, &path);
    let s = commands::evaluate(&path, Some(&cfg), EvaluateOptions::default(), dir.path(), &Serial, &mut std::io::sink()).unwrap();
    assert!((s.energy + 0.5).abs() < 1e-9, "{}", s.energy);
    assert!(s.stderr < 1e-9);
    assert_eq!(s.estimates, 20);
}

#[test]
fn mismatched_config_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_h();
    let path = dir.path().join("oracle.json");
    oracle_checkpoint(&cfg, &path);
    let mut other = cfg.clone();
    other.run.seed += 1;
    let err = commands::evaluate(&path, Some(&other), EvaluateOptions::default(), dir.path(), &Serial, &mut std::io::sink()).unwrap_err();
    assert!(matches!(err, CliError::Mismatch(_)), "{err}");

    // editing the stored config breaks the stored hash
    let text = fs::read_to_string(&path).unwrap().replace("\"seed\":4", "\"seed\":5");
    fs::write(&path, text).unwrap();
    assert!(matches!(Checkpoint::load(&path), Err(CliError::Mismatch(_))));
}

#[test]
fn checkpoints_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_h();
    let path = dir.path().join("a.json");
    oracle_checkpoint(&cfg, &path);
    let a = Checkpoint::load(&path).unwrap();
    let path2 = dir.path().join("b.json");
    a.save(&path2).unwrap();
    let b = Checkpoint::load(&path2).unwrap();
    assert_eq!(a, b);
    assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
}

#[test]
fn seeded_runs_repeat_and_resume_bitwise() {
    let cfg = small_h();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = commands::train(&cfg, a.path(), false, &Serial, &mut std::io::sink()).unwrap();
    let rb = commands::train(&cfg, b.path(), false, &Serial, &mut std::io::sink()).unwrap();
    let ma = without_elapsed(&ra.dir.metrics());
    assert_eq!(ma.len(), 20);
    assert_eq!(ma, without_elapsed(&rb.dir.metrics()));
    assert_eq!(fs::read(&ra.checkpoint).unwrap(), fs::read(&rb.checkpoint).unwrap());
    assert_eq!(ra.summary, rb.summary);

    // a fresh run over an existing directory is refused
    let again = commands::train(&cfg, a.path(), false, &Serial, &mut std::io::sink()).unwrap_err();
    assert!(matches!(again, CliError::Usage(_)));

    // interrupt b after ten iterations: drop the later checkpoint and
    // metrics, then resume
    fs::remove_file(&rb.checkpoint).unwrap();
    let keep: Vec<String> = fs::read_to_string(rb.dir.metrics()).unwrap().lines().take(10).map(String::from).collect();
    fs::write(rb.dir.metrics(), keep.join("\n") + "\n").unwrap();
    assert!(checkpoint::latest(&rb.dir.checkpoints()).unwrap().unwrap().ends_with("step-00000010.json"));
    let rc = commands::train(&cfg, b.path(), true, &Serial, &mut std::io::sink()).unwrap();
    assert_eq!(without_elapsed(&rc.dir.metrics()), ma);
    assert_eq!(fs::read(&ra.checkpoint).unwrap(), fs::read(&rc.checkpoint).unwrap());
}

fn sortlet() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sortlet"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("h.cfg");
    fs::write(&cfg, SMALL_H).unwrap();

    let unknown = sortlet().args(["probe", "bogus"]).arg(&cfg).status().unwrap();
    assert_eq!(unknown.code(), Some(2));

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "[system]\nnuclei = [{ charge = -2, xyz = [0, 0, 0] }]\n").unwrap();
    let out = sortlet().args(["train"]).arg(&bad).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("system.nuclei[0]"));

    let out = sortlet().args(["probe", "variational"]).arg(&cfg).args(["--seed", "3"]).env("SORTLET_OUT", dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut c = RunConfig::parse(SMALL_H).unwrap();
    c.run.seed = 3;
    let report = dir.path().join(c.hash()).join("report-variational.txt");
    let line = fs::read_to_string(report).unwrap();
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["seed"], 3);
}

#[test]
fn training_failure_keeps_artifacts_and_exits_nonzero() {
    // an absurd learning rate throws the parameters out of range
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("h.cfg");
    fs::write(&cfg, SMALL_H).unwrap();
    let out = sortlet().arg("train").arg(&cfg).args(["--lr", "1e300", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("last good state"));
    let mut c = RunConfig::parse(SMALL_H).unwrap();
    c.train.adam.lr = 1e300;
    let run = dir.path().join(c.hash());
    let ck = checkpoint::latest(&run.join("checkpoints")).unwrap().unwrap();
    let loaded = Checkpoint::load(&ck).unwrap();
    assert!(loaded.trainer.params.iter().all(|p| p.is_finite()));
    assert!(run.join("metrics.ndjson").exists());
}

#[test]
fn ablation_writes_one_curve_per_k() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_h();
    cfg.run.reference_energy = Some(-0.5);
    let recs = commands::ablate(&cfg, &[1, 2], 5, dir.path(), &Serial, &mut std::io::sink()).unwrap();
    assert_eq!(recs.iter().map(|r| r.sortlets).collect::<Vec<_>>(), [1, 2]);
    let report = dir.path().join(cfg.hash()).join("report-ablation.txt");
    let lines: Vec<serde_json::Value> =
        fs::read_to_string(report).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    for (l, k) in lines.iter().zip([1, 2]) {
        assert_eq!(l["sortlets"], k);
        // 20 iterations in windows of 5, as errors against the reference
        let curve = l["curve"].as_array().unwrap();
        assert_eq!(curve.len(), 4);
        assert_eq!(curve[3][0], 20);
    }
}
