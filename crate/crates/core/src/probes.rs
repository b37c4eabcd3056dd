//! Executable checks of the structural properties of the ansatz: exchange
//! antisymmetry, sign changes along exchange paths, first-order smoothness
//! across score ties, the variational floor, and the gradient estimator.
//!
//! Every probe is deterministic given its seed and returns a serializable
//! report with a pass/fail verdict and witness data.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ansatz::{evaluate_sortlet, SignedLog, SortletModel};
use crate::autodiff::{fd, grad_positions, PositionFn, Scalar};
use crate::backbone::ParamStore;
use crate::error::EvalError;
use crate::exec::Executor;
use crate::geometry::{ElectronConfiguration, SystemSpec};
use crate::math;
use crate::optimizer::energy_gradient;
use crate::sampler::WalkerEnsemble;
use crate::toy::Toy1d;
use crate::wavefunction::WaveFunction;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProbeError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("path endpoint lies on a node")]
    EndpointOnNode,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn random_configs(system: &SystemSpec, n: usize, seed: u64) -> Vec<Vec<f64>> {
    WalkerEnsemble::new(system, n, seed).walkers.into_iter().map(|w| w.coords).collect()
}

fn same_spin_pairs(system: &SystemSpec) -> Vec<(usize, usize)> {
    let n = system.n_electrons();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if system.spin(i) == system.spin(j) {
                out.push((i, j));
            }
        }
    }
    out
}

fn opposite_spin_pairs(system: &SystemSpec) -> Vec<(usize, usize)> {
    let n = system.n_electrons();
    let mut out = Vec::new();
    for i in 0..system.n_up() {
        for j in system.n_up()..n {
            out.push((i, j));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntisymmetryWitness {
    pub trial: usize,
    pub pair: (usize, usize),
    pub coords: Vec<f64>,
    pub sign: (i8, i8),
    pub logmag: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntisymmetryReport {
    pub name: String,
    pub seed: u64,
    pub passed: bool,
    pub trials: usize,
    pub violations: usize,
    pub max_logmag_deviation: f64,
    /// Opposite-spin control group: how often the sign was kept or flipped.
    pub opposite_spin_same_sign: usize,
    pub opposite_spin_flipped_sign: usize,
    pub witnesses: Vec<AntisymmetryWitness>,
}

/// `trials` random (parameters, configuration, same-spin transposition)
/// triples, each checked for an exact sign flip with log-magnitudes equal
/// to `1e-12`. Fresh parameters are drawn from `init(seed, trial)`.
pub fn antisymmetry_suite<E: Executor>(
    model: &SortletModel,
    init: impl Fn(u64) -> ParamStore + Sync + Send,
    trials: usize,
    seed: u64,
    exec: &E,
) -> Result<AntisymmetryReport, ProbeError> {
    let system = &model.system;
    let pairs = same_spin_pairs(system);
    if pairs.is_empty() {
        return Err(ProbeError::Precondition("needs two electrons of the same spin".into()));
    }
    let controls = opposite_spin_pairs(system);
    let configs = random_configs(system, trials, seed);
    let outcomes = exec.map(trials, |t| -> Result<_, EvalError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let params = init(rng.gen());
        let c = system.configuration(configs[t].clone()).expect("valid configuration");
        let (i, j) = pairs[rng.gen_range(0..pairs.len())];
        let a = model.psi(&params, &c)?;
        let b = model.psi(&params, &c.transpose_electrons(i, j).expect("in range"))?;
        let control = if controls.is_empty() {
            None
        } else {
            let (p, q) = controls[rng.gen_range(0..controls.len())];
            let d = model.psi(&params, &c.transpose_electrons(p, q).expect("in range"))?;
            Some(d.sign == a.sign)
        };
        Ok((t, (i, j), a, b, control))
    });
    let mut report = AntisymmetryReport {
        name: "antisymmetry".into(),
        seed,
        passed: true,
        trials,
        violations: 0,
        max_logmag_deviation: 0.0,
        opposite_spin_same_sign: 0,
        opposite_spin_flipped_sign: 0,
        witnesses: Vec::new(),
    };
    for o in outcomes {
        let (t, pair, a, b, control) = o?;
        let dev = if a.is_zero() && b.is_zero() { 0.0 } else { (a.logmag - b.logmag).abs() };
        let ok = b.sign == -a.sign && !(dev >= 1e-12);
        report.max_logmag_deviation = report.max_logmag_deviation.max(if dev.is_nan() { f64::INFINITY } else { dev });
        if !ok {
            report.violations += 1;
            if report.witnesses.len() < 10 {
                report.witnesses.push(AntisymmetryWitness {
                    trial: t,
                    pair,
                    coords: configs[t].clone(),
                    sign: (a.sign, b.sign),
                    logmag: (a.logmag, b.logmag),
                });
            }
        }
        match control {
            Some(true) => report.opposite_spin_same_sign += 1,
            Some(false) => report.opposite_spin_flipped_sign += 1,
            None => {}
        }
    }
    report.passed = report.violations == 0;
    Ok(report)
}

/// Sign changes of `psi` along a path `t -> path(t)`, `t` in `[0, 1]`.
fn path_crossings<W: WaveFunction>(
    wf: &W,
    params: &[f64],
    path: impl Fn(f64) -> Vec<f64>,
    resolution: usize,
) -> Result<Vec<f64>, ProbeError> {
    let sign_at = |t: f64| -> Result<i8, EvalError> { Ok(wf.log_psi::<f64>(params, &path(t))?.sign) };
    let start = sign_at(0.0)?;
    if start == 0 || sign_at(1.0)? == 0 {
        return Err(ProbeError::EndpointOnNode);
    }
    let mut crossings = Vec::new();
    let (mut t_prev, mut s_prev) = (0.0, start);
    let mut zero_run: Option<f64> = None;
    for k in 1..=resolution {
        let t = k as f64 / resolution as f64;
        let s = sign_at(t)?;
        if s == 0 {
            zero_run.get_or_insert(t);
            continue;
        }
        if s != s_prev {
            let location = match zero_run {
                Some(z) => z,
                None => {
                    // bisect the bracketing interval down to 1e-10
                    let (mut lo, mut hi) = (t_prev, t);
                    while hi - lo > 1e-10 {
                        let mid = 0.5 * (lo + hi);
                        let sm = sign_at(mid)?;
                        if sm == 0 {
                            lo = mid;
                            hi = mid;
                            break;
                        }
                        if sm == s_prev {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    0.5 * (lo + hi)
                }
            };
            crossings.push(location);
        }
        zero_run = None;
        t_prev = t;
        s_prev = s;
    }
    Ok(crossings)
}

/// Sign changes of `psi` along the linear exchange path between `c` and
/// `c` with electrons `i` and `j` swapped.
pub fn node_crossing_probe<W: WaveFunction>(
    wf: &W,
    params: &[f64],
    c: &ElectronConfiguration,
    i: usize,
    j: usize,
    resolution: usize,
) -> Result<Vec<f64>, ProbeError> {
    if i == j {
        return Err(ProbeError::Precondition("exchange needs two distinct electrons".into()));
    }
    if resolution < 100 {
        return Err(ProbeError::Precondition("resolution must be at least 100".into()));
    }
    c.exchange_path(i, j, 0.0).map_err(|e| ProbeError::Precondition(format!("{e}")))?;
    path_crossings(wf, params, |t| c.exchange_path(i, j, t).expect("checked").into_coords(), resolution)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub path: usize,
    pub electrons: Vec<usize>,
    pub crossings: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub name: String,
    pub seed: u64,
    pub passed: bool,
    pub paths: usize,
    pub paths_with_crossing: usize,
    pub skipped_on_node: usize,
    /// Whether a crossing on every path is required (pairwise exchanges)
    /// or only recorded (three-cycles).
    pub asserted: bool,
    pub records: Vec<PathRecord>,
}

/// Random same-spin exchange paths with fresh parameters for each path.
/// Passes when every path shows at least one sign change.
pub fn node_crossing_suite<E: Executor>(
    model: &SortletModel,
    init: impl Fn(u64) -> ParamStore + Sync + Send,
    paths: usize,
    resolution: usize,
    seed: u64,
    exec: &E,
) -> Result<NodeReport, ProbeError> {
    let pairs = same_spin_pairs(&model.system);
    if pairs.is_empty() {
        return Err(ProbeError::Precondition("needs two electrons of the same spin".into()));
    }
    let configs = random_configs(&model.system, paths, seed);
    let outcomes = exec.map(paths, |p| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(p as u64);
        let params = init(rng.gen());
        let (i, j) = pairs[rng.gen_range(0..pairs.len())];
        let c = model.system.configuration(configs[p].clone()).expect("valid configuration");
        (p, vec![i, j], node_crossing_probe(model, &params.values, &c, i, j, resolution))
    });
    collect_paths("nodes", seed, outcomes, true)
}

fn collect_paths(
    name: &str,
    seed: u64,
    outcomes: Vec<(usize, Vec<usize>, Result<Vec<f64>, ProbeError>)>,
    asserted: bool,
) -> Result<NodeReport, ProbeError> {
    let mut report = NodeReport {
        name: name.into(),
        seed,
        passed: false,
        paths: outcomes.len(),
        paths_with_crossing: 0,
        skipped_on_node: 0,
        asserted,
        records: Vec::new(),
    };
    for (path, electrons, r) in outcomes {
        match r {
            Ok(crossings) => {
                if !crossings.is_empty() {
                    report.paths_with_crossing += 1;
                }
                report.records.push(PathRecord { path, electrons, crossings });
            }
            Err(ProbeError::EndpointOnNode) => report.skipped_on_node += 1,
            Err(e) => return Err(e),
        }
    }
    report.passed = !asserted || (report.skipped_on_node == 0 && report.paths_with_crossing == report.paths);
    Ok(report)
}

/// Exploratory: sign changes along linear three-cycle paths
/// `c -> sigma c` for three same-spin electrons. The endpoints have equal
/// sign, so no crossing is implied; counts are recorded only.
pub fn triple_exchange_suite<E: Executor>(
    model: &SortletModel,
    params: &ParamStore,
    paths: usize,
    resolution: usize,
    seed: u64,
    exec: &E,
) -> Result<NodeReport, ProbeError> {
    let s = &model.system;
    let blocks: Vec<(usize, usize)> = [(0, s.n_up()), (s.n_up(), s.n_electrons())]
        .into_iter()
        .filter(|(a, b)| b - a >= 3)
        .collect();
    if blocks.is_empty() {
        return Err(ProbeError::Precondition("needs three electrons of the same spin".into()));
    }
    let configs = random_configs(s, paths, seed);
    let outcomes = exec.map(paths, |p| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(p as u64);
        let (lo, hi) = blocks[rng.gen_range(0..blocks.len())];
        let mut picked: Vec<usize> = Vec::new();
        while picked.len() < 3 {
            let e = rng.gen_range(lo..hi);
            if !picked.contains(&e) {
                picked.push(e);
            }
        }
        let x = configs[p].clone();
        let mut target = x.clone();
        for k in 0..3 {
            let (from, to) = (picked[k], picked[(k + 1) % 3]);
            target[3 * to..3 * to + 3].copy_from_slice(&x[3 * from..3 * from + 3]);
        }
        let path = |t: f64| x.iter().zip(&target).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        (p, picked, path_crossings(model, &params.values, path, resolution))
    });
    collect_paths("triple-exchange", seed, outcomes, false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieRecord {
    pub kind: String,
    pub trial: usize,
    /// Location of the tie along the path.
    pub t: f64,
    pub left: f64,
    pub right: f64,
    /// Relative disagreement for single ties, derivative magnitude for
    /// double ties, relative error against autodiff for smooth points.
    pub measure: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub name: String,
    pub seed: u64,
    pub passed: bool,
    pub single_ties: usize,
    pub double_ties: usize,
    pub smooth_points: usize,
    pub failed_constructions: usize,
    pub records: Vec<TieRecord>,
}

/// Step sizes swept by the one-sided difference quotients.
pub const STEP_SWEEP: [f64; 7] = [1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 3e-6, 1e-6];

fn psi_ratio(model: &SortletModel, params: &ParamStore, x: &[f64], reference: f64) -> f64 {
    match model.log_psi::<f64>(&params.values, x) {
        Ok(v) if !v.is_zero() => v.sign as f64 * math::exp(v.logmag - reference),
        _ => 0.0,
    }
}

fn displaced(x: &[f64], dir: &[f64], t: f64) -> Vec<f64> {
    x.iter().zip(dir).map(|(a, d)| a + t * d).collect()
}

/// Locate a point where two adjacent scores of the first sortlet swap
/// order along `x + t dir`, `t` in `[-1, 1]`.
fn find_single_tie(model: &SortletModel, params: &ParamStore, x: &[f64], dir: &[f64]) -> Option<f64> {
    let perm_at = |t: f64| -> Option<Vec<usize>> {
        let c = model.system.configuration(displaced(x, dir, t)).ok()?;
        let s = model.scores(params, &c).ok()?;
        Some(evaluate_sortlet(s.row(0)).permutation)
    };
    let steps = 400;
    let mut prev = perm_at(-1.0)?;
    for k in 1..=steps {
        let t = -1.0 + 2.0 * k as f64 / steps as f64;
        let cur = perm_at(t)?;
        if cur != prev {
            let differing = cur.iter().zip(&prev).filter(|(a, b)| a != b).count();
            if differing != 2 {
                prev = cur;
                continue;
            }
            let (mut lo, mut hi) = (t - 2.0 / steps as f64, t);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if perm_at(mid)? == prev {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        prev = cur;
    }
    None
}

/// Directional derivative agreement across score ties, and vanishing
/// derivatives where two ties meet.
///
/// Single ties are found by bisection along random one-electron moves,
/// where two scores of the first sortlet trade places. Double ties are
/// built exactly: two same-spin pairs placed on top of each other have
/// bitwise equal scores, and the path separates both pairs at once.
pub fn smoothness_probe(model: &SortletModel, params: &ParamStore, trials: usize, seed: u64) -> SmoothnessReport {
    let system = &model.system;
    let n = system.n_electrons();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let configs = random_configs(system, trials, seed);
    let mut report = SmoothnessReport {
        name: "smoothness".into(),
        seed,
        passed: false,
        single_ties: 0,
        double_ties: 0,
        smooth_points: 0,
        failed_constructions: 0,
        records: Vec::new(),
    };

    for (trial, x) in configs.iter().enumerate() {
        // single tie along a one-electron move
        let e = rng.gen_range(0..n);
        let mut dir = vec![0.0; 3 * n];
        for d in 0..3 {
            dir[3 * e + d] = rng.sample::<f64, _>(StandardNormal);
        }
        match find_single_tie(model, params, x, &dir) {
            Some(t0) if n >= 2 => {
                let reference = model
                    .log_psi::<f64>(&params.values, &displaced(x, &dir, t0 + 1e-2))
                    .map(|v| v.logmag)
                    .unwrap_or(0.0);
                let f = |t: f64| psi_ratio(model, params, &displaced(x, &dir, t), reference);
                let mut best = (f64::INFINITY, 0.0, 0.0);
                for h in STEP_SWEEP {
                    let left = fd::one_sided_derivative(f, t0, h, -1.0);
                    let right = fd::one_sided_derivative(f, t0, h, 1.0);
                    let rel = (left - right).abs() / left.abs().max(right.abs()).max(1e-300);
                    if rel < best.0 {
                        best = (rel, left, right);
                    }
                }
                report.single_ties += 1;
                report.records.push(TieRecord {
                    kind: "single".into(),
                    trial,
                    t: t0,
                    left: best.1,
                    right: best.2,
                    measure: best.0,
                    ok: best.0 < 1e-5,
                });
            }
            _ => report.failed_constructions += 1,
        }

        // smooth point: autodiff against central differences of ln|psi|
        let dir_ad = dir.clone();
        let along = AlongPath { model, params, x, dir: &dir_ad };
        if let (Ok(g), true) = (grad_positions(&along, &[0.0]), along.eval::<f64>(&[0.0]).is_ok()) {
            let fdv = fd::central_gradient(|t| along.eval::<f64>(t).unwrap_or(f64::NAN), &[0.0], 1e-5)[0];
            let rel = (g[0] - fdv).abs() / g[0].abs().max(1e-3);
            report.smooth_points += 1;
            report.records.push(TieRecord {
                kind: "smooth".into(),
                trial,
                t: 0.0,
                left: g[0],
                right: fdv,
                measure: rel,
                ok: rel < 1e-5,
            });
        }

        // double tie: two coincident same-spin pairs separated together
        let pairs = disjoint_same_spin_pairs(system);
        if pairs.len() < 2 {
            report.failed_constructions += 1;
            continue;
        }
        let mut base = x.clone();
        let mut dir2 = vec![0.0; 3 * n];
        for &(i, j) in &pairs[..2] {
            for d in 0..3 {
                base[3 * j + d] = base[3 * i + d];
                let v: f64 = rng.sample(StandardNormal);
                dir2[3 * i + d] = v;
                dir2[3 * j + d] = -v;
            }
        }
        let reference = model
            .log_psi::<f64>(&params.values, &displaced(&base, &dir2, 0.1))
            .map(|v| v.logmag)
            .unwrap_or(0.0);
        let f = |t: f64| psi_ratio(model, params, &displaced(&base, &dir2, t), reference);
        let (mut measure, mut left, mut right) = (f64::INFINITY, 0.0, 0.0);
        for h in STEP_SWEEP {
            let (l, r) = (fd::one_sided_derivative(f, 0.0, h, -1.0), fd::one_sided_derivative(f, 0.0, h, 1.0));
            if l.abs().max(r.abs()) < measure {
                (measure, left, right) = (l.abs().max(r.abs()), l, r);
            }
        }
        report.double_ties += 1;
        report.records.push(TieRecord {
            kind: "double".into(),
            trial,
            t: 0.0,
            left,
            right,
            measure,
            ok: f(0.0) == 0.0 && measure < 1e-8,
        });
    }
    report.passed = report.single_ties > 0 && report.records.iter().all(|r| r.ok);
    report
}

fn disjoint_same_spin_pairs(system: &SystemSpec) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (lo, hi) in [(0, system.n_up()), (system.n_up(), system.n_electrons())] {
        let mut k = lo;
        while k + 1 < hi {
            out.push((k, k + 1));
            k += 2;
        }
    }
    out
}

/// `t -> ln|psi(x + t dir)|`
struct AlongPath<'a> {
    model: &'a SortletModel,
    params: &'a ParamStore,
    x: &'a [f64],
    dir: &'a [f64],
}

impl PositionFn for AlongPath<'_> {
    fn eval<S: Scalar<Param = f64>>(&self, t: &[S]) -> Result<S, EvalError> {
        let y: Vec<S> = self.x.iter().zip(self.dir).map(|(&a, &d)| S::cst(a) + t[0].scale(d)).collect();
        let v: SignedLog<S> = self.model.log_psi::<S>(&self.params.values, &y)?;
        if v.is_zero() {
            return Err(EvalError::Node);
        }
        Ok(v.logmag)
    }
}

/// Eigenvalues (ascending) and eigenvectors (columns, row-major `n x n`)
/// of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i * n + j] * m[i * n + j]).sum();
        let scale: f64 = m.iter().map(|x| x * x).sum();
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + math::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / math::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k * n + col] = v[k * n + src];
        }
    }
    (values, vectors)
}

/// `v^T H v / v^T v`
pub fn rayleigh_quotient(h: &[f64], n: usize, v: &[f64]) -> f64 {
    let mut num = 0.0;
    for i in 0..n {
        let row: f64 = (0..n).map(|j| h[i * n + j] * v[j]).sum();
        num += v[i] * row;
    }
    num / v.iter().map(|x| x * x).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalReport {
    pub name: String,
    pub seed: u64,
    pub passed: bool,
    pub dim: usize,
    pub lambda_min: f64,
    pub quotient_at_ground_state: f64,
    pub min_quotient_drawn: f64,
    pub draws: usize,
    pub violations: usize,
}

/// The Rayleigh quotient of a random symmetric matrix never drops below
/// its smallest eigenvalue and attains it at the eigenvector.
pub fn variational_floor_check(dim: usize, draws: usize, seed: u64) -> Result<VariationalReport, ProbeError> {
    if dim == 0 || dim > 200 {
        return Err(ProbeError::Precondition("dimension must be in 1..=200".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let x: f64 = rng.sample(StandardNormal);
            h[i * dim + j] = x;
            h[j * dim + i] = x;
        }
    }
    Ok(variational_floor_for(&h, dim, draws, seed, &mut rng))
}

pub fn variational_floor_for(h: &[f64], dim: usize, draws: usize, seed: u64, rng: &mut ChaCha8Rng) -> VariationalReport {
    let (values, vectors) = symmetric_eigen(h, dim);
    let lambda = values[0];
    let ground: Vec<f64> = (0..dim).map(|k| vectors[k * dim]).collect();
    let at_ground = rayleigh_quotient(h, dim, &ground);
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut min_drawn = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..draws {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let r = rayleigh_quotient(h, dim, &v);
        min_drawn = min_drawn.min(r);
        if r < lambda - 1e-12 * scale {
            violations += 1;
        }
    }
    VariationalReport {
        name: "variational".into(),
        seed,
        passed: violations == 0 && (at_ground - lambda).abs() < 1e-10 * scale,
        dim,
        lambda_min: lambda,
        quotient_at_ground_state: at_ground,
        min_quotient_drawn: min_drawn,
        draws,
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub name: String,
    pub seed: u64,
    pub passed: bool,
    pub theta: Vec<f64>,
    pub samples: usize,
    pub estimator: Vec<f64>,
    pub finite_difference: Vec<f64>,
    pub max_relative_error: f64,
    /// The same comparison with the baseline term doubled, for contrast.
    pub doubled_baseline_error: f64,
}

/// Score-function gradient on stratified draws from `psi^2` against
/// central differences (`h = 1e-4`) of the quadrature Rayleigh quotient.
pub fn gradcheck<E: Executor>(toy: &Toy1d, theta: &[f64], samples: usize, exec: &E) -> Result<GradcheckReport, ProbeError> {
    let xs = toy.quantile_samples(theta, samples);
    let configs: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
    let refs: Vec<&[f64]> = configs.iter().map(|c| c.as_slice()).collect();
    let est = energy_gradient(toy, theta, &refs, None, exec).map_err(|e| ProbeError::Precondition(format!("{e}")))?;
    let fdg = fd::central_gradient(|t| toy.rayleigh_quotient(t), theta, 1e-4);
    let rel = |a: &[f64]| a.iter().zip(&fdg).map(|(g, f)| (g - f).abs() / f.abs().max(1e-12)).fold(0.0, f64::max);
    let max_relative_error = rel(&est.gradient);

    // (2/n) sum (E_i - 2 mean) grad_i = covariance form - 2 mean <grad>
    let mean_e = est.energy.mean;
    let mut mean_grad = vec![0.0; theta.len()];
    for x in &refs {
        let g = crate::optimizer::grad_log_psi(toy, theta, x).map_err(ProbeError::Eval)?;
        for (m, gi) in mean_grad.iter_mut().zip(g) {
            *m += gi / refs.len() as f64;
        }
    }
    let doubled: Vec<f64> = est.gradient.iter().zip(&mean_grad).map(|(g, m)| g - 2.0 * mean_e * m).collect();
    let doubled_baseline_error = rel(&doubled);

    Ok(GradcheckReport {
        name: "gradcheck".into(),
        seed: 0,
        passed: max_relative_error < 1e-3,
        theta: theta.to_vec(),
        samples,
        estimator: est.gradient,
        finite_difference: fdg,
        max_relative_error,
        doubled_baseline_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backbone::{Antisymmetrizer, ModelConfig};
    use crate::exec::Serial;

    fn model(z: u32, kind: Antisymmetrizer, k: usize) -> SortletModel {
        SortletModel::new(SystemSpec::atom(z).unwrap(), ModelConfig { kind, hidden: 8, layers: 2, sortlets: k })
    }

    #[test]
    fn antisymmetry_holds_on_lithium() {
        let m = model(3, Antisymmetrizer::Sortlet, 4);
        let r = antisymmetry_suite(&m, |s| m.init(s), 200, 1, &Serial).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.opposite_spin_same_sign > 0 && r.opposite_spin_flipped_sign > 0);
        let v = model(4, Antisymmetrizer::Vandermonde, 2);
        assert!(antisymmetry_suite(&v, |s| v.init(s), 100, 2, &Serial).unwrap().passed);
    }

    #[test]
    fn antisymmetry_needs_a_same_spin_pair() {
        let m = model(2, Antisymmetrizer::Sortlet, 2);
        assert!(matches!(antisymmetry_suite(&m, |s| m.init(s), 10, 1, &Serial), Err(ProbeError::Precondition(_))));
    }

    #[test]
    fn single_sortlet_paths_cross_a_node() {
        let m = model(4, Antisymmetrizer::Sortlet, 1);
        let r = node_crossing_suite(&m, |s| m.init(s), 20, 101, 3, &Serial).unwrap();
        assert!(r.passed, "{r:?}");
        for rec in &r.records {
            // the crossing location is resolved well inside the path
            assert!(rec.crossings.iter().all(|&t| t > 0.0 && t < 1.0));
        }
    }

    #[test]
    fn identity_path_is_rejected() {
        let m = model(4, Antisymmetrizer::Sortlet, 1);
        let p = m.init(0);
        let c = m.system.configuration(random_configs(&m.system, 1, 0).remove(0)).unwrap();
        assert!(matches!(node_crossing_probe(&m, &p.values, &c, 1, 1, 100), Err(ProbeError::Precondition(_))));
        assert!(matches!(node_crossing_probe(&m, &p.values, &c, 0, 1, 50), Err(ProbeError::Precondition(_))));
        assert!(matches!(node_crossing_probe(&m, &p.values, &c, 0, 2, 100), Err(ProbeError::Precondition(_))));
    }

    #[test]
    fn triple_exchange_is_recorded_without_verdict() {
        let m = model(5, Antisymmetrizer::Sortlet, 4);
        let r = triple_exchange_suite(&m, &m.init(1), 5, 100, 4, &Serial).unwrap();
        assert!(r.passed && !r.asserted);
        assert_eq!(r.paths, 5);
    }

    #[test]
    fn smoothness_across_ties() {
        let m = model(4, Antisymmetrizer::Sortlet, 1);
        let r = smoothness_probe(&m, &m.init(5), 4, 9);
        assert!(r.single_ties > 0 && r.double_ties > 0, "{r:?}");
        assert!(r.passed, "{r:#?}");
    }

    #[test]
    fn diagonal_floor() {
        let h = [1.0, 0.0, 0.0, 3.0];
        let (vals, vecs) = symmetric_eigen(&h, 2);
        assert_eq!(vals, vec![1.0, 3.0]);
        assert_eq!(vecs[0].abs(), 1.0);
        assert_eq!(rayleigh_quotient(&h, 2, &[1.0, 0.0]), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(variational_floor_for(&h, 2, 1000, 0, &mut rng).passed);
    }

    #[test]
    fn eigen_solver_matches_nalgebra() {
        let n = 30;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.gen_range(-1.0..1.0);
                h[i * n + j] = x;
                h[j * n + i] = x;
            }
        }
        let (vals, _) = symmetric_eigen(&h, n);
        let m = nalgebra::DMatrix::from_row_slice(n, n, &h);
        let mut want: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in vals.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn random_floor_has_no_violations() {
        let r = variational_floor_check(50, 10_000, 3).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.min_quotient_drawn >= r.lambda_min);
        assert!(variational_floor_check(201, 1, 0).is_err());
    }

    #[test]
    fn gradcheck_adjudicates_the_baseline_factor() {
        let r = gradcheck(&Toy1d::default(), &[0.45, 0.03, 0.2], 200_000, &Serial).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.doubled_baseline_error > 0.1);
    }
}
