//! Energy estimation, the score-function gradient and the training loop.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::autodiff::{value_and_grad_params, ParamFn, Scalar};
use crate::error::EvalError;
use crate::exec::Executor;
use crate::hamiltonian::local_energy;
use crate::math;
use crate::sampler::{EnsembleState, WalkerEnsemble};
use crate::wavefunction::WaveFunction;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("{failed} of {total} local-energy evaluations failed (first: {first})")]
    TooManyFailures { failed: usize, total: usize, first: EvalError },
    #[error("non-finite gradient or parameters at iteration {iteration}")]
    NonFinite { iteration: u64 },
    #[error("state does not match the model: {0}")]
    Mismatch(&'static str),
}

/// Fraction of failed evaluations in one batch that aborts a run.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyStats {
    pub mean: f64,
    pub variance: f64,
    /// `sqrt(variance / n_samples)`
    pub stderr: f64,
    pub n_samples: usize,
}

impl EnergyStats {
    /// Mean and unbiased variance of independent samples.
    pub fn from_samples(x: &[f64]) -> Self {
        let n = x.len();
        if n == 0 {
            return Self { mean: f64::NAN, variance: f64::NAN, stderr: f64::NAN, n_samples: 0 };
        }
        let mean = x.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 { x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        Self { mean, variance, stderr: math::sqrt(variance / n as f64), n_samples: n }
    }

    /// Reported confidence radius, three standard errors.
    pub fn confidence(&self) -> f64 {
        3.0 * self.stderr
    }
}

/// Clip to `mean +- width * (mean absolute deviation)`.
pub fn clip_local_energies(e: &[f64], width: f64) -> Vec<f64> {
    if e.is_empty() {
        return Vec::new();
    }
    let n = e.len() as f64;
    let mean = e.iter().sum::<f64>() / n;
    let mad = e.iter().map(|v| (v - mean).abs()).sum::<f64>() / n;
    let (lo, hi) = (mean - width * mad, mean + width * mad);
    e.iter().map(|v| v.clamp(lo, hi)).collect()
}

/// `g = (2/n) sum_i (E_i - mean(E)) grad_i`, the covariance between local
/// energy and `grad_theta ln|psi|`.
pub fn covariance_gradient(e_loc: &[f64], grad_log_psi: &[Vec<f64>]) -> Result<Vec<f64>, TrainError> {
    let n = e_loc.len();
    if n == 0 || grad_log_psi.len() != n {
        return Err(TrainError::EmptyBatch);
    }
    let mean = e_loc.iter().sum::<f64>() / n as f64;
    let mut g = vec![0.0; grad_log_psi[0].len()];
    for (e, gi) in e_loc.iter().zip(grad_log_psi) {
        let c = e - mean;
        for (acc, d) in g.iter_mut().zip(gi) {
            *acc += c * d;
        }
    }
    let scale = 2.0 / n as f64;
    g.iter_mut().for_each(|v| *v *= scale);
    Ok(g)
}

struct LogPsiOfParams<'a, W> {
    wf: &'a W,
    x: &'a [f64],
}

impl<W: WaveFunction> ParamFn for LogPsiOfParams<'_, W> {
    fn eval<S: Scalar>(&self, theta: &[S::Param]) -> Result<S, EvalError> {
        let x: Vec<S> = self.x.iter().map(|&v| S::cst(v)).collect();
        let v = self.wf.log_psi::<S>(theta, &x)?;
        if v.is_zero() {
            return Err(EvalError::Node);
        }
        Ok(v.logmag)
    }
}

/// `grad_theta ln|psi(x)|`
pub fn grad_log_psi<W: WaveFunction>(wf: &W, params: &[f64], x: &[f64]) -> Result<Vec<f64>, EvalError> {
    value_and_grad_params(&LogPsiOfParams { wf, x }, params).map(|(_, g)| g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub gradient: Vec<f64>,
    /// Statistics of the unclipped local energies.
    pub energy: EnergyStats,
    pub failures: usize,
}

/// Local energies of a batch, failing if more than 10% cannot be evaluated.
pub fn batch_local_energies<W: WaveFunction, E: Executor>(
    wf: &W,
    params: &[f64],
    configs: &[&[f64]],
    exec: &E,
) -> Result<(Vec<Option<f64>>, usize), TrainError> {
    let results = exec.map(configs.len(), |i| local_energy(wf, params, configs[i]).map(|e| e.total));
    check_failures(&results)?;
    let failed = results.iter().filter(|r| r.is_err()).count();
    Ok((results.into_iter().map(Result::ok).collect(), failed))
}

fn check_failures<T>(results: &[Result<T, EvalError>]) -> Result<(), TrainError> {
    if results.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let failed = results.iter().filter(|r| r.is_err()).count();
    if failed as f64 > MAX_FAILURE_FRACTION * results.len() as f64 {
        let first = results.iter().find_map(|r| r.as_ref().err().copied()).unwrap_or(EvalError::NonFinite);
        return Err(TrainError::TooManyFailures { failed, total: results.len(), first });
    }
    Ok(())
}

/// Score-function estimate of `grad E` from configurations drawn from
/// `|psi|^2`. With `clip = Some(w)` the local energies entering the
/// gradient are clipped to `w` mean absolute deviations. Configurations
/// whose local energy or gradient cannot be evaluated are dropped.
pub fn energy_gradient<W: WaveFunction, E: Executor>(
    wf: &W,
    params: &[f64],
    configs: &[&[f64]],
    clip: Option<f64>,
    exec: &E,
) -> Result<GradientEstimate, TrainError> {
    let results = exec.map(configs.len(), |i| {
        let e = local_energy(wf, params, configs[i])?.total;
        let g = grad_log_psi(wf, params, configs[i])?;
        Ok((e, g))
    });
    check_failures(&results)?;
    let failures = results.iter().filter(|r| r.is_err()).count();
    let (e_loc, grads): (Vec<f64>, Vec<Vec<f64>>) = results.into_iter().filter_map(Result::ok).unzip();
    let energy = EnergyStats::from_samples(&e_loc);
    let used = match clip {
        Some(w) => clip_local_energies(&e_loc, w),
        None => e_loc,
    };
    let gradient = covariance_gradient(&used, &grads)?;
    Ok(GradientEstimate { gradient, energy, failures })
}

/// Pooled local-energy statistics over `n_steps` sweeps, sampling after
/// every `thinning` Metropolis steps.
pub fn estimate_energy<W: WaveFunction, E: Executor>(
    wf: &W,
    params: &[f64],
    ensemble: &mut WalkerEnsemble,
    n_steps: usize,
    thinning: usize,
    exec: &E,
) -> Result<EnergyStats, TrainError> {
    let mut all = Vec::new();
    for _ in 0..n_steps {
        for _ in 0..thinning.max(1) {
            ensemble.mh_step(wf, params, exec);
        }
        let configs: Vec<&[f64]> = ensemble.coords().collect();
        let (e, _) = batch_local_energies(wf, params, &configs, exec)?;
        all.extend(e.into_iter().flatten());
    }
    Ok(EnergyStats::from_samples(&all))
}

/// Independent estimates, each the walker average of one sweep, separated
/// by `spacing` Metropolis steps. The statistics are over the estimates.
pub fn batch_estimates<W: WaveFunction, E: Executor>(
    wf: &W,
    params: &[f64],
    ensemble: &mut WalkerEnsemble,
    n_estimates: usize,
    spacing: usize,
    exec: &E,
) -> Result<(EnergyStats, Vec<f64>), TrainError> {
    let mut means = Vec::with_capacity(n_estimates);
    for _ in 0..n_estimates {
        for _ in 0..spacing.max(1) {
            ensemble.mh_step(wf, params, exec);
        }
        let configs: Vec<&[f64]> = ensemble.coords().collect();
        let (e, _) = batch_local_energies(wf, params, &configs, exec)?;
        let ok: Vec<f64> = e.into_iter().flatten().collect();
        means.push(ok.iter().sum::<f64>() / ok.len() as f64);
    }
    Ok((EnergyStats::from_samples(&means), means))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Learning rate at step `t` is `lr / (1 + t / decay)`; `0` disables.
    pub decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, decay: 10_000.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, n: usize) -> Self {
        Self { config, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn learning_rate(&self) -> f64 {
        let c = &self.config;
        if c.decay > 0.0 {
            c.lr / (1.0 + self.t as f64 / c.decay)
        } else {
            c.lr
        }
    }

    /// The parameter step for gradient `g`, advancing the moment estimates.
    pub fn step(&mut self, g: &[f64]) -> Vec<f64> {
        let lr = self.learning_rate();
        self.t += 1;
        let c = self.config;
        let b1t = 1.0 - libm::pow(c.beta1, self.t as f64);
        let b2t = 1.0 - libm::pow(c.beta2, self.t as f64);
        g.iter()
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
            .map(|(&gi, (m, v))| {
                *m = c.beta1 * *m + (1.0 - c.beta1) * gi;
                *v = c.beta2 * *v + (1.0 - c.beta2) * gi * gi;
                -lr * (*m / b1t) / (math::sqrt(*v / b2t) + c.eps)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub iterations: u64,
    pub walkers: usize,
    /// Metropolis sweeps between gradient evaluations.
    pub sweeps: usize,
    pub burn_in: usize,
    /// Sweeps per step-size adaptation window.
    pub adapt_window: usize,
    /// Clip width in mean absolute deviations; `0` disables clipping.
    pub clip: f64,
    pub checkpoint_every: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            walkers: 512,
            sweeps: 10,
            burn_in: crate::sampler::BURN_IN_STEPS,
            adapt_window: 10,
            clip: 5.0,
            checkpoint_every: 1000,
            adam: AdamConfig::default(),
        }
    }
}

/// One line of the metrics stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u64,
    pub energy: f64,
    pub stderr: f64,
    pub variance: f64,
    pub acceptance: f64,
    pub step_size: f64,
    pub grad_norm: f64,
}

/// Everything needed to continue a run bitwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerState {
    pub iteration: u64,
    pub params: Vec<f64>,
    pub adam: Adam,
    pub ensemble: EnsembleState,
}

#[derive(Debug)]
pub struct Trainer<'w, W> {
    pub wf: &'w W,
    pub config: TrainConfig,
    pub params: Vec<f64>,
    pub adam: Adam,
    pub ensemble: WalkerEnsemble,
    pub iteration: u64,
}

impl<'w, W: WaveFunction> Trainer<'w, W> {
    /// Start from `params` with an equilibrated ensemble.
    pub fn new<E: Executor>(wf: &'w W, config: TrainConfig, params: Vec<f64>, mut ensemble: WalkerEnsemble, exec: &E) -> Self {
        ensemble.refresh(wf, &params, exec);
        ensemble.burn_in(wf, &params, config.burn_in, config.adapt_window, exec);
        let adam = Adam::new(config.adam, params.len());
        Self { wf, config, params, adam, ensemble, iteration: 0 }
    }

    pub fn from_state<E: Executor>(wf: &'w W, config: TrainConfig, state: TrainerState, exec: &E) -> Result<Self, TrainError> {
        if state.params.len() != wf.n_params() || state.adam.m.len() != wf.n_params() {
            return Err(TrainError::Mismatch("parameter count"));
        }
        if state.ensemble.coords.iter().any(|x| x.len() != wf.n_coords()) {
            return Err(TrainError::Mismatch("walker dimension"));
        }
        let mut ensemble = WalkerEnsemble::from_state(&state.ensemble);
        ensemble.refresh(wf, &state.params, exec);
        let mut adam = state.adam;
        adam.config = config.adam;
        Ok(Self { wf, config, params: state.params, adam, ensemble, iteration: state.iteration })
    }

    pub fn state(&self) -> TrainerState {
        TrainerState {
            iteration: self.iteration,
            params: self.params.clone(),
            adam: self.adam.clone(),
            ensemble: self.ensemble.state(),
        }
    }

    /// Sweeps, gradient, Adam update. On error the parameters are left at
    /// their last good values.
    pub fn step<E: Executor>(&mut self, exec: &E) -> Result<IterationRecord, TrainError> {
        let mut accepted = 0.0;
        for _ in 0..self.config.sweeps.max(1) {
            accepted += self.ensemble.mh_step(self.wf, &self.params, exec);
        }
        let acceptance = accepted / self.config.sweeps.max(1) as f64;
        if self.config.adapt_window > 0 {
            self.ensemble.adapt_step();
        }
        let configs: Vec<&[f64]> = self.ensemble.coords().collect();
        let clip = (self.config.clip > 0.0).then_some(self.config.clip);
        let est = energy_gradient(self.wf, &self.params, &configs, clip, exec)?;
        let grad_norm = math::sqrt(est.gradient.iter().map(|g| g * g).sum());
        if !grad_norm.is_finite() {
            return Err(TrainError::NonFinite { iteration: self.iteration });
        }
        let mut adam = self.adam.clone();
        let delta = adam.step(&est.gradient);
        let next: Vec<f64> = self.params.iter().zip(&delta).map(|(p, d)| p + d).collect();
        if next.iter().any(|p| !p.is_finite()) {
            return Err(TrainError::NonFinite { iteration: self.iteration });
        }
        self.params = next;
        self.adam = adam;
        self.ensemble.refresh(self.wf, &self.params, exec);
        self.iteration += 1;
        Ok(IterationRecord {
            iteration: self.iteration,
            energy: est.energy.mean,
            stderr: est.energy.stderr,
            variance: est.energy.variance,
            acceptance,
            step_size: self.ensemble.step_size,
            grad_norm,
        })
    }

    /// Run until `config.iterations`, passing every record to `observe`,
    /// which may stop the run early by returning `false`.
    pub fn run<E: Executor>(
        &mut self,
        exec: &E,
        mut observe: impl FnMut(&Self, &IterationRecord) -> bool,
    ) -> Result<(), TrainError> {
        while self.iteration < self.config.iterations {
            let rec = self.step(exec)?;
            if !observe(self, &rec) {
                break;
            }
        }
        Ok(())
    }
}

/// Means of consecutive non-overlapping windows, with the standard error
/// of each window mean.
pub fn window_means(x: &[f64], window: usize) -> Vec<(f64, f64)> {
    x.chunks_exact(window.max(1))
        .map(|c| {
            let s = EnergyStats::from_samples(c);
            (s.mean, s.stderr)
        })
        .collect()
}

/// Whether windowed means never rise by more than `tolerance` combined
/// standard errors from one window to the next.
pub fn is_smoothed_descent(x: &[f64], window: usize, tolerance: f64) -> bool {
    window_means(x, window).windows(2).all(|w| {
        let noise = math::sqrt(w[0].1 * w[0].1 + w[1].1 * w[1].1);
        w[1].0 <= w[0].0 + tolerance * noise
    })
}
