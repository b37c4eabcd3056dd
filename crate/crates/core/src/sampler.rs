//! Metropolis-Hastings random walk over `|psi|^2`.
//!
//! Every chain owns a ChaCha8 stream (`seed`, stream = chain index), so the
//! result of a step does not depend on which thread ran which chain.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ansatz::SignedLog;
use crate::exec::Executor;
use crate::geometry::SystemSpec;
use crate::math;
use crate::wavefunction::WaveFunction;

/// Default number of equilibration sweeps.
pub const BURN_IN_STEPS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proposal {
    /// Move all electrons at once.
    #[default]
    AllElectron,
    /// Sweep through the electrons, moving one at a time.
    SingleElectron,
}

/// Serializable position of a ChaCha8 stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    /// Word position split into high and low halves.
    pub word_pos: [u64; 2],
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        let w = rng.get_word_pos();
        Self { seed: rng.get_seed(), stream: rng.get_stream(), word_pos: [(w >> 64) as u64, w as u64] }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(((self.word_pos[0] as u128) << 64) | self.word_pos[1] as u128);
        rng
    }
}

/// Per-chain RNG: `seed` expanded by ChaCha, one stream per chain.
pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

#[derive(Debug, Clone)]
pub struct Walker {
    pub coords: Vec<f64>,
    /// `psi` at `coords` for the parameters of the last refresh.
    pub psi: SignedLog,
    pub rng: ChaCha8Rng,
    pub accepted: u64,
    pub proposed: u64,
    pub failures: u64,
}

/// Metropolis acceptance for a symmetric proposal: accept iff
/// `u < |psi_new / psi_old|^2`. Nodes and failed evaluations never pass.
pub fn metropolis_accept(old: &SignedLog, new: &SignedLog, u: f64) -> bool {
    if new.is_zero() || !new.logmag.is_finite() {
        return false;
    }
    if old.is_zero() {
        return true;
    }
    let log_ratio = 2.0 * (new.logmag - old.logmag);
    log_ratio >= 0.0 || math::ln(u) < log_ratio
}

impl Walker {
    fn fresh(coords: Vec<f64>, rng: ChaCha8Rng) -> Self {
        Self { coords, psi: SignedLog::zero(), rng, accepted: 0, proposed: 0, failures: 0 }
    }

    fn evaluate<W: WaveFunction>(wf: &W, params: &[f64], x: &[f64]) -> Option<SignedLog> {
        match wf.log_psi::<f64>(params, x) {
            Ok(v) if !v.is_zero() && v.logmag.is_finite() => Some(v),
            _ => None,
        }
    }

    fn try_move<W: WaveFunction>(&mut self, wf: &W, params: &[f64], proposal: &[f64]) {
        self.proposed += 1;
        let u: f64 = self.rng.gen();
        match Self::evaluate(wf, params, proposal) {
            Some(v) if metropolis_accept(&self.psi, &v, u) => {
                self.coords.copy_from_slice(proposal);
                self.psi = v;
                self.accepted += 1;
            }
            Some(_) => {}
            None => self.failures += 1,
        }
    }

    fn step<W: WaveFunction>(&mut self, wf: &W, params: &[f64], sigma: f64, kind: Proposal, scratch: &mut Vec<f64>) {
        match kind {
            Proposal::AllElectron => {
                scratch.clear();
                for k in 0..self.coords.len() {
                    let z: f64 = self.rng.sample(StandardNormal);
                    scratch.push(self.coords[k] + sigma * z);
                }
                self.try_move(wf, params, scratch);
            }
            Proposal::SingleElectron => {
                for e in 0..self.coords.len().div_ceil(3) {
                    scratch.clear();
                    scratch.extend_from_slice(&self.coords);
                    for k in 3 * e..(3 * e + 3).min(scratch.len()) {
                        let z: f64 = self.rng.sample(StandardNormal);
                        scratch[k] += sigma * z;
                    }
                    self.try_move(wf, params, scratch);
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct WalkerEnsemble {
    pub walkers: Vec<Walker>,
    pub step_size: f64,
    pub proposal: Proposal,
    /// Step-size adaptation is switched off after burn-in.
    pub adapting: bool,
    window_accepted: u64,
    window_proposed: u64,
}

/// Serializable snapshot of an ensemble, for checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleState {
    pub coords: Vec<Vec<f64>>,
    pub rngs: Vec<RngState>,
    pub counters: Vec<[u64; 3]>,
    pub step_size: f64,
    pub proposal: Proposal,
    pub adapting: bool,
    pub window: [u64; 2],
}

/// Nucleus index for each electron: nuclei are filled up to their charge
/// in turn, with electrons taken alternately from the up and down blocks so
/// both spins share the heavy centres.
fn electron_sites(system: &SystemSpec) -> Vec<usize> {
    let nuclei = system.nuclei();
    let n = system.n_electrons();
    let mut slots = Vec::with_capacity(n);
    while slots.len() < n {
        let mut remaining: Vec<u32> = nuclei.iter().map(|nuc| nuc.charge).collect();
        let start = slots.len();
        while slots.len() < n && remaining.iter().any(|&r| r > 0) {
            for (i, r) in remaining.iter_mut().enumerate() {
                if *r > 0 && slots.len() < n {
                    slots.push(i);
                    *r -= 1;
                }
            }
        }
        if slots.len() == start {
            break;
        }
    }
    let (n_up, n_down) = (system.n_up(), system.n_down());
    let mut sites = alloc::vec![0; n];
    let (mut u, mut d) = (0, 0);
    for slot in slots {
        if (u <= d && u < n_up) || d >= n_down {
            sites[u] = slot;
            u += 1;
        } else {
            sites[n_up + d] = slot;
            d += 1;
        }
    }
    sites
}

impl WalkerEnsemble {
    /// `m` chains with electrons scattered around their assigned nuclei by
    /// unit Gaussian noise. Cached values are unset until [`Self::refresh`].
    pub fn new(system: &SystemSpec, m: usize, seed: u64) -> Self {
        let sites = electron_sites(system);
        let walkers = (0..m)
            .map(|chain| {
                let mut rng = chain_rng(seed, chain as u64);
                let mut x = Vec::with_capacity(3 * sites.len());
                for &site in &sites {
                    for c in system.nuclei()[site].position {
                        let z: f64 = rng.sample(StandardNormal);
                        x.push(c + z);
                    }
                }
                Walker::fresh(x, rng)
            })
            .collect();
        Self::with_walkers(walkers)
    }

    /// Chains starting at the given points.
    pub fn from_coords(coords: Vec<Vec<f64>>, seed: u64) -> Self {
        let walkers = coords
            .into_iter()
            .enumerate()
            .map(|(chain, x)| Walker::fresh(x, chain_rng(seed, chain as u64)))
            .collect();
        Self::with_walkers(walkers)
    }

    fn with_walkers(walkers: Vec<Walker>) -> Self {
        Self { walkers, step_size: 0.5, proposal: Proposal::AllElectron, adapting: true, window_accepted: 0, window_proposed: 0 }
    }

    pub fn len(&self) -> usize {
        self.walkers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walkers.is_empty()
    }

    pub fn coords(&self) -> impl Iterator<Item = &[f64]> {
        self.walkers.iter().map(|w| w.coords.as_slice())
    }

    /// Recompute every cached `psi`, e.g. after a parameter update.
    /// Returns the number of chains sitting at a node or failing to evaluate.
    pub fn refresh<W: WaveFunction, E: Executor>(&mut self, wf: &W, params: &[f64], exec: &E) -> usize {
        exec.for_each_mut(&mut self.walkers, |_, w| {
            w.psi = Walker::evaluate(wf, params, &w.coords).unwrap_or_else(SignedLog::zero);
        });
        self.walkers.iter().filter(|w| w.psi.is_zero()).count()
    }

    /// One Metropolis sweep of every chain; returns the acceptance fraction
    /// of this sweep.
    pub fn mh_step<W: WaveFunction, E: Executor>(&mut self, wf: &W, params: &[f64], exec: &E) -> f64 {
        let before: (u64, u64) = self.totals();
        let (sigma, kind) = (self.step_size, self.proposal);
        exec.for_each_mut(&mut self.walkers, |_, w| {
            let mut scratch = Vec::with_capacity(w.coords.len());
            w.step(wf, params, sigma, kind, &mut scratch);
        });
        let after = self.totals();
        let (acc, prop) = (after.0 - before.0, after.1 - before.1);
        self.window_accepted += acc;
        self.window_proposed += prop;
        if prop == 0 {
            0.0
        } else {
            acc as f64 / prop as f64
        }
    }

    fn totals(&self) -> (u64, u64) {
        self.walkers.iter().fold((0, 0), |(a, p), w| (a + w.accepted, p + w.proposed))
    }

    /// Acceptance over every step since construction.
    pub fn acceptance_rate(&self) -> f64 {
        let (a, p) = self.totals();
        if p == 0 {
            0.0
        } else {
            a as f64 / p as f64
        }
    }

    /// Acceptance since the last adaptation.
    pub fn window_rate(&self) -> f64 {
        if self.window_proposed == 0 {
            0.0
        } else {
            self.window_accepted as f64 / self.window_proposed as f64
        }
    }

    pub fn failures(&self) -> u64 {
        self.walkers.iter().map(|w| w.failures).sum()
    }

    /// Multiply the step size by 1.1 above 55% acceptance, divide below 45%,
    /// then start a new window. Does nothing once frozen.
    pub fn adapt_step(&mut self) -> f64 {
        if self.adapting && self.window_proposed > 0 {
            let rate = self.window_rate();
            if rate > 0.55 {
                self.step_size *= 1.1;
            } else if rate < 0.45 {
                self.step_size /= 1.1;
            }
        }
        self.window_accepted = 0;
        self.window_proposed = 0;
        self.step_size
    }

    pub fn freeze(&mut self) {
        self.adapting = false;
    }

    /// `steps` sweeps, adapting the step size every `window` sweeps.
    pub fn burn_in<W: WaveFunction, E: Executor>(&mut self, wf: &W, params: &[f64], steps: usize, window: usize, exec: &E) {
        for s in 0..steps {
            self.mh_step(wf, params, exec);
            if window > 0 && (s + 1) % window == 0 {
                self.adapt_step();
            }
        }
    }

    pub fn state(&self) -> EnsembleState {
        EnsembleState {
            coords: self.walkers.iter().map(|w| w.coords.clone()).collect(),
            rngs: self.walkers.iter().map(|w| RngState::capture(&w.rng)).collect(),
            counters: self.walkers.iter().map(|w| [w.accepted, w.proposed, w.failures]).collect(),
            step_size: self.step_size,
            proposal: self.proposal,
            adapting: self.adapting,
            window: [self.window_accepted, self.window_proposed],
        }
    }

    /// Rebuild from a snapshot; cached values need a [`Self::refresh`].
    pub fn from_state(s: &EnsembleState) -> Self {
        let walkers = s
            .coords
            .iter()
            .zip(&s.rngs)
            .zip(&s.counters)
            .map(|((x, r), c)| Walker {
                coords: x.clone(),
                psi: SignedLog::zero(),
                rng: r.restore(),
                accepted: c[0],
                proposed: c[1],
                failures: c[2],
            })
            .collect();
        Self {
            walkers,
            step_size: s.step_size,
            proposal: s.proposal,
            adapting: s.adapting,
            window_accepted: s.window[0],
            window_proposed: s.window[1],
        }
    }
}
