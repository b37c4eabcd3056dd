use alloc::vec::Vec;

use super::{signed_log_sum_exp, sortlet_generic, vandermonde_generic, SignedLog};
use crate::autodiff::Scalar;
use crate::backbone::{
    alpha_from_features, canonical_order, featurize, Antisymmetrizer, FeatureSet, ModelConfig, ModelLayout,
    ParamStore, ScoreMatrix,
};
use crate::error::EvalError;
use crate::geometry::{ElectronConfiguration, SystemSpec};
use crate::hamiltonian::{potential, PotentialTerms};
use crate::wavefunction::WaveFunction;

/// `sum_{i<j} -c beta / (beta^2 + r_ij)` with `c = 1/4` for same-spin and
/// `c = 1/2` for opposite-spin pairs, summed over pairs in `order`.
pub fn jastrow_generic<S: Scalar>(beta: [S; 2], f: &FeatureSet<S>, order: &[usize]) -> S {
    let n = f.n_electrons;
    let b2 = [beta[0] * beta[0], beta[1] * beta[1]];
    let mut same = S::cst(0.0);
    let mut opposite = S::cst(0.0);
    for (a, &i) in order.iter().enumerate() {
        for &j in &order[a + 1..] {
            let r = f.dist_pairs[i * n + j];
            if f.spin[i] == f.spin[j] {
                same = same + beta[0] / (b2[0] + r);
            } else {
                opposite = opposite + beta[1] / (b2[1] + r);
            }
        }
    }
    same.scale(-0.25) + opposite.scale(-0.5)
}

/// Jastrow exponent `J` for positive `beta = (beta_same, beta_opposite)`.
pub fn jastrow(beta: [f64; 2], system: &SystemSpec, c: &ElectronConfiguration) -> Result<f64, EvalError> {
    let f = featurize(system, c.coords())?;
    let order = canonical_order(system, c.coords());
    Ok(jastrow_generic(beta, &f, &order))
}

/// The full trial wavefunction
/// `e^J sum_k w_k A(alpha^k) exp(-gamma_k sum_j min_I |r_j - R_I|)`,
/// where `A` is the sortlet or the Vandermonde product.
#[derive(Debug, Clone)]
pub struct SortletModel {
    pub system: SystemSpec,
    pub layout: ModelLayout,
}

impl SortletModel {
    pub fn new(system: SystemSpec, config: ModelConfig) -> Self {
        let layout = ModelLayout::new(config, &system);
        Self { system, layout }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.layout.config
    }

    pub fn init(&self, seed: u64) -> ParamStore {
        self.layout.init(seed)
    }

    fn check(&self, params: usize, coords: usize) -> Result<(), EvalError> {
        if params != self.layout.n_params() {
            return Err(EvalError::Shape { expected: self.layout.n_params(), got: params });
        }
        if coords != self.n_coords() {
            return Err(EvalError::Shape { expected: self.n_coords(), got: coords });
        }
        Ok(())
    }

    pub fn psi(&self, params: &ParamStore, c: &ElectronConfiguration) -> Result<SignedLog, EvalError> {
        self.log_psi::<f64>(&params.values, c.coords())
    }

    pub fn scores(&self, params: &ParamStore, c: &ElectronConfiguration) -> Result<ScoreMatrix<f64>, EvalError> {
        self.check(params.len(), c.coords().len())?;
        let f = featurize(&self.system, c.coords())?;
        let order = canonical_order(&self.system, c.coords());
        alpha_from_features(&self.layout, &params.values, &f, &order)
    }

    fn antisymmetric_part<S: Scalar>(&self, row: &[S]) -> SignedLog<S> {
        match self.layout.config.kind {
            Antisymmetrizer::Sortlet => sortlet_generic(row),
            Antisymmetrizer::Vandermonde => {
                let (up, down) = row.split_at(self.system.n_up());
                vandermonde_generic(&[up, down])
            }
        }
    }
}

impl WaveFunction for SortletModel {
    fn n_coords(&self) -> usize {
        3 * self.system.n_electrons()
    }

    fn n_params(&self) -> usize {
        self.layout.n_params()
    }

    fn log_psi<S: Scalar>(&self, params: &[S::Param], x: &[S]) -> Result<SignedLog<S>, EvalError> {
        self.check(params.len(), x.len())?;
        let f = featurize(&self.system, x)?;
        let coords: Vec<f64> = x.iter().map(Scalar::value).collect();
        let order = canonical_order(&self.system, &coords);
        let scores = alpha_from_features(&self.layout, params, &f, &order)?;

        let nn = f.n_nuclei;
        let mut envelope = S::cst(0.0);
        for &i in &order {
            let d = &f.dist_nuclei[i * nn..(i + 1) * nn];
            envelope = envelope + d[1..].iter().fold(d[0], |m, &v| m.min_value(v));
        }

        let mix = &params[self.layout.mix.clone()];
        let gamma = &params[self.layout.gamma.clone()];
        let terms: Vec<SignedLog<S>> = (0..scores.k)
            .map(|k| {
                let w = SignedLog::from_scalar(S::lift(mix[k]));
                let mut t = self.antisymmetric_part(scores.row(k)).mul(w);
                if !t.is_zero() {
                    t.logmag = t.logmag - S::lift(gamma[k]).softplus() * envelope;
                }
                t
            })
            .collect();
        let sum = signed_log_sum_exp(&terms);
        if sum.is_zero() {
            return Ok(sum);
        }
        let beta = &params[self.layout.beta.clone()];
        let j = jastrow_generic([S::lift(beta[0]).softplus(), S::lift(beta[1]).softplus()], &f, &order);
        let logmag = sum.logmag + j;
        if !logmag.value().is_finite() {
            return Err(EvalError::NonFinite);
        }
        Ok(SignedLog { sign: sum.sign, logmag })
    }

    fn potential(&self, x: &[f64]) -> Result<PotentialTerms, EvalError> {
        potential(&self.system, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{fd, grad_params, ParamFn};
    use crate::geometry::{Nucleus, PotentialKind};
    use crate::math;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_coords(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..3 * n).map(|_| rng.gen_range(-2.0..2.0)).collect()
    }

    fn config(kind: Antisymmetrizer, sortlets: usize) -> ModelConfig {
        ModelConfig { kind, hidden: 8, layers: 2, sortlets }
    }

    fn lih() -> SystemSpec {
        SystemSpec::neutral(vec![
            Nucleus { position: [0.0, 0.0, 0.0], charge: 3 },
            Nucleus { position: [0.0, 0.0, 3.015], charge: 1 },
        ])
        .unwrap()
    }

    #[test]
    fn jastrow_examples() {
        let s = SystemSpec::new(vec![Nucleus { position: [0.0; 3], charge: 2 }], 2, 0, PotentialKind::Coulomb).unwrap();
        let c = s.configuration(vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((jastrow([1.0, 1.0], &s, &c).unwrap() + 0.125).abs() < 1e-12);
        let s = SystemSpec::atom(2).unwrap();
        let c = s.configuration(vec![0.5, 0.5, 0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!((jastrow([1.0, 1.0], &s, &c).unwrap() + 0.5).abs() < 1e-11);
        let s = SystemSpec::atom(1).unwrap();
        assert_eq!(jastrow([1.0, 1.0], &s, &s.configuration(vec![1.0, 2.0, 3.0]).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn hydrogen_single_sortlet_is_a_one_s_shape() {
        // K = 1, N = 1: constant score, gamma = 1, empty Jastrow
        let s = SystemSpec::atom(1).unwrap();
        let m = SortletModel::new(s.clone(), ModelConfig { kind: Antisymmetrizer::Sortlet, hidden: 4, layers: 1, sortlets: 1 });
        let mut p = m.init(0);
        p.get_mut("head.w").unwrap().fill(0.0);
        p.get_mut("head.b").unwrap()[0] = 0.75;
        p.get_mut("envelope.gamma").unwrap()[0] = math::softplus_inv(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = random_coords(1, &mut rng);
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let v = m.psi(&p, &s.configuration(x).unwrap()).unwrap();
            assert_eq!(v.sign, 1);
            assert!((v.logmag - (0.75f64.ln() - r)).abs() < 1e-12);
        }
    }

    #[test]
    fn cancelling_mixing_weights_give_zero() {
        let s = SystemSpec::atom(3).unwrap();
        let m = SortletModel::new(s.clone(), config(Antisymmetrizer::Sortlet, 2));
        let mut p = m.init(1);
        // identical rows: zero head weights, equal biases
        p.get_mut("head.w").unwrap().fill(0.0);
        p.get_mut("head.b").unwrap().fill(0.3);
        p.get_mut("mix.w").unwrap().copy_from_slice(&[1.0, -1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = m.psi(&p, &s.configuration(random_coords(3, &mut rng)).unwrap()).unwrap();
        assert_eq!(v.sign, 0);
    }

    fn assert_antisymmetric(s: &SystemSpec, kind: Antisymmetrizer, seeds: u64) {
        let m = SortletModel::new(s.clone(), config(kind, 3));
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = s.n_electrons();
        for seed in 0..seeds {
            let p = m.init(seed);
            let c = s.configuration(random_coords(n, &mut rng)).unwrap();
            let v = m.psi(&p, &c).unwrap();
            assert_ne!(v.sign, 0);
            for i in 0..n {
                for j in i + 1..n {
                    if s.spin(i) != s.spin(j) {
                        continue;
                    }
                    let w = m.psi(&p, &c.transpose_electrons(i, j).unwrap()).unwrap();
                    assert_eq!(w.sign, -v.sign);
                    assert_eq!(w.logmag.to_bits(), v.logmag.to_bits());
                }
            }
        }
    }

    #[test]
    fn same_spin_exchange_negates_exactly() {
        assert_antisymmetric(&SystemSpec::atom(3).unwrap(), Antisymmetrizer::Sortlet, 10);
        assert_antisymmetric(&SystemSpec::atom(4).unwrap(), Antisymmetrizer::Sortlet, 10);
        assert_antisymmetric(&lih(), Antisymmetrizer::Sortlet, 10);
        assert_antisymmetric(&SystemSpec::atom(5).unwrap(), Antisymmetrizer::Vandermonde, 10);
    }

    #[test]
    fn opposite_spin_exchange_has_no_fixed_sign() {
        let s = SystemSpec::atom(3).unwrap();
        let m = SortletModel::new(s.clone(), config(Antisymmetrizer::Sortlet, 3));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut agree, mut differ) = (0, 0);
        for seed in 0..200 {
            let p = m.init(seed);
            let c = s.configuration(random_coords(3, &mut rng)).unwrap();
            let a = m.psi(&p, &c).unwrap().sign;
            let b = m.psi(&p, &c.transpose_electrons(0, 2).unwrap()).unwrap().sign;
            if a == b {
                agree += 1;
            } else {
                differ += 1;
            }
        }
        assert!(agree > 0 && differ > 0, "agree {agree} differ {differ}");
    }

    struct LogPsiAt<'a> {
        model: &'a SortletModel,
        x: &'a [f64],
    }

    impl ParamFn for LogPsiAt<'_> {
        fn eval<S: Scalar>(&self, theta: &[S::Param]) -> Result<S, EvalError> {
            let x: Vec<S> = self.x.iter().map(|&v| S::cst(v)).collect();
            Ok(self.model.log_psi::<S>(theta, &x)?.logmag)
        }
    }

    #[test]
    fn log_psi_parameter_gradient_matches_finite_differences() {
        for kind in [Antisymmetrizer::Sortlet, Antisymmetrizer::Vandermonde] {
            let s = lih();
            let m = SortletModel::new(s.clone(), config(kind, 2));
            let p = m.init(8);
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            let x = random_coords(4, &mut rng);
            let f = LogPsiAt { model: &m, x: &x };
            let g = grad_params(&f, &p.values).unwrap();
            let fdg = fd::central_gradient(|t| f.eval::<f64>(t).unwrap(), &p.values, 1e-6);
            for k in 0..g.len() {
                let tol = 1e-4 * fdg[k].abs().max(1e-2);
                assert!((g[k] - fdg[k]).abs() < tol, "{kind:?} param {k}: {} vs {}", g[k], fdg[k]);
            }
        }
    }

    #[test]
    fn tape_value_equals_plain_value() {
        let s = SystemSpec::atom(4).unwrap();
        let m = SortletModel::new(s.clone(), config(Antisymmetrizer::Sortlet, 4));
        let p = m.init(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_coords(4, &mut rng);
        let f = LogPsiAt { model: &m, x: &x };
        let (v, _) = crate::autodiff::value_and_grad_params(&f, &p.values).unwrap();
        assert_eq!(v.to_bits(), m.log_psi::<f64>(&p.values, &x).unwrap().logmag.to_bits());
    }

    #[test]
    fn wrong_shapes_are_rejected() {
        let s = SystemSpec::atom(3).unwrap();
        let m = SortletModel::new(s, config(Antisymmetrizer::Sortlet, 2));
        let p = m.init(0);
        assert!(matches!(m.log_psi::<f64>(&p.values, &[0.0; 6]), Err(EvalError::Shape { .. })));
        assert!(matches!(m.log_psi::<f64>(&p.values[1..], &[0.1; 9]), Err(EvalError::Shape { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn antisymmetry_for_random_parameters(seed in any::<u64>(), xs in proptest::collection::vec(-3.0f64..3.0, 12)) {
            let s = SystemSpec::atom(4).unwrap();
            let m = SortletModel::new(s.clone(), config(Antisymmetrizer::Sortlet, 3));
            let p = m.init(seed);
            let c = s.configuration(xs).unwrap();
            let v = m.psi(&p, &c).unwrap();
            for (i, j) in [(0, 1), (2, 3)] {
                let w = m.psi(&p, &c.transpose_electrons(i, j).unwrap()).unwrap();
                prop_assert_eq!(w.sign, -v.sign);
                if v.sign != 0 {
                    prop_assert!((w.logmag - v.logmag).abs() < 1e-12);
                }
            }
        }
    }
}
