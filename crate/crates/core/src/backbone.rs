//! The permutation-equivariant score network `alpha: R^{N x 3} -> R^{K x N}`.
//!
//! Each electron starts from one-body features (offsets and distances to
//! every nucleus plus its spin tag). `layers` rounds of single-head
//! self-attention mix information between electrons, with a learned
//! distance bias on the attention logits, and a linear head emits `K` scores
//! per electron.
//!
//! All sums over electrons run in a canonical order fixed by the electron
//! positions themselves, so permuting same-spin electrons permutes the score
//! columns bitwise exactly.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::error::EvalError;
use crate::geometry::{ElectronConfiguration, Spin, SystemSpec};
use crate::math;

/// Version of the parameter layout; bump when block order or shapes change.
pub const LAYOUT_VERSION: u32 = 1;

/// Softening length for every distance feature.
pub const DISTANCE_SOFTENING: f64 = 1e-12;

/// RNG stream reserved for parameter initialisation (walkers use `0..M`).
pub const INIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Antisymmetrizer {
    /// Sort-based antisymmetrization over all electrons.
    Sortlet,
    /// Pairwise product within each spin block.
    Vandermonde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kind: Antisymmetrizer,
    pub hidden: usize,
    pub layers: usize,
    /// Number of terms `K` in the expansion.
    pub sortlets: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { kind: Antisymmetrizer::Sortlet, hidden: 32, layers: 2, sortlets: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

/// Named, ordered flat parameter vector.
///
/// The Jastrow `beta` and envelope `gamma` blocks hold unconstrained raw
/// values; the model maps them through softplus where they are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    pub version: u32,
    pub blocks: Vec<ParamBlock>,
    pub values: Vec<f64>,
}

impl ParamStore {
    pub fn zeros(blocks: Vec<ParamBlock>) -> Self {
        let n = blocks.last().map(|b| b.offset + b.len).unwrap_or(0);
        Self { version: LAYOUT_VERSION, blocks, values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block(&self, name: &str) -> Option<&ParamBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.block(name).map(|b| &self.values[b.offset..b.offset + b.len])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let b = self.block(name)?.clone();
        Some(&mut self.values[b.offset..b.offset + b.len])
    }

    /// Same version and block structure as `other`.
    pub fn same_layout(&self, other: &ParamStore) -> bool {
        self.version == other.version && self.blocks == other.blocks
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LayerOffsets {
    wq: Range<usize>,
    wk: Range<usize>,
    wv: Range<usize>,
    wo: Range<usize>,
    wh: Range<usize>,
    b: Range<usize>,
    dist: usize,
}

/// Offsets of every block inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelLayout {
    pub config: ModelConfig,
    pub n_inputs: usize,
    embed_w: Range<usize>,
    embed_b: Range<usize>,
    layers: Vec<LayerOffsets>,
    head_w: Range<usize>,
    head_b: Range<usize>,
    pub(crate) mix: Range<usize>,
    pub(crate) gamma: Range<usize>,
    pub(crate) beta: Range<usize>,
    blocks: Vec<ParamBlock>,
}

struct Builder {
    blocks: Vec<ParamBlock>,
    next: usize,
}

impl Builder {
    fn take(&mut self, name: impl Into<String>, len: usize) -> Range<usize> {
        let r = self.next..self.next + len;
        self.blocks.push(ParamBlock { name: name.into(), offset: self.next, len });
        self.next += len;
        r
    }
}

impl ModelLayout {
    pub fn new(config: ModelConfig, system: &SystemSpec) -> Self {
        let n_inputs = 4 * system.nuclei().len() + 1;
        let h = config.hidden;
        let k = config.sortlets;
        let mut b = Builder { blocks: Vec::new(), next: 0 };
        let embed_w = b.take("embed.w", h * n_inputs);
        let embed_b = b.take("embed.b", h);
        let layers = (0..config.layers)
            .map(|l| LayerOffsets {
                wq: b.take(alloc::format!("layer{l}.wq"), h * h),
                wk: b.take(alloc::format!("layer{l}.wk"), h * h),
                wv: b.take(alloc::format!("layer{l}.wv"), h * h),
                wo: b.take(alloc::format!("layer{l}.wo"), h * h),
                wh: b.take(alloc::format!("layer{l}.wh"), h * h),
                b: b.take(alloc::format!("layer{l}.b"), h),
                dist: b.take(alloc::format!("layer{l}.dist"), 1).start,
            })
            .collect();
        let head_w = b.take("head.w", k * h);
        let head_b = b.take("head.b", k);
        let mix = b.take("mix.w", k);
        let gamma = b.take("envelope.gamma", k);
        let beta = b.take("jastrow.beta", 2);
        Self {
            config,
            n_inputs,
            embed_w,
            embed_b,
            layers,
            head_w,
            head_b,
            mix,
            gamma,
            beta,
            blocks: b.blocks,
        }
    }

    pub fn n_params(&self) -> usize {
        self.beta.end
    }

    pub fn blocks(&self) -> &[ParamBlock] {
        &self.blocks
    }

    /// Fresh parameters: weights `~ N(0, 1/fan_in)`, a 0.1-scaled head with
    /// biases spread over `[-1, 1]`, unit mixing weights, envelope rates 2
    /// and Jastrow `beta = 1`.
    pub fn init(&self, seed: u64) -> ParamStore {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(INIT_STREAM);
        let mut p = ParamStore::zeros(self.blocks.clone());
        let h = self.config.hidden;
        let mut normal = |v: &mut [f64], scale: f64| {
            for x in v {
                let z: f64 = rng.sample(StandardNormal);
                *x = z * scale;
            }
        };
        let inv_sqrt = |n: usize| 1.0 / math::sqrt(n as f64);
        normal(&mut p.values[self.embed_w.clone()], inv_sqrt(self.n_inputs));
        for l in &self.layers {
            for r in [&l.wq, &l.wk, &l.wv, &l.wo, &l.wh] {
                normal(&mut p.values[r.clone()], inv_sqrt(h));
            }
        }
        normal(&mut p.values[self.head_w.clone()], 0.1 * inv_sqrt(h));
        let k = self.config.sortlets;
        for (i, b) in p.values[self.head_b.clone()].iter_mut().enumerate() {
            *b = if k == 1 { 1.0 } else { -1.0 + 2.0 * i as f64 / (k - 1) as f64 };
        }
        p.values[self.mix.clone()].fill(1.0);
        p.values[self.gamma.clone()].fill(math::softplus_inv(2.0));
        p.values[self.beta.clone()].fill(math::softplus_inv(1.0));
        p
    }
}

/// Raw per-electron and pairwise geometric features.
#[derive(Debug, Clone)]
pub struct FeatureSet<S> {
    pub n_electrons: usize,
    pub n_nuclei: usize,
    /// `r_i - R_I`, electron-major: index `(i * n_nuclei + I) * 3 + d`.
    pub rel_nuclei: Vec<S>,
    /// Softened `|r_i - R_I|`, index `i * n_nuclei + I`.
    pub dist_nuclei: Vec<S>,
    pub spin: Vec<f64>,
    /// `r_i - r_j`, index `(i * n + j) * 3 + d`.
    pub rel_pairs: Vec<S>,
    /// Softened `|r_i - r_j|`, index `i * n + j`.
    pub dist_pairs: Vec<S>,
}

fn softened_norm<S: Scalar>(v: [S; 3]) -> S {
    let eps2 = DISTANCE_SOFTENING * DISTANCE_SOFTENING;
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + S::cst(eps2)).sqrt()
}

pub fn featurize<S: Scalar>(system: &SystemSpec, x: &[S]) -> Result<FeatureSet<S>, EvalError> {
    let n = system.n_electrons();
    if x.len() != 3 * n {
        return Err(EvalError::Shape { expected: 3 * n, got: x.len() });
    }
    let nuclei = system.nuclei();
    let mut rel_nuclei = Vec::with_capacity(3 * n * nuclei.len());
    let mut dist_nuclei = Vec::with_capacity(n * nuclei.len());
    for i in 0..n {
        for nuc in nuclei {
            let v = [0, 1, 2].map(|d| x[3 * i + d] - S::cst(nuc.position[d]));
            rel_nuclei.extend_from_slice(&v);
            dist_nuclei.push(softened_norm(v));
        }
    }
    let mut rel_pairs = Vec::with_capacity(3 * n * n);
    let mut dist_pairs = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let v = [0, 1, 2].map(|d| x[3 * i + d] - x[3 * j + d]);
            rel_pairs.extend_from_slice(&v);
            dist_pairs.push(softened_norm(v));
        }
    }
    let spin = system.spins().into_iter().map(Spin::tag).collect();
    Ok(FeatureSet { n_electrons: n, n_nuclei: nuclei.len(), rel_nuclei, dist_nuclei, spin, rel_pairs, dist_pairs })
}

/// Electron indices sorted by `(spin, x, y, z)`.
///
/// Any permutation of same-spin electrons maps to the same sequence of
/// positions, which is what makes reductions over electrons exactly
/// permutation invariant.
pub fn canonical_order(system: &SystemSpec, coords: &[f64]) -> Vec<usize> {
    let n = system.n_electrons();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        let spin_key = |i: usize| if i < system.n_up() { 0u8 } else { 1u8 };
        spin_key(a).cmp(&spin_key(b)).then_with(|| {
            (0..3)
                .map(|d| coords[3 * a + d].total_cmp(&coords[3 * b + d]))
                .find(|o| o.is_ne())
                .unwrap_or(core::cmp::Ordering::Equal)
        })
    });
    idx
}

/// `K x N` matrix of sortlet scores, row-major.
#[derive(Debug, Clone)]
pub struct ScoreMatrix<S> {
    pub k: usize,
    pub n: usize,
    pub data: Vec<S>,
}

impl<S: Copy> ScoreMatrix<S> {
    pub fn row(&self, k: usize) -> &[S] {
        &self.data[k * self.n..(k + 1) * self.n]
    }
}

fn matvec<S: Scalar>(w: &[S::Param], rows: usize, cols: usize, x: &[S]) -> Vec<S> {
    (0..rows).map(|r| S::dot_param(&w[r * cols..(r + 1) * cols], x)).collect()
}

/// Scores from already computed features, with `order` from
/// [`canonical_order`].
pub fn alpha_from_features<S: Scalar>(
    layout: &ModelLayout,
    params: &[S::Param],
    f: &FeatureSet<S>,
    order: &[usize],
) -> Result<ScoreMatrix<S>, EvalError> {
    let n = f.n_electrons;
    let h = layout.config.hidden;
    let n_in = layout.n_inputs;
    let inv_sqrt_h = 1.0 / math::sqrt(h as f64);

    // embedding of log-rescaled one-body features
    let mut hidden: Vec<Vec<S>> = Vec::with_capacity(n);
    let mut input = Vec::with_capacity(n_in);
    for i in 0..n {
        input.clear();
        for nuc in 0..f.n_nuclei {
            let d = f.dist_nuclei[i * f.n_nuclei + nuc];
            let log_d = d.ln_1p();
            let s = log_d / d;
            for c in 0..3 {
                input.push(f.rel_nuclei[(i * f.n_nuclei + nuc) * 3 + c] * s);
            }
            input.push(log_d);
        }
        input.push(S::cst(f.spin[i]));
        let mut e = matvec(&params[layout.embed_w.clone()], h, n_in, &input);
        for (v, b) in e.iter_mut().zip(&params[layout.embed_b.clone()]) {
            *v = *v + S::lift(*b);
        }
        hidden.push(e);
    }

    let log_pair: Vec<S> = f.dist_pairs.iter().map(|d| d.ln_1p()).collect();
    let mut logits = vec![S::cst(0.0); n];
    let mut weights = vec![S::cst(0.0); n];
    let mut values_t = vec![vec![S::cst(0.0); n]; h];
    for layer in &layout.layers {
        let q: Vec<Vec<S>> = hidden.iter().map(|hi| matvec(&params[layer.wq.clone()], h, h, hi)).collect();
        let k: Vec<Vec<S>> = hidden.iter().map(|hi| matvec(&params[layer.wk.clone()], h, h, hi)).collect();
        // values transposed and in canonical electron order
        for (slot, &j) in order.iter().enumerate() {
            let v = matvec(&params[layer.wv.clone()], h, h, &hidden[j]);
            for c in 0..h {
                values_t[c][slot] = v[c];
            }
        }
        let dist_w = S::lift(params[layer.dist]);
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            for (slot, &j) in order.iter().enumerate() {
                logits[slot] = S::dot(&q[i], &k[j]).scale(inv_sqrt_h) + dist_w * log_pair[i * n + j];
            }
            let max = logits.iter().map(|l| l.value()).fold(f64::NEG_INFINITY, f64::max);
            let mut denom = S::cst(0.0);
            for slot in 0..n {
                weights[slot] = (logits[slot] - S::cst(max)).exp();
                denom = denom + weights[slot];
            }
            let mixed: Vec<S> = (0..h).map(|c| S::dot(&weights, &values_t[c]) / denom).collect();
            let a = matvec(&params[layer.wo.clone()], h, h, &mixed);
            let b = matvec(&params[layer.wh.clone()], h, h, &hidden[i]);
            let bias = &params[layer.b.clone()];
            let updated: Vec<S> =
                (0..h).map(|c| hidden[i][c] + (a[c] + b[c] + S::lift(bias[c])).tanh()).collect();
            next.push(updated);
        }
        hidden = next;
    }

    let kk = layout.config.sortlets;
    let head_w = &params[layout.head_w.clone()];
    let head_b = &params[layout.head_b.clone()];
    let mut data = Vec::with_capacity(kk * n);
    for row in 0..kk {
        for hi in &hidden {
            data.push(S::dot_param(&head_w[row * h..(row + 1) * h], hi) + S::lift(head_b[row]));
        }
    }
    if data.iter().any(|v| !v.value().is_finite()) {
        return Err(EvalError::NonFinite);
    }
    Ok(ScoreMatrix { k: kk, n, data })
}

/// Scores for every sortlet and electron at configuration `x`.
pub fn alpha_generic<S: Scalar>(
    layout: &ModelLayout,
    params: &[S::Param],
    system: &SystemSpec,
    x: &[S],
) -> Result<ScoreMatrix<S>, EvalError> {
    let f = featurize(system, x)?;
    let coords: Vec<f64> = x.iter().map(|v| v.value()).collect();
    let order = canonical_order(system, &coords);
    alpha_from_features(layout, params, &f, &order)
}

/// Scores as plain numbers.
pub fn alpha(
    layout: &ModelLayout,
    params: &ParamStore,
    system: &SystemSpec,
    c: &ElectronConfiguration,
) -> Result<ScoreMatrix<f64>, EvalError> {
    alpha_generic::<f64>(layout, &params.values, system, c.coords())
}

impl ModelLayout {
    pub fn describe(&self) -> String {
        alloc::format!(
            "{:?} K={} hidden={} layers={} params={}",
            self.config.kind,
            self.config.sortlets,
            self.config.hidden,
            self.config.layers,
            self.n_params()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{fd, grad_params, grad_positions, ParamFn, PositionFn};
    use crate::geometry::Nucleus;
    use rand::Rng;

    fn random_coords(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..3 * n).map(|_| rng.gen_range(-2.0..2.0)).collect()
    }

    fn small(kind: Antisymmetrizer) -> ModelConfig {
        ModelConfig { kind, hidden: 8, layers: 2, sortlets: 3 }
    }

    fn system(n_up: usize, n_down: usize) -> SystemSpec {
        SystemSpec::new(
            vec![
                Nucleus { position: [0.0, 0.0, 0.0], charge: 3 },
                Nucleus { position: [0.0, 0.0, 3.0], charge: 1 },
            ],
            n_up,
            n_down,
            Default::default(),
        )
        .unwrap()
    }

    #[test]
    fn distance_feature_345() {
        let s = SystemSpec::atom(1).unwrap();
        let f = featurize(&s, &[3.0, 4.0, 0.0]).unwrap();
        assert!((f.dist_nuclei[0] - 5.0).abs() < 1e-15);
        assert_eq!(f.spin, vec![1.0]);
    }

    #[test]
    fn spin_tags_follow_block_order() {
        let s = system(2, 2);
        let f = featurize(&s, &random_coords(4, 1)).unwrap();
        assert_eq!(f.spin, vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn one_body_features_permute_with_electrons() {
        let s = system(3, 1);
        let x = random_coords(4, 2);
        let c = s.configuration(x.clone()).unwrap();
        let t = c.transpose_electrons(0, 2).unwrap();
        let f = featurize(&s, c.coords()).unwrap();
        let g = featurize(&s, t.coords()).unwrap();
        let nn = f.n_nuclei;
        assert_eq!(f.dist_nuclei[0..nn], g.dist_nuclei[2 * nn..3 * nn]);
        assert_eq!(f.dist_nuclei[nn..2 * nn], g.dist_nuclei[nn..2 * nn]);
        assert_eq!(f.dist_pairs[0 * 4 + 1], g.dist_pairs[2 * 4 + 1]);
    }

    #[test]
    fn single_electron_has_one_score_per_sortlet() {
        let s = SystemSpec::atom(1).unwrap();
        let layout = ModelLayout::new(small(Antisymmetrizer::Sortlet), &s);
        let p = layout.init(3);
        let a = alpha(&layout, &p, &s, &s.configuration(vec![0.3, 0.1, -0.2]).unwrap()).unwrap();
        assert_eq!((a.k, a.n), (3, 1));
    }

    #[test]
    fn same_spin_permutations_permute_columns_exactly() {
        for (n_up, n_down) in [(2, 0), (2, 1), (3, 2), (3, 3)] {
            let s = system(n_up, n_down);
            let layout = ModelLayout::new(small(Antisymmetrizer::Sortlet), &s);
            for seed in 0..4 {
                let p = layout.init(seed);
                let c = s.configuration(random_coords(s.n_electrons(), 100 + seed)).unwrap();
                let a = alpha(&layout, &p, &s, &c).unwrap();
                let n = s.n_electrons();
                for i in 0..n {
                    for j in i + 1..n {
                        if s.spin(i) != s.spin(j) {
                            continue;
                        }
                        let b = alpha(&layout, &p, &s, &c.transpose_electrons(i, j).unwrap()).unwrap();
                        for k in 0..a.k {
                            for e in 0..n {
                                let src = if e == i { j } else if e == j { i } else { e };
                                assert_eq!(a.row(k)[src].to_bits(), b.row(k)[e].to_bits());
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn opposite_spin_swap_is_not_a_column_permutation() {
        let s = system(1, 1);
        let layout = ModelLayout::new(small(Antisymmetrizer::Sortlet), &s);
        let p = layout.init(7);
        let c = s.configuration(random_coords(2, 9)).unwrap();
        let a = alpha(&layout, &p, &s, &c).unwrap();
        let b = alpha(&layout, &p, &s, &c.transpose_electrons(0, 1).unwrap()).unwrap();
        let permuted = (0..a.k).all(|k| a.row(k)[0] == b.row(k)[1] && a.row(k)[1] == b.row(k)[0]);
        assert!(!permuted);
    }

    #[test]
    fn joint_translation_leaves_scores_unchanged() {
        let s = system(2, 1);
        let layout = ModelLayout::new(small(Antisymmetrizer::Sortlet), &s);
        let p = layout.init(11);
        let x = random_coords(3, 12);
        let a = alpha(&layout, &p, &s, &s.configuration(x.clone()).unwrap()).unwrap();
        let shift = [0.7, -1.3, 2.1];
        let moved: Vec<Nucleus> = s
            .nuclei()
            .iter()
            .map(|n| Nucleus { position: [0, 1, 2].map(|d| n.position[d] + shift[d]), charge: n.charge })
            .collect();
        let s2 = SystemSpec::new(moved, 2, 1, Default::default()).unwrap();
        let y: Vec<f64> = x.iter().enumerate().map(|(k, v)| v + shift[k % 3]).collect();
        let b = alpha(&layout, &p, &s2, &s2.configuration(y).unwrap()).unwrap();
        for (u, v) in a.data.iter().zip(&b.data) {
            assert!((u - v).abs() < 1e-12, "{u} vs {v}");
        }
    }

    struct Score<'a> {
        layout: &'a ModelLayout,
        system: &'a SystemSpec,
        params: &'a [f64],
        x: &'a [f64],
        k: usize,
        e: usize,
    }

    impl PositionFn for Score<'_> {
        fn eval<S: Scalar<Param = f64>>(&self, x: &[S]) -> Result<S, EvalError> {
            Ok(alpha_generic(self.layout, self.params, self.system, x)?.row(self.k)[self.e])
        }
    }

    impl ParamFn for Score<'_> {
        fn eval<S: Scalar>(&self, theta: &[S::Param]) -> Result<S, EvalError> {
            let x: Vec<S> = self.x.iter().map(|&v| S::cst(v)).collect();
            Ok(alpha_generic(self.layout, theta, self.system, &x)?.row(self.k)[self.e])
        }
    }

    #[test]
    fn score_derivatives_match_finite_differences() {
        let s = system(2, 1);
        let layout = ModelLayout::new(small(Antisymmetrizer::Sortlet), &s);
        let p = layout.init(5);
        let x = random_coords(3, 6);
        for (k, e) in [(0, 0), (2, 1), (1, 2)] {
            let f = Score { layout: &layout, system: &s, params: &p.values, x: &x, k, e };
            let g = grad_positions(&f, &x).unwrap();
            let fdx = fd::central_gradient(|y| PositionFn::eval::<f64>(&f, y).unwrap(), &x, 1e-5);
            for d in 0..x.len() {
                assert!((g[d] - fdx[d]).abs() < 1e-7, "position {d}: {} vs {}", g[d], fdx[d]);
            }
            let gp = grad_params(&f, &p.values).unwrap();
            let fdp = fd::central_gradient(|t| ParamFn::eval::<f64>(&f, t).unwrap(), &p.values, 1e-5);
            for d in 0..gp.len() {
                assert!((gp[d] - fdp[d]).abs() < 1e-7, "param {d}: {} vs {}", gp[d], fdp[d]);
            }
        }
    }

    #[test]
    fn layout_is_stable() {
        let s = system(2, 1);
        let layout = ModelLayout::new(small(Antisymmetrizer::Sortlet), &s);
        let names: Vec<&str> = layout.blocks().iter().map(|b| b.name.as_str()).collect();
        assert_eq!(names[0], "embed.w");
        assert_eq!(*names.last().unwrap(), "jastrow.beta");
        // 9 inputs, hidden 8, 2 layers, K = 3
        assert_eq!(layout.n_params(), 8 * 9 + 8 + 2 * (5 * 64 + 8 + 1) + 3 * 8 + 3 + 3 + 3 + 2);
        let p = layout.init(1);
        assert_eq!(p.len(), layout.n_params());
        assert!((math::softplus(p.get("envelope.gamma").unwrap()[0]) - 2.0).abs() < 1e-12);
        assert!((math::softplus(p.get("jastrow.beta").unwrap()[1]) - 1.0).abs() < 1e-12);
        assert_eq!(layout.init(1), p);
        assert_ne!(layout.init(2).values, p.values);
    }
}
