use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use super::Scalar;

const CONST: u32 = u32::MAX;

#[derive(Debug, Default)]
struct Inner {
    /// Node `i` owns `edges[ends[i - 1]..ends[i]]`.
    ends: Vec<u32>,
    edges: Vec<(u32, f64)>,
}

/// Wengert list for reverse-mode differentiation.
///
/// Each node stores the partial derivatives with respect to its parents.
/// Fused dot products record a single node with many parents.
#[derive(Default)]
pub struct GradientTape {
    inner: RefCell<Inner>,
}

impl fmt::Debug for GradientTape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GradientTape").field("nodes", &self.len()).finish()
    }
}

impl GradientTape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(nodes: usize) -> Self {
        Self {
            inner: RefCell::new(Inner {
                ends: Vec::with_capacity(nodes),
                edges: Vec::with_capacity(nodes * 2),
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().ends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// New independent variable.
    pub fn var(&self, value: f64) -> Var<'_> {
        self.push(value, core::iter::empty())
    }

    fn push(&self, value: f64, parents: impl Iterator<Item = (u32, f64)>) -> Var<'_> {
        let mut inner = self.inner.borrow_mut();
        inner.edges.extend(parents.filter(|(p, _)| *p != CONST));
        let end = inner.edges.len() as u32;
        inner.ends.push(end);
        Var { tape: Some(self), idx: inner.ends.len() as u32 - 1, val: value }
    }

    /// Adjoint of `output` with respect to each of `inputs`.
    pub fn gradient(&self, output: Var<'_>, inputs: &[Var<'_>]) -> Vec<f64> {
        let inner = self.inner.borrow();
        let n = inner.ends.len();
        let mut adj = vec![0.0; n];
        if output.idx != CONST {
            adj[output.idx as usize] = 1.0;
            for i in (0..=output.idx as usize).rev() {
                let a = adj[i];
                if a == 0.0 {
                    continue;
                }
                let start = if i == 0 { 0 } else { inner.ends[i - 1] as usize };
                for &(p, partial) in &inner.edges[start..inner.ends[i] as usize] {
                    adj[p as usize] += a * partial;
                }
            }
        }
        inputs
            .iter()
            .map(|v| if v.idx == CONST { 0.0 } else { adj[v.idx as usize] })
            .collect()
    }
}

/// A value recorded on a [`GradientTape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    /// `None` for constants, which never record nodes.
    tape: Option<&'t GradientTape>,
    idx: u32,
    val: f64,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Var").field("idx", &self.idx).field("val", &self.val).finish()
    }
}

impl<'t> Var<'t> {
    fn unary(self, value: f64, partial: f64) -> Self {
        match self.tape {
            None => Self::cst(value),
            Some(t) => t.push(value, core::iter::once((self.idx, partial))),
        }
    }

    fn binary(self, rhs: Self, value: f64, da: f64, db: f64) -> Self {
        match self.tape.or(rhs.tape) {
            None => Self::cst(value),
            Some(t) => t.push(value, [(self.idx, da), (rhs.idx, db)].into_iter()),
        }
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        self.binary(rhs, self.val + rhs.val, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self.binary(rhs, self.val - rhs.val, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        self.binary(rhs, self.val * rhs.val, rhs.val, self.val)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let q = self.val / rhs.val;
        self.binary(rhs, q, 1.0 / rhs.val, -q / rhs.val)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.unary(-self.val, -1.0)
    }
}

impl<'t> Scalar for Var<'t> {
    type Param = Var<'t>;

    fn cst(v: f64) -> Self {
        Var { tape: None, idx: CONST, val: v }
    }

    #[inline]
    fn lift(p: Self) -> Self {
        p
    }

    #[inline]
    fn value(&self) -> f64 {
        self.val
    }

    #[inline]
    fn chain(self, f: f64, df: f64, _d2f: f64) -> Self {
        self.unary(f, df)
    }

    #[inline]
    fn scale(self, c: f64) -> Self {
        self.unary(self.val * c, c)
    }

    fn dot_param(w: &[Self], x: &[Self]) -> Self {
        Self::dot(w, x)
    }

    fn dot(a: &[Self], b: &[Self]) -> Self {
        let mut value = 0.0;
        let mut tape = None;
        for (p, q) in a.iter().zip(b) {
            value += p.val * q.val;
            tape = tape.or(p.tape).or(q.tape);
        }
        match tape {
            None => Self::cst(value),
            Some(t) => t.push(
                value,
                a.iter().zip(b).flat_map(|(p, q)| [(p.idx, q.val), (q.idx, p.val)]),
            ),
        }
    }
}
