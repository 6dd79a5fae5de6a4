use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::{Activation, Real};
use crate::{Error, Result};

/// Reverse-mode recording of scalar operations.
///
/// Each node stores its value and the local partial derivatives with respect
/// to its parents. Nodes with many parents (dot products) are a single node
/// with many edges, which keeps dense layers compact.
#[derive(Debug, Default)]
pub struct Tape {
    inner: RefCell<Records>,
}

#[derive(Debug, Default)]
struct Records {
    values: Vec<f64>,
    /// `offsets[i]..offsets[i + 1]` indexes the edges of node `i`.
    offsets: Vec<usize>,
    edges: Vec<(u32, f64)>,
}

/// A scalar that is either recorded on a tape or a detached constant.
#[derive(Debug, Clone, Copy)]
pub struct Var<'t> {
    tape: Option<&'t Tape>,
    index: u32,
    value: f64,
}

impl Tape {
    pub fn new() -> Self {
        let tape = Tape::default();
        tape.inner.borrow_mut().offsets.push(0);
        tape
    }

    /// Drops all records but keeps the allocations.
    pub fn clear(&mut self) {
        let rec = self.inner.get_mut();
        rec.values.clear();
        rec.edges.clear();
        rec.offsets.clear();
        rec.offsets.push(0);
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records an independent variable.
    pub fn var(&self, value: f64) -> Var<'_> {
        self.push(value, std::iter::empty())
    }

    fn push<I>(&self, value: f64, edges: I) -> Var<'_>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let mut rec = self.inner.borrow_mut();
        let index = rec.values.len();
        assert!(index < u32::MAX as usize, "tape overflow");
        rec.values.push(value);
        rec.edges.extend(edges);
        let end = rec.edges.len();
        rec.offsets.push(end);
        Var {
            tape: Some(self),
            index: index as u32,
            value,
        }
    }

    /// `bias + Σ weights[j] * inputs[j]` recorded as one node.
    pub fn affine<'t>(&'t self, bias: Var<'t>, weights: &[Var<'t>], inputs: &[Var<'t>]) -> Var<'t> {
        debug_assert_eq!(weights.len(), inputs.len());
        let mut value = bias.value;
        for (w, x) in weights.iter().zip(inputs) {
            value += w.value * x.value;
        }
        let edges = std::iter::once((bias, 1.0))
            .chain(weights.iter().zip(inputs).flat_map(|(w, x)| [(*w, x.value), (*x, w.value)]))
            .filter(|(v, _)| v.is_recorded())
            .map(|(v, p)| (v.index, p));
        self.push(value, edges)
    }

    /// `Σ weights[j] * inputs[j]` recorded as one node.
    pub fn dot<'t>(&'t self, weights: &[Var<'t>], inputs: &[Var<'t>]) -> Var<'t> {
        self.affine(Var::constant(0.0), weights, inputs)
    }

    fn owns(&self, v: &Var<'_>) -> bool {
        v.tape.is_some_and(|t| std::ptr::eq(t, self))
    }

    /// Adjoints of every recorded node with respect to `output`.
    pub fn gradient(&self, output: Var<'_>) -> Result<Gradient> {
        if !self.owns(&output) {
            return Err(Error::Usage(
                "gradient requested for a scalar that was not recorded on this tape".into(),
            ));
        }
        let rec = self.inner.borrow();
        let mut adjoints = vec![0.0; output.index as usize + 1];
        adjoints[output.index as usize] = 1.0;
        for i in (0..=output.index as usize).rev() {
            let a = adjoints[i];
            if a == 0.0 {
                continue;
            }
            for &(parent, partial) in &rec.edges[rec.offsets[i]..rec.offsets[i + 1]] {
                adjoints[parent as usize] += a * partial;
            }
        }
        Ok(Gradient { adjoints })
    }

    /// Gradient of `output` restricted to `params`, in the given order.
    pub fn parameter_gradient(&self, params: &[Var<'_>], output: Var<'_>) -> Result<Vec<f64>> {
        if let Some(p) = params.iter().find(|p| !self.owns(p)) {
            return Err(Error::Usage(format!(
                "parameter with value {} is not recorded on this tape",
                p.value
            )));
        }
        let grad = self.gradient(output)?;
        Ok(params.iter().map(|p| grad.wrt(*p)).collect())
    }
}

/// Result of a reverse sweep.
#[derive(Debug, Clone)]
pub struct Gradient {
    adjoints: Vec<f64>,
}

impl Gradient {
    /// ∂output/∂v; zero for constants and for nodes recorded after the output.
    pub fn wrt(&self, v: Var<'_>) -> f64 {
        if !v.is_recorded() {
            return 0.0;
        }
        self.adjoints.get(v.index as usize).copied().unwrap_or(0.0)
    }
}

impl<'t> Var<'t> {
    pub fn constant(value: f64) -> Self {
        Var {
            tape: None,
            index: 0,
            value,
        }
    }

    pub fn is_recorded(&self) -> bool {
        self.tape.is_some()
    }

    pub fn val(&self) -> f64 {
        self.value
    }

    fn unary(self, value: f64, partial: f64) -> Self {
        match self.tape {
            None => Var::constant(value),
            Some(t) => t.push(value, [(self.index, partial)]),
        }
    }

    fn binary(self, other: Self, value: f64, da: f64, db: f64) -> Self {
        let tape = match (self.tape, other.tape) {
            (None, None) => return Var::constant(value),
            (Some(t), _) | (None, Some(t)) => t,
        };
        if let (Some(a), Some(b)) = (self.tape, other.tape) {
            assert!(std::ptr::eq(a, b), "operands recorded on different tapes");
        }
        let edges = [(self, da), (other, db)]
            .into_iter()
            .filter(|(v, _)| v.is_recorded())
            .map(|(v, p)| (v.index, p));
        tape.push(value, edges)
    }

    fn is_zero_constant(&self) -> bool {
        !self.is_recorded() && self.value == 0.0
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        if self.is_zero_constant() {
            return rhs;
        }
        if rhs.is_zero_constant() {
            return self;
        }
        self.binary(rhs, self.value + rhs.value, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        if rhs.is_zero_constant() {
            return self;
        }
        self.binary(rhs, self.value - rhs.value, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero_constant() || rhs.is_zero_constant() {
            return Var::constant(0.0);
        }
        self.binary(rhs, self.value * rhs.value, rhs.value, self.value)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let q = self.value / rhs.value;
        self.binary(rhs, q, 1.0 / rhs.value, -q / rhs.value)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Self;
    fn neg(self) -> Self {
        self.unary(-self.value, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        if rhs == 0.0 {
            return self;
        }
        self.unary(self.value + rhs, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Self;
    fn sub(self, rhs: f64) -> Self {
        self + (-rhs)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        if rhs == 0.0 {
            return Var::constant(0.0);
        }
        self.unary(self.value * rhs, rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        self.unary(self.value / rhs, 1.0 / rhs)
    }
}

impl<'t> Real for Var<'t> {
    fn constant(value: f64) -> Self {
        Var::constant(value)
    }
    fn value(self) -> f64 {
        self.value
    }
    fn sin(self) -> Self {
        self.unary(self.value.sin(), self.value.cos())
    }
    fn cos(self) -> Self {
        self.unary(self.value.cos(), -self.value.sin())
    }
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.unary(e, e)
    }
    fn sqrt(self) -> Self {
        let r = self.value.sqrt();
        self.unary(r, 0.5 / r)
    }
    fn activation(self, act: Activation, order: usize) -> Self {
        self.unary(
            act.derivative(order, self.value),
            act.derivative(order + 1, self.value),
        )
    }
}
