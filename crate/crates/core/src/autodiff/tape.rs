//! Reverse-mode differentiation on a flat record of scalar operations.
//!
//! The record is generic over the payload algebra: with `f64` it yields plain
//! gradients, with a jet payload the reverse sweep transports whole derivative
//! jets, so one sweep produces the parameter gradient of quantities like u_t
//! or u_xx simultaneously.
//!
//! Partials are evaluated at record time, so a node stores only parent indices
//! and two local derivatives. A third parent slot with an implicit partial of
//! one backs a fused multiply-add, which halves the node count of dot products.

use super::scalar::Scalar;
use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy)]
struct Node<S> {
    /// Parent indices; a slot equal to the node's own index is unused.
    p: [u32; 3],
    /// Local partials for the first two parents. The third parent, when
    /// present, always has partial one.
    d: [S; 2],
}

/// Append-only operation record. One record per evaluation context; contexts
/// are independent and never share state.
pub struct Tape<S: Scalar> {
    nodes: RefCell<Vec<Node<S>>>,
}

/// A recorded value: payload plus its position in the record.
#[derive(Clone, Copy)]
pub struct Var<'t, S: Scalar> {
    tape: &'t Tape<S>,
    idx: u32,
    val: S,
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Tape {
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    /// Record an independent value. Leaves have no parents; their adjoints are
    /// what a reverse sweep ultimately delivers.
    pub fn leaf(&self, val: S) -> Var<'_, S> {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        nodes.push(Node {
            p: [idx; 3],
            d: [S::zero(); 2],
        });
        Var {
            tape: self,
            idx,
            val,
        }
    }

    /// Leaf carrying a lifted plain number.
    pub fn constant(&self, v: f64) -> Var<'_, S> {
        self.leaf(S::from_f64(v))
    }

    /// Record one leaf per entry, in order.
    pub fn leaves(&self, vals: &[S]) -> Vec<Var<'_, S>> {
        vals.iter().map(|&v| self.leaf(v)).collect()
    }

    /// Drop every node at or past `len`. Vars created past the watermark must
    /// not be used afterwards; the streaming trainers rewind to a parameter
    /// prefix after each collocation point.
    pub fn rewind_to(&self, len: usize) {
        self.nodes.borrow_mut().truncate(len);
    }

    fn push(&self, p: [u32; 3], d: [S; 2], val: S) -> Var<'_, S> {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        let p = [
            p[0],
            if p[1] == u32::MAX { idx } else { p[1] },
            if p[2] == u32::MAX { idx } else { p[2] },
        ];
        nodes.push(Node { p, d });
        Var {
            tape: self,
            idx,
            val,
        }
    }

    fn unary(&self, a: u32, fp: S, val: S) -> Var<'_, S> {
        self.push([a, u32::MAX, u32::MAX], [fp, S::zero()], val)
    }

    fn binary(&self, a: u32, b: u32, da: S, db: S, val: S) -> Var<'_, S> {
        self.push([a, b, u32::MAX], [da, db], val)
    }

    /// Reverse sweep. Seeds are added to the adjoints of their vars, then the
    /// record is walked from the highest seeded index down to zero; `adj` is
    /// reset to the record length each call. Adjoints of self-parented slots
    /// are never propagated, so leaves terminate cleanly.
    pub fn backward_seeded(&self, seeds: &[(Var<'_, S>, S)], adj: &mut Vec<S>) {
        let nodes = self.nodes.borrow();
        adj.clear();
        adj.resize(nodes.len(), S::zero());
        let mut start = 0usize;
        for (v, s) in seeds {
            debug_assert!(std::ptr::eq(v.tape, self));
            let i = v.idx as usize;
            adj[i] = adj[i] + *s;
            start = start.max(i);
        }
        if nodes.is_empty() {
            return;
        }
        for i in (0..=start).rev() {
            let g = adj[i];
            if g.is_zero() {
                continue;
            }
            let n = nodes[i];
            let iu = i as u32;
            if n.p[0] != iu {
                let j = n.p[0] as usize;
                adj[j] = adj[j] + g * n.d[0];
            }
            if n.p[1] != iu {
                let j = n.p[1] as usize;
                adj[j] = adj[j] + g * n.d[1];
            }
            if n.p[2] != iu {
                let j = n.p[2] as usize;
                adj[j] = adj[j] + g;
            }
        }
    }

    /// Single-output reverse sweep with seed one; returns the adjoint buffer.
    pub fn backward(&self, output: Var<'_, S>) -> Vec<S> {
        let mut adj = Vec::new();
        self.backward_seeded(&[(output, S::one())], &mut adj);
        adj
    }
}

impl<'t, S: Scalar> Var<'t, S> {
    pub fn value(&self) -> S {
        self.val
    }

    /// Primal component of the payload.
    pub fn primal(&self) -> f64 {
        self.val.value()
    }

    /// Position in the record; indexes into adjoint buffers.
    pub fn index(&self) -> usize {
        self.idx as usize
    }

    pub fn exp(self) -> Self {
        let e = self.val.exp();
        self.tape.unary(self.idx, e, e)
    }

    pub fn sin(self) -> Self {
        self.tape.unary(self.idx, self.val.cos(), self.val.sin())
    }

    pub fn cos(self) -> Self {
        self.tape.unary(self.idx, -self.val.sin(), self.val.cos())
    }

    pub fn tanh(self) -> Self {
        let t = self.val.tanh();
        self.tape.unary(self.idx, S::one() - t * t, t)
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return self.tape.unary(self.idx, S::zero(), S::one());
        }
        let fp = S::from_f64(f64::from(n)) * self.val.powi(n - 1);
        self.tape.unary(self.idx, fp, self.val.powi(n))
    }

    /// max(0, x); the derivative at exactly zero is zero.
    pub fn relu(self) -> Self {
        if self.val.value() > 0.0 {
            self.tape.unary(self.idx, S::one(), self.val)
        } else {
            self.tape.unary(self.idx, S::zero(), S::zero())
        }
    }

    /// Picks the larger primal; ties keep `self`, and the chosen side gets
    /// the whole derivative.
    pub fn max(self, rhs: Self) -> Self {
        debug_assert!(std::ptr::eq(self.tape, rhs.tape));
        if rhs.val.value() > self.val.value() {
            self.tape
                .binary(self.idx, rhs.idx, S::zero(), S::one(), rhs.val)
        } else {
            self.tape
                .binary(self.idx, rhs.idx, S::one(), S::zero(), self.val)
        }
    }

    /// self * b + c as one node.
    pub fn mul_add(self, b: Self, c: Self) -> Self {
        debug_assert!(std::ptr::eq(self.tape, b.tape) && std::ptr::eq(self.tape, c.tape));
        self.tape.push(
            [self.idx, b.idx, c.idx],
            [b.val, self.val],
            self.val * b.val + c.val,
        )
    }

    /// Multiply by an unrecorded constant.
    pub fn scale(self, k: S) -> Self {
        self.tape.unary(self.idx, k, self.val * k)
    }

    /// Add an unrecorded constant.
    pub fn offset(self, k: S) -> Self {
        self.tape.unary(self.idx, S::one(), self.val + k)
    }
}

impl<'t, S: Scalar> Add for Var<'t, S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        debug_assert!(std::ptr::eq(self.tape, rhs.tape));
        self.tape
            .binary(self.idx, rhs.idx, S::one(), S::one(), self.val + rhs.val)
    }
}

impl<'t, S: Scalar> Sub for Var<'t, S> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        debug_assert!(std::ptr::eq(self.tape, rhs.tape));
        self.tape
            .binary(self.idx, rhs.idx, S::one(), -S::one(), self.val - rhs.val)
    }
}

impl<'t, S: Scalar> Mul for Var<'t, S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        debug_assert!(std::ptr::eq(self.tape, rhs.tape));
        self.tape
            .binary(self.idx, rhs.idx, rhs.val, self.val, self.val * rhs.val)
    }
}

impl<'t, S: Scalar> Div for Var<'t, S> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        debug_assert!(std::ptr::eq(self.tape, rhs.tape));
        // Partials 1/b and -a/b^2; IEEE handles a zero denominator.
        let inv = S::one() / rhs.val;
        let val = self.val * inv;
        self.tape.binary(self.idx, rhs.idx, inv, -(val * inv), val)
    }
}

impl<'t, S: Scalar> Neg for Var<'t, S> {
    type Output = Self;
    fn neg(self) -> Self {
        self.tape.unary(self.idx, -S::one(), -self.val)
    }
}

/// Gradient entries ordered by the canonical parameter ordering of whatever
/// produced them (for networks: layer-major, weights row-major, then biases).
pub type GradientVector = Vec<f64>;

/// Value and gradient of `f` over `params`, differentiating with respect to
/// every entry. The closure receives the record and one leaf per parameter,
/// in order, and returns the scalar to differentiate.
pub fn gradient<F>(params: &[f64], f: F) -> (f64, GradientVector)
where
    F: for<'t> FnOnce(&'t Tape<f64>, &'t [Var<'t, f64>]) -> Var<'t, f64>,
{
    let tape = Tape::new();
    let leaves: Vec<Var<'_, f64>> = params.iter().map(|&p| tape.leaf(p)).collect();
    let out = f(&tape, &leaves);
    let adj = tape.backward(out);
    let grad = leaves.iter().map(|l| adj[l.index()]).collect();
    (out.primal(), grad)
}
