//! Scalar reverse-mode tape.
//!
//! Values are computed eagerly while recording; [`Tape::backward`] walks the
//! records in reverse and accumulates adjoints. Besides the elementary
//! opcodes there are two fused records, [`Tape::linear`] (constant
//! coefficients) and [`Tape::dot`] (products of recorded values), which keep
//! Bernstein sums and dense layers at one record per output.

use super::DiffError;
use crate::numeric;

/// Index of a recorded value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Opcodes accepted by [`Tape::record`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpCode {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Exp,
    Log,
    Tanh,
    Sigmoid,
    Softplus,
    LogSigmoid,
    /// `log(1 − e^{−x})`, x > 0.
    Log1mExp,
    PowInt(i32),
}

impl OpCode {
    pub fn arity(self) -> usize {
        match self {
            OpCode::Add | OpCode::Sub | OpCode::Mul | OpCode::Div => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Unary {
    Neg,
    Exp,
    Log,
    Tanh,
    Sigmoid,
    Softplus,
    LogSigmoid,
    Log1mExp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Binary {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Leaf,
    Unary(Unary, u32),
    Binary(Binary, u32, u32),
    PowInt(u32, i32),
    /// `Σ coefs[k] · args[k]` (+ constant folded into the value).
    Linear { start: u32, len: u32 },
    /// `args[start] + Σ args[start+1+2k] · args[start+2+2k]`.
    Dot { start: u32, pairs: u32 },
}

/// Append-only record of scalar operations.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
    values: Vec<f64>,
    adjoints: Vec<f64>,
    args: Vec<u32>,
    coefs: Vec<f64>,
    zero: Option<Var>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops every record but keeps the allocations.
    pub fn clear(&mut self) {
        self.nodes.clear();
        self.values.clear();
        self.args.clear();
        self.coefs.clear();
        self.zero = None;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> f64 {
        self.values[v.index()]
    }

    #[inline]
    fn push(&mut self, node: Node, value: f64) -> Var {
        let idx = self.nodes.len();
        self.nodes.push(node);
        self.values.push(value);
        Var(idx as u32)
    }

    /// Independent input. Constants are leaves whose adjoint is ignored.
    #[inline]
    pub fn leaf(&mut self, value: f64) -> Var {
        self.push(Node::Leaf, value)
    }

    /// Shared zero constant, used as the bias of bias-free dot products.
    fn zero(&mut self) -> Var {
        match self.zero {
            Some(z) => z,
            None => {
                let z = self.leaf(0.0);
                self.zero = Some(z);
                z
            }
        }
    }

    fn check(&self, v: Var) -> Result<(), DiffError> {
        if v.index() < self.nodes.len() {
            Ok(())
        } else {
            Err(DiffError::InvalidIndex(v.index()))
        }
    }

    /// Generic entry point: appends `op(inputs)` and evaluates it.
    pub fn record(&mut self, op: OpCode, inputs: &[Var]) -> Result<Var, DiffError> {
        if inputs.len() != op.arity() {
            return Err(DiffError::Arity { expected: op.arity(), got: inputs.len() });
        }
        for &v in inputs {
            self.check(v)?;
        }
        let a = inputs[0];
        Ok(match op {
            OpCode::Add => self.add(a, inputs[1]),
            OpCode::Sub => self.sub(a, inputs[1]),
            OpCode::Mul => self.mul(a, inputs[1]),
            OpCode::Div => self.div(a, inputs[1])?,
            OpCode::Neg => self.neg(a),
            OpCode::Exp => self.exp(a),
            OpCode::Log => self.log(a)?,
            OpCode::Tanh => self.tanh(a),
            OpCode::Sigmoid => self.sigmoid(a),
            OpCode::Softplus => self.softplus(a),
            OpCode::LogSigmoid => self.log_sigmoid(a),
            OpCode::Log1mExp => self.log1mexp(a)?,
            OpCode::PowInt(n) => self.powi(a, n),
        })
    }

    #[inline]
    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(Node::Binary(Binary::Add, a.0, b.0), v)
    }

    #[inline]
    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) - self.value(b);
        self.push(Node::Binary(Binary::Sub, a.0, b.0), v)
    }

    #[inline]
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b);
        self.push(Node::Binary(Binary::Mul, a.0, b.0), v)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var, DiffError> {
        let den = self.value(b);
        if den == 0.0 {
            return Err(DiffError::Domain { op: "div", value: den });
        }
        let v = self.value(a) / den;
        Ok(self.push(Node::Binary(Binary::Div, a.0, b.0), v))
    }

    #[inline]
    pub fn neg(&mut self, a: Var) -> Var {
        let v = -self.value(a);
        self.push(Node::Unary(Unary::Neg, a.0), v)
    }

    #[inline]
    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).exp();
        self.push(Node::Unary(Unary::Exp, a.0), v)
    }

    pub fn log(&mut self, a: Var) -> Result<Var, DiffError> {
        let x = self.value(a);
        if x <= 0.0 || x.is_nan() {
            return Err(DiffError::Domain { op: "log", value: x });
        }
        Ok(self.push(Node::Unary(Unary::Log, a.0), x.ln()))
    }

    #[inline]
    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).tanh();
        self.push(Node::Unary(Unary::Tanh, a.0), v)
    }

    #[inline]
    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = numeric::sigmoid(self.value(a));
        self.push(Node::Unary(Unary::Sigmoid, a.0), v)
    }

    #[inline]
    pub fn softplus(&mut self, a: Var) -> Var {
        let v = numeric::softplus(self.value(a));
        self.push(Node::Unary(Unary::Softplus, a.0), v)
    }

    #[inline]
    pub fn log_sigmoid(&mut self, a: Var) -> Var {
        let v = numeric::log_sigmoid(self.value(a));
        self.push(Node::Unary(Unary::LogSigmoid, a.0), v)
    }

    pub fn log1mexp(&mut self, a: Var) -> Result<Var, DiffError> {
        let x = self.value(a);
        if x <= 0.0 || x.is_nan() {
            return Err(DiffError::Domain { op: "log1mexp", value: x });
        }
        Ok(self.push(Node::Unary(Unary::Log1mExp, a.0), numeric::log1mexp(x)))
    }

    #[inline]
    pub fn powi(&mut self, a: Var, n: i32) -> Var {
        let v = self.value(a).powi(n);
        self.push(Node::PowInt(a.0, n), v)
    }

    /// `bias + Σ c_k · v_k` with constant coefficients.
    pub fn linear<I>(&mut self, terms: I, bias: f64) -> Var
    where
        I: IntoIterator<Item = (Var, f64)>,
    {
        let start = self.args.len();
        let mut acc = bias;
        for (v, c) in terms {
            acc += c * self.values[v.index()];
            self.args.push(v.0);
            self.coefs.push(c);
        }
        let len = self.args.len() - start;
        self.push(Node::Linear { start: start as u32, len: len as u32 }, acc)
    }

    /// `bias + Σ a_k · b_k` where both factors are recorded values.
    pub fn dot<I>(&mut self, pairs: I, bias: Option<Var>) -> Var
    where
        I: IntoIterator<Item = (Var, Var)>,
    {
        let bias = match bias {
            Some(b) => b,
            None => self.zero(),
        };
        let start = self.args.len();
        self.args.push(bias.0);
        self.coefs.push(0.0);
        let mut acc = self.values[bias.index()];
        for (a, b) in pairs {
            acc += self.values[a.index()] * self.values[b.index()];
            self.args.push(a.0);
            self.args.push(b.0);
            self.coefs.push(0.0);
            self.coefs.push(0.0);
        }
        let pairs = (self.args.len() - start - 1) / 2;
        self.push(Node::Dot { start: start as u32, pairs: pairs as u32 }, acc)
    }

    /// Sum of recorded values.
    pub fn sum(&mut self, vars: &[Var]) -> Var {
        self.linear(vars.iter().map(|&v| (v, 1.0)), 0.0)
    }

    /// Reverse sweep from `output`. Returns the adjoint of every record;
    /// records that do not influence `output` keep adjoint 0.
    pub fn backward(&mut self, output: Var) -> &[f64] {
        let n = self.nodes.len();
        self.adjoints.clear();
        self.adjoints.resize(n, 0.0);
        if output.index() >= n {
            return &self.adjoints;
        }
        self.adjoints[output.index()] = 1.0;
        for k in (0..=output.index()).rev() {
            let g = self.adjoints[k];
            if g == 0.0 {
                continue;
            }
            match self.nodes[k] {
                Node::Leaf => {}
                Node::Unary(op, a) => {
                    let a = a as usize;
                    let x = self.values[a];
                    let y = self.values[k];
                    let d = match op {
                        Unary::Neg => -1.0,
                        Unary::Exp => y,
                        Unary::Log => 1.0 / x,
                        Unary::Tanh => 1.0 - y * y,
                        Unary::Sigmoid => y * (1.0 - y),
                        Unary::Softplus => numeric::sigmoid(x),
                        Unary::LogSigmoid => numeric::sigmoid(-x),
                        Unary::Log1mExp => 1.0 / x.exp_m1(),
                    };
                    self.adjoints[a] += g * d;
                }
                Node::Binary(op, a, b) => {
                    let (a, b) = (a as usize, b as usize);
                    match op {
                        Binary::Add => {
                            self.adjoints[a] += g;
                            self.adjoints[b] += g;
                        }
                        Binary::Sub => {
                            self.adjoints[a] += g;
                            self.adjoints[b] -= g;
                        }
                        Binary::Mul => {
                            let (va, vb) = (self.values[a], self.values[b]);
                            self.adjoints[a] += g * vb;
                            self.adjoints[b] += g * va;
                        }
                        Binary::Div => {
                            let vb = self.values[b];
                            let y = self.values[k];
                            self.adjoints[a] += g / vb;
                            self.adjoints[b] -= g * y / vb;
                        }
                    }
                }
                Node::PowInt(a, n) => {
                    let a = a as usize;
                    let d = if n == 0 { 0.0 } else { n as f64 * self.values[a].powi(n - 1) };
                    self.adjoints[a] += g * d;
                }
                Node::Linear { start, len } => {
                    let (s, e) = (start as usize, (start + len) as usize);
                    for idx in s..e {
                        let a = self.args[idx] as usize;
                        self.adjoints[a] += g * self.coefs[idx];
                    }
                }
                Node::Dot { start, pairs } => {
                    let s = start as usize;
                    let bias = self.args[s] as usize;
                    self.adjoints[bias] += g;
                    for p in 0..pairs as usize {
                        let a = self.args[s + 1 + 2 * p] as usize;
                        let b = self.args[s + 2 + 2 * p] as usize;
                        let (va, vb) = (self.values[a], self.values[b]);
                        self.adjoints[a] += g * vb;
                        self.adjoints[b] += g * va;
                    }
                }
            }
        }
        &self.adjoints
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn forward_values() {
        let mut t = Tape::new();
        let z = t.leaf(0.0);
        let sp = t.record(OpCode::Softplus, &[z]).unwrap();
        assert_relative_eq!(t.value(sp), std::f64::consts::LN_2, epsilon = 1e-15);
        let s = t.record(OpCode::Sigmoid, &[z]).unwrap();
        assert_eq!(t.value(s), 0.5);
        assert!(matches!(t.record(OpCode::Log, &[z]), Err(DiffError::Domain { .. })));
        assert!(matches!(t.record(OpCode::Div, &[s, z]), Err(DiffError::Domain { .. })));
        assert!(matches!(t.record(OpCode::Add, &[z]), Err(DiffError::Arity { .. })));
        assert!(matches!(
            t.record(OpCode::Neg, &[Var(999)]),
            Err(DiffError::InvalidIndex(999))
        ));
    }

    #[test]
    fn product_rule() {
        let mut t = Tape::new();
        let a = t.leaf(3.0);
        let b = t.leaf(4.0);
        let f = t.mul(a, b);
        let g = t.backward(f);
        assert_eq!((g[a.index()], g[b.index()]), (4.0, 3.0));
    }

    #[test]
    fn softplus_and_log_sigmoid_slopes_at_zero() {
        let mut t = Tape::new();
        let x = t.leaf(0.0);
        let f = t.softplus(x);
        assert_relative_eq!(t.backward(f)[x.index()], 0.5);
        t.clear();
        let x = t.leaf(0.0);
        let f = t.log_sigmoid(x);
        assert_relative_eq!(t.backward(f)[x.index()], 0.5);
    }

    #[test]
    fn unreachable_leaf_has_zero_adjoint() {
        let mut t = Tape::new();
        let a = t.leaf(1.0);
        let b = t.leaf(2.0);
        let f = t.exp(a);
        let g = t.backward(f);
        assert_eq!(g[b.index()], 0.0);
        assert_relative_eq!(g[a.index()], 1f64.exp());
    }

    #[test]
    fn fused_records_match_elementary_ones() {
        let mut t = Tape::new();
        let x = t.leaf(0.7);
        let y = t.leaf(-1.3);
        let b = t.leaf(0.2);
        let lin = t.linear([(x, 2.0), (y, -0.5)], 1.0);
        let dot = t.dot([(x, y), (y, y)], Some(b));
        let out = t.add(lin, dot);
        assert_relative_eq!(t.value(out), 1.0 + 1.4 + 0.65 + 0.2 + 0.7 * -1.3 + 1.69);
        let g = t.backward(out).to_vec();
        assert_relative_eq!(g[x.index()], 2.0 + -1.3);
        assert_relative_eq!(g[y.index()], -0.5 + 0.7 + 2.0 * -1.3);
        assert_relative_eq!(g[b.index()], 1.0);
    }

    #[test]
    fn repeated_evaluation_is_bit_identical() {
        let run = || {
            let mut t = Tape::new();
            let x = t.leaf(0.3);
            let a = t.tanh(x);
            let b = t.powi(a, 3);
            let c = t.log1mexp(b).unwrap_or(b);
            let d = t.softplus(c);
            let v = t.value(d);
            (v, t.backward(d).to_vec())
        };
        assert_eq!(run(), run());
    }
}
