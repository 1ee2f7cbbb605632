use rand::Rng;

use super::{
    discrete_class_probs, intercept_deriv, intercept_value, invert_intercept, monotone_params,
    ramp_raw, sample_discrete, Scaler, TransformError,
};
use crate::diff::{DiffError, Tape, Var};
use crate::graph::{DagSpec, EffectKind, NodeKind};
use crate::nn::Mlp;
use crate::numeric;

/// Lower bound on `h'` before the log-derivative is replaced by its tangent.
pub const MIN_SLOPE: f64 = 1e-12;

/// What is being modeled at this node.
#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Continuous { scaler: Scaler, order: usize },
    Discrete { levels: usize },
}

impl Response {
    /// Length of the raw intercept vector.
    pub fn intercept_len(&self) -> usize {
        match self {
            Response::Continuous { order, .. } => order + 1,
            Response::Discrete { levels } => levels - 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Intercept {
    /// Raw parameters shared by every parent configuration.
    Simple(Vec<f64>),
    /// Network from the listed parents to the raw parameters.
    Complex { parents: Vec<usize>, net: Mlp },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShiftTerm {
    Linear { parent: usize, beta: f64 },
    /// `γ(x_parent) − centering`; the centering constant is folded into the
    /// intercept after training.
    Complex { parent: usize, net: Mlp, centering: f64 },
}

impl ShiftTerm {
    pub fn parent(&self) -> usize {
        match self {
            ShiftTerm::Linear { parent, .. } | ShiftTerm::Complex { parent, .. } => *parent,
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            ShiftTerm::Linear { .. } => 1,
            ShiftTerm::Complex { net, .. } => net.param_count(),
        }
    }

    /// Value of the term at a parent value, centering applied.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ShiftTerm::Linear { beta, .. } => beta * x,
            ShiftTerm::Complex { net, centering, .. } => net.forward(&[x])[0] - centering,
        }
    }
}

/// One node's transformation model.
#[derive(Debug, Clone, PartialEq)]
pub struct TramNode {
    pub name: String,
    pub index: usize,
    pub response: Response,
    pub intercept: Intercept,
    pub shifts: Vec<ShiftTerm>,
}

/// Intercept quantities on the tape, either shared by a batch (simple
/// intercept) or built per row (complex intercept).
///
/// Continuous: `terms = [ϑ_0, s_1, …, s_M]`. Discrete: `terms` holds the cut
/// points `ϑ_1 … ϑ_{K−1}` and `gaps[k]` the positive increment `ϑ_{k+1} − ϑ_k`.
#[derive(Debug, Default, Clone)]
pub struct InterceptVars {
    pub terms: Vec<Var>,
    pub gaps: Vec<Var>,
}

/// Scratch buffers reused across rows.
#[derive(Debug, Default)]
pub struct TapeScratch {
    linear: Vec<(Var, f64)>,
    net_out: Vec<Var>,
    row_intercept: InterceptVars,
    inputs: Vec<f64>,
}

impl TramNode {
    /// Fresh node: intercept ramp `−2 … 2`, linear shifts at 0, networks with
    /// random weights. Complex-intercept networks start with output biases
    /// equal to the ramp.
    pub fn init<R: Rng>(spec: &DagSpec, index: usize, scaler: Option<Scaler>, rng: &mut R) -> Self {
        let decl = spec.node(index);
        let response = match decl.kind {
            NodeKind::Continuous => Response::Continuous {
                scaler: scaler.expect("continuous node needs a scaler"),
                order: decl.bernstein_order,
            },
            kind => Response::Discrete { levels: kind.levels().expect("discrete") },
        };
        let ramp = ramp_raw(response.intercept_len(), -2.0, 2.0);
        let parents = spec.parents(index);
        let ci_parents: Vec<usize> = parents
            .iter()
            .filter(|(_, e)| *e == EffectKind::ComplexIntercept)
            .map(|(p, _)| *p)
            .collect();
        let intercept = if ci_parents.is_empty() {
            Intercept::Simple(ramp)
        } else {
            let mut net = Mlp::new(ci_parents.len(), ramp.len(), rng);
            net.output_layer_mut().bias = ramp;
            Intercept::Complex { parents: ci_parents, net }
        };
        let shifts = parents
            .iter()
            .filter_map(|&(p, e)| match e {
                EffectKind::LinearShift => Some(ShiftTerm::Linear { parent: p, beta: 0.0 }),
                EffectKind::ComplexShift => Some(ShiftTerm::Complex {
                    parent: p,
                    net: Mlp::new(1, 1, rng),
                    centering: 0.0,
                }),
                _ => None,
            })
            .collect();
        TramNode { name: decl.name.clone(), index, response, intercept, shifts }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.response, Response::Continuous { .. })
    }

    pub fn scaler(&self) -> Option<Scaler> {
        match self.response {
            Response::Continuous { scaler, .. } => Some(scaler),
            Response::Discrete { .. } => None,
        }
    }

    pub fn levels(&self) -> Option<usize> {
        match self.response {
            Response::Discrete { levels } => Some(levels),
            Response::Continuous { .. } => None,
        }
    }

    /// Every parent the node reads, ascending.
    pub fn parents(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.shifts.iter().map(ShiftTerm::parent).collect();
        if let Intercept::Complex { parents, .. } = &self.intercept {
            out.extend(parents);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn param_count(&self) -> usize {
        let ic = match &self.intercept {
            Intercept::Simple(raw) => raw.len(),
            Intercept::Complex { net, .. } => net.param_count(),
        };
        ic + self.shifts.iter().map(ShiftTerm::param_count).sum::<usize>()
    }

    pub fn write_params(&self, out: &mut Vec<f64>) {
        match &self.intercept {
            Intercept::Simple(raw) => out.extend_from_slice(raw),
            Intercept::Complex { net, .. } => net.write_params(out),
        }
        for s in &self.shifts {
            match s {
                ShiftTerm::Linear { beta, .. } => out.push(*beta),
                ShiftTerm::Complex { net, .. } => net.write_params(out),
            }
        }
    }

    pub fn read_params(&mut self, src: &[f64]) -> usize {
        let mut at = match &mut self.intercept {
            Intercept::Simple(raw) => {
                let n = raw.len();
                raw.copy_from_slice(&src[..n]);
                n
            }
            Intercept::Complex { net, .. } => net.read_params(src),
        };
        for s in &mut self.shifts {
            match s {
                ShiftTerm::Linear { beta, .. } => {
                    *beta = src[at];
                    at += 1;
                }
                ShiftTerm::Complex { net, .. } => at += net.read_params(&src[at..]),
            }
        }
        at
    }

    fn parent_value(&self, row: &[f64], parent: usize) -> Result<f64, TransformError> {
        let v = row[parent];
        if v.is_finite() {
            Ok(v)
        } else {
            Err(TransformError::MissingParent {
                node: self.name.clone(),
                parent: format!("#{parent}"),
            })
        }
    }

    /// Raw intercept parameters for the parent values in `row`.
    pub fn raw_intercept(&self, row: &[f64]) -> Result<Vec<f64>, TransformError> {
        match &self.intercept {
            Intercept::Simple(raw) => Ok(raw.clone()),
            Intercept::Complex { parents, net } => {
                let input = parents
                    .iter()
                    .map(|&p| self.parent_value(row, p))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(net.forward(&input))
            }
        }
    }

    /// Monotone intercept parameters (Bernstein coefficients or cut points).
    pub fn theta(&self, row: &[f64]) -> Result<Vec<f64>, TransformError> {
        Ok(monotone_params(&self.raw_intercept(row)?))
    }

    /// Sum of the shift terms, in latent units.
    pub fn shift(&self, row: &[f64]) -> Result<f64, TransformError> {
        let mut total = 0.0;
        for s in &self.shifts {
            total += s.eval(self.parent_value(row, s.parent())?);
        }
        Ok(total)
    }

    fn continuous_parts(&self) -> Result<Scaler, TransformError> {
        self.scaler().ok_or_else(|| TransformError::NotContinuous(self.name.clone()))
    }

    /// `h(x | parents)` for a continuous node.
    pub fn eval_h(&self, x: f64, row: &[f64]) -> Result<f64, TransformError> {
        let scaler = self.continuous_parts()?;
        if !x.is_finite() {
            return Err(TransformError::NonFiniteInput(x));
        }
        let theta = self.theta(row)?;
        Ok(intercept_value(&theta, scaler.standardize(x)) + self.shift(row)?)
    }

    /// `∂h/∂x` in data units.
    pub fn dh_dx(&self, x: f64, row: &[f64]) -> Result<f64, TransformError> {
        let scaler = self.continuous_parts()?;
        let theta = self.theta(row)?;
        Ok(intercept_deriv(&theta, scaler.standardize(x)) / scaler.range())
    }

    /// The `x` with `h(x | parents) = u`.
    pub fn invert_h(&self, u: f64, row: &[f64]) -> Result<f64, TransformError> {
        let scaler = self.continuous_parts()?;
        if !u.is_finite() {
            return Err(TransformError::NonFiniteInput(u));
        }
        let theta = self.theta(row)?;
        let z = invert_intercept(&theta, u - self.shift(row)?)?;
        Ok(scaler.destandardize(z))
    }

    /// Cut points and total shift for a discrete node.
    pub fn cuts_and_shift(&self, row: &[f64]) -> Result<(Vec<f64>, f64), TransformError> {
        if self.is_continuous() {
            return Err(TransformError::NotDiscrete(self.name.clone()));
        }
        Ok((self.theta(row)?, self.shift(row)?))
    }

    pub fn class_probs(&self, row: &[f64]) -> Result<Vec<f64>, TransformError> {
        let (cuts, shift) = self.cuts_and_shift(row)?;
        Ok(discrete_class_probs(&cuts, shift))
    }

    /// Level for latent draw `u` (discrete nodes).
    pub fn sample_level(&self, u: f64, row: &[f64]) -> Result<usize, TransformError> {
        let (cuts, shift) = self.cuts_and_shift(row)?;
        Ok(sample_discrete(&cuts, shift, u))
    }

    /// Negative log-likelihood of `row[self.index]` given its parents in `row`.
    /// The second value flags a clamped derivative.
    pub fn nll(&self, row: &[f64]) -> Result<(f64, bool), TransformError> {
        let own = row[self.index];
        if !own.is_finite() {
            return Err(TransformError::NonFiniteInput(own));
        }
        let theta = self.theta(row)?;
        let shift = self.shift(row)?;
        match self.response {
            Response::Continuous { scaler, .. } => {
                let z = scaler.standardize(own);
                let u = intercept_value(&theta, z) + shift;
                let slope = intercept_deriv(&theta, z);
                let (log_slope, clamped) = guarded_log_slope(slope);
                Ok((-numeric::logistic_log_density(u) - log_slope + scaler.range().ln(), clamped))
            }
            Response::Discrete { levels } => {
                let k = own as usize;
                Ok((discrete_nll(&theta, shift, k, levels), false))
            }
        }
    }

    /// Builds intercept terms from raw parameter leaves (or network outputs).
    pub fn intercept_vars(&self, tape: &mut Tape, raw: &[Var], out: &mut InterceptVars) {
        out.terms.clear();
        out.gaps.clear();
        match self.response {
            Response::Continuous { .. } => {
                out.terms.push(raw[0]);
                for &r in &raw[1..] {
                    let s = tape.softplus(r);
                    out.terms.push(s);
                }
            }
            Response::Discrete { .. } => {
                let mut acc = raw[0];
                out.terms.push(acc);
                for &r in &raw[1..] {
                    let s = tape.softplus(r);
                    acc = tape.add(acc, s);
                    out.gaps.push(s);
                    out.terms.push(acc);
                }
            }
        }
    }

    /// Intercept terms shared across a batch, `None` for complex intercepts.
    pub fn batch_vars(&self, tape: &mut Tape, params: &[Var]) -> Option<InterceptVars> {
        match &self.intercept {
            Intercept::Simple(raw) => {
                let mut out = InterceptVars::default();
                self.intercept_vars(tape, &params[..raw.len()], &mut out);
                Some(out)
            }
            Intercept::Complex { .. } => None,
        }
    }

    /// Records the row's negative log-likelihood.
    ///
    /// `params` are this node's parameter leaves, `shared` the result of
    /// [`TramNode::batch_vars`], and `design` the precomputed
    /// [`super::increment_design`] coefficients of the row (continuous nodes).
    /// Returns the NLL record and whether the slope guard fired.
    #[allow(clippy::too_many_arguments)]
    pub fn nll_tape(
        &self,
        tape: &mut Tape,
        params: &[Var],
        shared: Option<&InterceptVars>,
        row: &[f64],
        design: Option<(&[f64], &[f64])>,
        scratch: &mut TapeScratch,
    ) -> Result<(Var, bool), DiffError> {
        let intercept_len = match &self.intercept {
            Intercept::Simple(raw) => raw.len(),
            Intercept::Complex { net, .. } => net.param_count(),
        };
        let mut row_vars = std::mem::take(&mut scratch.row_intercept);
        let intercept: &InterceptVars = match (&self.intercept, shared) {
            (Intercept::Simple(_), Some(shared)) => shared,
            (Intercept::Simple(_), None) => {
                self.intercept_vars(tape, &params[..intercept_len], &mut row_vars);
                &row_vars
            }
            (Intercept::Complex { parents, net }, _) => {
                scratch.inputs.clear();
                scratch.inputs.extend(parents.iter().map(|&p| row[p]));
                let mut out = std::mem::take(&mut scratch.net_out);
                net.forward_tape(tape, &params[..intercept_len], &scratch.inputs, &mut out);
                self.intercept_vars(tape, &out, &mut row_vars);
                scratch.net_out = out;
                &row_vars
            }
        };

        // shift terms as (var, coefficient) pairs plus a constant
        scratch.linear.clear();
        let mut bias = 0.0;
        let mut at = intercept_len;
        for s in &self.shifts {
            let x = row[s.parent()];
            match s {
                ShiftTerm::Linear { .. } => {
                    scratch.linear.push((params[at], x));
                    at += 1;
                }
                ShiftTerm::Complex { net, centering, .. } => {
                    let n = net.param_count();
                    let mut out = std::mem::take(&mut scratch.net_out);
                    net.forward_tape(tape, &params[at..at + n], &[x], &mut out);
                    scratch.linear.push((out[0], 1.0));
                    scratch.net_out = out;
                    bias -= centering;
                    at += n;
                }
            }
        }

        let result = match self.response {
            Response::Continuous { scaler, .. } => {
                let (value, deriv) = design.expect("continuous rows need a design");
                scratch.linear.extend(intercept.terms.iter().copied().zip(value.iter().copied()));
                let u = tape.linear(scratch.linear.iter().copied(), bias);
                let slope = tape.linear(
                    intercept.terms[1..].iter().copied().zip(deriv.iter().copied()),
                    0.0,
                );
                let slope_value = tape.value(slope);
                let (log_slope, clamped) = if slope_value >= MIN_SLOPE {
                    (tape.log(slope)?, false)
                } else {
                    (tape.linear([(slope, 1.0 / MIN_SLOPE)], MIN_SLOPE.ln() - 1.0), true)
                };
                let a = tape.log_sigmoid(u);
                let neg_u = tape.neg(u);
                let b = tape.log_sigmoid(neg_u);
                let nll =
                    tape.linear([(a, -1.0), (b, -1.0), (log_slope, -1.0)], scaler.range().ln());
                (nll, clamped)
            }
            Response::Discrete { levels } => {
                let k = row[self.index] as usize;
                let shift_terms = scratch.linear.len();
                let at_cut = |tape: &mut Tape, lin: &mut Vec<(Var, f64)>, cut: Var| {
                    lin.truncate(shift_terms);
                    lin.push((cut, 1.0));
                    tape.linear(lin.iter().copied(), bias)
                };
                let nll = if k <= 1 {
                    let z = at_cut(tape, &mut scratch.linear, intercept.terms[0]);
                    let l = tape.log_sigmoid(z);
                    tape.neg(l)
                } else if k >= levels {
                    let z = at_cut(tape, &mut scratch.linear, intercept.terms[levels - 2]);
                    let nz = tape.neg(z);
                    let l = tape.log_sigmoid(nz);
                    tape.neg(l)
                } else {
                    let upper = at_cut(tape, &mut scratch.linear, intercept.terms[k - 1]);
                    let lower = at_cut(tape, &mut scratch.linear, intercept.terms[k - 2]);
                    let a = tape.log_sigmoid(upper);
                    let neg_lower = tape.neg(lower);
                    let b = tape.log_sigmoid(neg_lower);
                    let c = tape.log1mexp(intercept.gaps[k - 2])?;
                    tape.linear([(a, -1.0), (b, -1.0), (c, -1.0)], 0.0)
                };
                (nll, false)
            }
        };
        scratch.row_intercept = row_vars;
        Ok(result)
    }
}

fn guarded_log_slope(slope: f64) -> (f64, bool) {
    if slope >= MIN_SLOPE {
        (slope.ln(), false)
    } else {
        (MIN_SLOPE.ln() - 1.0 + slope / MIN_SLOPE, true)
    }
}

/// `−log P(X = k)` using the same factorization as the tape path.
pub(crate) fn discrete_nll(cuts: &[f64], shift: f64, k: usize, levels: usize) -> f64 {
    if k <= 1 {
        -numeric::log_sigmoid(cuts[0] + shift)
    } else if k >= levels {
        -numeric::log_sigmoid(-(cuts[levels - 2] + shift))
    } else {
        let upper = cuts[k - 1] + shift;
        let lower = cuts[k - 2] + shift;
        -(numeric::log_sigmoid(upper)
            + numeric::log_sigmoid(-lower)
            + numeric::log1mexp(cuts[k - 1] - cuts[k - 2]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_dag_spec;
    use crate::transform::{increment_design, monotone_params};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_node() -> TramNode {
        // M = 1, ϑ = (0, 1): h is the identity on the standardized scale
        TramNode {
            name: "X".into(),
            index: 0,
            response: Response::Continuous { scaler: Scaler::new(0.0, 1.0), order: 1 },
            intercept: Intercept::Simple(vec![0.0, crate::numeric::softplus_inv(1.0)]),
            shifts: vec![],
        }
    }

    #[test]
    fn additive_shift_structure() {
        let mut node = identity_node();
        node.index = 1;
        node.shifts.push(ShiftTerm::Linear { parent: 0, beta: 2.0 });
        let u = node.eval_h(0.3, &[1.0, 0.3]).unwrap();
        assert_relative_eq!(u, 2.3, epsilon = 1e-12);
        assert!(matches!(
            node.eval_h(0.3, &[f64::NAN, 0.3]),
            Err(TransformError::MissingParent { .. })
        ));
    }

    #[test]
    fn source_node_evaluates_intercept() {
        let node = identity_node();
        assert_relative_eq!(node.eval_h(0.5, &[0.5]).unwrap(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(node.invert_h(0.5, &[0.0]).unwrap(), 0.5, epsilon = 1e-10);
        // beyond the boundary the tangent line continues the identity
        assert_relative_eq!(node.invert_h(4.0, &[0.0]).unwrap(), 4.0, epsilon = 1e-10);
    }

    #[test]
    fn identity_nll_closed_form() {
        let node = TramNode {
            response: Response::Continuous { scaler: Scaler::new(-1.0, 3.0), order: 1 },
            ..identity_node()
        };
        // x = 1 → z = 0.5 = u, h' = 1 on the standardized scale
        let (nll, clamped) = node.nll(&[1.0]).unwrap();
        let density = (-0.5f64).exp() / (1.0 + (-0.5f64).exp()).powi(2);
        assert_relative_eq!(nll, -density.ln() + 4f64.ln(), max_relative = 1e-12);
        assert!(!clamped);
    }

    #[test]
    fn binary_symmetric_cut() {
        let node = TramNode {
            name: "B".into(),
            index: 0,
            response: Response::Discrete { levels: 2 },
            intercept: Intercept::Simple(vec![0.0]),
            shifts: vec![],
        };
        assert_relative_eq!(node.nll(&[1.0]).unwrap().0, 2f64.ln());
        assert_relative_eq!(node.nll(&[2.0]).unwrap().0, 2f64.ln());
        assert_eq!(node.class_probs(&[1.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn fig3_node_x3() {
        let spec = parse_dag_spec(
            "node X1 continuous\nnode X2 continuous\nnode X3 continuous\n\
             edge X1 -> X2 : ci\nedge X1 -> X3 : ls\nedge X2 -> X3 : cs",
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut node = TramNode::init(&spec, 2, Some(Scaler::new(-2.0, 2.0)), &mut rng);
        if let ShiftTerm::Linear { beta, .. } = &mut node.shifts[0] {
            *beta = -0.2;
        }
        let row = [1.5, 0.4, 0.7];
        let cs = node.shifts[1].eval(0.4);
        let theta = node.theta(&row).unwrap();
        let hi = intercept_value(&theta, Scaler::new(-2.0, 2.0).standardize(0.7));
        assert_relative_eq!(
            node.eval_h(0.7, &row).unwrap(),
            hi - 0.2 * 1.5 + cs,
            max_relative = 1e-12
        );
        let x2 = TramNode::init(&spec, 1, Some(Scaler::new(-2.0, 2.0)), &mut rng);
        assert!(matches!(x2.intercept, Intercept::Complex { .. }));
        // the initial complex intercept is centered on the ramp
        assert_eq!(x2.parents(), vec![0]);
    }

    fn tape_nll(node: &TramNode, row: &[f64]) -> (f64, Vec<f64>) {
        let mut params = Vec::new();
        node.write_params(&mut params);
        let mut tape = Tape::new();
        let vars: Vec<Var> = params.iter().map(|&p| tape.leaf(p)).collect();
        let shared = node.batch_vars(&mut tape, &vars);
        let design = node.scaler().map(|s| {
            let order = match node.response {
                Response::Continuous { order, .. } => order,
                _ => unreachable!(),
            };
            let mut v = vec![0.0; order + 1];
            let mut d = vec![0.0; order];
            increment_design(order, s.standardize(row[node.index]), &mut v, &mut d);
            (v, d)
        });
        let mut scratch = TapeScratch::default();
        let (out, _) = node
            .nll_tape(
                &mut tape,
                &vars,
                shared.as_ref(),
                row,
                design.as_ref().map(|(v, d)| (v.as_slice(), d.as_slice())),
                &mut scratch,
            )
            .unwrap();
        let value = tape.value(out);
        let adj = tape.backward(out);
        (value, vars.iter().map(|v| adj[v.index()]).collect())
    }

    #[test]
    fn tape_and_direct_nll_agree_with_gradients() {
        let spec = parse_dag_spec(
            "node A continuous\nnode B continuous\nnode C ordinal 4\nnode D continuous\n\
             edge A -> B : cs\nedge A -> C : ls\nedge B -> C : cs\n\
             edge A -> D : ci\nedge B -> D : ci",
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let scaler = Some(Scaler::new(-1.0, 2.0));
        let nodes: Vec<TramNode> = (0..4)
            .map(|i| {
                TramNode::init(&spec, i, if i == 2 { None } else { scaler }, &mut rng)
            })
            .collect();
        let rows = [
            [0.3, -0.4, 1.0, 0.2],
            [1.2, 0.9, 2.0, -1.5],
            [-0.7, 2.5, 3.0, 0.8],
            [0.0, 0.1, 4.0, 2.6],
        ];
        for node in &nodes {
            for row in &rows {
                let (value, grad) = tape_nll(node, row);
                let direct = node.nll(row).unwrap().0;
                assert!((value - direct).abs() < 1e-10, "{} {value} {direct}", node.name);
                // central differences on the f64 path
                let mut params = Vec::new();
                node.write_params(&mut params);
                let mut probe = node.clone();
                for (i, g) in grad.iter().enumerate().step_by(7) {
                    let eps = 1e-6;
                    let mut p = params.clone();
                    p[i] += eps;
                    probe.read_params(&p);
                    let up = probe.nll(row).unwrap().0;
                    p[i] -= 2.0 * eps;
                    probe.read_params(&p);
                    let down = probe.nll(row).unwrap().0;
                    let fd = (up - down) / (2.0 * eps);
                    assert!(
                        (fd - g).abs() / g.abs().max(1.0) < 1e-4,
                        "{} param {i}: {g} vs {fd}",
                        node.name
                    );
                }
            }
        }
    }

    #[test]
    fn discrete_nll_matches_probabilities() {
        let cuts = monotone_params(&[-1.0, 0.3, 0.9]);
        let probs = discrete_class_probs(&cuts, 0.4);
        for k in 1..=4 {
            assert_relative_eq!(
                discrete_nll(&cuts, 0.4, k, 4),
                -probs[k - 1].ln(),
                max_relative = 1e-12
            );
        }
    }
}
