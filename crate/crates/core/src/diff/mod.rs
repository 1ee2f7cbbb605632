//! Reverse-mode differentiation over scalars and the Adam optimizer.

mod adam;
mod tape;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use tape::{OpCode, Tape, Var};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffError {
    #[error("{op} is undefined at {value}")]
    Domain { op: &'static str, value: f64 },
    #[error("opcode takes {expected} inputs, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("input index {0} is not on the tape")]
    InvalidIndex(usize),
    #[error("length mismatch: {params} params, {grads} grads, {state} state")]
    LengthMismatch { params: usize, grads: usize, state: usize },
}

/// Gradient of `f` at `x` via one forward/backward pass.
pub fn gradient<F>(f: &F, x: &[f64]) -> Result<(f64, Vec<f64>), DiffError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, DiffError>,
{
    let mut tape = Tape::new();
    let inputs: Vec<Var> = x.iter().map(|&v| tape.leaf(v)).collect();
    let out = f(&mut tape, &inputs)?;
    let value = tape.value(out);
    let adj = tape.backward(out);
    Ok((value, inputs.iter().map(|v| adj[v.index()]).collect()))
}

/// Largest componentwise error between the tape gradient and central
/// differences with step `eps`. Each error is `|a − b| / max(1, |a|, |b|)`,
/// i.e. relative for large gradients and absolute near zero.
pub fn finite_diff_check<F>(f: F, x: &[f64], eps: f64) -> Result<f64, DiffError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, DiffError>,
{
    let (_, grad) = gradient(&f, x)?;
    let eval = |point: &[f64]| -> Result<f64, DiffError> {
        let mut tape = Tape::new();
        let inputs: Vec<Var> = point.iter().map(|&v| tape.leaf(v)).collect();
        let out = f(&mut tape, &inputs)?;
        Ok(tape.value(out))
    };
    let mut worst = 0.0f64;
    let mut point = x.to_vec();
    for i in 0..x.len() {
        point[i] = x[i] + eps;
        let up = eval(&point)?;
        point[i] = x[i] - eps;
        let down = eval(&point)?;
        point[i] = x[i];
        let fd = (up - down) / (2.0 * eps);
        let err = (grad[i] - fd).abs() / 1f64.max(grad[i].abs()).max(fd.abs());
        worst = worst.max(err);
    }
    Ok(worst)
}
