//! Transformation functions `h = h_I + h_S` mapping a node onto the standard
//! logistic latent scale.
//!
//! Continuous intercepts are Bernstein polynomials with strictly increasing
//! coefficients on the standardized scale `[0, 1]`, continued by their tangent
//! lines outside it so that `h` is a bijection of the real line. Discrete
//! intercepts are increasing cut-points.

mod node;

pub use node::{Intercept, InterceptVars, Response, ShiftTerm, TapeScratch, TramNode, MIN_SLOPE};

use thiserror::Error;

use crate::numeric;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("node `{node}`: value of parent `{parent}` is missing")]
    MissingParent { node: String, parent: String },
    #[error("non-finite input {0}")]
    NonFiniteInput(f64),
    #[error("node `{0}` is not continuous")]
    NotContinuous(String),
    #[error("node `{0}` is not discrete")]
    NotDiscrete(String),
}

/// Affine map of a continuous node onto the Bernstein domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaler {
    pub low: f64,
    pub high: f64,
}

/// Quantiles of the training data that land on 0 and 1.
pub const SCALER_QUANTILES: (f64, f64) = (0.05, 0.95);

impl Scaler {
    pub fn new(low: f64, high: f64) -> Self {
        assert!(low < high, "scaler needs low < high, got [{low}, {high}]");
        Scaler { low, high }
    }

    /// Bounds at the 5% / 95% sample quantiles; widened to the sample range
    /// (or a unit interval) when the quantiles coincide.
    pub fn fit(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "cannot fit a scaler on no data");
        let mut sorted: Vec<f64> = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (ql, qh) = SCALER_QUANTILES;
        let (mut low, mut high) = (quantile_sorted(&sorted, ql), quantile_sorted(&sorted, qh));
        if low >= high {
            low = sorted[0];
            high = sorted[sorted.len() - 1];
        }
        if low >= high {
            low -= 0.5;
            high += 0.5;
        }
        Scaler { low, high }
    }

    pub fn range(&self) -> f64 {
        self.high - self.low
    }

    #[inline]
    pub fn standardize(&self, x: f64) -> f64 {
        (x - self.low) / (self.high - self.low)
    }

    #[inline]
    pub fn destandardize(&self, z: f64) -> f64 {
        self.low + z * (self.high - self.low)
    }
}

/// Linear-interpolation quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Cumulative-softplus reparametrization: `ϑ_0 = raw_0`,
/// `ϑ_k = ϑ_{k−1} + softplus(raw_k)`.
pub fn monotone_params(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut acc = 0.0;
    for (k, &r) in raw.iter().enumerate() {
        acc = if k == 0 { r } else { acc + numeric::softplus(r) };
        out.push(acc);
    }
    out
}

/// Raw vector whose monotone parameters form an even ramp from `start` to
/// `end` over `len` entries.
pub fn ramp_raw(len: usize, start: f64, end: f64) -> Vec<f64> {
    let mut raw = vec![start; len];
    if len > 1 {
        let step = numeric::softplus_inv((end - start) / (len - 1) as f64);
        raw[1..].iter_mut().for_each(|r| *r = step);
    }
    raw
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Bernstein basis polynomials `b_{k,M}(x) = C(M,k) x^k (1−x)^{M−k}`, written
/// into `out` (length `M + 1`).
pub fn bernstein_basis(order: usize, x: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), order + 1);
    let y = 1.0 - x;
    for (k, o) in out.iter_mut().enumerate() {
        *o = binomial(order, k) * x.powi(k as i32) * y.powi((order - k) as i32);
    }
}

/// `(1/(M+1)) Σ ϑ_k Be_{k,M}(x)` with `Be_{k,M}` the Beta(k+1, M−k+1)
/// density; identical to the plain Bernstein polynomial `Σ ϑ_k b_{k,M}(x)`.
pub fn bernstein_eval(theta: &[f64], x: f64) -> f64 {
    let order = theta.len() - 1;
    let y = 1.0 - x;
    let mut acc = 0.0;
    for (k, &t) in theta.iter().enumerate() {
        acc += t * binomial(order, k) * x.powi(k as i32) * y.powi((order - k) as i32);
    }
    acc
}

/// Derivative in `x` of [`bernstein_eval`]: `Σ (ϑ_{k+1} − ϑ_k) Be_{k,M−1}(x)`.
pub fn bernstein_deriv(theta: &[f64], x: f64) -> f64 {
    let order = theta.len() - 1;
    if order == 0 {
        return 0.0;
    }
    let y = 1.0 - x;
    let mut acc = 0.0;
    for k in 0..order {
        let b = binomial(order - 1, k) * x.powi(k as i32) * y.powi((order - 1 - k) as i32);
        acc += (theta[k + 1] - theta[k]) * b;
    }
    acc * order as f64
}

/// Intercept on the standardized scale with tangent-line continuation
/// outside `[0, 1]`.
pub fn intercept_value(theta: &[f64], z: f64) -> f64 {
    let m = theta.len() - 1;
    if z < 0.0 {
        theta[0] + z * left_slope(theta)
    } else if z > 1.0 {
        theta[m] + (z - 1.0) * right_slope(theta)
    } else {
        bernstein_eval(theta, z)
    }
}

/// Derivative of [`intercept_value`] in the standardized coordinate.
pub fn intercept_deriv(theta: &[f64], z: f64) -> f64 {
    if z < 0.0 {
        left_slope(theta)
    } else if z > 1.0 {
        right_slope(theta)
    } else {
        bernstein_deriv(theta, z)
    }
}

fn left_slope(theta: &[f64]) -> f64 {
    let m = theta.len() - 1;
    m as f64 * (theta[1] - theta[0])
}

fn right_slope(theta: &[f64]) -> f64 {
    let m = theta.len() - 1;
    m as f64 * (theta[m] - theta[m - 1])
}

/// Coefficients expressing the intercept and its derivative as linear forms
/// in `(ϑ_0, s_1, …, s_M)` where `s_j = ϑ_j − ϑ_{j−1}`.
///
/// `value` has length `M + 1`, `deriv` has length `M`.
pub fn increment_design(order: usize, z: f64, value: &mut [f64], deriv: &mut [f64]) {
    debug_assert_eq!(value.len(), order + 1);
    debug_assert_eq!(deriv.len(), order);
    let m = order as f64;
    value.iter_mut().for_each(|v| *v = 0.0);
    deriv.iter_mut().for_each(|v| *v = 0.0);
    value[0] = 1.0;
    if z < 0.0 {
        value[1] = m * z;
        deriv[0] = m;
    } else if z > 1.0 {
        value[1..].iter_mut().for_each(|v| *v = 1.0);
        value[order] += m * (z - 1.0);
        deriv[order - 1] = m;
    } else {
        let mut basis = vec![0.0; order + 1];
        bernstein_basis(order, z, &mut basis);
        let mut tail = 0.0;
        for j in (1..=order).rev() {
            tail += basis[j];
            value[j] = tail;
        }
        let mut lower = vec![0.0; order];
        bernstein_basis(order - 1, z, &mut lower);
        for j in 0..order {
            deriv[j] = m * lower[j];
        }
    }
}

/// Solves `intercept_value(theta, z) = target` for `z`.
///
/// Outside `[ϑ_0, ϑ_M]` the tangent lines are inverted in closed form; inside,
/// bisection runs until the latent residual is below 1e-12 or the bracket
/// collapses (at most 200 halvings).
pub fn invert_intercept(theta: &[f64], target: f64) -> Result<f64, TransformError> {
    if !target.is_finite() {
        return Err(TransformError::NonFiniteInput(target));
    }
    let m = theta.len() - 1;
    let z = if target < theta[0] {
        (target - theta[0]) / left_slope(theta)
    } else if target > theta[m] {
        1.0 + (target - theta[m]) / right_slope(theta)
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut mid = 0.5;
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let r = bernstein_eval(theta, mid) - target;
            if r.abs() <= 1e-12 || hi - lo <= 2.0 * f64::EPSILON {
                break;
            }
            if r < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        mid
    };
    if z.is_finite() {
        Ok(z)
    } else {
        Err(TransformError::NonFiniteInput(z))
    }
}

/// Class probabilities `F(ϑ_k + s) − F(ϑ_{k−1} + s)` for `K = cuts.len() + 1`
/// levels under the standard logistic latent.
pub fn discrete_class_probs(cuts: &[f64], shift: f64) -> Vec<f64> {
    let mut probs = Vec::with_capacity(cuts.len() + 1);
    let mut prev = 0.0;
    for &c in cuts {
        let cdf = numeric::sigmoid(c + shift);
        probs.push(cdf - prev);
        prev = cdf;
    }
    probs.push(1.0 - prev);
    probs
}

/// Smallest level `k ∈ 1..=K` with `ϑ_k + shift ≥ u` (`ϑ_K = +∞`).
pub fn sample_discrete(cuts: &[f64], shift: f64, u: f64) -> usize {
    cuts.iter().position(|&c| c + shift >= u).map_or(cuts.len() + 1, |k| k + 1)
}

/// Standard logistic latent distribution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LatentLogistic;

impl LatentLogistic {
    pub fn cdf(self, z: f64) -> f64 {
        numeric::sigmoid(z)
    }

    pub fn quantile(self, p: f64) -> f64 {
        numeric::logit(p)
    }

    pub fn log_density(self, z: f64) -> f64 {
        numeric::logistic_log_density(z)
    }

    pub fn density(self, z: f64) -> f64 {
        self.log_density(z).exp()
    }
}
