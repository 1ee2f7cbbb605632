//! Numerically careful scalar helpers shared by the tape and the f64 paths.

/// Logistic function `1 / (1 + e^{-x})`, stable for large |x|.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)`; the positive branch is `x + log1p(e^{-x})`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Inverse of [`softplus`] on `(0, ∞)`.
pub fn softplus_inv(y: f64) -> f64 {
    assert!(y > 0.0, "softplus_inv needs a positive argument");
    if y > 30.0 {
        y + (-(-y).exp_m1()).ln()
    } else {
        y.exp_m1().ln()
    }
}

#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

/// `log(1 − e^{−x})` for `x > 0`.
#[inline]
pub fn log1mexp(x: f64) -> f64 {
    if x < std::f64::consts::LN_2 {
        (-(-x).exp_m1()).ln()
    } else {
        (-(-x).exp()).ln_1p()
    }
}

/// Log density of the standard logistic distribution.
#[inline]
pub fn logistic_log_density(z: f64) -> f64 {
    log_sigmoid(z) + log_sigmoid(-z)
}

/// Quantile of the standard logistic distribution, `log(p / (1 − p))`.
#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn stable_branches() {
        assert_relative_eq!(softplus(0.0), std::f64::consts::LN_2);
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
        assert_relative_eq!(softplus(-20.0), 2.061153618190204e-9, max_relative = 1e-12);
        assert_relative_eq!(sigmoid(-800.0), 0.0);
        assert_relative_eq!(sigmoid(800.0), 1.0);
        assert_relative_eq!(log_sigmoid(-800.0), -800.0);
        for y in [1e-6, 0.3, 2.0, 45.0] {
            assert_relative_eq!(softplus(softplus_inv(y)), y, max_relative = 1e-12);
        }
        for x in [1e-8, 0.1, 0.69, 0.7, 5.0, 40.0] {
            assert_relative_eq!(log1mexp(x), (1.0 - (-x).exp()).ln(), max_relative = 1e-6);
        }
    }

    #[test]
    fn logistic_quantile_inverts_cdf() {
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            assert!((sigmoid(logit(p)) - p).abs() < 1e-12);
        }
    }
}
