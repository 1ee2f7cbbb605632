use super::DiffError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Moment estimates for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub hyper: AdamConfig,
}

impl AdamState {
    pub fn new(len: usize, hyper: AdamConfig) -> Self {
        AdamState {
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            step_count: 0,
            hyper,
        }
    }

    pub fn len(&self) -> usize {
        self.first_moment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_moment.is_empty()
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<(), DiffError> {
    if params.len() != grads.len() || params.len() != state.len() {
        return Err(DiffError::LengthMismatch {
            params: params.len(),
            grads: grads.len(),
            state: state.len(),
        });
    }
    state.step_count += 1;
    let AdamConfig { learning_rate, beta1, beta2, epsilon } = state.hyper;
    let t = state.step_count as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = vec![1.5, -2.0, 0.0];
        let mut s = AdamState::new(3, AdamConfig::default());
        for _ in 0..5 {
            adam_step(&mut p, &[0.0; 3], &mut s).unwrap();
        }
        assert_eq!(p, vec![1.5, -2.0, 0.0]);
        assert_eq!(s.step_count, 5);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = vec![0.0];
        let mut s = AdamState::new(1, AdamConfig::default());
        adam_step(&mut p, &[1.0], &mut s).unwrap();
        // m̂ = 1, v̂ = 1 → step = lr / (1 + eps)
        assert_relative_eq!(p[0], -0.001 / (1.0 + 1e-8), max_relative = 1e-14);
    }

    #[test]
    fn identical_coordinates_update_identically() {
        let mut p = vec![0.3, 0.3];
        let mut s = AdamState::new(2, AdamConfig::default());
        for g in [0.5, -1.0, 2.0] {
            adam_step(&mut p, &[g, g], &mut s).unwrap();
        }
        assert_eq!(p[0], p[1]);
    }

    #[test]
    fn length_mismatch() {
        let mut p = vec![0.0; 2];
        let mut s = AdamState::new(2, AdamConfig::default());
        assert!(matches!(
            adam_step(&mut p, &[1.0], &mut s),
            Err(DiffError::LengthMismatch { .. })
        ));
    }
}
