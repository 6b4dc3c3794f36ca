//! Scalar activation functions shared by the forward and backward passes.

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Overflow-safe softplus: `max(z, 0) + log1p(exp(-|z|))`.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn relu(z: f64) -> f64 {
    z.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_basics() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(50.0) > 1.0 - 1e-9);
        assert!(sigmoid(-50.0) < 1e-9);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn softplus_basics() {
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        // Asymptotes: identity for large z, zero for very negative z.
        assert!((softplus(50.0) - 50.0).abs() < 1e-9);
        assert!(softplus(-745.0) >= 0.0);
        assert!(softplus(1e308).is_finite());
    }

    #[test]
    fn relu_basics() {
        assert_eq!(relu(-3.0), 0.0);
        assert_eq!(relu(3.0), 3.0);
    }
}
