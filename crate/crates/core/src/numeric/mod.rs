//! Dense matrix arithmetic, seeded random streams, and the logistic
//! nonlinearity shared by every other module.

mod matrix;
mod rng;

pub use matrix::Matrix;
pub use rng::{bernoulli_sample, RngStream};

/// Numerically stable logistic function 1/(1+e^-x).
///
/// Never overflows: for large |x| it saturates smoothly toward 0 or 1.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sigmoid_symmetry_point() {
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn sigmoid_saturation() {
        assert!((sigmoid(50.0) - 1.0).abs() < 1e-9);
        assert!(sigmoid(-50.0) < 1e-9);
    }

    #[test]
    fn sigmoid_closed_form() {
        // g(ln 3) = 1/(1 + 1/3) = 0.75
        assert!((sigmoid(3.0_f64.ln()) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_extreme_inputs_stay_finite() {
        for &x in &[1000.0, -1000.0, f64::MAX, f64::MIN] {
            let y = sigmoid(x);
            assert!(y.is_finite());
            assert!((0.0..=1.0).contains(&y));
        }
    }

    proptest! {
        #[test]
        fn sigmoid_complement(x in -700.0..700.0f64) {
            prop_assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-12);
        }

        // strict openness and monotonicity hold up to where f64
        // rounding saturates the output (around |x| = 36.7)
        #[test]
        fn sigmoid_open_interval(x in -30.0..30.0f64) {
            let y = sigmoid(x);
            prop_assert!(y > 0.0 && y < 1.0);
        }

        #[test]
        fn sigmoid_monotone(x in -30.0..30.0f64, dx in 1e-6..10.0f64) {
            prop_assert!(sigmoid(x + dx) > sigmoid(x));
        }
    }
}
