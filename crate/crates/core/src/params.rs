//! Distribution regularity constants and the closed forms derived from them.
//!
//! A marginal is `(K, U, L, R)`-well-behaved when its one-dimensional
//! projections are K-sub-exponential, its low-dimensional marginal densities
//! are U-bounded (with U also bounding the radial first moment), the density
//! of every one-dimensional projection is at least L on `[-1, 1]`, and every
//! halfspace containing the mean has mass at least R. These four constants
//! drive the iteration count, step size, sample sizes, and error bounds of
//! the reference-class learner.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// The `(K, U, L, R)` constants of a well-behaved marginal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellBehavedParams {
    /// Sub-exponential moment-growth constant of 1-d projections.
    pub k: f64,
    /// Density and radial-moment bound of marginals of dimension at most 2.
    pub u: f64,
    /// Density lower bound of 1-d projections on `[-1, 1]`.
    pub l: f64,
    /// Mass lower bound for mean-containing halfspaces; in `(0, 1]`.
    pub r: f64,
}

impl WellBehavedParams {
    pub fn new(k: f64, u: f64, l: f64, r: f64) -> Result<Self> {
        for (name, v) in [("k", k), ("u", u), ("l", l)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CoreError::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(r > 0.0 && r <= 1.0) {
            return Err(CoreError::invalid("r", format!("must be in (0, 1], got {r}")));
        }
        Ok(Self { k, u, l, r })
    }

    /// `sqrt(2(2K+1)/L)`: the scale factor shared by the iteration-count and
    /// step-size formulas.
    pub fn step_scale(&self) -> f64 {
        (2.0 * (2.0 * self.k + 1.0) / self.l).sqrt()
    }

    /// `(U * sqrt(2(2K+1)/(R^2 L)) + 1/R) * eps^(1/4)`: the conditional error
    /// level above which a halfspace is provably sub-optimal (the descent
    /// gradient then has a guaranteed component toward the optimum).
    pub fn suboptimality_threshold(&self, epsilon: f64) -> f64 {
        (self.u * self.step_scale() / self.r + 1.0 / self.r) * epsilon.powf(0.25)
    }

    /// `(U * sqrt(2(2K+1)/(R^2 L)) + 1/R + 1) * eps^(1/4)`: the conditional
    /// error guarantee of the learned reference class, validation slack
    /// included.
    pub fn refclass_error_bound(&self, epsilon: f64) -> f64 {
        self.suboptimality_threshold(epsilon) + epsilon.powf(0.25)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_out_of_range() {
        assert!(WellBehavedParams::new(0.0, 1.0, 1.0, 0.5).is_err());
        assert!(WellBehavedParams::new(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(WellBehavedParams::new(1.0, 1.0, 1.0, 1.5).is_err());
        assert!(WellBehavedParams::new(1.0, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn step_scale_closed_form() {
        // K=1, L=6: sqrt(2*3/6) = 1.
        let p = WellBehavedParams::new(1.0, 1.0, 6.0, 0.5).unwrap();
        assert_relative_eq!(p.step_scale(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn error_bound_adds_validation_slack() {
        let p = WellBehavedParams::new(1.0, 2.0, 0.5, 0.5).unwrap();
        let eps = 0.01f64;
        assert_relative_eq!(
            p.refclass_error_bound(eps),
            p.suboptimality_threshold(eps) + eps.powf(0.25),
            epsilon = 1e-15
        );
    }
}
