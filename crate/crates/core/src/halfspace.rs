//! Homogeneous halfspaces: the subset family the reference classes range over.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::vector::{dot, normalize, Vector};

/// A homogeneous halfspace `{ x : <x, normal> >= 0 }`.
///
/// The normal is stored unit-normalized; the contraction guarantees behind
/// the descent loop are stated for unit normals. The threshold is fixed at
/// zero for every learned subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    normal: Vector,
    threshold: f64,
}

impl Halfspace {
    /// Builds the halfspace with the given normal direction. The input is
    /// normalized; a zero vector is rejected.
    pub fn new(normal: Vector) -> Result<Self> {
        Ok(Self {
            normal: normalize(&normal)?,
            threshold: 0.0,
        })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Closed membership test: `<x, normal> >= threshold`.
    pub fn contains(&self, x: &Vector) -> Result<bool> {
        Ok(self.normal.dot(x)? >= self.threshold)
    }

    pub(crate) fn contains_slice(&self, x: &[f64]) -> bool {
        dot(self.normal.as_slice(), x) >= self.threshold
    }

    /// Membership with a signed tolerance, for invariant checks on normals
    /// produced by projection (the inner product can sit a hair below zero).
    pub fn contains_within(&self, x: &Vector, tol: f64) -> Result<bool> {
        let x_hat = normalize(x)?;
        Ok(self.normal.dot(&x_hat)? >= -tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_is_stored_unit() {
        let h = Halfspace::new(Vector::new(vec![0.0, 3.0]).unwrap()).unwrap();
        assert!((h.normal().norm() - 1.0).abs() < 1e-12);
        assert_eq!(h.threshold(), 0.0);
    }

    #[test]
    fn membership_is_closed() {
        let h = Halfspace::new(Vector::new(vec![1.0, 0.0]).unwrap()).unwrap();
        assert!(h.contains(&Vector::new(vec![0.0, 5.0]).unwrap()).unwrap());
        assert!(h.contains(&Vector::new(vec![2.0, -1.0]).unwrap()).unwrap());
        assert!(!h.contains(&Vector::new(vec![-0.1, 1.0]).unwrap()).unwrap());
    }

    #[test]
    fn zero_normal_rejected() {
        assert!(Halfspace::new(Vector::zeros(3)).is_err());
    }
}
