//! Dense vectors and the angle/projection geometry used throughout.
//!
//! Everything here is plain Euclidean geometry on `f64` slices: inner
//! products, norms, angles between directions, and projection onto the
//! orthogonal complement of a direction. These are the primitives the
//! gradient descent loop and its contraction guarantees are built on.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// A finite-dimensional real vector with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector {
    coords: Vec<f64>,
}

impl Vector {
    /// Builds a vector, rejecting empty or non-finite input.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(CoreError::invalid("coords", "dimension must be at least 1"));
        }
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(CoreError::NonFinite { index });
        }
        Ok(Self { coords })
    }

    /// Zero vector of dimension `dim`.
    pub fn zeros(dim: usize) -> Self {
        Self {
            coords: vec![0.0; dim],
        }
    }

    /// Standard basis vector `e_i`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut coords = vec![0.0; dim];
        coords[i] = 1.0;
        Self { coords }
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    pub fn dot(&self, other: &Vector) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(dot(&self.coords, &other.coords))
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    pub fn is_zero(&self) -> bool {
        self.norm() == 0.0
    }

    pub fn scale(&self, factor: f64) -> Vector {
        Vector::from_raw(self.coords.iter().map(|c| c * factor).collect())
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        check_dims(self.dim(), other.dim())?;
        Ok(Vector::from_raw(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        check_dims(self.dim(), other.dim())?;
        Ok(Vector::from_raw(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(CoreError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Inner product on raw slices; callers guarantee equal lengths.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Unit vector in the direction of `x`.
///
/// A norm that underflows to zero is treated as the zero vector; callers
/// decide the fallback (the descent loop keeps the previous iterate).
pub fn normalize(x: &Vector) -> Result<Vector> {
    let n = x.norm();
    if n == 0.0 {
        return Err(CoreError::ZeroVector);
    }
    Ok(x.scale(1.0 / n))
}

/// Angle between two nonzero vectors, in `[0, pi]`.
///
/// The cosine is clamped to `[-1, 1]` before `acos`: nearly parallel and
/// nearly opposite directions show up every descent iteration, and roundoff
/// can push the raw cosine just outside the domain.
pub fn angle(u: &Vector, v: &Vector) -> Result<f64> {
    check_dims(u.dim(), v.dim())?;
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return Err(CoreError::ZeroVector);
    }
    let cos = dot(u.as_slice(), v.as_slice()) / (nu * nv);
    Ok(cos.clamp(-1.0, 1.0).acos())
}

/// Projection of `x` onto the orthogonal complement of `w`:
/// `x - <x, w_hat> w_hat`. `w` need not be normalized.
pub fn project_orthogonal(x: &Vector, w: &Vector) -> Result<Vector> {
    check_dims(x.dim(), w.dim())?;
    let nw = w.norm();
    if nw == 0.0 {
        return Err(CoreError::ZeroVector);
    }
    let coeff = dot(x.as_slice(), w.as_slice()) / (nw * nw);
    Ok(Vector::from_raw(
        x.as_slice()
            .iter()
            .zip(w.as_slice())
            .map(|(xi, wi)| xi - coeff * wi)
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn v(coords: &[f64]) -> Vector {
        Vector::new(coords.to_vec()).unwrap()
    }

    #[test]
    fn angle_orthogonal_identical_and_diagonal() {
        assert_abs_diff_eq!(
            angle(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(),
            FRAC_PI_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            angle(&v(&[1.0, 0.0]), &v(&[1.0, 0.0])).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            angle(&v(&[1.0, 0.0]), &v(&[1.0, 1.0])).unwrap(),
            FRAC_PI_4,
            epsilon = 1e-15
        );
    }

    #[test]
    fn angle_rejects_zero_and_mismatch() {
        assert!(angle(&v(&[1.0, 0.0]), &Vector::zeros(2)).is_err());
        assert!(angle(&v(&[1.0]), &v(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn projection_axis_parallel_and_unnormalized() {
        let p = project_orthogonal(&v(&[1.0, 1.0]), &v(&[1.0, 0.0])).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 1.0]);

        let p = project_orthogonal(&v(&[2.0, 0.0]), &v(&[1.0, 0.0])).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 0.0]);

        // Scaling w must not change the projection.
        let p = project_orthogonal(&v(&[3.0, 4.0]), &v(&[0.0, 2.0])).unwrap();
        assert_abs_diff_eq!(p.as_slice()[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.as_slice()[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn projection_result_is_orthogonal() {
        let x = v(&[0.3, -1.2, 4.5, 0.01]);
        let w = v(&[1.0, 2.0, -0.5, 3.0]);
        let p = project_orthogonal(&x, &w).unwrap();
        assert!(p.dot(&w).unwrap().abs() < 1e-10);
    }

    #[test]
    fn normalize_basic_and_degenerate() {
        let n = normalize(&v(&[3.0, 4.0])).unwrap();
        assert_abs_diff_eq!(n.as_slice()[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(n.as_slice()[1], 0.8, epsilon = 1e-15);

        let n = normalize(&v(&[0.0, -2.0])).unwrap();
        assert_eq!(n.as_slice(), &[0.0, -1.0]);

        // 1e-300 squared underflows to zero norm.
        assert!(normalize(&v(&[1e-300, 0.0])).is_err());
    }

    #[test]
    fn vector_constructor_rejects_bad_input() {
        assert!(Vector::new(vec![]).is_err());
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
    }
}
