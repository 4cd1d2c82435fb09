//! Sparse linear threshold classifiers: the interpretable predictor class.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::sample::Label;
use crate::vector::Vector;

/// A linear classifier with at most `sparsity` nonzero weights and decision
/// threshold fixed at 1: it predicts 1 iff the weighted sum of its selected
/// coordinates reaches 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseLinearClassifier {
    /// `(coordinate index, weight)` pairs with distinct indices.
    terms: Vec<(usize, f64)>,
    sparsity: usize,
}

impl SparseLinearClassifier {
    /// Builds a classifier; indices must be distinct and the term count must
    /// not exceed `sparsity`.
    pub fn new(mut terms: Vec<(usize, f64)>, sparsity: usize) -> Result<Self> {
        if sparsity == 0 {
            return Err(CoreError::invalid("sparsity", "must be at least 1"));
        }
        if terms.len() > sparsity {
            return Err(CoreError::invalid(
                "terms",
                format!("{} terms exceed sparsity {}", terms.len(), sparsity),
            ));
        }
        terms.sort_by_key(|(i, _)| *i);
        if terms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(CoreError::invalid("terms", "duplicate coordinate index"));
        }
        if let Some((i, w)) = terms.iter().find(|(_, w)| !w.is_finite()) {
            return Err(CoreError::invalid(
                "terms",
                format!("non-finite weight {w} at index {i}"),
            ));
        }
        Ok(Self { terms, sparsity })
    }

    /// The constant-0 classifier: no terms, so the threshold of 1 is never met.
    pub fn constant_zero(sparsity: usize) -> Self {
        Self {
            terms: Vec::new(),
            sparsity: sparsity.max(1),
        }
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    /// Decision threshold; fixed at 1 for this class.
    pub fn threshold(&self) -> f64 {
        1.0
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_index(&self) -> Option<usize> {
        self.terms.last().map(|(i, _)| *i)
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        match self.max_index() {
            Some(i) if i >= dim => Err(CoreError::DimensionMismatch {
                expected: dim,
                got: i + 1,
            }),
            _ => Ok(()),
        }
    }

    /// Weighted sum of the selected coordinates.
    pub fn score_slice(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, w)| w * x[i]).sum()
    }

    pub fn predict_slice(&self, x: &[f64]) -> Label {
        (self.score_slice(x) >= 1.0) as Label
    }

    pub fn predict(&self, x: &Vector) -> Result<Label> {
        self.check_dim(x.dim())?;
        Ok(self.predict_slice(x.as_slice()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicts_against_threshold_one() {
        let c = SparseLinearClassifier::new(vec![(0, 0.5), (2, 1.0)], 2).unwrap();
        let hit = Vector::new(vec![2.0, 9.0, 0.5]).unwrap(); // 1.0 + 0.5 = 1.5
        let miss = Vector::new(vec![1.0, 9.0, 0.25]).unwrap(); // 0.5 + 0.25 = 0.75
        assert_eq!(c.predict(&hit).unwrap(), 1);
        assert_eq!(c.predict(&miss).unwrap(), 0);
    }

    #[test]
    fn boundary_counts_as_positive() {
        let c = SparseLinearClassifier::new(vec![(0, 1.0)], 1).unwrap();
        assert_eq!(c.predict(&Vector::new(vec![1.0]).unwrap()).unwrap(), 1);
    }

    #[test]
    fn constant_zero_never_fires() {
        let c = SparseLinearClassifier::constant_zero(2);
        assert_eq!(c.predict(&Vector::new(vec![100.0, 100.0]).unwrap()).unwrap(), 0);
    }

    #[test]
    fn rejects_duplicates_and_overflow() {
        assert!(SparseLinearClassifier::new(vec![(0, 1.0), (0, 2.0)], 2).is_err());
        assert!(SparseLinearClassifier::new(vec![(0, 1.0), (1, 1.0), (2, 1.0)], 2).is_err());
        let c = SparseLinearClassifier::new(vec![(5, 1.0)], 1).unwrap();
        assert!(c.predict(&Vector::new(vec![1.0, 2.0]).unwrap()).is_err());
    }
}
