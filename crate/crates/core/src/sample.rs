//! Labeled samples and empirical conditional error.

use serde::{Deserialize, Serialize};

use crate::classifier::SparseLinearClassifier;
use crate::error::{CoreError, Result};
use crate::halfspace::Halfspace;
use crate::vector::{check_dims, Vector};

/// Binary label, stored as `0` or `1`.
pub type Label = u8;

/// Remaps a `{0,1}` label to the `{-1,+1}` convention used by the tuple
/// linear systems.
pub fn signed_label(y: Label) -> f64 {
    if y == 1 {
        1.0
    } else {
        -1.0
    }
}

/// A finite set of labeled points sharing one dimension.
///
/// Features are stored row-major in one flat buffer so that full-batch
/// passes stream through memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<Label>,
}

impl LabeledSample {
    /// Builds a sample from `(point, label)` pairs. All points must share
    /// `dim` coordinates and labels must be 0 or 1. The empty sample is
    /// allowed; operations that need points check for themselves.
    pub fn new(dim: usize, points: Vec<(Vector, Label)>) -> Result<Self> {
        let mut features = Vec::with_capacity(points.len() * dim);
        let mut labels = Vec::with_capacity(points.len());
        for (x, y) in points {
            check_dims(dim, x.dim())?;
            if y > 1 {
                return Err(CoreError::InvalidLabel { label: y });
            }
            features.extend_from_slice(x.as_slice());
            labels.push(y);
        }
        Ok(Self {
            dim,
            features,
            labels,
        })
    }

    /// Builds a sample from a flat row-major feature buffer.
    pub fn from_parts(dim: usize, features: Vec<f64>, labels: Vec<Label>) -> Result<Self> {
        if dim == 0 {
            return Err(CoreError::invalid("dim", "dimension must be at least 1"));
        }
        if features.len() != labels.len() * dim {
            return Err(CoreError::invalid(
                "features",
                format!(
                    "expected {} values for {} rows of dimension {}, got {}",
                    labels.len() * dim,
                    labels.len(),
                    dim,
                    features.len()
                ),
            ));
        }
        if let Some(index) = features.iter().position(|c| !c.is_finite()) {
            return Err(CoreError::NonFinite { index });
        }
        if let Some(&label) = labels.iter().find(|&&y| y > 1) {
            return Err(CoreError::InvalidLabel { label });
        }
        Ok(Self {
            dim,
            features,
            labels,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Iterates over `(row, label)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64], Label)> + '_ {
        self.features
            .chunks_exact(self.dim)
            .zip(self.labels.iter().copied())
    }

    /// Copy of row `i` as an owned vector.
    pub fn point(&self, i: usize) -> Vector {
        Vector::from_raw(self.row(i).to_vec())
    }

    /// Same features with the given labels.
    pub(crate) fn with_labels(&self, labels: Vec<Label>) -> Self {
        debug_assert_eq!(labels.len(), self.labels.len());
        Self {
            dim: self.dim,
            features: self.features.clone(),
            labels,
        }
    }

    /// New sample keeping only the rows at `indices` (in that order).
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self {
            dim: self.dim,
            features,
            labels,
        }
    }
}

/// An empirical conditional error: a rate in `[0,1]`, or `Undefined` when
/// no sample point falls in the conditioning subset.
///
/// `Undefined` is a value, not an error. Selection loops treat it as worst:
/// an empty subset signals either a tiny validation sample or a pathological
/// candidate, and must never win a minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConditionalError {
    Defined(f64),
    Undefined,
}

impl ConditionalError {
    pub fn is_defined(&self) -> bool {
        matches!(self, ConditionalError::Defined(_))
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            ConditionalError::Defined(v) => Some(*v),
            ConditionalError::Undefined => None,
        }
    }
}

impl Serialize for ConditionalError {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConditionalError {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match Option::<f64>::deserialize(d)? {
            Some(v) => ConditionalError::Defined(v),
            None => ConditionalError::Undefined,
        })
    }
}

/// The prediction rule scored by [`empirical_conditional_error`]: either a
/// sparse linear classifier or a constant label.
#[derive(Debug, Clone, Copy)]
pub enum Rule<'a> {
    Sparse(&'a SparseLinearClassifier),
    Constant(Label),
}

impl Rule<'_> {
    pub fn predict(&self, x: &[f64]) -> Label {
        match self {
            Rule::Sparse(c) => c.predict_slice(x),
            Rule::Constant(y) => *y,
        }
    }
}

/// Fraction of sample points inside `h` that the rule mislabels.
///
/// Returns `Undefined` when no point lies in `h`.
pub fn empirical_conditional_error(
    sample: &LabeledSample,
    rule: Rule<'_>,
    h: &Halfspace,
) -> Result<ConditionalError> {
    if sample.is_empty() {
        return Err(CoreError::EmptySample);
    }
    check_dims(sample.dim(), h.normal().dim())?;
    if let Rule::Sparse(c) = rule {
        c.check_dim(sample.dim())?;
    }
    let mut inside = 0usize;
    let mut wrong = 0usize;
    for (x, y) in sample.iter() {
        if h.contains_slice(x) {
            inside += 1;
            if rule.predict(x) != y {
                wrong += 1;
            }
        }
    }
    if inside == 0 {
        return Ok(ConditionalError::Undefined);
    }
    Ok(ConditionalError::Defined(wrong as f64 / inside as f64))
}

/// Number of sample points inside `h`.
pub fn support_count(sample: &LabeledSample, h: &Halfspace) -> Result<usize> {
    check_dims(sample.dim(), h.normal().dim())?;
    Ok(sample.iter().filter(|(x, _)| h.contains_slice(x)).count())
}
