//! Personalized prediction with sparse linear classifiers over learned
//! halfspace reference classes.
//!
//! Given a labeled sample and a query point, the library jointly learns an
//! interpretable sparse linear classifier and a homogeneous-halfspace
//! sub-population containing the query on which that classifier is
//! accurate:
//!
//! - [`listlearn`] enumerates candidate sparse classifiers from small linear
//!   systems (robust list learning);
//! - [`pgd`] runs projected gradient descent with a contractive projection
//!   that keeps the query inside every visited halfspace;
//! - [`refclass`] wraps the descent into reference-class learning with a
//!   validation pass;
//! - [`perpredict`] composes the two into personalized prediction and the
//!   probe-based conditional classifier;
//! - [`synth`] provides well-behaved synthetic generators, planted
//!   instances, and exact 2-d oracles;
//! - [`data`] implements the tabular preprocessing protocol.

pub mod classifier;
pub mod data;
pub mod error;
pub mod halfspace;
pub mod listlearn;
pub mod params;
pub mod perpredict;
pub mod pgd;
pub mod refclass;
pub mod sample;
pub mod seeding;
pub mod synth;
pub mod vector;

pub use classifier::SparseLinearClassifier;
pub use error::{CoreError, Result};
pub use halfspace::Halfspace;
pub use params::WellBehavedParams;
pub use sample::{
    empirical_conditional_error, signed_label, support_count, ConditionalError, Label,
    LabeledSample, Rule,
};
pub use vector::{angle, normalize, project_orthogonal, Vector};
