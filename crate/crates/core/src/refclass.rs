//! Learning a halfspace reference class for a query point.
//!
//! Given labeled data and a query, the learner looks for a homogeneous
//! halfspace that contains the query and on which the positive-label rate is
//! as high as possible. It runs the descent loop on label-negated training
//! data (turning the maximization into the minimization the loop solves),
//! then scores every visited normal on a separate validation sample and
//! keeps the best.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::halfspace::Halfspace;
use crate::params::WellBehavedParams;
use crate::pgd::{run_pgd, PgdConfig};
use crate::sample::{empirical_conditional_error, ConditionalError, LabeledSample, Rule};
use crate::vector::Vector;

/// Configuration of one reference-class run.
///
/// `train_size` / `validation_size` record the sample sizes the closed-form
/// defaults call for (see [`default_sample_sizes`]); the learner itself uses
/// whatever samples the caller hands it. It never draws data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefClassConfig {
    /// Target noise scale; drives the iteration count, step size, and
    /// default sample sizes.
    pub epsilon: f64,
    /// Failure probability budget.
    pub delta: f64,
    /// Distribution constants of the feature marginal.
    pub params: WellBehavedParams,
    /// Intended descent-sample size.
    pub train_size: usize,
    /// Intended validation-sample size.
    pub validation_size: usize,
    /// Multiplier applied to the closed-form sample sizes, since their
    /// absolute constants are asymptotic.
    pub sample_multiplier: f64,
}

impl RefClassConfig {
    /// Builds a config with sample sizes from the closed-form defaults.
    pub fn from_formulas(
        epsilon: f64,
        delta: f64,
        params: WellBehavedParams,
        sample_multiplier: f64,
    ) -> Result<Self> {
        check_unit_interval("epsilon", epsilon)?;
        check_unit_interval("delta", delta)?;
        if !(sample_multiplier > 0.0 && sample_multiplier.is_finite()) {
            return Err(CoreError::invalid(
                "sample_multiplier",
                format!("must be positive, got {sample_multiplier}"),
            ));
        }
        let (train_size, validation_size) =
            default_sample_sizes(epsilon, delta, &params, sample_multiplier);
        Ok(Self {
            epsilon,
            delta,
            params,
            train_size,
            validation_size,
            sample_multiplier,
        })
    }
}

fn check_unit_interval(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(CoreError::invalid(name, format!("must be in (0, 1), got {v}")));
    }
    Ok(())
}

/// Flips every label (`y -> 1 - y`), leaving features untouched. Applying it
/// twice restores the original sample.
pub fn negate_labels(sample: &LabeledSample) -> LabeledSample {
    sample.with_labels(sample.labels().iter().map(|y| 1 - y).collect())
}

/// Iteration count and step size as closed forms of the noise scale and the
/// distribution constants:
/// `T = ceil(32 pi eps^(-5/4) / s)` and `lambda = s eps^(3/4) / 4` with
/// `s = sqrt(2(2K+1)/L)`.
pub fn default_t_lambda(epsilon: f64, params: &WellBehavedParams) -> (usize, f64) {
    let scale = params.step_scale();
    let t = (32.0 * std::f64::consts::PI * epsilon.powf(-1.25) / scale).ceil();
    let lambda = scale * epsilon.powf(0.75) / 4.0;
    (t as usize, lambda)
}

/// Default sample sizes: `m1 = ceil(mult * K^2 ln(2T/delta) / eps)` for the
/// descent sample and `m2 = ceil(mult * 32 ln(4T/delta) / (R^2 sqrt(eps)))`
/// for validation. The multiplier is user-visible because the absolute
/// constants behind these rates are asymptotic.
pub fn default_sample_sizes(
    epsilon: f64,
    delta: f64,
    params: &WellBehavedParams,
    multiplier: f64,
) -> (usize, usize) {
    let (t, _) = default_t_lambda(epsilon, params);
    let t = t as f64;
    let m1 = multiplier * params.k * params.k * (2.0 * t / delta).ln() / epsilon;
    let m2 = multiplier * 32.0 * (4.0 * t / delta).ln() / (params.r * params.r * epsilon.sqrt());
    (m1.ceil().max(1.0) as usize, m2.ceil().max(1.0) as usize)
}

/// Outcome of a reference-class run, with selection diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefClassOutcome {
    pub halfspace: Halfspace,
    /// Index of the winning normal in the iterate list.
    pub iterate_index: usize,
    /// Its positive-label rate on the validation sample.
    pub validation_positive_rate: f64,
    /// Total normals visited (iterations + 1).
    pub iterates: usize,
}

/// Learns a query-containing halfspace maximizing the empirical positive
/// rate `P[y = 1 | x in H(w)]` on the validation sample.
///
/// The descent runs on the label-negated training sample with the default
/// iteration count and step size for `cfg.epsilon`. Normals whose validation
/// subset is empty are skipped; ties go to the earliest iterate so runs are
/// reproducible. Errors with [`CoreError::NoValidCandidate`] when every
/// normal's validation estimate is undefined.
pub fn learn_reference_class(
    train: &LabeledSample,
    validation: &LabeledSample,
    query: &Vector,
    cfg: &RefClassConfig,
) -> Result<Halfspace> {
    learn_reference_class_detailed(train, validation, query, cfg).map(|o| o.halfspace)
}

/// As [`learn_reference_class`], returning selection diagnostics.
pub fn learn_reference_class_detailed(
    train: &LabeledSample,
    validation: &LabeledSample,
    query: &Vector,
    cfg: &RefClassConfig,
) -> Result<RefClassOutcome> {
    if train.is_empty() || validation.is_empty() {
        return Err(CoreError::EmptySample);
    }
    let (t, lambda) = default_t_lambda(cfg.epsilon, &cfg.params);
    let pgd_cfg = PgdConfig::new(t, lambda, query.clone())?;
    let iterates = run_pgd(&negate_labels(train), &pgd_cfg)?;

    // Positive rate = 1 - conditional error of the constant-1 rule.
    let mut best: Option<(usize, f64)> = None;
    for (idx, w) in iterates.normals().iter().enumerate() {
        let h = Halfspace::new(w.clone())?;
        match empirical_conditional_error(validation, Rule::Constant(1), &h)? {
            ConditionalError::Defined(err) => {
                let rate = 1.0 - err;
                if best.map_or(true, |(_, b)| rate > b) {
                    best = Some((idx, rate));
                }
            }
            ConditionalError::Undefined => {}
        }
    }

    let (iterate_index, validation_positive_rate) = best.ok_or(CoreError::NoValidCandidate)?;
    Ok(RefClassOutcome {
        halfspace: Halfspace::new(iterates.normals()[iterate_index].clone())?,
        iterate_index,
        validation_positive_rate,
        iterates: iterates.len(),
    })
}
