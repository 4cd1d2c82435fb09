//! Personalized prediction: composing list learning with reference-class
//! learning.
//!
//! For a query point, the pipeline first obtains a finite list of candidate
//! sparse classifiers, then for each candidate learns the query-containing
//! halfspace on which that candidate is most accurate (by relabeling every
//! point with whether the candidate agrees with its label), and finally
//! keeps the pair with the smallest conditional error on a held-out
//! selection sample. The query's label under the winning classifier is the
//! prediction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::SparseLinearClassifier;
use crate::error::{CoreError, Result};
use crate::halfspace::Halfspace;
use crate::listlearn::{sparse_list, ClassifierList, ListLearnConfig};
use crate::params::WellBehavedParams;
use crate::refclass::{learn_reference_class, RefClassConfig};
use crate::sample::{
    empirical_conditional_error, support_count, ConditionalError, Label, LabeledSample, Rule,
};
use crate::seeding::derive_seed;
use crate::vector::{check_dims, normalize, Vector};

// Stream tags for seed derivation.
const STREAM_SELECTION_SPLIT: u64 = 1;
const STREAM_PROBE_DRAW: u64 = 2;
const STREAM_PROBE_LIST: u64 = 3;

/// Configuration of one personalized prediction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictConfig {
    pub list: ListLearnConfig,
    /// Accuracy parameter of the composition; the reference-class noise
    /// scale for each candidate is `opt + epsilon^4` (floored at desk scale
    /// by `10 / subsample_size`).
    pub epsilon: f64,
    /// Overall failure budget; each reference-class call receives
    /// `delta / (2 * list size)`.
    pub delta: f64,
    /// Assumed optimal conditional error. Known exactly on synthetic data;
    /// on real data a small grid of guesses is the practical choice.
    pub opt: f64,
    pub params: WellBehavedParams,
    /// Multiplier on the closed-form reference-class sample sizes.
    pub sample_multiplier: f64,
    /// Held-out selection sample size; 0 means a 20% split.
    pub selection_size: usize,
    /// Cap on candidates given a full reference-class run, keeping the ones
    /// with the best conditional error on the query-centered halfspace.
    /// 0 means no cap. Full enumeration lists grow like (m d)^s, so desk
    /// runs need the cap.
    pub max_candidates: usize,
    pub seed: u64,
}

impl PredictConfig {
    fn validate(&self) -> Result<()> {
        self.list.validate()?;
        for (name, v) in [("epsilon", self.epsilon), ("delta", self.delta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(CoreError::invalid(name, format!("must be in (0, 1), got {v}")));
            }
        }
        if !(self.opt >= 0.0 && self.opt < 1.0) {
            return Err(CoreError::invalid(
                "opt",
                format!("must be in [0, 1), got {}", self.opt),
            ));
        }
        if !(self.sample_multiplier > 0.0 && self.sample_multiplier.is_finite()) {
            return Err(CoreError::invalid("sample_multiplier", "must be positive"));
        }
        Ok(())
    }
}

/// A scored classifier-halfspace candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidatePair {
    pub classifier: SparseLinearClassifier,
    pub halfspace: Halfspace,
    /// Conditional error of the classifier on the selection sample
    /// restricted to the halfspace.
    pub empirical_error: ConditionalError,
    /// Selection points inside the halfspace.
    pub support_count: usize,
}

/// Result of a personalized prediction run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionResult {
    pub label: Label,
    pub pair: CandidatePair,
    /// Candidates whose selection score was defined and entered the argmin.
    pub candidates_evaluated: usize,
    /// Deduplicated list size.
    pub list_size: usize,
    /// Majority label of the selection points inside the winning halfspace.
    /// Diagnostic only; it never replaces `label`.
    pub fallback_label: Label,
}

/// Replaces every label with the agreement indicator `1[c(x) = y]`.
pub fn agreement_relabel(sample: &LabeledSample, c: &SparseLinearClassifier) -> LabeledSample {
    let labels = sample
        .iter()
        .map(|(x, y)| (c.predict_slice(x) == y) as Label)
        .collect();
    sample.with_labels(labels)
}

/// Runs the full pipeline: list learning on the training data, one
/// reference-class run per candidate, and selection-sample argmin.
pub fn personalized_predict(
    train: &LabeledSample,
    query: &Vector,
    cfg: &PredictConfig,
) -> Result<PredictionResult> {
    let (working, selection) = split_selection(train, cfg)?;
    let list = sparse_list(&working, &cfg.list)?;
    personalized_predict_prepared(&working, &selection, query, cfg, &list)
}

/// As [`personalized_predict`] with a precomputed list, so batch callers can
/// share one enumeration across queries (the list does not depend on the
/// query). `working` and `selection` must be the split produced by
/// [`split_for_queries`].
pub fn personalized_predict_prepared(
    working: &LabeledSample,
    selection: &LabeledSample,
    query: &Vector,
    cfg: &PredictConfig,
    list: &ClassifierList,
) -> Result<PredictionResult> {
    cfg.validate()?;
    if working.is_empty() || selection.is_empty() {
        return Err(CoreError::EmptySample);
    }
    if query.is_zero() {
        return Err(CoreError::ZeroVector);
    }
    check_dims(working.dim(), query.dim())?;
    if list.is_empty() {
        return Err(CoreError::EmptyList);
    }

    let candidates = prune_candidates(working, query, &list.classifiers, cfg.max_candidates)?;

    // Per-candidate reference-class budget and sample allocation. The
    // validation slice is capped by its closed-form size and by a quarter of
    // the working set; the descent gets the rest.
    let effective_subsample = cfg.list.subsample_size.min(working.len()).max(1);
    let eps4 = (cfg.epsilon.powi(4)).max(10.0 / effective_subsample as f64);
    let rc_epsilon = (cfg.opt + eps4).min(0.99);
    let rc_delta = (cfg.delta / (2.0 * list.len() as f64)).max(f64::MIN_POSITIVE);
    let rc_cfg = RefClassConfig::from_formulas(
        rc_epsilon,
        rc_delta,
        cfg.params,
        cfg.sample_multiplier,
    )?;

    let val_len = rc_cfg
        .validation_size
        .min(working.len() / 4)
        .clamp(1, working.len().saturating_sub(1));
    let val_idx: Vec<usize> = (0..val_len).collect();
    let train_idx: Vec<usize> = (val_len..working.len()).collect();
    if train_idx.is_empty() {
        return Err(CoreError::EmptySample);
    }
    let rc_train_base = working.select(&train_idx);
    let rc_val_base = working.select(&val_idx);

    let scored: Vec<Option<CandidatePair>> = candidates
        .par_iter()
        .map(|c| score_candidate(c, &rc_train_base, &rc_val_base, selection, query, &rc_cfg))
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<(usize, f64)> = None;
    let mut evaluated = 0usize;
    for (idx, pair) in scored.iter().enumerate() {
        if let Some(p) = pair {
            if let ConditionalError::Defined(err) = p.empirical_error {
                evaluated += 1;
                if best.map_or(true, |(_, b)| err < b) {
                    best = Some((idx, err));
                }
            }
        }
    }
    let (best_idx, _) = best.ok_or(CoreError::NoSupportedCandidate)?;
    let pair = scored[best_idx].clone().expect("winner was scored");

    let label = pair.classifier.predict(query)?;
    let fallback_label = majority_inside(selection, &pair.halfspace);
    Ok(PredictionResult {
        label,
        pair,
        candidates_evaluated: evaluated,
        list_size: list.len(),
        fallback_label,
    })
}

/// Splits the provided data into a working set and a held-out selection
/// sample (a seeded shuffle; 20% when no explicit size is given).
pub fn split_for_queries(
    train: &LabeledSample,
    cfg: &PredictConfig,
) -> Result<(LabeledSample, LabeledSample)> {
    split_selection(train, cfg)
}

fn split_selection(
    train: &LabeledSample,
    cfg: &PredictConfig,
) -> Result<(LabeledSample, LabeledSample)> {
    if train.is_empty() {
        return Err(CoreError::EmptySample);
    }
    let n = train.len();
    if n < 2 {
        return Err(CoreError::invalid(
            "train",
            "need at least 2 points to hold out a selection sample",
        ));
    }
    let want = if cfg.selection_size == 0 {
        ((n as f64) * 0.2).ceil() as usize
    } else {
        cfg.selection_size
    };
    let k = want.clamp(1, n - 1);

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_SELECTION_SPLIT));
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let selection = train.select(&order[..k]);
    let working = train.select(&order[k..]);
    Ok((working, selection))
}

fn score_candidate(
    c: &SparseLinearClassifier,
    rc_train_base: &LabeledSample,
    rc_val_base: &LabeledSample,
    selection: &LabeledSample,
    query: &Vector,
    rc_cfg: &RefClassConfig,
) -> Result<Option<CandidatePair>> {
    let rc_train = agreement_relabel(rc_train_base, c);
    let rc_val = agreement_relabel(rc_val_base, c);
    let halfspace = match learn_reference_class(&rc_train, &rc_val, query, rc_cfg) {
        Ok(h) => h,
        Err(CoreError::NoValidCandidate) => return Ok(None),
        Err(e) => return Err(e),
    };
    let empirical_error = empirical_conditional_error(selection, Rule::Sparse(c), &halfspace)?;
    let support = support_count(selection, &halfspace)?;
    Ok(Some(CandidatePair {
        classifier: c.clone(),
        halfspace,
        empirical_error,
        support_count: support,
    }))
}

/// Caps the candidate list before the per-candidate reference-class loop,
/// keeping the entries with the lowest conditional error on the working
/// points inside the query-centered halfspace (ties by list order). Entries
/// are returned in their original list order.
fn prune_candidates(
    working: &LabeledSample,
    query: &Vector,
    list: &[SparseLinearClassifier],
    cap: usize,
) -> Result<Vec<SparseLinearClassifier>> {
    if cap == 0 || list.len() <= cap {
        return Ok(list.to_vec());
    }
    let q_half = Halfspace::new(normalize(query)?)?;
    let scores: Vec<f64> = list
        .par_iter()
        .map(|c| {
            match empirical_conditional_error(working, Rule::Sparse(c), &q_half) {
                Ok(ConditionalError::Defined(e)) => Ok(e),
                // No working point near the query direction: fall back to
                // the global error so ranking stays total.
                Ok(ConditionalError::Undefined) => global_error(working, c),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut ranked: Vec<usize> = (0..list.len()).collect();
    ranked.sort_by(|&a, &b| {
        scores[a]
            .partial_cmp(&scores[b])
            .expect("finite scores")
            .then(a.cmp(&b))
    });
    let mut keep: Vec<usize> = ranked.into_iter().take(cap).collect();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| list[i].clone()).collect())
}

fn global_error(sample: &LabeledSample, c: &SparseLinearClassifier) -> Result<f64> {
    let wrong = sample
        .iter()
        .filter(|(x, y)| c.predict_slice(x) != *y)
        .count();
    Ok(wrong as f64 / sample.len() as f64)
}

fn majority_inside(selection: &LabeledSample, h: &Halfspace) -> Label {
    let mut inside = 0usize;
    let mut positive = 0usize;
    for (x, y) in selection.iter() {
        if h.contains_slice(x) {
            inside += 1;
            positive += y as usize;
        }
    }
    (inside == 0 || 2 * positive >= inside) as Label
}

/// Conditional classification by probing: draws query points uniformly from
/// the training features (seeded), runs the personalized pipeline on each,
/// and returns the pair with the smallest defined selection error. With a
/// subset-mass floor, a handful of probes lands in the optimal subset with
/// high probability, so the best probe approximates the unconstrained
/// classifier-subset optimum.
pub fn conditional_classify(
    train: &LabeledSample,
    cfg: &PredictConfig,
    probe_count: usize,
) -> Result<CandidatePair> {
    if probe_count == 0 {
        return Err(CoreError::invalid("probe_count", "must be at least 1"));
    }
    if train.is_empty() {
        return Err(CoreError::EmptySample);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_PROBE_DRAW));
    let mut best: Option<CandidatePair> = None;
    let mut attempted = 0usize;
    for probe_idx in 0..probe_count {
        // Re-draw on a zero feature row; it cannot serve as a query.
        let mut probe = None;
        for _ in 0..64 {
            let row = rng.gen_range(0..train.len());
            let candidate = train.point(row);
            if !candidate.is_zero() {
                probe = Some(candidate);
                break;
            }
        }
        let Some(query) = probe else { continue };
        attempted += 1;

        let mut probe_cfg = cfg.clone();
        probe_cfg.seed = derive_seed(cfg.seed, probe_idx as u64 + 1);
        probe_cfg.list.seed = derive_seed(probe_cfg.seed, STREAM_PROBE_LIST);
        match personalized_predict(train, &query, &probe_cfg) {
            Ok(result) => {
                let err = result.pair.empirical_error.value();
                let best_err = best.as_ref().and_then(|b| b.empirical_error.value());
                let better = match (err, best_err) {
                    (Some(e), Some(b)) => e < b,
                    (Some(_), None) => true,
                    _ => false,
                };
                if best.is_none() || better {
                    best = Some(result.pair);
                }
            }
            Err(
                CoreError::EmptyList
                | CoreError::NoSupportedCandidate
                | CoreError::NoValidCandidate,
            ) => {}
            Err(e) => return Err(e),
        }
    }
    if attempted == 0 {
        return Err(CoreError::ZeroVector);
    }
    best.ok_or(CoreError::NoSupportedCandidate)
}
