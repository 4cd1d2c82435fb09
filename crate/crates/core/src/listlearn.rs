//! Robust list learning of sparse linear classifiers.
//!
//! Every classifier in the class is determined by which `s` coordinates
//! carry weight and by `s` examples it classifies with equality at margin
//! `nu`. Enumerating all coordinate subsets and example subsets of a (sub-)
//! sample and solving the induced `s x s` linear systems therefore yields a
//! finite list that, with enough inliers present, contains a classifier
//! agreeing with whatever consistent classifier labeled them.
//!
//! Enumeration runs over unordered subsets: ordered tuples reproduce the
//! same solutions up to row/column permutation, so unordered enumeration
//! cuts the work by `(s!)^2` with identical output after dedup.

use std::collections::HashMap;

use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::SparseLinearClassifier;
use crate::error::{CoreError, Result};
use crate::sample::{signed_label, LabeledSample};
use crate::vector::Vector;

/// Relative determinant cutoff below which a tuple system is skipped.
const SINGULARITY_EPS: f64 = 1e-12;

/// Configuration of one list-learning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListLearnConfig {
    /// Number of nonzero weights per classifier.
    pub sparsity: usize,
    /// Bit budget of the data representation; only sets the margin.
    pub bit_budget: u32,
    /// Number of examples fed to the enumeration. Full enumeration over a
    /// large sample is prohibitively expensive, so a seeded sub-sample is
    /// drawn without replacement.
    pub subsample_size: usize,
    /// Two classifiers over the same index set whose weights differ by at
    /// most this much are considered the same solution.
    pub dedup_tolerance: f64,
    /// Seed of the sub-sampling generator.
    pub seed: u64,
}

impl ListLearnConfig {
    pub fn new(sparsity: usize, bit_budget: u32, subsample_size: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            sparsity,
            bit_budget,
            subsample_size,
            dedup_tolerance: 1e-9,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sparsity == 0 {
            return Err(CoreError::invalid("sparsity", "must be at least 1"));
        }
        if self.subsample_size < self.sparsity {
            return Err(CoreError::invalid(
                "subsample_size",
                format!("must be at least sparsity {}", self.sparsity),
            ));
        }
        if self.bit_budget == 0 {
            return Err(CoreError::invalid("bit_budget", "must be at least 1"));
        }
        if !(self.dedup_tolerance >= 0.0 && self.dedup_tolerance.is_finite()) {
            return Err(CoreError::invalid("dedup_tolerance", "must be non-negative"));
        }
        Ok(())
    }
}

/// The deduplicated classifier list plus enumeration accounting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierList {
    pub classifiers: Vec<SparseLinearClassifier>,
    /// Tuple systems attempted (coordinate subsets times example subsets).
    pub attempted_tuples: u64,
    /// Non-singular solutions before dedup.
    pub raw_count: usize,
    /// Set when `subsample_size` exceeded the sample and was clamped.
    pub clamped: bool,
}

impl ClassifierList {
    pub fn len(&self) -> usize {
        self.classifiers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classifiers.is_empty()
    }
}

/// The margin `2^-(b s + s log2 s)` used on the right-hand side of the tuple
/// systems; for `s = 1` the log term vanishes.
pub fn margin(cfg: &ListLearnConfig) -> f64 {
    let s = cfg.sparsity as f64;
    let exponent = cfg.bit_budget as f64 * s + s * s.log2();
    2f64.powf(-exponent)
}

/// Solves the `s x s` system tying one candidate classifier to `s` examples:
/// row `k` demands `<w, y_k x_k> = y_k - nu` over the selected coordinates.
///
/// Labels must already be remapped to `{-1, +1}`. Returns `None` (a skipped
/// tuple, not a failure) when the system is singular: the determinant falls
/// below `1e-12 * max(1, ||M||_inf^s)`. Exact arithmetic would make every
/// non-degenerate system solvable; floating point needs the scale-aware
/// cutoff.
pub fn solve_tuple(
    examples: &[(Vector, f64)],
    coords: &[usize],
    nu: f64,
) -> Result<Option<SparseLinearClassifier>> {
    let s = coords.len();
    if examples.len() != s || s == 0 {
        return Err(CoreError::invalid(
            "examples",
            format!("need exactly {} examples for {} coordinates", s, s),
        ));
    }
    for (x, y) in examples {
        if *y != 1.0 && *y != -1.0 {
            return Err(CoreError::invalid("label", format!("must be +/-1, got {y}")));
        }
        if let Some(&c) = coords.iter().find(|&&c| c >= x.dim()) {
            return Err(CoreError::DimensionMismatch {
                expected: x.dim(),
                got: c + 1,
            });
        }
    }
    let rows: Vec<&[f64]> = examples.iter().map(|(x, _)| x.as_slice()).collect();
    let labels: Vec<f64> = examples.iter().map(|(_, y)| *y).collect();
    Ok(solve_tuple_rows(&rows, &labels, coords, nu, s))
}

/// Core solve on borrowed rows. `M[k][l] = y_k * x_{coords[l]}(k)`,
/// `r[k] = y_k - nu`; Gaussian elimination with partial pivoting plus one
/// refinement step to pin down poorly conditioned but non-singular systems.
fn solve_tuple_rows(
    rows: &[&[f64]],
    labels: &[f64],
    coords: &[usize],
    nu: f64,
    s: usize,
) -> Option<SparseLinearClassifier> {
    let mut m = vec![0.0; s * s];
    let mut rhs = vec![0.0; s];
    for k in 0..s {
        for (l, &c) in coords.iter().enumerate() {
            m[k * s + l] = labels[k] * rows[k][c];
        }
        rhs[k] = labels[k] - nu;
    }

    let inf_norm = (0..s)
        .map(|k| m[k * s..(k + 1) * s].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let lu = LuFactors::factor(m.clone(), s)?;
    if lu.abs_det() < SINGULARITY_EPS * inf_norm.powi(s as i32).max(1.0) {
        return None;
    }

    let mut w = lu.solve(&rhs);
    // One refinement step: residual r - M w re-solved and added back.
    let mut residual = rhs;
    for k in 0..s {
        for l in 0..s {
            residual[k] -= m[k * s + l] * w[l];
        }
    }
    let correction = lu.solve(&residual);
    for (wi, ci) in w.iter_mut().zip(correction) {
        *wi += ci;
    }
    if w.iter().any(|v| !v.is_finite()) {
        return None;
    }

    let terms = coords.iter().copied().zip(w).collect();
    // Distinct in-range coords with |coords| = s terms always validate.
    Some(SparseLinearClassifier::new(terms, s).expect("tuple terms are valid"))
}

/// Row-major LU factorization with partial pivoting for tiny dense systems.
struct LuFactors {
    lu: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
    n: usize,
}

impl LuFactors {
    fn factor(mut a: Vec<f64>, n: usize) -> Option<Self> {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&i, &j| {
                    a[i * n + col]
                        .abs()
                        .partial_cmp(&a[j * n + col].abs())
                        .expect("finite entries")
                })
                .expect("non-empty range");
            if pivot_row != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot_row * n + k);
                }
                perm.swap(col, pivot_row);
                sign = -sign;
            }
            let pivot = a[col * n + col];
            if pivot == 0.0 {
                // Exactly singular; report via zero determinant.
                return Some(Self {
                    lu: a,
                    perm,
                    sign: 0.0,
                    n,
                });
            }
            for row in col + 1..n {
                let factor = a[row * n + col] / pivot;
                a[row * n + col] = factor;
                for k in col + 1..n {
                    a[row * n + k] -= factor * a[col * n + k];
                }
            }
        }
        Some(Self {
            lu: a,
            perm,
            sign,
            n,
        })
    }

    fn abs_det(&self) -> f64 {
        if self.sign == 0.0 {
            return 0.0;
        }
        (0..self.n).map(|i| self.lu[i * self.n + i]).product::<f64>().abs()
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                y[i] -= self.lu[i * n + j] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                y[i] -= self.lu[i * n + j] * y[j];
            }
            y[i] /= self.lu[i * n + i];
        }
        y
    }
}

/// Enumerates every coordinate subset and example subset of a seeded
/// sub-sample, solves the induced systems, and returns the deduplicated
/// classifier list in lexicographic tuple order.
///
/// Labels are remapped from `{0,1}` to `{-1,+1}` first. A `subsample_size`
/// larger than the sample clamps to the sample with the `clamped` flag set.
pub fn sparse_list(sample: &LabeledSample, cfg: &ListLearnConfig) -> Result<ClassifierList> {
    cfg.validate()?;
    let s = cfg.sparsity;
    let d = sample.dim();
    if d < s {
        return Err(CoreError::invalid(
            "sparsity",
            format!("sample dimension {} is below sparsity {}", d, s),
        ));
    }

    let clamped = cfg.subsample_size > sample.len();
    let take = cfg.subsample_size.min(sample.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut indices = rand::seq::index::sample(&mut rng, sample.len(), take).into_vec();
    indices.sort_unstable();
    let sub = sample.select(&indices);

    let labels: Vec<f64> = sub.labels().iter().map(|&y| signed_label(y)).collect();
    let nu = margin(cfg);
    let m = sub.len();

    let coord_sets: Vec<Vec<usize>> = (0..d).combinations(s).collect();
    let results: Vec<(u64, Vec<SparseLinearClassifier>)> = coord_sets
        .par_iter()
        .map(|coords| {
            let mut attempted = 0u64;
            let mut found = Vec::new();
            for examples in (0..m).combinations(s) {
                attempted += 1;
                let rows: Vec<&[f64]> = examples.iter().map(|&j| sub.row(j)).collect();
                let ys: Vec<f64> = examples.iter().map(|&j| labels[j]).collect();
                if let Some(c) = solve_tuple_rows(&rows, &ys, coords, nu, s) {
                    found.push(c);
                }
            }
            (attempted, found)
        })
        .collect();

    let attempted_tuples: u64 = results.iter().map(|(a, _)| a).sum();
    let raw: Vec<SparseLinearClassifier> =
        results.into_iter().flat_map(|(_, found)| found).collect();
    let raw_count = raw.len();
    let classifiers = dedup(raw, cfg.dedup_tolerance);

    Ok(ClassifierList {
        classifiers,
        attempted_tuples,
        raw_count,
        clamped,
    })
}

/// Keeps the first occurrence of each solution, where two solutions match
/// when they share an index set and every weight differs by at most `tol`.
/// Weights are hashed on a `tol`-grid; a candidate only needs comparing
/// against kept entries in the 3^s neighboring cells.
fn dedup(raw: Vec<SparseLinearClassifier>, tol: f64) -> Vec<SparseLinearClassifier> {
    let mut kept: Vec<SparseLinearClassifier> = Vec::new();
    let mut cells: HashMap<(Vec<usize>, Vec<i64>), Vec<usize>> = HashMap::new();

    let quantize = |w: f64| -> i64 {
        if tol == 0.0 {
            return w.to_bits() as i64;
        }
        (w / tol).round() as i64
    };

    'outer: for cand in raw {
        let indices: Vec<usize> = cand.terms().iter().map(|(i, _)| *i).collect();
        let weights: Vec<f64> = cand.terms().iter().map(|(_, w)| *w).collect();
        let cell: Vec<i64> = weights.iter().map(|&w| quantize(w)).collect();

        if tol > 0.0 {
            let mut offsets = vec![-1i64; cell.len()];
            loop {
                let probe: Vec<i64> = cell
                    .iter()
                    .zip(&offsets)
                    .map(|(c, o)| c.saturating_add(*o))
                    .collect();
                if let Some(ids) = cells.get(&(indices.clone(), probe)) {
                    for &id in ids {
                        let close = kept[id]
                            .terms()
                            .iter()
                            .zip(&weights)
                            .all(|(&(_, kw), &w)| (kw - w).abs() <= tol);
                        if close {
                            continue 'outer;
                        }
                    }
                }
                // Advance the odometer over {-1, 0, 1}^s.
                let mut k = 0;
                loop {
                    if k == offsets.len() {
                        break;
                    }
                    offsets[k] += 1;
                    if offsets[k] <= 1 {
                        break;
                    }
                    offsets[k] = -1;
                    k += 1;
                }
                if k == offsets.len() {
                    break;
                }
            }
        } else if let Some(ids) = cells.get(&(indices.clone(), cell.clone())) {
            if !ids.is_empty() {
                continue 'outer;
            }
        }

        let id = kept.len();
        cells.entry((indices, cell)).or_default().push(id);
        kept.push(cand);
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(s: usize, b: u32, take: usize) -> ListLearnConfig {
        ListLearnConfig::new(s, b, take, 7).unwrap()
    }

    #[test]
    fn margin_closed_forms() {
        assert_eq!(margin(&cfg(2, 8, 2)), 2f64.powi(-18));
        assert_eq!(margin(&cfg(1, 8, 1)), 2f64.powi(-8));
        assert_eq!(margin(&cfg(4, 4, 4)), 2f64.powi(-24));
    }

    #[test]
    fn solve_single_coordinate_hand_value() {
        // y=+1, x_i=2, nu=0.25: w = (1 - 0.25)/2 = 0.375.
        let x = Vector::new(vec![9.0, 2.0]).unwrap();
        let c = solve_tuple(&[(x, 1.0)], &[1], 0.25).unwrap().unwrap();
        assert_eq!(c.terms().len(), 1);
        assert_eq!(c.terms()[0].0, 1);
        assert_relative_eq!(c.terms()[0].1, 0.375, epsilon = 1e-15);
    }

    #[test]
    fn zero_coordinate_is_singular() {
        let x = Vector::new(vec![0.0]).unwrap();
        assert!(solve_tuple(&[(x, 1.0)], &[0], 0.25).unwrap().is_none());
    }

    #[test]
    fn identity_system_returns_rhs() {
        // Labels y = (+1, -1) and rows chosen so y_k * x(k) restricted to
        // coords (0,1) is the identity; the solution is the right-hand side.
        let nu = 0.25;
        let a = Vector::new(vec![1.0, 0.0]).unwrap();
        let b = Vector::new(vec![0.0, -1.0]).unwrap();
        let c = solve_tuple(&[(a, 1.0), (b, -1.0)], &[0, 1], nu)
            .unwrap()
            .unwrap();
        assert_relative_eq!(c.terms()[0].1, 1.0 - nu, epsilon = 1e-15);
        assert_relative_eq!(c.terms()[1].1, -1.0 - nu, epsilon = 1e-15);
    }

    #[test]
    fn single_example_one_dimensional_list() {
        let sample = LabeledSample::new(1, vec![(Vector::new(vec![2.0]).unwrap(), 1)]).unwrap();
        let mut config = cfg(1, 8, 1);
        config.bit_budget = 2; // nu = 0.25 for the hand value
        let list = sparse_list(&sample, &config).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list.attempted_tuples, 1);
        assert_relative_eq!(list.classifiers[0].terms()[0].1, 0.375, epsilon = 1e-12);
    }

    #[test]
    fn all_zero_feature_gives_empty_list() {
        let sample = LabeledSample::new(
            2,
            vec![
                (Vector::new(vec![0.0, 0.0]).unwrap(), 1),
                (Vector::new(vec![0.0, 0.0]).unwrap(), 0),
            ],
        )
        .unwrap();
        let list = sparse_list(&sample, &cfg(1, 8, 2)).unwrap();
        assert!(list.is_empty());
        assert_eq!(list.raw_count, 0);
    }

    #[test]
    fn enumeration_count_matches_combinatorics() {
        // d=3, m=4, s=2: C(3,2) * C(4,2) = 3 * 6 = 18 unordered tuples, the
        // ordered 3*2*4*3 = 72 divided by (2!)^2.
        let pts: Vec<(Vector, u8)> = (0..4)
            .map(|i| {
                let f = i as f64;
                (
                    Vector::new(vec![f + 1.0, 2.0 * f + 3.0, f * f + 0.5]).unwrap(),
                    (i % 2) as u8,
                )
            })
            .collect();
        let sample = LabeledSample::new(3, pts).unwrap();
        let list = sparse_list(&sample, &cfg(2, 8, 4)).unwrap();
        assert_eq!(list.attempted_tuples, 18);
        assert_eq!(list.attempted_tuples, 72 / 4);
        assert!(list.raw_count <= 18);
    }

    #[test]
    fn clamping_sets_flag() {
        let sample = LabeledSample::new(
            1,
            vec![
                (Vector::new(vec![1.0]).unwrap(), 1),
                (Vector::new(vec![2.0]).unwrap(), 0),
            ],
        )
        .unwrap();
        let list = sparse_list(&sample, &cfg(1, 8, 10)).unwrap();
        assert!(list.clamped);
        assert_eq!(list.attempted_tuples, 2);
    }

    #[test]
    fn generating_examples_hit_their_margin() {
        // Every solution classifies its defining examples with equality at
        // the margin: y * (<w, x> - 1) = -nu.
        let pts: Vec<(Vector, u8)> = (0..6)
            .map(|i| {
                let f = i as f64 * 0.7 - 2.0;
                (Vector::new(vec![f + 0.3, 1.5 - f]).unwrap(), (i % 2) as u8)
            })
            .collect();
        let sample = LabeledSample::new(2, pts.clone()).unwrap();
        let config = cfg(2, 8, 6);
        let nu = margin(&config);
        let m = sample.len();
        let labels: Vec<f64> = sample.labels().iter().map(|&y| signed_label(y)).collect();
        for coords in (0..2usize).combinations(2) {
            for ex in (0..m).combinations(2) {
                let examples: Vec<(Vector, f64)> =
                    ex.iter().map(|&j| (sample.point(j), labels[j])).collect();
                if let Some(c) = solve_tuple(&examples, &coords, nu).unwrap() {
                    for &j in &ex {
                        let score = c.score_slice(sample.row(j));
                        let slack = labels[j] * (score - 1.0);
                        assert!(
                            slack >= -nu - 1e-9,
                            "margin violated: {slack} < {}",
                            -nu - 1e-9
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn dedup_merges_identical_solutions() {
        // Duplicate points generate identical systems; dedup must collapse
        // them while raw_count still counts every solution.
        let p = Vector::new(vec![2.0, 3.0]).unwrap();
        let sample = LabeledSample::new(
            2,
            vec![(p.clone(), 1), (p.clone(), 1), (p, 1)],
        )
        .unwrap();
        let list = sparse_list(&sample, &cfg(1, 8, 3)).unwrap();
        // Two coords, three identical examples each: 6 raw, 2 kept.
        assert_eq!(list.raw_count, 6);
        assert_eq!(list.len(), 2);
    }
}
