//! Synthetic well-behaved distributions, planted instances, and brute-force
//! oracles for desk-scale verification.
//!
//! Two marginals are provided with exact regularity constants: centered
//! Gaussians and the uniform distribution over a centered ball. Planted
//! instances label points either by a sparse classifier or by membership in
//! a planted halfspace, then flip a controlled fraction of labels inside (or
//! outside) that halfspace, worst case first: the flipped points hug the
//! boundary, which is the hardest placement for margin-based learners.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::classifier::SparseLinearClassifier;
use crate::error::{CoreError, Result};
use crate::halfspace::Halfspace;
use crate::listlearn::ClassifierList;
use crate::params::WellBehavedParams;
use crate::perpredict::{agreement_relabel, CandidatePair};
use crate::sample::{empirical_conditional_error, support_count, Label, LabeledSample, Rule};
use crate::seeding::derive_seed;
use crate::vector::{dot, normalize, Vector};

/// Feature marginal of a synthetic instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginal {
    Gaussian { sigma: f64 },
    UniformBall { radius: f64 },
}

impl Marginal {
    /// The `(K, U, L, R)` constants of this marginal in the given dimension.
    pub fn well_behaved(&self, dim: usize) -> Result<WellBehavedParams> {
        match self {
            Marginal::Gaussian { sigma } => GaussianParams { sigma: *sigma }.well_behaved(),
            Marginal::UniformBall { radius } => {
                BallParams { radius: *radius }.well_behaved(dim)
            }
        }
    }
}

/// Constants of the centered Gaussian `N(0, sigma^2 I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub sigma: f64,
}

impl GaussianParams {
    /// `K = sigma`, `U = max((sigma sqrt(2 pi))^{-3/2}, sqrt(3) + sigma^2)`,
    /// `L = exp(-1/(2 sigma^2)) / (sigma sqrt(2 pi))`, `R = 1/2`.
    pub fn well_behaved(&self) -> Result<WellBehavedParams> {
        let s = self.sigma;
        if !(s > 0.0 && s.is_finite()) {
            return Err(CoreError::invalid("sigma", "must be positive"));
        }
        let root_2pi = (2.0 * std::f64::consts::PI).sqrt();
        let u = (s * root_2pi).powf(-1.5).max(3f64.sqrt() + s * s);
        let l = (-1.0 / (2.0 * s * s)).exp() / (s * root_2pi);
        WellBehavedParams::new(s, u, l, 0.5)
    }
}

/// Constants of the uniform distribution over a centered ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallParams {
    pub radius: f64,
}

impl BallParams {
    /// Exact constants for the ball of radius `r > 1` in dimension `d`. With
    /// `c_d = Gamma(d/2 + 1) / (Gamma(d/2 + 1/2) sqrt(pi))` (the peak of the
    /// one-dimensional marginal at unit radius):
    /// `K = r`, `U = max(d / (2 pi r^2), c_d / r, r)`,
    /// `L = (c_d / r) (1 - 1/r^2)^{(d-1)/2}`, `R = 1/2`.
    ///
    /// The radius must exceed 1: the one-dimensional marginal has to carry
    /// density across all of `[-1, 1]`.
    pub fn well_behaved(&self, dim: usize) -> Result<WellBehavedParams> {
        let r = self.radius;
        if !(r > 1.0 && r.is_finite()) {
            return Err(CoreError::invalid("radius", "must exceed 1"));
        }
        if dim == 0 {
            return Err(CoreError::invalid("dim", "must be at least 1"));
        }
        let c_d = marginal_peak(dim);
        let density_2d = if dim >= 2 {
            dim as f64 / (2.0 * std::f64::consts::PI * r * r)
        } else {
            0.0
        };
        let u = density_2d.max(c_d / r).max(r);
        let l = (c_d / r) * (1.0 - 1.0 / (r * r)).powf((dim as f64 - 1.0) / 2.0);
        WellBehavedParams::new(r, u, l, 0.5)
    }
}

/// `c_d = Gamma(d/2 + 1) / (Gamma(d/2 + 1/2) sqrt(pi))` via the recurrence
/// `rho_{d+1} = (d+1) / (2 rho_d)`, `rho_1 = sqrt(pi)/2`.
fn marginal_peak(dim: usize) -> f64 {
    let mut rho = std::f64::consts::PI.sqrt() / 2.0;
    for d in 1..dim {
        rho = (d as f64 + 1.0) / (2.0 * rho);
    }
    rho / std::f64::consts::PI.sqrt()
}

/// Which side of the planted halfspace receives the label flips.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseRegion {
    /// Flips confined to points with `<x, v> >= 0` (the default).
    #[default]
    InsidePlanted,
    /// Flips confined to the complement.
    OutsidePlanted,
}

/// How the flipped points are chosen within the noise region.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoisePlacement {
    /// Flip the points closest to the planted boundary first (the default;
    /// hardest for margin-based methods).
    #[default]
    BoundaryFirst,
    /// Flip a uniform subset of the region.
    Uniform,
}

/// Where labels come from before noise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    /// `y = planted_classifier(x)` (the default; the personalized task).
    #[default]
    Classifier,
    /// `y = 1[<x, planted_normal> >= 0]` (the reference-class task).
    HalfspaceIndicator,
}

/// A planted instance: marginal, planted halfspace normal, planted sparse
/// classifier, and the noise process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dim: usize,
    pub marginal: Marginal,
    /// Unit normal of the planted halfspace (normalized on construction).
    pub planted_normal: Vector,
    pub planted_classifier: SparseLinearClassifier,
    /// Fraction of region points whose labels get flipped; in `[0, 0.5)`.
    pub noise_rate: f64,
    pub noise_region: NoiseRegion,
    pub noise_placement: NoisePlacement,
    pub label_rule: LabelRule,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Personalized-prediction instance: classifier labels, flips inside the
    /// planted halfspace, boundary first.
    pub fn new(
        dim: usize,
        marginal: Marginal,
        planted_normal: Vector,
        planted_classifier: SparseLinearClassifier,
        noise_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        let spec = Self {
            dim,
            marginal,
            planted_normal: normalize(&planted_normal)?,
            planted_classifier,
            noise_rate,
            noise_region: NoiseRegion::InsidePlanted,
            noise_placement: NoisePlacement::BoundaryFirst,
            label_rule: LabelRule::Classifier,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Reference-class instance: labels are membership in the planted
    /// halfspace, flips inside it, boundary first.
    pub fn reference_class(
        dim: usize,
        marginal: Marginal,
        planted_normal: Vector,
        noise_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut spec = Self::new(
            dim,
            marginal,
            planted_normal,
            SparseLinearClassifier::constant_zero(1),
            noise_rate,
            seed,
        )?;
        spec.label_rule = LabelRule::HalfspaceIndicator;
        Ok(spec)
    }

    pub fn with_noise_region(mut self, region: NoiseRegion) -> Self {
        self.noise_region = region;
        self
    }

    pub fn with_noise_placement(mut self, placement: NoisePlacement) -> Self {
        self.noise_placement = placement;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(CoreError::invalid("dim", "must be at least 1"));
        }
        if self.planted_normal.dim() != self.dim {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim,
                got: self.planted_normal.dim(),
            });
        }
        if (self.planted_normal.norm() - 1.0).abs() > 1e-12 {
            return Err(CoreError::invalid("planted_normal", "must be unit"));
        }
        self.planted_classifier.check_dim(self.dim)?;
        if !(self.noise_rate >= 0.0 && self.noise_rate < 0.5) {
            return Err(CoreError::invalid(
                "noise_rate",
                format!("must be in [0, 0.5), got {}", self.noise_rate),
            ));
        }
        Ok(())
    }
}

/// Draws `n` feature rows from a marginal (row-major). Deterministic in the
/// seed.
pub fn draw_features(marginal: &Marginal, dim: usize, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_rows(marginal, dim, n, &mut rng)
}

fn sample_rows(marginal: &Marginal, dim: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * dim);
    match marginal {
        Marginal::Gaussian { sigma } => {
            for _ in 0..n * dim {
                let z: f64 = rng.sample(StandardNormal);
                out.push(sigma * z);
            }
        }
        Marginal::UniformBall { radius } => {
            // Normalized Gaussian direction times radius * U^(1/d): exact
            // and rejection-free.
            for _ in 0..n {
                let mut g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let mut norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                while norm == 0.0 {
                    for gi in g.iter_mut() {
                        *gi = rng.sample(StandardNormal);
                    }
                    norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                }
                let u: f64 = rng.gen();
                let scale = radius * u.powf(1.0 / dim as f64) / norm;
                out.extend(g.iter().map(|gi| gi * scale));
            }
        }
    }
    out
}

/// Draws `n` labeled points from a planted instance: features from the
/// marginal, labels from the label rule, then `round(rate * |region|)` flips
/// within the noise region. Identical spec and seed reproduce the sample
/// bit for bit.
pub fn draw(spec: &SyntheticSpec, n: usize) -> Result<LabeledSample> {
    spec.validate()?;
    if n == 0 {
        return Err(CoreError::invalid("n", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let features = sample_rows(&spec.marginal, spec.dim, n, &mut rng);
    let v = spec.planted_normal.as_slice();

    let mut labels: Vec<Label> = Vec::with_capacity(n);
    let mut margins: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let row = &features[i * spec.dim..(i + 1) * spec.dim];
        let m = dot(row, v);
        margins.push(m);
        let y = match spec.label_rule {
            LabelRule::Classifier => spec.planted_classifier.predict_slice(row),
            LabelRule::HalfspaceIndicator => (m >= 0.0) as Label,
        };
        labels.push(y);
    }

    let mut region: Vec<usize> = (0..n)
        .filter(|&i| match spec.noise_region {
            NoiseRegion::InsidePlanted => margins[i] >= 0.0,
            NoiseRegion::OutsidePlanted => margins[i] < 0.0,
        })
        .collect();
    let flips = (spec.noise_rate * region.len() as f64).round() as usize;
    match spec.noise_placement {
        NoisePlacement::BoundaryFirst => {
            region.sort_by(|&a, &b| {
                margins[a]
                    .abs()
                    .partial_cmp(&margins[b].abs())
                    .expect("finite margins")
                    .then(a.cmp(&b))
            });
        }
        NoisePlacement::Uniform => {
            let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 1));
            for i in (1..region.len()).rev() {
                let j = shuffle_rng.gen_range(0..=i);
                region.swap(i, j);
            }
        }
    }
    for &i in region.iter().take(flips) {
        labels[i] = 1 - labels[i];
    }

    LabeledSample::from_parts(spec.dim, features, labels)
}

/// Monte Carlo estimate of the wedge mass `P[x in H(w) \ H(v)]` under the
/// marginal. Only the directions of `w` and `v` matter.
pub fn wedge_probability_mc(
    w: &Vector,
    v: &Vector,
    marginal: &Marginal,
    n: usize,
    seed: u64,
) -> Result<f64> {
    if w.is_zero() || v.is_zero() {
        return Err(CoreError::ZeroVector);
    }
    if n == 0 {
        return Err(CoreError::invalid("n", "must be at least 1"));
    }
    let dim = w.dim();
    crate::vector::check_dims(dim, v.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = sample_rows(marginal, dim, n, &mut rng);
    let mut hits = 0usize;
    for row in rows.chunks_exact(dim) {
        if dot(row, w.as_slice()) >= 0.0 && dot(row, v.as_slice()) < 0.0 {
            hits += 1;
        }
    }
    Ok(hits as f64 / n as f64)
}

/// Exact 2-dimensional reference-class oracle.
///
/// In the plane, the set of sample points inside `H(w)` changes only when
/// the boundary of `H(w)` sweeps past a sample point (or the query, where
/// feasibility ends). Evaluating every such critical normal plus a normal
/// inside every arc between consecutive critical angles therefore covers
/// every realizable inside-set, so the minimum over those candidates of the
/// conditional rate of label 0 is the exact optimum over query-containing
/// homogeneous halfspaces.
pub fn brute_force_refclass_2d(
    sample: &LabeledSample,
    query: &Vector,
) -> Result<(Halfspace, f64)> {
    if sample.is_empty() {
        return Err(CoreError::EmptySample);
    }
    crate::vector::check_dims(2, sample.dim())?;
    crate::vector::check_dims(2, query.dim())?;
    if query.is_zero() {
        return Err(CoreError::ZeroVector);
    }

    let mut best: Option<(f64, f64)> = None; // (error, angle)
    for alpha in candidate_angles_2d(sample, query) {
        let w = [alpha.cos(), alpha.sin()];
        if query[0] * w[0] + query[1] * w[1] < -1e-12 * query.norm() {
            continue;
        }
        let mut inside = 0usize;
        let mut zeros = 0usize;
        for (x, y) in sample.iter() {
            if dot(x, &w) >= 0.0 {
                inside += 1;
                zeros += (y == 0) as usize;
            }
        }
        if inside == 0 {
            continue;
        }
        let err = zeros as f64 / inside as f64;
        if best.map_or(true, |(b, _)| err < b) {
            best = Some((err, alpha));
        }
    }
    // H(query direction) always contains the query and its own point count
    // can still be zero only if every sample point avoids it AND every other
    // candidate subset is empty; with a nonzero query this cannot exhaust
    // all candidates unless the sample itself is degenerate.
    let (error, alpha) = best.ok_or_else(|| {
        CoreError::invalid("sample", "no query-containing candidate had support")
    })?;
    let normal = Vector::new(vec![alpha.cos(), alpha.sin()])?;
    Ok((Halfspace::new(normal)?, error))
}

/// Critical angles (every point's direction rotated by +/- pi/2, the query's
/// likewise) plus a midpoint inside every arc between consecutive criticals.
fn candidate_angles_2d(sample: &LabeledSample, query: &Vector) -> Vec<f64> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let tau = 2.0 * PI;
    let mut criticals: Vec<f64> = Vec::with_capacity(2 * sample.len() + 2);
    let mut push_rotations = |x: f64, y: f64| {
        if x == 0.0 && y == 0.0 {
            return;
        }
        let a = y.atan2(x);
        criticals.push((a + FRAC_PI_2).rem_euclid(tau));
        criticals.push((a - FRAC_PI_2).rem_euclid(tau));
    };
    for (row, _) in sample.iter() {
        push_rotations(row[0], row[1]);
    }
    push_rotations(query[0], query[1]);

    criticals.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
    criticals.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut angles = criticals.clone();
    for i in 0..criticals.len() {
        let a = criticals[i];
        let b = if i + 1 < criticals.len() {
            criticals[i + 1]
        } else {
            criticals[0] + tau
        };
        angles.push(((a + b) / 2.0).rem_euclid(tau));
    }
    angles
}

/// Exact 2-dimensional personalized-prediction oracle: the minimum of the
/// conditional error over every list classifier paired with every
/// query-containing halfspace. A classifier's conditional error inside a
/// halfspace equals the rate of label 0 of its agreement relabeling there,
/// so each classifier reduces to the reference-class oracle.
pub fn brute_force_pair_2d(
    sample: &LabeledSample,
    query: &Vector,
    list: &ClassifierList,
) -> Result<CandidatePair> {
    if list.is_empty() {
        return Err(CoreError::EmptyList);
    }
    let mut best: Option<(usize, Halfspace, f64)> = None;
    for (idx, c) in list.classifiers.iter().enumerate() {
        let relabeled = agreement_relabel(sample, c);
        let (h, err) = brute_force_refclass_2d(&relabeled, query)?;
        if best.as_ref().map_or(true, |(_, _, b)| err < *b) {
            best = Some((idx, h, err));
        }
    }
    let (idx, halfspace, _) = best.expect("list is non-empty");
    let classifier = list.classifiers[idx].clone();
    let empirical_error =
        empirical_conditional_error(sample, Rule::Sparse(&classifier), &halfspace)?;
    let support = support_count(sample, &halfspace)?;
    Ok(CandidatePair {
        classifier,
        halfspace,
        empirical_error,
        support_count: support,
    })
}
