//! Projected gradient descent with contractive projection.
//!
//! The loop minimizes the surrogate loss `E[y * max(0, <x, w>)]` over unit
//! normals `w`, returning every iterate. Two geometric facts make it work:
//! the negated projected gradient of a sub-optimal normal has a guaranteed
//! component toward the optimal normal, and projecting an escaped normal
//! back onto the query's halfspace never increases its angle to the optimum.
//! Keeping the whole iterate list (rather than the last normal) lets a
//! validation pass pick the best stop.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::sample::LabeledSample;
use crate::vector::{check_dims, dot, normalize, project_orthogonal, Vector};

/// Tolerance for the query-membership invariant on returned normals.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Rows per chunk for the deterministic parallel gradient sum. Chunk
/// boundaries are fixed, so the reduction order (and hence the float result)
/// does not depend on the thread schedule.
const GRADIENT_CHUNK: usize = 4096;

/// Configuration of one descent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgdConfig {
    /// Number of gradient steps; the run returns `iterations + 1` normals.
    pub iterations: usize,
    /// Step size.
    pub step: f64,
    /// Query point every iterate's halfspace must contain.
    pub query: Vector,
}

impl PgdConfig {
    pub fn new(iterations: usize, step: f64, query: Vector) -> Result<Self> {
        if iterations == 0 {
            return Err(CoreError::invalid("iterations", "must be at least 1"));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(CoreError::invalid("step", format!("must be positive, got {step}")));
        }
        if query.is_zero() {
            return Err(CoreError::ZeroVector);
        }
        Ok(Self {
            iterations,
            step,
            query,
        })
    }
}

/// The full list of normals visited by a descent run, first to last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateList {
    normals: Vec<Vector>,
}

impl IterateList {
    pub fn normals(&self) -> &[Vector] {
        &self.normals
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    /// Checks the unit-norm and query-membership invariants on every normal.
    pub fn validate(&self, query: &Vector) -> Result<()> {
        let q_hat = normalize(query)?;
        for w in &self.normals {
            if (w.norm() - 1.0).abs() > MEMBERSHIP_TOL {
                return Err(CoreError::invalid("iterate", "normal is not unit"));
            }
            if w.dot(&q_hat)? < -MEMBERSHIP_TOL {
                return Err(CoreError::invalid("iterate", "query left the halfspace"));
            }
        }
        Ok(())
    }
}

/// Full-batch projected gradient of the surrogate loss at `w`:
/// the sample mean of `y * proj_{w-perp}(x) * 1[<x, w> >= 0]`.
///
/// The output is orthogonal to `w` (up to roundoff). Labels enter as 0/1, so
/// points labeled 0 contribute nothing.
pub fn projected_gradient(sample: &LabeledSample, w: &Vector) -> Result<Vector> {
    if sample.is_empty() {
        return Err(CoreError::EmptySample);
    }
    check_dims(sample.dim(), w.dim())?;
    let dim = sample.dim();
    let wn = w.as_slice();

    // Sum y * x * 1[<x,w> >= 0] per fixed-size chunk, then combine chunks in
    // order; the projection is applied once to the mean.
    let n = sample.len();
    let chunks: Vec<Vec<f64>> = (0..n.div_ceil(GRADIENT_CHUNK))
        .into_par_iter()
        .map(|ci| {
            let lo = ci * GRADIENT_CHUNK;
            let hi = (lo + GRADIENT_CHUNK).min(n);
            let mut acc = vec![0.0; dim];
            for i in lo..hi {
                if sample.label(i) == 0 {
                    continue;
                }
                let x = sample.row(i);
                if dot(x, wn) >= 0.0 {
                    for (a, xi) in acc.iter_mut().zip(x) {
                        *a += xi;
                    }
                }
            }
            acc
        })
        .collect();

    let mut total = vec![0.0; dim];
    for chunk in chunks {
        for (t, c) in total.iter_mut().zip(chunk) {
            *t += c;
        }
    }
    let inv = 1.0 / n as f64;
    let mean = Vector::from_raw(total.into_iter().map(|t| t * inv).collect());
    project_orthogonal(&mean, w)
}

/// Runs the descent loop and returns all `iterations + 1` normals.
///
/// Starting from the normalized query, each step subtracts `step` times the
/// projected gradient and re-normalizes. If the update leaves the query's
/// halfspace (`<u, query> < 0`; a tie counts as membership), the update is
/// first projected onto the query's orthogonal complement, landing the
/// normal exactly on the halfspace boundary.
///
/// Callers minimizing the rate of label 1 inside the halfspace must negate
/// labels beforehand.
pub fn run_pgd(sample: &LabeledSample, cfg: &PgdConfig) -> Result<IterateList> {
    if sample.is_empty() {
        return Err(CoreError::EmptySample);
    }
    check_dims(sample.dim(), cfg.query.dim())?;
    let mut normals = Vec::with_capacity(cfg.iterations + 1);
    normals.push(normalize(&cfg.query)?);

    for _ in 0..cfg.iterations {
        let w = normals.last().expect("at least the start normal");
        let grad = projected_gradient(sample, w)?;
        let u = w.sub(&grad.scale(cfg.step))?;
        let next = if u.dot(&cfg.query)? < 0.0 {
            project_orthogonal(&u, &cfg.query).and_then(|p| normalize(&p))
        } else {
            normalize(&u)
        };
        // A zero-norm update (the step exactly cancels w, or u is parallel
        // to the query) is a measure-zero degeneracy: keep the previous
        // normal so the list stays `iterations + 1` long.
        let next = match next {
            Ok(v) => v,
            Err(CoreError::ZeroVector) => w.clone(),
            Err(e) => return Err(e),
        };
        normals.push(next);
    }

    let list = IterateList { normals };
    debug_assert!(list.validate(&cfg.query).is_ok());
    Ok(list)
}
