//! Candidate scoring: scaled surrogate value, scaled distance, and their
//! weighted combination.

use rand::Rng;
use rand_distr::StandardNormal;

use super::rbf::{distance, SurrogateModel};
use crate::error::{Error, Result};

/// `(s - s_min) / (s_max - s_min)`, or all zeros when the values are equal.
pub fn scaled_surrogate(values: &[f64]) -> Vec<f64> {
    min_max_scale(values, false)
}

/// Minimum Euclidean distance from each candidate to the evaluated set.
pub fn min_distances(candidates: &[Vec<f64>], evaluated: &[Vec<f64>]) -> Vec<f64> {
    candidates
        .iter()
        .map(|c| evaluated.iter().map(|e| distance(c, e)).fold(f64::INFINITY, f64::min))
        .collect()
}

/// `(d_max - d) / (d_max - d_min)` over the candidates, where `d` is the
/// distance to the nearest evaluated point. Far candidates score 0.
pub fn scaled_distance(candidates: &[Vec<f64>], evaluated: &[Vec<f64>]) -> Vec<f64> {
    min_max_scale(&min_distances(candidates, evaluated), true)
}

fn min_max_scale(v: &[f64], invert: bool) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![0.0; v.len()];
    }
    v.iter()
        .map(|&x| if invert { (hi - x) / span } else { (x - lo) / span })
        .collect()
}

pub fn merit(w: f64, s: f64, d: f64) -> Result<f64> {
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::InvalidInput(format!("merit weight must lie in (0, 1), got {w}")));
    }
    Ok(w * s + (1.0 - w) * d)
}

/// Merit of every candidate. Candidates closer than `min_sep` to an
/// evaluated point get `None`.
pub fn score_candidates(
    model: &SurrogateModel,
    evaluated: &[Vec<f64>],
    candidates: &[Vec<f64>],
    w: f64,
    min_sep: f64,
) -> Result<Vec<Option<f64>>> {
    merit(w, 0.0, 0.0)?;
    let s: Vec<f64> = candidates.iter().map(|c| model.eval(c)).collect::<Result<_>>()?;
    let dist = min_distances(candidates, evaluated);
    let ss = scaled_surrogate(&s);
    let sd = min_max_scale(&dist, true);
    Ok((0..candidates.len())
        .map(|i| (dist[i] >= min_sep).then(|| w * ss[i] + (1.0 - w) * sd[i]))
        .collect())
}

/// Index of the lowest-merit admissible candidate. Ties go to the first.
pub fn select_candidate(
    model: &SurrogateModel,
    evaluated: &[Vec<f64>],
    candidates: &[Vec<f64>],
    w: f64,
    min_sep: f64,
) -> Result<Option<usize>> {
    let scores = score_candidates(model, evaluated, candidates, w, min_sep)?;
    Ok(best_indices(&scores, 1).first().copied())
}

/// Indices of up to `k` admissible candidates in increasing merit.
pub(crate) fn best_indices(scores: &[Option<f64>], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&i| scores[i].is_some()).collect();
    idx.sort_by(|&a, &b| scores[a].unwrap().total_cmp(&scores[b].unwrap()).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Candidate generation around the incumbent in the unit box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateSpec {
    pub count: usize,
    /// Perturbation standard deviation, unit-box units.
    pub sigma: f64,
    pub min_sep: f64,
}

/// Half uniform points, half Gaussian perturbations of `best`, clipped to
/// the box.
pub fn generate_candidates<R: Rng>(rng: &mut R, best: &[f64], count: usize, sigma: f64) -> Vec<Vec<f64>> {
    let d = best.len();
    let n_uniform = count / 2;
    let mut out = Vec::with_capacity(count);
    for _ in 0..n_uniform {
        out.push((0..d).map(|_| rng.gen::<f64>()).collect());
    }
    for _ in n_uniform..count {
        out.push(
            best.iter()
                .map(|&b| {
                    let z: f64 = rng.sample(StandardNormal);
                    (b + sigma * z).clamp(0.0, 1.0)
                })
                .collect(),
        );
    }
    out
}

const MAX_RETRIES: usize = 6;

/// Generates candidates, scores them, and returns the best admissible one.
/// When every candidate is too close to the evaluated set, the
/// perturbation is doubled and the draw repeated a bounded number of times.
pub fn propose_candidate<R: Rng>(
    rng: &mut R,
    model: &SurrogateModel,
    evaluated: &[Vec<f64>],
    best: &[f64],
    w: f64,
    spec: CandidateSpec,
) -> Result<Vec<f64>> {
    propose_batch(rng, model, evaluated, best, w, spec, 1).map(|mut v| v.swap_remove(0))
}

/// Up to `batch` proposals in increasing merit, mutually separated by
/// `min_sep`. Always returns at least one point or an error.
pub fn propose_batch<R: Rng>(
    rng: &mut R,
    model: &SurrogateModel,
    evaluated: &[Vec<f64>],
    best: &[f64],
    w: f64,
    spec: CandidateSpec,
    batch: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut sigma = spec.sigma;
    for _ in 0..MAX_RETRIES {
        let cands = generate_candidates(rng, best, spec.count.max(1), sigma);
        let scores = score_candidates(model, evaluated, &cands, w, spec.min_sep)?;
        let mut picked: Vec<Vec<f64>> = Vec::new();
        for i in best_indices(&scores, scores.len()) {
            if picked.len() == batch.max(1) {
                break;
            }
            if picked.iter().all(|p| distance(p, &cands[i]) >= spec.min_sep) {
                picked.push(cands[i].clone());
            }
        }
        if !picked.is_empty() {
            return Ok(picked);
        }
        sigma = (2.0 * sigma).min(1.0);
    }
    Err(Error::DegenerateSample(
        "every candidate lies within the minimum separation of an evaluated point".into(),
    ))
}
