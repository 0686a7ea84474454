//! Bound-constrained black-box minimization with a cubic RBF surrogate.
//!
//! Work happens in the unit box; parameters with equal bounds are held
//! fixed and removed from the search space.

mod merit;
mod rbf;

pub use merit::{
    generate_candidates, merit, min_distances, propose_batch, propose_candidate, scaled_distance,
    scaled_surrogate, score_candidates, select_candidate, CandidateSpec,
};
pub use rbf::{augmented_system, eval_surrogate, fit_surrogate, rbf_kernel, SamplePoint, SurrogateModel};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrOptConfig {
    /// Total objective evaluations, initial design included.
    pub max_evals: usize,
    /// Initial design size; `None` uses `max(2(d + 1), 20)`.
    pub initial_design: Option<usize>,
    /// Merit weights, cycled per iteration.
    pub weights: Vec<f64>,
    pub candidates_per_dim: usize,
    pub sigma_init: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub min_separation: f64,
    /// Points evaluated concurrently per iteration. 1 evaluates serially.
    pub batch: usize,
    pub seed: u64,
}

impl Default for SurrOptConfig {
    fn default() -> Self {
        Self {
            max_evals: 500,
            initial_design: None,
            weights: vec![0.3, 0.5, 0.8, 0.95],
            candidates_per_dim: 500,
            sigma_init: 0.2,
            sigma_min: 1e-3,
            sigma_max: 0.4,
            min_separation: 1e-3,
            batch: 1,
            seed: 0,
        }
    }
}

impl SurrOptConfig {
    pub fn initial_size(&self, d: usize) -> usize {
        self.initial_design.unwrap_or_else(|| (2 * (d + 1)).max(20))
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.weights.is_empty() || self.weights.iter().any(|w| !(*w > 0.0 && *w < 1.0)) {
            return Err(Error::InvalidInput("merit weights must lie in (0, 1)".into()));
        }
        let n0 = self.initial_size(d);
        if d > 0 && n0 < d + 1 {
            return Err(Error::InvalidInput(format!(
                "initial design of {n0} points is too small for {d} dimensions"
            )));
        }
        if d > 0 && self.max_evals <= n0 {
            return Err(Error::InvalidInput(format!(
                "max_evals ({}) must exceed the initial design size ({n0})",
                self.max_evals
            )));
        }
        if !(self.sigma_min > 0.0 && self.sigma_min <= self.sigma_init && self.sigma_init <= self.sigma_max) {
            return Err(Error::InvalidInput(
                "perturbation widths must satisfy 0 < sigma_min <= sigma_init <= sigma_max".into(),
            ));
        }
        if !(self.min_separation >= 0.0) || self.candidates_per_dim == 0 || self.batch == 0 {
            return Err(Error::InvalidInput("invalid candidate settings".into()));
        }
        Ok(())
    }
}

/// One objective evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    /// 1-based evaluation index.
    pub iteration: usize,
    /// Parameter values in physical units, fixed dimensions included.
    pub x: Vec<f64>,
    /// Objective value, or the penalty if the objective was not finite.
    pub g: f64,
    pub penalized: bool,
    pub best_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub x_best: Vec<f64>,
    pub g_best: f64,
    pub history: Vec<HistoryEntry>,
    /// Largest `|s(x_i) - g_i|` seen over all refits, relative to
    /// `max(1, max |g|)`.
    pub max_interp_error: f64,
    pub refit_failures: usize,
}

/// Latin hypercube sample of `n` points in `[0, 1]^d`.
pub fn lhs<R: Rng>(rng: &mut R, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; d]; n];
    for j in 0..d {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        for (i, p) in pts.iter_mut().enumerate() {
            p[j] = (perm[i] as f64 + rng.gen::<f64>()) / n as f64;
        }
    }
    pts
}

struct Space {
    bounds: Vec<(f64, f64)>,
    free: Vec<usize>,
}

impl Space {
    fn new(bounds: &[(f64, f64)]) -> Result<Self> {
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(Error::MalformedBounds {
                    name: format!("x[{i}]"),
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(Self {
            bounds: bounds.to_vec(),
            free: (0..bounds.len()).filter(|&i| bounds[i].1 > bounds[i].0).collect(),
        })
    }

    fn to_physical(&self, u: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = self.bounds.iter().map(|b| b.0).collect();
        for (k, &i) in self.free.iter().enumerate() {
            let (lo, hi) = self.bounds[i];
            x[i] = (lo + u[k] * (hi - lo)).clamp(lo, hi);
        }
        x
    }
}

/// Minimizes `objective` over the box `bounds`.
///
/// Non-finite objective values are recorded with a penalty equal to the
/// largest finite value seen so far and the search continues.
pub fn optimize<F>(objective: F, bounds: &[(f64, f64)], cfg: &SurrOptConfig) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let space = Space::new(bounds)?;
    let d = space.free.len();
    cfg.validate(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut run = Run {
        space: &space,
        units: Vec::new(),
        raw: Vec::new(),
        history: Vec::new(),
        best: None,
    };

    if d == 0 {
        run.evaluate(&objective, vec![Vec::new()], 1);
        return Ok(run.finish(0.0, 0));
    }

    let n0 = cfg.initial_size(d).min(cfg.max_evals);
    run.evaluate(&objective, lhs(&mut rng, n0, d), cfg.batch);

    let mut sigma = cfg.sigma_init;
    let (mut fails, mut succ) = (0usize, 0usize);
    let fail_tol = d.max(5);
    let spec_count = cfg.candidates_per_dim * d;
    let mut max_err: f64 = 0.0;
    let mut refit_failures = 0;
    let mut iter = 0usize;

    while run.history.len() < cfg.max_evals {
        let points = run.fit_points();
        let batch = cfg.batch.min(cfg.max_evals - run.history.len());
        let w = cfg.weights[iter % cfg.weights.len()];
        iter += 1;
        let proposals = match fit_surrogate(&points) {
            Ok(model) => {
                let scale = points.iter().fold(1.0f64, |m, p| m.max(p.g.abs()));
                for p in &points {
                    max_err = max_err.max((model.eval_unchecked(&p.x) - p.g).abs() / scale);
                }
                let best_u = run.best_unit();
                let spec = CandidateSpec {
                    count: spec_count,
                    sigma,
                    min_sep: cfg.min_separation,
                };
                propose_batch(&mut rng, &model, &run.units, &best_u, w, spec, batch)
                    .unwrap_or_else(|_| vec![fallback_point(&mut rng, &run.units, d)])
            }
            Err(_) => {
                refit_failures += 1;
                vec![fallback_point(&mut rng, &run.units, d)]
            }
        };

        let best_before = run.best_g();
        run.evaluate(&objective, proposals, batch);
        let improved = run.best_g() < best_before - 1e-3 * best_before.abs();
        if improved {
            succ += 1;
            fails = 0;
        } else {
            fails += 1;
            succ = 0;
        }
        if succ >= 3 {
            sigma = (2.0 * sigma).min(cfg.sigma_max);
            succ = 0;
        }
        if fails >= fail_tol {
            sigma = (0.5 * sigma).max(cfg.sigma_min);
            fails = 0;
        }
    }
    Ok(run.finish(max_err, refit_failures))
}

/// The uniform draw farthest from the evaluated set.
fn fallback_point<R: Rng>(rng: &mut R, evaluated: &[Vec<f64>], d: usize) -> Vec<f64> {
    let cands: Vec<Vec<f64>> = (0..200 * d.max(1)).map(|_| (0..d).map(|_| rng.gen()).collect()).collect();
    let dist = min_distances(&cands, evaluated);
    let i = (0..cands.len())
        .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
        .unwrap_or(0);
    cands[i].clone()
}

struct Run<'a> {
    space: &'a Space,
    units: Vec<Vec<f64>>,
    raw: Vec<f64>,
    history: Vec<HistoryEntry>,
    best: Option<usize>,
}

impl Run<'_> {
    fn evaluate<F>(&mut self, objective: &F, us: Vec<Vec<f64>>, batch: usize)
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let xs: Vec<Vec<f64>> = us.iter().map(|u| self.space.to_physical(u)).collect();
        let gs: Vec<f64> = if batch > 1 {
            xs.par_iter().map(|x| objective(x)).collect()
        } else {
            xs.iter().map(|x| objective(x)).collect()
        };
        for ((u, x), g) in us.into_iter().zip(xs).zip(gs) {
            let finite = g.is_finite();
            if finite && self.best.map_or(true, |b| g < self.raw[b]) {
                self.best = Some(self.raw.len());
            }
            let penalty = self.max_finite().unwrap_or(f64::MAX);
            self.units.push(u);
            self.raw.push(g);
            self.history.push(HistoryEntry {
                iteration: self.history.len() + 1,
                x,
                g: if finite { g } else { penalty },
                penalized: !finite,
                best_g: self.best_g(),
            });
        }
    }

    fn max_finite(&self) -> Option<f64> {
        self.raw.iter().copied().filter(|g| g.is_finite()).reduce(f64::max)
    }

    fn best_g(&self) -> f64 {
        self.best.map_or(f64::INFINITY, |b| self.raw[b])
    }

    fn best_unit(&self) -> Vec<f64> {
        let i = self.best.unwrap_or(0);
        self.units[i].clone()
    }

    /// Evaluated points with non-finite values replaced by the current
    /// largest finite value.
    fn fit_points(&self) -> Vec<SamplePoint> {
        let pen = self.max_finite().unwrap_or(0.0);
        self.units
            .iter()
            .zip(&self.raw)
            .map(|(u, &g)| SamplePoint::new(u.clone(), if g.is_finite() { g } else { pen }))
            .collect()
    }

    fn finish(self, max_interp_error: f64, refit_failures: usize) -> OptResult {
        let i = self.best.unwrap_or(0);
        OptResult {
            x_best: self.history[i].x.clone(),
            g_best: self.history[i].g,
            history: self.history,
            max_interp_error,
            refit_failures,
        }
    }
}
