//! Cubic radial basis interpolant with a linear polynomial tail.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An evaluated location in the unit box and its objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub x: Vec<f64>,
    pub g: f64,
}

impl SamplePoint {
    pub fn new(x: Vec<f64>, g: f64) -> Self {
        Self { x, g }
    }
}

/// `s(x) = sum_i lambda_i |x - c_i|^3 + alpha_0 + sum_j alpha_j x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    pub centers: Vec<Vec<f64>>,
    pub lambdas: Vec<f64>,
    /// Constant term first, then one slope per dimension.
    pub alpha: Vec<f64>,
}

pub fn rbf_kernel(r: f64) -> f64 {
    r * r * r
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Assembles the augmented interpolation matrix and right-hand side.
pub fn augmented_system(points: &[SamplePoint]) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = points.len();
    let d = points.first().map(|p| p.x.len()).unwrap_or(0);
    if points.iter().any(|p| p.x.len() != d) {
        return Err(Error::InvalidInput("sample points differ in dimension".into()));
    }
    if n < d + 1 {
        return Err(Error::DegenerateSample(format!(
            "{n} points cannot support a linear tail in {d} dimensions"
        )));
    }
    let m = n + d + 1;
    let mut a = DMatrix::zeros(m, m);
    for i in 0..n {
        for j in 0..i {
            let phi = rbf_kernel(distance(&points[i].x, &points[j].x));
            a[(i, j)] = phi;
            a[(j, i)] = phi;
        }
        a[(i, n)] = 1.0;
        a[(n, i)] = 1.0;
        for (k, &xk) in points[i].x.iter().enumerate() {
            a[(i, n + 1 + k)] = xk;
            a[(n + 1 + k, i)] = xk;
        }
    }
    let mut b = DVector::zeros(m);
    for (i, p) in points.iter().enumerate() {
        b[i] = p.g;
    }
    Ok((a, b))
}

/// Solves the augmented system by LU with partial pivoting. A solution whose
/// residual is not small relative to the data is treated as singular.
pub fn fit_surrogate(points: &[SamplePoint]) -> Result<SurrogateModel> {
    let (a, b) = augmented_system(points)?;
    let n = points.len();
    let singular = || Error::DegenerateSample("singular interpolation system".into());
    let sol = a
        .clone()
        .lu()
        .solve(&b)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .ok_or_else(singular)?;
    let scale = b.amax().max(1.0);
    if (&a * &sol - &b).amax() > 1e-8 * scale {
        return Err(singular());
    }
    Ok(SurrogateModel {
        centers: points.iter().map(|p| p.x.clone()).collect(),
        lambdas: sol.rows(0, n).iter().copied().collect(),
        alpha: sol.rows(n, sol.len() - n).iter().copied().collect(),
    })
}

impl SurrogateModel {
    pub fn dim(&self) -> usize {
        self.alpha.len() - 1
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::LengthMismatch(x.len(), self.dim()));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let kernel: f64 = self
            .centers
            .iter()
            .zip(&self.lambdas)
            .map(|(c, l)| l * rbf_kernel(distance(x, c)))
            .sum();
        let tail: f64 = self.alpha[0] + self.alpha[1..].iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
        kernel + tail
    }
}

pub fn eval_surrogate(model: &SurrogateModel, x: &[f64]) -> Result<f64> {
    model.eval(x)
}
