//! Least-squares fit of the fuel-flow line `fuel = w_fnl + P / K_turb`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::PerUnitBase;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuelCurveFit {
    pub k_turb: f64,
    pub w_fnl: f64,
    /// Per-point residual `fuel - fitted`, L/h.
    pub residuals: Vec<f64>,
}

impl FuelCurveFit {
    pub fn rms_residual(&self) -> f64 {
        if self.residuals.is_empty() {
            return 0.0;
        }
        (self.residuals.iter().map(|r| r * r).sum::<f64>() / self.residuals.len() as f64).sqrt()
    }
}

/// Fits `(P_out kW, fuel L/h)` points. Power is taken per-unit on the
/// engine power base and fuel on the maximum fuel flow.
pub fn estimate_fuel_curve(points: &[(f64, f64)], base: &PerUnitBase) -> Result<FuelCurveFit> {
    base.validate()?;
    if points.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "fuel-curve fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(p, f)| !p.is_finite() || !f.is_finite()) {
        return Err(Error::InvalidInput("fuel-curve points must be finite".into()));
    }
    let xs: Vec<f64> = points.iter().map(|(p, _)| p * 1e3 / base.engine_base).collect();
    let ys: Vec<f64> = points.iter().map(|(_, f)| f / base.fuel_base).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let scale = xs.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
    if sxx <= 1e-24 * scale * scale * n {
        return Err(Error::SingularFit(
            "all fuel-curve points share one power value".into(),
        ));
    }
    let slope = sxy / sxx;
    if slope <= 0.0 {
        return Err(Error::SingularFit(format!(
            "fuel flow does not increase with power (slope {slope:.4e})"
        )));
    }
    let w_fnl = my - slope * mx;
    let residuals = points
        .iter()
        .zip(&xs)
        .map(|((_, f), x)| f - (w_fnl + slope * x) * base.fuel_base)
        .collect();
    Ok(FuelCurveFit {
        k_turb: 1.0 / slope,
        w_fnl,
        residuals,
    })
}
