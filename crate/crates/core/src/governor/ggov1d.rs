//! GGOV1 engine and limits driven by a third-order integrating actuator
//! with two error-shaping lags in place of the PID and first-order valve.

use serde::{Deserialize, Serialize};

use super::blocks::{lag_deriv, lag_out, lead_lag_deriv, lead_lag_out, limited_rate};
use super::ggov1::{check_fuel_floor, engine_drive};
use super::{check_nonneg, check_positive, check_sign_split};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ggov1dParams {
    pub maxerr: f64,
    pub minerr: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub t5: f64,
    pub t6: f64,
    pub k: f64,
    pub valve_open: f64,
    pub valve_close: f64,
    pub k_turb: f64,
    pub t_b: f64,
    pub t_c: f64,
    pub w_fnl: f64,
}

impl Default for Ggov1dParams {
    fn default() -> Self {
        Self {
            maxerr: 0.069,
            minerr: -0.09,
            t1: 0.028,
            t2: 0.055,
            t3: 0.54,
            t4: 0.052,
            t5: 0.01,
            t6: 0.042,
            k: 90.42,
            valve_open: 92.86,
            valve_close: -105.75,
            k_turb: 0.357,
            t_b: 0.86,
            t_c: 0.69,
            w_fnl: 0.11,
        }
    }
}

impl Ggov1dParams {
    pub fn validate(&self) -> Result<()> {
        check_sign_split("ggov1d speed-error limits", self.minerr, self.maxerr)?;
        check_sign_split("ggov1d valve rate limits", self.valve_close, self.valve_open)?;
        for (n, v) in [
            ("ggov1d.t1", self.t1),
            ("ggov1d.t2", self.t2),
            ("ggov1d.t3", self.t3),
            ("ggov1d.t4", self.t4),
            ("ggov1d.t5", self.t5),
            ("ggov1d.t6", self.t6),
            ("ggov1d.t_b", self.t_b),
        ] {
            check_nonneg(n, v)?;
        }
        check_positive("ggov1d.k", self.k)?;
        check_positive("ggov1d.k_turb", self.k_turb)?;
        check_fuel_floor(self.w_fnl)
    }

    pub fn speed_error(&self, omega: f64, omega_ref: f64) -> f64 {
        (omega_ref - omega).clamp(self.minerr, self.maxerr)
    }
}

/// State layout: `[lag T1, lag T2, lead-lag T3/T5, lead-lag T4/T6, valve,
/// engine lead-lag]`.
pub const GGOV1D_STATES: usize = 6;

pub(super) fn derivatives(p: &Ggov1dParams, x: &[f64], omega: f64, omega_ref: f64, dx: &mut [f64]) {
    let e = p.speed_error(omega, omega_ref);
    let y1 = lag_out(x[0], e, p.t1);
    dx[0] = lag_deriv(x[0], e, p.t1);
    let y2 = lag_out(x[1], y1, p.t2);
    dx[1] = lag_deriv(x[1], y1, p.t2);
    let y3 = lead_lag_out(x[2], y2, p.t3, p.t5);
    dx[2] = lead_lag_deriv(x[2], y2, p.t5);
    let y4 = lead_lag_out(x[3], y3, p.t4, p.t6);
    dx[3] = lead_lag_deriv(x[3], y3, p.t6);
    let valve = x[4];
    dx[4] = limited_rate(p.k * y4, valve, p.valve_close, p.valve_open, 0.0, 1.0);
    dx[5] = lead_lag_deriv(x[5], engine_drive(p.k_turb, p.w_fnl, valve), p.t_b);
}

pub(super) fn engine_output(p: &Ggov1dParams, x: &[f64]) -> f64 {
    lead_lag_out(x[5], engine_drive(p.k_turb, p.w_fnl, x[4]), p.t_c, p.t_b)
}

pub(super) fn steady_state(p: &Ggov1dParams, p_engine: f64) -> Result<Vec<f64>> {
    let valve = super::valve_for_power(p.k_turb, p.w_fnl, p_engine)?;
    Ok(vec![0.0, 0.0, 0.0, 0.0, valve, engine_drive(p.k_turb, p.w_fnl, valve)])
}
