//! Speed-control path of GGOV1: clamped speed error, filtered PID, first
//! order valve actuator with rate and position limits, and the
//! `K_turb (fuel - w_fnl)` engine with lead-lag shaping.

use serde::{Deserialize, Serialize};

use super::blocks::{lead_lag_deriv, lead_lag_out, limited_rate};
use super::{check_nonneg, check_positive, check_sign_split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ggov1Params {
    pub maxerr: f64,
    pub minerr: f64,
    pub k_p: f64,
    pub k_i: f64,
    pub k_d: f64,
    pub n_d: f64,
    pub t_act: f64,
    /// Valve opening rate limit, pu/s.
    pub valve_open: f64,
    /// Valve closing rate limit (negative), pu/s.
    pub valve_close: f64,
    pub k_turb: f64,
    pub t_b: f64,
    pub t_c: f64,
    pub w_fnl: f64,
}

impl Default for Ggov1Params {
    /// Published set with a faster actuator and smaller derivative gain;
    /// the published pair leaves a slow, poorly damped recovery on this
    /// machine.
    fn default() -> Self {
        Self {
            k_d: 20.0,
            t_act: 0.2,
            ..Self::reference()
        }
    }
}

impl Ggov1Params {
    pub fn reference() -> Self {
        Self {
            maxerr: 0.4,
            minerr: -0.48,
            k_p: 107.75,
            k_i: 154.05,
            k_d: 120.92,
            n_d: 187.9,
            t_act: 0.79,
            valve_open: 68.39,
            valve_close: -13.02,
            k_turb: 0.35,
            t_b: 0.78,
            t_c: 0.15,
            w_fnl: 0.11,
        }
    }
}

impl Ggov1Params {
    pub fn validate(&self) -> Result<()> {
        check_sign_split("ggov1 speed-error limits", self.minerr, self.maxerr)?;
        check_sign_split("ggov1 valve rate limits", self.valve_close, self.valve_open)?;
        check_positive("ggov1.t_act", self.t_act)?;
        check_positive("ggov1.k_turb", self.k_turb)?;
        check_nonneg("ggov1.t_b", self.t_b)?;
        check_nonneg("ggov1.n_d", self.n_d)?;
        check_fuel_floor(self.w_fnl)
    }
}

pub(super) fn check_fuel_floor(w_fnl: f64) -> Result<()> {
    if !(0.0..1.0).contains(&w_fnl) {
        return Err(Error::DegenerateParameters(format!(
            "no-load fuel flow must lie in [0, 1), got {w_fnl}"
        )));
    }
    Ok(())
}

/// State layout: `[PID integrator, derivative filter, valve, engine lead-lag]`.
pub const GGOV1_STATES: usize = 4;

/// Engine block input `K_turb (fuel - w_fnl)`, on the engine base.
pub fn engine_drive(k_turb: f64, w_fnl: f64, fuel: f64) -> f64 {
    k_turb * (fuel - w_fnl)
}

impl Ggov1Params {
    pub fn speed_error(&self, omega: f64, omega_ref: f64) -> f64 {
        (omega_ref - omega).clamp(self.minerr, self.maxerr)
    }

    fn fsr(&self, x: &[f64], e: f64) -> f64 {
        let d = if self.n_d > 0.0 {
            self.k_d * self.n_d * (e - x[1])
        } else {
            0.0
        };
        self.k_p * e + x[0] + d
    }
}

pub(super) fn derivatives(p: &Ggov1Params, x: &[f64], omega: f64, omega_ref: f64, dx: &mut [f64]) {
    let e = p.speed_error(omega, omega_ref);
    let fsr = p.fsr(x, e);
    let valve = x[2];
    let mut di = p.k_i * e;
    // conditional integration: hold the integrator while the valve is pinned
    if (valve >= 1.0 && di > 0.0 && fsr > valve) || (valve <= 0.0 && di < 0.0 && fsr < valve) {
        di = 0.0;
    }
    dx[0] = di;
    dx[1] = if p.n_d > 0.0 { p.n_d * (e - x[1]) } else { 0.0 };
    dx[2] = limited_rate((fsr - valve) / p.t_act, valve, p.valve_close, p.valve_open, 0.0, 1.0);
    dx[3] = lead_lag_deriv(x[3], engine_drive(p.k_turb, p.w_fnl, valve), p.t_b);
}

/// Mechanical power on the engine base.
pub(super) fn engine_output(p: &Ggov1Params, x: &[f64]) -> f64 {
    lead_lag_out(x[3], engine_drive(p.k_turb, p.w_fnl, x[2]), p.t_c, p.t_b)
}

pub(super) fn steady_state(p: &Ggov1Params, p_engine: f64) -> Result<Vec<f64>> {
    let valve = super::valve_for_power(p.k_turb, p.w_fnl, p_engine)?;
    Ok(vec![valve, 0.0, valve, engine_drive(p.k_turb, p.w_fnl, valve)])
}
