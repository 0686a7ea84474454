//! Woodward-style diesel governor: second-order electric control box with
//! a lead, integrating actuator with lead-lag shaping, and engine dead time.

use serde::{Deserialize, Serialize};

use super::blocks::{lag_deriv, lag_out, lead_lag_deriv, lead_lag_out};
use super::{check_nonneg, check_positive};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegovParams {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub t5: f64,
    pub t6: f64,
    /// Engine dead time, s.
    pub t_d: f64,
    pub k: f64,
}

impl Default for DegovParams {
    fn default() -> Self {
        Self {
            t1: 0.058,
            t2: 0.021,
            t3: 0.49,
            t4: 0.056,
            t5: 0.0058,
            t6: 0.017,
            t_d: 0.02,
            k: 27.2,
        }
    }
}

impl DegovParams {
    pub fn validate(&self) -> Result<()> {
        for (n, v) in [
            ("degov.t1", self.t1),
            ("degov.t2", self.t2),
            ("degov.t3", self.t3),
            ("degov.t4", self.t4),
            ("degov.t5", self.t5),
            ("degov.t6", self.t6),
        ] {
            check_nonneg(n, v)?;
        }
        check_nonneg("degov.t_d", self.t_d)?;
        check_positive("degov.k", self.k)
    }
}

/// State layout: `[lag T1, lead-lag T3/T2, lead-lag T4/T5, lag T6, torque]`.
pub const DEGOV_STATES: usize = 5;

pub(super) fn derivatives(p: &DegovParams, x: &[f64], omega: f64, omega_ref: f64, dx: &mut [f64]) {
    let e = omega_ref - omega;
    let y1 = lag_out(x[0], e, p.t1);
    dx[0] = lag_deriv(x[0], e, p.t1);
    let y2 = lead_lag_out(x[1], y1, p.t3, p.t2);
    dx[1] = lead_lag_deriv(x[1], y1, p.t2);
    let y3 = lead_lag_out(x[2], y2, p.t4, p.t5);
    dx[2] = lead_lag_deriv(x[2], y2, p.t5);
    let y4 = lag_out(x[3], y3, p.t6);
    dx[3] = lag_deriv(x[3], y3, p.t6);
    dx[4] = p.k * y4;
}

pub(super) fn steady_state(p_m: f64, omega: f64) -> Vec<f64> {
    vec![0.0, 0.0, 0.0, 0.0, p_m / omega]
}
