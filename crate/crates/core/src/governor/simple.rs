//! PI speed controller, first-order actuator, transport delay, and the
//! fuel-rate engine characteristic `P_m = C_2 ω (C m_b' - C_3 ω)`.

use serde::{Deserialize, Serialize};

use super::{check_nonneg, check_positive};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimpleGovParams {
    pub k_p: f64,
    pub k_i: f64,
    /// Actuator time constant, s.
    pub t_sm: f64,
    /// Product of the fuel-to-power coefficient and engine efficiency.
    pub c: f64,
    pub c2: f64,
    pub c3: f64,
    /// Engine dead time, s.
    pub tau_d: f64,
    pub k1: f64,
}

impl Default for SimpleGovParams {
    fn default() -> Self {
        Self {
            k_p: 13.8,
            k_i: 30.9,
            t_sm: 0.059,
            c: 0.97,
            c2: 1.04,
            c3: 1.79,
            tau_d: 0.02,
            k1: 1.0,
        }
    }
}

impl SimpleGovParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("simple.t_sm", self.t_sm)?;
        check_nonneg("simple.tau_d", self.tau_d)?;
        check_positive("simple.k1", self.k1)?;
        check_positive("simple.c", self.c)?;
        check_positive("simple.c2", self.c2)
    }
}

/// State layout: `[speed integrator, m_b]`.
pub const SIMPLE_STATES: usize = 2;

/// `P_m = C_2 ω (p_i - p_f)` with `p_i = C m_b'` and `p_f = C_3 ω`.
pub fn engine_power(p: &SimpleGovParams, omega: f64, m_b_delayed: f64) -> f64 {
    p.c2 * omega * (p.c * m_b_delayed - p.c3 * omega)
}

pub(super) fn derivatives(p: &SimpleGovParams, x: &[f64], omega: f64, omega_ref: f64, dx: &mut [f64]) {
    let dw = omega - omega_ref;
    dx[0] = p.k_i / omega_ref * dw;
    dx[1] = (-p.k1 * x[0] - p.k1 * p.k_p / omega_ref * dw - x[1]) / p.t_sm;
}

pub(super) fn steady_state(p: &SimpleGovParams, p_m: f64, omega: f64) -> Vec<f64> {
    let m_b = (p_m / (p.c2 * omega) + p.c3 * omega) / p.c;
    vec![-m_b / p.k1, m_b]
}
