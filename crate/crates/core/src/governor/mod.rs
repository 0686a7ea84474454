//! Engine-governor models producing mechanical power from rotor speed,
//! plus the fuel-curve estimator for the engine gain and no-load fuel.
//!
//! All four models share one interface over a packed state vector so the
//! simulation engine can integrate them alongside the machine. Powers are
//! per-unit on the machine base; the GGOV-family engine gain is expressed
//! on the engine power base and rescaled here.

pub mod blocks;
pub mod degov;
pub mod delay;
pub mod fuel;
pub mod ggov1;
pub mod ggov1d;
pub mod simple;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::Rk4;
use crate::units::PerUnitBase;

pub use degov::{DegovParams, DEGOV_STATES};
pub use delay::DelayBuffer;
pub use fuel::{estimate_fuel_curve, FuelCurveFit};
pub use ggov1::{Ggov1Params, GGOV1_STATES};
pub use ggov1d::{Ggov1dParams, GGOV1D_STATES};
pub use simple::{SimpleGovParams, SIMPLE_STATES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GovernorKind {
    Simple,
    Degov,
    Ggov1,
    Ggov1d,
}

impl GovernorKind {
    pub const ALL: [GovernorKind; 4] = [
        GovernorKind::Simple,
        GovernorKind::Degov,
        GovernorKind::Ggov1,
        GovernorKind::Ggov1d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GovernorKind::Simple => "simple",
            GovernorKind::Degov => "degov",
            GovernorKind::Ggov1 => "ggov1",
            GovernorKind::Ggov1d => "ggov1d",
        }
    }
}

impl fmt::Display for GovernorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GovernorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simple" => Ok(GovernorKind::Simple),
            "degov" => Ok(GovernorKind::Degov),
            "ggov1" => Ok(GovernorKind::Ggov1),
            "ggov1d" => Ok(GovernorKind::Ggov1d),
            "droop" => Err(Error::InvalidInput(
                "droop operation is not supported; the unit runs isochronous".into(),
            )),
            other => Err(Error::InvalidInput(format!("unknown governor kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GovernorParams {
    Simple(SimpleGovParams),
    Degov(DegovParams),
    Ggov1(Ggov1Params),
    Ggov1d(Ggov1dParams),
}

impl GovernorParams {
    pub fn kind(&self) -> GovernorKind {
        match self {
            GovernorParams::Simple(_) => GovernorKind::Simple,
            GovernorParams::Degov(_) => GovernorKind::Degov,
            GovernorParams::Ggov1(_) => GovernorKind::Ggov1,
            GovernorParams::Ggov1d(_) => GovernorKind::Ggov1d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GovernorParams::Simple(p) => p.validate(),
            GovernorParams::Degov(p) => p.validate(),
            GovernorParams::Ggov1(p) => p.validate(),
            GovernorParams::Ggov1d(p) => p.validate(),
        }
    }
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::DegenerateParameters(format!("{name} must be positive, got {v}")))
    }
}

pub(crate) fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::DegenerateParameters(format!("{name} must be non-negative, got {v}")))
    }
}

pub(crate) fn check_sign_split(what: &str, lo: f64, hi: f64) -> Result<()> {
    if lo < 0.0 && hi > 0.0 {
        Ok(())
    } else {
        Err(Error::DegenerateParameters(format!(
            "{what} must satisfy lower < 0 < upper, got [{lo}, {hi}]"
        )))
    }
}

/// Valve position delivering `p_engine` (engine base) at steady state.
pub(crate) fn valve_for_power(k_turb: f64, w_fnl: f64, p_engine: f64) -> Result<f64> {
    let v = w_fnl + p_engine / k_turb;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidInput(format!(
            "load needs valve position {v:.4}, outside [0, 1]"
        )));
    }
    Ok(v)
}

/// A validated governor bound to a power base.
#[derive(Debug, Clone, PartialEq)]
pub struct Governor {
    params: GovernorParams,
    engine_scale: f64,
}

/// Packed governor state plus its engine delay line.
#[derive(Debug, Clone, PartialEq)]
pub struct GovernorState {
    pub x: Vec<f64>,
    pub delay: DelayBuffer,
    pub t: f64,
}

impl Governor {
    pub fn new(params: GovernorParams, base: &PerUnitBase) -> Result<Self> {
        params.validate()?;
        base.validate()?;
        Ok(Self {
            params,
            engine_scale: base.engine_scale(),
        })
    }

    pub fn params(&self) -> &GovernorParams {
        &self.params
    }

    pub fn kind(&self) -> GovernorKind {
        self.params.kind()
    }

    pub fn n_states(&self) -> usize {
        match self.params {
            GovernorParams::Simple(_) => SIMPLE_STATES,
            GovernorParams::Degov(_) => DEGOV_STATES,
            GovernorParams::Ggov1(_) => GGOV1_STATES,
            GovernorParams::Ggov1d(_) => GGOV1D_STATES,
        }
    }

    /// Engine dead time, s.
    pub fn delay(&self) -> f64 {
        match self.params {
            GovernorParams::Simple(p) => p.tau_d,
            GovernorParams::Degov(p) => p.t_d,
            _ => 0.0,
        }
    }

    /// Signal fed into the engine delay line.
    pub fn delay_input(&self, x: &[f64]) -> f64 {
        match self.params {
            GovernorParams::Simple(_) => x[1],
            GovernorParams::Degov(_) => x[4],
            _ => 0.0,
        }
    }

    /// Index of the valve position, for models that have one.
    pub fn valve_index(&self) -> Option<usize> {
        match self.params {
            GovernorParams::Ggov1(_) => Some(2),
            GovernorParams::Ggov1d(_) => Some(4),
            _ => None,
        }
    }

    /// Valve rate limits `(close, open)`, for models that have them.
    pub fn valve_rate_limits(&self) -> Option<(f64, f64)> {
        match self.params {
            GovernorParams::Ggov1(p) => Some((p.valve_close, p.valve_open)),
            GovernorParams::Ggov1d(p) => Some((p.valve_close, p.valve_open)),
            _ => None,
        }
    }

    /// Clamped speed error entering the controller, for models with a clamp.
    pub fn clamped_error(&self, omega: f64, omega_ref: f64) -> Option<f64> {
        match self.params {
            GovernorParams::Ggov1(p) => Some(p.speed_error(omega, omega_ref)),
            GovernorParams::Ggov1d(p) => Some(p.speed_error(omega, omega_ref)),
            _ => None,
        }
    }

    pub fn derivatives(&self, x: &[f64], omega: f64, omega_ref: f64, dx: &mut [f64]) {
        match &self.params {
            GovernorParams::Simple(p) => simple::derivatives(p, x, omega, omega_ref, dx),
            GovernorParams::Degov(p) => degov::derivatives(p, x, omega, omega_ref, dx),
            GovernorParams::Ggov1(p) => ggov1::derivatives(p, x, omega, omega_ref, dx),
            GovernorParams::Ggov1d(p) => ggov1d::derivatives(p, x, omega, omega_ref, dx),
        }
    }

    /// Mechanical power (machine base) given the delayed engine signal.
    pub fn power(&self, x: &[f64], omega: f64, delayed: f64) -> f64 {
        match &self.params {
            GovernorParams::Simple(p) => simple::engine_power(p, omega, delayed),
            GovernorParams::Degov(_) => delayed * omega,
            GovernorParams::Ggov1(p) => self.engine_scale * ggov1::engine_output(p, x),
            GovernorParams::Ggov1d(p) => self.engine_scale * ggov1d::engine_output(p, x),
        }
    }

    /// Enforces position limits after an accepted step.
    pub fn project(&self, x: &mut [f64]) {
        if let Some(i) = self.valve_index() {
            x[i] = x[i].clamp(0.0, 1.0);
        }
    }

    /// State that holds `p_m` (machine base) at speed `omega`.
    pub fn steady_state(&self, p_m: f64, omega: f64) -> Result<Vec<f64>> {
        match &self.params {
            GovernorParams::Simple(p) => Ok(simple::steady_state(p, p_m, omega)),
            GovernorParams::Degov(_) => Ok(degov::steady_state(p_m, omega)),
            GovernorParams::Ggov1(p) => ggov1::steady_state(p, p_m / self.engine_scale),
            GovernorParams::Ggov1d(p) => ggov1d::steady_state(p, p_m / self.engine_scale),
        }
    }

    pub fn initial_state(&self, p_m: f64, omega: f64, t0: f64) -> Result<GovernorState> {
        let x = self.steady_state(p_m, omega)?;
        let delay = DelayBuffer::new(self.delay(), t0, self.delay_input(&x));
        Ok(GovernorState { x, delay, t: t0 })
    }

    /// Advances the governor alone by `dt` at constant speed and returns
    /// the mechanical power at the new time.
    pub fn step(&self, st: &mut GovernorState, omega: f64, omega_ref: f64, dt: f64) -> f64 {
        let mut rk = Rk4::new(st.x.len());
        let _ = rk.step::<(), _>(st.t, dt, &mut st.x, |_, x, dx| {
            self.derivatives(x, omega, omega_ref, dx);
            Ok(())
        });
        self.project(&mut st.x);
        st.t += dt;
        let v = self.delay_input(&st.x);
        let delayed = st.delay.lookup((st.t, v));
        st.delay.push(st.t, v);
        self.power(&st.x, omega, delayed)
    }
}

fn step_with(params: GovernorParams, base: &PerUnitBase, st: &mut GovernorState, omega: f64, omega_ref: f64, dt: f64) -> Result<f64> {
    Ok(Governor::new(params, base)?.step(st, omega, omega_ref, dt))
}

pub fn simple_gov_step(st: &mut GovernorState, omega: f64, omega_ref: f64, p: &SimpleGovParams, dt: f64) -> Result<f64> {
    step_with(GovernorParams::Simple(*p), &PerUnitBase::default(), st, omega, omega_ref, dt)
}

pub fn degov_step(st: &mut GovernorState, omega: f64, omega_ref: f64, p: &DegovParams, dt: f64) -> Result<f64> {
    step_with(GovernorParams::Degov(*p), &PerUnitBase::default(), st, omega, omega_ref, dt)
}

pub fn ggov1_step(
    st: &mut GovernorState,
    omega: f64,
    omega_ref: f64,
    p: &Ggov1Params,
    base: &PerUnitBase,
    dt: f64,
) -> Result<f64> {
    step_with(GovernorParams::Ggov1(*p), base, st, omega, omega_ref, dt)
}

pub fn ggov1d_step(
    st: &mut GovernorState,
    omega: f64,
    omega_ref: f64,
    p: &Ggov1dParams,
    base: &PerUnitBase,
    dt: f64,
) -> Result<f64> {
    step_with(GovernorParams::Ggov1d(*p), base, st, omega, omega_ref, dt)
}
