//! DC4B field-controlled DC commutator exciter with PID regulator and
//! the volts-per-hertz limiter that trims its voltage reference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of entries in a packed [`Dc4bState`].
pub const DC4B_STATES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dc4bParams {
    pub t_r: f64,
    pub k_a: f64,
    pub t_a: f64,
    pub vr_min: f64,
    pub vr_max: f64,
    pub k_p: f64,
    pub k_i: f64,
    pub k_d: f64,
    pub n_d: f64,
    pub k_f: f64,
    pub t_f: f64,
    pub k_e: f64,
    pub t_e: f64,
    pub efd1: f64,
    pub efd2: f64,
    pub se_efd1: f64,
    pub se_efd2: f64,
    pub k_g: f64,
}

impl Dc4bParams {
    /// Published reference tuning for the 400 kVA unit.
    ///
    /// On the machine base used here this gain set does not give a stable
    /// voltage loop; it is kept for bounds and comparison. [`Default`]
    /// carries a stable retune that shares the time constants and limits.
    pub fn reference() -> Self {
        Self {
            t_r: 0.062,
            k_a: 335.85,
            t_a: 0.0175,
            vr_min: -10.45,
            vr_max: 14.34,
            k_p: 434.48,
            k_i: 441.2,
            k_d: 221.19,
            n_d: 36.42,
            k_f: 0.014,
            t_f: 1.56,
            k_e: 0.61,
            t_e: 0.042,
            efd1: 3.0,
            efd2: 2.25,
            se_efd1: 0.1,
            se_efd2: 0.03,
            k_g: 0.97,
        }
    }
}

impl Default for Dc4bParams {
    fn default() -> Self {
        Self {
            k_a: 1.0,
            k_p: 12.0,
            k_i: 24.0,
            k_d: 0.5,
            ..Self::reference()
        }
    }
}

/// A restriction on DC4B parameters that a set may violate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dc4bViolation {
    /// `T_f` is zero while `K_f` is not.
    FeedbackTimeConstant,
    /// Rate feedback configured while the PID derivative is active; the
    /// feedback loop is then bypassed.
    FeedbackWithDerivative,
    /// Saturation anchors not ordered `Efd1 > Efd2`, `SeEfd1 > SeEfd2`.
    SaturationOrdering,
    /// `K_g` outside `[0, 1]`.
    LoopGainRange,
}

impl Dc4bViolation {
    /// Advisory violations are reported but do not stop a simulation.
    pub fn is_fatal(self) -> bool {
        !matches!(self, Dc4bViolation::FeedbackWithDerivative)
    }

    pub fn describe(self) -> &'static str {
        match self {
            Dc4bViolation::FeedbackTimeConstant => "T_f may only be zero when K_f is zero",
            Dc4bViolation::FeedbackWithDerivative => {
                "rate feedback is only active when K_d is zero (feedback bypassed)"
            }
            Dc4bViolation::SaturationOrdering => "requires Efd1 > Efd2 and SeEfd1 > SeEfd2",
            Dc4bViolation::LoopGainRange => "K_g must lie in [0, 1]",
        }
    }
}

/// Checks the parameter restrictions and returns every violation.
pub fn validate_dc4b(p: &Dc4bParams) -> std::result::Result<(), Vec<Dc4bViolation>> {
    let mut v = Vec::new();
    if p.k_f != 0.0 && p.t_f <= 0.0 {
        v.push(Dc4bViolation::FeedbackTimeConstant);
    }
    if p.k_d != 0.0 && p.k_f != 0.0 {
        v.push(Dc4bViolation::FeedbackWithDerivative);
    }
    let saturation_off = p.se_efd1 == 0.0 && p.se_efd2 == 0.0;
    if !saturation_off && !(p.efd1 > p.efd2 && p.se_efd1 > p.se_efd2) {
        v.push(Dc4bViolation::SaturationOrdering);
    }
    if !(0.0..=1.0).contains(&p.k_g) {
        v.push(Dc4bViolation::LoopGainRange);
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

/// Two-point exponential saturation `Se(efd) = a * exp(b * efd)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saturation {
    a: f64,
    b: f64,
}

impl Saturation {
    /// Both anchor values zero disables saturation.
    pub fn fit(p: &Dc4bParams) -> Result<Self> {
        if p.se_efd1 == 0.0 && p.se_efd2 == 0.0 {
            return Ok(Self { a: 0.0, b: 0.0 });
        }
        if !(p.se_efd1 > 0.0 && p.se_efd2 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "saturation anchors must be positive, got SeEfd1 = {}, SeEfd2 = {}",
                p.se_efd1, p.se_efd2
            )));
        }
        if p.efd1 == p.efd2 {
            return Err(Error::InvalidInput("saturation anchors share one Efd value".into()));
        }
        let b = (p.se_efd1 / p.se_efd2).ln() / (p.efd1 - p.efd2);
        let a = p.se_efd1 / (b * p.efd1).exp();
        Ok(Self { a, b })
    }

    pub fn eval(&self, efd: f64) -> f64 {
        if self.a == 0.0 {
            0.0
        } else {
            self.a * (self.b * efd).exp()
        }
    }
}

/// `Se(efd)` through the two configured anchor points.
pub fn exciter_saturation(efd: f64, p: &Dc4bParams) -> Result<f64> {
    if p.efd1 <= p.efd2 {
        return Err(Error::InvalidInput("saturation requires Efd1 > Efd2".into()));
    }
    Ok(Saturation::fit(p)?.eval(efd))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Dc4bState {
    pub v_meas: f64,
    pub pid_integrator: f64,
    pub pid_derivative_filter: f64,
    pub v_regulator: f64,
    pub efd: f64,
    pub feedback_state: f64,
}

impl Dc4bState {
    pub fn to_array(&self) -> [f64; DC4B_STATES] {
        [
            self.v_meas,
            self.pid_integrator,
            self.pid_derivative_filter,
            self.v_regulator,
            self.efd,
            self.feedback_state,
        ]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            v_meas: x[0],
            pid_integrator: x[1],
            pid_derivative_filter: x[2],
            v_regulator: x[3],
            efd: x[4],
            feedback_state: x[5],
        }
    }
}

/// Validated DC4B model with pre-fitted saturation.
#[derive(Debug, Clone)]
pub struct Dc4b {
    p: Dc4bParams,
    sat: Saturation,
    feedback: bool,
}

impl Dc4b {
    /// Rejects fatal restriction violations and degenerate time constants.
    pub fn new(p: Dc4bParams) -> Result<Self> {
        if let Err(v) = validate_dc4b(&p) {
            let fatal: Vec<String> = v
                .iter()
                .filter(|x| x.is_fatal())
                .map(|x| x.describe().to_string())
                .collect();
            if !fatal.is_empty() {
                return Err(Error::Restrictions(fatal));
            }
        }
        for (name, t) in [("t_r", p.t_r), ("t_a", p.t_a), ("t_e", p.t_e)] {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::DegenerateParameters(format!(
                    "exciter {name} must be positive, got {t}"
                )));
            }
        }
        if !(p.vr_min < p.vr_max) {
            return Err(Error::DegenerateParameters(format!(
                "exciter requires vr_min < vr_max, got [{}, {}]",
                p.vr_min, p.vr_max
            )));
        }
        if p.n_d < 0.0 {
            return Err(Error::DegenerateParameters("exciter n_d must be >= 0".into()));
        }
        Ok(Self {
            sat: Saturation::fit(&p)?,
            feedback: p.k_d == 0.0 && p.k_f != 0.0 && p.t_f > 0.0,
            p,
        })
    }

    pub fn params(&self) -> &Dc4bParams {
        &self.p
    }

    pub fn feedback_active(&self) -> bool {
        self.feedback
    }

    fn feedback_output(&self, x: &Dc4bState) -> f64 {
        if self.feedback {
            self.p.k_f / self.p.t_f * (x.efd - x.feedback_state)
        } else {
            0.0
        }
    }

    /// Signal entering the PID block.
    pub fn error_signal(&self, x: &Dc4bState, v_ref: f64, vhz_signal: f64) -> f64 {
        v_ref + vhz_signal - self.p.k_g * x.v_meas - self.feedback_output(x)
    }

    fn pid_output(&self, x: &Dc4bState, e: f64) -> f64 {
        let d = if self.p.n_d > 0.0 {
            self.p.k_d * self.p.n_d * (e - x.pid_derivative_filter)
        } else {
            0.0
        };
        self.p.k_p * e + x.pid_integrator + d
    }

    pub fn derivatives(&self, x: &Dc4bState, v_ref: f64, v_terminal: f64, vhz_signal: f64) -> Dc4bState {
        let p = &self.p;
        let e = self.error_signal(x, v_ref, vhz_signal);
        let u = self.pid_output(x, e);
        let at_max = x.v_regulator >= p.vr_max;
        let at_min = x.v_regulator <= p.vr_min;

        let mut di = p.k_i * e;
        if (at_max && di > 0.0) || (at_min && di < 0.0) {
            di = 0.0;
        }
        let mut dvr = (p.k_a * u - x.v_regulator) / p.t_a;
        if (at_max && dvr > 0.0) || (at_min && dvr < 0.0) {
            dvr = 0.0;
        }
        let vr = x.v_regulator.clamp(p.vr_min, p.vr_max);
        Dc4bState {
            v_meas: (v_terminal - x.v_meas) / p.t_r,
            pid_integrator: di,
            pid_derivative_filter: if p.n_d > 0.0 {
                p.n_d * (e - x.pid_derivative_filter)
            } else {
                0.0
            },
            v_regulator: dvr,
            efd: (vr - (p.k_e + self.sat.eval(x.efd)) * x.efd) / p.t_e,
            feedback_state: if self.feedback {
                (x.efd - x.feedback_state) / p.t_f
            } else {
                0.0
            },
        }
    }

    /// Enforces the regulator limits after an accepted step.
    pub fn project(&self, x: &mut Dc4bState) {
        x.v_regulator = x.v_regulator.clamp(self.p.vr_min, self.p.vr_max);
    }

    /// Equilibrium state holding `efd` at terminal voltage `v_terminal`,
    /// and the reference that makes it so.
    pub fn steady_state(&self, efd: f64, v_terminal: f64) -> Result<(Dc4bState, f64)> {
        let p = &self.p;
        let vr = (p.k_e + self.sat.eval(efd)) * efd;
        if !(p.vr_min..=p.vr_max).contains(&vr) {
            return Err(Error::InvalidInput(format!(
                "steady regulator output {vr:.4} outside [{}, {}]",
                p.vr_min, p.vr_max
            )));
        }
        if p.k_a == 0.0 {
            return Err(Error::DegenerateParameters("exciter k_a is zero".into()));
        }
        let u = vr / p.k_a;
        let (e, integ) = if p.k_i != 0.0 {
            (0.0, u)
        } else if p.k_p != 0.0 {
            (u / p.k_p, 0.0)
        } else {
            return Err(Error::DegenerateParameters(
                "exciter needs k_p or k_i to hold a steady state".into(),
            ));
        };
        let x = Dc4bState {
            v_meas: v_terminal,
            pid_integrator: integ,
            pid_derivative_filter: e,
            v_regulator: vr,
            efd,
            feedback_state: efd,
        };
        Ok((x, e + p.k_g * v_terminal))
    }
}

/// Time derivative of the exciter state.
pub fn dc4b_derivatives(
    state: &Dc4bState,
    v_ref: f64,
    v_terminal: f64,
    vhz_signal: f64,
    p: &Dc4bParams,
) -> Result<Dc4bState> {
    Ok(Dc4b::new(*p)?.derivatives(state, v_ref, v_terminal, vhz_signal))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VhzParams {
    pub enabled: bool,
    pub setpoint: f64,
    /// Integrator gain, 1/s.
    pub gain: f64,
}

impl Default for VhzParams {
    fn default() -> Self {
        Self {
            enabled: true,
            setpoint: 1.0,
            gain: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VhzState {
    pub integrator: f64,
    pub setpoint: f64,
}

impl Default for VhzState {
    fn default() -> Self {
        Self {
            integrator: 0.0,
            setpoint: 1.0,
        }
    }
}

/// Volts-per-hertz error `v / f - setpoint`.
pub fn vhz_error(v_terminal: f64, freq: f64, setpoint: f64) -> f64 {
    v_terminal / freq - setpoint
}

/// One discrete update of the limiter.
///
/// While the ratio exceeds the setpoint the integrator charges and its
/// negated value trims the reference; otherwise it resets to zero.
pub fn vhz_step(
    state: &VhzState,
    v_terminal: f64,
    freq: f64,
    dt: f64,
    gain: f64,
) -> Result<(VhzState, f64)> {
    if !(freq > 0.0) {
        return Err(Error::InvalidInput(format!("V/Hz limiter needs freq > 0, got {freq}")));
    }
    let err = vhz_error(v_terminal, freq, state.setpoint);
    let mut next = *state;
    if err > 0.0 {
        next.integrator += gain * err * dt;
        Ok((next, -next.integrator))
    } else {
        next.integrator = 0.0;
        Ok((next, 0.0))
    }
}

/// Limiter signal for an integrator value inside a continuous step.
pub fn vhz_signal(integrator: f64, err: f64) -> f64 {
    if err > 0.0 {
        -integrator.max(0.0)
    } else {
        0.0
    }
}
