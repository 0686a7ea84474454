//! Synchronous-reference-frame phase-locked loop.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::ThreePhaseFrames;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PllConfig {
    /// Loop natural frequency, Hz.
    pub bandwidth_hz: f64,
    pub damping: f64,
}

impl Default for PllConfig {
    fn default() -> Self {
        Self {
            bandwidth_hz: 20.0,
            damping: 0.707,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PllState {
    pub theta: f64,
    pub omega_est: f64,
    pub integrator: f64,
}

/// Streaming PLL: amplitude-invariant Clarke transform, normalized q-axis
/// error, PI loop filter, forward-Euler phase integration.
#[derive(Debug, Clone)]
pub struct Pll {
    state: Option<PllState>,
    omega_nom: f64,
    kp: f64,
    ki: f64,
    dt: f64,
}

impl Pll {
    pub fn new(f_nominal: f64, dt: f64, cfg: &PllConfig) -> Result<Self> {
        if !(f_nominal > 0.0 && dt > 0.0 && cfg.bandwidth_hz > 0.0 && cfg.damping > 0.0) {
            return Err(Error::InvalidInput(
                "PLL needs positive nominal frequency, step, bandwidth, and damping".into(),
            ));
        }
        let wn = 2.0 * PI * cfg.bandwidth_hz;
        Ok(Self {
            state: None,
            omega_nom: 2.0 * PI * f_nominal,
            kp: 2.0 * cfg.damping * wn,
            ki: wn * wn,
            dt,
        })
    }

    pub fn state(&self) -> Option<&PllState> {
        self.state.as_ref()
    }

    /// Processes one sample and returns `(theta, omega_est)` aligned with it.
    pub fn update(&mut self, va: f64, vb: f64, vc: f64) -> (f64, f64) {
        let alpha = (2.0 * va - vb - vc) / 3.0;
        let beta = (vb - vc) / 3f64.sqrt();
        let mag = alpha.hypot(beta);
        let st = self.state.get_or_insert_with(|| PllState {
            theta: beta.atan2(alpha),
            omega_est: 0.0,
            integrator: 0.0,
        });
        let e = if mag > 0.0 {
            (-alpha * st.theta.sin() + beta * st.theta.cos()) / mag
        } else {
            0.0
        };
        st.omega_est = self.omega_nom + st.integrator + self.kp * e;
        st.integrator += self.ki * e * self.dt;
        let out = (st.theta, st.omega_est);
        st.theta = (st.theta + st.omega_est * self.dt).rem_euclid(2.0 * PI);
        out
    }

    /// True while the estimate lies within `[0.5, 1.5]` of nominal.
    pub fn locked(&self, omega: f64) -> bool {
        omega >= 0.5 * self.omega_nom && omega <= 1.5 * self.omega_nom
    }
}

/// Runs the PLL over a frame stream; returns per-sample phase (rad) and
/// frequency (Hz). Loss of lock is an error carrying the sample time.
pub fn pll_track(
    frames: &ThreePhaseFrames,
    f_nominal: f64,
    cfg: &PllConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    frames.validate()?;
    let mut pll = Pll::new(f_nominal, frames.dt, cfg)?;
    let n = frames.len();
    let mut theta = Vec::with_capacity(n);
    let mut freq = Vec::with_capacity(n);
    for k in 0..n {
        let (th, w) = pll.update(frames.van[k], frames.vbn[k], frames.vcn[k]);
        if !pll.locked(w) {
            return Err(Error::LossOfLock(frames.t0 + k as f64 * frames.dt));
        }
        theta.push(th);
        freq.push(w / (2.0 * PI));
    }
    Ok((theta, freq))
}

/// Frequency estimate in Hz for every sample.
pub fn pll_frequency(frames: &ThreePhaseFrames, f_nominal: f64, cfg: &PllConfig) -> Result<Vec<f64>> {
    Ok(pll_track(frames, f_nominal, cfg)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Balanced set following the phase `phase(t)`.
    fn frames_from_phase(dt: f64, n: usize, phase: impl Fn(f64) -> f64) -> ThreePhaseFrames {
        let mut f = ThreePhaseFrames::with_capacity(0.0, dt, n);
        for k in 0..n {
            let th = phase(k as f64 * dt);
            let v = [th.cos(), (th - 2.0 * PI / 3.0).cos(), (th + 2.0 * PI / 3.0).cos()];
            f.push([v[0] * 390.0, v[1] * 390.0, v[2] * 390.0], [0.0; 3]);
        }
        f
    }

    #[test]
    fn locks_on_nominal() {
        let dt = 1e-4;
        let f = frames_from_phase(dt, 10_000, |t| 2.0 * PI * 60.0 * t + 1.0);
        let est = pll_frequency(&f, 60.0, &PllConfig::default()).unwrap();
        for v in &est[2000..] {
            assert!((v - 60.0).abs() < 1e-3, "{v}");
        }
    }

    #[test]
    fn locks_off_nominal() {
        let dt = 1e-4;
        let f = frames_from_phase(dt, 10_000, |t| 2.0 * PI * 59.5 * t);
        let est = pll_frequency(&f, 60.0, &PllConfig::default()).unwrap();
        for v in &est[3000..] {
            assert!((v - 59.5).abs() < 1e-3, "{v}");
        }
    }

    #[test]
    fn tracks_frequency_ramp() {
        let dt = 1e-4;
        // f(t) = 60 - t over one second once the loop has settled
        let t0 = 0.3;
        let phase = move |t: f64| {
            if t < t0 {
                2.0 * PI * 60.0 * t
            } else {
                let s = (t - t0).min(1.0);
                let extra = if t - t0 > 1.0 { (t - t0 - 1.0) * 59.0 } else { 0.0 };
                2.0 * PI * (60.0 * t0 + 60.0 * s - 0.5 * s * s + extra)
            }
        };
        let f = frames_from_phase(dt, 16_000, phase);
        let est = pll_frequency(&f, 60.0, &PllConfig::default()).unwrap();
        for (k, v) in est.iter().enumerate().skip(2000) {
            let t = k as f64 * dt;
            let truth = 60.0 - (t - t0).clamp(0.0, 1.0);
            assert!((v - truth).abs() < 0.05, "t = {t}: {v} vs {truth}");
        }
    }

    #[test]
    fn loss_of_lock_reported() {
        let dt = 1e-4;
        let f = frames_from_phase(dt, 2000, |t| 2.0 * PI * 200.0 * t);
        assert!(matches!(
            pll_frequency(&f, 60.0, &PllConfig::default()),
            Err(Error::LossOfLock(_))
        ));
    }
}
