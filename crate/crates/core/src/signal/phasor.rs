//! Fundamental phasors, symmetrical components, and three-phase power.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::cumulative::CumulativeIntegral;
use super::ThreePhaseFrames;
use crate::error::{Error, Result};

/// The symmetrical-component operator `a = exp(j 2π/3)`.
pub fn a_operator() -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI / 3.0)
}

/// `(X_a + a X_b + a² X_c) / 3`.
pub fn combine_positive(xa: Complex64, xb: Complex64, xc: Complex64) -> Complex64 {
    let a = a_operator();
    (xa + a * xb + a * a * xc) / 3.0
}

/// Peak-amplitude phasor of the component of `x` at `f_hz`, taken over the
/// most recent whole number of cycles in the frame.
fn fundamental(t0: f64, dt: f64, x: &[f64], f_hz: f64, cycles: f64) -> Complex64 {
    let w = 2.0 * PI * f_hz;
    let n = x.len();
    let re: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(k, v)| v * (w * (t0 + k as f64 * dt)).cos())
        .collect();
    let im: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(k, v)| -v * (w * (t0 + k as f64 * dt)).sin())
        .collect();
    let span = cycles / f_hz;
    let end = (n - 1) as f64;
    let start = end - span / dt;
    let cr = CumulativeIntegral::new(&re, dt);
    let ci = CumulativeIntegral::new(&im, dt);
    let scale = 2.0 / span;
    Complex64::new(
        scale * (cr.at(end) - cr.at(start)),
        scale * (ci.at(end) - ci.at(start)),
    )
}

/// Positive-sequence voltage and current phasors (peak amplitude) over the
/// frame window at fundamental frequency `f_hz`.
pub fn positive_sequence(frames: &ThreePhaseFrames, f_hz: f64) -> Result<(Complex64, Complex64)> {
    frames.validate()?;
    if !(f_hz > 0.0) {
        return Err(Error::InvalidInput(format!("frequency must be positive, got {f_hz}")));
    }
    let span = (frames.len().saturating_sub(1)) as f64 * frames.dt;
    let cycles = (span * f_hz * (1.0 + 1e-12)).floor();
    if cycles < 1.0 {
        return Err(Error::WindowTooShort(format!(
            "window of {span:.6} s is shorter than one {f_hz} Hz cycle"
        )));
    }
    let ph = |x: &[f64]| fundamental(frames.t0, frames.dt, x, f_hz, cycles);
    let v1 = combine_positive(ph(&frames.van), ph(&frames.vbn), ph(&frames.vcn));
    let i1 = combine_positive(ph(&frames.ia), ph(&frames.ib), ph(&frames.ic));
    Ok((v1, i1))
}

/// Three-phase active and reactive power from peak-amplitude
/// positive-sequence phasors.
pub fn compute_pq(v1: Complex64, i1: Complex64) -> (f64, f64) {
    let phi = v1.arg() - i1.arg();
    let s = 3.0 * (v1.norm() / 2f64.sqrt()) * (i1.norm() / 2f64.sqrt());
    (s * phi.cos(), s * phi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(amp: f64, phase: f64, f: f64, seq: f64, dt: f64, n: usize) -> [Vec<f64>; 3] {
        let w = 2.0 * PI * f;
        let mk = |shift: f64| -> Vec<f64> {
            (0..n)
                .map(|k| amp * (w * k as f64 * dt + phase - seq * shift).cos())
                .collect()
        };
        [mk(0.0), mk(2.0 * PI / 3.0), mk(-2.0 * PI / 3.0)]
    }

    fn frames(v: [Vec<f64>; 3], i: [Vec<f64>; 3], dt: f64) -> ThreePhaseFrames {
        let [van, vbn, vcn] = v;
        let [ia, ib, ic] = i;
        ThreePhaseFrames {
            t0: 0.0,
            dt,
            van,
            vbn,
            vcn,
            ia,
            ib,
            ic,
        }
    }

    #[test]
    fn balanced_set_gives_phase_a_phasor() {
        let dt = 1e-4;
        let n = 400;
        let f = frames(
            balanced(391.9, 0.7, 60.0, 1.0, dt, n),
            balanced(141.4, 0.2, 60.0, 1.0, dt, n),
            dt,
        );
        let (v1, i1) = positive_sequence(&f, 60.0).unwrap();
        assert!((v1.norm() - 391.9).abs() < 1e-3 * 391.9);
        assert!((v1.arg() - 0.7).abs() < 1e-3);
        assert!((i1.arg() - 0.2).abs() < 1e-3);
    }

    #[test]
    fn negative_sequence_rejected() {
        let dt = 1e-4;
        let n = 400;
        let f = frames(
            balanced(100.0, 0.3, 60.0, -1.0, dt, n),
            balanced(1.0, 0.0, 60.0, -1.0, dt, n),
            dt,
        );
        let (v1, _) = positive_sequence(&f, 60.0).unwrap();
        assert!(v1.norm() < 1e-3 * 100.0, "{}", v1.norm());
    }

    #[test]
    fn small_negative_sequence_is_ignored() {
        let dt = 5e-5;
        let n = 1000;
        let pos = balanced(100.0, 0.3, 60.0, 1.0, dt, n);
        let neg = balanced(5.0, 1.1, 60.0, -1.0, dt, n);
        let mix: Vec<Vec<f64>> = (0..3)
            .map(|p| pos[p].iter().zip(&neg[p]).map(|(a, b)| a + b).collect())
            .collect();
        let f = frames(
            [mix[0].clone(), mix[1].clone(), mix[2].clone()],
            balanced(1.0, 0.0, 60.0, 1.0, dt, n),
            dt,
        );
        let (v1, _) = positive_sequence(&f, 60.0).unwrap();
        assert!((v1.norm() - 100.0).abs() < 1e-3 * 100.0);
    }

    #[test]
    fn short_window_rejected() {
        let dt = 1e-4;
        let f = frames(
            balanced(1.0, 0.0, 60.0, 1.0, dt, 100),
            balanced(1.0, 0.0, 60.0, 1.0, dt, 100),
            dt,
        );
        assert!(matches!(positive_sequence(&f, 60.0), Err(Error::WindowTooShort(_))));
    }

    #[test]
    fn unity_power_factor_example() {
        let v = Complex64::new(2f64.sqrt() * 277.0, 0.0);
        let i = Complex64::new(2f64.sqrt() * 100.0, 0.0);
        let (p, q) = compute_pq(v, i);
        assert!((p - 83_100.0).abs() < 1e-9);
        assert!(q.abs() < 1e-9);
    }

    #[test]
    fn quadrature_example() {
        let v = Complex64::from_polar(2.0, PI / 2.0);
        let i = Complex64::from_polar(4.0, 0.0);
        let (p, q) = compute_pq(v, i);
        assert!(p.abs() < 1e-12);
        assert!((q - 3.0 * (2.0 / 2f64.sqrt()) * (4.0 / 2f64.sqrt())).abs() < 1e-12);
    }
}
