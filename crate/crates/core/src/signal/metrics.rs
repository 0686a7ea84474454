//! Error metrics between measured and simulated channels, plus resampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::TimeSeries;

/// `sqrt(mean((meas - sim)²)) / norm`.
pub fn nrmse(meas: &[f64], sim: &[f64], norm: f64) -> Result<f64> {
    if meas.len() != sim.len() {
        return Err(Error::LengthMismatch(meas.len(), sim.len()));
    }
    if meas.is_empty() {
        return Err(Error::EmptyWindow("no samples in the analysis window".into()));
    }
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidInput(format!("normalization must be positive, got {norm}")));
    }
    let ss: f64 = meas.iter().zip(sim).map(|(m, s)| (m - s) * (m - s)).sum();
    Ok((ss / meas.len() as f64).sqrt() / norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapeResult {
    /// Percent.
    pub value: f64,
    /// Samples skipped because the measurement was zero.
    pub excluded: usize,
}

/// `100 · mean(|meas - sim| / |meas|)` over the nonzero measured samples.
pub fn mape(meas: &[f64], sim: &[f64]) -> Result<MapeResult> {
    if meas.len() != sim.len() {
        return Err(Error::LengthMismatch(meas.len(), sim.len()));
    }
    let mut acc = 0.0;
    let mut n = 0usize;
    for (m, s) in meas.iter().zip(sim) {
        if *m == 0.0 {
            continue;
        }
        acc += ((m - s) / m).abs();
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyWindow("no samples in the analysis window".into()));
    }
    Ok(MapeResult {
        value: 100.0 * acc / n as f64,
        excluded: meas.len() - n,
    })
}

/// `Σ w_c · nRMSE_c` over the channels `P, Q, V, f`.
pub fn objective(meas: [&[f64]; 4], sim: [&[f64]; 4], weights: [f64; 4], norms: [f64; 4]) -> Result<f64> {
    let mut g = 0.0;
    for c in 0..4 {
        g += weights[c] * nrmse(meas[c], sim[c], norms[c])?;
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// Mean of the measured channel before the disturbance.
    #[default]
    PreStepMean,
    /// `max - min` of the measured channel.
    Range,
    /// `max |x|` of the measured channel.
    Max,
}

/// Normalization factor for one measured channel. `pre_step` is the part
/// of the record before the disturbance. A pre-step mean that is near zero
/// relative to the channel's magnitude falls back to `max |x|`.
pub fn normalization(meas: &[f64], pre_step: &[f64], kind: NormKind) -> Result<f64> {
    if meas.is_empty() {
        return Err(Error::EmptyWindow("no samples in the analysis window".into()));
    }
    let max_abs = meas.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let n = match kind {
        NormKind::PreStepMean => {
            if pre_step.is_empty() {
                return Err(Error::EmptyWindow("no samples in the analysis window".into()));
            }
            let mean = pre_step.iter().sum::<f64>() / pre_step.len() as f64;
            if mean.abs() <= 1e-3 * max_abs {
                max_abs
            } else {
                mean.abs()
            }
        }
        NormKind::Range => {
            let (lo, hi) = meas
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
            hi - lo
        }
        NormKind::Max => max_abs,
    };
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidInput(format!(
            "normalization factor {n} is not positive; the channel is identically zero or flat"
        )));
    }
    Ok(n)
}

/// First time after the post-step nadir at which `f` recovers to
/// `fraction · f_nominal`. `None` if there is no dip below that level or
/// no recovery.
pub fn rebound_end(f: &TimeSeries, channel: &str, t_step: f64, f_nominal: f64, fraction: f64) -> Result<Option<(f64, f64)>> {
    let y = f.require(channel)?;
    let level = fraction * f_nominal;
    let r = f.index_range(t_step, f.t_end());
    if r.is_empty() {
        return Err(Error::EmptyWindow("no samples in the analysis window".into()));
    }
    let (k_nadir, &v_nadir) = y[r.clone()]
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, v)| (k + r.start, v))
        .expect("non-empty range");
    if v_nadir >= level {
        return Ok(None);
    }
    let t_nadir = f.time(k_nadir);
    Ok(y[k_nadir..r.end]
        .iter()
        .position(|v| *v >= level)
        .map(|k| (t_nadir, f.time(k_nadir + k))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    pub nrmse: f64,
    pub mape: f64,
    pub samples: usize,
}

/// nRMSE and MAPE of one channel over `[t_step, t_rebound_end]`. Both series
/// must share a time grid.
pub fn window_metrics(
    meas: &TimeSeries,
    sim: &TimeSeries,
    channel: &str,
    window: (f64, f64),
    t_nadir_meas: Option<f64>,
    norm: f64,
) -> Result<WindowMetrics> {
    let (t_step, t_end) = window;
    if !(t_step <= t_end) {
        return Err(Error::InvalidInput(format!("window [{t_step}, {t_end}] is reversed")));
    }
    if let Some(tn) = t_nadir_meas {
        if tn < t_step || tn > t_end {
            return Err(Error::InvalidInput(format!(
                "nadir at {tn} s lies outside the window [{t_step}, {t_end}]"
            )));
        }
    }
    if t_step < meas.t0() - 0.5 * meas.dt() || t_end > meas.t_end() + 0.5 * meas.dt() {
        return Err(Error::Extrapolation(format!(
            "window [{t_step}, {t_end}] exceeds record [{}, {}]",
            meas.t0(),
            meas.t_end()
        )));
    }
    let (m, s) = aligned(meas, sim, channel, t_step, t_end)?;
    if m.is_empty() {
        return Err(Error::EmptyWindow("no samples in the analysis window".into()));
    }
    Ok(WindowMetrics {
        nrmse: nrmse(m, s, norm)?,
        mape: mape(m, s)?.value,
        samples: m.len(),
    })
}

/// Matching slices of `channel` from two series on the same grid.
pub fn aligned<'a>(
    meas: &'a TimeSeries,
    sim: &'a TimeSeries,
    channel: &str,
    t_start: f64,
    t_end: f64,
) -> Result<(&'a [f64], &'a [f64])> {
    let offset = (meas.t0() - sim.t0()) / meas.dt();
    if (meas.dt() - sim.dt()).abs() > 1e-9 * meas.dt() || (offset - offset.round()).abs() > 1e-6 {
        return Err(Error::InvalidInput(
            "measured and simulated series are on different grids; resample first".into(),
        ));
    }
    let rm = meas.index_range(t_start, t_end);
    let rs = sim.index_range(t_start, t_end);
    if rm.len() != rs.len() {
        return Err(Error::LengthMismatch(rm.len(), rs.len()));
    }
    Ok((&meas.require(channel)?[rm], &sim.require(channel)?[rs]))
}

/// Linear interpolation of every channel onto `t_start + k·target_dt` up to
/// `t_end`.
pub fn resample(series: &TimeSeries, target_dt: f64, t_start: f64, t_end: f64) -> Result<TimeSeries> {
    if !(target_dt > 0.0) || !(t_start <= t_end) {
        return Err(Error::InvalidInput(format!(
            "resample needs dt > 0 and an ordered span, got dt = {target_dt}, [{t_start}, {t_end}]"
        )));
    }
    let tol = 1e-9 * series.dt();
    if t_start < series.t0() - tol || t_end > series.t_end() + tol {
        return Err(Error::Extrapolation(format!(
            "target [{t_start}, {t_end}] exceeds source [{}, {}]",
            series.t0(),
            series.t_end()
        )));
    }
    let n = ((t_end - t_start) / target_dt + 1e-9).floor() as usize + 1;
    let last = series.len() - 1;
    let mut out = TimeSeries::new(t_start, target_dt)?;
    for (name, y) in series.channels() {
        let v: Vec<f64> = (0..n)
            .map(|k| {
                let mut pos = ((t_start + k as f64 * target_dt - series.t0()) / series.dt()).clamp(0.0, last as f64);
                if (pos - pos.round()).abs() < 1e-9 {
                    pos = pos.round();
                }
                let i = (pos.floor() as usize).min(last.saturating_sub(1));
                let w = pos - i as f64;
                if last == 0 || w == 0.0 {
                    y[i]
                } else {
                    y[i] + w * (y[i + 1] - y[i])
                }
            })
            .collect();
        out.insert(name, v)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn nrmse_examples() {
        assert_eq!(nrmse(&[1.0, 2.0], &[1.0, 2.0], 1.0).unwrap(), 0.0);
        assert_eq!(nrmse(&[1.0; 4], &[0.0; 4], 1.0).unwrap(), 1.0);
        assert_eq!(nrmse(&[2.0, 4.0], &[1.0, 3.0], 2.0).unwrap(), 0.5);
        assert!(matches!(nrmse(&[1.0], &[1.0, 2.0], 1.0), Err(Error::LengthMismatch(1, 2))));
        assert!(nrmse(&[1.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn mape_examples() {
        assert_eq!(mape(&[3.0, 4.0], &[3.0, 4.0]).unwrap().value, 0.0);
        let m = [2.0, -5.0, 7.0];
        let s: Vec<f64> = m.iter().map(|v| 1.1 * v).collect();
        assert!((mape(&m, &s).unwrap().value - 10.0).abs() < 1e-12);
        assert!((mape(&[60.0, 59.0], &[59.4, 59.0]).unwrap().value - 0.5).abs() < 1e-12);
        let r = mape(&[0.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((r.value, r.excluded), (0.0, 1));
    }

    #[test]
    fn objective_linearity() {
        let m = [1.0; 10];
        let s = [0.9; 10];
        let sl: &[f64] = &s;
        let ml: &[f64] = &m;
        let g = objective([ml; 4], [sl; 4], [1.0; 4], [1.0; 4]).unwrap();
        assert!((g - 0.4).abs() < 1e-12);
        assert_eq!(objective([ml; 4], [ml; 4], [1.0; 4], [1.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn normalization_fallback() {
        let q = [0.0, 0.0, 100.0, 160.0];
        assert_eq!(normalization(&q, &q[..2], NormKind::PreStepMean).unwrap(), 160.0);
        let p = [80.0, 80.0, 240.0];
        assert_eq!(normalization(&p, &p[..2], NormKind::PreStepMean).unwrap(), 80.0);
        assert_eq!(normalization(&p, &p[..2], NormKind::Range).unwrap(), 160.0);
        assert!(normalization(&[0.0; 3], &[0.0], NormKind::Max).is_err());
    }

    fn series(t0: f64, dt: f64, y: Vec<f64>) -> TimeSeries {
        TimeSeries::new(t0, dt).unwrap().with_channel("f", y).unwrap()
    }

    #[test]
    fn window_locality_and_degenerate_window() {
        let m: Vec<f64> = (0..100).map(|k| 60.0 - (k as f64 * 0.1).sin()).collect();
        let mut s = m.clone();
        for v in s.iter_mut().take(20) {
            *v += 1.0;
        }
        let ms = series(0.0, 0.01, m.clone());
        let ss = series(0.0, 0.01, s.clone());
        let w = window_metrics(&ms, &ss, "f", (0.3, 0.9), None, 60.0).unwrap();
        assert_eq!(w.nrmse, 0.0);
        assert_eq!(w.mape, 0.0);
        let full = window_metrics(&ms, &ss, "f", (0.0, 0.99), None, 60.0).unwrap();
        assert!((full.nrmse - nrmse(&m, &s, 60.0).unwrap()).abs() < 1e-15);
        assert!((full.mape - mape(&m, &s).unwrap().value).abs() < 1e-12);
    }

    #[test]
    fn window_hand_computed() {
        // deviation of 0.6 on three of the five samples in [0.1, 0.5]
        let m = vec![60.0; 10];
        let mut s = m.clone();
        for k in [1, 2, 3] {
            s[k] = 59.4;
        }
        let w = window_metrics(&series(0.0, 0.1, m), &series(0.0, 0.1, s), "f", (0.1, 0.5), None, 60.0)
            .unwrap();
        assert_eq!(w.samples, 5);
        assert!((w.nrmse - (3.0 * 0.36f64 / 5.0).sqrt() / 60.0).abs() < 1e-14);
        assert!((w.mape - 100.0 * 3.0 * 0.01 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn rebound_detection() {
        let y: Vec<f64> = (0..600)
            .map(|k| {
                let t = k as f64 * 0.01;
                if t < 1.0 {
                    60.0
                } else {
                    60.0 - 2.0 * (t - 1.0) * (-(t - 1.0) * 3.0).exp() * 3.0
                }
            })
            .collect();
        let f = series(0.0, 0.01, y.clone());
        let (tn, te) = rebound_end(&f, "f", 1.0, 60.0, 0.999).unwrap().unwrap();
        assert!((tn - (1.0 + 1.0 / 3.0)).abs() < 0.011);
        assert!(te > tn);
        let k = ((te - 0.0) / 0.01).round() as usize;
        assert!(y[k] >= 59.94 && y[k - 1] < 59.94);
    }

    #[test]
    fn resample_identity_and_linear() {
        let y: Vec<f64> = (0..50).map(|k| 3.0 * k as f64 * 0.02 - 1.0).collect();
        let s = series(0.0, 0.02, y.clone());
        let same = resample(&s, 0.02, 0.0, s.t_end()).unwrap();
        assert_eq!(same.require("f").unwrap(), &y[..]);
        let r = resample(&s, 0.0037, 0.013, 0.9).unwrap();
        for (k, v) in r.require("f").unwrap().iter().enumerate() {
            let t = r.time(k);
            assert!((v - (3.0 * t - 1.0)).abs() < 1e-12);
        }
        assert!(matches!(resample(&s, 0.01, 0.0, 2.0), Err(Error::Extrapolation(_))));
    }

    #[test]
    fn resample_sine_error_bound() {
        let src_dt = 1.0 / 50_000.0;
        let w = 2.0 * PI * 60.0;
        let y: Vec<f64> = (0..5000).map(|k| (w * k as f64 * src_dt).sin()).collect();
        let s = series(0.0, src_dt, y);
        let r = resample(&s, 1e-4, 0.0, 0.09).unwrap();
        let bound = (w * src_dt).powi(2) / 8.0;
        for (k, v) in r.require("f").unwrap().iter().enumerate() {
            let err = (v - (w * r.time(k)).sin()).abs();
            assert!(err < bound, "{err} vs {bound}");
        }
    }

    proptest! {
        #[test]
        fn nrmse_properties(
            m in proptest::collection::vec(-10.0f64..10.0, 1..50),
            d in proptest::collection::vec(-1.0f64..1.0, 50),
            k in 0.1f64..10.0,
            norm in 0.1f64..10.0,
        ) {
            let s: Vec<f64> = m.iter().zip(&d).map(|(a, b)| a + b).collect();
            let s2: Vec<f64> = m.iter().zip(&d).map(|(a, b)| a + k * b).collect();
            let e = nrmse(&m, &s, norm).unwrap();
            prop_assert!(e >= 0.0);
            prop_assert_eq!(nrmse(&m, &m, norm).unwrap(), 0.0);
            let e2 = nrmse(&m, &s2, norm).unwrap();
            prop_assert!((e2 - k * e).abs() <= 1e-12 * (1.0 + e2));
            if d[..m.len()].iter().any(|v| *v != 0.0) {
                prop_assert!(e > 0.0);
            }
        }
    }
}
