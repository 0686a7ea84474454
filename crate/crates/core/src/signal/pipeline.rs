//! Three-phase waveforms to the `P`, `Q`, `V`, `f` channels.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cumulative::CumulativeIntegral;
use super::phasor::{combine_positive, compute_pq};
use super::pll::{pll_track, PllConfig};
use super::ThreePhaseFrames;
use crate::error::{Error, Result};
use crate::units::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalConfig {
    pub pll: PllConfig,
    /// Output sample step, s.
    pub output_dt: f64,
    /// Initial span discarded while the PLL and windows settle, s.
    pub warmup: f64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self {
            pll: PllConfig::default(),
            output_dt: 1e-3,
            warmup: 0.1,
        }
    }
}

impl SignalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.output_dt > 0.0 && self.output_dt.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "output_dt must be positive, got {}",
                self.output_dt
            )));
        }
        if !(self.warmup >= 0.0) {
            return Err(Error::InvalidInput("warmup must be non-negative".into()));
        }
        Ok(())
    }
}

/// Fundamental-frequency quantities over a sliding one-period window.
struct Windowed {
    re: [CumulativeIntegral; 6],
    im: [CumulativeIntegral; 6],
    sq: [CumulativeIntegral; 3],
    freq: CumulativeIntegral,
    f: Vec<f64>,
    dt: f64,
}

impl Windowed {
    fn new(frames: &ThreePhaseFrames, theta: &[f64], f: Vec<f64>) -> Self {
        let chans = [
            &frames.van, &frames.vbn, &frames.vcn, &frames.ia, &frames.ib, &frames.ic,
        ];
        let dt = frames.dt;
        let (c, s): (Vec<f64>, Vec<f64>) = theta.iter().map(|t| (t.cos(), t.sin())).unzip();
        let re = chans.map(|x| {
            let g: Vec<f64> = x.iter().zip(&c).map(|(v, c)| v * c).collect();
            CumulativeIntegral::new(&g, dt)
        });
        let im = chans.map(|x| {
            let g: Vec<f64> = x.iter().zip(&s).map(|(v, s)| -v * s).collect();
            CumulativeIntegral::new(&g, dt)
        });
        let sq = [&frames.van, &frames.vbn, &frames.vcn].map(|x| {
            let g: Vec<f64> = x.iter().map(|v| v * v).collect();
            CumulativeIntegral::new(&g, dt)
        });
        Self {
            re,
            im,
            sq,
            freq: CumulativeIntegral::new(&f, dt),
            f,
            dt,
        }
    }

    fn f_at(&self, pos: f64) -> f64 {
        let k = pos.floor() as usize;
        if k + 1 >= self.f.len() {
            return self.f[self.f.len() - 1];
        }
        let w = pos - k as f64;
        self.f[k] * (1.0 - w) + self.f[k + 1] * w
    }

    /// `(P, Q, V_rms, f)` for the window ending at fractional sample `pos`,
    /// or `None` while the window still reaches before the first sample.
    fn eval(&self, pos: f64) -> Option<[f64; 4]> {
        let period = 1.0 / self.f_at(pos);
        let start = pos - period / self.dt;
        if start < 0.0 {
            return None;
        }
        let scale = 2.0 / period;
        let ph = |i: usize| {
            Complex64::new(
                scale * (self.re[i].at(pos) - self.re[i].at(start)),
                scale * (self.im[i].at(pos) - self.im[i].at(start)),
            )
        };
        let v1 = combine_positive(ph(0), ph(1), ph(2));
        let i1 = combine_positive(ph(3), ph(4), ph(5));
        let (p, q) = compute_pq(v1, i1);
        let v = self
            .sq
            .iter()
            .map(|c| ((c.at(pos) - c.at(start)) / period).max(0.0).sqrt())
            .sum::<f64>()
            / 3.0;
        let f = (self.freq.at(pos) - self.freq.at(start)) / period;
        Some([p, q, v, f])
    }
}

/// Derives `P` (kW), `Q` (kVAR), `V` (V rms, line-to-neutral), and `f` (Hz)
/// on a uniform grid of `cfg.output_dt`, starting after `cfg.warmup`.
pub fn derive_channels(frames: &ThreePhaseFrames, f_nominal: f64, cfg: &SignalConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    let (theta, f) = pll_track(frames, f_nominal, &cfg.pll)?;
    let w = Windowed::new(frames, &theta, f);
    let t_last = frames.time(frames.len() - 1);
    let first = ((frames.t0 + cfg.warmup) / cfg.output_dt - 1e-9).ceil() * cfg.output_dt;
    if first > t_last {
        return Err(Error::WindowTooShort(format!(
            "record ends at {t_last} s, before the {} s warm-up",
            cfg.warmup
        )));
    }
    let n_out = ((t_last - first) / cfg.output_dt + 1e-9).floor() as usize + 1;
    let mut cols: [Vec<f64>; 4] = Default::default();
    let mut t0 = None;
    for k in 0..n_out {
        let t = first + k as f64 * cfg.output_dt;
        let pos = ((t - frames.t0) / frames.dt).min((frames.len() - 1) as f64);
        let Some(vals) = w.eval(pos) else {
            continue;
        };
        t0.get_or_insert(t);
        for (c, v) in cols.iter_mut().zip(vals) {
            c.push(v);
        }
    }
    let t0 = t0.ok_or_else(|| Error::WindowTooShort("no complete fundamental window".into()))?;
    let [p, q, v, fr] = cols;
    TimeSeries::new(t0, cfg.output_dt)?
        .with_channel("P", p.into_iter().map(|x| x / 1e3).collect())?
        .with_channel("Q", q.into_iter().map(|x| x / 1e3).collect())?
        .with_channel("V", v)?
        .with_channel("f", fr)
}
