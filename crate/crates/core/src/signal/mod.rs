//! Waveform processing: phase tracking, phasors, RMS, derived channels,
//! and the error metrics used for identification.

mod cumulative;
pub mod metrics;
pub mod phasor;
pub mod pipeline;
pub mod pll;
pub mod rms;

pub use cumulative::CumulativeIntegral;
pub use metrics::{
    aligned, mape, normalization, nrmse, objective, rebound_end, resample, window_metrics, MapeResult,
    NormKind, WindowMetrics,
};
pub use phasor::{combine_positive, compute_pq, positive_sequence};
pub use pipeline::{derive_channels, SignalConfig};
pub use pll::{pll_frequency, pll_track, Pll, PllConfig};
pub use rms::rms_voltage;

use crate::error::{Error, Result};

/// Uniformly sampled three-phase voltages (line-to-neutral) and currents in
/// engineering units.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ThreePhaseFrames {
    pub t0: f64,
    pub dt: f64,
    pub van: Vec<f64>,
    pub vbn: Vec<f64>,
    pub vcn: Vec<f64>,
    pub ia: Vec<f64>,
    pub ib: Vec<f64>,
    pub ic: Vec<f64>,
}

impl ThreePhaseFrames {
    pub fn with_capacity(t0: f64, dt: f64, n: usize) -> Self {
        let v = || Vec::with_capacity(n);
        Self {
            t0,
            dt,
            van: v(),
            vbn: v(),
            vcn: v(),
            ia: v(),
            ib: v(),
            ic: v(),
        }
    }

    pub fn push(&mut self, v: [f64; 3], i: [f64; 3]) {
        self.van.push(v[0]);
        self.vbn.push(v[1]);
        self.vcn.push(v[2]);
        self.ia.push(i[0]);
        self.ib.push(i[1]);
        self.ic.push(i[2]);
    }

    pub fn len(&self) -> usize {
        self.van.len()
    }

    pub fn is_empty(&self) -> bool {
        self.van.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidInput(format!("sample step must be positive, got {}", self.dt)));
        }
        let n = self.van.len();
        for c in [&self.vbn, &self.vcn, &self.ia, &self.ib, &self.ic] {
            if c.len() != n {
                return Err(Error::LengthMismatch(n, c.len()));
            }
        }
        if n == 0 {
            return Err(Error::EmptyWindow("no samples in the analysis window".into()));
        }
        let bad = [&self.van, &self.vbn, &self.vcn, &self.ia, &self.ib, &self.ic]
            .iter()
            .any(|c| c.iter().any(|v| !v.is_finite()));
        if bad {
            return Err(Error::InvalidInput("non-finite waveform sample".into()));
        }
        Ok(())
    }

    /// Samples `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            t0: self.time(start),
            dt: self.dt,
            van: self.van[start..end].to_vec(),
            vbn: self.vbn[start..end].to_vec(),
            vcn: self.vcn[start..end].to_vec(),
            ia: self.ia[start..end].to_vec(),
            ib: self.ib[start..end].to_vec(),
            ic: self.ic[start..end].to_vec(),
        }
    }
}
