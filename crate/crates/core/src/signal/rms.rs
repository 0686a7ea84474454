//! Sliding-window RMS voltage.

use super::cumulative::CumulativeIntegral;
use super::ThreePhaseFrames;
use crate::error::{Error, Result};

/// Per-sample RMS of the three phase voltages, averaged over phases, using
/// a window of one estimated period `1/f_est[k]` ending at sample `k`.
/// Samples whose window would reach before the stream start are `None`.
pub fn rms_voltage(frames: &ThreePhaseFrames, f_est: &[f64]) -> Result<Vec<Option<f64>>> {
    frames.validate()?;
    if f_est.len() != frames.len() {
        return Err(Error::LengthMismatch(frames.len(), f_est.len()));
    }
    let sq = |x: &[f64]| -> CumulativeIntegral {
        let g: Vec<f64> = x.iter().map(|v| v * v).collect();
        CumulativeIntegral::new(&g, frames.dt)
    };
    let ints = [sq(&frames.van), sq(&frames.vbn), sq(&frames.vcn)];
    let out = f_est
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            if !(f > 0.0) {
                return None;
            }
            let period = 1.0 / f;
            let start = k as f64 - period / frames.dt;
            if start < 0.0 {
                return None;
            }
            let mean: f64 = ints
                .iter()
                .map(|c| ((c.at(k as f64) - c.at(start)) / period).max(0.0).sqrt())
                .sum::<f64>()
                / 3.0;
            Some(mean)
        })
        .collect();
    Ok(out)
}
