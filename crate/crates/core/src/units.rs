//! Per-unit conventions, bounded parameter vectors, and uniformly sampled
//! time-series containers shared by every other module.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Base quantities for the per-unit system.
///
/// `v_base` is the line-to-neutral RMS voltage. `engine_base` is the power
/// base on which the engine gain `K_turb` is expressed (1 MW by default).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerUnitBase {
    /// Apparent power base, VA.
    pub s_base: f64,
    /// Line-to-neutral RMS voltage base, V.
    pub v_base: f64,
    /// Frequency base, Hz.
    pub f_base: f64,
    /// Maximum fuel flow rate, L/h.
    pub fuel_base: f64,
    /// Engine power base for the engine gain, W.
    pub engine_base: f64,
}

impl Default for PerUnitBase {
    fn default() -> Self {
        Self {
            s_base: 400e3,
            v_base: 480.0 / 3f64.sqrt(),
            f_base: 60.0,
            fuel_base: 90.0,
            engine_base: 1e6,
        }
    }
}

impl PerUnitBase {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("s_base", self.s_base),
            ("v_base", self.v_base),
            ("f_base", self.f_base),
            ("fuel_base", self.fuel_base),
            ("engine_base", self.engine_base),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "base quantity {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// RMS line current base, A.
    pub fn i_base(&self) -> f64 {
        self.s_base / (3.0 * self.v_base)
    }

    /// Electrical angular speed base, rad/s.
    pub fn omega_base(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.f_base
    }

    /// Phase impedance base, ohm.
    pub fn z_base(&self) -> f64 {
        self.v_base / self.i_base()
    }

    /// Ratio of the engine power base to the machine power base.
    pub fn engine_scale(&self) -> f64 {
        self.engine_base / self.s_base
    }
}

/// Physical quantity carried by a channel, used to select the base.
///
/// Power channels are in kW / kVAR / kVA, matching the load-bank settings
/// and the CSV formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    ActivePower,
    ReactivePower,
    ApparentPower,
    Voltage,
    Current,
    Frequency,
    FuelFlow,
    EnginePower,
}

impl ChannelKind {
    fn base_value(self, base: &PerUnitBase) -> f64 {
        match self {
            ChannelKind::ActivePower | ChannelKind::ReactivePower | ChannelKind::ApparentPower => {
                base.s_base / 1e3
            }
            ChannelKind::Voltage => base.v_base,
            ChannelKind::Current => base.i_base(),
            ChannelKind::Frequency => base.f_base,
            ChannelKind::FuelFlow => base.fuel_base,
            ChannelKind::EnginePower => base.engine_base / 1e3,
        }
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "p" | "active_power" => ChannelKind::ActivePower,
            "q" | "reactive_power" => ChannelKind::ReactivePower,
            "s" | "apparent_power" => ChannelKind::ApparentPower,
            "v" | "voltage" => ChannelKind::Voltage,
            "i" | "current" => ChannelKind::Current,
            "f" | "frequency" => ChannelKind::Frequency,
            "fuel" | "fuel_flow" => ChannelKind::FuelFlow,
            "engine_power" => ChannelKind::EnginePower,
            _ => return Err(Error::UnknownChannel(s.to_string())),
        })
    }
}

/// Converts an engineering-unit value into per-unit on the matching base.
pub fn to_per_unit(value: f64, base: &PerUnitBase, kind: ChannelKind) -> f64 {
    value / kind.base_value(base)
}

/// Inverse of [`to_per_unit`].
pub fn from_per_unit(value: f64, base: &PerUnitBase, kind: ChannelKind) -> f64 {
    value * kind.base_value(base)
}

/// One named, bounded parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEntry {
    pub name: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ParameterEntry {
    pub fn new(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lower,
            upper,
        }
    }

    fn check_bounds(&self) -> Result<()> {
        if self.lower > self.upper || self.lower.is_nan() || self.upper.is_nan() {
            return Err(Error::MalformedBounds {
                name: self.name.clone(),
                lower: self.lower,
                upper: self.upper,
            });
        }
        Ok(())
    }
}

/// Ordered set of named parameters with box bounds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    entries: Vec<ParameterEntry>,
}

impl ParameterVector {
    /// Builds a vector, rejecting duplicate names and malformed bounds.
    pub fn new(entries: Vec<ParameterEntry>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if !seen.insert(e.name.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate parameter name `{}`",
                    e.name
                )));
            }
            e.check_bounds()?;
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ParameterEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.entries.iter().map(|e| (e.lower, e.upper)).collect()
    }

    pub fn get(&self, name: &str) -> Option<&ParameterEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Replaces all values in order. Bounds are not enforced here.
    pub fn with_values(&self, values: &[f64]) -> Result<Self> {
        if values.len() != self.entries.len() {
            return Err(Error::LengthMismatch(values.len(), self.entries.len()));
        }
        let mut out = self.clone();
        for (e, &v) in out.entries.iter_mut().zip(values) {
            e.value = v;
        }
        Ok(out)
    }

    /// Fails on the first entry whose value lies outside its bounds.
    pub fn check_in_bounds(&self) -> Result<()> {
        for e in &self.entries {
            e.check_bounds()?;
            if !(e.lower..=e.upper).contains(&e.value) {
                return Err(Error::OutOfBounds {
                    name: e.name.clone(),
                    value: e.value,
                    lower: e.lower,
                    upper: e.upper,
                });
            }
        }
        Ok(())
    }
}

/// Projects every value onto its box `[lower, upper]`.
pub fn clamp_to_bounds(v: &ParameterVector) -> Result<ParameterVector> {
    let mut out = v.clone();
    for e in &mut out.entries {
        e.check_bounds()?;
        e.value = e.value.clamp(e.lower, e.upper);
    }
    Ok(out)
}

/// Uniformly sampled set of equal-length channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    t0: f64,
    dt: f64,
    channels: IndexMap<String, Vec<f64>>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) || !t0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "time series needs finite t0 and dt > 0, got t0 = {t0}, dt = {dt}"
            )));
        }
        Ok(Self {
            t0,
            dt,
            channels: IndexMap::new(),
        })
    }

    /// Adds (or replaces) a channel. All channels must share one length.
    pub fn insert(&mut self, name: impl Into<String>, data: Vec<f64>) -> Result<()> {
        let name = name.into();
        if let Some((existing, first)) = self.channels.iter().find(|(k, _)| **k != name) {
            if first.len() != data.len() {
                return Err(Error::InvalidInput(format!(
                    "channel `{name}` has {} samples but `{existing}` has {}",
                    data.len(),
                    first.len()
                )));
            }
        }
        self.channels.insert(name, data);
        Ok(())
    }

    pub fn with_channel(mut self, name: impl Into<String>, data: Vec<f64>) -> Result<Self> {
        self.insert(name, data)?;
        Ok(self)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.channels.values().next().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// Time of the last sample (equal to `t0` for an empty series).
    pub fn t_end(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.get(name).map(Vec::as_slice)
    }

    pub fn require(&self, name: &str) -> Result<&[f64]> {
        self.channel(name)
            .ok_or_else(|| Error::InvalidInput(format!("missing channel `{name}`")))
    }

    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.keys().map(String::as_str)
    }

    pub fn channels(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.channels.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Index range of samples with time in `[t_start, t_end]`.
    pub fn index_range(&self, t_start: f64, t_end: f64) -> std::ops::Range<usize> {
        let tol = 1e-9 * self.dt;
        let lo = ((t_start - self.t0 - tol) / self.dt).ceil().max(0.0) as usize;
        let hi = (((t_end - self.t0 + tol) / self.dt).floor() + 1.0).max(0.0) as usize;
        lo.min(self.len())..hi.min(self.len()).max(lo.min(self.len()))
    }
}

impl fmt::Display for TimeSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TimeSeries[{} samples, t0 = {}, dt = {}, channels: {}]",
            self.len(),
            self.t0,
            self.dt,
            self.channels.keys().cloned().collect::<Vec<_>>().join(", ")
        )
    }
}
