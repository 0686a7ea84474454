//! Full model parameter set, dotted-path access to individual entries, and
//! the default identification bounds.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::excitation::{Dc4bParams, VhzParams};
use crate::governor::{
    DegovParams, Ggov1Params, Ggov1dParams, GovernorKind, GovernorParams, SimpleGovParams,
};
use crate::machine::MachineParams;
use crate::units::{ParameterEntry, ParameterVector, PerUnitBase};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GovernorSet {
    pub simple: SimpleGovParams,
    pub degov: DegovParams,
    pub ggov1: Ggov1Params,
    pub ggov1d: Ggov1dParams,
}

/// Everything needed to build the coupled model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub base: PerUnitBase,
    pub machine: MachineParams,
    pub exciter: Dc4bParams,
    pub vhz: VhzParams,
    pub gov: GovernorSet,
}

impl ModelParams {
    pub fn governor(&self, kind: GovernorKind) -> GovernorParams {
        match kind {
            GovernorKind::Simple => GovernorParams::Simple(self.gov.simple),
            GovernorKind::Degov => GovernorParams::Degov(self.gov.degov),
            GovernorKind::Ggov1 => GovernorParams::Ggov1(self.gov.ggov1),
            GovernorKind::Ggov1d => GovernorParams::Ggov1d(self.gov.ggov1d),
        }
    }

    fn to_value(self) -> Value {
        serde_json::to_value(self).expect("parameter structs serialize")
    }

    /// Value at a dotted path such as `gov.ggov1d.k` or `machine.h`.
    pub fn get(&self, name: &str) -> Result<f64> {
        let v = self.to_value();
        let mut cur = &v;
        for part in name.split('.') {
            cur = cur
                .get(part)
                .ok_or_else(|| Error::UnknownParameter(name.to_string()))?;
        }
        cur.as_f64()
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    /// Sets each `(path, value)` pair.
    pub fn set_many<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Result<()> {
        let mut v = self.to_value();
        for (name, value) in pairs {
            let mut cur = &mut v;
            for part in name.split('.') {
                cur = cur
                    .get_mut(part)
                    .ok_or_else(|| Error::UnknownParameter(name.to_string()))?;
            }
            if !cur.is_number() {
                return Err(Error::UnknownParameter(name.to_string()));
            }
            *cur = serde_json::Number::from_f64(value)
                .map(Value::Number)
                .ok_or_else(|| Error::InvalidInput(format!("{name} = {value} is not finite")))?;
        }
        *self = serde_json::from_value(v).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(())
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        self.set_many([(name, value)])
    }

    /// Applies a parameter vector by name.
    pub fn with_parameters(&self, v: &ParameterVector) -> Result<Self> {
        let mut out = *self;
        out.set_many(v.entries().iter().map(|e| (e.name.as_str(), e.value)))?;
        Ok(out)
    }
}

/// Default box bounds for identifiable parameters.
pub fn default_bounds(name: &str) -> Option<(f64, f64)> {
    let b = match name {
        "machine.h" => (0.3, 0.8),

        "gov.simple.k_p" => (1.0, 40.0),
        "gov.simple.k_i" => (4.0, 40.0),
        "gov.simple.t_sm" => (0.01, 0.1),
        "gov.simple.c" => (0.5, 2.0),
        "gov.simple.c2" => (0.5, 2.0),
        "gov.simple.c3" => (0.0, 2.0),

        "gov.degov.t1" => (0.01, 0.09),
        "gov.degov.t2" => (0.02, 0.09),
        "gov.degov.t3" => (0.05, 0.65),
        "gov.degov.t4" => (0.002, 0.075),
        "gov.degov.t5" => (0.005, 0.05),
        "gov.degov.t6" => (0.009, 0.07),
        "gov.degov.k" => (6.0, 50.0),

        "gov.ggov1.maxerr" | "gov.ggov1d.maxerr" => (0.01, 0.5),
        "gov.ggov1.minerr" | "gov.ggov1d.minerr" => (-0.5, -0.01),
        "gov.ggov1.valve_open" | "gov.ggov1d.valve_open" => (10.0, 125.0),
        "gov.ggov1.valve_close" | "gov.ggov1d.valve_close" => (-125.0, -10.0),
        "gov.ggov1.k_turb" | "gov.ggov1d.k_turb" => (0.35, 0.4),
        "gov.ggov1.t_b" | "gov.ggov1d.t_b" => (0.1, 0.9),
        "gov.ggov1.t_c" | "gov.ggov1d.t_c" => (0.1, 0.9),
        "gov.ggov1.w_fnl" | "gov.ggov1d.w_fnl" => (0.1, 0.14),
        "gov.ggov1.k_p" => (0.0, 800.0),
        "gov.ggov1.k_i" => (0.0, 300.0),
        "gov.ggov1.k_d" => (0.0, 200.0),
        "gov.ggov1.n_d" => (0.0, 200.0),
        "gov.ggov1.t_act" => (0.01, 0.9),

        "gov.ggov1d.t1" => (0.01, 0.09),
        "gov.ggov1d.t2" => (0.02, 0.07),
        "gov.ggov1d.t3" => (0.1, 0.75),
        "gov.ggov1d.t4" => (0.01, 0.09),
        "gov.ggov1d.t5" => (0.01, 0.05),
        "gov.ggov1d.t6" => (0.01, 0.09),
        "gov.ggov1d.k" => (30.0, 150.0),

        "exciter.t_r" => (0.06, 0.08),
        "exciter.t_a" => (0.01, 0.02),
        "exciter.vr_min" => (-20.0, 0.0),
        "exciter.vr_max" => (0.0, 20.0),
        "exciter.k_f" => (0.01, 0.02),
        "exciter.t_f" => (1.25, 1.75),
        "exciter.k_e" => (0.5, 1.0),
        "exciter.t_e" => (0.01, 0.05),
        "exciter.n_d" => (20.0, 40.0),
        "exciter.k_g" => (0.0, 1.0),
        // gain bounds bracket the stable retune rather than the reference set
        "exciter.k_a" => (0.8, 1.2),
        "exciter.k_p" => (6.0, 24.0),
        "exciter.k_i" => (12.0, 48.0),
        "exciter.k_d" => (0.2, 1.0),
        _ => return None,
    };
    Some(b)
}

/// Names of the identifiable parameters of one governor model.
pub fn governor_parameter_names(kind: GovernorKind) -> Vec<String> {
    let fields: &[&str] = match kind {
        GovernorKind::Simple => &["k_p", "k_i", "t_sm", "c", "c2", "c3"],
        GovernorKind::Degov => &["t1", "t2", "t3", "t4", "t5", "t6", "k"],
        GovernorKind::Ggov1 => &[
            "maxerr", "minerr", "k_p", "k_i", "k_d", "n_d", "t_act", "valve_open", "valve_close",
            "k_turb", "t_b", "t_c", "w_fnl",
        ],
        GovernorKind::Ggov1d => &[
            "maxerr", "minerr", "t1", "t2", "t3", "t4", "t5", "t6", "k", "valve_open",
            "valve_close", "k_turb", "t_b", "t_c", "w_fnl",
        ],
    };
    fields
        .iter()
        .map(|f| format!("gov.{}.{}", kind.name(), f))
        .collect()
}

/// Names of the identifiable machine and exciter parameters.
pub fn plant_parameter_names() -> Vec<String> {
    let mut v = vec!["machine.h".to_string()];
    for f in [
        "t_r", "k_a", "t_a", "vr_min", "vr_max", "k_p", "k_i", "k_d", "n_d", "k_f", "t_f", "k_e",
        "t_e", "k_g",
    ] {
        v.push(format!("exciter.{f}"));
    }
    v
}

/// Builds a bounded vector over `names` using current values from `params`
/// and bounds from `overrides` first, then [`default_bounds`].
pub fn parameter_vector(
    params: &ModelParams,
    names: &[String],
    overrides: &dyn Fn(&str) -> Option<(f64, f64)>,
) -> Result<ParameterVector> {
    let mut entries = Vec::with_capacity(names.len());
    for n in names {
        let value = params.get(n)?;
        let (lo, hi) = overrides(n)
            .or_else(|| default_bounds(n))
            .ok_or_else(|| Error::InvalidInput(format!("no bounds known for `{n}`")))?;
        entries.push(ParameterEntry::new(n.clone(), value, lo, hi));
    }
    ParameterVector::new(entries)
}
