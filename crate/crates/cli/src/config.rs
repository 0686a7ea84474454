//! TOML run configuration.
//!
//! Parameter sections (`base`, `machine`, `exciter`, `vhz`, `gov.*`) may be
//! given inline or in separate files listed under `param_files`. Files are
//! applied in order and inline values win. Relative paths resolve against
//! the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use genset_core::excitation::{Dc4bParams, VhzParams};
use genset_core::governor::GovernorKind;
use genset_core::identify::ObjectiveConfig;
use genset_core::machine::MachineParams;
use genset_core::params::{GovernorSet, ModelParams};
use genset_core::simengine::{Scenario, SimOptions};
use genset_core::surropt::SurrOptConfig;
use genset_core::units::PerUnitBase;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::csvio::DatasetKind;
use crate::error::{CliError, CliResult};

pub const CONFIG_ENV: &str = "GENSET_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub governor: GovernorKind,
    pub param_files: Vec<PathBuf>,
    pub scenario: Scenario,
    pub simulation: SimOptions,
    pub base: PerUnitBase,
    pub machine: MachineParams,
    pub exciter: Dc4bParams,
    pub vhz: VhzParams,
    pub gov: GovernorSet,
    pub identify: IdentifySection,
    pub compare: CompareSection,
    pub analyze: AnalyzeSection,
    pub fuel: FuelSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = ModelParams::default();
        Self {
            governor: GovernorKind::Ggov1d,
            param_files: Vec::new(),
            scenario: Scenario::default(),
            simulation: SimOptions::default(),
            base: p.base,
            machine: p.machine,
            exciter: p.exciter,
            vhz: p.vhz,
            gov: p.gov,
            identify: IdentifySection::default(),
            compare: CompareSection::default(),
            analyze: AnalyzeSection::default(),
            fuel: FuelSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentifySection {
    pub dataset: Option<PathBuf>,
    pub dataset_kind: Option<DatasetKind>,
    /// Parameters to identify. Defaults to every parameter of the
    /// selected governor.
    pub params: Option<Vec<String>>,
    /// Adds the machine inertia and exciter parameters to the default set.
    pub include_plant: bool,
    /// Removed from the identified set and held at their configured values.
    pub freeze: Vec<String>,
    /// Inline bound overrides, `name = [lower, upper]`.
    pub bounds: BTreeMap<String, (f64, f64)>,
    /// CSV with `name,lower,upper` rows, applied before inline bounds.
    pub bounds_file: Option<PathBuf>,
    pub objective: ObjectiveConfig,
    pub optimizer: SurrOptConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub dataset: Option<PathBuf>,
    pub dataset_kind: Option<DatasetKind>,
    /// Models to score. Defaults to all four.
    pub governors: Option<Vec<GovernorKind>>,
    /// Per-governor parameter files applied on top of the configured set,
    /// keyed by governor name.
    pub param_sets: BTreeMap<String, PathBuf>,
    pub objective: ObjectiveConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeSection {
    pub dataset: Option<PathBuf>,
    pub dataset_kind: Option<DatasetKind>,
    /// Frequency band for the settling time, Hz.
    pub band: f64,
    /// Span averaged for final values, s.
    pub tail: f64,
}

impl Default for AnalyzeSection {
    fn default() -> Self {
        Self {
            dataset: None,
            dataset_kind: None,
            band: 0.05,
            tail: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuelSection {
    /// CSV with `p_kw` and `fuel_lph` columns.
    pub points: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

fn read_toml(path: &Path) -> CliResult<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.parse::<Table>().map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

/// Recursively overlays `top` onto `base`.
pub fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn resolve(dir: &Path, p: &mut Option<PathBuf>) {
    if let Some(p) = p {
        if p.is_relative() {
            *p = dir.join(&*p);
        }
    }
}

const PARAM_SECTIONS: [&str; 5] = ["base", "machine", "exciter", "vhz", "gov"];

/// Applies a parameter file to `params`, keeping unspecified values.
pub fn apply_param_file(params: &ModelParams, path: &Path) -> CliResult<ModelParams> {
    let file = read_toml(path)?;
    if let Some(k) = file.keys().find(|k| !PARAM_SECTIONS.contains(&k.as_str())) {
        return Err(CliError::Config {
            path: path.to_path_buf(),
            msg: format!("unexpected section `{k}` in a parameter file"),
        });
    }
    let mut base = Table::try_from(params).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    merge(&mut base, file);
    Value::Table(base).try_into().map_err(|e: toml::de::Error| CliError::Config {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

impl RunConfig {
    /// Parses a config file, merging its parameter files.
    pub fn load(path: &Path) -> CliResult<Self> {
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let top = read_toml(path)?;
        let files: Vec<PathBuf> = match top.get("param_files") {
            None => Vec::new(),
            Some(v) => v.clone().try_into().map_err(|e: toml::de::Error| CliError::Config {
                path: path.to_path_buf(),
                msg: format!("param_files: {e}"),
            })?,
        };
        let mut merged = Table::new();
        for f in &files {
            let f = if f.is_relative() { dir.join(f) } else { f.clone() };
            let t = read_toml(&f)?;
            if let Some(k) = t.keys().find(|k| !PARAM_SECTIONS.contains(&k.as_str())) {
                return Err(CliError::Config {
                    path: f,
                    msg: format!("unexpected section `{k}` in a parameter file"),
                });
            }
            merge(&mut merged, t);
        }
        merge(&mut merged, top);
        let mut cfg: RunConfig = Value::Table(merged).try_into().map_err(|e: toml::de::Error| CliError::Config {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        cfg.resolve_paths(&dir);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, dir: &Path) {
        for p in self.param_files.iter_mut() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        resolve(dir, &mut self.identify.dataset);
        resolve(dir, &mut self.identify.bounds_file);
        resolve(dir, &mut self.compare.dataset);
        resolve(dir, &mut self.analyze.dataset);
        resolve(dir, &mut self.fuel.points);
        for p in self.compare.param_sets.values_mut() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        if self.output.dir.is_relative() {
            self.output.dir = dir.join(&self.output.dir);
        }
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            base: self.base,
            machine: self.machine,
            exciter: self.exciter,
            vhz: self.vhz,
            gov: self.gov,
        }
    }

    /// Checks referenced files and bound names.
    pub fn validate(&self) -> CliResult<()> {
        self.scenario.validate()?;
        self.simulation.signal.validate()?;
        let params = self.params();
        params.base.validate()?;
        let exists = |p: &Option<PathBuf>| -> CliResult<()> {
            match p {
                Some(p) if !p.exists() => Err(CliError::Usage(format!("file not found: {}", p.display()))),
                _ => Ok(()),
            }
        };
        exists(&self.identify.dataset)?;
        exists(&self.identify.bounds_file)?;
        exists(&self.compare.dataset)?;
        exists(&self.analyze.dataset)?;
        exists(&self.fuel.points)?;
        for p in self.compare.param_sets.values() {
            exists(&Some(p.clone()))?;
        }
        for k in self.compare.param_sets.keys() {
            k.parse::<GovernorKind>()?;
        }
        let names = self
            .identify
            .bounds
            .keys()
            .chain(&self.identify.freeze)
            .chain(self.identify.params.iter().flatten());
        for n in names {
            params.get(n)?;
        }
        for (n, (lo, hi)) in &self.identify.bounds {
            if !(lo <= hi) {
                return Err(genset_core::Error::MalformedBounds {
                    name: n.clone(),
                    lower: *lo,
                    upper: *hi,
                }
                .into());
            }
        }
        Ok(())
    }
}
