//! Command implementations. Each writes its files under the output
//! directory and returns a report for the terminal.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use genset_core::governor::{estimate_fuel_curve, FuelCurveFit, GovernorKind};
use genset_core::identify::{compare_row, identify, CompareRow, Objective, ObjectiveConfig, CHANNELS, REBOUND_FRACTION};
use genset_core::params::{governor_parameter_names, parameter_vector, plant_parameter_names, ModelParams};
use genset_core::signal::rebound_end;
use genset_core::simengine::{simulate, summarize_step, Scenario, StepSummary};
use genset_core::units::{ParameterVector, TimeSeries};
use serde::Serialize;

use crate::config::{apply_param_file, RunConfig};
use crate::csvio::{ingest, read_bounds, read_fuel_points, write_cells, write_series, write_table, DatasetKind};
use crate::error::{CliError, CliResult};

/// A loaded configuration with command-line overrides applied.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: RunConfig,
    /// Input file overriding the command's configured dataset.
    pub data: Option<PathBuf>,
}

impl Context {
    pub fn new(cfg: RunConfig) -> Self {
        Self { cfg, data: None }
    }

    pub fn out_dir(&self) -> CliResult<&Path> {
        let d = &self.cfg.output.dir;
        std::fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
        Ok(d)
    }

    fn out(&self, name: &str) -> CliResult<PathBuf> {
        Ok(self.out_dir()?.join(name))
    }

    fn dataset(&self, configured: &Option<PathBuf>, what: &str) -> CliResult<PathBuf> {
        self.data
            .clone()
            .or_else(|| configured.clone())
            .ok_or_else(|| CliError::Usage(format!("{what} needs a dataset: set it in the config or pass --data")))
    }

    fn load(&self, path: &Path, kind: Option<DatasetKind>) -> CliResult<TimeSeries> {
        ingest(path, kind, self.cfg.scenario.f_nominal, &self.cfg.simulation.signal)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report types serialize");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub governor: GovernorKind,
    pub p_final: f64,
    pub q_final: f64,
    pub v_final: f64,
    pub f_final: f64,
    /// Absent when the load does not change.
    pub f_nadir: Option<f64>,
    pub t_nadir: Option<f64>,
    pub t_settle: Option<f64>,
}

impl SimulateReport {
    fn new(kind: GovernorKind, s: &StepSummary, sc: &Scenario) -> Self {
        let stepped = sc.p1 != sc.p0 || sc.q1 != sc.q0;
        Self {
            governor: kind,
            p_final: s.p_final,
            q_final: s.q_final,
            v_final: s.v_final,
            f_final: s.f_final,
            f_nadir: stepped.then_some(s.f_nadir),
            t_nadir: stepped.then_some(s.t_nadir),
            t_settle: s.t_settle,
        }
    }
}

/// Runs the configured load step; writes `series.csv`, optionally
/// `states.csv`, and `summary.json`.
pub fn cmd_simulate(ctx: &Context) -> CliResult<SimulateReport> {
    let cfg = &ctx.cfg;
    cfg.validate()?;
    let out = simulate(&cfg.scenario, &cfg.params(), cfg.governor, &cfg.simulation)?;
    write_series(&ctx.out("series.csv")?, &out.series)?;
    if let Some(states) = &out.states {
        write_series(&ctx.out("states.csv")?, states)?;
    }
    let tail = cfg.analyze.tail.min(cfg.scenario.t_end - cfg.scenario.t_step);
    let summary = summarize_step(&out.series, &cfg.scenario, cfg.analyze.band, tail)?;
    let report = SimulateReport::new(cfg.governor, &summary, &cfg.scenario);
    write_json(&ctx.out("summary.json")?, &report)?;
    Ok(report)
}

/// The bounded parameter set to identify for `kind`.
pub fn identification_space(cfg: &RunConfig, kind: GovernorKind) -> CliResult<ParameterVector> {
    let sec = &cfg.identify;
    let mut names = match &sec.params {
        Some(p) => p.clone(),
        None => {
            let mut n = governor_parameter_names(kind);
            if sec.include_plant {
                n.extend(plant_parameter_names());
            }
            n
        }
    };
    names.retain(|n| !sec.freeze.contains(n));
    if names.is_empty() {
        return Err(CliError::Usage("no parameters left to identify".into()));
    }
    let mut overrides: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    if let Some(f) = &sec.bounds_file {
        for (n, lo, hi) in read_bounds(f)? {
            overrides.insert(n, (lo, hi));
        }
    }
    overrides.extend(sec.bounds.iter().map(|(k, v)| (k.clone(), *v)));
    Ok(parameter_vector(&cfg.params(), &names, &|n: &str| overrides.get(n).copied())?)
}

fn objective_for(ctx: &Context, measured: &TimeSeries, params: ModelParams, kind: GovernorKind, oc: &ObjectiveConfig) -> CliResult<Objective> {
    let cfg = &ctx.cfg;
    Ok(Objective::new(measured, params, kind, cfg.scenario, cfg.simulation, oc)?)
}

fn write_comparison(path: &Path, obj: &Objective, sim: &TimeSeries) -> CliResult<()> {
    let meas = obj.measured();
    let mut header = vec!["t".to_string()];
    for c in CHANNELS {
        header.push(format!("{c}_meas"));
        header.push(format!("{c}_sim"));
    }
    let cols: Vec<(&[f64], &[f64])> = CHANNELS
        .iter()
        .map(|c| Ok((meas.require(c)?, sim.require(c)?)))
        .collect::<genset_core::Result<_>>()?;
    let rows = (0..meas.len()).map(|k| {
        let mut r = vec![meas.time(k)];
        for (m, s) in &cols {
            r.push(m[k]);
            r.push(s[k]);
        }
        r
    });
    write_table(path, &header, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentifyReport {
    pub governor: GovernorKind,
    pub g_best: f64,
    pub evaluations: usize,
    pub parameters: BTreeMap<String, f64>,
    pub channel_nrmse: BTreeMap<String, f64>,
}

/// Identifies the selected parameters; writes `history.csv`,
/// `comparison.csv`, `best_params.toml`, and `identify.json`.
pub fn cmd_identify(ctx: &Context) -> CliResult<IdentifyReport> {
    let cfg = &ctx.cfg;
    cfg.validate()?;
    let kind = cfg.governor;
    let path = ctx.dataset(&cfg.identify.dataset, "identify")?;
    let measured = ctx.load(&path, cfg.identify.dataset_kind)?;
    let space = identification_space(cfg, kind)?;
    let obj = objective_for(ctx, &measured, cfg.params(), kind, &cfg.identify.objective)?;
    let id = identify(&obj, &space, &cfg.identify.optimizer)?;

    let mut header = vec!["iteration".to_string()];
    header.extend(space.names().map(str::to_string));
    header.extend(["g", "best_g", "penalized"].map(String::from));
    let rows = id.result.history.iter().map(|h| {
        let mut r = vec![h.iteration as f64];
        r.extend(&h.x);
        r.extend([h.g, h.best_g, if h.penalized { 1.0 } else { 0.0 }]);
        r
    });
    write_table(&ctx.out("history.csv")?, &header, rows)?;

    let sim = obj.simulate(&id.params)?;
    write_comparison(&ctx.out("comparison.csv")?, &obj, &sim)?;
    let errors = obj.channel_errors(&sim)?;
    let toml_text = toml::to_string(&id.params).expect("parameters serialize");
    let p = ctx.out("best_params.toml")?;
    std::fs::write(&p, toml_text).map_err(|e| CliError::io(&p, e))?;

    let report = IdentifyReport {
        governor: kind,
        g_best: id.result.g_best,
        evaluations: id.result.history.len(),
        parameters: id.best.entries().iter().map(|e| (e.name.clone(), e.value)).collect(),
        channel_nrmse: CHANNELS.iter().map(|c| c.to_string()).zip(errors).collect(),
    };
    write_json(&ctx.out("identify.json")?, &report)?;
    Ok(report)
}

/// Governors to compare: the `--governor` override if present, else the
/// configured list, else all four.
pub fn compare_kinds(cfg: &RunConfig, single: Option<GovernorKind>) -> Vec<GovernorKind> {
    single
        .map(|k| vec![k])
        .or_else(|| cfg.compare.governors.clone())
        .unwrap_or_else(|| GovernorKind::ALL.to_vec())
}

pub fn compare_header() -> Vec<String> {
    let mut h = vec!["governor".to_string(), "cumulative".to_string()];
    for c in CHANNELS {
        h.push(format!("nrmse_{c}"));
    }
    for w in ["arresting", "rebound"] {
        for m in ["nrmse", "mape"] {
            for c in CHANNELS {
                h.push(format!("{w}_{m}_{c}"));
            }
        }
    }
    h
}

fn compare_cells(row: &CompareRow) -> Vec<String> {
    let num = |v: &f64| format!("{v:?}");
    let mut r = vec![row.kind.name().to_string(), num(&row.cumulative)];
    r.extend(row.nrmse.iter().map(num));
    for w in [&row.arresting, &row.rebound] {
        match w {
            Some(s) => {
                r.extend(s.nrmse.iter().map(num));
                r.extend(s.mape.iter().map(num));
            }
            None => r.extend(std::iter::repeat(String::new()).take(8)),
        }
    }
    r
}

/// Scores each governor against the dataset; writes `compare.csv` and
/// `traces.csv`.
pub fn cmd_compare(ctx: &Context, single: Option<GovernorKind>) -> CliResult<Vec<CompareRow>> {
    let cfg = &ctx.cfg;
    cfg.validate()?;
    let path = ctx.dataset(&cfg.compare.dataset, "compare")?;
    let measured = ctx.load(&path, cfg.compare.dataset_kind)?;
    let kinds = compare_kinds(cfg, single);
    let mut rows = Vec::new();
    let mut traces: Option<TimeSeries> = None;
    for kind in kinds {
        let mut params = cfg.params();
        if let Some(f) = cfg.compare.param_sets.get(kind.name()) {
            params = apply_param_file(&params, f)?;
        }
        let obj = objective_for(ctx, &measured, params, kind, &cfg.compare.objective)?;
        let row = compare_row(&obj, &params, kind)?;
        let sim = obj.simulate(&params)?;
        let tr = traces.get_or_insert_with(|| {
            let m = obj.measured();
            let mut t = TimeSeries::new(m.t0(), m.dt()).expect("valid grid");
            for c in ["f", "P"] {
                t.insert(format!("{c}_meas"), m.require(c).expect("channel").to_vec()).expect("length");
            }
            t
        });
        for c in ["f", "P"] {
            tr.insert(format!("{c}_{}", kind.name()), sim.require(c)?.to_vec())?;
        }
        rows.push(row);
    }
    write_cells(&ctx.out("compare.csv")?, &compare_header(), rows.iter().map(compare_cells))?;
    if let Some(tr) = &traces {
        write_series(&ctx.out("traces.csv")?, tr)?;
    }
    write_json(&ctx.out("compare.json")?, &rows)?;
    Ok(rows)
}

/// Fits the fuel line; writes `fuel_fit.csv` and `fuel_fit.json`.
pub fn cmd_fit_fuel_curve(ctx: &Context) -> CliResult<FuelCurveFit> {
    let cfg = &ctx.cfg;
    let path = ctx.dataset(&cfg.fuel.points, "fit-fuel-curve")?;
    let points = read_fuel_points(&path)?;
    let fit = estimate_fuel_curve(&points, &cfg.base)?;
    let header = ["p_kw", "fuel_lph", "fitted_lph", "residual_lph"].map(String::from);
    let rows = points
        .iter()
        .zip(&fit.residuals)
        .map(|(&(p, f), &r)| vec![p, f, f - r, r]);
    write_table(&ctx.out("fuel_fit.csv")?, &header, rows)?;
    write_json(&ctx.out("fuel_fit.json")?, &fit)?;
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeReport {
    pub samples: usize,
    pub summary: StepSummary,
    /// Measured frequency nadir and recovery times, if the record dips.
    pub rebound: Option<(f64, f64)>,
}

/// Derives channels from a recording; writes `derived.csv` and
/// `analyze.json`.
pub fn cmd_analyze(ctx: &Context) -> CliResult<AnalyzeReport> {
    let cfg = &ctx.cfg;
    let path = ctx.dataset(&cfg.analyze.dataset, "analyze")?;
    let ts = ctx.load(&path, cfg.analyze.dataset_kind)?;
    write_series(&ctx.out("derived.csv")?, &ts)?;
    let tail = cfg.analyze.tail.min(ts.t_end() - cfg.scenario.t_step);
    let summary = summarize_step(&ts, &cfg.scenario, cfg.analyze.band, tail)?;
    let rebound = rebound_end(&ts, "f", cfg.scenario.t_step, cfg.scenario.f_nominal, REBOUND_FRACTION)?;
    let report = AnalyzeReport {
        samples: ts.len(),
        summary,
        rebound,
    };
    write_json(&ctx.out("analyze.json")?, &report)?;
    Ok(report)
}
