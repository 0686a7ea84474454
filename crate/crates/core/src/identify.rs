//! Parameter identification against a recorded load step, and the
//! per-governor comparison table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::governor::GovernorKind;
use crate::params::ModelParams;
use crate::signal::metrics::{mape, normalization, nrmse, rebound_end, resample, NormKind};
use crate::simengine::{simulate, Scenario, SimOptions};
use crate::surropt::{optimize, OptResult, SurrOptConfig};
use crate::units::{ParameterVector, TimeSeries};

/// Channels entering the objective, in weight order.
pub const CHANNELS: [&str; 4] = ["P", "Q", "V", "f"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub weights: [f64; 4],
    pub norm: NormKind,
    /// Scored span relative to the step, s. `None` ends at the record end.
    pub span: Option<f64>,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            weights: [1.0; 4],
            norm: NormKind::PreStepMean,
            span: Some(4.0),
        }
    }
}

/// Weighted sum of per-channel nRMSE between a measurement and the model.
#[derive(Debug, Clone)]
pub struct Objective {
    pub base: ModelParams,
    pub kind: GovernorKind,
    pub scenario: Scenario,
    pub opts: SimOptions,
    pub weights: [f64; 4],
    /// Measured channels on the scoring grid.
    measured: TimeSeries,
    norms: [f64; 4],
    window: (f64, f64),
}

impl Objective {
    pub fn new(
        measured: &TimeSeries,
        base: ModelParams,
        kind: GovernorKind,
        scenario: Scenario,
        opts: SimOptions,
        cfg: &ObjectiveConfig,
    ) -> Result<Self> {
        scenario.validate()?;
        for c in CHANNELS {
            measured.require(c)?;
        }
        if cfg.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput("objective weights must be non-negative".into()));
        }
        let t_end = cfg
            .span
            .map_or(measured.t_end(), |s| (scenario.t_step + s).min(measured.t_end()))
            .min(scenario.t_end);
        let t_start = scenario.t_step.max(measured.t0());
        if !(t_end > t_start) {
            return Err(Error::WindowTooShort(format!(
                "scoring window [{t_start}, {t_end}] is empty"
            )));
        }
        let dt = opts.signal.output_dt;
        let grid_end = t_start + ((t_end - t_start) / dt + 1e-9).floor() * dt;
        let scored = resample(measured, dt, t_start, grid_end)?;
        let mut norms = [1.0; 4];
        let pre = measured.index_range(measured.t0(), scenario.t_step);
        for (k, c) in CHANNELS.iter().enumerate() {
            let all = measured.require(c)?;
            let pre_slice = if pre.is_empty() { all } else { &all[pre.clone()] };
            norms[k] = normalization(all, pre_slice, cfg.norm)?;
        }
        Ok(Self {
            base,
            kind,
            scenario,
            opts,
            weights: cfg.weights,
            measured: scored,
            norms,
            window: (t_start, grid_end),
        })
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn norms(&self) -> [f64; 4] {
        self.norms
    }

    pub fn measured(&self) -> &TimeSeries {
        &self.measured
    }

    /// Simulated channels on the scoring grid.
    pub fn simulate(&self, params: &ModelParams) -> Result<TimeSeries> {
        let out = simulate(&self.scenario, params, self.kind, &self.opts)?;
        let (t0, t1) = self.window;
        resample(&out.series, self.measured.dt(), t0, t1)
    }

    /// Per-channel nRMSE of a simulated series on the scoring grid.
    pub fn channel_errors(&self, sim: &TimeSeries) -> Result<[f64; 4]> {
        let mut e = [0.0; 4];
        for (k, c) in CHANNELS.iter().enumerate() {
            e[k] = nrmse(self.measured.require(c)?, sim.require(c)?, self.norms[k])?;
        }
        Ok(e)
    }

    pub fn evaluate_params(&self, params: &ModelParams) -> Result<f64> {
        let e = self.channel_errors(&self.simulate(params)?)?;
        Ok(e.iter().zip(&self.weights).map(|(e, w)| e * w).sum())
    }

    /// Objective at `values` assigned to the names of `space`.
    pub fn evaluate(&self, space: &ParameterVector, values: &[f64]) -> Result<f64> {
        let params = self.base.with_parameters(&space.with_values(values)?)?;
        self.evaluate_params(&params)
    }
}

#[derive(Debug, Clone)]
pub struct Identification {
    pub best: ParameterVector,
    pub params: ModelParams,
    pub result: OptResult,
}

/// Minimizes the objective over the box of `space`. Failed simulations
/// score as non-finite and are penalized by the optimizer.
pub fn identify(objective: &Objective, space: &ParameterVector, cfg: &SurrOptConfig) -> Result<Identification> {
    let f = |x: &[f64]| objective.evaluate(space, x).unwrap_or(f64::NAN);
    let result = optimize(f, &space.bounds(), cfg)?;
    let best = space.with_values(&result.x_best)?;
    Ok(Identification {
        params: objective.base.with_parameters(&best)?,
        best,
        result,
    })
}

/// nRMSE and MAPE of every channel over one time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowScores {
    pub start: f64,
    pub end: f64,
    pub nrmse: [f64; 4],
    pub mape: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub kind: GovernorKind,
    pub cumulative: f64,
    pub nrmse: [f64; 4],
    /// Step to measured frequency nadir.
    pub arresting: Option<WindowScores>,
    /// Nadir to recovery above `rebound_fraction · f_nominal`.
    pub rebound: Option<WindowScores>,
}

/// Fraction of nominal frequency that marks the end of the rebound.
pub const REBOUND_FRACTION: f64 = 0.999;

fn window_scores(meas: &TimeSeries, sim: &TimeSeries, norms: &[f64; 4], start: f64, end: f64) -> Result<Option<WindowScores>> {
    let rm = meas.index_range(start, end);
    if rm.len() < 2 {
        return Ok(None);
    }
    let rs = sim.index_range(start, end);
    let mut out = WindowScores {
        start,
        end,
        nrmse: [0.0; 4],
        mape: [0.0; 4],
    };
    for (k, c) in CHANNELS.iter().enumerate() {
        let m = &meas.require(c)?[rm.clone()];
        let s = &sim.require(c)?[rs.clone()];
        out.nrmse[k] = nrmse(m, s, norms[k])?;
        out.mape[k] = mape(m, s)?.value;
    }
    Ok(Some(out))
}

/// Scores one governor model against the objective's measurement.
pub fn compare_row(objective: &Objective, params: &ModelParams, kind: GovernorKind) -> Result<CompareRow> {
    let mut obj = objective.clone();
    obj.kind = kind;
    let sim = obj.simulate(params)?;
    let e = obj.channel_errors(&sim)?;
    let meas = obj.measured();
    let (arresting, rebound) =
        match rebound_end(meas, "f", obj.scenario.t_step, obj.scenario.f_nominal, REBOUND_FRACTION)? {
            Some((t_nadir, t_end)) => (
                window_scores(meas, &sim, &obj.norms, obj.window.0, t_nadir)?,
                window_scores(meas, &sim, &obj.norms, t_nadir, t_end)?,
            ),
            None => (None, None),
        };
    Ok(CompareRow {
        kind,
        cumulative: e.iter().zip(&obj.weights).map(|(e, w)| e * w).sum(),
        nrmse: e,
        arresting,
        rebound,
    })
}
