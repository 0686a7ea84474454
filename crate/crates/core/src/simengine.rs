//! Coupled machine, exciter, V/Hz limiter, governor, and series R-L load,
//! integrated with fixed-step RK4 through a load-step scenario.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::excitation::{vhz_signal, Dc4b, Dc4bState, VhzState, DC4B_STATES};
use crate::governor::{DelayBuffer, Governor, GovernorKind, GovernorState};
use crate::machine::{electrical_torque, Currents, Machine, MachineState, DELTA, MACHINE_STATES, OMEGA};
use crate::ode::Rk4;
use crate::params::ModelParams;
use crate::signal::{derive_channels, resample, SignalConfig, ThreePhaseFrames};
use crate::units::{PerUnitBase, TimeSeries};

const EXC: usize = MACHINE_STATES;
const VHZ: usize = EXC + DC4B_STATES;
const GOV: usize = VHZ + 1;

/// Load-step experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    /// Initial load, kW and kVAR.
    pub p0: f64,
    pub q0: f64,
    /// Load after the step, kW and kVAR.
    pub p1: f64,
    pub q1: f64,
    pub t_step: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Line-to-neutral rms, V.
    pub v_nominal: f64,
    pub f_nominal: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            p0: 80.0,
            q0: 0.0,
            p1: 240.0,
            q1: 160.0,
            t_step: 1.0,
            t_end: 5.0,
            dt: 1e-4,
            v_nominal: 480.0 / 3f64.sqrt(),
            f_nominal: 60.0,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.p0, self.q0, self.p1, self.q1, self.t_step, self.t_end, self.dt, self.v_nominal,
            self.f_nominal,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("scenario fields must be finite".into()));
        }
        if !(self.dt > 0.0 && self.dt <= 1e-3) {
            return Err(Error::InvalidInput(format!("dt must lie in (0, 1e-3], got {}", self.dt)));
        }
        if !(self.t_step >= 0.0 && self.t_step < self.t_end) {
            return Err(Error::InvalidInput(format!(
                "need 0 <= t_step < t_end, got t_step = {}, t_end = {}",
                self.t_step, self.t_end
            )));
        }
        if self.p0 < 0.0 || self.q0 < 0.0 || self.p1 < 0.0 || self.q1 < 0.0 {
            return Err(Error::InvalidInput("loads must be non-negative".into()));
        }
        if !(self.v_nominal > 0.0 && self.f_nominal > 0.0) {
            return Err(Error::InvalidInput("nominal voltage and frequency must be positive".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Index of the first step taken with the new load.
    pub fn step_index(&self) -> usize {
        (self.t_step / self.dt).round() as usize
    }

    pub fn v_target(&self, base: &PerUnitBase) -> f64 {
        self.v_nominal / base.v_base
    }

    pub fn omega_ref(&self, base: &PerUnitBase) -> f64 {
        self.f_nominal / base.f_base
    }
}

/// Constant-impedance realization of a load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LoadImpedance {
    /// No load; the stator is open-circuited.
    Open,
    /// Series branch, per-unit.
    Series { r: f64, x: f64 },
}

impl LoadImpedance {
    pub fn reactance(&self) -> f64 {
        match *self {
            LoadImpedance::Open => 0.0,
            LoadImpedance::Series { x, .. } => x,
        }
    }

    pub fn admittance(&self) -> Complex64 {
        match *self {
            LoadImpedance::Open => Complex64::new(0.0, 0.0),
            LoadImpedance::Series { r, x } => Complex64::new(1.0, 0.0) / Complex64::new(r, x),
        }
    }
}

/// Series R-L branch drawing `(p, q)` at voltage `v` (pu).
pub fn load_to_impedance(p_kw: f64, q_kvar: f64, v: f64, base: &PerUnitBase) -> Result<LoadImpedance> {
    if !(v > 0.0) || !p_kw.is_finite() || !q_kvar.is_finite() {
        return Err(Error::InvalidInput(format!(
            "load conversion needs finite p, q and v > 0, got ({p_kw}, {q_kvar}, {v})"
        )));
    }
    if p_kw < 0.0 || q_kvar < 0.0 {
        return Err(Error::InvalidInput(format!(
            "only resistive-inductive loads are supported, got p = {p_kw}, q = {q_kvar}"
        )));
    }
    let p = p_kw * 1e3 / base.s_base;
    let q = q_kvar * 1e3 / base.s_base;
    let s2 = p * p + q * q;
    if s2 == 0.0 {
        return Ok(LoadImpedance::Open);
    }
    Ok(LoadImpedance::Series {
        r: v * v * p / s2,
        x: v * v * q / s2,
    })
}

/// How the output channels are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    /// Synthesize three-phase waveforms and run them through the same
    /// PLL, phasor, and RMS pipeline used for measurements.
    #[default]
    Waveform,
    /// Compute the channels directly from dq quantities and rotor speed.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    pub output: OutputMode,
    pub signal: SignalConfig,
    /// Also return every integrated state and dq quantity at the step rate.
    pub record_states: bool,
}

/// Full coupled state.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub machine: MachineState,
    pub exciter: Dc4bState,
    pub vhz: VhzState,
    pub governor: GovernorState,
}

/// Steady operating point and the references that hold it.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub state: SystemState,
    pub v_ref: f64,
    pub p_m: f64,
    pub load: LoadImpedance,
    /// Largest state derivative at the returned point.
    pub residual: f64,
}

/// Envelope of internal signals seen during a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub vr_min: f64,
    pub vr_max: f64,
    pub valve_min: f64,
    pub valve_max: f64,
    pub valve_rate_min: f64,
    pub valve_rate_max: f64,
    pub vhz_signal_max: f64,
    pub vhz_resets: usize,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            vr_min: f64::INFINITY,
            vr_max: f64::NEG_INFINITY,
            valve_min: f64::INFINITY,
            valve_max: f64::NEG_INFINITY,
            valve_rate_min: f64::INFINITY,
            valve_rate_max: f64::NEG_INFINITY,
            vhz_signal_max: f64::NEG_INFINITY,
            vhz_resets: 0,
            omega_min: f64::INFINITY,
            omega_max: f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    /// `P` (kW), `Q` (kVAR), `V` (V), `f` (Hz) on the output grid.
    pub series: TimeSeries,
    pub states: Option<TimeSeries>,
    pub diagnostics: Diagnostics,
    pub equilibrium: Equilibrium,
}

/// Algebraic quantities at one evaluation of the coupled right-hand side.
#[derive(Debug, Clone, Copy, Default)]
struct Aux {
    v_d: f64,
    v_q: f64,
    i_d: f64,
    i_q: f64,
    v_t: f64,
    p_m: f64,
    t_e: f64,
    vhz_err: f64,
    vhz_sig: f64,
}

/// Machine with the present load folded in.
#[derive(Debug, Clone)]
struct Network {
    machine: Machine,
    load: LoadImpedance,
}

/// The coupled model for one parameter set and governor choice.
#[derive(Debug, Clone)]
pub struct System {
    params: ModelParams,
    machine: Machine,
    exciter: Dc4b,
    governor: Governor,
    n: usize,
}

impl System {
    pub fn new(params: &ModelParams, kind: GovernorKind) -> Result<Self> {
        params.base.validate()?;
        let machine = Machine::new(params.machine, params.base.omega_base())?;
        let exciter = Dc4b::new(params.exciter)?;
        let governor = Governor::new(params.governor(kind), &params.base)?;
        if params.vhz.enabled && !(params.vhz.setpoint > 0.0 && params.vhz.gain >= 0.0) {
            return Err(Error::InvalidInput("V/Hz limiter needs setpoint > 0 and gain >= 0".into()));
        }
        let n = GOV + governor.n_states();
        Ok(Self {
            params: *params,
            machine,
            exciter,
            governor,
            n,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn governor(&self) -> &Governor {
        &self.governor
    }

    fn network(&self, load: LoadImpedance) -> Result<Network> {
        let machine = match load {
            LoadImpedance::Open => self.machine.open_circuited(),
            LoadImpedance::Series { r, x } => self.machine.with_series_load(r, x)?,
        };
        Ok(Network { machine, load })
    }

    fn pack(&self, s: &SystemState) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.n);
        x.extend_from_slice(&s.machine.to_array());
        x.extend_from_slice(&s.exciter.to_array());
        x.push(s.vhz.integrator);
        x.extend_from_slice(&s.governor.x);
        x
    }

    fn unpack(&self, x: &[f64], delay: DelayBuffer, t: f64) -> SystemState {
        SystemState {
            machine: MachineState::from_slice(&x[..EXC]),
            exciter: Dc4bState::from_slice(&x[EXC..VHZ]),
            vhz: VhzState {
                integrator: x[VHZ],
                setpoint: self.params.vhz.setpoint,
            },
            governor: GovernorState {
                x: x[GOV..].to_vec(),
                delay,
                t,
            },
        }
    }

    /// Coupled derivative. `delayed` is the engine delay-line output.
    fn rhs(&self, net: &Network, v_ref: f64, omega_ref: f64, x: &[f64], delayed: f64, dx: &mut [f64]) -> Aux {
        let ms = MachineState::from_slice(&x[..EXC]);
        let xg = &x[GOV..];
        let omega = ms.omega;
        let p_m = self.governor.power(xg, omega, delayed);
        let t_m = p_m / omega;
        let ex = Dc4bState::from_slice(&x[EXC..VHZ]);
        let v_fd = net.machine.v_fd_from_efd(ex.efd);
        let (dms, c) = net.machine.derivatives(&ms, 0.0, 0.0, v_fd, t_m);
        let (v_d, v_q) = match net.load {
            LoadImpedance::Open => net.machine.open_circuit_voltage(&ms, &dms),
            LoadImpedance::Series { r, x: xl } => {
                let (did, diq) = net.machine.current_derivatives(&dms);
                let wb = net.machine.omega_b();
                (
                    r * c.i_d + xl / wb * did - omega * xl * c.i_q,
                    r * c.i_q + xl / wb * diq + omega * xl * c.i_d,
                )
            }
        };
        let v_t = v_d.hypot(v_q);
        let vhz = &self.params.vhz;
        let (vhz_err, vhz_sig, dvhz) = if vhz.enabled {
            let err = v_t / omega - vhz.setpoint;
            let d = if err > 0.0 { vhz.gain * err } else { 0.0 };
            (err, vhz_signal(x[VHZ], err), d)
        } else {
            (f64::NEG_INFINITY, 0.0, 0.0)
        };
        let dex = self.exciter.derivatives(&ex, v_ref, v_t, vhz_sig);
        dx[..EXC].copy_from_slice(&dms.to_array());
        dx[EXC..VHZ].copy_from_slice(&dex.to_array());
        dx[VHZ] = dvhz;
        self.governor.derivatives(xg, omega, omega_ref, &mut dx[GOV..]);
        Aux {
            v_d,
            v_q,
            i_d: c.i_d,
            i_q: c.i_q,
            v_t,
            p_m,
            t_e: electrical_torque(&ms, &c),
            vhz_err,
            vhz_sig,
        }
    }

    /// Analytic operating point for `load` at terminal voltage `v` and
    /// synchronous speed, before refinement.
    fn seed(&self, net: &Network, v: f64) -> Result<(Vec<f64>, f64, f64)> {
        let mp = self.machine.params();
        let c = match net.load {
            LoadImpedance::Open => Currents {
                i_fd: v / mp.l_md,
                ..Default::default()
            },
            LoadImpedance::Series { r, x } => {
                let ra = mp.r_s + r;
                let lad = mp.l_l + x + mp.l_md;
                let laq = mp.l_l + x + mp.l_mq;
                // per unit field current
                let iq = mp.l_md / (ra + lad * laq / ra);
                let id = laq * iq / ra;
                let vd = r * id - x * iq;
                let vq = r * iq + x * id;
                let k = v / vd.hypot(vq);
                Currents {
                    i_d: k * id,
                    i_q: k * iq,
                    i_fd: k,
                    ..Default::default()
                }
            }
        };
        let ms = match net.load {
            LoadImpedance::Open => self.machine.currents_to_flux(&c, 1.0, 0.0),
            LoadImpedance::Series { .. } => net.machine.currents_to_flux(&c, 1.0, 0.0),
        };
        let t_e = electrical_torque(&ms, &c);
        let p_m = t_e;
        let efd = mp.l_md * c.i_fd;
        let (ex, v_ref) = self.exciter.steady_state(efd, v)?;
        let g = self.governor.steady_state(p_m, 1.0)?;
        let mut x = Vec::with_capacity(self.n);
        x.extend_from_slice(&ms.to_array());
        x.extend_from_slice(&ex.to_array());
        x.push(0.0);
        x.extend_from_slice(&g);
        debug_assert_eq!(x.len(), self.n);
        Ok((x, v_ref, p_m))
    }

    fn flat_rhs(&self, net: &Network, v_ref: f64, omega_ref: f64, x: &[f64], dx: &mut [f64]) -> Aux {
        let delayed = self.governor.delay_input(&x[GOV..]);
        self.rhs(net, v_ref, omega_ref, x, delayed, dx)
    }

    /// Damped Newton on the derivative vector with a finite-difference
    /// Jacobian. Rotor angle and the V/Hz integrator are held fixed, as are
    /// states that have no effect or no dynamics of their own.
    fn newton(&self, net: &Network, v_ref: f64, omega_ref: f64, x: &mut [f64], tol: f64) -> f64 {
        let n = self.n;
        let mut f = vec![0.0; n];
        let resid = |x: &[f64], f: &mut [f64]| -> f64 {
            self.flat_rhs(net, v_ref, omega_ref, x, f);
            f.iter()
                .enumerate()
                .filter(|(i, _)| *i != DELTA && *i != VHZ)
                .fold(0.0f64, |a, (_, v)| a.max(if v.is_finite() { v.abs() } else { f64::INFINITY }))
        };
        let mut r = resid(x, &mut f);
        for _ in 0..40 {
            if r < tol {
                break;
            }
            let mut jac = DMatrix::zeros(n, n);
            let mut fp = vec![0.0; n];
            let mut xp = x.to_vec();
            for j in 0..n {
                if j == DELTA || j == VHZ {
                    continue;
                }
                let h = 1e-7 * x[j].abs().max(1.0);
                xp[j] = x[j] + h;
                self.flat_rhs(net, v_ref, omega_ref, &xp, &mut fp);
                xp[j] = x[j];
                for i in 0..n {
                    jac[(i, j)] = (fp[i] - f[i]) / h;
                }
            }
            let active: Vec<usize> = (0..n)
                .filter(|&i| {
                    i != DELTA
                        && i != VHZ
                        && (0..n).any(|k| jac[(i, k)].abs() > 1e-12)
                        && (0..n).any(|k| jac[(k, i)].abs() > 1e-12)
                })
                .collect();
            let m = active.len();
            let a = DMatrix::from_fn(m, m, |i, j| jac[(active[i], active[j])]);
            let b = DVector::from_fn(m, |i, _| -f[active[i]]);
            let Some(step) = a.lu().solve(&b) else {
                break;
            };
            let mut lambda = 1.0;
            let mut improved = false;
            let mut trial = x.to_vec();
            let mut ft = vec![0.0; n];
            for _ in 0..20 {
                for (k, &i) in active.iter().enumerate() {
                    trial[i] = x[i] + lambda * step[k];
                }
                let rt = resid(&trial, &mut ft);
                if rt < r {
                    x.copy_from_slice(&trial);
                    f.copy_from_slice(&ft);
                    r = rt;
                    improved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !improved {
                break;
            }
        }
        r
    }

    /// Equilibrium at the scenario's initial load.
    pub fn equilibrium(&self, scenario: &Scenario) -> Result<Equilibrium> {
        scenario.validate()?;
        let base = &self.params.base;
        let v = scenario.v_target(base);
        let omega_ref = scenario.omega_ref(base);
        let load = load_to_impedance(scenario.p0, scenario.q0, 1.0, base)?;
        let net = self.network(load)?;
        let (mut x, v_ref, _) = self.seed(&net, v)?;
        let tol = 1e-10;
        let mut r = self.newton(&net, v_ref, omega_ref, &mut x, tol);
        if r >= 1e-8 {
            // settle by simulation, then polish
            self.settle(&net, v_ref, omega_ref, &mut x, 30.0, 1e-4)?;
            r = self.newton(&net, v_ref, omega_ref, &mut x, tol);
        }
        if !(r < 1e-8) {
            return Err(Error::NonConvergence { residual: r });
        }
        let p_m = self.governor.power(&x[GOV..], x[OMEGA], self.governor.delay_input(&x[GOV..]));
        let delay = DelayBuffer::new(self.governor.delay(), 0.0, self.governor.delay_input(&x[GOV..]));
        Ok(Equilibrium {
            state: self.unpack(&x, delay, 0.0),
            v_ref,
            p_m,
            load,
            residual: r,
        })
    }

    fn settle(&self, net: &Network, v_ref: f64, omega_ref: f64, x: &mut [f64], t_end: f64, dt: f64) -> Result<()> {
        let mut rk = Rk4::new(self.n);
        let mut delay = DelayBuffer::new(self.governor.delay(), 0.0, self.governor.delay_input(&x[GOV..]));
        let steps = (t_end / dt).round() as usize;
        for k in 0..steps {
            let t = k as f64 * dt;
            self.advance(&mut rk, net, v_ref, omega_ref, &mut delay, t, dt, x)?;
        }
        Ok(())
    }

    /// One accepted step including projections, V/Hz reset handling, and
    /// the delay-line update. Returns the algebraic outputs at the new state.
    #[allow(clippy::too_many_arguments)]
    fn advance(
        &self,
        rk: &mut Rk4,
        net: &Network,
        v_ref: f64,
        omega_ref: f64,
        delay: &mut DelayBuffer,
        t: f64,
        dt: f64,
        x: &mut [f64],
    ) -> Result<(Aux, bool)> {
        let gov = &self.governor;
        let _ = rk.step::<(), _>(t, dt, x, |ts, xs, dx| {
            let delayed = delay.lookup((ts, gov.delay_input(&xs[GOV..])));
            self.rhs(net, v_ref, omega_ref, xs, delayed, dx);
            Ok(())
        });
        let t1 = t + dt;
        if x.iter().any(|v| !v.is_finite()) || x[OMEGA] <= 0.0 {
            return Err(Error::Divergence { t: t1, last_valid: t });
        }
        let mut ex = Dc4bState::from_slice(&x[EXC..VHZ]);
        self.exciter.project(&mut ex);
        x[EXC..VHZ].copy_from_slice(&ex.to_array());
        gov.project(&mut x[GOV..]);
        let input = gov.delay_input(&x[GOV..]);
        let delayed = delay.lookup((t1, input));
        delay.push(t1, input);
        let mut dx = vec![0.0; self.n];
        let aux = self.rhs(net, v_ref, omega_ref, x, delayed, &mut dx);
        let mut reset = false;
        if self.params.vhz.enabled && aux.vhz_err <= 0.0 && x[VHZ] != 0.0 {
            x[VHZ] = 0.0;
            reset = true;
        }
        Ok((aux, reset))
    }

    /// Runs the scenario from its initial-load equilibrium.
    pub fn run(&self, scenario: &Scenario, opts: &SimOptions) -> Result<SimOutput> {
        let eq = self.equilibrium(scenario)?;
        self.run_from(scenario, opts, eq)
    }

    pub fn run_from(&self, scenario: &Scenario, opts: &SimOptions, eq: Equilibrium) -> Result<SimOutput> {
        scenario.validate()?;
        let base = self.params.base;
        let omega_ref = scenario.omega_ref(&base);
        let dt = scenario.dt;
        let n_steps = scenario.n_steps();
        let k_step = scenario.step_index();
        let mut net = self.network(eq.load)?;
        let mut x = self.pack(&eq.state);
        let mut delay = eq.state.governor.delay.clone();
        let mut rk = Rk4::new(self.n);
        let mut diag = Diagnostics::default();
        let valve = self.governor.valve_index().map(|i| GOV + i);

        let mut rec = Recorder::new(n_steps + 1, opts.record_states, self.n);
        let mut dx0 = vec![0.0; self.n];
        let delayed0 = delay.lookup((0.0, self.governor.delay_input(&x[GOV..])));
        let aux0 = self.rhs(&net, eq.v_ref, omega_ref, &x, delayed0, &mut dx0);
        rec.push(&x, &aux0);
        observe(&mut diag, &x, &aux0, valve, None, dt);

        for k in 0..n_steps {
            let t = k as f64 * dt;
            if k == k_step {
                let load = load_to_impedance(scenario.p1, scenario.q1, 1.0, &base)?;
                if load != net.load {
                    let c = net.machine.flux_to_currents(&MachineState::from_slice(&x[..EXC]));
                    let dxr = net.load.reactance() - load.reactance();
                    x[0] += dxr * c.i_d;
                    x[1] += dxr * c.i_q;
                    net = self.network(load)?;
                }
            }
            let prev_valve = valve.map(|i| x[i]);
            let (aux, reset) = self.advance(&mut rk, &net, eq.v_ref, omega_ref, &mut delay, t, dt, &mut x)?;
            rec.push(&x, &aux);
            if reset {
                diag.vhz_resets += 1;
            }
            observe(&mut diag, &x, &aux, valve, prev_valve, dt);
        }

        let series = match opts.output {
            OutputMode::Waveform => derive_channels(&rec.frames(&base, dt), scenario.f_nominal, &opts.signal)?,
            OutputMode::Direct => {
                let raw = rec.direct(&base, dt)?;
                let t0 = ((opts.signal.warmup / opts.signal.output_dt) - 1e-9).ceil() * opts.signal.output_dt;
                resample(&raw, opts.signal.output_dt, t0, raw.t_end())?
            }
        };
        let states = if opts.record_states {
            Some(rec.states(&self.governor, dt)?)
        } else {
            None
        };
        Ok(SimOutput {
            series,
            states,
            diagnostics: diag,
            equilibrium: eq,
        })
    }
}

fn observe(d: &mut Diagnostics, x: &[f64], aux: &Aux, valve: Option<usize>, prev_valve: Option<f64>, dt: f64) {
    let vr = x[EXC + 3];
    d.vr_min = d.vr_min.min(vr);
    d.vr_max = d.vr_max.max(vr);
    d.omega_min = d.omega_min.min(x[OMEGA]);
    d.omega_max = d.omega_max.max(x[OMEGA]);
    d.vhz_signal_max = d.vhz_signal_max.max(aux.vhz_sig);
    if let Some(i) = valve {
        d.valve_min = d.valve_min.min(x[i]);
        d.valve_max = d.valve_max.max(x[i]);
        if let Some(p) = prev_valve {
            let rate = (x[i] - p) / dt;
            d.valve_rate_min = d.valve_rate_min.min(rate);
            d.valve_rate_max = d.valve_rate_max.max(rate);
        }
    }
}

/// Per-step record of the quantities needed for the outputs.
struct Recorder {
    v_d: Vec<f64>,
    v_q: Vec<f64>,
    i_d: Vec<f64>,
    i_q: Vec<f64>,
    delta: Vec<f64>,
    omega: Vec<f64>,
    extra: Option<(Vec<Vec<f64>>, Vec<[f64; 4]>)>,
}

impl Recorder {
    fn new(n: usize, states: bool, n_states: usize) -> Self {
        let v = || Vec::with_capacity(n);
        Self {
            v_d: v(),
            v_q: v(),
            i_d: v(),
            i_q: v(),
            delta: v(),
            omega: v(),
            extra: states.then(|| (vec![Vec::with_capacity(n); n_states], Vec::with_capacity(n))),
        }
    }

    fn push(&mut self, x: &[f64], a: &Aux) {
        self.v_d.push(a.v_d);
        self.v_q.push(a.v_q);
        self.i_d.push(a.i_d);
        self.i_q.push(a.i_q);
        self.delta.push(x[DELTA]);
        self.omega.push(x[OMEGA]);
        if let Some((cols, alg)) = &mut self.extra {
            for (c, v) in cols.iter_mut().zip(x) {
                c.push(*v);
            }
            alg.push([a.v_t, a.p_m, a.t_e, a.vhz_sig]);
        }
    }

    fn frames(&self, base: &PerUnitBase, dt: f64) -> ThreePhaseFrames {
        let n = self.v_d.len();
        let wb = base.omega_base();
        let vk = 2f64.sqrt() * base.v_base;
        let ik = 2f64.sqrt() * base.i_base();
        let mut f = ThreePhaseFrames::with_capacity(0.0, dt, n);
        let shifts = [0.0, -2.0 * PI / 3.0, 2.0 * PI / 3.0];
        for k in 0..n {
            let th = wb * k as f64 * dt + self.delta[k];
            let ph = |d: f64, q: f64, s: f64| d * (th + s).cos() - q * (th + s).sin();
            f.push(
                shifts.map(|s| vk * ph(self.v_d[k], self.v_q[k], s)),
                shifts.map(|s| ik * ph(self.i_d[k], self.i_q[k], s)),
            );
        }
        f
    }

    fn direct(&self, base: &PerUnitBase, dt: f64) -> Result<TimeSeries> {
        let n = self.v_d.len();
        let sk = base.s_base / 1e3;
        let p = (0..n)
            .map(|k| sk * (self.v_d[k] * self.i_d[k] + self.v_q[k] * self.i_q[k]))
            .collect();
        let q = (0..n)
            .map(|k| sk * (self.v_q[k] * self.i_d[k] - self.v_d[k] * self.i_q[k]))
            .collect();
        let v = (0..n)
            .map(|k| base.v_base * self.v_d[k].hypot(self.v_q[k]))
            .collect();
        let f = self.omega.iter().map(|w| w * base.f_base).collect();
        TimeSeries::new(0.0, dt)?
            .with_channel("P", p)?
            .with_channel("Q", q)?
            .with_channel("V", v)?
            .with_channel("f", f)
    }

    fn states(&self, gov: &Governor, dt: f64) -> Result<TimeSeries> {
        let (cols, alg) = self.extra.as_ref().expect("state recording enabled");
        let mut names: Vec<String> = [
            "psi_d", "psi_q", "psi_fd", "psi_kd", "psi_kq1", "psi_kq2", "omega", "delta", "v_meas",
            "pid_integrator", "pid_derivative", "v_r", "efd", "feedback", "vhz_integrator",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for i in 0..gov.n_states() {
            names.push(if Some(i) == gov.valve_index() {
                "valve".to_string()
            } else {
                format!("gov_x{i}")
            });
        }
        let mut ts = TimeSeries::new(0.0, dt)?;
        for (name, c) in names.into_iter().zip(cols) {
            ts.insert(name, c.clone())?;
        }
        for (name, v) in [("v_d", &self.v_d), ("v_q", &self.v_q), ("i_d", &self.i_d), ("i_q", &self.i_q)] {
            ts.insert(name, v.clone())?;
        }
        for (j, name) in ["v_t", "p_m", "t_e", "vhz_signal"].iter().enumerate() {
            ts.insert(*name, alg.iter().map(|a| a[j]).collect())?;
        }
        Ok(ts)
    }
}

/// Equilibrium at the scenario's initial load.
pub fn initialize_steady_state(scenario: &Scenario, params: &ModelParams, kind: GovernorKind) -> Result<Equilibrium> {
    System::new(params, kind)?.equilibrium(scenario)
}

/// Runs the full load-step scenario.
pub fn simulate(scenario: &Scenario, params: &ModelParams, kind: GovernorKind, opts: &SimOptions) -> Result<SimOutput> {
    System::new(params, kind)?.run(scenario, opts)
}

/// Settling summary of a frequency response after the step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub p_final: f64,
    pub q_final: f64,
    pub v_final: f64,
    pub f_final: f64,
    pub f_nadir: f64,
    pub t_nadir: f64,
    /// Time after which `f` stays within `band` Hz of nominal.
    pub t_settle: Option<f64>,
}

/// Final values are averaged over the last `tail` seconds.
pub fn summarize_step(series: &TimeSeries, scenario: &Scenario, band: f64, tail: f64) -> Result<StepSummary> {
    let end = series.t_end();
    let r = series.index_range(end - tail, end);
    let mean = |name: &str| -> Result<f64> {
        let y = &series.require(name)?[r.clone()];
        Ok(y.iter().sum::<f64>() / y.len() as f64)
    };
    let f = series.require("f")?;
    let after = series.index_range(scenario.t_step, end);
    if after.is_empty() {
        return Err(Error::EmptyWindow("no samples after the load step".into()));
    }
    let (k_nadir, f_nadir) = after
        .clone()
        .map(|k| (k, f[k]))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    let last_out = after.clone().rev().find(|&k| (f[k] - scenario.f_nominal).abs() > band);
    let t_settle = match last_out {
        None => Some(scenario.t_step),
        Some(k) if k + 1 < after.end => Some(series.time(k + 1)),
        Some(_) => None,
    };
    Ok(StepSummary {
        p_final: mean("P")?,
        q_final: mean("Q")?,
        v_final: mean("V")?,
        f_final: mean("f")?,
        f_nadir,
        t_nadir: series.time(k_nadir),
        t_settle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_conversion_examples() {
        let b = PerUnitBase::default();
        let LoadImpedance::Series { r, x } = load_to_impedance(400.0, 0.0, 1.0, &b).unwrap() else {
            panic!()
        };
        assert!((r - 1.0).abs() < 1e-12 && x == 0.0);
        let LoadImpedance::Series { r, x } = load_to_impedance(0.0, 400.0, 1.0, &b).unwrap() else {
            panic!()
        };
        assert!(r == 0.0 && (x - 1.0).abs() < 1e-12);
        let z = load_to_impedance(240.0, 160.0, 1.0, &b).unwrap();
        let y = z.admittance();
        assert!((y - Complex64::new(0.6, -0.4)).norm() < 1e-12);
        // back-substitution S = v² y*
        let s = y.conj();
        assert!((s.re - 0.6).abs() < 1e-12 && (s.im - 0.4).abs() < 1e-12);
        assert_eq!(load_to_impedance(0.0, 0.0, 1.0, &b).unwrap(), LoadImpedance::Open);
    }

    #[test]
    fn scenario_validation() {
        let mut s = Scenario::default();
        s.validate().unwrap();
        s.dt = 2e-3;
        assert!(s.validate().is_err());
        let s = Scenario {
            t_step: 6.0,
            ..Default::default()
        };
        assert!(s.validate().is_err());
        let s = Scenario {
            q1: -1.0,
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn equilibrium_residual_small_all_governors() {
        let p = ModelParams::default();
        for kind in GovernorKind::ALL {
            let eq = initialize_steady_state(&Scenario::default(), &p, kind).unwrap();
            assert!(eq.residual < 1e-8, "{kind}: {}", eq.residual);
            assert!((eq.p_m - 0.2).abs() < 2e-3, "{kind}: {}", eq.p_m);
        }
    }

    #[test]
    fn no_load_equilibrium_runs_at_no_load_fuel() {
        let p = ModelParams::default();
        let s = Scenario {
            p0: 0.0,
            q0: 0.0,
            ..Default::default()
        };
        for kind in [GovernorKind::Ggov1, GovernorKind::Ggov1d] {
            let sys = System::new(&p, kind).unwrap();
            let eq = sys.equilibrium(&s).unwrap();
            assert!((eq.state.machine.omega - 1.0).abs() < 1e-10);
            let valve = eq.state.governor.x[sys.governor().valve_index().unwrap()];
            let w_fnl = if kind == GovernorKind::Ggov1 { p.gov.ggov1.w_fnl } else { p.gov.ggov1d.w_fnl };
            assert!((valve - w_fnl).abs() < 1e-9, "{valve}");
        }
    }

    #[test]
    fn steady_power_balance() {
        let p = ModelParams::default();
        let sys = System::new(&p, GovernorKind::Degov).unwrap();
        let eq = sys.equilibrium(&Scenario::default()).unwrap();
        let m = &eq.state.machine;
        let net = sys.network(eq.load).unwrap();
        let c = net.machine.flux_to_currents(m);
        let LoadImpedance::Series { r, .. } = eq.load else { panic!() };
        let p_load = r * (c.i_d * c.i_d + c.i_q * c.i_q);
        let losses = p.machine.r_s * (c.i_d * c.i_d + c.i_q * c.i_q);
        assert!((p_load - (eq.p_m - losses)).abs() < 1e-3);
    }
}
