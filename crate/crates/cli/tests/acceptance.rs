//! Acceptance checks. Each criterion prints one PASS/FAIL line; the
//! process exits non-zero if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use genset_cli::commands::{cmd_compare, cmd_identify, cmd_simulate, Context};
use genset_cli::config::RunConfig;
use genset_core::excitation::{validate_dc4b, vhz_error, vhz_step, Dc4bParams, Dc4bViolation, VhzState};
use genset_core::governor::{estimate_fuel_curve, GovernorKind};
use genset_core::machine::{Currents, Machine, MachineParams, MachineState, MACHINE_STATES};
use genset_core::params::ModelParams;
use genset_core::signal::metrics::{nrmse, objective, rebound_end};
use genset_core::simengine::{load_to_impedance, simulate, summarize_step, LoadImpedance, OutputMode, Scenario, SimOptions, SimOutput};
use genset_core::surropt::{optimize, SurrOptConfig};
use genset_core::units::{PerUnitBase, TimeSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn run(kind: GovernorKind, sc: &Scenario, p: &ModelParams, output: OutputMode, record_states: bool) -> Result<SimOutput, String> {
    let opts = SimOptions {
        output,
        record_states,
        ..Default::default()
    };
    simulate(sc, p, kind, &opts).map_err(e2s)
}

// fuel curve

fn fuel_curve() -> Check {
    let base = PerUnitBase::default();
    let (k_turb, w_fnl) = (0.362, 0.12);
    let line = |p_kw: f64| (w_fnl + p_kw * 1e3 / base.engine_base / k_turb) * base.fuel_base;
    let exact: Vec<(f64, f64)> = [0.0, 80.0, 160.0, 240.0, 320.0].iter().map(|&p| (p, line(p))).collect();
    let fit = estimate_fuel_curve(&exact, &base).map_err(e2s)?;
    ensure((fit.k_turb - k_turb).abs() < 1e-12 && (fit.w_fnl - w_fnl).abs() < 1e-12, || {
        format!("exact fit gave K_turb {}, w_fnl {}", fit.k_turb, fit.w_fnl)
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let noise = Normal::new(0.0, 0.01 * base.fuel_base).expect("positive sigma");
    let trials = 1000;
    let mut hits = 0;
    for _ in 0..trials {
        let pts: Vec<(f64, f64)> = (0..20)
            .map(|k| {
                let p = 320.0 * k as f64 / 19.0;
                (p, line(p) + noise.sample(&mut rng))
            })
            .collect();
        let f = estimate_fuel_curve(&pts, &base).map_err(e2s)?;
        if (f.k_turb - k_turb).abs() <= 0.01 && (f.w_fnl - w_fnl).abs() <= 0.01 {
            hits += 1;
        }
    }
    ensure(hits * 100 >= 95 * trials, || format!("only {hits}/{trials} noisy fits within 0.01"))?;
    Ok(format!("exact to 1e-12, noisy {hits}/{trials} within 0.01"))
}

// metrics

fn metric_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(2..400);
        let m: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..250.0)).collect();
        let s: Vec<f64> = m.iter().map(|v| v + rng.gen_range(-5.0..5.0)).collect();
        let norm = rng.gen_range(0.5..300.0);
        let c = rng.gen_range(-10.0..10.0);
        let a = rng.gen_range(0.01..100.0);

        let id = nrmse(&m, &m, norm).map_err(e2s)?;
        ensure(id == 0.0, || format!("identity gave {id}"))?;

        let shifted: Vec<f64> = m.iter().map(|v| v + c).collect();
        let off = nrmse(&m, &shifted, norm).map_err(e2s)?;
        let want = c.abs() / norm;
        worst = worst.max((off - want).abs() / want.max(1.0));
        ensure((off - want).abs() <= 1e-12 * want.max(1.0), || format!("offset {off} vs {want}"))?;

        let e = nrmse(&m, &s, norm).map_err(e2s)?;
        let ms: Vec<f64> = m.iter().map(|v| v * a).collect();
        let ss: Vec<f64> = s.iter().map(|v| v * a).collect();
        let es = nrmse(&ms, &ss, norm * a).map_err(e2s)?;
        worst = worst.max((es - e).abs() / e.max(1.0));
        ensure((es - e).abs() <= 1e-12 * e.max(1.0), || format!("scaling {es} vs {e}"))?;
    }

    for _ in 0..200 {
        let n = rng.gen_range(2..200);
        let chan = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let meas: Vec<Vec<f64>> = (0..4).map(|_| chan(&mut rng)).collect();
        let sim: Vec<Vec<f64>> = (0..4).map(|_| chan(&mut rng)).collect();
        let norms: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.1..10.0));
        let mr: [&[f64]; 4] = std::array::from_fn(|k| meas[k].as_slice());
        let sr: [&[f64]; 4] = std::array::from_fn(|k| sim[k].as_slice());
        let per: Vec<f64> = (0..4).map(|k| nrmse(mr[k], sr[k], norms[k]).unwrap()).collect();
        let unit = objective(mr, sr, [1.0; 4], norms).map_err(e2s)?;
        let sum: f64 = per.iter().sum();
        worst = worst.max((unit - sum).abs());
        ensure((unit - sum).abs() <= 1e-12, || format!("unit weights {unit} vs sum {sum}"))?;

        let w1: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..3.0));
        let w2: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..3.0));
        let a = rng.gen_range(0.0..5.0);
        let w12: [f64; 4] = std::array::from_fn(|k| w1[k] + a * w2[k]);
        let g1 = objective(mr, sr, w1, norms).map_err(e2s)?;
        let g2 = objective(mr, sr, w2, norms).map_err(e2s)?;
        let g12 = objective(mr, sr, w12, norms).map_err(e2s)?;
        worst = worst.max((g12 - g1 - a * g2).abs());
        ensure((g12 - g1 - a * g2).abs() <= 1e-12 * g12.max(1.0), || {
            format!("weights not linear: {g12} vs {}", g1 + a * g2)
        })?;
    }
    Ok(format!("worst deviation {worst:.1e}"))
}

// optimizer

fn surrogate_optimizer() -> Check {
    let sphere = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let cfg = SurrOptConfig {
        max_evals: 200,
        seed: 7,
        ..Default::default()
    };
    let bounds = [(-2.0, 2.0); 5];
    let a = optimize(sphere, &bounds, &cfg).map_err(e2s)?;
    ensure(a.max_interp_error <= 1e-6, || format!("interpolation error {:.3e}", a.max_interp_error))?;
    ensure(a.g_best < 1e-2, || format!("g_best {:.3e}", a.g_best))?;
    let b = optimize(sphere, &bounds, &cfg).map_err(e2s)?;
    let same = a.history.len() == b.history.len()
        && a.history.iter().zip(&b.history).all(|(x, y)| {
            x.g.to_bits() == y.g.to_bits() && x.x.iter().zip(&y.x).all(|(u, v)| u.to_bits() == v.to_bits())
        });
    ensure(same, || "repeated run with the same seed differs".into())?;
    Ok(format!(
        "g_best {:.2e}, interpolation error {:.1e}, histories bit-identical",
        a.g_best, a.max_interp_error
    ))
}

// self-identification

fn self_identification(root: &Path) -> Check {
    let mut cfg = RunConfig::default();
    cfg.governor = GovernorKind::Ggov1d;
    cfg.scenario.dt = 2e-4;
    cfg.scenario.t_end = 5.0;
    cfg.output.dir = root.join("truth");
    cmd_simulate(&Context::new(cfg.clone())).map_err(e2s)?;
    let dataset = root.join("truth/series.csv");

    cfg.identify.dataset = Some(dataset.clone());
    cfg.identify.optimizer.max_evals = 500;
    cfg.identify.optimizer.seed = 0;
    let results: Vec<(GovernorKind, Result<f64, String>)> = std::thread::scope(|s| {
        let handles: Vec<_> = GovernorKind::ALL
            .iter()
            .map(|&kind| {
                let mut c = cfg.clone();
                c.governor = kind;
                c.output.dir = root.join(format!("id_{}", kind.name()));
                s.spawn(move || (kind, cmd_identify(&Context::new(c)).map(|r| r.g_best).map_err(e2s)))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("identification thread")).collect()
    });
    let mut g = BTreeMap::new();
    for (kind, r) in results {
        g.insert(kind.name(), r?);
    }
    let g_truth = g["ggov1d"];
    ensure(g_truth <= 0.02, || format!("ggov1d g_best {g_truth:.4}"))?;

    let mut cc = cfg.clone();
    cc.compare.dataset = Some(dataset);
    cc.output.dir = root.join("compare");
    for kind in GovernorKind::ALL {
        cc.compare
            .param_sets
            .insert(kind.name().to_string(), root.join(format!("id_{}/best_params.toml", kind.name())));
    }
    let rows = cmd_compare(&Context::new(cc), None).map_err(e2s)?;
    let winner = rows
        .iter()
        .min_by(|a, b| a.cumulative.total_cmp(&b.cumulative))
        .expect("four rows");
    let table: Vec<String> = rows.iter().map(|r| format!("{} {:.4}", r.kind.name(), r.cumulative)).collect();
    ensure(winner.kind == GovernorKind::Ggov1d, || {
        format!("{} wins the comparison: {}", winner.kind.name(), table.join(", "))
    })?;
    Ok(format!("ggov1d g_best {g_truth:.4}; compare {}", table.join(", ")))
}

// closed-loop physics

fn closed_loop(kind: GovernorKind) -> Check {
    let sc = Scenario::default();
    let p = ModelParams::default();
    let out = run(kind, &sc, &p, OutputMode::Waveform, false)?;
    let s = summarize_step(&out.series, &sc, 0.05, 0.5).map_err(e2s)?;
    ensure((s.p_final - 240.0).abs() <= 0.01 * 240.0, || format!("P settles at {:.2} kW", s.p_final))?;
    ensure((s.q_final - 160.0).abs() <= 0.02 * 160.0, || format!("Q settles at {:.2} kVAR", s.q_final))?;
    let t_settle = s.t_settle.ok_or("f does not return within 0.05 Hz")?;
    ensure(t_settle <= sc.t_step + 4.0, || format!("f settles at {t_settle:.3} s"))?;
    ensure(s.t_nadir > sc.t_step && s.t_nadir < t_settle && s.f_nadir < sc.f_nominal - 0.05, || {
        format!("nadir {:.3} Hz at {:.3} s, settled at {t_settle:.3} s", s.f_nadir, s.t_nadir)
    })?;
    Ok(format!(
        "P {:.2} kW, Q {:.2} kVAR, nadir {:.3} Hz at {:.3} s, settled at {:.3} s",
        s.p_final, s.q_final, s.f_nadir, s.t_nadir, t_settle
    ))
}

// numerical integrity

/// Every channel sampled every `stride` steps, flattened.
fn coarse_samples(ts: &TimeSeries, stride: usize) -> Vec<f64> {
    ts.channels().flat_map(|(_, v)| v.iter().step_by(stride).copied()).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn rk4_order() -> Check {
    let mut p = ModelParams::default();
    p.vhz.enabled = false;
    p.gov.simple.tau_d = 0.0;
    p.gov.degov.t_d = 0.0;
    let mut worst = f64::INFINITY;
    let mut orders = Vec::new();
    for kind in GovernorKind::ALL {
        let mut runs = Vec::new();
        for (dt, stride) in [(2e-4, 1), (1e-4, 2), (5e-5, 4)] {
            let sc = Scenario {
                p0: 80.0,
                q0: 0.0,
                p1: 120.0,
                q1: 40.0,
                t_step: 1.0,
                t_end: 2.0,
                dt,
                ..Default::default()
            };
            let out = run(kind, &sc, &p, OutputMode::Direct, true)?;
            runs.push(coarse_samples(out.states.as_ref().ok_or("states not recorded")?, stride));
        }
        let e1 = max_diff(&runs[0], &runs[1]);
        let e2 = max_diff(&runs[1], &runs[2]);
        let order = (e1 / e2).log2();
        orders.push(format!("{} {order:.2}", kind.name()));
        worst = worst.min(order);
    }
    ensure(worst >= 3.5, || format!("observed orders {}", orders.join(", ")))?;
    Ok(format!("observed orders {}", orders.join(", ")))
}

fn machine_jacobian() -> Check {
    let p = ModelParams::default();
    let sc = Scenario::default();
    let eq = genset_core::simengine::initialize_steady_state(&sc, &p, GovernorKind::Ggov1d).map_err(e2s)?;
    let base = Machine::new(MachineParams::default(), p.base.omega_base()).map_err(e2s)?;
    let mut worst = 0.0f64;
    let mut states = vec![eq.state.machine];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let mut x = eq.state.machine.to_array();
        for v in x.iter_mut() {
            *v += rng.gen_range(-0.1..0.1);
        }
        states.push(MachineState::from_slice(&x));
    }
    let heavy = match load_to_impedance(240.0, 160.0, 1.0, &p.base).map_err(e2s)? {
        LoadImpedance::Series { r, x } => (r, x),
        LoadImpedance::Open => unreachable!("non-zero load"),
    };
    let machines = [
        base.with_series_load(heavy.0, heavy.1).map_err(e2s)?,
        base.clone(),
        base.open_circuited(),
    ];
    let (vd, vq, vfd, tm) = (0.05, 0.9, 0.002, 0.4);
    for m in &machines {
        for s in &states {
            let j = m.jacobian(s);
            let x0 = s.to_array();
            let h = 1e-6;
            for col in 0..MACHINE_STATES {
                let (mut xp, mut xm) = (x0, x0);
                xp[col] += h;
                xm[col] -= h;
                let fp = m.derivatives(&MachineState::from_slice(&xp), vd, vq, vfd, tm).0.to_array();
                let fm = m.derivatives(&MachineState::from_slice(&xm), vd, vq, vfd, tm).0.to_array();
                let fd: Vec<f64> = (0..MACHINE_STATES).map(|r| (fp[r] - fm[r]) / (2.0 * h)).collect();
                let an: Vec<f64> = (0..MACHINE_STATES).map(|r| j[(r, col)]).collect();
                let scale = an.iter().chain(&fd).map(|v| v.abs()).fold(1.0, f64::max);
                let rel = max_diff(&an, &fd) / scale;
                worst = worst.max(rel);
                ensure(rel < 1e-4, || format!("column {col} differs by {rel:.2e} relative"))?;
            }
        }
    }
    Ok(format!("worst column deviation {worst:.1e}"))
}

fn flux_round_trip() -> Check {
    let m = Machine::new(MachineParams::default(), PerUnitBase::default().omega_base()).map_err(e2s)?;
    let m = m.with_series_load(1.15, 0.77).map_err(e2s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..2000 {
        let i: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let c0 = Currents {
            i_d: i[0],
            i_q: i[1],
            i_fd: i[2],
            i_kd: i[3],
            i_kq1: i[4],
            i_kq2: i[5],
        };
        let s = m.currents_to_flux(&c0, 1.0, 0.3);
        let c = m.flux_to_currents(&s);
        let a = [c.i_d, c.i_q, c.i_fd, c.i_kd, c.i_kq1, c.i_kq2];
        worst = worst.max(max_diff(&a, &i));
    }
    ensure(worst < 1e-10, || format!("round-trip error {worst:.2e}"))?;
    Ok(format!("worst error {worst:.1e}"))
}

fn flat_run() -> Check {
    let p = ModelParams::default();
    let mut worst = 0.0f64;
    for kind in GovernorKind::ALL {
        let sc = Scenario {
            p1: 80.0,
            q1: 0.0,
            t_step: 0.5,
            t_end: 1.0,
            dt: 1e-4,
            ..Default::default()
        };
        let out = run(kind, &sc, &p, OutputMode::Direct, true)?;
        let st = out.states.as_ref().ok_or("states not recorded")?;
        for (name, v) in st.channels() {
            let d = v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max);
            worst = worst.max(d);
            ensure(d < 1e-4, || format!("{} drifts by {d:.2e} in {name}", kind.name()))?;
        }
    }
    Ok(format!("largest drift {worst:.1e} pu"))
}

// exciter and limiter

fn dc4b_restrictions() -> Check {
    let ok = Dc4bParams::default();
    let flags = |p: &Dc4bParams| validate_dc4b(p).err().unwrap_or_default();
    let cases = [
        (Dc4bParams { k_f: 0.014, t_f: 0.0, k_d: 0.0, ..ok }, Dc4bViolation::FeedbackTimeConstant),
        (Dc4bParams { k_f: 0.014, t_f: 1.56, k_d: 0.5, ..ok }, Dc4bViolation::FeedbackWithDerivative),
        (Dc4bParams { efd1: 3.0, efd2: 4.0, ..ok }, Dc4bViolation::SaturationOrdering),
    ];
    for (p, want) in &cases {
        let got = flags(p);
        ensure(got.contains(want), || format!("{want:?} not flagged, got {got:?}"))?;
    }
    let clean = Dc4bParams { k_f: 0.0, t_f: 0.0, ..ok };
    ensure(validate_dc4b(&clean).is_ok(), || format!("K_f = T_f = 0 rejected: {:?}", flags(&clean)))?;
    Ok("all three restrictions flagged, K_f = T_f = 0 accepted".into())
}

fn vhz_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut resets = 0;
    for _ in 0..20_000 {
        let st = VhzState {
            integrator: if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..2.0) },
            setpoint: rng.gen_range(0.9..1.1),
        };
        let v = rng.gen_range(0.5..1.5);
        let f = rng.gen_range(0.5..1.5);
        let dt = rng.gen_range(1e-5..1e-2);
        let gain = rng.gen_range(0.0..20.0);
        let (next, sig) = vhz_step(&st, v, f, dt, gain).map_err(e2s)?;
        ensure(sig <= 0.0, || format!("positive signal {sig}"))?;
        if vhz_error(v, f, st.setpoint) <= 0.0 {
            resets += 1;
            ensure(next.integrator == 0.0 && sig == 0.0, || {
                format!("no reset: integrator {}, signal {sig}", next.integrator)
            })?;
        }
    }
    Ok(format!("20000 steps, {resets} resets"))
}

fn regulator_envelope() -> Check {
    let p = ModelParams::default();
    let (lo, hi) = (p.exciter.vr_min, p.exciter.vr_max);
    let harsh = Scenario {
        p0: 80.0,
        q0: 0.0,
        p1: 360.0,
        q1: 270.0,
        ..Default::default()
    };
    let mut vr = (f64::INFINITY, f64::NEG_INFINITY);
    let mut vhz_max = f64::NEG_INFINITY;
    for kind in GovernorKind::ALL {
        for sc in [Scenario::default(), harsh] {
            let d = run(kind, &sc, &p, OutputMode::Direct, false)?.diagnostics;
            vr = (vr.0.min(d.vr_min), vr.1.max(d.vr_max));
            vhz_max = vhz_max.max(d.vhz_signal_max);
        }
    }
    ensure(vr.0 >= lo && vr.1 <= hi, || format!("v_r spans [{:.3}, {:.3}] outside [{lo}, {hi}]", vr.0, vr.1))?;
    ensure(vhz_max <= 0.0, || format!("V/Hz signal reached {vhz_max}"))?;
    Ok(format!("v_r in [{:.3}, {:.3}], V/Hz signal max {vhz_max:.2e}", vr.0, vr.1))
}

// GGOV1 against GGOV1D

fn actuator_order_matters() -> Check {
    let mut p = ModelParams::default();
    let d = p.gov.ggov1d;
    let g = &mut p.gov.ggov1;
    g.k_turb = d.k_turb;
    g.t_b = d.t_b;
    g.t_c = d.t_c;
    g.w_fnl = d.w_fnl;
    g.maxerr = d.maxerr;
    g.minerr = d.minerr;
    g.valve_open = d.valve_open;
    g.valve_close = d.valve_close;
    let sc = Scenario::default();
    let a = run(GovernorKind::Ggov1, &sc, &p, OutputMode::Waveform, false)?.series;
    let b = run(GovernorKind::Ggov1d, &sc, &p, OutputMode::Waveform, false)?.series;
    let (t0, t1) = rebound_end(&b, "f", sc.t_step, sc.f_nominal, 0.999)
        .map_err(e2s)?
        .ok_or("ggov1d trace has no rebound")?;
    let r = b.index_range(t0, t1);
    let fa = &a.require("f").map_err(e2s)?[r.clone()];
    let fb = &b.require("f").map_err(e2s)?[r];
    let dmax = max_diff(fa, fb);
    ensure(dmax > 0.0, || "identical frequency traces".into())?;
    Ok(format!("max |df| {dmax:.4} Hz over [{t0:.3}, {t1:.3}] s"))
}

struct Report {
    failed: usize,
}

impl Report {
    fn check(&mut self, name: &str, limit: Duration, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let r = f();
        let el = start.elapsed();
        let r = r.and_then(|m| {
            if el <= limit {
                Ok(m)
            } else {
                Err(format!("{m}; took {:.1} s, limit {:.0} s", el.as_secs_f64(), limit.as_secs_f64()))
            }
        });
        match r {
            Ok(m) => println!("PASS {name}: {m} ({:.2} s)", el.as_secs_f64()),
            Err(m) => {
                self.failed += 1;
                println!("FAIL {name}: {m} ({:.2} s)", el.as_secs_f64());
            }
        }
    }
}

fn main() {
    let secs = Duration::from_secs;
    let tmp = tempfile::tempdir().expect("temporary directory");
    let mut rep = Report { failed: 0 };
    rep.check("fuel curve recovery", secs(1), fuel_curve);
    rep.check("metric suite", secs(1), metric_suite);
    rep.check("surrogate optimizer", secs(30), surrogate_optimizer);
    for kind in GovernorKind::ALL {
        rep.check(&format!("closed-loop physics ({})", kind.name()), secs(60), || closed_loop(kind));
    }
    rep.check("RK4 self-convergence", secs(600), rk4_order);
    rep.check("machine Jacobian", secs(60), machine_jacobian);
    rep.check("flux/current round trip", secs(60), flux_round_trip);
    rep.check("flat-run drift", secs(600), flat_run);
    rep.check("DC4B restrictions", secs(60), dc4b_restrictions);
    rep.check("V/Hz limiter", secs(60), vhz_properties);
    rep.check("regulator output limits", secs(600), regulator_envelope);
    rep.check("GGOV1 vs GGOV1D rebound", secs(600), actuator_order_matters);
    rep.check("self-identification", secs(1800), || self_identification(tmp.path()));
    println!("{} failed", rep.failed);
    if rep.failed > 0 {
        std::process::exit(1);
    }
}
