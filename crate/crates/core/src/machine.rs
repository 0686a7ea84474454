//! Sixth-order dq synchronous machine (field + one d-axis damper, two
//! q-axis dampers, stator fluxes) with rotor swing dynamics.
//!
//! Generator convention: stator currents flow out of the machine. Fluxes
//! and currents are related through
//!
//! ```text
//! [psi_d, psi_kd, psi_fd]   = Ld * [-i_d, i_kd, i_fd]
//! [psi_q, psi_kq1, psi_kq2] = Lq * [-i_q, i_kq1, i_kq2]
//! ```
//!
//! Time is in seconds; flux equations carry the base angular speed.

use nalgebra::{Cholesky, Matrix2, Matrix3, SMatrix, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of entries in a packed [`MachineState`].
pub const MACHINE_STATES: usize = 8;

/// Index of rotor speed in a packed machine state.
pub const OMEGA: usize = 6;
/// Index of rotor angle in a packed machine state.
pub const DELTA: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MachineParams {
    pub l_md: f64,
    pub l_mq: f64,
    pub l_l: f64,
    pub l_lfd: f64,
    pub l_lkd: f64,
    pub l_f1d: f64,
    pub l_kq1: f64,
    pub l_kq2: f64,
    pub r_s: f64,
    pub r_fd: f64,
    pub r_kd: f64,
    pub r_kq1: f64,
    pub r_kq2: f64,
    /// Inertia constant, s.
    pub h: f64,
    pub d: f64,
}

impl Default for MachineParams {
    /// Representative 400 kVA, 4-pole, 480 V set: X'd ≈ 0.22, X''d ≈ 0.16,
    /// X''q ≈ 0.18, T'do ≈ 1.9 s.
    fn default() -> Self {
        Self {
            l_md: 2.8,
            l_mq: 1.5,
            l_l: 0.08,
            l_lfd: 0.1474,
            l_lkd: 0.1866,
            l_f1d: 0.0,
            l_kq1: 0.329,
            l_kq2: 0.159,
            r_s: 0.015,
            r_fd: 0.004115,
            r_kd: 0.0433,
            r_kq1: 0.01617,
            r_kq2: 0.0379,
            h: 0.7359,
            d: 0.0,
        }
    }
}

impl MachineParams {
    /// d-axis inductance matrix acting on `[-i_d, i_kd, i_fd]`.
    #[rustfmt::skip]
    pub fn d_matrix(&self) -> Matrix3<f64> {
        let m = self.l_md;
        let f = self.l_f1d;
        Matrix3::new(
            m + self.l_l, m, m,
            m, self.l_lkd + f + m, f + m,
            m, f + m, self.l_lfd + f + m,
        )
    }

    /// q-axis inductance matrix acting on `[-i_q, i_kq1, i_kq2]`.
    #[rustfmt::skip]
    pub fn q_matrix(&self) -> Matrix3<f64> {
        let m = self.l_mq;
        Matrix3::new(
            m + self.l_l, m, m,
            m, m + self.l_kq1, m,
            m, m, m + self.l_kq2,
        )
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("l_md", self.l_md),
            ("l_mq", self.l_mq),
            ("l_l", self.l_l),
            ("l_lfd", self.l_lfd),
            ("l_lkd", self.l_lkd),
            ("l_kq1", self.l_kq1),
            ("l_kq2", self.l_kq2),
            ("r_s", self.r_s),
            ("r_fd", self.r_fd),
            ("r_kd", self.r_kd),
            ("r_kq1", self.r_kq1),
            ("r_kq2", self.r_kq2),
            ("h", self.h),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::DegenerateParameters(format!(
                    "machine {name} must be positive, got {v}"
                )));
            }
        }
        if !(self.l_f1d.is_finite() && self.d.is_finite() && self.d >= 0.0) {
            return Err(Error::DegenerateParameters(
                "machine l_f1d must be finite and d non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Flux linkages plus rotor speed (pu) and rotor angle (rad).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MachineState {
    pub psi_d: f64,
    pub psi_q: f64,
    pub psi_fd: f64,
    pub psi_kd: f64,
    pub psi_kq1: f64,
    pub psi_kq2: f64,
    pub omega: f64,
    pub delta: f64,
}

impl MachineState {
    pub fn to_array(&self) -> [f64; MACHINE_STATES] {
        [
            self.psi_d,
            self.psi_q,
            self.psi_fd,
            self.psi_kd,
            self.psi_kq1,
            self.psi_kq2,
            self.omega,
            self.delta,
        ]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            psi_d: x[0],
            psi_q: x[1],
            psi_fd: x[2],
            psi_kd: x[3],
            psi_kq1: x[4],
            psi_kq2: x[5],
            omega: x[6],
            delta: x[7],
        }
    }

    fn d_fluxes(&self) -> Vector3<f64> {
        Vector3::new(self.psi_d, self.psi_kd, self.psi_fd)
    }

    fn q_fluxes(&self) -> Vector3<f64> {
        Vector3::new(self.psi_q, self.psi_kq1, self.psi_kq2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Currents {
    pub i_d: f64,
    pub i_q: f64,
    pub i_fd: f64,
    pub i_kd: f64,
    pub i_kq1: f64,
    pub i_kq2: f64,
}

/// `T_e = psi_d * i_q - psi_q * i_d`.
pub fn electrical_torque(state: &MachineState, c: &Currents) -> f64 {
    state.psi_d * c.i_q - state.psi_q * c.i_d
}

/// Machine with factorized inductance matrices.
///
/// With `open` set, stator currents are forced to zero and the stator
/// fluxes follow the rotor algebraically.
#[derive(Debug, Clone)]
pub struct Machine {
    params: MachineParams,
    omega_b: f64,
    ld_inv: Matrix3<f64>,
    lq_inv: Matrix3<f64>,
    open: bool,
    rd_inv: Matrix2<f64>,
    rq_inv: Matrix2<f64>,
}

fn spd_inverse(m: Matrix3<f64>, axis: &str) -> Result<Matrix3<f64>> {
    Cholesky::new(m).map(|c| c.inverse()).ok_or_else(|| {
        Error::DegenerateParameters(format!("{axis}-axis inductance matrix is not positive definite"))
    })
}

fn rotor_block_inverse(m: Matrix3<f64>, axis: &str) -> Result<Matrix2<f64>> {
    let r: Matrix2<f64> = m.fixed_view::<2, 2>(1, 1).into_owned();
    Cholesky::new(r).map(|c| c.inverse()).ok_or_else(|| {
        Error::DegenerateParameters(format!("{axis}-axis rotor inductances are not positive definite"))
    })
}

impl Machine {
    pub fn new(params: MachineParams, omega_b: f64) -> Result<Self> {
        params.validate()?;
        if !(omega_b.is_finite() && omega_b > 0.0) {
            return Err(Error::InvalidInput(format!("omega_b must be positive, got {omega_b}")));
        }
        let (ld, lq) = (params.d_matrix(), params.q_matrix());
        Ok(Self {
            params,
            omega_b,
            ld_inv: spd_inverse(ld, "d")?,
            lq_inv: spd_inverse(lq, "q")?,
            open: false,
            rd_inv: rotor_block_inverse(ld, "d")?,
            rq_inv: rotor_block_inverse(lq, "q")?,
        })
    }

    pub fn params(&self) -> &MachineParams {
        &self.params
    }

    pub fn omega_b(&self) -> f64 {
        self.omega_b
    }

    pub fn is_open(&self) -> bool {
        self.open
    }

    /// Folds a series R-L branch into the stator, producing a machine whose
    /// terminals are shorted. Torque is unchanged by this augmentation.
    pub fn with_series_load(&self, r: f64, x: f64) -> Result<Self> {
        let mut p = self.params;
        p.r_s += r;
        p.l_l += x;
        Self::new(p, self.omega_b)
    }

    /// Copy of the machine with the stator open-circuited.
    pub fn open_circuited(&self) -> Self {
        Self {
            open: true,
            ..self.clone()
        }
    }

    pub fn flux_to_currents(&self, s: &MachineState) -> Currents {
        if self.open {
            let d = self.rd_inv * Vector2::new(s.psi_kd, s.psi_fd);
            let q = self.rq_inv * Vector2::new(s.psi_kq1, s.psi_kq2);
            return Currents {
                i_d: 0.0,
                i_q: 0.0,
                i_kd: d[0],
                i_fd: d[1],
                i_kq1: q[0],
                i_kq2: q[1],
            };
        }
        let d = self.ld_inv * s.d_fluxes();
        let q = self.lq_inv * s.q_fluxes();
        Currents {
            i_d: -d[0],
            i_kd: d[1],
            i_fd: d[2],
            i_q: -q[0],
            i_kq1: q[1],
            i_kq2: q[2],
        }
    }

    /// Inverse of [`Machine::flux_to_currents`] for a connected stator.
    pub fn currents_to_flux(&self, c: &Currents, omega: f64, delta: f64) -> MachineState {
        let d = self.params.d_matrix() * Vector3::new(-c.i_d, c.i_kd, c.i_fd);
        let q = self.params.q_matrix() * Vector3::new(-c.i_q, c.i_kq1, c.i_kq2);
        MachineState {
            psi_d: d[0],
            psi_kd: d[1],
            psi_fd: d[2],
            psi_q: q[0],
            psi_kq1: q[1],
            psi_kq2: q[2],
            omega,
            delta,
        }
    }

    /// Field voltage that yields 1 pu open-circuit voltage for `efd = 1`.
    pub fn v_fd_from_efd(&self, efd: f64) -> f64 {
        efd * self.params.r_fd / self.params.l_md
    }

    /// Time derivatives of the state.
    ///
    /// `v_d`, `v_q` are terminal voltages (ignored when open-circuited, see
    /// [`Machine::open_circuit_voltage`]); `t_m` is mechanical torque.
    pub fn derivatives(
        &self,
        s: &MachineState,
        v_d: f64,
        v_q: f64,
        v_fd: f64,
        t_m: f64,
    ) -> (MachineState, Currents) {
        let p = &self.params;
        let wb = self.omega_b;
        let c = self.flux_to_currents(s);
        let mut ds = MachineState {
            psi_fd: wb * (v_fd - p.r_fd * c.i_fd),
            psi_kd: -wb * p.r_kd * c.i_kd,
            psi_kq1: -wb * p.r_kq1 * c.i_kq1,
            psi_kq2: -wb * p.r_kq2 * c.i_kq2,
            ..Default::default()
        };
        if self.open {
            // with i_d = 0 the first d-axis row gives psi_d = L_md (i_kd + i_fd)
            let did = self.rd_inv * Vector2::new(ds.psi_kd, ds.psi_fd);
            let diq = self.rq_inv * Vector2::new(ds.psi_kq1, ds.psi_kq2);
            ds.psi_d = p.l_md * (did[0] + did[1]);
            ds.psi_q = p.l_mq * (diq[0] + diq[1]);
        } else {
            ds.psi_d = wb * (v_d + p.r_s * c.i_d + s.omega * s.psi_q);
            ds.psi_q = wb * (v_q + p.r_s * c.i_q - s.omega * s.psi_d);
        }
        let t_e = electrical_torque(s, &c);
        ds.omega = (t_m - t_e - p.d * (s.omega - 1.0)) / (2.0 * p.h);
        ds.delta = wb * (s.omega - 1.0);
        (ds, c)
    }

    /// Terminal voltage of an open-circuited machine given its derivative.
    pub fn open_circuit_voltage(&self, s: &MachineState, ds: &MachineState) -> (f64, f64) {
        (
            -s.omega * s.psi_q + ds.psi_d / self.omega_b,
            s.omega * s.psi_d + ds.psi_q / self.omega_b,
        )
    }

    /// Stator current derivatives implied by flux derivatives.
    pub fn current_derivatives(&self, ds: &MachineState) -> (f64, f64) {
        if self.open {
            return (0.0, 0.0);
        }
        let d = self.ld_inv * ds.d_fluxes();
        let q = self.lq_inv * ds.q_fluxes();
        (-d[0], -q[0])
    }

    /// Analytic Jacobian of [`Machine::derivatives`] with respect to the
    /// packed state, for fixed terminal voltages, field voltage, and torque.
    pub fn jacobian(&self, s: &MachineState) -> SMatrix<f64, MACHINE_STATES, MACHINE_STATES> {
        let p = &self.params;
        let wb = self.omega_b;
        let c = self.flux_to_currents(s);
        let mut j = SMatrix::<f64, MACHINE_STATES, MACHINE_STATES>::zeros();
        // packed positions of [psi_d, psi_kd, psi_fd] and [psi_q, psi_kq1, psi_kq2]
        let dpos = [0usize, 3, 2];
        let qpos = [1usize, 4, 5];
        // d(current)/d(flux): row k of the inverse, with the stator row negated
        let (ld, lq) = if self.open {
            (Matrix3::zeros(), Matrix3::zeros())
        } else {
            (self.ld_inv, self.lq_inv)
        };
        let did = |jj: usize| -ld[(0, jj)];
        let diq = |jj: usize| -lq[(0, jj)];

        let mut dte = [0.0; MACHINE_STATES];
        for (jj, &col) in dpos.iter().enumerate() {
            dte[col] -= s.psi_q * did(jj);
        }
        for (jj, &col) in qpos.iter().enumerate() {
            dte[col] += s.psi_d * diq(jj);
        }
        dte[0] += c.i_q;
        dte[1] -= c.i_d;

        if self.open {
            let rd = self.rd_inv;
            let rq = self.rq_inv;
            // rotor currents depend only on rotor fluxes
            let rotor_d = [(3usize, 0usize), (2, 1)];
            let rotor_q = [(4usize, 0usize), (5, 1)];
            let res_d = [p.r_kd, p.r_fd];
            let res_q = [p.r_kq1, p.r_kq2];
            for (r, &(row, ri)) in rotor_d.iter().enumerate() {
                for &(col, ci) in &rotor_d {
                    j[(row, col)] = -wb * res_d[r] * rd[(ri, ci)];
                }
            }
            for (r, &(row, ri)) in rotor_q.iter().enumerate() {
                for &(col, ci) in &rotor_q {
                    j[(row, col)] = -wb * res_q[r] * rq[(ri, ci)];
                }
            }
            // psi_d' = L_md (1, 1) Rd^-1 [psi_kd', psi_fd'] and likewise for q
            let wd = self.rd_inv.transpose() * Vector2::new(1.0, 1.0) * p.l_md;
            let wq = self.rq_inv.transpose() * Vector2::new(1.0, 1.0) * p.l_mq;
            for &(col, _) in &rotor_d {
                j[(0, col)] = wd[0] * j[(3, col)] + wd[1] * j[(2, col)];
            }
            for &(col, _) in &rotor_q {
                j[(1, col)] = wq[0] * j[(4, col)] + wq[1] * j[(5, col)];
            }
        } else {
            let res_d = [0.0, p.r_kd, p.r_fd];
            let res_q = [0.0, p.r_kq1, p.r_kq2];
            for (r, &row) in dpos.iter().enumerate() {
                for (jj, &col) in dpos.iter().enumerate() {
                    // stator row: +R_s * d(i_d); rotor rows: -R * d(i_rotor)
                    j[(row, col)] = if r == 0 {
                        wb * p.r_s * did(jj)
                    } else {
                        -wb * res_d[r] * ld[(r, jj)]
                    };
                }
            }
            for (r, &row) in qpos.iter().enumerate() {
                for (jj, &col) in qpos.iter().enumerate() {
                    j[(row, col)] = if r == 0 {
                        wb * p.r_s * diq(jj)
                    } else {
                        -wb * res_q[r] * lq[(r, jj)]
                    };
                }
            }
            j[(0, 1)] += wb * s.omega;
            j[(0, OMEGA)] = wb * s.psi_q;
            j[(1, 0)] -= wb * s.omega;
            j[(1, OMEGA)] = -wb * s.psi_d;
        }
        for col in 0..MACHINE_STATES {
            j[(OMEGA, col)] = -dte[col] / (2.0 * p.h);
        }
        j[(OMEGA, OMEGA)] -= p.d / (2.0 * p.h);
        j[(DELTA, OMEGA)] = wb;
        j
    }
}

/// Currents from fluxes for a connected stator.
pub fn flux_to_currents(state: &MachineState, p: &MachineParams) -> Result<Currents> {
    Ok(Machine::new(*p, 1.0)?.flux_to_currents(state))
}

/// Fluxes from currents for a connected stator.
pub fn currents_to_flux(c: &Currents, p: &MachineParams) -> MachineState {
    let d = p.d_matrix() * Vector3::new(-c.i_d, c.i_kd, c.i_fd);
    let q = p.q_matrix() * Vector3::new(-c.i_q, c.i_kq1, c.i_kq2);
    MachineState {
        psi_d: d[0],
        psi_kd: d[1],
        psi_fd: d[2],
        psi_q: q[0],
        psi_kq1: q[1],
        psi_kq2: q[2],
        omega: 1.0,
        delta: 0.0,
    }
}

/// State derivative at terminal voltages `(v_d, v_q)`, field voltage `v_fd`
/// and mechanical torque `t_m`.
pub fn machine_derivatives(
    state: &MachineState,
    v_d: f64,
    v_q: f64,
    v_fd: f64,
    t_m: f64,
    p: &MachineParams,
    omega_b: f64,
) -> Result<MachineState> {
    Ok(Machine::new(*p, omega_b)?.derivatives(state, v_d, v_q, v_fd, t_m).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const WB: f64 = 2.0 * std::f64::consts::PI * 60.0;

    /// Cramer's-rule solve, kept independent of nalgebra.
    fn cramer(a: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
        let det = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let d = det(a);
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            let mut m = a;
            for r in 0..3 {
                m[r][k] = b[r];
            }
            *o = det(m) / d;
        }
        out
    }

    fn sample_state() -> MachineState {
        MachineState {
            psi_d: 0.9,
            psi_q: -0.35,
            psi_fd: 1.4,
            psi_kd: 1.05,
            psi_kq1: -0.2,
            psi_kq2: -0.25,
            omega: 0.99,
            delta: 0.3,
        }
    }

    #[test]
    fn zero_flux_gives_zero_current() {
        let c = flux_to_currents(&MachineState::default(), &MachineParams::default()).unwrap();
        assert_eq!(c, Currents::default());
    }

    #[test]
    fn unit_stator_current_round_trip() {
        let p = MachineParams::default();
        let c0 = Currents {
            i_d: 1.0,
            ..Default::default()
        };
        let s = currents_to_flux(&c0, &p);
        let c = flux_to_currents(&s, &p).unwrap();
        assert!((c.i_d - 1.0).abs() < 1e-12);
        assert!(c.i_kd.abs() < 1e-12 && c.i_fd.abs() < 1e-12);
    }

    #[test]
    fn flux_inversion_matches_cramer() {
        let p = MachineParams::default();
        let s = sample_state();
        let c = flux_to_currents(&s, &p).unwrap();
        let ld = p.d_matrix();
        let a = [
            [ld[(0, 0)], ld[(0, 1)], ld[(0, 2)]],
            [ld[(1, 0)], ld[(1, 1)], ld[(1, 2)]],
            [ld[(2, 0)], ld[(2, 1)], ld[(2, 2)]],
        ];
        let x = cramer(a, [s.psi_d, s.psi_kd, s.psi_fd]);
        assert!((-x[0] - c.i_d).abs() < 1e-12);
        assert!((x[1] - c.i_kd).abs() < 1e-12);
        assert!((x[2] - c.i_fd).abs() < 1e-12);
    }

    #[test]
    fn non_spd_rejected() {
        let p = MachineParams {
            l_f1d: -3.0,
            ..Default::default()
        };
        assert!(matches!(Machine::new(p, WB), Err(Error::DegenerateParameters(_))));
        let p = MachineParams {
            r_s: 0.0,
            ..Default::default()
        };
        assert!(Machine::new(p, WB).is_err());
    }

    #[test]
    fn torque_examples() {
        assert_eq!(electrical_torque(&sample_state(), &Currents::default()), 0.0);
        let s = MachineState {
            psi_d: 1.0,
            ..Default::default()
        };
        let c = Currents {
            i_q: 1.0,
            ..Default::default()
        };
        assert_eq!(electrical_torque(&s, &c), 1.0);
    }

    #[test]
    fn surplus_torque_accelerates() {
        let m = Machine::new(MachineParams::default(), WB).unwrap();
        let s = sample_state();
        let c = m.flux_to_currents(&s);
        let te = electrical_torque(&s, &c);
        let (ds, _) = m.derivatives(&s, 0.0, 0.0, 0.0, te + 0.1);
        assert!(ds.omega > 0.0);
        let (ds, _) = m.derivatives(&s, 0.0, 0.0, 0.0, te - 0.1);
        assert!(ds.omega < 0.0);
    }

    fn check_jacobian(m: &Machine, s: &MachineState) {
        let (vd, vq, vfd, tm) = (0.1, 0.95, 0.002, 0.6);
        let j = m.jacobian(s);
        let x0 = s.to_array();
        let h = 1e-6;
        for col in 0..MACHINE_STATES {
            let mut xp = x0;
            let mut xm = x0;
            xp[col] += h;
            xm[col] -= h;
            let fp = m.derivatives(&MachineState::from_slice(&xp), vd, vq, vfd, tm).0.to_array();
            let fm = m.derivatives(&MachineState::from_slice(&xm), vd, vq, vfd, tm).0.to_array();
            for row in 0..MACHINE_STATES {
                let fd = (fp[row] - fm[row]) / (2.0 * h);
                let an = j[(row, col)];
                let scale = an.abs().max(1.0);
                assert!(
                    (fd - an).abs() / scale < 1e-4,
                    "J[{row},{col}]: analytic {an}, central difference {fd}"
                );
            }
        }
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let m = Machine::new(MachineParams::default(), WB).unwrap();
        check_jacobian(&m, &sample_state());
        check_jacobian(&m.with_series_load(1.15, 0.77).unwrap(), &sample_state());
        check_jacobian(&m.open_circuited(), &sample_state());
    }

    #[test]
    fn open_circuit_keeps_stator_flux_on_rotor() {
        let m = Machine::new(MachineParams::default(), WB).unwrap().open_circuited();
        let p = *m.params();
        let s = MachineState {
            psi_kd: 1.0,
            psi_fd: 1.02,
            ..Default::default()
        };
        let c = m.flux_to_currents(&s);
        assert_eq!((c.i_d, c.i_q), (0.0, 0.0));
        // the rotor rows must reproduce the supplied rotor fluxes
        let ld = p.d_matrix();
        assert!((ld[(1, 1)] * c.i_kd + ld[(1, 2)] * c.i_fd - 1.0).abs() < 1e-12);
        assert!((ld[(2, 1)] * c.i_kd + ld[(2, 2)] * c.i_fd - 1.02).abs() < 1e-12);
    }

    fn spd_params() -> impl Strategy<Value = MachineParams> {
        (
            (0.5f64..4.0, 0.3f64..3.0, 0.02f64..0.3, 0.02f64..0.5),
            (0.02f64..0.5, 0.0f64..0.1, 0.02f64..0.6, 0.02f64..0.6),
            (0.001f64..0.05, 0.001f64..0.05, 0.3f64..0.8),
        )
            .prop_map(|((md, mq, ll, lfd), (lkd, f1d, kq1, kq2), (rs, rr, h))| MachineParams {
                l_md: md,
                l_mq: mq,
                l_l: ll,
                l_lfd: lfd,
                l_lkd: lkd,
                l_f1d: f1d,
                l_kq1: kq1,
                l_kq2: kq2,
                r_s: rs,
                r_fd: rr,
                r_kd: rr * 3.0,
                r_kq1: rr * 2.0,
                r_kq2: rr * 4.0,
                h,
                d: 0.0,
            })
    }

    proptest! {
        #[test]
        fn currents_flux_round_trip(
            p in spd_params(),
            i in proptest::array::uniform6(-2.0f64..2.0),
        ) {
            let c0 = Currents { i_d: i[0], i_q: i[1], i_fd: i[2], i_kd: i[3], i_kq1: i[4], i_kq2: i[5] };
            let s = currents_to_flux(&c0, &p);
            let c = flux_to_currents(&s, &p).unwrap();
            for (a, b) in [(c.i_d, c0.i_d), (c.i_q, c0.i_q), (c.i_fd, c0.i_fd),
                           (c.i_kd, c0.i_kd), (c.i_kq1, c0.i_kq1), (c.i_kq2, c0.i_kq2)] {
                prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }

        #[test]
        fn inversion_matches_cramer_on_q_axis(
            p in spd_params(),
            psi in proptest::array::uniform3(-2.0f64..2.0),
        ) {
            let s = MachineState { psi_q: psi[0], psi_kq1: psi[1], psi_kq2: psi[2], ..Default::default() };
            let c = flux_to_currents(&s, &p).unwrap();
            let lq = p.q_matrix();
            let a = [
                [lq[(0, 0)], lq[(0, 1)], lq[(0, 2)]],
                [lq[(1, 0)], lq[(1, 1)], lq[(1, 2)]],
                [lq[(2, 0)], lq[(2, 1)], lq[(2, 2)]],
            ];
            let x = cramer(a, psi);
            prop_assert!((-x[0] - c.i_q).abs() < 1e-9);
            prop_assert!((x[1] - c.i_kq1).abs() < 1e-9);
            prop_assert!((x[2] - c.i_kq2).abs() < 1e-9);
        }
    }
}
