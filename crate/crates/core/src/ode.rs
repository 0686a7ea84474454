//! Classical fourth-order Runge-Kutta with reusable scratch space.

/// Scratch buffers for [`Rk4::step`]; allocate once per simulation.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    /// Advances `x` in place from `t` to `t + h`.
    ///
    /// `f(t, x, dx)` writes the derivative into `dx`; it may fail, in which
    /// case `x` is left untouched.
    pub fn step<E, F>(&mut self, t: f64, h: f64, x: &mut [f64], mut f: F) -> Result<(), E>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    {
        let n = x.len();
        debug_assert_eq!(n, self.k1.len());
        f(t, x, &mut self.k1)?;
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k2)?;
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k3)?;
        for i in 0..n {
            self.tmp[i] = x[i] + h * self.k3[i];
        }
        f(t + h, &self.tmp, &mut self.k4)?;
        for i in 0..n {
            x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

/// Convenience wrapper for infallible right-hand sides.
pub fn rk4_step<F>(t: f64, h: f64, x: &mut [f64], mut f: F)
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut rk = Rk4::new(x.len());
    let _ = rk.step::<(), _>(t, h, x, |t, x, dx| {
        f(t, x, dx);
        Ok(())
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_fourth_order() {
        let run = |h: f64| {
            let mut x = [1.0];
            let mut rk = Rk4::new(1);
            let n = (1.0 / h).round() as usize;
            for i in 0..n {
                rk.step::<(), _>(i as f64 * h, h, &mut x, |_, x, dx| {
                    dx[0] = -x[0];
                    Ok(())
                })
                .unwrap();
            }
            (x[0] - (-1.0f64).exp()).abs()
        };
        let ratio = run(0.1) / run(0.05);
        assert!(ratio > 15.0 && ratio < 17.0, "ratio {ratio}");
    }

    #[test]
    fn time_dependent_rhs_is_exact_for_cubics() {
        // for x' = g(t) RK4 reduces to Simpson's rule, exact for x(t) = t^3
        let mut x = [0.0];
        rk4_step(0.0, 1.0, &mut x, |t, _, dx| dx[0] = 3.0 * t * t);
        assert!((x[0] - 1.0).abs() < 1e-15);
    }
}
