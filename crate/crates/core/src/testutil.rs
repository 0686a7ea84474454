//! Independent linear-system oracle used by the unit tests: transfer
//! functions as coefficient vectors, realized in controllable canonical
//! form and integrated with a hand-written RK4.

/// `num(s) / den(s)`, coefficients from the highest power down.
#[derive(Debug, Clone)]
pub struct Tf {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl Tf {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Self {
        Self { num, den }
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn tf_mul(a: &Tf, b: &Tf) -> Tf {
    Tf::new(poly_mul(&a.num, &b.num), poly_mul(&a.den, &b.den))
}

/// Response of `tf` from rest to the sampled input `u` (held over each step).
/// Returns the output at the end of every step.
pub fn simulate_tf(tf: &Tf, u: &[f64], dt: f64) -> Vec<f64> {
    let lead = tf.den[0];
    let den: Vec<f64> = tf.den.iter().map(|d| d / lead).collect();
    let n = den.len() - 1;
    let mut num = vec![0.0; n + 1 - tf.num.len().min(n + 1)];
    num.extend(tf.num.iter().map(|b| b / lead));
    let b0 = num[0];
    // y = sum_k c_k z_k + b0 u, z_k' = z_{k+1}, z_n' = u - sum_k a_{n-k+1} z_k
    let c: Vec<f64> = (0..n).map(|k| num[n - k] - den[n - k] * b0).collect();
    let a: Vec<f64> = (0..n).map(|k| den[n - k]).collect();
    let f = |z: &[f64], uk: f64| -> Vec<f64> {
        let mut dz = vec![0.0; n];
        for k in 0..n.saturating_sub(1) {
            dz[k] = z[k + 1];
        }
        if n > 0 {
            dz[n - 1] = uk - (0..n).map(|k| a[k] * z[k]).sum::<f64>();
        }
        dz
    };
    let mut z = vec![0.0; n];
    let mut out = Vec::with_capacity(u.len());
    for &uk in u {
        let k1 = f(&z, uk);
        let z2: Vec<f64> = (0..n).map(|i| z[i] + 0.5 * dt * k1[i]).collect();
        let k2 = f(&z2, uk);
        let z3: Vec<f64> = (0..n).map(|i| z[i] + 0.5 * dt * k2[i]).collect();
        let k3 = f(&z3, uk);
        let z4: Vec<f64> = (0..n).map(|i| z[i] + dt * k3[i]).collect();
        let k4 = f(&z4, uk);
        for i in 0..n {
            z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push((0..n).map(|k| c[k] * z[k]).sum::<f64>() + b0 * uk);
    }
    out
}

#[test]
fn first_order_lag_oracle() {
    let y = simulate_tf(&Tf::new(vec![1.0], vec![0.5, 1.0]), &vec![1.0; 1000], 1e-3);
    assert!((y[999] - (1.0 - (-2.0f64).exp())).abs() < 1e-10);
}
