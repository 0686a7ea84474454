//! Running trapezoid integral with cubic-Hermite evaluation between
//! samples, so windows may start and end at fractional sample positions.

#[derive(Debug, Clone)]
pub struct CumulativeIntegral {
    c: Vec<f64>,
    g: Vec<f64>,
    dt: f64,
}

impl CumulativeIntegral {
    pub fn new(g: &[f64], dt: f64) -> Self {
        let mut c = Vec::with_capacity(g.len());
        let mut acc = 0.0;
        for (k, &v) in g.iter().enumerate() {
            if k > 0 {
                acc += 0.5 * dt * (g[k - 1] + v);
            }
            c.push(acc);
        }
        Self {
            c,
            g: g.to_vec(),
            dt,
        }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// Integral from sample 0 to fractional sample position `pos`.
    pub fn at(&self, pos: f64) -> f64 {
        let last = self.c.len() - 1;
        let pos = pos.clamp(0.0, last as f64);
        let k = (pos.floor() as usize).min(last.saturating_sub(1));
        let s = pos - k as f64;
        if s == 0.0 || last == 0 {
            return self.c[k];
        }
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.c[k] + h10 * self.dt * self.g[k] + h01 * self.c[k + 1] + h11 * self.dt * self.g[k + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_linear_exactly() {
        let dt = 0.1;
        let g: Vec<f64> = (0..11).map(|k| 2.0 * k as f64 * dt).collect();
        let c = CumulativeIntegral::new(&g, dt);
        // ∫0^t 2s ds = t²
        for pos in [0.0, 0.5, 3.25, 9.99, 10.0] {
            let t = pos * dt;
            assert!((c.at(pos) - t * t).abs() < 1e-12, "{pos}");
        }
    }
}
