//! First-order building blocks shared by the governor models.
//!
//! A non-positive denominator time constant turns a block into a
//! pass-through; its state is then unused.

/// Output of `1/(1 + t s)` with state `x`.
#[inline]
pub fn lag_out(x: f64, u: f64, t: f64) -> f64 {
    if t > 0.0 {
        x
    } else {
        u
    }
}

#[inline]
pub fn lag_deriv(x: f64, u: f64, t: f64) -> f64 {
    if t > 0.0 {
        (u - x) / t
    } else {
        0.0
    }
}

/// Output of `(1 + tn s)/(1 + td s)` realized as
/// `y = (tn/td) u + (1 - tn/td) x`, `x' = (u - x)/td`.
#[inline]
pub fn lead_lag_out(x: f64, u: f64, tn: f64, td: f64) -> f64 {
    if td > 0.0 {
        let r = tn / td;
        r * u + (1.0 - r) * x
    } else {
        u
    }
}

#[inline]
pub fn lead_lag_deriv(x: f64, u: f64, td: f64) -> f64 {
    lag_deriv(x, u, td)
}

/// Rate-limited integrator derivative with position limits `[lo, hi]`.
#[inline]
pub fn limited_rate(rate: f64, pos: f64, rate_lo: f64, rate_hi: f64, lo: f64, hi: f64) -> f64 {
    let r = rate.clamp(rate_lo, rate_hi);
    if (pos >= hi && r > 0.0) || (pos <= lo && r < 0.0) {
        0.0
    } else {
        r
    }
}
