//! Transport delay realized as a time-stamped ring buffer with linear
//! interpolation between stored samples.

use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq)]
pub struct DelayBuffer {
    tau: f64,
    buf: VecDeque<(f64, f64)>,
}

impl DelayBuffer {
    /// Buffer whose history before `t0` is the constant `v0`.
    pub fn new(tau: f64, t0: f64, v0: f64) -> Self {
        let mut buf = VecDeque::new();
        buf.push_back((t0, v0));
        Self {
            tau: tau.max(0.0),
            buf,
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Appends an accepted sample. Non-increasing timestamps overwrite the
    /// tail so the buffer stays monotone.
    pub fn push(&mut self, t: f64, v: f64) {
        while let Some(&(tl, _)) = self.buf.back() {
            if tl >= t && self.buf.len() > 1 {
                self.buf.pop_back();
            } else {
                break;
            }
        }
        if let Some(&(tl, _)) = self.buf.back() {
            if tl >= t {
                self.buf.pop_back();
            }
        }
        self.buf.push_back((t, v));
        // keep one sample at or before the oldest time still needed
        let horizon = t - self.tau;
        while self.buf.len() > 2 && self.buf[1].0 <= horizon {
            self.buf.pop_front();
        }
    }

    /// Value at `t - tau`, where `current = (t, v)` is the not-yet-stored
    /// sample at the query time. With `tau = 0` this returns `v`.
    pub fn lookup(&self, current: (f64, f64)) -> f64 {
        if self.tau == 0.0 {
            return current.1;
        }
        let tq = current.0 - self.tau;
        let &(tl, vl) = self.buf.back().expect("delay buffer is never empty");
        if tq >= tl {
            let span = current.0 - tl;
            if span <= 0.0 {
                return current.1;
            }
            let w = ((tq - tl) / span).clamp(0.0, 1.0);
            return vl + w * (current.1 - vl);
        }
        let &(t0, v0) = self.buf.front().expect("delay buffer is never empty");
        if tq <= t0 {
            return v0;
        }
        // first stored sample strictly after tq
        let idx = self.buf.partition_point(|&(ts, _)| ts <= tq);
        let (ta, va) = self.buf[idx - 1];
        let (tb, vb) = self.buf[idx];
        va + (tq - ta) / (tb - ta) * (vb - va)
    }
}
