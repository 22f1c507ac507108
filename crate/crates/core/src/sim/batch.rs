//! Batch bookkeeping for time-average statistics.

/// Splits `[warmup, horizon)` into equal batches.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Batches {
    warmup: f64,
    horizon: f64,
    len: f64,
    count: usize,
}

impl Batches {
    pub(crate) fn new(warmup: f64, horizon: f64, count: u32) -> Self {
        Self {
            warmup,
            horizon,
            len: (horizon - warmup) / f64::from(count),
            count: count as usize,
        }
    }

    pub(crate) fn count(&self) -> usize {
        self.count
    }

    /// Batch holding the instant `t`, if it lies in the observation window.
    pub(crate) fn of(&self, t: f64) -> Option<usize> {
        if t < self.warmup || t >= self.horizon {
            return None;
        }
        Some((((t - self.warmup) / self.len) as usize).min(self.count - 1))
    }

    /// Calls `credit(batch, dt)` for each piece of `[t0, t1)` inside the window.
    pub(crate) fn split(&self, t0: f64, t1: f64, mut credit: impl FnMut(usize, f64)) {
        let lo = t0.max(self.warmup);
        let hi = t1.min(self.horizon);
        if hi <= lo {
            return;
        }
        let mut b = self.of(lo).unwrap_or(self.count - 1);
        let mut cur = lo;
        while cur < hi {
            let end = if b + 1 >= self.count {
                hi
            } else {
                (self.warmup + (b + 1) as f64 * self.len).min(hi).max(cur)
            };
            if end > cur {
                credit(b, end - cur);
            }
            cur = end;
            b += 1;
        }
    }
}
