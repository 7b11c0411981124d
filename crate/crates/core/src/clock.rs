//! Elapsed-time source for run budgets and time series.

/// Seconds elapsed since some fixed start.
pub trait Clock {
    fn elapsed(&self) -> f64;
}

/// A clock that never advances. Runs under it are fully deterministic.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn elapsed(&self) -> f64 {
        0.0
    }
}
