//! Time keeping for limits and reports.
//!
//! The default clock counts work units (simplex pivots weighted by row
//! count, created labels) and converts them to nominal seconds, so limits
//! and reported times are identical across runs and machines. The wall
//! clock is available for benchmarking.

use std::cell::Cell;
use std::time::Instant;

use serde::{Deserialize, Serialize};

/// Nominal work units per second of the deterministic clock.
pub const WORK_UNITS_PER_SECOND: f64 = 20_000_000.0;
/// Work charged per created label.
pub const LABEL_WORK: u64 = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClockMode {
    Work,
    Wall,
}

#[derive(Debug)]
pub struct Clock {
    mode: ClockMode,
    start: Instant,
    work: Cell<u64>,
}

impl Clock {
    pub fn new(mode: ClockMode) -> Self {
        Clock {
            mode,
            start: Instant::now(),
            work: Cell::new(0),
        }
    }

    pub fn mode(&self) -> ClockMode {
        self.mode
    }

    pub fn tick(&self, units: u64) {
        self.work.set(self.work.get().saturating_add(units));
    }

    pub fn work(&self) -> u64 {
        self.work.get()
    }

    /// Seconds since creation.
    pub fn elapsed(&self) -> f64 {
        match self.mode {
            ClockMode::Work => self.work.get() as f64 / WORK_UNITS_PER_SECOND,
            ClockMode::Wall => self.start.elapsed().as_secs_f64(),
        }
    }
}

impl Default for Clock {
    fn default() -> Self {
        Clock::new(ClockMode::Work)
    }
}
