//! File formats and subcommands behind the `drni` binary.

pub mod commands;
pub mod schema;

use std::time::Instant;

use drni_core::Clock;

/// Wall-clock time since construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn elapsed_secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
