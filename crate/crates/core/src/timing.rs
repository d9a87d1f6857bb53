//! Wall-clock helpers that degrade to no-ops on `wasm32`, where
//! `std::time::Instant` is unavailable.

use std::time::Duration;

#[cfg(not(target_arch = "wasm32"))]
use std::time::Instant;

/// Measures elapsed time; always reports zero on `wasm32`.
#[derive(Clone, Copy, Debug)]
pub struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch {
            #[cfg(not(target_arch = "wasm32"))]
            start: Instant::now(),
        }
    }

    pub fn elapsed(&self) -> Duration {
        #[cfg(not(target_arch = "wasm32"))]
        return self.start.elapsed();
        #[cfg(target_arch = "wasm32")]
        return Duration::ZERO;
    }

    pub fn seconds(&self) -> f64 {
        self.elapsed().as_secs_f64()
    }
}

/// An optional time limit; never expires on `wasm32`.
#[derive(Clone, Copy, Debug)]
pub struct Deadline {
    watch: Stopwatch,
    limit: Option<Duration>,
}

impl Deadline {
    pub fn after(limit: Option<Duration>) -> Self {
        Deadline {
            watch: Stopwatch::start(),
            limit,
        }
    }

    pub fn never() -> Self {
        Self::after(None)
    }

    pub fn expired(&self) -> bool {
        self.limit.is_some_and(|l| self.watch.elapsed() >= l)
    }
}
