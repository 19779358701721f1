//! Solver suite for the distributionally robust, risk-averse network
//! interdiction game.
//!
//! An interdictor removes at most `B` arcs of a capacitated s–t network and
//! randomizes over removal plans to minimize the worst-case CVaR of the
//! maximum flow, where the worst case ranges over a budgeted ambiguity set of
//! scenario distributions. The crate provides
//!
//! * [`graph`]: networks, grid instances and exact max-flow with min-cut
//!   certificates,
//! * [`lp`]: a bounded-variable revised simplex with named duals and a
//!   binary branch-and-bound layer,
//! * [`risk`]: CVaR, the budgeted ambiguity set and worst-case evaluation of
//!   fixed strategies,
//! * [`master`]: the McCormick/RRLT restricted master, pricing and column
//!   generation,
//! * [`bnb`]: coordinate-descent upper bounds and the spatial branch-and-bound
//!   over the CVaR threshold,
//! * [`baseline`]: optimal deterministic plans,
//! * [`experiments`]: factor-model sampling, out-of-sample evaluation and the
//!   study driver.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, clocks and the
//! command line live in the companion `drni` crate.
#![no_std]

extern crate alloc;

pub mod baseline;
pub mod bnb;
mod error;
mod instance;
pub mod experiments;
pub mod graph;
pub mod lp;
pub mod master;
pub mod risk;

pub use error::{Error, Result};
pub use instance::Instance;

/// Wall-clock access for time limits and runtime statistics.
///
/// The core crate has no notion of time; callers that want time limits
/// supply an implementation.
pub trait Clock {
    /// Seconds elapsed since an arbitrary fixed origin.
    fn elapsed_secs(&self) -> f64;
}

/// A clock that never advances. Time limits are never hit with it.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn elapsed_secs(&self) -> f64 {
        0.0
    }
}
