//! Behavioral simulator of a current-mode homeostatic gain-control loop.
//!
//! The modelled circuit is a log-domain low-pass synapse whose output current
//! drives a leaky integrate-and-fire neuron. A bang-bang comparator watches
//! the synaptic current against a reference and steers an ultra-low-leakage
//! integrator that trims the synapse gain, so the loop slowly pulls the
//! neuron's firing rate back to its set point after input disturbances. The
//! leakage currents involved are in the attoampere range, which puts the
//! adaptation time scale anywhere from tens of seconds to tens of thousands
//! of seconds while the synapse itself settles in milliseconds.
//!
//! The crate is `no_std` compatible (it needs `alloc`); file formats and the
//! command-line front end live in the companion `homeostat-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]
// Validation uses `!(x > 0.0)` so that NaN fails the check; the
// `partial_cmp` form the lint suggests hides that intent.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod agc;
pub mod device;
pub mod dpi;
pub mod engine;
mod math;
pub mod neuron;
pub mod scenario;
pub mod trace;

pub use engine::{run, run_fast_equivalence, sweep, SimError};
pub use scenario::Scenario;
pub use trace::{Trace, TraceEvent, TraceRow};
