//! Log-domain low-pass synapse and the input drive that feeds it.
//!
//! In weak inversion the synapse filter is linear in its currents even
//! though every transistor is exponential: the output current obeys
//!
//! `tau_s * di_syn/dt + i_syn = i_w * i_gain / i_tau`,
//!
//! a first-order ODE whose time constant `tau_s = c_dpi * u_t / (kappa *
//! i_tau)` is set by the leak bias. With piecewise-constant inputs the exact
//! solution is a single exponential relaxation per segment, so the simulator
//! never discretizes this stage: [`step_exact`] is exact for any step size.

use crate::device::DeviceParams;
use crate::math;
use alloc::string::String;
use alloc::vec::Vec;

/// Synapse filter parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields, default)
)]
pub struct DpiParams {
    /// Filter capacitor (F).
    pub c_dpi: f64,
    /// Leak bias current (A); sets the time constant.
    pub i_tau: f64,
    /// When true the gain current is recomputed from the loop's live
    /// threshold bias each step; when false it is frozen at its initial
    /// value (open-loop studies).
    pub v_thr_link: bool,
}

impl Default for DpiParams {
    fn default() -> Self {
        DpiParams {
            c_dpi: 1e-12,
            i_tau: 1e-11,
            v_thr_link: true,
        }
    }
}

/// Synapse state: just the output current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpiState {
    /// Output current (A), never negative.
    pub i_syn: f64,
}

/// Filter time constant (s): `c_dpi * u_t / (kappa * i_tau)`.
pub fn tau_s(dpi: &DpiParams, dev: &DeviceParams) -> f64 {
    dpi.c_dpi * dev.u_t / (dev.kappa * dpi.i_tau)
}

/// Steady-state output current (A) for constant inputs: `i_w * i_gain /
/// i_tau`. Linear in the weight current and in the gain.
pub fn steady_state(i_w: f64, i_gain: f64, i_tau: f64) -> f64 {
    i_w * i_gain / i_tau
}

/// Advance the filter by `dt` seconds under constant `i_w` and `i_gain`.
///
/// Exact exponential update toward the steady state; `dt` may be any
/// non-negative value, accuracy does not depend on it. Composing two steps
/// of `dt1` and `dt2` equals one step of `dt1 + dt2` up to rounding.
pub fn step_exact(
    i_syn: f64,
    i_w: f64,
    i_gain: f64,
    dt: f64,
    dpi: &DpiParams,
    dev: &DeviceParams,
) -> f64 {
    let i_ss = steady_state(i_w, i_gain, dpi.i_tau);
    step_with_decay(i_syn, i_ss, math::exp(-dt / tau_s(dpi, dev)))
}

/// Same update with the decay factor `exp(-dt/tau_s)` precomputed; the
/// engine reuses one factor across every step of a uniform partition.
#[inline]
pub fn step_with_decay(i_syn: f64, i_ss: f64, decay: f64) -> f64 {
    i_ss + (i_syn - i_ss) * decay
}

/// One step-programmable DC current source.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct DcSegment {
    /// Time the level takes effect (s); applies from here to the next
    /// segment's start.
    pub t_start: f64,
    /// Level (A), non-negative.
    pub current: f64,
}

/// A named DC input: piecewise-constant current, zero before the first
/// segment.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct DcInput {
    pub label: String,
    pub segments: Vec<DcSegment>,
}

/// A named spike input: each spike stretches to a current pulse of fixed
/// height and duration. Windows from the same input merge rather than
/// stack (a pulse extender), while distinct inputs superpose.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct SpikeInput {
    pub label: String,
    /// Pulse height (A), the per-synapse weight current.
    pub weight: f64,
    /// Pulse width (s) following each spike.
    pub pulse_duration: f64,
    /// Spike times (s), strictly increasing.
    pub spike_times: Vec<f64>,
}

/// Everything driving the synapse. The total weight current at any time is
/// the sum over the active inputs.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields, default)
)]
pub struct WeightDrive {
    pub dc_inputs: Vec<DcInput>,
    pub spike_inputs: Vec<SpikeInput>,
}

/// Total weight current (A) at time `t`: sum of every DC level active at
/// `t` plus the pulse height of every spike input whose pulse window
/// contains `t` (windows are half-open, `[spike, spike + pulse_duration)`).
pub fn total_weight_current(drive: &WeightDrive, t: f64) -> f64 {
    let mut total = 0.0;
    for dc in &drive.dc_inputs {
        // Last segment with t_start <= t, if any.
        let idx = dc.segments.partition_point(|s| s.t_start <= t);
        if idx > 0 {
            total += dc.segments[idx - 1].current;
        }
    }
    for sp in &drive.spike_inputs {
        // Spike times are increasing, so only the latest spike at or before
        // t can still be inside its window.
        let idx = sp.spike_times.partition_point(|&s| s <= t);
        if idx > 0 && t - sp.spike_times[idx - 1] < sp.pulse_duration {
            total += sp.weight;
        }
    }
    total
}

impl WeightDrive {
    /// Every instant in `(0, horizon]` where the total current can change:
    /// DC segment starts, spike onsets and spike-window closings. Sorted,
    /// deduplicated. The engine aligns its step boundaries to these.
    pub fn change_times(&self, horizon: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut push = |t: f64| {
            if t > 0.0 && t <= horizon {
                out.push(t);
            }
        };
        for dc in &self.dc_inputs {
            for seg in &dc.segments {
                push(seg.t_start);
            }
        }
        for sp in &self.spike_inputs {
            for &s in &sp.spike_times {
                push(s);
                push(s + sp.pulse_duration);
            }
        }
        out.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite times"));
        out.dedup();
        out
    }
}
