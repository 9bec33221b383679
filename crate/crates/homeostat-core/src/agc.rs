//! The gain-control loop around the synapse: a bang-bang comparator and the
//! ultra-slow threshold integrator it steers.
//!
//! The comparator watches the synaptic current against a reference and
//! produces a single bit `sw`. While `sw` is high the leakage cell charges
//! the threshold node up (which scales the synapse gain down); while low it
//! discharges the node. The cell's current is picoamp to attoamp scale on a
//! picofarad, so the node ramps at microvolts to millivolts per second and
//! the loop closes over minutes to days. Around the set point the bit keeps
//! alternating, which is the intended limit cycle, not a defect.

use crate::device::{llc_channel_current, DeviceError, DeviceParams};
use core::fmt;

/// Comparator configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields, default)
)]
pub struct ComparatorParams {
    /// Reference current (A) the loop regulates toward.
    pub i_ref: f64,
    /// Relative dead band half-width; 0 is a hard comparator. With h > 0
    /// the output only flips outside `i_ref * (1 -+ h)`.
    pub hysteresis: f64,
}

impl Default for ComparatorParams {
    fn default() -> Self {
        ComparatorParams {
            i_ref: 20e-9,
            hysteresis: 0.0,
        }
    }
}

/// One comparator decision. Ties (inside the dead band, or exactly at the
/// reference when the band is zero) keep the previous output.
pub fn comparator(i_syn: f64, prev_sw: bool, p: &ComparatorParams) -> bool {
    if i_syn > p.i_ref * (1.0 + p.hysteresis) {
        true
    } else if i_syn < p.i_ref * (1.0 - p.hysteresis) {
        false
    } else {
        prev_sw
    }
}

/// How the threshold node's ramp rates are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum LlcMode {
    /// Rates derived from the leakage-cell channel model at the configured
    /// gate bias and reference drops.
    ChannelModel,
    /// Degenerate mode: fixed rate magnitudes (V/s), no device model.
    FixedSlope { up: f64, down: f64 },
}

/// Leakage-cell configuration.
///
/// The defaults place the drain servo mid-rail and choose the upper
/// reference so the charge and discharge magnitudes match exactly under the
/// channel model. Plain symmetric spacing does not do that: the pair closer
/// to the rail conducts more by `exp(spacing/u_t)`, a factor of ~48 for
/// 100 mV spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields, default)
)]
pub struct LlcParams {
    /// Threshold-node capacitor (F).
    pub c_f: f64,
    /// Source servo target while discharging the gain (V).
    pub v_ref_l: f64,
    /// Drain servo target (V); also the reset level of the threshold node.
    pub v_ref_m: f64,
    /// Source servo target while restoring the gain (V).
    pub v_ref_h: f64,
    /// Gate bias of the leakage cell (V); sets the ramp magnitude.
    pub v_g: f64,
    /// Stray constant current into the threshold node (A), signed; models
    /// residual gate leakage of the downstream stage. Zero by default.
    pub i_parasitic: f64,
    pub mode: LlcMode,
}

impl Default for LlcParams {
    fn default() -> Self {
        LlcParams {
            c_f: 1e-12,
            v_ref_l: 0.8,
            v_ref_m: 0.9,
            // 0.9 + u_t * ln(2 - exp(-0.1/u_t)): equalizes the up and down
            // ramp magnitudes under the channel model.
            v_ref_h: 9.176464279001377e-1,
            v_g: 0.9,
            i_parasitic: 0.0,
            mode: LlcMode::ChannelModel,
        }
    }
}

/// Loop state: the threshold-node voltage and the comparator bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgcState {
    /// Threshold-node voltage (V), in [0, v_dd].
    pub v_thr: f64,
    /// Last comparator output.
    pub sw: bool,
    /// True while the node sits clamped at a rail.
    pub saturated: bool,
}

impl AgcState {
    pub fn new(v_thr: f64) -> Self {
        AgcState {
            v_thr,
            sw: false,
            saturated: false,
        }
    }
}

/// Re-initialize the threshold node to the drain reference, the hardware
/// reset level. The comparator bit is left alone; the next loop tick
/// recomputes it from the live currents.
pub fn reset(state: &mut AgcState, llc: &LlcParams) {
    state.v_thr = llc.v_ref_m;
    state.saturated = false;
}

/// Ramp rates of the threshold node, precomputed once per run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlcSlopes {
    /// Magnitude while sw is high (V/s).
    pub up: f64,
    /// Magnitude while sw is low (V/s).
    pub down: f64,
    /// Signed stray drift from `i_parasitic` (V/s), applied regardless of
    /// sw.
    pub drift: f64,
    /// Upper clamp of the node (v_dd).
    pub v_max: f64,
}

impl LlcSlopes {
    /// Evaluate the configured mode. In channel mode the up rate uses the
    /// (v_ref_l, v_ref_m) terminal pair and the down rate the (v_ref_h,
    /// v_ref_m) pair, both at the common gate bias.
    pub fn new(llc: &LlcParams, dev: &DeviceParams) -> Result<Self, DeviceError> {
        let (up, down) = match llc.mode {
            LlcMode::ChannelModel => {
                let i_up = llc_channel_current(llc.v_g, llc.v_ref_l, llc.v_ref_m, dev)?;
                let i_down = llc_channel_current(llc.v_g, llc.v_ref_h, llc.v_ref_m, dev)?;
                (abs(i_up) / llc.c_f, abs(i_down) / llc.c_f)
            }
            LlcMode::FixedSlope { up, down } => (up, down),
        };
        Ok(LlcSlopes {
            up,
            down,
            drift: llc.i_parasitic / llc.c_f,
            v_max: dev.v_dd,
        })
    }
}

fn abs(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        x
    }
}

/// Advance the threshold node by `dt` seconds given the comparator bit.
/// Returns the new voltage and whether it is clamped at a rail.
pub fn llc_update(v_thr: f64, sw: bool, slopes: &LlcSlopes, dt: f64) -> (f64, bool) {
    let rate = if sw { slopes.up } else { -slopes.down } + slopes.drift;
    let v = v_thr + rate * dt;
    if v <= 0.0 {
        (0.0, true)
    } else if v >= slopes.v_max {
        (slopes.v_max, true)
    } else {
        (v, false)
    }
}

/// Convenience error wrapper for loop construction.
#[derive(Debug, Clone, PartialEq)]
pub enum AgcError {
    Device(DeviceError),
}

impl fmt::Display for AgcError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgcError::Device(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for AgcError {}
