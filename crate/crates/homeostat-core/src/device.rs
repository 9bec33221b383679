//! Weak-inversion device models for the gain stage and the leakage cell.
//!
//! Two primitives live here. The first is the translinear gain law that maps
//! the threshold-bias voltage `v_thr` to the synapse gain current `i_gain`.
//! The second is the channel current of the leakage-cell p-FET, whose source
//! and drain are servoed to reference voltages while its gate bias sets the
//! current magnitude, down to attoamperes. Both are pure exponentials in the
//! terminal voltages, so every routine guards its exponent arguments against
//! non-physical parameter combinations instead of silently overflowing.

use crate::math;
use core::fmt;

/// Hard cap on the magnitude of any argument handed to `exp`.
///
/// `exp(200)` is about 7.2e86, far beyond any current this model can mean;
/// arguments past the cap indicate broken parameters (for example a thermal
/// voltage of microvolts) and are reported instead of evaluated.
pub const EXP_ARG_LIMIT: f64 = 200.0;

/// Process and bias constants shared by every device in the loop.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields, default)
)]
pub struct DeviceParams {
    /// Thermal voltage kT/q (V).
    pub u_t: f64,
    /// Subthreshold slope factor (dimensionless, 0 < kappa <= 1).
    pub kappa: f64,
    /// Supply rail (V). All node voltages live in [0, v_dd].
    pub v_dd: f64,
    /// Gain-stage scale current (A): the value of `i_gain` at v_thr = v_dd.
    pub i_0_gain: f64,
    /// Leakage-cell scale current (A): channel current prefactor.
    pub i_0_llc: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        DeviceParams {
            u_t: 0.02585,
            kappa: 0.7,
            // Chosen so that v_thr = 1.46 V biases the gain stage at
            // 0.6667 nA, the operating point used by the bundled scenarios.
            v_dd: 1.8,
            i_0_gain: 6.689218875750275e-14,
            i_0_llc: 1e-13,
        }
    }
}

/// Failure modes of the device evaluations.
#[derive(Debug, Clone, PartialEq)]
pub enum DeviceError {
    /// A terminal voltage fell outside its allowed interval.
    VoltageRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    /// An exponent argument exceeded [`EXP_ARG_LIMIT`]; the parameter set is
    /// not physical.
    NonPhysical { name: &'static str, exponent: f64 },
    /// A current that must be strictly positive was not.
    NonPositiveCurrent { name: &'static str, value: f64 },
    /// The requested leakage slope cannot be reached by any gate bias in
    /// [0, v_dd]; `lo` and `hi` are the reachable slope bounds (V/s).
    SlopeUnreachable { target: f64, lo: f64, hi: f64 },
}

impl fmt::Display for DeviceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeviceError::VoltageRange { name, value, lo, hi } => {
                write!(f, "{name} = {value} V outside [{lo}, {hi}] V")
            }
            DeviceError::NonPhysical { name, exponent } => {
                write!(
                    f,
                    "{name}: exponent magnitude {exponent} exceeds cap {EXP_ARG_LIMIT}, \
                     parameters are not physical"
                )
            }
            DeviceError::NonPositiveCurrent { name, value } => {
                write!(f, "{name} = {value} A must be > 0")
            }
            DeviceError::SlopeUnreachable { target, lo, hi } => {
                write!(
                    f,
                    "slope {target} V/s not reachable, gate bias covers [{lo}, {hi}] V/s"
                )
            }
        }
    }
}

impl core::error::Error for DeviceError {}

fn checked_exp(arg: f64, name: &'static str) -> Result<f64, DeviceError> {
    if !(math::abs(arg) <= EXP_ARG_LIMIT) {
        return Err(DeviceError::NonPhysical { name, exponent: arg });
    }
    Ok(math::exp(arg))
}

/// Gain current as a function of the threshold-bias voltage (A).
///
/// `i_gain = i_0_gain * exp(kappa * (v_dd - v_thr) / u_t)`, strictly
/// decreasing in `v_thr`. Raising `v_thr` therefore scales the synapse gain
/// down, which is the sign the control loop needs: the integrator pushes
/// `v_thr` up exactly when the synaptic current is above its reference.
pub fn igain_from_vthr(v_thr: f64, p: &DeviceParams) -> Result<f64, DeviceError> {
    if !(v_thr >= 0.0 && v_thr <= p.v_dd) {
        return Err(DeviceError::VoltageRange {
            name: "v_thr",
            value: v_thr,
            lo: 0.0,
            hi: p.v_dd,
        });
    }
    let arg = p.kappa * (p.v_dd - v_thr) / p.u_t;
    Ok(p.i_0_gain * checked_exp(arg, "igain_from_vthr")?)
}

/// Inverse of [`igain_from_vthr`]: the bias voltage that yields `i_gain` (V).
///
/// Fails if `i_gain` is not strictly positive or if the implied voltage
/// falls outside [0, v_dd].
pub fn vthr_from_igain(i_gain: f64, p: &DeviceParams) -> Result<f64, DeviceError> {
    if !(i_gain > 0.0) {
        return Err(DeviceError::NonPositiveCurrent {
            name: "i_gain",
            value: i_gain,
        });
    }
    let v_thr = p.v_dd - (p.u_t / p.kappa) * math::ln(i_gain / p.i_0_gain);
    // exp/ln round trips can land a hair outside the rails; snap rounding
    // noise back before range-checking.
    let snap = 1e-12 * if p.v_dd > 1.0 { p.v_dd } else { 1.0 };
    let v_thr = if v_thr < 0.0 && v_thr >= -snap {
        0.0
    } else if v_thr > p.v_dd && v_thr <= p.v_dd + snap {
        p.v_dd
    } else {
        v_thr
    };
    if !(v_thr >= 0.0 && v_thr <= p.v_dd) {
        return Err(DeviceError::VoltageRange {
            name: "v_thr",
            value: v_thr,
            lo: 0.0,
            hi: p.v_dd,
        });
    }
    Ok(v_thr)
}

/// Source-to-drain current of the leakage-cell p-FET (A).
///
/// Standard weak-inversion expression with the bulk tied to `v_dd`:
///
/// `i_sd = i_0_llc * exp(kappa*(v_dd - v_g)/u_t)
///        * (exp(-(v_dd - v_s)/u_t) - exp(-(v_dd - v_d)/u_t))`
///
/// The sign follows `v_s - v_d` (current flows from the higher terminal to
/// the lower one), the current is exactly zero at `v_s == v_d`, and swapping
/// source and drain flips the sign without changing the magnitude. Lowering
/// the gate bias `v_g` scales the magnitude up exponentially.
pub fn llc_channel_current(
    v_g: f64,
    v_s: f64,
    v_d: f64,
    p: &DeviceParams,
) -> Result<f64, DeviceError> {
    for (name, v) in [("v_g", v_g), ("v_s", v_s), ("v_d", v_d)] {
        if !(v >= 0.0 && v <= p.v_dd) {
            return Err(DeviceError::VoltageRange {
                name,
                value: v,
                lo: 0.0,
                hi: p.v_dd,
            });
        }
    }
    let gate = checked_exp(p.kappa * (p.v_dd - v_g) / p.u_t, "llc gate factor")?;
    let source = checked_exp(-(p.v_dd - v_s) / p.u_t, "llc source factor")?;
    let drain = checked_exp(-(p.v_dd - v_d) / p.u_t, "llc drain factor")?;
    Ok(p.i_0_llc * gate * (source - drain))
}

/// Find the gate bias that makes the leakage cell ramp a capacitor `c_f`
/// (F) at `target_slope` (V/s) with its terminals held at `v_s` and `v_d`.
///
/// The slope magnitude `|i_sd(v_g)| / c_f` is strictly decreasing in `v_g`,
/// so the solve is a plain bisection on [0, v_dd], run until the achieved
/// slope matches the target to 1e-12 relative (or the interval collapses to
/// one representable value). Targets outside the reachable interval report
/// both bounds; a target that is exactly reachable only at a rail returns
/// that rail.
pub fn calibrate_vg_for_slope(
    target_slope: f64,
    c_f: f64,
    v_s: f64,
    v_d: f64,
    p: &DeviceParams,
) -> Result<f64, DeviceError> {
    if !(target_slope > 0.0) {
        return Err(DeviceError::NonPositiveCurrent {
            name: "target_slope * c_f",
            value: target_slope,
        });
    }
    if !(c_f > 0.0) {
        return Err(DeviceError::NonPositiveCurrent { name: "c_f", value: c_f });
    }
    let slope_at = |v_g: f64| -> Result<f64, DeviceError> {
        Ok(math::abs(llc_channel_current(v_g, v_s, v_d, p)?) / c_f)
    };
    let hi_slope = slope_at(0.0)?;
    let lo_slope = slope_at(p.v_dd)?;
    if !(target_slope <= hi_slope) || !(target_slope >= lo_slope) {
        return Err(DeviceError::SlopeUnreachable {
            target: target_slope,
            lo: lo_slope,
            hi: hi_slope,
        });
    }
    if target_slope == hi_slope {
        return Ok(0.0);
    }
    if target_slope == lo_slope {
        return Ok(p.v_dd);
    }
    // Invariant: slope(lo) > target > slope(hi).
    let mut lo = 0.0f64;
    let mut hi = p.v_dd;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = slope_at(mid)?;
        if math::abs(s - target_slope) <= 1e-12 * target_slope {
            return Ok(mid);
        }
        if s > target_slope {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Diagnostic gate voltage of the gain stage for a given synaptic current
/// (V), clamped to [0, v_dd]. Zero or negative current maps to `v_dd` (the
/// stage is off). Useful for comparing traces against voltage-domain
/// measurements; the loop itself never consumes this value.
pub fn v_syn_diagnostic(i_syn: f64, p: &DeviceParams) -> f64 {
    if !(i_syn > 0.0) {
        return p.v_dd;
    }
    let v = p.v_dd - (p.u_t / p.kappa) * math::ln(i_syn / p.i_0_gain);
    v.clamp(0.0, p.v_dd)
}
