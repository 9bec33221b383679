//! Run descriptions: every parameter block, the drive, the schedule and the
//! initial state, plus validation and dotted-path parameter editing used by
//! sweeps.

use crate::agc::{ComparatorParams, LlcMode, LlcParams};
use crate::device::DeviceParams;
use crate::dpi::{DpiParams, WeightDrive};
use crate::neuron::{NeuronParams, RateEstimator};
use alloc::format;
use alloc::string::String;
use core::fmt;

/// Integration scheme for the neuron stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum Mode {
    /// Resolve individual spikes (step size `dt_neuron`).
    Spiking,
    /// Replace the neuron with its closed-form rate; steps grow to a tenth
    /// of the synapse time constant (capped at 10 ms) between input edges.
    Fast,
}

/// Where a run starts from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum InitialConditions {
    /// Hardware reset: threshold node at the drain reference, no synaptic
    /// current.
    #[default]
    Reset,
    /// Explicit state.
    State { i_syn: f64, v_thr: f64 },
}

/// A complete, self-contained run description.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct Scenario {
    #[cfg_attr(feature = "serde", serde(default))]
    pub device: DeviceParams,
    #[cfg_attr(feature = "serde", serde(default))]
    pub dpi: DpiParams,
    #[cfg_attr(feature = "serde", serde(default))]
    pub neuron: NeuronParams,
    #[cfg_attr(feature = "serde", serde(default))]
    pub llc: LlcParams,
    #[cfg_attr(feature = "serde", serde(default))]
    pub comparator: ComparatorParams,
    #[cfg_attr(feature = "serde", serde(default))]
    pub drive: WeightDrive,
    /// Simulated span (s).
    pub duration: f64,
    #[cfg_attr(feature = "serde", serde(default = "default_mode"))]
    pub mode: Mode,
    /// Neuron step in spiking mode (s).
    #[cfg_attr(feature = "serde", serde(default = "default_dt_neuron"))]
    pub dt_neuron: f64,
    /// Trace sampling cadence (s); one row per grid point plus the t = 0
    /// row.
    pub sample_interval: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub initial: InitialConditions,
    /// Reserved for stochastic drive generators; recorded, not consumed by
    /// the deterministic engine.
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
    /// Rate readout used for trace rows in spiking mode.
    #[cfg_attr(feature = "serde", serde(default))]
    pub rate_estimator: RateEstimator,
}

#[cfg(feature = "serde")]
fn default_mode() -> Mode {
    Mode::Fast
}

#[cfg(feature = "serde")]
fn default_dt_neuron() -> f64 {
    1e-5
}

/// A rejected configuration: which field and why.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: &str, message: impl fmt::Display) -> Self {
        ConfigError {
            field: String::from(field),
            message: format!("{message}"),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl core::error::Error for ConfigError {}

fn require(ok: bool, field: &str, message: impl fmt::Display) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::new(field, message))
    }
}

/// Ceiling on trace rows; guards against sample intervals that would
/// allocate without bound.
pub const MAX_SAMPLES: f64 = 2e7;

impl Scenario {
    /// Check every structural and physical constraint. Errors name the
    /// offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let d = &self.device;
        require(d.u_t.is_finite() && d.u_t > 0.0, "device.u_t", "must be > 0")?;
        require(
            d.kappa.is_finite() && d.kappa > 0.0 && d.kappa <= 1.0,
            "device.kappa",
            "must be in (0, 1]",
        )?;
        require(d.v_dd.is_finite() && d.v_dd > 0.0, "device.v_dd", "must be > 0")?;
        require(
            d.i_0_gain.is_finite() && d.i_0_gain > 0.0,
            "device.i_0_gain",
            "must be > 0",
        )?;
        require(
            d.i_0_llc.is_finite() && d.i_0_llc > 0.0,
            "device.i_0_llc",
            "must be > 0",
        )?;

        require(
            self.dpi.c_dpi.is_finite() && self.dpi.c_dpi > 0.0,
            "dpi.c_dpi",
            "must be > 0",
        )?;
        require(
            self.dpi.i_tau.is_finite() && self.dpi.i_tau > 0.0,
            "dpi.i_tau",
            "must be > 0",
        )?;

        let n = &self.neuron;
        require(n.c_mem.is_finite() && n.c_mem > 0.0, "neuron.c_mem", "must be > 0")?;
        require(
            n.delta_v.is_finite() && n.delta_v > 0.0,
            "neuron.delta_v",
            "must be > 0",
        )?;
        require(n.t_ref.is_finite() && n.t_ref > 0.0, "neuron.t_ref", "must be > 0")?;
        require(
            n.i_leak.is_finite() && n.i_leak >= 0.0,
            "neuron.i_leak",
            "must be >= 0",
        )?;

        let l = &self.llc;
        require(l.c_f.is_finite() && l.c_f > 0.0, "llc.c_f", "must be > 0")?;
        for (field, v) in [
            ("llc.v_ref_l", l.v_ref_l),
            ("llc.v_ref_m", l.v_ref_m),
            ("llc.v_ref_h", l.v_ref_h),
            ("llc.v_g", l.v_g),
        ] {
            require(
                v.is_finite() && v >= 0.0 && v <= d.v_dd,
                field,
                format!("must be in [0, {}]", d.v_dd),
            )?;
        }
        require(
            l.v_ref_l < l.v_ref_m && l.v_ref_m < l.v_ref_h,
            "llc.v_ref_m",
            "references must be ordered v_ref_l < v_ref_m < v_ref_h",
        )?;
        require(
            l.i_parasitic.is_finite(),
            "llc.i_parasitic",
            "must be finite",
        )?;
        if let LlcMode::FixedSlope { up, down } = l.mode {
            require(
                up.is_finite() && up >= 0.0,
                "llc.mode.fixed-slope.up",
                "must be >= 0",
            )?;
            require(
                down.is_finite() && down >= 0.0,
                "llc.mode.fixed-slope.down",
                "must be >= 0",
            )?;
        }

        let c = &self.comparator;
        require(
            c.i_ref.is_finite() && c.i_ref > 0.0,
            "comparator.i_ref",
            "must be > 0",
        )?;
        require(
            c.hysteresis.is_finite() && c.hysteresis >= 0.0 && c.hysteresis < 1.0,
            "comparator.hysteresis",
            "must be in [0, 1)",
        )?;

        for (di, dc) in self.drive.dc_inputs.iter().enumerate() {
            let mut prev = f64::NEG_INFINITY;
            for (si, seg) in dc.segments.iter().enumerate() {
                let field = format!("drive.dc_inputs[{di}].segments[{si}]");
                require(
                    seg.t_start.is_finite() && seg.t_start >= 0.0,
                    &field,
                    "t_start must be >= 0",
                )?;
                require(seg.t_start > prev, &field, "t_start must be strictly increasing")?;
                require(
                    seg.current.is_finite() && seg.current >= 0.0,
                    &field,
                    "current must be >= 0",
                )?;
                prev = seg.t_start;
            }
        }
        for (si, sp) in self.drive.spike_inputs.iter().enumerate() {
            let field = format!("drive.spike_inputs[{si}]");
            require(
                sp.weight.is_finite() && sp.weight >= 0.0,
                &field,
                "weight must be >= 0",
            )?;
            require(
                sp.pulse_duration.is_finite() && sp.pulse_duration > 0.0,
                &field,
                "pulse_duration must be > 0",
            )?;
            let mut prev = f64::NEG_INFINITY;
            for &t in &sp.spike_times {
                require(t.is_finite() && t >= 0.0, &field, "spike times must be >= 0")?;
                require(t > prev, &field, "spike times must be strictly increasing")?;
                prev = t;
            }
        }

        require(
            self.duration.is_finite() && self.duration > 0.0,
            "duration",
            "must be > 0",
        )?;
        require(
            self.dt_neuron.is_finite() && self.dt_neuron > 0.0,
            "dt_neuron",
            "must be > 0",
        )?;
        require(
            self.sample_interval.is_finite() && self.sample_interval > 0.0,
            "sample_interval",
            "must be > 0",
        )?;
        require(
            self.sample_interval >= self.dt_neuron,
            "sample_interval",
            "must be >= dt_neuron",
        )?;
        require(
            self.duration / self.sample_interval <= MAX_SAMPLES,
            "sample_interval",
            format!("would produce more than {MAX_SAMPLES} rows"),
        )?;

        if let InitialConditions::State { i_syn, v_thr } = self.initial {
            require(
                i_syn.is_finite() && i_syn >= 0.0,
                "initial.state.i_syn",
                "must be >= 0",
            )?;
            require(
                v_thr.is_finite() && v_thr >= 0.0 && v_thr <= d.v_dd,
                "initial.state.v_thr",
                format!("must be in [0, {}]", d.v_dd),
            )?;
        }

        if let RateEstimator::Windowed { window } = self.rate_estimator {
            require(
                window.is_finite() && window > 0.0,
                "rate_estimator.windowed.window",
                "must be > 0",
            )?;
        }
        Ok(())
    }

    /// Set one numeric leaf parameter by dotted path. This is the edit
    /// surface sweeps use; unknown paths are rejected by name.
    pub fn apply_param(&mut self, path: &str, value: f64) -> Result<(), ConfigError> {
        match path {
            "llc.v_g" => self.llc.v_g = value,
            "llc.slope" => match &mut self.llc.mode {
                LlcMode::FixedSlope { up, down } => {
                    *up = value;
                    *down = value;
                }
                LlcMode::ChannelModel => {
                    return Err(ConfigError::new(
                        path,
                        "needs fixed-slope mode; sweep llc.v_g in channel mode",
                    ))
                }
            },
            "llc.slope_up" => match &mut self.llc.mode {
                LlcMode::FixedSlope { up, .. } => *up = value,
                LlcMode::ChannelModel => {
                    return Err(ConfigError::new(path, "needs fixed-slope mode"))
                }
            },
            "llc.slope_down" => match &mut self.llc.mode {
                LlcMode::FixedSlope { down, .. } => *down = value,
                LlcMode::ChannelModel => {
                    return Err(ConfigError::new(path, "needs fixed-slope mode"))
                }
            },
            "llc.i_parasitic" => self.llc.i_parasitic = value,
            "comparator.i_ref" => self.comparator.i_ref = value,
            "comparator.hysteresis" => self.comparator.hysteresis = value,
            "dpi.i_tau" => self.dpi.i_tau = value,
            "neuron.i_leak" => self.neuron.i_leak = value,
            _ => {
                return Err(ConfigError::new(
                    path,
                    "unknown parameter path; known paths: llc.v_g, llc.slope, \
                     llc.slope_up, llc.slope_down, llc.i_parasitic, \
                     comparator.i_ref, comparator.hysteresis, dpi.i_tau, \
                     neuron.i_leak",
                ))
            }
        }
        Ok(())
    }
}
