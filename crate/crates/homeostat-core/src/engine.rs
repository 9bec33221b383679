//! Closed-loop time stepping.
//!
//! The timeline is partitioned at every instant where the drive can change
//! and at every sample-grid point, so each partition has constant inputs.
//! Within a partition the synapse update is exact (one cached decay factor)
//! and the step size only limits how often the gain, comparator and
//! threshold node exchange values: `dt_neuron` in spiking mode, a tenth of
//! the synapse time constant (at most [`FAST_STEP_CAP`]) in fast mode.
//!
//! Update order within one step is fixed: gain from the threshold bias,
//! synapse relaxation, neuron, comparator on the fresh output current,
//! threshold-node ramp. Changing this order changes the trace bit patterns,
//! so it is part of the reproducibility contract.

use crate::agc::{comparator, llc_update, AgcState, LlcSlopes};
use crate::device::{igain_from_vthr, v_syn_diagnostic, DeviceError};
use crate::dpi::{steady_state, step_with_decay, tau_s, total_weight_current, DpiState};
use crate::math;
use crate::neuron::{instantaneous_rate, integrate, rate_model, NeuronState};
use crate::scenario::{ConfigError, InitialConditions, Mode, Scenario};
use crate::trace::{Trace, TraceEvent, TraceRow, TraceSummary};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Largest step the fast mode will take (s), even when the synapse time
/// constant would allow more.
pub const FAST_STEP_CAP: f64 = 1e-2;

/// Relative half-width of the lock band around the comparator reference.
pub const LOCK_BAND_REL: f64 = 0.01;

/// Consecutive in-band samples required before a lock is declared.
pub const LOCK_SAMPLES: u32 = 5;

/// Longest run accepted by [`run_fast_equivalence`] (s); spiking mode gets
/// impractical beyond this.
pub const EQUIVALENCE_MAX_DURATION: f64 = 300.0;

/// Rate channels are compared only from here onward (s): the measured rate
/// needs at least two spikes before it reads anything but zero.
pub const EQUIVALENCE_RATE_WARMUP: f64 = 1.0;

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    /// Rejected before the first step.
    Config(ConfigError),
    /// A device expression left its validity range at simulated time `t`.
    NonPhysical { t: f64, source: DeviceError },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Config(e) => write!(f, "configuration rejected: {e}"),
            SimError::NonPhysical { t, source } => {
                write!(f, "non-physical state at t = {t} s: {source}")
            }
        }
    }
}

impl core::error::Error for SimError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            SimError::Config(e) => Some(e),
            SimError::NonPhysical { source, .. } => Some(source),
        }
    }
}

impl From<ConfigError> for SimError {
    fn from(e: ConfigError) -> Self {
        SimError::Config(e)
    }
}

const MARK_EVENT: u8 = 1;
const MARK_SAMPLE: u8 = 2;

/// Ordered step boundaries with their roles: drive change instants, sample
/// grid points (including t = 0) and the end of the run. Coincident
/// boundaries are merged with both roles.
fn boundaries(sc: &Scenario) -> Vec<(f64, u8)> {
    let mut marks: Vec<(f64, u8)> = Vec::new();
    marks.push((0.0, MARK_SAMPLE));
    let mut k: u64 = 1;
    loop {
        // Multiply instead of accumulating so grid points carry no running
        // rounding error.
        let t = k as f64 * sc.sample_interval;
        if t > sc.duration {
            break;
        }
        marks.push((t, MARK_SAMPLE));
        k += 1;
    }
    for t in sc.drive.change_times(sc.duration) {
        marks.push((t, MARK_EVENT));
    }
    marks.push((sc.duration, 0));
    marks.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("validated times are finite"));
    let mut merged: Vec<(f64, u8)> = Vec::with_capacity(marks.len());
    for (t, f) in marks {
        match merged.last_mut() {
            Some((tp, fp)) if *tp == t => *fp |= f,
            _ => merged.push((t, f)),
        }
    }
    merged
}

/// Run a scenario to completion.
pub fn run(sc: &Scenario) -> Result<Trace, SimError> {
    sc.validate()?;
    let dev = &sc.device;
    let tau = tau_s(&sc.dpi, dev);
    let slopes = LlcSlopes::new(&sc.llc, dev)
        .map_err(|source| SimError::NonPhysical { t: 0.0, source })?;

    let mut trace = Trace {
        rows: Vec::new(),
        events: Vec::new(),
        feedback_sign_violations: 0,
        steps: 0,
    };

    let (i_syn0, v_thr0) = match sc.initial {
        InitialConditions::Reset => {
            trace.events.push(TraceEvent::Reset { t: 0.0 });
            (0.0, sc.llc.v_ref_m)
        }
        InitialConditions::State { i_syn, v_thr } => (i_syn, v_thr),
    };
    let mut syn = DpiState { i_syn: i_syn0 };
    let mut agc = AgcState::new(v_thr0);
    agc.sw = comparator(syn.i_syn, agc.sw, &sc.comparator);
    let mut neuron = NeuronState::new();

    // With the link open the gain stays at its initial value for the whole
    // run.
    let frozen_gain = if sc.dpi.v_thr_link {
        None
    } else {
        Some(
            igain_from_vthr(agc.v_thr, dev)
                .map_err(|source| SimError::NonPhysical { t: 0.0, source })?,
        )
    };
    let gain_at = |v_thr: f64, t: f64| -> Result<f64, SimError> {
        match frozen_gain {
            Some(g) => Ok(g),
            None => igain_from_vthr(v_thr, dev)
                .map_err(|source| SimError::NonPhysical { t, source }),
        }
    };

    let cap = match sc.mode {
        Mode::Spiking => sc.dt_neuron,
        Mode::Fast => {
            let c = tau / 10.0;
            if c < FAST_STEP_CAP {
                c
            } else {
                FAST_STEP_CAP
            }
        }
    };
    let band = sc.comparator.hysteresis * sc.comparator.i_ref;

    let marks = boundaries(sc);
    let mut t_prev = 0.0_f64;
    let mut streak: u32 = 0;
    let mut streak_start = 0.0_f64;
    let mut locked = false;

    for &(tb, flags) in &marks {
        let span = tb - t_prev;
        if span > 0.0 {
            let n = (math::ceil(span / cap) as u64).max(1);
            let dt = span / n as f64;
            let decay = math::exp(-dt / tau);
            let i_w = total_weight_current(&sc.drive, t_prev);
            for i in 1..=n {
                let t_sub = t_prev + span * (i as f64 / n as f64);
                let i_gain = gain_at(agc.v_thr, t_sub)?;
                let i_ss = steady_state(i_w, i_gain, sc.dpi.i_tau);
                syn.i_syn = step_with_decay(syn.i_syn, i_ss, decay);
                if sc.mode == Mode::Spiking {
                    // Realign the neuron clock to the lattice so spike
                    // timestamps do not accumulate summation error.
                    neuron.t = t_sub - dt;
                    integrate(&mut neuron, syn.i_syn, dt, &sc.neuron);
                }
                agc.sw = comparator(syn.i_syn, agc.sw, &sc.comparator);
                let (v_new, sat) = llc_update(agc.v_thr, agc.sw, &slopes, dt);
                let dv = v_new - agc.v_thr;
                let err = syn.i_syn - sc.comparator.i_ref;
                // Outside the dead band the threshold must move with the
                // error sign (raising v_thr lowers the gain). Saturated
                // steps are pinned, not wrong.
                if !sat && dv != 0.0 && (err > band || err < -band) && (dv > 0.0) != (err > 0.0)
                {
                    trace.feedback_sign_violations += 1;
                }
                if sat != agc.saturated {
                    trace.events.push(if sat {
                        TraceEvent::SaturationEnter { t: t_sub }
                    } else {
                        TraceEvent::SaturationExit { t: t_sub }
                    });
                }
                agc.v_thr = v_new;
                agc.saturated = sat;
                trace.steps += 1;
            }
        }

        if flags & MARK_EVENT != 0 {
            let mut dc_step = false;
            for dc in &sc.drive.dc_inputs {
                for seg in &dc.segments {
                    if seg.t_start == tb {
                        trace.events.push(TraceEvent::InputStep {
                            t: tb,
                            label: dc.label.clone(),
                            current: seg.current,
                        });
                        dc_step = true;
                    }
                }
            }
            // A DC step is a disturbance: re-arm the lock detector so the
            // recovery gets its own entry event.
            if dc_step {
                locked = false;
                streak = 0;
            }
        }

        if flags & MARK_SAMPLE != 0 {
            let i_gain = gain_at(agc.v_thr, tb)?;
            let rate = match sc.mode {
                Mode::Fast => rate_model(syn.i_syn, &sc.neuron),
                Mode::Spiking => instantaneous_rate(&neuron.spike_times, tb, &sc.rate_estimator),
            };
            trace.rows.push(TraceRow {
                t: tb,
                i_syn: syn.i_syn,
                v_thr: agc.v_thr,
                i_gain,
                sw: agc.sw,
                rate,
                v_syn: v_syn_diagnostic(syn.i_syn, dev),
                saturated: agc.saturated,
            });
            let rel = math::abs(syn.i_syn - sc.comparator.i_ref) / sc.comparator.i_ref;
            if rel < LOCK_BAND_REL {
                if streak == 0 {
                    streak_start = tb;
                }
                streak += 1;
                if streak >= LOCK_SAMPLES && !locked {
                    locked = true;
                    trace.events.push(TraceEvent::LockEntry { t: streak_start });
                }
            } else {
                streak = 0;
            }
        }

        t_prev = tb;
    }

    Ok(trace)
}

/// How far apart the two integration modes land on the same scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    /// Rows compared (the sampling grids are identical by construction).
    pub rows: usize,
    /// Peak |i_syn difference| relative to the larger of the two samples,
    /// floored at the comparator reference; from the warmup point onward.
    pub max_i_syn_rel: f64,
    /// RMS difference between the measured and closed-form rate channels
    /// (Hz), from the warmup point onward.
    pub rate_rms_hz: f64,
    /// Worst single-sample rate difference (Hz) and where it occurred.
    pub max_rate_dev_hz: f64,
    pub max_rate_dev_t: f64,
    /// Warmup actually applied (s).
    pub warmup_s: f64,
}

/// Run the scenario in both modes and report how closely the fast mode
/// tracks the spiking one. Rows before [`EQUIVALENCE_RATE_WARMUP`] are
/// excluded from the rate comparison: the spike-derived estimate starts at
/// zero by construction, not by disagreement.
pub fn run_fast_equivalence(sc: &Scenario) -> Result<EquivalenceReport, SimError> {
    if !(sc.duration <= EQUIVALENCE_MAX_DURATION) {
        return Err(SimError::Config(ConfigError {
            field: String::from("duration"),
            message: alloc::format!(
                "mode-equivalence runs are capped at {EQUIVALENCE_MAX_DURATION} s"
            ),
        }));
    }
    let mut spiking = sc.clone();
    spiking.mode = Mode::Spiking;
    let mut fast = sc.clone();
    fast.mode = Mode::Fast;
    let ts = run(&spiking)?;
    let tf = run(&fast)?;
    debug_assert_eq!(ts.rows.len(), tf.rows.len());

    let mut max_i = 0.0_f64;
    let mut sum_sq = 0.0_f64;
    let mut count = 0_usize;
    let mut max_r = 0.0_f64;
    let mut max_r_t = 0.0_f64;
    for (a, b) in ts.rows.iter().zip(&tf.rows) {
        if a.t < EQUIVALENCE_RATE_WARMUP {
            continue;
        }
        let scale = {
            let m = if a.i_syn > b.i_syn { a.i_syn } else { b.i_syn };
            if m > sc.comparator.i_ref {
                m
            } else {
                sc.comparator.i_ref
            }
        };
        let di = math::abs(a.i_syn - b.i_syn) / scale;
        if di > max_i {
            max_i = di;
        }
        let dr = math::abs(a.rate - b.rate);
        sum_sq += dr * dr;
        count += 1;
        if dr > max_r {
            max_r = dr;
            max_r_t = a.t;
        }
    }
    Ok(EquivalenceReport {
        rows: ts.rows.len(),
        max_i_syn_rel: max_i,
        rate_rms_hz: if count > 0 {
            math::sqrt(sum_sq / count as f64)
        } else {
            0.0
        },
        max_rate_dev_hz: max_r,
        max_rate_dev_t: max_r_t,
        warmup_s: EQUIVALENCE_RATE_WARMUP,
    })
}

/// One point of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// Parameter value this point ran with.
    pub value: f64,
    /// Summary of the run, or why it failed. One bad point does not stop
    /// the others.
    pub result: Result<TraceSummary, SimError>,
}

/// Run `base` once per value with the dotted-path parameter replaced.
pub fn sweep(base: &Scenario, path: &str, values: &[f64]) -> Vec<SweepOutcome> {
    values
        .iter()
        .map(|&value| {
            let mut sc = base.clone();
            let result = sc
                .apply_param(path, value)
                .map_err(SimError::Config)
                .and_then(|()| run(&sc))
                .map(|tr| tr.summary());
            SweepOutcome { value, result }
        })
        .collect()
}
