//! Simulation output: sampled rows, discrete events, summary figures and a
//! deterministic content hash.

use alloc::string::String;
use alloc::vec::Vec;

/// One sampled point of the loop state.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceRow {
    /// Sample time (s).
    pub t: f64,
    /// Synaptic output current (A).
    pub i_syn: f64,
    /// Threshold control voltage (V).
    pub v_thr: f64,
    /// Synaptic gain current implied by `v_thr` (A).
    pub i_gain: f64,
    /// Comparator output at this sample.
    pub sw: bool,
    /// Neuron firing rate (Hz): measured from spikes in spiking mode,
    /// closed form in fast mode.
    pub rate: f64,
    /// Equivalent synapse output voltage (V), diagnostic only.
    pub v_syn: f64,
    /// Threshold node pinned at a rail.
    pub saturated: bool,
}

/// Discrete occurrences worth reporting alongside the rows.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum TraceEvent {
    /// A DC drive segment switched on.
    InputStep { t: f64, label: String, current: f64 },
    /// Output current entered (and held) the 1 % band around the
    /// comparator reference for five consecutive samples; `t` is the
    /// first sample of that streak.
    LockEntry { t: f64 },
    /// Threshold node hit a rail.
    SaturationEnter { t: f64 },
    /// Threshold node left the rail.
    SaturationExit { t: f64 },
    /// Run started from the reset state.
    Reset { t: f64 },
}

impl TraceEvent {
    pub fn time(&self) -> f64 {
        match *self {
            TraceEvent::InputStep { t, .. }
            | TraceEvent::LockEntry { t }
            | TraceEvent::SaturationEnter { t }
            | TraceEvent::SaturationExit { t }
            | TraceEvent::Reset { t } => t,
        }
    }
}

/// Full output of one run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub events: Vec<TraceEvent>,
    /// Integration steps where the threshold moved away from the reference
    /// error; stays zero unless the gain law or wiring is broken.
    pub feedback_sign_violations: u64,
    /// Total integration sub-steps taken.
    pub steps: u64,
}

/// Headline figures extracted from a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceSummary {
    /// Seconds from the last input step to the following lock entry;
    /// `None` when the loop never (re)locked.
    pub recovery_time: Option<f64>,
    /// Peak-to-peak output current (A) from the last lock entry onward.
    pub lock_band: Option<f64>,
    /// Mean rate (Hz) over the final ten rows.
    pub final_rate: f64,
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(hash: &mut u64, bytes: &[u8]) {
    for &b in bytes {
        *hash ^= b as u64;
        *hash = hash.wrapping_mul(FNV_PRIME);
    }
}

fn fnv_f64(hash: &mut u64, v: f64) {
    fnv1a(hash, &v.to_bits().to_le_bytes());
}

impl Trace {
    /// FNV-1a over every row bit pattern, event and counter. Equal hashes
    /// mean bit-identical traces, which is the reproducibility contract.
    pub fn content_hash(&self) -> u64 {
        let mut h = FNV_OFFSET;
        for r in &self.rows {
            fnv_f64(&mut h, r.t);
            fnv_f64(&mut h, r.i_syn);
            fnv_f64(&mut h, r.v_thr);
            fnv_f64(&mut h, r.i_gain);
            fnv1a(&mut h, &[r.sw as u8]);
            fnv_f64(&mut h, r.rate);
            fnv_f64(&mut h, r.v_syn);
            fnv1a(&mut h, &[r.saturated as u8]);
        }
        for e in &self.events {
            match e {
                TraceEvent::InputStep { t, label, current } => {
                    fnv1a(&mut h, &[1]);
                    fnv_f64(&mut h, *t);
                    fnv1a(&mut h, label.as_bytes());
                    fnv_f64(&mut h, *current);
                }
                TraceEvent::LockEntry { t } => {
                    fnv1a(&mut h, &[2]);
                    fnv_f64(&mut h, *t);
                }
                TraceEvent::SaturationEnter { t } => {
                    fnv1a(&mut h, &[3]);
                    fnv_f64(&mut h, *t);
                }
                TraceEvent::SaturationExit { t } => {
                    fnv1a(&mut h, &[4]);
                    fnv_f64(&mut h, *t);
                }
                TraceEvent::Reset { t } => {
                    fnv1a(&mut h, &[5]);
                    fnv_f64(&mut h, *t);
                }
            }
        }
        fnv1a(&mut h, &self.feedback_sign_violations.to_le_bytes());
        fnv1a(&mut h, &self.steps.to_le_bytes());
        h
    }

    /// Time of the last `InputStep`, if any.
    pub fn last_input_step(&self) -> Option<f64> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::InputStep { t, .. } => Some(*t),
                _ => None,
            })
            .fold(None, |acc, t| Some(acc.map_or(t, |a: f64| a.max(t))))
    }

    /// First `LockEntry` strictly after `after` (or at all, for `None`).
    pub fn lock_entry_after(&self, after: Option<f64>) -> Option<f64> {
        self.events.iter().find_map(|e| match e {
            TraceEvent::LockEntry { t } if after.is_none_or(|a| *t > a) => Some(*t),
            _ => None,
        })
    }

    pub fn summary(&self) -> TraceSummary {
        let step_t = self.last_input_step();
        let lock_t = self.lock_entry_after(step_t);
        let recovery_time = match (step_t, lock_t) {
            (Some(s), Some(l)) => Some(l - s),
            (None, Some(l)) => Some(l),
            _ => None,
        };

        let last_lock = self
            .events
            .iter()
            .rev()
            .find_map(|e| match e {
                TraceEvent::LockEntry { t } => Some(*t),
                _ => None,
            });
        let lock_band = last_lock.map(|t0| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for r in self.rows.iter().filter(|r| r.t >= t0) {
                lo = lo.min(r.i_syn);
                hi = hi.max(r.i_syn);
            }
            if hi >= lo {
                hi - lo
            } else {
                0.0
            }
        });

        let tail = self.rows.len().saturating_sub(10);
        let tail_rows = &self.rows[tail..];
        let final_rate = if tail_rows.is_empty() {
            0.0
        } else {
            tail_rows.iter().map(|r| r.rate).sum::<f64>() / tail_rows.len() as f64
        };

        TraceSummary {
            recovery_time,
            lock_band,
            final_rate,
        }
    }
}
