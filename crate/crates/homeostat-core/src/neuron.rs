//! Leaky integrate-and-fire neuron with an absolute refractory period.
//!
//! The membrane integrates `(i_in - i_leak) / c_mem`, never below zero.
//! Crossing `delta_v` emits a spike, resets the membrane and blocks
//! integration for `t_ref`. Within a step the drive is constant, so the
//! crossing time is solved in closed form; step size only matters through
//! how often the drive is resampled, and spike rates follow the closed-form
//! [`rate_model`] exactly under constant input.

use alloc::vec::Vec;
use core::fmt;

/// Neuron parameters. The defaults are calibrated so a constant 20 nA fires
/// at 100 Hz and 40 nA at 180 Hz (see [`calibrate_rate_points`]).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields, default)
)]
pub struct NeuronParams {
    /// Membrane capacitance (F).
    pub c_mem: f64,
    /// Firing threshold above the reset level (V).
    pub delta_v: f64,
    /// Absolute refractory period (s), > 0.
    pub t_ref: f64,
    /// Constant leak current (A).
    pub i_leak: f64,
}

impl Default for NeuronParams {
    fn default() -> Self {
        NeuronParams {
            c_mem: 5.925925925925926e-10,
            delta_v: 0.3,
            t_ref: 1.1111111111111111e-3,
            i_leak: 0.0,
        }
    }
}

/// Integration state plus the emitted spike record.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronState {
    /// Membrane voltage above reset (V), in [0, delta_v].
    pub v_mem: f64,
    /// Current time (s); advanced by [`integrate`].
    pub t: f64,
    /// End of the running refractory window (s).
    pub refractory_until: f64,
    /// Spike times (s), strictly increasing, gaps >= t_ref.
    pub spike_times: Vec<f64>,
}

impl NeuronState {
    pub fn new() -> Self {
        NeuronState {
            v_mem: 0.0,
            t: 0.0,
            refractory_until: 0.0,
            spike_times: Vec::new(),
        }
    }
}

impl Default for NeuronState {
    fn default() -> Self {
        Self::new()
    }
}

/// Advance the neuron by `dt` seconds under a constant input current.
///
/// Threshold crossings inside the window are located exactly (the membrane
/// is piecewise linear in time), so several spikes per call are fine and
/// shrinking `dt` does not move spike times under constant drive.
pub fn integrate(s: &mut NeuronState, i_in: f64, dt: f64, p: &NeuronParams) {
    let i_net = i_in - p.i_leak;
    let t_end = s.t + dt;
    let mut t = s.t;
    loop {
        if s.refractory_until > t {
            if s.refractory_until >= t_end {
                break;
            }
            t = s.refractory_until;
        }
        if i_net <= 0.0 {
            // Constant discharge, clamped at the reset level.
            s.v_mem = (s.v_mem + i_net * (t_end - t) / p.c_mem).max(0.0);
            break;
        }
        let t_hit = t + (p.delta_v - s.v_mem) * p.c_mem / i_net;
        if t_hit <= t_end {
            s.spike_times.push(t_hit);
            s.v_mem = 0.0;
            s.refractory_until = t_hit + p.t_ref;
            t = t_hit;
        } else {
            s.v_mem += i_net * (t_end - t) / p.c_mem;
            break;
        }
    }
    s.t = t_end;
}

/// Closed-form firing rate (Hz) under constant input.
///
/// `f = 1 / (t_ref + c_mem * delta_v / (i_in - i_leak))` above the leak,
/// zero at or below it. Monotone in `i_in` and saturating at `1 / t_ref`.
pub fn rate_model(i_in: f64, p: &NeuronParams) -> f64 {
    let i_net = i_in - p.i_leak;
    if i_net <= 0.0 {
        return 0.0;
    }
    1.0 / (p.t_ref + p.c_mem * p.delta_v / i_net)
}

/// Result of a two-point rate calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCalibration {
    /// Refractory period (s).
    pub t_ref: f64,
    /// Threshold charge c_mem * delta_v (C).
    pub charge: f64,
}

/// Calibration failures.
#[derive(Debug, Clone, PartialEq)]
pub enum CalibrationError {
    /// Inputs do not pin down a solution (coincident points, zero values).
    Degenerate { reason: &'static str },
    /// The solved t_ref or charge came out non-positive; no refractory
    /// integrate-and-fire neuron can produce the requested pair.
    Infeasible { t_ref: f64, charge: f64 },
}

impl fmt::Display for CalibrationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalibrationError::Degenerate { reason } => {
                write!(f, "calibration points are degenerate: {reason}")
            }
            CalibrationError::Infeasible { t_ref, charge } => {
                write!(
                    f,
                    "no feasible neuron: solved t_ref = {t_ref} s, charge = {charge} C"
                )
            }
        }
    }
}

impl core::error::Error for CalibrationError {}

/// Solve `1/f = t_ref + charge / i` for `t_ref` and `charge` from two
/// (rate, current) pairs, assuming zero leak.
///
/// With the returned values and any fixed `delta_v`, setting `c_mem =
/// charge / delta_v` reproduces both rates exactly through [`rate_model`].
pub fn calibrate_rate_points(
    f1: f64,
    i1: f64,
    f2: f64,
    i2: f64,
) -> Result<RateCalibration, CalibrationError> {
    if !(f1 > 0.0 && f2 > 0.0 && i1 > 0.0 && i2 > 0.0) {
        return Err(CalibrationError::Degenerate {
            reason: "rates and currents must be > 0",
        });
    }
    if f1 == f2 || i1 == i2 {
        return Err(CalibrationError::Degenerate {
            reason: "points must differ in both rate and current",
        });
    }
    let charge = (1.0 / f1 - 1.0 / f2) / (1.0 / i1 - 1.0 / i2);
    let t_ref = 1.0 / f1 - charge / i1;
    if !(charge > 0.0 && t_ref > 0.0) {
        return Err(CalibrationError::Infeasible { t_ref, charge });
    }
    Ok(RateCalibration { t_ref, charge })
}

/// How to turn a spike record into an instantaneous rate reading.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum RateEstimator {
    /// Inverse of the most recent completed inter-spike interval. Zero
    /// until two spikes exist.
    #[default]
    Isi,
    /// Spike count over a trailing window divided by the window length.
    Windowed { window: f64 },
}

/// Instantaneous firing rate (Hz) read from a spike record at time `t`.
/// Spikes after `t` are ignored, so the estimate is causal.
pub fn instantaneous_rate(spike_times: &[f64], t: f64, est: &RateEstimator) -> f64 {
    let n = spike_times.partition_point(|&s| s <= t);
    match est {
        RateEstimator::Isi => {
            if n < 2 {
                return 0.0;
            }
            let isi = spike_times[n - 1] - spike_times[n - 2];
            if isi > 0.0 {
                1.0 / isi
            } else {
                0.0
            }
        }
        RateEstimator::Windowed { window } => {
            if !(*window > 0.0) {
                return 0.0;
            }
            let from = spike_times.partition_point(|&s| s <= t - window);
            (n - from) as f64 / window
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> NeuronParams {
        NeuronParams::default()
    }

    #[test]
    fn calibration_matches_frozen_solution() {
        // Solve the defining 2x2 system at (100 Hz, 20 nA), (180 Hz, 40 nA).
        let cal = calibrate_rate_points(100.0, 20e-9, 180.0, 40e-9).unwrap();
        assert!(
            ((cal.t_ref - 1.1111111111111111e-3) / cal.t_ref).abs() < 1e-14,
            "t_ref = {}",
            cal.t_ref
        );
        assert!(
            ((cal.charge - 1.7777777777777778e-10) / cal.charge).abs() < 1e-14,
            "charge = {}",
            cal.charge
        );
        // The default parameters are exactly this calibration at
        // delta_v = 0.3 V.
        let d = p();
        assert!(((d.c_mem * d.delta_v - cal.charge) / cal.charge).abs() < 1e-12);
        assert!(((d.t_ref - cal.t_ref) / cal.t_ref).abs() < 1e-12);
    }

    #[test]
    fn calibration_substitutes_back() {
        let cal = calibrate_rate_points(100.0, 20e-9, 180.0, 40e-9).unwrap();
        let np = NeuronParams {
            c_mem: cal.charge / 0.3,
            delta_v: 0.3,
            t_ref: cal.t_ref,
            i_leak: 0.0,
        };
        let r1 = rate_model(20e-9, &np);
        let r2 = rate_model(40e-9, &np);
        assert!((r1 - 100.0).abs() < 1e-9, "r1 = {r1}");
        assert!((r2 - 180.0).abs() < 1e-9, "r2 = {r2}");
    }

    #[test]
    fn calibration_rejects_bad_points() {
        assert!(calibrate_rate_points(100.0, 20e-9, 100.0, 40e-9).is_err());
        assert!(calibrate_rate_points(100.0, 20e-9, 180.0, 20e-9).is_err());
        assert!(calibrate_rate_points(0.0, 20e-9, 180.0, 40e-9).is_err());
        // 500 Hz at half the current of a 100 Hz point: would need a
        // negative refractory period.
        let err = calibrate_rate_points(100.0, 20e-9, 500.0, 25e-9).unwrap_err();
        assert!(matches!(err, CalibrationError::Infeasible { .. }), "{err}");
    }

    #[test]
    fn rate_model_shape() {
        let np = p();
        assert_eq!(rate_model(0.0, &np), 0.0);
        let withleak = NeuronParams { i_leak: 1e-9, ..np };
        assert_eq!(rate_model(1e-9, &withleak), 0.0, "at the leak exactly");
        assert_eq!(rate_model(0.5e-9, &withleak), 0.0, "below the leak");
        // Monotone and saturating at 1/t_ref.
        let ceiling = 1.0 / np.t_ref;
        let mut prev = 0.0;
        for k in 1..=60 {
            let i = 1e-9 * (1.25f64).powi(k);
            let r = rate_model(i, &np);
            assert!(r > prev && r < ceiling, "rate {r} at {i} A");
            prev = r;
        }
        assert!(ceiling - prev < 5.0, "should approach 900 Hz, got {prev}");
    }

    #[test]
    fn hundred_hertz_at_twenty_nanoamps() {
        let np = p();
        let mut s = NeuronState::new();
        // 1 s in 10 us windows.
        for _ in 0..100_000 {
            integrate(&mut s, 20e-9, 1e-5, &np);
        }
        let n = s.spike_times.len();
        assert!((99..=101).contains(&n), "{n} spikes in 1 s, wanted ~100");
        // Spike period is exactly t_ref + charge/i.
        let isi = s.spike_times[50] - s.spike_times[49];
        assert!(((isi - 0.01) / 0.01).abs() < 1e-12, "isi = {isi}");
    }

    #[test]
    fn spike_times_do_not_depend_on_step_size() {
        let np = p();
        let mut coarse = NeuronState::new();
        let mut fine = NeuronState::new();
        for _ in 0..2_000 {
            integrate(&mut coarse, 27e-9, 5e-5, &np);
        }
        for _ in 0..100_000 {
            integrate(&mut fine, 27e-9, 1e-6, &np);
        }
        assert_eq!(coarse.spike_times.len(), fine.spike_times.len());
        for (a, b) in coarse.spike_times.iter().zip(&fine.spike_times) {
            // Crossings are solved in closed form, so the step size only
            // contributes rounding noise, far below the dt/2 bound.
            assert!((a - b).abs() < 0.5e-6, "spike at {a} vs {b}");
        }
    }

    #[test]
    fn refractory_gaps_hold() {
        let np = p();
        let mut s = NeuronState::new();
        // Strong drive: rate pushes against the refractory ceiling.
        for _ in 0..40_000 {
            integrate(&mut s, 5e-6, 2.5e-5, &np);
        }
        assert!(s.spike_times.len() > 500);
        for w in s.spike_times.windows(2) {
            assert!(
                w[1] - w[0] >= np.t_ref - 1e-15,
                "gap {} below t_ref",
                w[1] - w[0]
            );
        }
        let rate = s.spike_times.len() as f64 / 1.0;
        assert!(rate < 1.0 / np.t_ref + 1.0, "rate {rate} above ceiling");
    }

    #[test]
    fn empirical_rate_tracks_closed_form() {
        let np = p();
        for i_in in [5e-9, 12e-9, 20e-9, 40e-9, 120e-9] {
            let mut s = NeuronState::new();
            for _ in 0..200_000 {
                integrate(&mut s, i_in, 1e-5, &np);
            }
            // Mean rate over whole interspike intervals; counting over the
            // raw 2 s window would truncate at the edges and alias up to
            // half a spike into the estimate.
            assert!(s.spike_times.len() >= 2, "too few spikes at {i_in} A");
            let n = s.spike_times.len();
            let measured = (n - 1) as f64 / (s.spike_times[n - 1] - s.spike_times[0]);
            let predicted = rate_model(i_in, &np);
            assert!(
                ((measured - predicted) / predicted).abs() < 0.01,
                "measured {measured}, predicted {predicted} at {i_in} A"
            );
        }
    }

    #[test]
    fn below_leak_membrane_discharges_and_stays_clamped() {
        let np = NeuronParams { i_leak: 2e-9, ..p() };
        let mut s = NeuronState::new();
        s.v_mem = 0.2;
        integrate(&mut s, 0.0, 1.0, &np);
        assert_eq!(s.v_mem, 0.0, "must clamp at the reset level");
        assert!(s.spike_times.is_empty());
        // Zero net current: frozen membrane.
        let frozen = NeuronParams { i_leak: 1e-9, ..p() };
        let mut s2 = NeuronState::new();
        s2.v_mem = 0.1;
        integrate(&mut s2, 1e-9, 1.0, &frozen);
        assert_eq!(s2.v_mem, 0.1);
    }

    #[test]
    fn isi_estimator_reads_the_last_interval() {
        let spikes = [0.01, 0.02, 0.04];
        let est = RateEstimator::Isi;
        assert_eq!(instantaneous_rate(&spikes, 0.015, &est), 0.0, "one spike so far");
        assert_eq!(instantaneous_rate(&spikes, 0.03, &est), 100.0);
        assert_eq!(instantaneous_rate(&spikes, 0.05, &est), 50.0);
        assert_eq!(instantaneous_rate(&[], 1.0, &est), 0.0);
    }

    #[test]
    fn windowed_estimator_counts_over_trailing_window() {
        // Deterministic jitter around a 10 ms period, +-2 ms triangular-ish.
        let mut spikes = Vec::new();
        let mut seed = 0x2545F4914F6CDD1Du64;
        for k in 0..200 {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let jitter = ((seed >> 33) as f64 / (1u64 << 31) as f64 - 0.5) * 4e-3;
            spikes.push(0.01 * (k + 1) as f64 + jitter);
        }
        spikes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let est = RateEstimator::Windowed { window: 0.5 };
        let r = instantaneous_rate(&spikes, 1.5, &est);
        assert!(
            (r - 100.0).abs() <= 10.0,
            "windowed estimate {r} should sit near 100 Hz"
        );
        // The window must not see the future.
        let causal = instantaneous_rate(&spikes, 0.25, &est);
        assert!((causal - 50.0).abs() <= 8.0, "got {causal}, ~25 spikes / 0.5 s");
    }
}
