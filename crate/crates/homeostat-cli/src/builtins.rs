//! The two shipped protocols, frozen so the same command always produces
//! the same trace.
//!
//! `fig4` is the step-response protocol: the loop starts locked at its
//! 20 nA / 100 Hz operating point, the DC drive doubles at t = 20 s and
//! returns at t = 120 s, and the gate bias is calibrated so each recovery
//! takes about a minute.
//!
//! `fig5` is the time-scale family: the same upward step swept across four
//! gate biases whose ramp rates span 30 uV/s down to 1.2 uV/s, stretching
//! the recovery from minutes to most of a day of simulated time.

use homeostat_core::agc::{ComparatorParams, LlcParams};
use homeostat_core::device::{calibrate_vg_for_slope, DeviceParams};
use homeostat_core::dpi::{DcInput, DcSegment, DpiParams, WeightDrive};
use homeostat_core::neuron::{NeuronParams, RateEstimator};
use homeostat_core::scenario::{InitialConditions, Mode, Scenario};

/// Builtin selector token for the step-response protocol.
pub const STEP_RESPONSE: &str = "fig4";
/// Builtin selector token for the time-scale family.
pub const TIMESCALE_SWEEP: &str = "fig5";

/// A sweep: one base scenario, one dotted parameter path, one value list.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: Scenario,
    pub param: String,
    pub values: Vec<f64>,
}

/// What a builtin token names: a single run or a family of runs.
#[derive(Debug, Clone)]
pub enum Builtin {
    Single(Scenario),
    Family(SweepSpec),
}

pub fn by_name(name: &str) -> Option<Builtin> {
    match name {
        STEP_RESPONSE => Some(Builtin::Single(step_response())),
        TIMESCALE_SWEEP => Some(Builtin::Family(timescale_sweep())),
        _ => None,
    }
}

/// Threshold bias at the 20 nA lock point for the default stack (V).
const LOCKED_V_THR: f64 = 1.46;
/// Synaptic current at that bias with 0.3 nA drive (A).
const LOCKED_I_SYN: f64 = 2e-8;

/// Gate bias whose charge/discharge ramp has magnitude `slope` with the
/// default leakage-cell references.
fn gate_for_slope(slope: f64, dev: &DeviceParams, llc: &LlcParams) -> f64 {
    calibrate_vg_for_slope(slope, llc.c_f, llc.v_ref_l, llc.v_ref_m, dev)
        .expect("builtin slopes are within the reachable range")
}

/// A doubled drive moves the balance point by (u_t/kappa)*ln 2 of threshold
/// voltage; dividing by the recovery target gives the ramp rate.
fn slope_for_recovery(seconds: f64, dev: &DeviceParams) -> f64 {
    dev.u_t / dev.kappa * core::f64::consts::LN_2 / seconds
}

/// Step-response protocol (`fig4`): 0.3 nA -> 0.6 nA at 20 s, back at
/// 120 s, ~60 s recoveries, fast mode, 50 ms sampling.
pub fn step_response() -> Scenario {
    let device = DeviceParams::default();
    let mut llc = LlcParams::default();
    llc.v_g = gate_for_slope(slope_for_recovery(60.0, &device), &device, &llc);
    Scenario {
        device,
        dpi: DpiParams::default(),
        neuron: NeuronParams::default(),
        llc,
        comparator: ComparatorParams::default(),
        drive: WeightDrive {
            dc_inputs: vec![DcInput {
                label: "i_dc".into(),
                segments: vec![
                    DcSegment { t_start: 0.0, current: 0.3e-9 },
                    DcSegment { t_start: 20.0, current: 0.6e-9 },
                    DcSegment { t_start: 120.0, current: 0.3e-9 },
                ],
            }],
            spike_inputs: vec![],
        },
        duration: 200.0,
        mode: Mode::Fast,
        dt_neuron: 1e-5,
        sample_interval: 0.05,
        initial: InitialConditions::State {
            i_syn: LOCKED_I_SYN,
            v_thr: LOCKED_V_THR,
        },
        seed: 0,
        rate_estimator: RateEstimator::Isi,
    }
}

/// Ramp-rate family of the time-scale sweep (V/s). The slowest member is
/// the 1.2 uV/s attoampere configuration; its recovery runs past 21,000 s.
pub const TIMESCALE_SLOPES: [f64; 4] = [3e-5, 1e-5, 3e-6, 1.2e-6];

/// Time-scale family (`fig5`): one upward step at t = 20 s, swept over
/// [`TIMESCALE_SLOPES`] via the gate bias.
pub fn timescale_sweep() -> SweepSpec {
    let device = DeviceParams::default();
    let llc = LlcParams::default();
    let values: Vec<f64> = TIMESCALE_SLOPES
        .iter()
        .map(|&s| gate_for_slope(s, &device, &llc))
        .collect();
    let mut base = step_response();
    base.llc.v_g = values[0];
    base.drive = WeightDrive {
        dc_inputs: vec![DcInput {
            label: "i_dc".into(),
            segments: vec![
                DcSegment { t_start: 0.0, current: 0.3e-9 },
                DcSegment { t_start: 20.0, current: 0.6e-9 },
            ],
        }],
        spike_inputs: vec![],
    };
    base.duration = 23_000.0;
    base.sample_interval = 5.0;
    SweepSpec {
        base,
        param: "llc.v_g".into(),
        values,
    }
}
