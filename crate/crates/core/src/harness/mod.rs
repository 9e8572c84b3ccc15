//! Simulated experiments: calibration runs, closed-loop trials and the
//! bookkeeping around them.

mod calibrate;
mod estimate;
mod grasp;
mod hardness;
pub mod metrics;
mod step;
pub mod trace;

pub use calibrate::{calibrate_hand, run_calibration_experiment, CalibrationRun};
pub use estimate::{run_estimation_accuracy, EstimationRow, EstimationRun, EstimationTable};
pub use grasp::{
    run_grasp_sweep, run_grasp_trial, GraspOutcome, GraspTrial, ObjectSweep, SweepRow, SweepTable,
};
pub use hardness::{
    probe_hardness, run_hardness_probe, Hardness, HardnessProbe, HardnessReport, ProbeSummary,
};
pub use metrics::{step_metrics, StepMetrics};
pub use step::{
    run_step_response, run_switching_experiment, SegmentMetrics, StepResponse, StepRun,
    SwitchingResponse, SwitchingRun,
};
pub use trace::{Trace, TraceMode, TraceRow};

use crate::control::DutyCycle;
use crate::error::Result;
use crate::estimation::{ContactEstimate, ForceReading, InternalForceModel};
use crate::plant::{FingerPlant, ObjectModel, SensorReadings};

/// Stream tags mixed into derived seeds.
pub mod stream {
    pub const CALIBRATION: u64 = 1;
    pub const ESTIMATION: u64 = 2;
    pub const STEP: u64 = 3;
    pub const SWITCHING: u64 = 4;
    pub const GRASP: u64 = 5;
    pub const GRASP_OBJECT: u64 = 6;
    pub const HARDNESS: u64 = 7;
    pub const PLANT: u64 = 8;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for an independent random stream identified by `parts` under
/// `master`. Stable across platforms and releases.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// What one control tick saw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tick {
    pub readings: SensorReadings,
    pub estimate: ContactEstimate,
    pub pressure: f64,
    pub true_force: f64,
}

/// A simulated finger together with the internal-force model used to read it.
#[derive(Debug, Clone)]
pub struct FingerRig {
    pub plant: FingerPlant,
    pub model: InternalForceModel,
}

impl FingerRig {
    pub fn new(plant: FingerPlant, model: InternalForceModel) -> Self {
        Self { plant, model }
    }

    /// Apply `duty` for one period, then sense and estimate.
    pub fn tick(&mut self, obj: Option<&ObjectModel>, duty: DutyCycle, dt: f64) -> Result<Tick> {
        self.plant.step(obj, duty, dt);
        let readings = self.plant.sense();
        let reading = ForceReading::new(readings.force_meas, readings.angle_meas)?;
        let estimate = self.model.contact_force(reading)?;
        Ok(Tick {
            readings,
            estimate,
            pressure: self.plant.pressure(),
            true_force: self.plant.contact_force(),
        })
    }
}

impl Tick {
    pub fn row(&self, duty: DutyCycle, mode: TraceMode) -> TraceRow {
        TraceRow {
            t: 0.0,
            duty: duty.value(),
            pressure_kpa: self.pressure,
            angle_deg: self.readings.angle_meas,
            f_m: self.estimate.measured,
            f_i_pred: self.estimate.internal,
            f_c_est: self.estimate.contact,
            f_c_true: self.true_force,
            mode,
        }
    }
}

pub(crate) fn ticks_for(duration: f64, dt: f64) -> usize {
    (duration / dt).round() as usize
}
