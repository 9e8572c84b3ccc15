use rayon::prelude::*;

use super::{derive_seed, stream, Trace, TraceMode, TraceRow};
use crate::calibration::{select_model, CalibrationReport, Sample};
use crate::config::Config;
use crate::control::DutyCycle;
use crate::error::{Error, Result};
use crate::estimation::InternalForceModel;
use crate::plant::FingerPlant;

#[derive(Debug, Clone)]
pub struct CalibrationRun {
    pub finger: usize,
    pub seed: u64,
    pub samples: Vec<Sample>,
    pub report: CalibrationReport,
    pub trace: Trace,
}

impl CalibrationRun {
    pub fn internal_model(&self, cfg: &Config) -> InternalForceModel {
        InternalForceModel::from_report(&self.report).with_margin(cfg.estimation.margin_fraction)
    }
}

/// Repeated free-space triangle cycles on one finger: the duty ramps up until
/// the peak pressure is reached and back down at the same rate. Samples are
/// logged on both strokes every `log_stride` ticks.
pub fn run_calibration_experiment(cfg: &Config, finger: usize, seed: u64) -> Result<CalibrationRun> {
    let cal = &cfg.calibration;
    let dt = cfg.controller.period;
    let mut plant = FingerPlant::new(cfg.plant, cfg.finger_model(finger), seed);
    let mut trace = Trace::new(dt);
    let mut samples = Vec::new();
    // Guards against a plant that can never reach the peak pressure.
    let cycle_limit = super::ticks_for(2.0 * 100.0 / cal.ramp_rate + 100.0 * cfg.plant.tau_p, dt);

    let mut tick = |plant: &mut FingerPlant, duty: f64, n: Option<usize>| -> Result<()> {
        let d = DutyCycle::new(duty);
        plant.step(None, d, dt);
        let s = plant.sense();
        if n.is_some_and(|n| n % cal.log_stride == 0) {
            samples.push(Sample::new(s.angle_meas, s.force_meas)?);
        }
        trace.push(open_loop_row(d, plant.pressure(), s.angle_meas, s.force_meas, plant));
        Ok(())
    };

    for cycle in 0..cal.repetitions {
        let mut duty = 0.0;
        let mut n = 0usize;
        while plant.pressure() < cal.peak_pressure {
            if n > cycle_limit {
                return Err(Error::Experiment(format!(
                    "calibration cycle {cycle} never reached {} kPa",
                    cal.peak_pressure
                )));
            }
            duty = (duty + cal.ramp_rate * dt).min(DutyCycle::MAX);
            n += 1;
            tick(&mut plant, duty, Some(n))?;
        }
        while duty > 0.0 {
            duty = (duty - cal.ramp_rate * dt).max(0.0);
            n += 1;
            tick(&mut plant, duty, Some(n))?;
        }
        while plant.pressure() >= cal.rest_pressure {
            tick(&mut plant, 0.0, None)?;
        }
    }

    let report = select_model(&samples, cal.max_degree)?;
    let model = report.model();
    for row in trace.rows_mut() {
        row.f_i_pred = model.eval(row.angle_deg).max(0.0);
        row.f_c_est = row.f_m - row.f_i_pred;
    }
    log::debug!(
        "finger {finger}: {} samples, degree {} selected",
        samples.len(),
        report.selected_degree
    );
    Ok(CalibrationRun {
        finger,
        seed,
        samples,
        report,
        trace,
    })
}

fn open_loop_row(duty: DutyCycle, pressure: f64, angle: f64, f_m: f64, plant: &FingerPlant) -> TraceRow {
    TraceRow {
        t: 0.0,
        duty: duty.value(),
        pressure_kpa: pressure,
        angle_deg: angle,
        f_m,
        f_i_pred: 0.0,
        f_c_est: f_m,
        f_c_true: plant.contact_force(),
        mode: TraceMode::OpenLoop,
    }
}

/// Calibrate every configured finger, in parallel, from `seed`.
pub fn calibrate_hand(cfg: &Config, seed: u64) -> Result<Vec<CalibrationRun>> {
    (0..cfg.fingers.len())
        .into_par_iter()
        .map(|f| {
            run_calibration_experiment(
                cfg,
                f,
                derive_seed(seed, &[stream::CALIBRATION, f as u64]),
            )
        })
        .collect()
}

pub(crate) fn calibrated_model(cfg: &Config, finger: usize, seed: u64) -> Result<InternalForceModel> {
    let run = run_calibration_experiment(
        cfg,
        finger,
        derive_seed(seed, &[stream::CALIBRATION, finger as u64]),
    )?;
    Ok(run.internal_model(cfg))
}
