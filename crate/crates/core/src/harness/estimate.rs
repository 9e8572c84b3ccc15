use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibrate::calibrated_model;
use super::{derive_seed, stream, ticks_for, FingerRig, Trace, TraceMode};
use crate::config::Config;
use crate::control::DutyCycle;
use crate::error::{Error, Result};
use crate::plant::FingerPlant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationRow {
    pub position_angle: f64,
    /// Whether the true force reached the target before the duty saturated.
    pub reached: bool,
    pub duty: f64,
    pub angle_deg: f64,
    pub true_force: f64,
    pub estimated_force: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationTable {
    pub seed: u64,
    pub target_force: f64,
    pub rows: Vec<EstimationRow>,
    pub max_abs_error: f64,
}

#[derive(Debug, Clone)]
pub struct EstimationRun {
    pub table: EstimationTable,
    pub traces: Vec<Trace>,
}

/// Press the finger against a force reference at each configured position
/// and compare the estimated contact force with the reference.
pub fn run_estimation_accuracy(cfg: &Config, seed: u64) -> Result<EstimationRun> {
    let exp = &cfg.experiments.estimation;
    let dt = cfg.controller.period;
    let base = cfg
        .object(&exp.object)
        .ok_or_else(|| Error::UnknownObject(exp.object.clone()))?
        .clone();
    let model = calibrated_model(cfg, exp.finger, seed)?;

    let results: Vec<(EstimationRow, Trace)> = exp
        .positions
        .par_iter()
        .enumerate()
        .map(|(i, &pos)| {
            let mut obj = base.clone();
            obj.position_angle = pos;
            let plant_seed = derive_seed(seed, &[stream::ESTIMATION, i as u64]);
            let plant = FingerPlant::new(cfg.plant, cfg.finger_model(exp.finger), plant_seed);
            let mut rig = FingerRig::new(plant, model.clone());
            let mut trace = Trace::new(dt);
            let mut duty = 0.0;
            let mut reached = false;
            while duty < DutyCycle::MAX {
                duty = (duty + exp.ramp_rate * dt).min(DutyCycle::MAX);
                let d = DutyCycle::new(duty);
                let tick = rig.tick(Some(&obj), d, dt)?;
                trace.push(tick.row(d, TraceMode::OpenLoop));
                if tick.true_force >= exp.target_force {
                    reached = true;
                    break;
                }
            }
            let d = DutyCycle::new(duty);
            let mut last = None;
            for _ in 0..ticks_for(exp.hold_time, dt).max(1) {
                let tick = rig.tick(Some(&obj), d, dt)?;
                trace.push(tick.row(d, TraceMode::OpenLoop));
                last = Some(tick);
            }
            let tick = last.expect("hold runs at least one tick");
            if !reached {
                log::warn!("position {pos} deg: target force unreachable at full duty");
            }
            Ok((
                EstimationRow {
                    position_angle: pos,
                    reached,
                    duty,
                    angle_deg: tick.readings.angle_meas,
                    true_force: tick.true_force,
                    estimated_force: tick.estimate.contact,
                    abs_error: (tick.estimate.contact - tick.true_force).abs(),
                },
                trace,
            ))
        })
        .collect::<Result<_>>()?;

    let (rows, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let max_abs_error = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
    Ok(EstimationRun {
        table: EstimationTable {
            seed,
            target_force: exp.target_force,
            rows,
            max_abs_error,
        },
        traces,
    })
}
