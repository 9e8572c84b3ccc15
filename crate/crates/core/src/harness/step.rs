use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibrate::calibrated_model;
use super::metrics::{combine, post_settle_len, step_metrics, StepMetrics};
use super::{derive_seed, stream, ticks_for, FingerRig, Trace};
use crate::config::Config;
use crate::control::{DutyCycle, Mode, Supervisor};
use crate::error::{Error, Result};
use crate::plant::{FingerPlant, ObjectModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentMetrics {
    pub target_force: f64,
    pub start_time: f64,
    pub metrics: StepMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRun {
    pub run: usize,
    pub seed: u64,
    pub segments: Vec<SegmentMetrics>,
    pub metrics: StepMetrics,
    /// Mean duty cycle over the last second of the run, %.
    pub steady_duty: f64,
    #[serde(skip)]
    pub trace: Option<Trace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResponse {
    pub runs: Vec<StepRun>,
    /// Worst case over runs.
    pub worst: StepMetrics,
}

fn lookup<'a>(cfg: &'a Config, name: &str) -> Result<&'a ObjectModel> {
    cfg.object(name)
        .ok_or_else(|| Error::UnknownObject(name.to_owned()))
}

fn worst(metrics: impl Iterator<Item = StepMetrics>) -> StepMetrics {
    metrics
        .reduce(|a, b| StepMetrics {
            rms_error_post_settle: a.rms_error_post_settle.max(b.rms_error_post_settle),
            settling_time: match (a.settling_time, b.settling_time) {
                (Some(x), Some(y)) => Some(x.max(y)),
                _ => None,
            },
            overshoot: a.overshoot.max(b.overshoot),
            settled: a.settled && b.settled,
        })
        .unwrap_or(StepMetrics {
            rms_error_post_settle: 0.0,
            settling_time: None,
            overshoot: 0.0,
            settled: false,
        })
}

fn mean_tail_duty(trace: &Trace, seconds: f64) -> f64 {
    let n = ticks_for(seconds, trace.dt()).clamp(1, trace.len().max(1));
    let tail = &trace.rows()[trace.len().saturating_sub(n)..];
    if tail.is_empty() {
        return 0.0;
    }
    tail.iter().map(|r| r.duty).sum::<f64>() / tail.len() as f64
}

/// Closed-loop set-point steps with contact already established.
pub fn run_step_response(cfg: &Config, seed: u64) -> Result<StepResponse> {
    let exp = &cfg.experiments.step;
    let obj = lookup(cfg, &exp.object)?;
    let dt = cfg.controller.period;
    let runs = (0..exp.runs)
        .into_par_iter()
        .map(|run| {
            let run_seed = derive_seed(seed, &[stream::STEP, run as u64]);
            let model = calibrated_model(cfg, exp.finger, run_seed)?;
            let plant_seed = derive_seed(run_seed, &[stream::PLANT]);
            let mut plant = FingerPlant::new(cfg.plant, cfg.finger_model(exp.finger), plant_seed);
            let onset = DutyCycle::new(cfg.plant.duty_for_angle(obj.position_angle));
            plant.warm_start(Some(obj), onset);
            let mut rig = FingerRig::new(plant, model);
            let mut ctrl = cfg.controller.pi();
            let first = exp.setpoints.first().copied().unwrap_or(0.0);
            let mut sup = Supervisor::engaged(first, onset, cfg.controller.detector());
            let mut trace = Trace::new(dt);
            let mut segments = Vec::new();
            let mut pooled = Vec::new();
            let mut previous = 0.0;
            let n = ticks_for(exp.segment_duration, dt);
            for &target in &exp.setpoints {
                sup.set_target(target);
                let start = trace.len();
                for _ in 0..n {
                    let duty = sup.duty();
                    let tick = rig.tick(Some(obj), duty, dt)?;
                    trace.push(tick.row(duty, sup.mode().into()));
                    sup.step(&mut ctrl, &tick.estimate, dt)?;
                }
                let values: Vec<f64> = trace.rows()[start..].iter().map(|r| r.f_c_true).collect();
                let m = step_metrics(dt, &values, target, previous);
                pooled.push((m, post_settle_len(dt, values.len(), &m)));
                segments.push(SegmentMetrics {
                    target_force: target,
                    start_time: start as f64 * dt,
                    metrics: m,
                });
                previous = target;
            }
            Ok(StepRun {
                run,
                seed: run_seed,
                segments,
                metrics: combine(&pooled),
                steady_duty: mean_tail_duty(&trace, 1.0),
                trace: Some(trace),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = worst(runs.iter().map(|r| r.metrics));
    Ok(StepResponse { runs, worst })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingRun {
    pub run: usize,
    pub seed: u64,
    /// Time at which the supervisor entered force control, s.
    pub switch_time: Option<f64>,
    /// Measured from the switch instant.
    pub metrics: StepMetrics,
    /// Mean duty cycle over the last two seconds, %.
    pub steady_duty: f64,
    #[serde(skip)]
    pub trace: Option<Trace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingResponse {
    pub runs: Vec<SwitchingRun>,
    pub worst: StepMetrics,
}

/// Approach from rest, detect contact, then regulate the contact force.
pub fn run_switching_experiment(cfg: &Config, seed: u64) -> Result<SwitchingResponse> {
    let exp = &cfg.experiments.switching;
    let obj = lookup(cfg, &exp.object)?;
    let dt = cfg.controller.period;
    let runs = (0..exp.runs)
        .into_par_iter()
        .map(|run| {
            let run_seed = derive_seed(seed, &[stream::SWITCHING, run as u64]);
            let model = calibrated_model(cfg, exp.finger, run_seed)?;
            let plant_seed = derive_seed(run_seed, &[stream::PLANT]);
            let plant = FingerPlant::new(cfg.plant, cfg.finger_model(exp.finger), plant_seed);
            let mut rig = FingerRig::new(plant, model);
            let mut ctrl = cfg.controller.pi();
            let mut sup = Supervisor::new(
                exp.target_force,
                cfg.controller.approach_rate,
                cfg.controller.detector(),
            );
            let mut trace = Trace::new(dt);
            let mut switch_at = None;
            for _ in 0..ticks_for(exp.duration, dt) {
                let duty = sup.duty();
                let tick = rig.tick(Some(obj), duty, dt)?;
                trace.push(tick.row(duty, sup.mode().into()));
                sup.step(&mut ctrl, &tick.estimate, dt)?;
                if switch_at.is_none() && sup.mode() == Mode::ForceControl {
                    switch_at = Some(trace.len());
                }
            }
            let metrics = match switch_at {
                Some(i) => {
                    let values: Vec<f64> = trace.rows()[i..].iter().map(|r| r.f_c_true).collect();
                    let initial = trace.rows()[i - 1].f_c_true;
                    step_metrics(dt, &values, exp.target_force, initial)
                }
                None => {
                    log::warn!("run {run}: contact never detected");
                    step_metrics(dt, &trace.column(|r| r.f_c_true), exp.target_force, 0.0)
                }
            };
            Ok(SwitchingRun {
                run,
                seed: run_seed,
                switch_time: switch_at.map(|i| i as f64 * dt),
                metrics: if switch_at.is_some() {
                    metrics
                } else {
                    StepMetrics {
                        settled: false,
                        settling_time: None,
                        ..metrics
                    }
                },
                steady_duty: mean_tail_duty(&trace, 2.0),
                trace: Some(trace),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = worst(runs.iter().map(|r| r.metrics));
    Ok(SwitchingResponse { runs, worst })
}
