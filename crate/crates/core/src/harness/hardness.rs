use serde::{Deserialize, Serialize};

use super::calibrate::calibrated_model;
use super::{derive_seed, stream, FingerRig, Trace, TraceMode};
use crate::config::Config;
use crate::control::DutyCycle;
use crate::error::{Error, Result};
use crate::estimation::InternalForceModel;
use crate::plant::{FingerPlant, ObjectModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hardness {
    Stiff,
    Soft,
}

#[derive(Debug, Clone)]
pub struct HardnessProbe {
    pub summary: ProbeSummary,
    pub trace: Trace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub object: Option<String>,
    /// `None` when no contact was detected or too little data followed it.
    pub classification: Option<Hardness>,
    /// Post-contact dθ/dF from a least-squares line, °/N.
    pub slope: Option<f64>,
    pub contact_time: Option<f64>,
    pub contact_samples: usize,
}

#[derive(Debug, Clone)]
pub struct HardnessReport {
    pub seed: u64,
    pub probes: Vec<HardnessProbe>,
}

impl HardnessReport {
    pub fn summaries(&self) -> Vec<ProbeSummary> {
        self.probes.iter().map(|p| p.summary.clone()).collect()
    }
}

/// Slope of the least-squares line y = a + b·x, or `None` if x is constant.
fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), (x, y)| {
        (sxy + (x - mx) * (y - my), sxx + (x - mx).powi(2))
    });
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Ramp the duty open-loop and classify whatever stops the finger.
pub fn probe_hardness(
    cfg: &Config,
    name: Option<&str>,
    obj: Option<&ObjectModel>,
    model: InternalForceModel,
    seed: u64,
) -> Result<HardnessProbe> {
    let exp = &cfg.experiments.hardness;
    let dt = cfg.controller.period;
    let mut rig = FingerRig::new(
        FingerPlant::new(cfg.plant, cfg.finger_model(exp.finger), seed),
        model,
    );
    let mut detector = cfg.controller.detector();
    let mut trace = Trace::new(dt);
    let mut points = Vec::new();
    let mut contact_time = None;
    let mut duty = 0.0;
    while duty < exp.max_duty {
        duty = (duty + exp.ramp_rate * dt).min(exp.max_duty);
        let d = DutyCycle::new(duty);
        let tick = rig.tick(obj, d, dt)?;
        trace.push(tick.row(d, TraceMode::OpenLoop));
        if detector.update(&tick.estimate) {
            contact_time.get_or_insert(trace.rows().last().map_or(0.0, |r| r.t));
            points.push((tick.estimate.contact, tick.readings.angle_meas));
        }
    }
    let slope = (points.len() >= exp.min_samples)
        .then(|| ols_slope(&points))
        .flatten();
    let classification = slope.map(|s| {
        if s < exp.slope_threshold {
            Hardness::Stiff
        } else {
            Hardness::Soft
        }
    });
    Ok(HardnessProbe {
        summary: ProbeSummary {
            object: name.map(str::to_owned),
            classification,
            slope,
            contact_time,
            contact_samples: points.len(),
        },
        trace,
    })
}

/// Probe each configured object with one calibrated finger.
pub fn run_hardness_probe(cfg: &Config, seed: u64) -> Result<HardnessReport> {
    let exp = &cfg.experiments.hardness;
    let model = calibrated_model(cfg, exp.finger, seed)?;
    let probes = exp
        .objects
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let obj = cfg
                .object(name)
                .ok_or_else(|| Error::UnknownObject(name.clone()))?;
            probe_hardness(
                cfg,
                Some(name),
                Some(obj),
                model.clone(),
                derive_seed(seed, &[stream::HARDNESS, i as u64]),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HardnessReport { seed, probes })
}
