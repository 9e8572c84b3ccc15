//! Declarative run configuration (TOML).
//!
//! Every field has a default, so an empty file is a valid configuration.
//! Objects given in the file are merged over the built-in object set.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{PolynomialModel, DEFAULT_MAX_DEGREE};
use crate::control::{
    IncrementScale, PiController, DEFAULT_APPROACH_RATE, DEFAULT_KI, DEFAULT_KP, DEFAULT_PERIOD,
};
use crate::estimation::{
    ContactDetector, DEFAULT_CONTACT_THRESHOLD, DEFAULT_MARGIN_FRACTION, DEFAULT_RELEASE_RATIO,
};
use crate::plant::{default_finger_models, ObjectModel, PlantParams};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("invalid config:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<FieldError>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub plant: PlantParams,
    pub fingers: Vec<FingerConfig>,
    pub controller: ControllerConfig,
    pub estimation: EstimationConfig,
    pub calibration: CalibrationConfig,
    pub objects: BTreeMap<String, ObjectModel>,
    pub experiments: ExperimentsConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 1,
            plant: PlantParams::default(),
            fingers: default_finger_models()
                .into_iter()
                .map(|m| FingerConfig {
                    internal_weights: m.weights().to_vec(),
                })
                .collect(),
            controller: ControllerConfig::default(),
            estimation: EstimationConfig::default(),
            calibration: CalibrationConfig::default(),
            objects: default_objects(),
            experiments: ExperimentsConfig::default(),
        }
    }
}

/// Ground-truth internal-force polynomial of one finger (N, degrees).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerConfig {
    pub internal_weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub kp: f64,
    pub ki: f64,
    /// Control and simulation period, s.
    pub period: f64,
    pub output_min: f64,
    pub output_max: f64,
    pub increment_scale: IncrementScale,
    /// Open-loop duty ramp before contact, %/s.
    pub approach_rate: f64,
    pub contact_threshold: f64,
    pub release_ratio: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            kp: DEFAULT_KP,
            ki: DEFAULT_KI,
            period: DEFAULT_PERIOD,
            output_min: 0.0,
            output_max: 100.0,
            increment_scale: IncrementScale::PerSecond,
            approach_rate: DEFAULT_APPROACH_RATE,
            contact_threshold: DEFAULT_CONTACT_THRESHOLD,
            release_ratio: DEFAULT_RELEASE_RATIO,
        }
    }
}

impl ControllerConfig {
    pub fn pi(&self) -> PiController {
        PiController::with_limits(self.kp, self.ki, self.period, self.output_min, self.output_max)
            .with_scale(self.increment_scale)
    }

    pub fn detector(&self) -> ContactDetector {
        ContactDetector::new(self.contact_threshold, self.release_ratio)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationConfig {
    /// Extrapolation allowance as a fraction of the calibrated angle span.
    pub margin_fraction: f64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            margin_fraction: DEFAULT_MARGIN_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    /// Free-space inflate/deflate cycles.
    pub repetitions: usize,
    /// Duty ramp during inflation, %/s.
    pub ramp_rate: f64,
    /// Inflation stops once pressure reaches this, kPa.
    pub peak_pressure: f64,
    /// A cycle ends once pressure falls below this, kPa.
    pub rest_pressure: f64,
    /// Log one sample every this many ticks while inflating.
    pub log_stride: usize,
    pub max_degree: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            repetitions: 35,
            ramp_rate: 10.0,
            peak_pressure: 60.0,
            rest_pressure: 0.5,
            log_stride: 6,
            max_degree: DEFAULT_MAX_DEGREE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct ExperimentsConfig {
    pub estimation: EstimationExperiment,
    pub step: StepExperiment,
    pub switching: SwitchingExperiment,
    pub grasp: GraspExperiment,
    pub hardness: HardnessExperiment,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationExperiment {
    pub finger: usize,
    pub object: String,
    /// Contact-onset angles of the scale, deg.
    pub positions: Vec<f64>,
    pub target_force: f64,
    /// Duty ramp while pressing, %/s.
    pub ramp_rate: f64,
    /// Time held at the reached duty before reading the estimate, s.
    pub hold_time: f64,
}

impl Default for EstimationExperiment {
    fn default() -> Self {
        Self {
            finger: 0,
            object: "scale".into(),
            positions: vec![16.0, 22.0, 28.0, 34.0, 40.0],
            target_force: 2.0,
            ramp_rate: 5.0,
            hold_time: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepExperiment {
    pub finger: usize,
    pub object: String,
    pub setpoints: Vec<f64>,
    /// Length of each setpoint segment, s.
    pub segment_duration: f64,
    pub runs: usize,
}

impl Default for StepExperiment {
    fn default() -> Self {
        Self {
            finger: 0,
            object: "solid_block".into(),
            setpoints: vec![3.0, 2.0],
            segment_duration: 60.0,
            runs: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwitchingExperiment {
    pub finger: usize,
    pub object: String,
    pub target_force: f64,
    pub duration: f64,
    pub runs: usize,
}

impl Default for SwitchingExperiment {
    fn default() -> Self {
        Self {
            finger: 0,
            object: "solid_block".into(),
            target_force: 2.5,
            duration: 10.0,
            runs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraspExperiment {
    pub objects: Vec<String>,
    /// Opposable-finger targets, N. The paired fingers get half each.
    pub set_points: Vec<f64>,
    pub n_trials: usize,
    /// Grasp time before the lift, s.
    pub duration: f64,
}

impl Default for GraspExperiment {
    fn default() -> Self {
        Self {
            objects: vec!["plastic_cup".into(), "paper_cup".into(), "eggshell".into()],
            set_points: vec![4.0, 3.0, 2.0, 1.5, 1.0, 0.5],
            n_trials: 10,
            duration: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardnessExperiment {
    pub finger: usize,
    pub objects: Vec<String>,
    /// Open-loop duty ramp, %/s.
    pub ramp_rate: f64,
    pub max_duty: f64,
    /// Stiff iff d(angle)/d(force) after contact is below this, deg/N.
    pub slope_threshold: f64,
    /// Post-contact samples needed before classifying.
    pub min_samples: usize,
}

impl Default for HardnessExperiment {
    fn default() -> Self {
        Self {
            finger: 0,
            objects: vec!["spray_can".into(), "woolly_hat".into()],
            ramp_rate: 10.0,
            max_duty: 60.0,
            slope_threshold: 0.5,
            min_samples: 10,
        }
    }
}

pub fn default_objects() -> BTreeMap<String, ObjectModel> {
    let mut m = BTreeMap::new();
    m.insert("scale".into(), ObjectModel::rigid(30.0, 30.0));
    m.insert("solid_block".into(), ObjectModel::rigid(36.0, 30.0));
    m.insert("spray_can".into(), ObjectModel::rigid(36.0, 30.0));
    m.insert("woolly_hat".into(), ObjectModel::rigid(36.0, 0.3));
    m.insert(
        "plastic_cup".into(),
        ObjectModel {
            position_angle: 20.0,
            stiffness: 1.5,
            deform_threshold: Some(1.4),
            deform_spread: 0.4,
            break_threshold: None,
            hold_requirement: 1.1,
            hold_spread: 0.3,
        },
    );
    m.insert(
        "paper_cup".into(),
        ObjectModel {
            position_angle: 20.0,
            stiffness: 2.0,
            deform_threshold: Some(2.6),
            deform_spread: 0.5,
            break_threshold: None,
            hold_requirement: 2.6,
            hold_spread: 0.6,
        },
    );
    m.insert(
        "eggshell".into(),
        ObjectModel {
            position_angle: 22.0,
            stiffness: 20.0,
            deform_threshold: None,
            deform_spread: 0.0,
            break_threshold: None,
            hold_requirement: 1.2,
            hold_spread: 0.3,
        },
    );
    m
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    /// Parse and validate. `origin` names the source in error messages.
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })?;
        for (name, obj) in default_objects() {
            cfg.objects.entry(name).or_insert(obj);
        }
        cfg.validate().map_err(ConfigError::Invalid)?;
        Ok(cfg)
    }

    /// The effective configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable as TOML")
    }

    pub fn object(&self, name: &str) -> Option<&ObjectModel> {
        self.objects.get(name)
    }

    pub fn finger_model(&self, finger: usize) -> PolynomialModel {
        PolynomialModel::new(self.fingers[finger].internal_weights.clone())
            .expect("validated weights")
    }

    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut v = Validator::default();
        let p = &self.plant;
        v.positive("plant.tau_p", p.tau_p);
        v.positive("plant.k_duty", p.k_duty);
        v.positive("plant.bend_gain", p.bend_gain);
        v.positive("plant.angle_max", p.angle_max);
        v.positive("plant.finger_stiffness", p.finger_stiffness);
        v.non_negative("plant.noise_sigma", p.noise_sigma);
        v.non_negative("plant.angle_noise_sigma", p.angle_noise_sigma);
        v.check(
            "plant.filter_alpha",
            p.filter_alpha > 0.0 && p.filter_alpha <= 1.0,
            "must be in (0, 1]",
        );

        v.check("fingers", self.fingers.len() == 3, "exactly three fingers are required");
        for (i, f) in self.fingers.iter().enumerate() {
            v.check(
                &format!("fingers[{i}].internal_weights"),
                !f.internal_weights.is_empty() && f.internal_weights.iter().all(|w| w.is_finite()),
                "must be a non-empty list of finite numbers",
            );
        }

        let c = &self.controller;
        v.finite_non_negative("controller.kp", c.kp);
        v.finite_non_negative("controller.ki", c.ki);
        v.positive("controller.period", c.period);
        if c.period.is_finite() && p.tau_p.is_finite() {
            v.check(
                "controller.period",
                c.period <= p.tau_p / 2.0,
                "must not exceed plant.tau_p / 2",
            );
        }
        v.check(
            "controller.output_min",
            (0.0..100.0).contains(&c.output_min),
            "must be in [0, 100)",
        );
        v.check(
            "controller.output_max",
            c.output_max > c.output_min && c.output_max <= 100.0,
            "must be above output_min and at most 100",
        );
        v.finite_non_negative("controller.approach_rate", c.approach_rate);
        v.positive("controller.contact_threshold", c.contact_threshold);
        v.check(
            "controller.release_ratio",
            c.release_ratio > 0.0 && c.release_ratio <= 1.0,
            "must be in (0, 1]",
        );

        v.finite_non_negative("estimation.margin_fraction", self.estimation.margin_fraction);

        let cal = &self.calibration;
        v.check("calibration.repetitions", cal.repetitions >= 1, "must be at least 1");
        v.positive("calibration.ramp_rate", cal.ramp_rate);
        v.positive("calibration.peak_pressure", cal.peak_pressure);
        if cal.peak_pressure.is_finite() && p.k_duty.is_finite() {
            v.check(
                "calibration.peak_pressure",
                cal.peak_pressure < p.k_duty * 100.0,
                "must be reachable below 100 % duty",
            );
        }
        v.check(
            "calibration.rest_pressure",
            cal.rest_pressure > 0.0 && cal.rest_pressure < cal.peak_pressure,
            "must be positive and below peak_pressure",
        );
        v.check("calibration.log_stride", cal.log_stride >= 1, "must be at least 1");

        for (name, o) in &self.objects {
            let f = |k: &str| format!("objects.{name}.{k}");
            v.finite_non_negative(&f("position_angle"), o.position_angle);
            v.finite_non_negative(&f("stiffness"), o.stiffness);
            if let Some(t) = o.deform_threshold {
                v.positive(&f("deform_threshold"), t);
            }
            v.finite_non_negative(&f("deform_spread"), o.deform_spread);
            if let Some(t) = o.break_threshold {
                v.positive(&f("break_threshold"), t);
            }
            v.positive(&f("hold_requirement"), o.hold_requirement);
            v.finite_non_negative(&f("hold_spread"), o.hold_spread);
        }

        let e = &self.experiments;
        let finger = |v: &mut Validator, field: &str, idx: usize| {
            v.check(field, idx < 3, "must be 0, 1 or 2");
        };
        let object = |v: &mut Validator, field: &str, name: &str| {
            v.check(
                field,
                self.objects.contains_key(name),
                &format!("unknown object `{name}`"),
            );
        };
        finger(&mut v, "experiments.estimation.finger", e.estimation.finger);
        object(&mut v, "experiments.estimation.object", &e.estimation.object);
        v.check(
            "experiments.estimation.positions",
            !e.estimation.positions.is_empty()
                && e.estimation.positions.iter().all(|a| a.is_finite() && *a >= 0.0),
            "must be a non-empty list of non-negative angles",
        );
        v.positive("experiments.estimation.target_force", e.estimation.target_force);
        v.positive("experiments.estimation.ramp_rate", e.estimation.ramp_rate);
        v.finite_non_negative("experiments.estimation.hold_time", e.estimation.hold_time);

        finger(&mut v, "experiments.step.finger", e.step.finger);
        object(&mut v, "experiments.step.object", &e.step.object);
        v.check(
            "experiments.step.setpoints",
            !e.step.setpoints.is_empty() && e.step.setpoints.iter().all(|s| s.is_finite() && *s > 0.0),
            "must be a non-empty list of positive forces",
        );
        v.positive("experiments.step.segment_duration", e.step.segment_duration);
        v.check("experiments.step.runs", e.step.runs >= 1, "must be at least 1");

        finger(&mut v, "experiments.switching.finger", e.switching.finger);
        object(&mut v, "experiments.switching.object", &e.switching.object);
        v.positive("experiments.switching.target_force", e.switching.target_force);
        v.positive("experiments.switching.duration", e.switching.duration);
        v.check("experiments.switching.runs", e.switching.runs >= 1, "must be at least 1");

        for (i, name) in e.grasp.objects.iter().enumerate() {
            object(&mut v, &format!("experiments.grasp.objects[{i}]"), name);
        }
        v.check(
            "experiments.grasp.set_points",
            !e.grasp.set_points.is_empty()
                && e.grasp.set_points.iter().all(|s| s.is_finite() && *s > 0.0),
            "must be a non-empty list of positive forces",
        );
        v.check("experiments.grasp.n_trials", e.grasp.n_trials >= 1, "must be at least 1");
        v.positive("experiments.grasp.duration", e.grasp.duration);

        finger(&mut v, "experiments.hardness.finger", e.hardness.finger);
        for (i, name) in e.hardness.objects.iter().enumerate() {
            object(&mut v, &format!("experiments.hardness.objects[{i}]"), name);
        }
        v.positive("experiments.hardness.ramp_rate", e.hardness.ramp_rate);
        v.check(
            "experiments.hardness.max_duty",
            e.hardness.max_duty > 0.0 && e.hardness.max_duty <= 100.0,
            "must be in (0, 100]",
        );
        v.positive("experiments.hardness.slope_threshold", e.hardness.slope_threshold);
        v.check("experiments.hardness.min_samples", e.hardness.min_samples >= 2, "must be at least 2");

        v.finish()
    }
}

#[derive(Default)]
struct Validator {
    errors: Vec<FieldError>,
}

impl Validator {
    fn check(&mut self, field: &str, ok: bool, message: &str) {
        if !ok {
            self.errors.push(FieldError {
                field: field.to_string(),
                message: message.to_string(),
            });
        }
    }

    fn positive(&mut self, field: &str, value: f64) {
        self.check(field, value.is_finite() && value > 0.0, "must be a positive number");
    }

    fn non_negative(&mut self, field: &str, value: f64) {
        self.check(field, value.is_finite() && value >= 0.0, "must be non-negative");
    }

    fn finite_non_negative(&mut self, field: &str, value: f64) {
        self.non_negative(field, value);
    }

    fn finish(self) -> Result<(), Vec<FieldError>> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(self.errors)
        }
    }
}
