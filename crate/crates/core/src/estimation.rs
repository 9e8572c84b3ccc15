//! Contact-force estimation: measured force minus the predicted internal force.

use serde::{Deserialize, Serialize};

use crate::calibration::{CalibrationReport, PolynomialModel};
use crate::error::{Error, Result};

pub const DEFAULT_CONTACT_THRESHOLD: f64 = 0.2;
pub const DEFAULT_RELEASE_RATIO: f64 = 0.5;
pub const DEFAULT_MARGIN_FRACTION: f64 = 0.1;

/// Sensor force and bend angle taken at the same instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceReading {
    pub measured: f64,
    pub angle: f64,
}

impl ForceReading {
    pub fn new(measured: f64, angle: f64) -> Result<Self> {
        if !measured.is_finite() || measured < 0.0 {
            return Err(Error::InvalidSample(format!(
                "measured force {measured} must be finite and non-negative"
            )));
        }
        if !angle.is_finite() {
            return Err(Error::NonFinite("angle"));
        }
        Ok(Self { measured, angle })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactEstimate {
    pub measured: f64,
    pub internal: f64,
    /// `measured - internal`; negative values are kept.
    pub contact: f64,
}

/// A fitted internal-force model together with the angle range it was
/// calibrated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalForceModel {
    pub model: PolynomialModel,
    pub angle_min: f64,
    pub angle_max: f64,
    /// Allowed extrapolation on each side, as a fraction of the span.
    pub margin_fraction: f64,
}

impl InternalForceModel {
    pub fn new(model: PolynomialModel, angle_min: f64, angle_max: f64) -> Self {
        Self {
            model,
            angle_min,
            angle_max,
            margin_fraction: DEFAULT_MARGIN_FRACTION,
        }
    }

    pub fn from_report(report: &CalibrationReport) -> Self {
        Self::new(report.model(), report.angle_min, report.angle_max)
    }

    pub fn with_margin(mut self, margin_fraction: f64) -> Self {
        self.margin_fraction = margin_fraction;
        self
    }

    pub fn admissible_range(&self) -> (f64, f64) {
        let margin = (self.angle_max - self.angle_min) * self.margin_fraction;
        (self.angle_min - margin, self.angle_max + margin)
    }

    /// Predicted internal force at `angle`, never below zero.
    pub fn internal_force(&self, angle: f64) -> Result<f64> {
        let (min, max) = self.admissible_range();
        if !(min..=max).contains(&angle) {
            return Err(Error::OutOfRange { angle, min, max });
        }
        Ok(self.model.eval(angle).max(0.0))
    }

    pub fn contact_force(&self, reading: ForceReading) -> Result<ContactEstimate> {
        let internal = self.internal_force(reading.angle)?;
        Ok(ContactEstimate {
            measured: reading.measured,
            internal,
            contact: reading.measured - internal,
        })
    }
}

pub fn internal_force(model: &InternalForceModel, angle: f64) -> Result<f64> {
    model.internal_force(angle)
}

pub fn contact_force(reading: ForceReading, model: &InternalForceModel) -> Result<ContactEstimate> {
    model.contact_force(reading)
}

/// Memoryless contact test, `contact >= threshold`. Use [`ContactDetector`]
/// inside a control loop.
pub fn detect_contact(estimate: &ContactEstimate, threshold: f64) -> bool {
    estimate.contact >= threshold
}

/// Contact detector with hysteresis: trips at `threshold` and releases once
/// the estimate falls below `threshold * release_ratio`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactDetector {
    threshold: f64,
    release_ratio: f64,
    in_contact: bool,
}

impl ContactDetector {
    pub fn new(threshold: f64, release_ratio: f64) -> Self {
        assert!(threshold > 0.0, "contact threshold must be positive");
        assert!(
            release_ratio > 0.0 && release_ratio <= 1.0,
            "release ratio must be in (0, 1]"
        );
        Self {
            threshold,
            release_ratio,
            in_contact: false,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn in_contact(&self) -> bool {
        self.in_contact
    }

    pub fn update(&mut self, estimate: &ContactEstimate) -> bool {
        self.in_contact = if self.in_contact {
            estimate.contact >= self.threshold * self.release_ratio
        } else {
            estimate.contact >= self.threshold
        };
        self.in_contact
    }

    pub fn reset(&mut self) {
        self.in_contact = false;
    }
}

impl Default for ContactDetector {
    fn default() -> Self {
        Self::new(DEFAULT_CONTACT_THRESHOLD, DEFAULT_RELEASE_RATIO)
    }
}
