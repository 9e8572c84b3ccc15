//! Discrete PI force control and the approach / force-control supervisor.
//!
//! The controller law is `u_n = Kp·e_n + Ki·T·Σ e_k`. Its output is an
//! adjustment to the current PWM duty cycle rather than the duty cycle
//! itself: every tick the duty cycle moves by `u_n · scale`, where `scale`
//! is either 1 (per tick) or `T` (u_n read as a rate in %/s). There is no
//! derivative path.

use serde::{Deserialize, Serialize};

use crate::estimation::{ContactDetector, ContactEstimate};
use crate::error::{Error, Result};

pub const DEFAULT_KP: f64 = 10.0;
pub const DEFAULT_KI: f64 = 1.5;
pub const DEFAULT_PERIOD: f64 = 1.0 / 60.0;
pub const DEFAULT_APPROACH_RATE: f64 = 10.0;

/// PWM duty cycle in percent, always within `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct DutyCycle(f64);

impl DutyCycle {
    pub const MIN: f64 = 0.0;
    pub const MAX: f64 = 100.0;

    pub fn new(percent: f64) -> Self {
        if percent.is_nan() {
            return DutyCycle(Self::MIN);
        }
        DutyCycle(percent.clamp(Self::MIN, Self::MAX))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// How one evaluation of the PI law is turned into a duty-cycle step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncrementScale {
    /// `duty += u_n`.
    PerTick,
    /// `duty += u_n · T`.
    #[default]
    PerSecond,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiUpdate {
    pub duty: DutyCycle,
    /// Unscaled controller output `u_n`.
    pub output: f64,
    /// True when the duty cycle hit a limit and integration was frozen.
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiController {
    kp: f64,
    ki: f64,
    period: f64,
    output_min: f64,
    output_max: f64,
    scale: IncrementScale,
    /// Σ e_k·T in newton-seconds.
    integral: f64,
}

impl PiController {
    pub fn new(kp: f64, ki: f64, period: f64) -> Self {
        Self::with_limits(kp, ki, period, DutyCycle::MIN, DutyCycle::MAX)
    }

    pub fn with_limits(kp: f64, ki: f64, period: f64, output_min: f64, output_max: f64) -> Self {
        assert!(period > 0.0, "sampling period must be positive");
        assert!(output_min < output_max, "output_min must be below output_max");
        Self {
            kp,
            ki,
            period,
            output_min: output_min.max(DutyCycle::MIN),
            output_max: output_max.min(DutyCycle::MAX),
            scale: IncrementScale::default(),
            integral: 0.0,
        }
    }

    pub fn with_scale(mut self, scale: IncrementScale) -> Self {
        self.scale = scale;
        self
    }

    pub fn kp(&self) -> f64 {
        self.kp
    }

    pub fn ki(&self) -> f64 {
        self.ki
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    /// Factor applied to `u_n` before it is added to the duty cycle.
    pub fn increment_factor(&self) -> f64 {
        match self.scale {
            IncrementScale::PerTick => 1.0,
            IncrementScale::PerSecond => self.period,
        }
    }

    /// One control tick. Integration is skipped when the new duty cycle
    /// would saturate in the direction the error pushes it.
    pub fn step(&mut self, target: f64, measured: f64, current_duty: f64) -> Result<PiUpdate> {
        if !target.is_finite() {
            return Err(Error::NonFinite("target force"));
        }
        if !measured.is_finite() {
            return Err(Error::NonFinite("measured force"));
        }
        if !current_duty.is_finite() {
            return Err(Error::NonFinite("duty cycle"));
        }
        let error = target - measured;
        let factor = self.increment_factor();
        let integral = self.integral + error * self.period;
        let mut output = self.kp * error + self.ki * integral;
        let mut next = current_duty + output * factor;

        let winding_up = (next > self.output_max && error > 0.0)
            || (next < self.output_min && error < 0.0);
        if winding_up {
            output = self.kp * error + self.ki * self.integral;
            next = current_duty + output * factor;
        } else {
            self.integral = integral;
        }
        let saturated = next > self.output_max || next < self.output_min;
        Ok(PiUpdate {
            duty: DutyCycle::new(next.clamp(self.output_min, self.output_max)),
            output,
            saturated,
        })
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
    }
}

impl Default for PiController {
    fn default() -> Self {
        Self::new(DEFAULT_KP, DEFAULT_KI, DEFAULT_PERIOD)
    }
}

/// Positional evaluation of the PI law over an error history:
/// `Kp·e_n + Ki·T·Σ_{k≤n} e_k`.
pub fn pi_law(kp: f64, ki: f64, period: f64, errors: &[f64]) -> f64 {
    let last = errors.last().copied().unwrap_or(0.0);
    kp * last + ki * period * errors.iter().sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Approach,
    ForceControl,
}

/// Ramps the duty cycle open-loop until contact is detected, then hands the
/// finger to the PI controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Supervisor {
    mode: Mode,
    approach_rate: f64,
    target_force: f64,
    detector: ContactDetector,
    duty: DutyCycle,
}

impl Supervisor {
    pub fn new(target_force: f64, approach_rate: f64, detector: ContactDetector) -> Self {
        Self {
            mode: Mode::Approach,
            approach_rate,
            target_force,
            detector,
            duty: DutyCycle::default(),
        }
    }

    /// A supervisor that starts in force control at `duty`, for runs where
    /// contact is already established.
    pub fn engaged(target_force: f64, duty: DutyCycle, detector: ContactDetector) -> Self {
        Self {
            mode: Mode::ForceControl,
            approach_rate: 0.0,
            target_force,
            detector,
            duty,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn duty(&self) -> DutyCycle {
        self.duty
    }

    pub fn target_force(&self) -> f64 {
        self.target_force
    }

    pub fn set_target(&mut self, target_force: f64) {
        self.target_force = target_force;
    }

    pub fn step(
        &mut self,
        ctrl: &mut PiController,
        estimate: &ContactEstimate,
        dt: f64,
    ) -> Result<DutyCycle> {
        debug_assert!(dt > 0.0);
        if self.mode == Mode::Approach {
            if self.detector.update(estimate) {
                // Bumpless: the duty cycle carries over, the integral does not.
                self.mode = Mode::ForceControl;
                ctrl.reset();
            } else {
                self.duty = DutyCycle::new(self.duty.value() + self.approach_rate * dt);
                return Ok(self.duty);
            }
        }
        let update = ctrl.step(self.target_force, estimate.contact, self.duty.value())?;
        self.duty = update.duty;
        Ok(self.duty)
    }

    pub fn reset(&mut self, ctrl: &mut PiController) {
        self.mode = Mode::Approach;
        self.duty = DutyCycle::default();
        self.detector.reset();
        ctrl.reset();
    }
}
