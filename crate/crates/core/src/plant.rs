//! Simulated pneumatic finger, its bend and force sensors, and the objects it
//! can touch.
//!
//! Pressure follows a first-order lag toward `k_duty · duty`. The free bend
//! angle is proportional to pressure. Against an object the bend splits
//! between the finger's own stiffness and the object's (two springs in
//! series), and the contact force is the object spring's load. The force
//! sensor reads the bend-induced internal force plus the contact force plus
//! white noise, through a first-order digital low-pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::calibration::PolynomialModel;
use crate::control::DutyCycle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    /// Pressure lag time constant, s.
    pub tau_p: f64,
    /// Steady-state pressure per duty-cycle percent, kPa/%.
    pub k_duty: f64,
    /// Free bend per kPa, deg/kPa.
    pub bend_gain: f64,
    /// Mechanical bend limit, deg.
    pub angle_max: f64,
    /// Finger's effective bending stiffness, N/deg.
    pub finger_stiffness: f64,
    /// Force sensor noise before filtering, N.
    pub noise_sigma: f64,
    /// Bend sensor noise, deg.
    pub angle_noise_sigma: f64,
    /// Low-pass coefficient in (0, 1]; 1 means no filtering.
    pub filter_alpha: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            tau_p: 0.04,
            k_duty: 1.2,
            bend_gain: 0.75,
            angle_max: 45.0,
            finger_stiffness: 0.56,
            noise_sigma: 0.05,
            angle_noise_sigma: 0.05,
            filter_alpha: 0.5,
        }
    }
}

impl PlantParams {
    pub fn noiseless(mut self) -> Self {
        self.noise_sigma = 0.0;
        self.angle_noise_sigma = 0.0;
        self
    }

    /// Duty cycle whose steady-state free bend reaches `angle`.
    pub fn duty_for_angle(&self, angle: f64) -> f64 {
        angle / (self.bend_gain * self.k_duty)
    }
}

/// The internal-force polynomial every simulated finger starts from, in N
/// with angles in degrees.
pub const BASE_INTERNAL_WEIGHTS: [f64; 5] = [0.05, -0.01, 0.002, -0.0001, 0.000002];

/// Default internal-force models of the three fingers: the base quartic with
/// small per-finger coefficient changes.
pub fn default_finger_models() -> [PolynomialModel; 3] {
    let scale = [
        [1.0, 1.0, 1.0, 1.0, 1.0],
        [1.0, 1.0, 1.02, 1.0, 0.99],
        [1.0, 1.0, 0.98, 1.0, 1.01],
    ];
    scale.map(|s| {
        let w = BASE_INTERNAL_WEIGHTS
            .iter()
            .zip(s)
            .map(|(w, f)| w * f)
            .collect();
        PolynomialModel::new(w).expect("finite weights")
    })
}

/// Something the finger can press against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectModel {
    /// Bend angle at which the finger first touches the object, deg.
    pub position_angle: f64,
    /// N/deg.
    pub stiffness: f64,
    /// Mean force at which the object deforms; `None` if it never does.
    #[serde(default)]
    pub deform_threshold: Option<f64>,
    #[serde(default)]
    pub deform_spread: f64,
    /// Force at which the object breaks; `None` if it never does.
    #[serde(default)]
    pub break_threshold: Option<f64>,
    /// Mean total grip force needed to survive lift and shake, N.
    #[serde(default = "default_hold_requirement")]
    pub hold_requirement: f64,
    #[serde(default)]
    pub hold_spread: f64,
}

fn default_hold_requirement() -> f64 {
    1.0
}

impl ObjectModel {
    /// A rigid, unbreakable object such as a scale pan or a spray can.
    pub fn rigid(position_angle: f64, stiffness: f64) -> Self {
        Self {
            position_angle,
            stiffness,
            deform_threshold: None,
            deform_spread: 0.0,
            break_threshold: None,
            hold_requirement: default_hold_requirement(),
            hold_spread: 0.0,
        }
    }

    /// Per-trial deformation threshold, or `None` for non-deformable objects.
    pub fn sample_deform_threshold<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        self.deform_threshold
            .map(|mean| positive_normal(mean, self.deform_spread, rng))
    }

    pub fn sample_hold_threshold<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        positive_normal(self.hold_requirement, self.hold_spread, rng)
    }
}

/// Normal(mean, spread) conditioned on being strictly positive.
fn positive_normal<R: Rng + ?Sized>(mean: f64, spread: f64, rng: &mut R) -> f64 {
    if spread <= 0.0 {
        return mean;
    }
    let dist = Normal::new(mean, spread).expect("spread is positive and finite");
    loop {
        let v = dist.sample(rng);
        if v > 0.0 {
            return v;
        }
    }
}

/// Whether a grip of `total_grip_force` newtons survives a lift and shake.
pub fn shake_test<R: Rng + ?Sized>(total_grip_force: f64, obj: &ObjectModel, rng: &mut R) -> bool {
    total_grip_force >= obj.sample_hold_threshold(rng)
}

/// First-order IIR low-pass `y += α (x − y)`, seeded with its first input.
#[derive(Debug, Clone, PartialEq)]
pub struct LowPass {
    alpha: f64,
    state: Option<f64>,
}

impl LowPass {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha > 0.0 && alpha <= 1.0, "filter alpha must be in (0, 1]");
        Self { alpha, state: None }
    }

    pub fn update(&mut self, x: f64) -> f64 {
        let y = match self.state {
            Some(y) => y + self.alpha * (x - y),
            None => x,
        };
        self.state = Some(y);
        y
    }

    pub fn reset(&mut self) {
        self.state = None;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorReadings {
    pub angle_meas: f64,
    /// Filtered force, never negative.
    pub force_meas: f64,
}

#[derive(Debug, Clone)]
pub struct FingerPlant {
    params: PlantParams,
    internal_model: PolynomialModel,
    pressure: f64,
    angle: f64,
    contact_force: f64,
    filter: LowPass,
    rng: ChaCha8Rng,
    force_noise: Normal<f64>,
    angle_noise: Normal<f64>,
}

impl FingerPlant {
    pub fn new(params: PlantParams, internal_model: PolynomialModel, seed: u64) -> Self {
        let force_noise = Normal::new(0.0, params.noise_sigma).expect("noise sigma >= 0");
        let angle_noise = Normal::new(0.0, params.angle_noise_sigma).expect("angle sigma >= 0");
        Self {
            filter: LowPass::new(params.filter_alpha),
            params,
            internal_model,
            pressure: 0.0,
            angle: 0.0,
            contact_force: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            force_noise,
            angle_noise,
        }
    }

    pub fn params(&self) -> &PlantParams {
        &self.params
    }

    pub fn internal_model(&self) -> &PolynomialModel {
        &self.internal_model
    }

    pub fn pressure(&self) -> f64 {
        self.pressure
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Ground-truth contact force, N.
    pub fn contact_force(&self) -> f64 {
        self.contact_force
    }

    /// Put the finger at the steady state of `duty` without simulating the
    /// transient.
    pub fn warm_start(&mut self, obj: Option<&ObjectModel>, duty: DutyCycle) {
        self.pressure = self.params.k_duty * duty.value();
        self.update_geometry(obj);
    }

    /// Advance by `dt` seconds. Explicit Euler; requires `dt <= tau_p / 2`.
    pub fn step(&mut self, obj: Option<&ObjectModel>, duty: DutyCycle, dt: f64) {
        debug_assert!(dt > 0.0 && dt <= self.params.tau_p / 2.0 + 1e-12);
        let target = self.params.k_duty * duty.value();
        self.pressure += dt / self.params.tau_p * (target - self.pressure);
        self.pressure = self.pressure.max(0.0);
        self.update_geometry(obj);
    }

    fn update_geometry(&mut self, obj: Option<&ObjectModel>) {
        let free = (self.params.bend_gain * self.pressure).min(self.params.angle_max);
        match obj {
            Some(o) if free > o.position_angle => {
                let kf = self.params.finger_stiffness;
                let share = kf / (kf + o.stiffness);
                self.angle = o.position_angle + (free - o.position_angle) * share;
                self.contact_force = o.stiffness * (self.angle - o.position_angle);
            }
            _ => {
                self.angle = free;
                self.contact_force = 0.0;
            }
        }
    }

    pub fn sense(&mut self) -> SensorReadings {
        let noise = self.force_noise.sample(&mut self.rng);
        let angle_noise = self.angle_noise.sample(&mut self.rng);
        let raw = (self.internal_model.eval(self.angle) + self.contact_force + noise).max(0.0);
        SensorReadings {
            angle_meas: self.angle + angle_noise,
            force_meas: self.filter.update(raw),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 1.0 / 60.0;

    fn plant(params: PlantParams) -> FingerPlant {
        FingerPlant::new(params, default_finger_models()[0].clone(), 3)
    }

    #[test]
    fn rest_is_equilibrium() {
        let mut p = plant(PlantParams::default());
        for _ in 0..100 {
            p.step(None, DutyCycle::new(0.0), DT);
        }
        assert_eq!(p.pressure(), 0.0);
        assert_eq!(p.angle(), 0.0);
        assert_eq!(p.contact_force(), 0.0);
    }

    #[test]
    fn first_order_steady_state() {
        let params = PlantParams::default();
        let mut p = plant(params);
        for _ in 0..120 {
            p.step(None, DutyCycle::new(30.0), DT);
        }
        let target = params.k_duty * 30.0;
        assert!((p.pressure() - target).abs() < 0.01 * target);
    }

    #[test]
    fn stiff_object_pins_angle() {
        let params = PlantParams::default();
        let stiff = ObjectModel::rigid(30.0, 30.0);
        let soft = ObjectModel::rigid(30.0, 0.3);
        let mut a = plant(params);
        let mut b = plant(params);
        let mut prev = (0.0, 0.0, 0.0, 0.0);
        for duty in [36.0, 40.0, 44.0] {
            a.warm_start(Some(&stiff), DutyCycle::new(duty));
            b.warm_start(Some(&soft), DutyCycle::new(duty));
            if duty > 36.0 {
                let (da, fa) = (a.angle() - prev.0, a.contact_force() - prev.1);
                let (db, fb) = (b.angle() - prev.2, b.contact_force() - prev.3);
                assert!(fa > 0.0 && da < 0.1);
                assert!(fb > 0.0 && db > 1.0);
                assert!(da / fa < 0.05 && db / fb > 1.0);
            }
            prev = (a.angle(), a.contact_force(), b.angle(), b.contact_force());
        }
        assert!(a.contact_force() > b.contact_force());
    }

    #[test]
    fn contact_is_continuous_at_onset() {
        let params = PlantParams::default();
        let obj = ObjectModel::rigid(30.0, 5.0);
        let mut p = plant(params);
        let onset = params.duty_for_angle(30.0);
        p.warm_start(Some(&obj), DutyCycle::new(onset));
        assert!(p.contact_force().abs() < 1e-9);
        p.warm_start(Some(&obj), DutyCycle::new(onset + 1e-6));
        assert!(p.contact_force() < 1e-5);
    }

    #[test]
    fn noiseless_sensor_reads_internal_plus_contact() {
        let params = PlantParams::default().noiseless();
        let obj = ObjectModel::rigid(30.0, 30.0);
        let mut p = plant(params);
        p.warm_start(Some(&obj), DutyCycle::new(40.0));
        let expected = p.internal_model().eval(p.angle()) + p.contact_force();
        let mut r = p.sense();
        for _ in 0..5 {
            r = p.sense();
        }
        assert!((r.force_meas - expected).abs() < 1e-12);
        assert_eq!(r.angle_meas, p.angle());

        let mut free = plant(params);
        free.warm_start(None, DutyCycle::new(25.0));
        let r = free.sense();
        assert_eq!(r.force_meas, free.internal_model().eval(free.angle()));
    }

    #[test]
    fn angle_is_clamped() {
        let params = PlantParams::default();
        let mut p = plant(params);
        p.warm_start(None, DutyCycle::new(100.0));
        assert_eq!(p.angle(), params.angle_max);
    }

    #[test]
    fn low_pass_converges() {
        let mut f = LowPass::new(0.5);
        assert_eq!(f.update(1.0), 1.0);
        assert_eq!(f.update(0.0), 0.5);
        assert_eq!(f.update(0.0), 0.25);
        f.reset();
        assert_eq!(f.update(4.0), 4.0);
    }

    #[test]
    fn shake_test_tails() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let obj = ObjectModel {
            hold_requirement: 2.0,
            hold_spread: 0.5,
            ..ObjectModel::rigid(20.0, 1.0)
        };
        for _ in 0..1000 {
            assert!(!shake_test(0.0, &obj, &mut rng));
            assert!(shake_test(2.0 + 6.5 * 0.5, &obj, &mut rng));
        }
    }
}
