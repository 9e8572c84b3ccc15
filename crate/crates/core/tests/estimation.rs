use proptest::prelude::*;

use softgrip::calibration::PolynomialModel;
use softgrip::config::Config;
use softgrip::control::DutyCycle;
use softgrip::estimation::{
    contact_force, detect_contact, internal_force, ContactDetector, ContactEstimate, ForceReading,
    InternalForceModel,
};
use softgrip::harness::{derive_seed, run_calibration_experiment, FingerRig};
use softgrip::plant::{FingerPlant, ObjectModel};

fn line_model() -> InternalForceModel {
    InternalForceModel::new(PolynomialModel::new(vec![0.0, 2.0]).unwrap(), 0.0, 10.0)
}

fn estimate(contact: f64) -> ContactEstimate {
    ContactEstimate {
        measured: contact,
        internal: 0.0,
        contact,
    }
}

#[test]
fn line_model_evaluation() {
    assert_eq!(internal_force(&line_model(), 3.0).unwrap(), 6.0);
    let e = contact_force(ForceReading::new(6.0, 3.0).unwrap(), &line_model()).unwrap();
    assert_eq!(e.contact, 0.0);
}

#[test]
fn threshold_examples() {
    assert!(!detect_contact(&estimate(0.0), 0.2));
    assert!(detect_contact(&estimate(0.25), 0.2));
}

#[test]
fn noiseless_press_recovers_contact_force() {
    let mut cfg = Config::default();
    cfg.plant = cfg.plant.noiseless();
    let cal = run_calibration_experiment(&cfg, 0, 5).unwrap();
    let model = cal.internal_model(&cfg);
    let obj = ObjectModel::rigid(30.0, 30.0);
    let mut rig = FingerRig::new(FingerPlant::new(cfg.plant, cfg.finger_model(0), 5), model);
    let dt = cfg.controller.period;
    let mut duty = 0.0;
    let mut tick = rig.tick(Some(&obj), DutyCycle::new(0.0), dt).unwrap();
    while tick.true_force < 2.0 {
        duty += 2.0 * dt;
        tick = rig.tick(Some(&obj), DutyCycle::new(duty), dt).unwrap();
    }
    for _ in 0..120 {
        tick = rig.tick(Some(&obj), DutyCycle::new(duty), dt).unwrap();
    }
    let fit_rms = (cal.report.selected().rss / cal.report.n_samples as f64).sqrt();
    assert!(tick.true_force >= 2.0);
    assert!(
        (tick.estimate.contact - tick.true_force).abs() <= 3.0 * fit_rms + 1e-9,
        "estimate {} vs true {} (fit rms {fit_rms})",
        tick.estimate.contact,
        tick.true_force
    );
}

/// Approach-style free-space ramp over the whole duty range.
#[test]
fn free_space_ramp_never_trips_detector() {
    let cfg = Config::default();
    let dt = cfg.controller.period;
    for seed in 0..20u64 {
        let cal = run_calibration_experiment(&cfg, (seed % 3) as usize, derive_seed(seed, &[1])).unwrap();
        let plant = FingerPlant::new(cfg.plant, cfg.finger_model((seed % 3) as usize), derive_seed(seed, &[2]));
        let mut rig = FingerRig::new(plant, cal.internal_model(&cfg));
        let mut det = cfg.controller.detector();
        let mut duty = 0.0;
        for i in 0..600 {
            duty += cfg.controller.approach_rate * dt;
            let tick = rig.tick(None, DutyCycle::new(duty), dt).unwrap();
            assert!(!det.update(&tick.estimate), "seed {seed}: false contact at tick {i}");
        }
    }
}

#[test]
fn free_space_mean_is_consistent_with_noise() {
    let cfg = Config::default();
    let dt = cfg.controller.period;
    for seed in 0..10u64 {
        let cal = run_calibration_experiment(&cfg, 0, derive_seed(seed, &[3])).unwrap();
        let plant = FingerPlant::new(cfg.plant, cfg.finger_model(0), derive_seed(seed, &[4]));
        let mut rig = FingerRig::new(plant, cal.internal_model(&cfg));
        let mut values = Vec::new();
        let mut duty = 0.0;
        let peak = cfg.calibration.peak_pressure / cfg.plant.k_duty;
        while duty < peak {
            duty += cfg.calibration.ramp_rate * dt;
            values.push(rig.tick(None, DutyCycle::new(duty), dt).unwrap().estimate.contact);
        }
        while duty > 0.0 {
            duty = (duty - cfg.calibration.ramp_rate * dt).max(0.0);
            values.push(rig.tick(None, DutyCycle::new(duty), dt).unwrap().estimate.contact);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let se = cfg.plant.noise_sigma / n.sqrt();
        assert!(mean.abs() <= 3.0 * se, "seed {seed}: mean {mean} vs 3·SE {}", 3.0 * se);
    }
}

#[test]
fn extrapolation_is_rejected() {
    let m = line_model();
    assert!(internal_force(&m, 11.0).is_ok());
    assert!(internal_force(&m, 11.5).is_err());
    assert!(internal_force(&m, -1.5).is_err());
}

proptest! {
    #[test]
    fn subtraction_is_linear_in_measurement(
        measured in 0.0..10.0f64,
        delta in 0.0..5.0f64,
        angle in 0.0..10.0f64,
    ) {
        let m = line_model();
        let a = m.contact_force(ForceReading::new(measured, angle).unwrap()).unwrap();
        let b = m.contact_force(ForceReading::new(measured + delta, angle).unwrap()).unwrap();
        let tol = 4.0 * f64::EPSILON * (measured + delta + a.internal);
        prop_assert!(((b.contact - a.contact) - delta).abs() <= tol);
        prop_assert_eq!(a.internal, b.internal);
    }

    #[test]
    fn detection_is_monotone(lo in -1.0..1.0f64, step in 0.0..1.0f64, threshold in 0.01..1.0f64) {
        let hi = lo + step;
        prop_assert!(!detect_contact(&estimate(lo), threshold) || detect_contact(&estimate(hi), threshold));
        let mut a = ContactDetector::new(threshold, 0.5);
        let mut b = ContactDetector::new(threshold, 0.5);
        prop_assert!(!a.update(&estimate(lo)) || b.update(&estimate(hi)));
    }

    #[test]
    fn hysteresis_holds_until_release(threshold in 0.05..1.0f64, ratio in 0.1..1.0f64, x in 0.0..1.0f64) {
        let mut d = ContactDetector::new(threshold, ratio);
        prop_assert!(d.update(&estimate(threshold)));
        let v = x * 2.0 * threshold;
        prop_assert_eq!(d.update(&estimate(v)), v >= threshold * ratio);
    }
}
