use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use softgrip::calibration::bootstrap_weight_spread;
use softgrip::config::Config;
use softgrip::control::DutyCycle;
use softgrip::harness::run_calibration_experiment;
use softgrip::plant::{shake_test, FingerPlant, ObjectModel, PlantParams};

const DT: f64 = 1.0 / 60.0;

fn run(params: PlantParams, obj: Option<&ObjectModel>, duty: f64, ticks: usize, seed: u64) -> Vec<(f64, f64, f64)> {
    let cfg = Config::default();
    let mut p = FingerPlant::new(params, cfg.finger_model(0), seed);
    (0..ticks)
        .map(|_| {
            p.step(obj, DutyCycle::new(duty), DT);
            let s = p.sense();
            (p.angle(), s.force_meas, p.contact_force())
        })
        .collect()
}

#[test]
fn identical_seeds_give_identical_traces() {
    let obj = ObjectModel::rigid(30.0, 2.0);
    let a = run(PlantParams::default(), Some(&obj), 60.0, 500, 11);
    let b = run(PlantParams::default(), Some(&obj), 60.0, 500, 11);
    let c = run(PlantParams::default(), Some(&obj), 60.0, 500, 12);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn stiffer_object_pushes_back_harder() {
    let params = PlantParams::default().noiseless();
    for duty in [45.0, 50.0, 70.0] {
        let soft = ObjectModel::rigid(30.0, 0.5);
        let hard = ObjectModel::rigid(30.0, 5.0);
        let s = *run(params, Some(&soft), duty, 300, 0).last().unwrap();
        let h = *run(params, Some(&hard), duty, 300, 0).last().unwrap();
        assert!(h.2 > s.2, "duty {duty}: force {} <= {}", h.2, s.2);
        assert!(h.0 - 30.0 < s.0 - 30.0);
    }
}

#[test]
fn stiff_object_pins_angle_compliant_object_does_not() {
    let params = PlantParams::default().noiseless();
    let hard = ObjectModel::rigid(30.0, 30.0);
    let soft = ObjectModel::rigid(30.0, 0.3);
    let at = |o: &ObjectModel, d: f64| *run(params, Some(o), d, 300, 0).last().unwrap();
    let (h1, h2) = (at(&hard, 42.0), at(&hard, 60.0));
    let (s1, s2) = (at(&soft, 42.0), at(&soft, 60.0));
    assert!((h2.0 - h1.0).abs() < 0.5 && h2.2 - h1.2 > 1.0);
    assert!(s2.0 - s1.0 > 3.0 && s2.2 > s1.2);
}

#[test]
fn contact_force_is_continuous_at_onset() {
    let params = PlantParams::default().noiseless();
    let obj = ObjectModel::rigid(30.0, 30.0);
    let cfg = Config::default();
    let mut p = FingerPlant::new(params, cfg.finger_model(0), 0);
    let onset = params.duty_for_angle(30.0);
    p.warm_start(Some(&obj), DutyCycle::new(onset));
    assert!(p.contact_force().abs() < 1e-9);
    p.warm_start(Some(&obj), DutyCycle::new(onset + 1e-6));
    assert!(p.contact_force() < 1e-3);
}

#[test]
fn noiseless_contact_superposes_on_internal_force() {
    let params = PlantParams::default().noiseless();
    let cfg = Config::default();
    let obj = ObjectModel::rigid(30.0, 30.0);
    let mut p = FingerPlant::new(params, cfg.finger_model(0), 0);
    let mut s = p.sense();
    for _ in 0..600 {
        p.step(Some(&obj), DutyCycle::new(45.0), DT);
        s = p.sense();
    }
    let internal = cfg.finger_model(0).eval(p.angle());
    assert!((s.force_meas - internal - p.contact_force()).abs() < 1e-9);
}

#[test]
fn shake_test_matches_normal_cdf() {
    let obj = ObjectModel {
        hold_requirement: 2.0,
        hold_spread: 0.5,
        ..ObjectModel::rigid(20.0, 1.0)
    };
    let trunc = Normal::new(2.0, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 20_000;
    for grip in [1.0, 1.5, 2.0, 2.5, 3.0] {
        let held = (0..n).filter(|_| shake_test(grip, &obj, &mut rng)).count() as f64 / n as f64;
        // Threshold is Normal(2, 0.5) conditioned on > 0.
        let z0 = trunc.cdf(0.0);
        let p = (trunc.cdf(grip) - z0) / (1.0 - z0);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((held - p).abs() <= 4.0 * se + 1e-12, "grip {grip}: {held} vs {p}");
    }
    assert!(!shake_test(0.0, &obj, &mut rng));
    assert!(shake_test(2.0 + 6.0 * 0.5 + 1.0, &obj, &mut rng));
}

#[test]
fn calibration_recovers_plant_coefficients() {
    let cfg = Config::default();
    let truth = cfg.finger_model(1);
    let run = run_calibration_experiment(&cfg, 1, 2024).unwrap();
    assert_eq!(run.report.selected_degree, truth.degree());
    let fit = run.report.model();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let spread = bootstrap_weight_spread(&run.samples, 4, 200, &mut rng).unwrap();
    for d in 0..=4 {
        let dev = (fit.weights()[d] - truth.weights()[d]).abs();
        assert!(dev <= 4.0 * spread[d], "w{d}: |Δ| {dev} vs 4σ {}", 4.0 * spread[d]);
    }
}

#[test]
fn more_cycles_tighten_the_fit() {
    let mut one = Config::default();
    one.calibration.repetitions = 1;
    let many = Config::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s1 = bootstrap_weight_spread(&run_calibration_experiment(&one, 0, 8).unwrap().samples, 4, 100, &mut rng).unwrap();
    let s35 = bootstrap_weight_spread(&run_calibration_experiment(&many, 0, 8).unwrap().samples, 4, 100, &mut rng).unwrap();
    for d in 0..=4 {
        assert!(s35[d] < s1[d] / 3.0, "w{d}: {} vs {}", s35[d], s1[d]);
    }
}
