use softgrip::config::Config;
use softgrip::control::Supervisor;
use softgrip::harness::{
    probe_hardness, run_calibration_experiment, run_grasp_sweep, run_step_response,
    run_switching_experiment, FingerRig, Trace, TraceMode,
};
use softgrip::plant::FingerPlant;

fn small_grasp_config() -> Config {
    let mut cfg = Config::default();
    cfg.experiments.grasp.n_trials = 4;
    cfg.experiments.grasp.set_points = vec![3.0, 1.0];
    cfg.experiments.grasp.duration = 4.0;
    cfg
}

fn pool(n: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap()
}

#[test]
fn reset_runs_are_bit_identical() {
    let cfg = Config::default();
    let dt = cfg.controller.period;
    let obj = cfg.object("solid_block").unwrap().clone();
    let model = run_calibration_experiment(&cfg, 0, 3).unwrap().internal_model(&cfg);
    let mut ctrl = cfg.controller.pi();
    let mut sup = Supervisor::new(2.5, cfg.controller.approach_rate, cfg.controller.detector());
    let mut traces = Vec::new();
    for _ in 0..2 {
        sup.reset(&mut ctrl);
        let mut rig = FingerRig::new(FingerPlant::new(cfg.plant, cfg.finger_model(0), 77), model.clone());
        let mut trace = Trace::new(dt);
        for _ in 0..600 {
            let duty = sup.duty();
            let tick = rig.tick(Some(&obj), duty, dt).unwrap();
            trace.push(tick.row(duty, sup.mode().into()));
            sup.step(&mut ctrl, &tick.estimate, dt).unwrap();
        }
        traces.push(trace);
    }
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn switching_trace_changes_mode_exactly_once() {
    let cfg = Config::default();
    let res = run_switching_experiment(&cfg, 4).unwrap();
    let trace = res.runs[0].trace.as_ref().unwrap();
    let modes: Vec<TraceMode> = trace.rows().iter().map(|r| r.mode).collect();
    let changes = modes.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(changes, 1);
    assert_eq!(modes[0], TraceMode::Approach);
    assert_eq!(*modes.last().unwrap(), TraceMode::ForceControl);
    for r in trace.rows() {
        assert!((0.0..=100.0).contains(&r.duty));
    }
    let m = res.runs[0].metrics;
    assert!(m.settled);
    let duty = res.runs[0].steady_duty;
    assert!((20.0..80.0).contains(&duty), "steady duty {duty}");
}

#[test]
fn trace_csv_roundtrips_through_file() {
    let cfg = Config::default();
    let res = run_switching_experiment(&cfg, 2).unwrap();
    let trace = res.runs[0].trace.as_ref().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    trace.save(&path).unwrap();
    let back = Trace::load(&path).unwrap();
    assert_eq!(back.rows(), trace.rows());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t,duty,pressure_kpa,angle_deg,f_m,f_i_pred,f_c_est,f_c_true,mode"
    );
    for (i, r) in back.rows().iter().enumerate() {
        assert_eq!(r.t, i as f64 * cfg.controller.period);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = small_grasp_config();
    let a = pool(1).install(|| run_grasp_sweep(&cfg, 9).unwrap());
    let b = pool(4).install(|| run_grasp_sweep(&cfg, 9).unwrap());
    assert_eq!(a, b);
    let mut scfg = Config::default();
    scfg.experiments.step.runs = 2;
    scfg.experiments.step.segment_duration = 3.0;
    let a = pool(1).install(|| run_step_response(&scfg, 9).unwrap());
    let b = pool(3).install(|| run_step_response(&scfg, 9).unwrap());
    assert_eq!(a, b);
}

#[test]
fn grasp_table_shape_and_percentages() {
    let cfg = small_grasp_config();
    let table = run_grasp_sweep(&cfg, 1).unwrap();
    assert_eq!(table.objects.len(), cfg.experiments.grasp.objects.len());
    for obj in &table.objects {
        assert_eq!(obj.rows.len(), 2);
        for row in &obj.rows {
            assert_eq!(row.trials.len(), 4);
            for pct in [row.dropped_pct, row.deformed_pct, row.broken_pct, row.success_pct] {
                assert_eq!((pct / 25.0).fract(), 0.0, "{pct} is not a multiple of 100/4");
            }
            for t in &row.trials {
                assert_eq!(t.targets[0] + t.targets[1], t.targets[2]);
                assert_eq!(t.success, !(t.outcome.dropped || t.outcome.deformed || t.outcome.broken));
            }
        }
    }
}

#[test]
fn free_space_probe_has_no_classification() {
    let cfg = Config::default();
    for seed in 0..5 {
        let model = run_calibration_experiment(&cfg, 0, seed).unwrap().internal_model(&cfg);
        let probe = probe_hardness(&cfg, None, None, model, seed + 50).unwrap();
        assert_eq!(probe.summary.classification, None);
        assert_eq!(probe.summary.contact_time, None);
    }
}

#[test]
fn engaged_step_run_starts_in_force_control() {
    let mut cfg = Config::default();
    cfg.experiments.step.runs = 1;
    cfg.experiments.step.segment_duration = 5.0;
    let res = run_step_response(&cfg, 1).unwrap();
    let run = &res.runs[0];
    assert_eq!(run.segments.len(), 2);
    let trace = run.trace.as_ref().unwrap();
    assert!(trace.rows().iter().all(|r| r.mode == TraceMode::ForceControl));
    assert_eq!(trace.len(), 600);
}
