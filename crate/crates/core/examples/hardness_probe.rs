//! Classifies objects as stiff or soft from the angle/force slope in contact.

use softgrip::config::Config;
use softgrip::harness::{probe_hardness, run_calibration_experiment, run_hardness_probe};

fn main() -> softgrip::Result<()> {
    let cfg = Config::default();
    let report = run_hardness_probe(&cfg, 8)?;
    for s in report.summaries() {
        println!(
            "{:<12} slope {:>7.3} deg/N over {:>4} samples -> {:?}",
            s.object.as_deref().unwrap_or("-"),
            s.slope.unwrap_or(f64::NAN),
            s.contact_samples,
            s.classification
        );
    }
    let model = run_calibration_experiment(&cfg, cfg.experiments.hardness.finger, 8)?.internal_model(&cfg);
    let free = probe_hardness(&cfg, None, None, model, 9)?;
    println!("free space   -> {:?}", free.summary.classification);
    Ok(())
}
