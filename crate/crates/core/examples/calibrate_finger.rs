//! Calibrates one finger in free space and prints the BIC table.

use softgrip::config::Config;
use softgrip::harness::run_calibration_experiment;

fn main() -> softgrip::Result<()> {
    let cfg = Config::default();
    let run = run_calibration_experiment(&cfg, 0, 42)?;
    println!("{} samples from {} cycles", run.samples.len(), cfg.calibration.repetitions);
    println!("degree       BIC        R²");
    for rec in &run.report.records {
        let mark = if rec.degree == run.report.selected_degree { "*" } else { " " };
        println!(
            "{mark}{:>5} {:>10.2} {:>9.6}",
            rec.degree,
            rec.bic,
            rec.r_squared.unwrap_or(f64::NAN)
        );
    }
    println!("fitted weights: {:?}", run.report.model().weights());
    println!("plant weights:  {:?}", cfg.finger_model(0).weights());
    Ok(())
}
