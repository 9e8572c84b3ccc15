//! Presses a finger into a rigid block at several positions and compares
//! the estimated contact force with the simulated one.

use softgrip::config::Config;
use softgrip::harness::run_estimation_accuracy;

fn main() -> softgrip::Result<()> {
    let cfg = Config::default();
    let run = run_estimation_accuracy(&cfg, 3)?;
    let t = &run.table;
    println!("target {:.2} N", t.target_force);
    println!("position  duty   angle   true    est     |err|");
    for r in &t.rows {
        println!(
            "{:>6.1}  {:>5.1}  {:>6.2}  {:>5.3}  {:>5.3}  {:>6.3}{}",
            r.position_angle,
            r.duty,
            r.angle_deg,
            r.true_force,
            r.estimated_force,
            r.abs_error,
            if r.reached { "" } else { "  (unreached)" }
        );
    }
    println!("max |err| {:.3} N", t.max_abs_error);
    Ok(())
}
