//! Closed-loop set-point steps on a solid block, written as CSV traces.

use softgrip::config::Config;
use softgrip::harness::run_step_response;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = Config::default();
    let res = run_step_response(&cfg, 5)?;
    let out = std::env::temp_dir().join("softgrip_step");
    std::fs::create_dir_all(&out)?;
    for run in &res.runs {
        for s in &run.segments {
            println!(
                "run {} target {:.1} N at {:>4.1} s: rms {:.4} settling {:?} overshoot {:.1} %",
                run.run,
                s.target_force,
                s.start_time,
                s.metrics.rms_error_post_settle,
                s.metrics.settling_time,
                100.0 * s.metrics.overshoot
            );
        }
        if let Some(trace) = &run.trace {
            trace.save(out.join(format!("step_run{}.csv", run.run + 1)))?;
        }
    }
    println!("traces in {}", out.display());
    Ok(())
}
