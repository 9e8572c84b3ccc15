//! Approach in free space, detect contact, and hand over to force control.

use softgrip::config::Config;
use softgrip::harness::{run_switching_experiment, TraceMode};

fn main() -> softgrip::Result<()> {
    let cfg = Config::default();
    let res = run_switching_experiment(&cfg, 11)?;
    for run in &res.runs {
        let trace = run.trace.as_ref().expect("traces are kept");
        let first = trace.rows().iter().find(|r| r.mode == TraceMode::ForceControl);
        println!(
            "run {}: switch at {:?} s (duty {:.1} %), overshoot {:.2} %, rms {:.4} N, steady duty {:.1} %",
            run.run,
            run.switch_time,
            first.map_or(f64::NAN, |r| r.duty),
            100.0 * run.metrics.overshoot,
            run.metrics.rms_error_post_settle,
            run.steady_duty
        );
    }
    Ok(())
}
