//! Grasp trials over objects and set-points, printed as outcome percentages.

use softgrip::config::Config;
use softgrip::harness::run_grasp_sweep;

fn main() -> softgrip::Result<()> {
    let cfg = Config::default();
    let table = run_grasp_sweep(&cfg, 1)?;
    println!("{} trials per cell", table.n_trials);
    for obj in &table.objects {
        println!("{}", obj.object);
        println!("  force  dropped  deformed  broken  success");
        for r in &obj.rows {
            println!(
                "  {:>5.1}  {:>7.0}  {:>8.0}  {:>6.0}  {:>7.0}",
                r.target_force, r.dropped_pct, r.deformed_pct, r.broken_pct, r.success_pct
            );
        }
    }
    Ok(())
}
