use serde::{Deserialize, Serialize};

/// Half-width of the settling band as a fraction of the target.
pub const SETTLING_BAND: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    /// RMS tracking error after settling, N. Over the whole window if the
    /// response never settled.
    pub rms_error_post_settle: f64,
    /// Time from the start of the window until the response enters the band
    /// for good, s. `None` when it is outside the band at the end.
    pub settling_time: Option<f64>,
    /// Peak excursion past the target in the step's direction, as a
    /// fraction of the target.
    pub overshoot: f64,
    pub settled: bool,
}

/// Metrics of `values`, sampled every `dt` from the step instant, for a step
/// from `initial` to `target`.
pub fn step_metrics(dt: f64, values: &[f64], target: f64, initial: f64) -> StepMetrics {
    let tol = SETTLING_BAND * target.abs();
    let last_out = values.iter().rposition(|v| (v - target).abs() > tol);
    let (settled, start) = match last_out {
        None => (true, 0),
        Some(i) if i + 1 < values.len() => (true, i + 1),
        Some(_) => (false, 0),
    };
    let window = &values[start..];
    let rms = if window.is_empty() {
        0.0
    } else {
        (window.iter().map(|v| (v - target).powi(2)).sum::<f64>() / window.len() as f64).sqrt()
    };
    let direction = if target >= initial { 1.0 } else { -1.0 };
    let peak = values
        .iter()
        .map(|v| direction * (v - target))
        .fold(0.0_f64, f64::max);
    StepMetrics {
        rms_error_post_settle: rms,
        settling_time: settled.then_some(start as f64 * dt),
        overshoot: if target != 0.0 { peak / target.abs() } else { 0.0 },
        settled,
    }
}

/// Aggregate of consecutive segments: worst settling time and overshoot,
/// RMS over all post-settle samples.
pub fn combine(segments: &[(StepMetrics, usize)]) -> StepMetrics {
    let settled = segments.iter().all(|(m, _)| m.settled);
    let settling_time = if settled {
        segments
            .iter()
            .filter_map(|(m, _)| m.settling_time)
            .reduce(f64::max)
    } else {
        None
    };
    let (sq, n) = segments.iter().fold((0.0, 0usize), |(sq, n), (m, count)| {
        (sq + m.rms_error_post_settle.powi(2) * *count as f64, n + count)
    });
    StepMetrics {
        rms_error_post_settle: if n > 0 { (sq / n as f64).sqrt() } else { 0.0 },
        settling_time,
        overshoot: segments.iter().map(|(m, _)| m.overshoot).fold(0.0, f64::max),
        settled,
    }
}

/// Number of samples `step_metrics` averaged over for its RMS.
pub fn post_settle_len(dt: f64, len: usize, m: &StepMetrics) -> usize {
    match m.settling_time {
        Some(t) => len - (t / dt).round() as usize,
        None => len,
    }
}
