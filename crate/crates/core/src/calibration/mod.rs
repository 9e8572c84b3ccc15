//! Internal-force calibration.
//!
//! A bent soft finger makes its force-sensing resistor read a spurious
//! "internal" force that depends only on the bend angle. This module fits
//! that artifact as a polynomial in the angle by ordinary least squares and
//! chooses the polynomial degree with the Bayesian information criterion.
//!
//! Angles are taken raw in degrees. Internally the design matrix is built
//! on `angle / max|angle|` with every column scaled to unit norm, and solved
//! by Householder QR; the returned weights are mapped back to raw units.

mod io;

pub use io::{load_report, load_samples, parse_samples, save_report, save_samples};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound on the residual variance used by [`bic_score`], in N².
pub const SIGMA2_FLOOR: f64 = 1e-12;

/// Highest degree tried by [`select_model`] when no other bound is given.
pub const DEFAULT_MAX_DEGREE: usize = 6;

/// Relative pivot size below which the design matrix is treated as singular.
const RANK_TOLERANCE: f64 = 1e-10;

/// One free-space observation: bend angle and the force the sensor reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Bend angle in degrees.
    pub angle: f64,
    /// Sensor force in newtons.
    pub force: f64,
}

impl Sample {
    pub fn new(angle: f64, force: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::InvalidSample(format!("angle {angle} is not finite")));
        }
        if !force.is_finite() || force < 0.0 {
            return Err(Error::InvalidSample(format!(
                "force {force} must be finite and non-negative"
            )));
        }
        Ok(Self { angle, force })
    }
}

/// Internal-force predictor `F_i(x) = Σ w_d x^d`, weights ordered from the
/// constant term upwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct PolynomialModel {
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    degree: usize,
    weights: Vec<f64>,
}

impl TryFrom<RawModel> for PolynomialModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        if raw.weights.len() != raw.degree + 1 {
            return Err(Error::InvalidSample(format!(
                "degree {} needs {} weights, got {}",
                raw.degree,
                raw.degree + 1,
                raw.weights.len()
            )));
        }
        PolynomialModel::new(raw.weights)
    }
}

impl From<PolynomialModel> for RawModel {
    fn from(model: PolynomialModel) -> Self {
        RawModel {
            degree: model.degree(),
            weights: model.weights,
        }
    }
}

impl PolynomialModel {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSample("a polynomial needs at least one weight".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("polynomial weight"));
        }
        Ok(Self { weights })
    }

    pub fn degree(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Horner evaluation at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.weights.iter().rev().fold(0.0, |acc, &w| acc * x + w)
    }
}

/// Column-equilibrated polynomial design matrix, stored column by column.
struct Design {
    scale: f64,
    norms: Vec<f64>,
    columns: Vec<Vec<f64>>,
}

impl Design {
    fn new(samples: &[Sample], degree: usize) -> Self {
        let scale = samples
            .iter()
            .map(|s| s.angle.abs())
            .fold(0.0_f64, f64::max);
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let mut columns = Vec::with_capacity(degree + 1);
        let mut norms = Vec::with_capacity(degree + 1);
        for d in 0..=degree {
            let mut col: Vec<f64> = samples
                .iter()
                .map(|s| (s.angle / scale).powi(d as i32))
                .collect();
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                col.iter_mut().for_each(|v| *v /= norm);
            }
            norms.push(norm);
            columns.push(col);
        }
        Self {
            scale,
            norms,
            columns,
        }
    }
}

/// Ordinary least-squares fit of a degree-`degree` polynomial.
pub fn fit_polynomial(samples: &[Sample], degree: usize) -> Result<PolynomialModel> {
    let p = degree + 1;
    if samples.len() < p {
        return Err(Error::InsufficientData {
            needed: p,
            got: samples.len(),
        });
    }
    let design = Design::new(samples, degree);
    if design.norms.contains(&0.0) {
        return Err(Error::RankDeficient { degree });
    }
    let m = samples.len();
    let mut a = design.columns;
    let mut y: Vec<f64> = samples.iter().map(|s| s.force).collect();
    let mut diag = vec![0.0; p];

    for j in 0..p {
        let norm = a[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::RankDeficient { degree });
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[j][j..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        diag[j] = alpha;
        if vv == 0.0 {
            continue;
        }
        for col in a.iter_mut().skip(j + 1) {
            let dot: f64 = v.iter().zip(&col[j..m]).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vv;
            col[j..m].iter_mut().zip(&v).for_each(|(c, vi)| *c -= f * vi);
        }
        let dot: f64 = v.iter().zip(&y[j..m]).map(|(a, b)| a * b).sum();
        let f = 2.0 * dot / vv;
        y[j..m].iter_mut().zip(&v).for_each(|(c, vi)| *c -= f * vi);
    }

    let largest = diag.iter().map(|d| d.abs()).fold(0.0_f64, f64::max);
    if diag.iter().any(|d| d.abs() <= RANK_TOLERANCE * largest) {
        return Err(Error::RankDeficient { degree });
    }

    // Back substitution on R c = Qᵀy. R's strict upper part lives in a[col][row].
    let mut coef = vec![0.0; p];
    for i in (0..p).rev() {
        let tail: f64 = ((i + 1)..p).map(|k| a[k][i] * coef[k]).sum();
        coef[i] = (y[i] - tail) / diag[i];
    }

    let weights = coef
        .iter()
        .enumerate()
        .map(|(d, c)| c / (design.norms[d] * design.scale.powi(d as i32)))
        .collect();
    PolynomialModel::new(weights)
}

/// `‖X̃ᵀ(Xw − y)‖` with `X̃` the equilibrated design matrix for the model's
/// degree. Zero (to rounding) for every least-squares solution.
pub fn normal_residual_norm(model: &PolynomialModel, samples: &[Sample]) -> f64 {
    let design = Design::new(samples, model.degree());
    let residuals: Vec<f64> = samples
        .iter()
        .map(|s| model.eval(s.angle) - s.force)
        .collect();
    design
        .columns
        .iter()
        .map(|col| {
            let g: f64 = col.iter().zip(&residuals).map(|(a, r)| a * r).sum();
            g * g
        })
        .sum::<f64>()
        .sqrt()
}

pub fn residual_sum_of_squares(model: &PolynomialModel, samples: &[Sample]) -> f64 {
    samples
        .iter()
        .map(|s| {
            let r = s.force - model.eval(s.angle);
            r * r
        })
        .sum()
}

/// BIC from its ingredients: `ln(n)·k + n·(ln(2π·σ̂²) + 1)` with
/// `σ̂² = max(rss/n, SIGMA2_FLOOR)`.
pub fn bic_from_rss(n: usize, k: usize, rss: f64) -> f64 {
    let n_f = n as f64;
    let sigma2 = (rss / n_f).max(SIGMA2_FLOOR);
    n_f.ln() * k as f64 + n_f * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0)
}

/// Bayesian information criterion of `model` on `samples` under a Gaussian
/// residual likelihood. Lower is better; `k` counts the polynomial weights.
pub fn bic_score(model: &PolynomialModel, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let rss = residual_sum_of_squares(model, samples);
    Ok(bic_from_rss(samples.len(), model.degree() + 1, rss))
}

/// Coefficient of determination `1 − RSS/TSS`.
pub fn r_squared(model: &PolynomialModel, samples: &[Sample]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: samples.len(),
        });
    }
    let first = samples[0].force;
    if samples.iter().all(|s| s.force == first) {
        return Err(Error::ZeroVariance);
    }
    let mean = samples.iter().map(|s| s.force).sum::<f64>() / samples.len() as f64;
    let tss: f64 = samples.iter().map(|s| (s.force - mean).powi(2)).sum();
    let rss = residual_sum_of_squares(model, samples);
    Ok((1.0 - rss / tss).min(1.0))
}

/// Fit statistics of one candidate degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeRecord {
    pub degree: usize,
    pub weights: Vec<f64>,
    pub rss: f64,
    pub sigma2_hat: f64,
    pub bic: f64,
    /// `None` when the forces have no variance.
    pub r_squared: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedDegree {
    pub degree: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub n_samples: usize,
    pub angle_min: f64,
    pub angle_max: f64,
    pub records: Vec<DegreeRecord>,
    pub skipped: Vec<SkippedDegree>,
    pub selected_degree: usize,
}

impl CalibrationReport {
    pub fn selected(&self) -> &DegreeRecord {
        self.records
            .iter()
            .find(|r| r.degree == self.selected_degree)
            .expect("selected degree always has a record")
    }

    pub fn model(&self) -> PolynomialModel {
        PolynomialModel::new(self.selected().weights.clone())
            .expect("recorded weights are finite")
    }
}

/// Fit every degree in `0..=max_degree` and keep the one with the lowest
/// BIC. Ties go to the lower degree. Degrees that cannot be fitted are
/// recorded in `skipped`.
pub fn select_model(samples: &[Sample], max_degree: usize) -> Result<CalibrationReport> {
    if samples.len() <= max_degree + 1 {
        return Err(Error::InsufficientData {
            needed: max_degree + 2,
            got: samples.len(),
        });
    }
    let n = samples.len();
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for degree in 0..=max_degree {
        match fit_polynomial(samples, degree) {
            Ok(model) => {
                let rss = residual_sum_of_squares(&model, samples);
                let r2 = match r_squared(&model, samples) {
                    Ok(v) => Some(v.max(0.0)),
                    Err(Error::ZeroVariance) => None,
                    Err(e) => return Err(e),
                };
                records.push(DegreeRecord {
                    degree,
                    weights: model.weights().to_vec(),
                    rss,
                    sigma2_hat: (rss / n as f64).max(SIGMA2_FLOOR),
                    bic: bic_from_rss(n, degree + 1, rss),
                    r_squared: r2,
                });
            }
            Err(e) => {
                log::debug!("degree {degree} skipped: {e}");
                skipped.push(SkippedDegree {
                    degree,
                    reason: e.to_string(),
                });
            }
        }
    }
    let best = records
        .iter()
        .fold(None::<&DegreeRecord>, |best, r| match best {
            Some(b) if b.bic <= r.bic => Some(b),
            _ => Some(r),
        })
        .ok_or(Error::NoModel)?;
    let selected_degree = best.degree;
    let (angle_min, angle_max) = angle_span(samples);
    Ok(CalibrationReport {
        n_samples: n,
        angle_min,
        angle_max,
        records,
        skipped,
        selected_degree,
    })
}

pub fn angle_span(samples: &[Sample]) -> (f64, f64) {
    samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
        (lo.min(s.angle), hi.max(s.angle))
    })
}

/// Per-coefficient standard deviation of the degree-`degree` fit over
/// `resamples` bootstrap resamples of `samples`.
pub fn bootstrap_weight_spread<R: Rng + ?Sized>(
    samples: &[Sample],
    degree: usize,
    resamples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut draws: Vec<Vec<f64>> = Vec::with_capacity(resamples);
    let mut buf = Vec::with_capacity(samples.len());
    while draws.len() < resamples {
        buf.clear();
        buf.extend((0..samples.len()).map(|_| samples[rng.random_range(0..samples.len())]));
        match fit_polynomial(&buf, degree) {
            Ok(m) => draws.push(m.weights().to_vec()),
            Err(Error::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    let count = draws.len() as f64;
    Ok((0..=degree)
        .map(|d| {
            let mean = draws.iter().map(|w| w[d]).sum::<f64>() / count;
            let var = draws.iter().map(|w| (w[d] - mean).powi(2)).sum::<f64>() / (count - 1.0);
            var.sqrt()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(points: &[(f64, f64)]) -> Vec<Sample> {
        points.iter().map(|&(a, f)| Sample::new(a, f).unwrap()).collect()
    }

    #[test]
    fn exact_line() {
        let s = samples(&[(0.0, 0.0), (1.0, 2.0), (2.0, 4.0), (3.0, 6.0)]);
        let m = fit_polynomial(&s, 1).unwrap();
        assert!(m.weights()[0].abs() < 1e-12);
        assert!((m.weights()[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_is_mean() {
        let s = samples(&[(5.0, 0.7), (12.0, 0.7), (40.0, 0.7)]);
        let m = fit_polynomial(&s, 0).unwrap();
        assert!((m.weights()[0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn too_few_samples() {
        let s = samples(&[(1.0, 1.0), (2.0, 2.0)]);
        assert!(matches!(
            fit_polynomial(&s, 2),
            Err(Error::InsufficientData { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn identical_angles_are_rank_deficient() {
        let s = samples(&[(10.0, 1.0), (10.0, 1.2), (10.0, 0.9)]);
        assert!(matches!(fit_polynomial(&s, 1), Err(Error::RankDeficient { .. })));
        let zeros = samples(&[(0.0, 1.0), (0.0, 1.2), (0.0, 0.9)]);
        assert!(matches!(fit_polynomial(&zeros, 2), Err(Error::RankDeficient { .. })));
        // A constant still fits.
        assert!(fit_polynomial(&s, 0).is_ok());
    }

    #[test]
    fn bic_closed_form() {
        let n = 10;
        // σ̂² = 1 when RSS = n.
        let bic = bic_from_rss(n, 1, n as f64);
        let expected = (10.0_f64).ln() + 10.0 * ((2.0 * std::f64::consts::PI).ln() + 1.0);
        assert!((bic - expected).abs() < 1e-12);
        let bumped = bic_from_rss(n, 2, n as f64);
        assert!((bumped - bic - (10.0_f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn bic_is_finite_on_perfect_fit() {
        let s = samples(&[(0.0, 0.0), (1.0, 2.0), (2.0, 4.0), (3.0, 6.0)]);
        let m = PolynomialModel::new(vec![0.0, 2.0]).unwrap();
        let bic = bic_score(&m, &s).unwrap();
        assert_eq!(bic, bic_from_rss(4, 2, 0.0));
        assert!(bic.is_finite());
        assert!(bic_score(&m, &[]).is_err());
    }

    #[test]
    fn r_squared_edges() {
        let s = samples(&[(0.0, 1.0), (1.0, 3.0), (2.0, 2.0), (3.0, 6.0)]);
        let mean = 3.0;
        let flat = PolynomialModel::new(vec![mean]).unwrap();
        assert!(r_squared(&flat, &s).unwrap().abs() < 1e-15);

        let line = samples(&[(0.0, 0.0), (1.0, 2.0), (2.0, 4.0)]);
        let exact = PolynomialModel::new(vec![0.0, 2.0]).unwrap();
        assert_eq!(r_squared(&exact, &line).unwrap(), 1.0);

        let same = samples(&[(0.0, 0.4), (1.0, 0.4)]);
        assert!(matches!(r_squared(&exact, &same), Err(Error::ZeroVariance)));
    }

    #[test]
    fn exact_line_selects_degree_one() {
        let s: Vec<Sample> = (0..12)
            .map(|i| Sample::new(i as f64, 0.3 + 0.1 * i as f64).unwrap())
            .collect();
        let report = select_model(&s, 3).unwrap();
        assert_eq!(report.selected_degree, 1);
        assert_eq!(report.records.len(), 4);
    }

    #[test]
    fn select_needs_more_than_max_degree_plus_one() {
        let s = samples(&[(0.0, 1.0), (1.0, 2.0), (2.0, 2.5)]);
        assert!(matches!(
            select_model(&s, 2),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn select_records_skipped_degrees() {
        // Two distinct angles: degrees >= 2 are rank deficient.
        let s = samples(&[
            (1.0, 1.0),
            (1.0, 1.1),
            (2.0, 2.0),
            (2.0, 2.1),
            (1.0, 0.9),
        ]);
        let report = select_model(&s, 3).unwrap();
        assert_eq!(
            report.skipped.iter().map(|s| s.degree).collect::<Vec<_>>(),
            vec![2, 3]
        );
        assert_eq!(report.selected_degree, 1);

        let degenerate = samples(&[(0.0, 1.0), (0.0, 1.1), (0.0, 1.2)]);
        let report = select_model(&degenerate, 1).unwrap();
        assert_eq!(report.selected_degree, 0);
    }

    #[test]
    fn sample_validation() {
        assert!(Sample::new(f64::NAN, 1.0).is_err());
        assert!(Sample::new(1.0, -0.1).is_err());
        assert!(Sample::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn model_json_checks_degree() {
        let bad = r#"{"degree":2,"weights":[1.0,2.0]}"#;
        assert!(serde_json::from_str::<PolynomialModel>(bad).is_err());
        let good = r#"{"degree":1,"weights":[1.0,2.0]}"#;
        let m: PolynomialModel = serde_json::from_str(good).unwrap();
        assert_eq!(m.eval(3.0), 7.0);
    }
}
