#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use softgrip::calibration::Sample;

pub const QUARTIC: [f64; 5] = [0.05, -0.01, 0.002, -0.0001, 0.000002];

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Exact least-squares weights from the normal equations, solved in
/// rational arithmetic and rounded once at the end.
pub fn exact_least_squares(samples: &[Sample], degree: usize) -> Vec<f64> {
    let p = degree + 1;
    let xs: Vec<BigRational> = samples.iter().map(|s| rat(s.angle)).collect();
    let ys: Vec<BigRational> = samples.iter().map(|s| rat(s.force)).collect();
    let powers: Vec<Vec<BigRational>> = xs
        .iter()
        .map(|x| {
            let mut row = Vec::with_capacity(2 * p);
            let mut acc = BigRational::from_integer(BigInt::from(1));
            for _ in 0..(2 * p) {
                row.push(acc.clone());
                acc = &acc * x;
            }
            row
        })
        .collect();

    // Augmented matrix [XᵀX | Xᵀy].
    let mut m: Vec<Vec<BigRational>> = (0..p)
        .map(|i| {
            let mut row: Vec<BigRational> = (0..p)
                .map(|j| powers.iter().map(|pw| &pw[i + j]).sum())
                .collect();
            row.push(powers.iter().zip(&ys).map(|(pw, y)| &pw[i] * y).sum());
            row
        })
        .collect();

    for col in 0..p {
        let pivot = (col..p)
            .find(|&r| !m[r][col].is_zero())
            .expect("normal equations are singular");
        m.swap(col, pivot);
        let lead = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v = &*v / &lead;
        }
        for r in 0..p {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..=p {
                    let sub = &f * &m[col][c];
                    m[r][c] = &m[r][c] - sub;
                }
            }
        }
    }
    m.iter().map(|row| row[p].to_f64().unwrap()).collect()
}

/// The quartic evaluated by explicit powers.
pub fn power_sum(weights: &[f64], x: f64) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(d, w)| w * x.powi(d as i32))
        .sum()
}

/// `n` evenly spaced noiseless samples of `weights` over `[lo, hi]`.
pub fn grid_samples(weights: &[f64], n: usize, lo: f64, hi: f64) -> Vec<Sample> {
    (0..n)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            Sample::new(x, power_sum(weights, x)).unwrap()
        })
        .collect()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}
