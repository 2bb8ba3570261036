#![allow(dead_code)]

use collapse_core::quantum::{DensityMatrix, HermitianOperator, StateVector};
use collapse_core::rng::normal;
use collapse_core::Complex;
use nalgebra::DMatrix;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

pub fn random_state<R: Rng>(dim: usize, rng: &mut R) -> StateVector {
    let amps = (0..dim).map(|_| c(normal(rng), normal(rng))).collect();
    StateVector::normalized(amps).unwrap()
}

pub fn random_hermitian<R: Rng>(dim: usize, rng: &mut R) -> HermitianOperator {
    let m = DMatrix::from_fn(dim, dim, |_, _| c(normal(rng), normal(rng)));
    HermitianOperator::new((&m + m.adjoint()) * c(0.5, 0.0)).unwrap()
}

/// Mixture of `rank` random pure states with random weights.
pub fn random_density<R: Rng>(dim: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let w: Vec<f64> = (0..rank).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = w.iter().sum();
    let w: Vec<f64> = w.iter().map(|x| x / total).collect();
    let states: Vec<StateVector> = (0..rank).map(|_| random_state(dim, rng)).collect();
    DensityMatrix::from_ensemble(&w, &states).unwrap()
}

/// `exp(-i H t)` by scaling and squaring of a Taylor series.
pub fn expm_taylor(h: &DMatrix<Complex<f64>>, t: f64) -> DMatrix<Complex<f64>> {
    let n = h.nrows();
    let a = h * c(0.0, -t);
    let norm = a.iter().map(|z| z.norm()).sum::<f64>();
    let s = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let a = &a * c(0.5_f64.powi(s), 0.0);
    let mut term = DMatrix::<Complex<f64>>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &a * c(1.0 / k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Upper-tail p-value of Pearson's statistic for observed counts against
/// expected probabilities.
pub fn chi_squared_p(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = (probs.len() - 1) as f64;
    1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
}

/// Kolmogorov–Smirnov distance of a sample from a continuous CDF.
pub fn ks_distance(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Critical KS distance at significance 0.001 for `n` draws.
pub fn ks_critical_001(n: usize) -> f64 {
    1.949 / (n as f64).sqrt()
}
