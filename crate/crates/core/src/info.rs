//! Information measures on finite distributions, in nats.
//!
//! `0 ln 0` is taken as 0. Entropies are computed from the sorted list of
//! terms with compensated summation, so they are exactly invariant under any
//! relabelling of outcomes.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::{neg_p_ln_p, CompensatedSum, Real};

/// Normalization slack for distributions and joint tables.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

pub fn nats_to_bits<T: Real>(nats: T) -> T {
    nats / T::ln_2()
}

/// Event of probability `p` in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoEvent<T: Real = f64> {
    p: T,
}

impl<T: Real> InfoEvent<T> {
    pub fn new(p: T) -> Result<Self> {
        if !(p > T::zero()) || p > T::one() {
            return Err(Error::invalid(format!("event probability must lie in (0, 1], got {p}")));
        }
        Ok(Self { p })
    }

    pub fn probability(&self) -> T {
        self.p
    }
}

/// `|I| = -ln p`.
pub fn info_measure<T: Real>(e: InfoEvent<T>) -> T {
    if e.p == T::one() {
        T::zero()
    } else {
        -e.p.ln()
    }
}

/// Order-independent sum of `-p ln p`, clamped at zero against rounding in
/// marginals that sum to slightly more than one.
fn entropy_of<T: Real>(probs: impl IntoIterator<Item = T>) -> T {
    let mut terms: Vec<f64> = probs.into_iter().map(|p| neg_p_ln_p(p).to_f64_lossy()).collect();
    terms.sort_by(f64::total_cmp);
    T::lit(terms.into_iter().collect::<CompensatedSum>().value().max(0.0))
}

fn check_distribution<T: Real>(probs: &[T]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::invalid("empty distribution"));
    }
    if let Some(p) = probs.iter().find(|p| !(**p >= T::zero()) || !p.is_finite()) {
        return Err(Error::invalid(format!("probabilities must be finite and nonnegative, got {p}")));
    }
    let total = probs.iter().map(|p| p.to_f64_lossy()).collect::<CompensatedSum>().value();
    if (total - 1.0).abs() > NORMALIZATION_TOLERANCE.max(T::TOLERANCE_FLOOR) {
        return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

/// Shannon entropy of a normalized distribution.
pub fn shannon_entropy<T: Real>(probs: &[T]) -> Result<T> {
    check_distribution(probs)?;
    Ok(entropy_of(probs.iter().copied()))
}

/// Probability table `P(x, y)` over a finite grid; rows index `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution<T: Real = f64> {
    table: DMatrix<T>,
}

impl<T: Real> JointDistribution<T> {
    pub fn new(table: DMatrix<T>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::invalid("empty joint table"));
        }
        check_distribution(table.as_slice())?;
        Ok(Self { table })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if nx == 0 || ny == 0 || rows.iter().any(|r| r.len() != ny) {
            return Err(Error::invalid("joint table rows must be nonempty and of equal length"));
        }
        Self::new(DMatrix::from_fn(nx, ny, |i, j| rows[i][j]))
    }

    /// Product of two marginals.
    pub fn independent(px: &[T], py: &[T]) -> Result<Self> {
        check_distribution(px)?;
        check_distribution(py)?;
        Self::new(DMatrix::from_fn(px.len(), py.len(), |i, j| px[i] * py[j]))
    }

    pub fn table(&self) -> &DMatrix<T> {
        &self.table
    }

    pub fn shape(&self) -> (usize, usize) {
        self.table.shape()
    }

    pub fn marginal_x(&self) -> Vec<T> {
        self.table.row_iter().map(|r| r.iter().copied().fold(T::zero(), |a, b| a + b)).collect()
    }

    pub fn marginal_y(&self) -> Vec<T> {
        self.table.column_iter().map(|c| c.iter().copied().fold(T::zero(), |a, b| a + b)).collect()
    }
}

/// The five entropies of a joint distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entropies<T: Real = f64> {
    pub h_x: T,
    pub h_y: T,
    pub h_xy: T,
    pub h_x_given_y: T,
    pub mutual: T,
}

/// `H^M = sum P(x,y) ln[P(x,y) / (P(x) P(y))]`, clamped at zero.
pub fn mutual_information<T: Real>(j: &JointDistribution<T>) -> T {
    let px = j.marginal_x();
    let py = j.marginal_y();
    let mut acc = CompensatedSum::new();
    for (col, &qy) in py.iter().enumerate() {
        for (row, &qx) in px.iter().enumerate() {
            let p = j.table[(row, col)];
            if p > T::zero() {
                acc.add((p * (p / (qx * qy)).ln()).to_f64_lossy());
            }
        }
    }
    T::lit(acc.value().max(0.0))
}

/// Marginal, joint and conditional entropies plus the mutual information.
///
/// `H(X|Y)` is evaluated directly from `P(x|y)` rather than by subtraction.
pub fn entropies<T: Real>(j: &JointDistribution<T>) -> Entropies<T> {
    let px = j.marginal_x();
    let py = j.marginal_y();
    let h_x = entropy_of(px.iter().copied());
    let h_y = entropy_of(py.iter().copied());
    let h_xy = entropy_of(j.table.iter().copied());
    let mut cond = CompensatedSum::new();
    for (col, &qy) in py.iter().enumerate() {
        for row in 0..px.len() {
            let p = j.table[(row, col)];
            if p > T::zero() {
                cond.add((-p * (p / qy).ln()).to_f64_lossy());
            }
        }
    }
    Entropies { h_x, h_y, h_xy, h_x_given_y: T::lit(cond.value().max(0.0)), mutual: mutual_information(j) }
}

/// Entropy before and after pushing `probs` through `mapping`
/// (outcome `i` goes to `mapping[i]`).
///
/// A bijection leaves the entropy bit-identical; merging outcomes lowers it.
pub fn transform_conservation_check<T: Real>(probs: &[T], mapping: &[usize]) -> Result<(T, T)> {
    check_distribution(probs)?;
    if mapping.len() != probs.len() {
        return Err(Error::invalid(format!(
            "mapping covers {} outcomes but the distribution has {}",
            mapping.len(),
            probs.len()
        )));
    }
    let width = mapping.iter().copied().max().map_or(0, |m| m + 1);
    let mut image = vec![T::zero(); width];
    for (&p, &m) in probs.iter().zip(mapping) {
        image[m] += p;
    }
    Ok((entropy_of(probs.iter().copied()), entropy_of(image)))
}

/// Information bookkeeping of a single collapse onto outcome `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseBalance<T: Real = f64> {
    /// `-ln p_k`: information created by the actualized outcome.
    pub created: T,
    /// Shannon entropy of the pre-collapse outcome distribution, which the
    /// collapse removes.
    pub prior_entropy: T,
}

pub fn collapse_balance<T: Real>(probs: &[T], k: usize) -> Result<CollapseBalance<T>> {
    check_distribution(probs)?;
    let p = *probs
        .get(k)
        .ok_or_else(|| Error::invalid(format!("outcome {k} out of range for {} outcomes", probs.len())))?;
    if p == T::zero() {
        return Err(Error::ForbiddenTransition);
    }
    Ok(CollapseBalance { created: info_measure(InfoEvent::new(p)?), prior_entropy: entropy_of(probs.iter().copied()) })
}

/// Microstates excluded when a discretization with `accessible_before` cells
/// is reduced to `accessible_after` cells. Only meaningful for a fixed
/// discretization.
pub fn forbidden_microstates(accessible_before: u64, accessible_after: u64) -> Result<u64> {
    accessible_before
        .checked_sub(accessible_after)
        .ok_or_else(|| Error::invalid("a collapse cannot enlarge the accessible set"))
}
