//! Finite-dimensional state algebra: unitary evolution (process U), Born-rule
//! collapse (process R), entanglement, entropy and dephasing.
//!
//! Units are natural: `hbar = 1`, so times are inverse energies.

mod state;

pub use state::{Basis, BipartiteLabel, DensityMatrix, HermitianOperator, StateVector};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{cis, neg_p_ln_p, tolerances, Complex, Real};
use state::check_dim;

/// Exact propagator `exp(-i H dt)` built from one eigendecomposition of `H`
/// and reusable for any `dt`.
#[derive(Debug, Clone)]
pub struct UnitaryPropagator<T: Real = f64> {
    energies: DVector<T>,
    vectors: DMatrix<Complex<T>>,
}

impl<T: Real> UnitaryPropagator<T> {
    pub fn new(h: &HermitianOperator<T>) -> Self {
        let (energies, vectors) = h.eigen();
        Self { energies, vectors }
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &DVector<T> {
        &self.energies
    }

    /// `U(dt) = V diag(exp(-i E dt)) V^dagger`.
    pub fn unitary(&self, dt: T) -> Result<DMatrix<Complex<T>>> {
        if !dt.is_finite() {
            return Err(Error::invalid(format!("time step must be finite, got {dt}")));
        }
        let phases = self.energies.map(|e| cis(-e * dt));
        let mut scaled = self.vectors.clone();
        for (mut col, phase) in scaled.column_iter_mut().zip(phases.iter()) {
            col *= *phase;
        }
        Ok(scaled * self.vectors.adjoint())
    }

    pub fn evolve(&self, psi: &StateVector<T>, dt: T) -> Result<StateVector<T>> {
        check_dim(self.dim(), psi.dim())?;
        // Applying in the eigenbasis avoids forming U for a single vector.
        let coeffs = self.vectors.adjoint() * psi.amplitudes();
        let rotated = DVector::from_iterator(
            coeffs.len(),
            coeffs
                .iter()
                .zip(self.energies.iter())
                .map(|(c, &e)| *c * cis(-e * dt)),
        );
        StateVector::renormalize(&self.vectors * rotated)
    }
}

/// Evolve a pure state under a time-independent Hamiltonian for `dt`.
pub fn evolve_unitary<T: Real>(psi: &StateVector<T>, h: &HermitianOperator<T>, dt: T) -> Result<StateVector<T>> {
    if !dt.is_finite() {
        return Err(Error::invalid(format!("time step must be finite, got {dt}")));
    }
    UnitaryPropagator::new(h).evolve(psi, dt)
}

/// `rho(t) = U rho U^dagger`.
pub fn propagate_density<T: Real>(
    rho: &DensityMatrix<T>,
    h: &HermitianOperator<T>,
    dt: T,
) -> Result<DensityMatrix<T>> {
    check_dim(h.dim(), rho.dim())?;
    let u = UnitaryPropagator::new(h).unitary(dt)?;
    let evolved = &u * rho.matrix() * u.adjoint();
    // Symmetrize away the round-off so the result stays exactly Hermitian.
    let hermitian = (&evolved + evolved.adjoint()) * Complex::new(T::lit(0.5), T::zero());
    Ok(DensityMatrix::from_matrix_unchecked(hermitian))
}

/// `S = -Tr(rho ln rho)` in nats.
pub fn von_neumann_entropy<T: Real>(rho: &DensityMatrix<T>) -> T {
    let cutoff = T::lit(tolerances().entropy_cutoff);
    rho.eigenvalues()
        .into_iter()
        .filter(|&p| p > cutoff)
        .fold(T::zero(), |s, p| s + neg_p_ln_p(p))
}

/// `<A> = Tr(A rho)`.
pub fn expectation<T: Real>(rho: &DensityMatrix<T>, a: &HermitianOperator<T>) -> Result<T> {
    check_dim(rho.dim(), a.dim())?;
    let n = rho.dim();
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..n {
        for k in 0..n {
            acc += a.matrix()[(i, k)] * rho.matrix()[(k, i)];
        }
    }
    Ok(acc.re)
}

/// Transition probability `|<phi|psi>|^2`.
pub fn born_probability<T: Real>(psi: &StateVector<T>, phi: &StateVector<T>) -> Result<T> {
    Ok(phi.inner(psi)?.norm_sqr())
}

/// Sample one R-event: project `psi` onto an element of `basis` with Born
/// probabilities.
///
/// A single uniform draw is mapped through the cumulative probabilities;
/// ties go to the lowest index.
pub fn collapse<T: Real, R: Rng + ?Sized>(
    psi: &StateVector<T>,
    basis: &Basis<T>,
    rng: &mut R,
) -> Result<(usize, StateVector<T>)> {
    let probs = collapse_probabilities(psi, basis)?;
    let k = sample_index(&probs, rng);
    Ok((k, basis.vectors()[k].clone()))
}

/// Born probabilities of `psi` over `basis`, checked for completeness.
pub fn collapse_probabilities<T: Real>(psi: &StateVector<T>, basis: &Basis<T>) -> Result<Vec<T>> {
    check_dim(basis.dim(), psi.dim())?;
    let probs = basis.probabilities(psi)?;
    let total = probs.iter().fold(T::zero(), |s, &p| s + p);
    if (total - T::one()).abs() > T::tol(tolerances().basis) {
        return Err(Error::InvalidBasis(format!(
            "basis does not cover the state: probabilities sum to {total}"
        )));
    }
    Ok(probs)
}

/// Inverse-CDF sample from nonnegative weights (need not be normalized).
pub fn sample_index<T: Real, R: Rng + ?Sized>(weights: &[T], rng: &mut R) -> usize {
    let total = weights.iter().fold(T::zero(), |s, &p| s + p);
    let u = T::lit(rng.random::<f64>()) * total;
    let mut cumulative = T::zero();
    let mut last_positive = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > T::zero() {
            last_positive = k;
        }
        cumulative += w;
        if u < cumulative {
            return k;
        }
    }
    last_positive
}

/// Post-measurement mixture `sum_n p_n |a_n><a_n|` an ensemble of collapses
/// converges to.
pub fn measurement_mixture<T: Real>(psi: &StateVector<T>, basis: &Basis<T>) -> Result<DensityMatrix<T>> {
    let probs = collapse_probabilities(psi, basis)?;
    DensityMatrix::from_ensemble(&probs, basis.vectors())
}

/// Empirical density matrix of `n` independent collapses of copies of `psi`.
pub fn collapse_ensemble<T: Real, R: Rng + ?Sized>(
    psi: &StateVector<T>,
    basis: &Basis<T>,
    n: usize,
    rng: &mut R,
) -> Result<DensityMatrix<T>> {
    if n == 0 {
        return Err(Error::invalid("ensemble needs at least one trial"));
    }
    let probs = collapse_probabilities(psi, basis)?;
    let mut counts = vec![0usize; basis.len()];
    for _ in 0..n {
        counts[sample_index(&probs, rng)] += 1;
    }
    let weights: Vec<T> = counts
        .iter()
        .map(|&c| T::from_usize_lossy(c) / T::from_usize_lossy(n))
        .collect();
    DensityMatrix::from_ensemble(&weights, basis.vectors())
}

/// Information exchanged by the transition `psi -> phi`: `-2 ln |<phi|psi>|`.
pub fn collapse_info_measure<T: Real>(psi: &StateVector<T>, phi: &StateVector<T>) -> Result<T> {
    let p = born_probability(psi, phi)?;
    let floor = T::lit(1e-30).max(T::default_epsilon() * T::default_epsilon());
    if p <= floor {
        return Err(Error::ForbiddenTransition);
    }
    Ok((-p.ln()).max(T::zero()))
}

/// `a (x) b`, with index `i * dim_b + j`.
pub fn tensor_product<T: Real>(a: &StateVector<T>, b: &StateVector<T>) -> StateVector<T> {
    let (da, db) = (a.dim(), b.dim());
    let amps = DVector::from_fn(da * db, |idx, _| a.amplitude(idx / db) * b.amplitude(idx % db));
    StateVector::from_dvector_unchecked(amps)
}

/// Number of Schmidt coefficients above `tol`; 1 means separable.
pub fn schmidt_rank<T: Real>(psi: &StateVector<T>, split: BipartiteLabel, tol: T) -> Result<usize> {
    Ok(schmidt_coefficients(psi, split)?.into_iter().filter(|&s| s > tol).count())
}

/// Singular values of the `dim_a x dim_b` reshaped amplitude matrix,
/// descending.
pub fn schmidt_coefficients<T: Real>(psi: &StateVector<T>, split: BipartiteLabel) -> Result<Vec<T>> {
    if split.dim() != psi.dim() {
        return Err(Error::invalid(format!(
            "split {}x{} does not factor dimension {}",
            split.dim_a,
            split.dim_b,
            psi.dim()
        )));
    }
    let m = DMatrix::from_fn(split.dim_a, split.dim_b, |i, j| psi.amplitude(i * split.dim_b + j));
    let mut sv: Vec<T> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(sv)
}

/// Remove interference terms in `basis`: `sum_k P_k rho P_k`.
pub fn dephase<T: Real>(rho: &DensityMatrix<T>, basis: &Basis<T>) -> Result<DensityMatrix<T>> {
    check_dim(basis.dim(), rho.dim())?;
    if !basis.is_complete() {
        return Err(Error::InvalidBasis(format!(
            "dephasing needs a complete basis, got {} of {} vectors",
            basis.len(),
            basis.dim()
        )));
    }
    let n = rho.dim();
    let mut out = DMatrix::zeros(n, n);
    for b in basis.vectors() {
        let v = b.amplitudes();
        let weight = v.dotc(&(rho.matrix() * v));
        out += b.projector() * Complex::new(weight.re, T::zero());
    }
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// Sum of squared moduli of off-diagonal entries in `basis`.
pub fn off_diagonal_mass<T: Real>(rho: &DensityMatrix<T>, basis: &Basis<T>) -> Result<T> {
    check_dim(basis.dim(), rho.dim())?;
    let vs = basis.vectors();
    let mut mass = T::zero();
    for (i, a) in vs.iter().enumerate() {
        let ra = rho.matrix().adjoint() * a.amplitudes();
        for (j, b) in vs.iter().enumerate() {
            if i != j {
                mass += ra.dotc(b.amplitudes()).norm_sqr();
            }
        }
    }
    Ok(mass)
}
