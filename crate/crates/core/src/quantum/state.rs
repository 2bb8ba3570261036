use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::numerics::{tolerances, Complex, Real};

/// Normalized pure state in a finite Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real = f64> {
    amps: DVector<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    /// Wrap amplitudes that must already be normalized.
    pub fn new(amps: Vec<Complex<T>>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::invalid("state vector needs at least one amplitude"));
        }
        let amps = DVector::from_vec(amps);
        let norm = amps.norm();
        if (norm - T::one()).abs() > T::tol(tolerances().norm) {
            return Err(Error::NotNormalized { norm: norm.to_f64_lossy() });
        }
        Ok(Self { amps })
    }

    /// Normalize arbitrary nonzero amplitudes.
    pub fn normalized(amps: Vec<Complex<T>>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::invalid("state vector needs at least one amplitude"));
        }
        let mut amps = DVector::from_vec(amps);
        let norm = amps.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::NotNormalized { norm: norm.to_f64_lossy() });
        }
        amps.unscale_mut(norm);
        Ok(Self { amps })
    }

    /// Normalize real amplitudes.
    pub fn from_real(amps: &[T]) -> Result<Self> {
        Self::normalized(amps.iter().map(|&a| Complex::new(a, T::zero())).collect())
    }

    /// Computational basis vector `|k>` of dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::invalid(format!("basis index {k} out of range for dim {dim}")));
        }
        let mut amps = DVector::zeros(dim);
        amps[k] = Complex::new(T::one(), T::zero());
        Ok(Self { amps })
    }

    pub(crate) fn from_dvector_unchecked(amps: DVector<Complex<T>>) -> Self {
        Self { amps }
    }

    /// Renormalize a raw vector, failing if it vanished.
    pub(crate) fn renormalize(mut amps: DVector<Complex<T>>) -> Result<Self> {
        let norm = amps.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::Numeric(format!("state norm collapsed to {norm}")));
        }
        amps.unscale_mut(norm);
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex<T>> {
        &self.amps
    }

    pub fn amplitude(&self, k: usize) -> Complex<T> {
        self.amps[k]
    }

    pub fn norm(&self) -> T {
        self.amps.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// `|self><self|`.
    pub fn projector(&self) -> DMatrix<Complex<T>> {
        &self.amps * self.amps.adjoint()
    }

    pub fn to_density(&self) -> DensityMatrix<T> {
        DensityMatrix { matrix: self.projector() }
    }

    /// Probabilities `|amp_k|^2` in the computational basis.
    pub fn probabilities(&self) -> Vec<T> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Equality up to a global phase: `|<self|other>| = 1` within `tol`.
    pub fn same_ray(&self, other: &Self, tol: T) -> bool {
        match self.inner(other) {
            Ok(z) => (z.modulus() - T::one()).abs() <= tol,
            Err(_) => false,
        }
    }
}

/// Hermitian operator: Hamiltonians (energy units, hbar = 1) and observables.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator<T: Real = f64> {
    matrix: DMatrix<Complex<T>>,
}

impl<T: Real> HermitianOperator<T> {
    pub fn new(matrix: DMatrix<Complex<T>>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::invalid(format!(
                "operator must be square and nonempty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let deviation = hermitian_deviation(&matrix);
        if !deviation.is_finite() || deviation > T::tol(tolerances().hermitian) {
            return Err(Error::NotHermitian { deviation: deviation.to_f64_lossy() });
        }
        Ok(Self { matrix })
    }

    /// Real symmetric matrix given row-major.
    pub fn from_real(dim: usize, entries: &[T]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        Self::new(DMatrix::from_row_iterator(
            dim,
            dim,
            entries.iter().map(|&x| Complex::new(x, T::zero())),
        ))
    }

    pub fn diagonal(values: &[T]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("operator must be nonempty"));
        }
        let diag = DVector::from_iterator(values.len(), values.iter().map(|&v| Complex::new(v, T::zero())));
        Ok(Self { matrix: DMatrix::from_diagonal(&diag) })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { matrix: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: DMatrix::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    /// Spectral decomposition: real eigenvalues and unitary eigenvector matrix
    /// (columns).
    pub fn eigen(&self) -> (DVector<T>, DMatrix<Complex<T>>) {
        let eig = SymmetricEigen::new(self.matrix.clone());
        (eig.eigenvalues, eig.eigenvectors)
    }

    pub fn apply(&self, psi: &StateVector<T>) -> Result<DVector<Complex<T>>> {
        check_dim(self.dim(), psi.dim())?;
        Ok(&self.matrix * psi.amplitudes())
    }

    /// `<psi|A|psi>`.
    pub fn mean(&self, psi: &StateVector<T>) -> Result<T> {
        let a_psi = self.apply(psi)?;
        Ok(psi.amplitudes().dotc(&a_psi).re)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { matrix: self.matrix.map(|z| z * s) }
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self { matrix: &self.matrix + &other.matrix })
    }
}

/// Mixed state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real = f64> {
    matrix: DMatrix<Complex<T>>,
}

impl<T: Real> DensityMatrix<T> {
    pub fn new(matrix: DMatrix<Complex<T>>) -> Result<Self> {
        let tol = tolerances();
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidDensity("matrix must be square and nonempty".into()));
        }
        let deviation = hermitian_deviation(&matrix);
        if !deviation.is_finite() || deviation > T::tol(tol.hermitian) {
            return Err(Error::NotHermitian { deviation: deviation.to_f64_lossy() });
        }
        let trace = matrix.trace();
        if (trace.re - T::one()).abs() > T::tol(tol.norm) {
            return Err(Error::InvalidDensity(format!("trace is {}", trace.re)));
        }
        let rho = Self { matrix };
        let min = rho.raw_eigenvalues().iter().copied().fold(T::max_value().unwrap(), T::min);
        if min < -T::tol(tol.psd) {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min}")));
        }
        Ok(rho)
    }

    /// Statistical mixture `sum_i p_i |phi_i><phi_i|`.
    pub fn from_ensemble(weights: &[T], states: &[StateVector<T>]) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::invalid("ensemble needs one weight per state"));
        }
        let dim = states[0].dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (&w, s) in weights.iter().zip(states) {
            check_dim(dim, s.dim())?;
            if w < T::zero() {
                return Err(Error::InvalidDensity(format!("negative weight {w}")));
            }
            m += s.projector() * Complex::new(w, T::zero());
        }
        Self::new(m)
    }

    /// Diagonal density matrix from populations.
    pub fn diagonal(populations: &[T]) -> Result<Self> {
        let diag = DVector::from_iterator(
            populations.len(),
            populations.iter().map(|&p| Complex::new(p, T::zero())),
        );
        Self::new(DMatrix::from_diagonal(&diag))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let p = T::one() / T::from_usize_lossy(dim);
        Self { matrix: DMatrix::identity(dim, dim) * Complex::new(p, T::zero()) }
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<Complex<T>>) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn trace(&self) -> T {
        self.matrix.trace().re
    }

    fn raw_eigenvalues(&self) -> DVector<T> {
        SymmetricEigen::new(self.matrix.clone()).eigenvalues
    }

    /// Eigenvalues in ascending order, with round-off negatives in
    /// `[-psd, 0)` clamped to zero.
    pub fn eigenvalues(&self) -> Vec<T> {
        let psd = T::tol(tolerances().psd);
        let mut ev: Vec<T> = self
            .raw_eigenvalues()
            .iter()
            .map(|&v| if v < T::zero() && v >= -psd { T::zero() } else { v })
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> T {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Largest absolute off-diagonal entry in the computational basis.
    pub fn max_coherence(&self) -> T {
        let n = self.dim();
        let mut max = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    max = max.max(self.matrix[(i, j)].modulus());
                }
            }
        }
        max
    }

    pub fn population(&self, k: usize) -> T {
        self.matrix[(k, k)].re
    }
}

/// Bipartition `dim = dim_a * dim_b` of a composite Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BipartiteLabel {
    pub dim_a: usize,
    pub dim_b: usize,
}

impl BipartiteLabel {
    pub fn new(dim_a: usize, dim_b: usize) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::invalid("bipartition factors must be positive"));
        }
        Ok(Self { dim_a, dim_b })
    }

    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_b
    }
}

/// Orthonormal set of states onto which a collapse can project.
///
/// The set need not span the whole space; completeness is checked against the
/// state being collapsed.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis<T: Real = f64> {
    vectors: Vec<StateVector<T>>,
}

impl<T: Real> Basis<T> {
    pub fn new(vectors: Vec<StateVector<T>>) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::InvalidBasis("empty basis".into()));
        };
        let dim = first.dim();
        if vectors.len() > dim {
            return Err(Error::InvalidBasis(format!(
                "{} vectors cannot be orthonormal in dimension {dim}",
                vectors.len()
            )));
        }
        let tol = T::tol(tolerances().basis);
        for (i, a) in vectors.iter().enumerate() {
            if a.dim() != dim {
                return Err(Error::InvalidBasis(format!("vector {i} has dimension {}", a.dim())));
            }
            for (j, b) in vectors.iter().enumerate().skip(i) {
                let overlap = a.inner(b)?.modulus();
                let expected = if i == j { T::one() } else { T::zero() };
                if (overlap - expected).abs() > tol {
                    return Err(Error::InvalidBasis(format!("|<{i}|{j}>| = {overlap}, expected {expected}")));
                }
            }
        }
        Ok(Self { vectors })
    }

    /// Computational basis of dimension `dim`.
    pub fn computational(dim: usize) -> Self {
        let vectors = (0..dim).map(|k| StateVector::basis(dim, k).expect("index in range")).collect();
        Self { vectors }
    }

    /// Eigenbasis of a Hermitian operator, ordered by ascending eigenvalue.
    pub fn eigenbasis(op: &HermitianOperator<T>) -> Self {
        let (values, vecs) = op.eigen();
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        let vectors = order
            .into_iter()
            .map(|k| StateVector::from_dvector_unchecked(vecs.column(k).into_owned()))
            .collect();
        Self { vectors }
    }

    pub fn vectors(&self) -> &[StateVector<T>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }

    pub fn is_complete(&self) -> bool {
        self.len() == self.dim()
    }

    /// Born probabilities `|<b_k|psi>|^2` for every element.
    pub fn probabilities(&self, psi: &StateVector<T>) -> Result<Vec<T>> {
        self.vectors.iter().map(|b| Ok(b.inner(psi)?.norm_sqr())).collect()
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn hermitian_deviation<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    let n = m.nrows();
    let mut max = T::zero();
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).modulus();
            if !d.is_finite() {
                return d;
            }
            max = max.max(d);
        }
    }
    max
}
