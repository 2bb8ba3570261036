//! Scalar abstraction and the process-wide numerical tolerances.

use std::fmt;
use std::sync::RwLock;

use nalgebra::RealField;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Complex amplitude over the scalar `T`.
pub type Complex<T> = nalgebra::Complex<T>;

/// Real scalar the physics is written against: `f32` or `f64`.
///
/// Everything in the crate is generic over this trait; the crate root exports
/// `f64` aliases for the common case.
pub trait Real:
    RealField + Copy + Default + FromPrimitive + ToPrimitive + FloatConst + fmt::Display + fmt::LowerExp
{
    /// Smallest tolerance that is meaningful at this precision. Configured
    /// tolerances below it are raised to it.
    const TOLERANCE_FLOOR: f64;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance `tol` clamped from below to what this precision can resolve.
    fn tol(tol: f64) -> Self {
        Self::lit(tol.max(Self::TOLERANCE_FLOOR))
    }
}

impl Real for f64 {
    const TOLERANCE_FLOOR: f64 = 0.0;
}

impl Real for f32 {
    const TOLERANCE_FLOOR: f64 = 1e-5;
}

/// Validation tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Norm and trace checks.
    pub norm: f64,
    /// Hermiticity of operators and density matrices.
    pub hermitian: f64,
    /// Most negative eigenvalue tolerated in a density matrix; values in
    /// `[-psd, 0)` are clamped to zero.
    pub psd: f64,
    /// Orthonormality of a measurement basis and completeness of its
    /// probabilities.
    pub basis: f64,
    /// Eigenvalues below this contribute nothing to entropies.
    pub entropy_cutoff: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        norm: 1e-10,
        hermitian: 1e-12,
        psd: 1e-10,
        basis: 1e-9,
        entropy_cutoff: 1e-14,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

static TOLERANCES: RwLock<Tolerances> = RwLock::new(Tolerances::DEFAULT);

/// Current global tolerances.
pub fn tolerances() -> Tolerances {
    *TOLERANCES.read().unwrap_or_else(|e| e.into_inner())
}

/// Replace the global tolerances, returning the previous set.
pub fn set_tolerances(new: Tolerances) -> Tolerances {
    let mut guard = TOLERANCES.write().unwrap_or_else(|e| e.into_inner());
    std::mem::replace(&mut *guard, new)
}

/// Kahan–Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `exp(i phase)`.
pub fn cis<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-8) {
        T::one() - x * x / T::lit(6.0)
    } else {
        x.sin() / x
    }
}

/// `-p ln p` with `0 ln 0 = 0`.
pub fn neg_p_ln_p<T: Real>(p: T) -> T {
    if p > T::zero() {
        -p * p.ln()
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_lost_bits() {
        let mut naive = 0.0_f64;
        let mut acc = CompensatedSum::new();
        for x in [1.0, 1e100, 1.0, -1e100] {
            naive += x;
            acc.add(x);
        }
        assert_eq!(naive, 0.0);
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn sinc_is_continuous_at_zero() {
        assert_eq!(sinc(0.0_f64), 1.0);
        assert!((sinc(1e-9_f64) - 1.0).abs() < 1e-15);
        assert!((sinc(std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn tolerance_floor_applies_to_f32() {
        assert_eq!(<f32 as Real>::tol(1e-12), 1e-5);
        assert_eq!(<f64 as Real>::tol(1e-12), 1e-12);
    }
}
