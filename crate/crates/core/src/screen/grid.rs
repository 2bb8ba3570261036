use rustfft::FftNum;

use crate::error::{Error, Result};
use crate::numerics::{cis, Complex, CompensatedSum, Real};
use crate::spectral::{fft2, wavenumbers};

/// Amplitudes on a regular `nx x ny` grid (`ny = 1` for a line), row-major
/// with `x` varying slowest, cell spacing `dx` on both axes. Coordinates are
/// centred: `x_j = (j - nx/2) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction<T: Real = f64> {
    psi: Vec<Complex<T>>,
    nx: usize,
    ny: usize,
    dx: T,
}

impl<T: Real> GridWavefunction<T> {
    pub fn new(psi: Vec<Complex<T>>, nx: usize, ny: usize, dx: T) -> Result<Self> {
        let g = Self::unchecked(psi, nx, ny, dx)?;
        let norm = g.norm_sqr();
        if (norm - 1.0).abs() > 1e-8_f64.max(T::TOLERANCE_FLOOR) {
            return Err(Error::NotNormalized { norm: norm.sqrt() });
        }
        Ok(g)
    }

    fn unchecked(psi: Vec<Complex<T>>, nx: usize, ny: usize, dx: T) -> Result<Self> {
        if nx < 2 || ny == 0 {
            return Err(Error::invalid(format!("grid {nx}x{ny} is too small")));
        }
        if psi.len() != nx * ny {
            return Err(Error::DimensionMismatch { expected: nx * ny, found: psi.len() });
        }
        if !(dx > T::zero()) || !dx.is_finite() {
            return Err(Error::invalid(format!("grid spacing must be positive, got {dx}")));
        }
        Ok(Self { psi, nx, ny, dx })
    }

    /// Normalizes the samples to unit discrete norm.
    pub fn normalized(psi: Vec<Complex<T>>, nx: usize, ny: usize, dx: T) -> Result<Self> {
        let mut g = Self::unchecked(psi, nx, ny, dx)?;
        g.renormalize()?;
        Ok(g)
    }

    /// Gaussian line packet `exp(-(x - x0)^2 / (4 sigma^2) + i k0 x)`.
    pub fn gaussian_1d(n: usize, dx: T, x0: T, sigma: T, k0: T) -> Result<Self> {
        if !(sigma > T::zero()) {
            return Err(Error::invalid(format!("packet width must be positive, got {sigma}")));
        }
        let half = T::from_usize_lossy(n / 2);
        let psi = (0..n)
            .map(|j| {
                let x = (T::from_usize_lossy(j) - half) * dx;
                let d = x - x0;
                cis(k0 * x) * (-(d * d) / (T::lit(4.0) * sigma * sigma)).exp()
            })
            .collect();
        Self::normalized(psi, n, 1, dx)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.psi
    }

    pub fn is_line(&self) -> bool {
        self.ny == 1
    }

    /// Coordinate of index `j` along an axis of `n` cells.
    pub fn coordinate(&self, j: usize, n: usize) -> T {
        (T::from_usize_lossy(j) - T::from_usize_lossy(n / 2)) * self.dx
    }

    fn cell_area(&self) -> f64 {
        let dx = self.dx.to_f64_lossy();
        if self.is_line() {
            dx
        } else {
            dx * dx
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr().to_f64_lossy()).collect::<CompensatedSum>().value() * self.cell_area()
    }

    /// Cell probabilities `|psi|^2 dA`.
    pub fn cell_probabilities(&self) -> Vec<f64> {
        let a = self.cell_area();
        self.psi.iter().map(|c| c.norm_sqr().to_f64_lossy() * a).collect()
    }

    /// Marginal probabilities along `x`.
    pub fn x_marginal(&self) -> Vec<f64> {
        self.cell_probabilities().chunks(self.ny).map(|r| r.iter().sum()).collect()
    }

    fn y_marginal(&self) -> Vec<f64> {
        let p = self.cell_probabilities();
        (0..self.ny).map(|k| (0..self.nx).map(|j| p[j * self.ny + k]).sum()).collect()
    }

    /// Mean and standard deviation of the `x` marginal.
    pub fn x_moments(&self) -> (f64, f64) {
        moments(&self.x_marginal(), self.dx.to_f64_lossy())
    }

    pub fn conj(&self) -> Self {
        Self { psi: self.psi.iter().map(|c| c.conj()).collect(), ..self.clone() }
    }

    fn renormalize(&mut self) -> Result<f64> {
        let n2 = self.norm_sqr();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::Numeric("wavefunction vanished".into()));
        }
        let s = T::lit(n2.sqrt().recip());
        for c in &mut self.psi {
            *c *= s;
        }
        Ok(n2)
    }

    /// Fails if any axis has its `4 sigma` window outside the grid.
    pub fn boundary_guard(&self) -> Result<()> {
        let dx = self.dx.to_f64_lossy();
        for (marg, n) in [(self.x_marginal(), self.nx), (self.y_marginal(), self.ny)] {
            if n == 1 {
                continue;
            }
            let (mean, sigma) = moments(&marg, dx);
            let lo = -((n / 2) as f64) * dx;
            let hi = lo + (n - 1) as f64 * dx;
            if mean - 4.0 * sigma < lo || mean + 4.0 * sigma > hi {
                return Err(Error::BoundaryContact(format!(
                    "packet at {mean:.3} with width {sigma:.3} comes within 4 sigma of the grid edge [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

fn moments(marginal: &[f64], dx: f64) -> (f64, f64) {
    let half = (marginal.len() / 2) as f64;
    let total: f64 = marginal.iter().sum();
    let x = |j: usize| (j as f64 - half) * dx;
    let mean = marginal.iter().enumerate().map(|(j, p)| p * x(j)).sum::<f64>() / total;
    let var = marginal.iter().enumerate().map(|(j, p)| p * (x(j) - mean).powi(2)).sum::<f64>() / total;
    (mean, var.max(0.0).sqrt())
}

/// Free evolution for `n_steps` of length `dt` with `hbar = 1` and mass
/// `mass`, stepping exactly in Fourier space. For a paraxial beam, `mass` is
/// the longitudinal wavenumber and time the propagation distance.
pub fn free_propagate<T: Real + FftNum>(psi: &GridWavefunction<T>, mass: T, dt: T, n_steps: usize) -> Result<GridWavefunction<T>> {
    let out = propagate_unguarded(psi, mass, dt, n_steps)?;
    out.boundary_guard()?;
    Ok(out)
}

pub(crate) fn propagate_unguarded<T: Real + FftNum>(
    psi: &GridWavefunction<T>,
    mass: T,
    dt: T,
    n_steps: usize,
) -> Result<GridWavefunction<T>> {
    if !(mass > T::zero()) || !dt.is_finite() {
        return Err(Error::invalid(format!("need a positive mass and finite step, got {mass}, {dt}")));
    }
    let (nx, ny) = psi.shape();
    let kx = wavenumbers(nx, psi.dx);
    let ky = if ny > 1 { wavenumbers(ny, psi.dx) } else { vec![T::zero()] };
    let mut data = psi.psi.clone();
    fft2(&mut data, nx, ny, false);
    let half_inv_mass = T::lit(0.5) / mass;
    let step_phase: Vec<Complex<T>> = (0..nx * ny)
        .map(|idx| {
            let (j, k) = (idx / ny, idx % ny);
            cis(-(kx[j] * kx[j] + ky[k] * ky[k]) * half_inv_mass * dt)
        })
        .collect();
    for _ in 0..n_steps {
        for (d, p) in data.iter_mut().zip(&step_phase) {
            *d *= *p;
        }
    }
    fft2(&mut data, nx, ny, true);
    Ok(GridWavefunction { psi: data, nx, ny, dx: psi.dx })
}

/// State after an aperture collapse.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskOutcome<T: Real = f64> {
    pub psi: GridWavefunction<T>,
    /// Probability that the photon passed the mask.
    pub survival: f64,
    /// `-ln(survival)`.
    pub info_change: f64,
}

/// Zeroes every closed cell and renormalizes.
pub fn apply_slits<T: Real>(psi: &GridWavefunction<T>, mask: &[bool]) -> Result<MaskOutcome<T>> {
    if mask.len() != psi.psi.len() {
        return Err(Error::DimensionMismatch { expected: psi.psi.len(), found: mask.len() });
    }
    let zero = Complex::new(T::zero(), T::zero());
    let data = psi.psi.iter().zip(mask).map(|(&c, &open)| if open { c } else { zero }).collect();
    let mut out = GridWavefunction { psi: data, ..psi.clone() };
    let survival = out.norm_sqr() / psi.norm_sqr();
    if !(survival > 0.0) {
        return Err(Error::invalid("mask blocks the whole wavefunction"));
    }
    if mask.iter().all(|&m| m) {
        return Ok(MaskOutcome { psi: psi.clone(), survival: 1.0, info_change: 0.0 });
    }
    out.renormalize()?;
    Ok(MaskOutcome { psi: out, survival, info_change: -survival.ln() })
}
