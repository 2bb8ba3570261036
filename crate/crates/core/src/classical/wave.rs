use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rustfft::FftNum;

use crate::error::{Error, Result};
use crate::numerics::{cis, Complex, CompensatedSum, Real};
use crate::rng::unit;
use crate::scheduler::PoissonClock;
use crate::spectral::{fft, ifft, wavenumbers};
use crate::table::Table;

/// Phase-space Gaussian: centre `(q, p)` and widths with `sigma_q sigma_p >= 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket<T: Real = f64> {
    pub q: T,
    pub p: T,
    pub sigma_q: T,
    pub sigma_p: T,
}

impl<T: Real> GaussianPacket<T> {
    pub fn new(q: T, p: T, sigma_q: T, sigma_p: T) -> Result<Self> {
        if !(sigma_q > T::zero()) || !(sigma_p > T::zero()) {
            return Err(Error::invalid("packet widths must be positive"));
        }
        let slack = T::lit(1e-12);
        if sigma_q * sigma_p < T::lit(0.5) * (T::one() - slack) {
            return Err(Error::invalid(format!(
                "widths {sigma_q} x {sigma_p} violate the uncertainty bound 1/2"
            )));
        }
        Ok(Self { q, p, sigma_q, sigma_p })
    }

    /// Minimum-uncertainty packet, `sigma_p = 1 / (2 sigma_q)`.
    pub fn coherent(q: T, p: T, sigma_q: T) -> Result<Self> {
        Self::new(q, p, sigma_q, T::lit(0.5) / sigma_q)
    }
}

/// 1D grid `x_j = (j - n/2) dx` with a potential, `hbar = 1`.
#[derive(Clone)]
pub struct QuantumLine<T: Real = f64> {
    n: usize,
    dx: T,
    mass: T,
    potential: Arc<dyn Fn(T) -> T + Send + Sync>,
}

impl<T: Real> fmt::Debug for QuantumLine<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantumLine").field("n", &self.n).field("dx", &self.dx).field("mass", &self.mass).finish()
    }
}

impl<T: Real + FftNum> QuantumLine<T> {
    pub fn new(n: usize, dx: T, mass: T, potential: impl Fn(T) -> T + Send + Sync + 'static) -> Result<Self> {
        if n < 16 {
            return Err(Error::invalid(format!("grid of {n} points is too small")));
        }
        if !(dx > T::zero()) || !(mass > T::zero()) {
            return Err(Error::invalid("grid spacing and mass must be positive"));
        }
        Ok(Self { n, dx, mass, potential: Arc::new(potential) })
    }

    pub fn x(&self, j: usize) -> T {
        (T::from_usize_lossy(j) - T::from_usize_lossy(self.n / 2)) * self.dx
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Samples a (possibly chirped) Gaussian with the packet's moments.
    pub fn packet(&self, packet: &GaussianPacket<T>) -> Result<Vec<Complex<T>>> {
        if packet.sigma_q < T::lit(8.0) * self.dx {
            return Err(Error::invalid(format!(
                "packet width {} is under 8 grid cells of {}",
                packet.sigma_q, self.dx
            )));
        }
        let a = T::one() / (T::lit(4.0) * packet.sigma_q * packet.sigma_q);
        let excess = (packet.sigma_p * packet.sigma_p - a).max(T::zero());
        let chirp = excess.sqrt() / (T::lit(2.0) * packet.sigma_q);
        let mut psi: Vec<Complex<T>> = (0..self.n)
            .map(|j| {
                let x = self.x(j);
                let d = x - packet.q;
                cis(chirp * d * d + packet.p * x) * (-a * d * d).exp()
            })
            .collect();
        normalize(&mut psi, self.dx)?;
        let s = moments(self, &psi);
        guard(self, &s)?;
        Ok(psi)
    }

    fn stepper(&self, dt: T) -> SplitStep<T> {
        let half = dt / T::lit(2.0);
        let v_half = (0..self.n).map(|j| cis(-(self.potential)(self.x(j)) * half)).collect();
        let k = wavenumbers(self.n, self.dx);
        let kinetic = k.iter().map(|&k| cis(-k * k * dt / (T::lit(2.0) * self.mass))).collect();
        SplitStep { v_half, kinetic }
    }
}

struct SplitStep<T: Real> {
    v_half: Vec<Complex<T>>,
    kinetic: Vec<Complex<T>>,
}

impl<T: Real + FftNum> SplitStep<T> {
    /// Strang splitting: half potential, full kinetic, half potential.
    fn apply(&self, psi: &mut [Complex<T>]) {
        for (c, v) in psi.iter_mut().zip(&self.v_half) {
            *c *= *v;
        }
        fft(psi);
        for (c, k) in psi.iter_mut().zip(&self.kinetic) {
            *c *= *k;
        }
        ifft(psi);
        for (c, v) in psi.iter_mut().zip(&self.v_half) {
            *c *= *v;
        }
    }
}

fn normalize<T: Real>(psi: &mut [Complex<T>], dx: T) -> Result<()> {
    let n2 = psi.iter().map(|c| c.norm_sqr().to_f64_lossy()).collect::<CompensatedSum>().value() * dx.to_f64_lossy();
    if !(n2 > 0.0) || !n2.is_finite() {
        return Err(Error::Numeric("wavefunction vanished".into()));
    }
    let s = T::lit(n2.sqrt().recip());
    psi.iter_mut().for_each(|c| *c *= s);
    Ok(())
}

/// Means and widths of a grid wavefunction at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EhrenfestSample {
    pub t: f64,
    pub mean_q: f64,
    pub mean_p: f64,
    pub sigma_q: f64,
    pub sigma_p: f64,
}

fn moments<T: Real + FftNum>(line: &QuantumLine<T>, psi: &[Complex<T>]) -> EhrenfestSample {
    let mut w = CompensatedSum::new();
    let mut wx = CompensatedSum::new();
    let mut wxx = CompensatedSum::new();
    for (j, c) in psi.iter().enumerate() {
        let p = c.norm_sqr().to_f64_lossy();
        let x = line.x(j).to_f64_lossy();
        w.add(p);
        wx.add(p * x);
        wxx.add(p * x * x);
    }
    let mean_q = wx.value() / w.value();
    let var_q = wxx.value() / w.value() - mean_q * mean_q;

    let mut phi = psi.to_vec();
    fft(&mut phi);
    let k = wavenumbers(line.n, line.dx);
    let mut v = CompensatedSum::new();
    let mut vk = CompensatedSum::new();
    let mut vkk = CompensatedSum::new();
    for (c, &k) in phi.iter().zip(&k) {
        let p = c.norm_sqr().to_f64_lossy();
        let k = k.to_f64_lossy();
        v.add(p);
        vk.add(p * k);
        vkk.add(p * k * k);
    }
    let mean_p = vk.value() / v.value();
    let var_p = vkk.value() / v.value() - mean_p * mean_p;
    EhrenfestSample { t: 0.0, mean_q, mean_p, sigma_q: var_q.max(0.0).sqrt(), sigma_p: var_p.max(0.0).sqrt() }
}

fn guard<T: Real + FftNum>(line: &QuantumLine<T>, s: &EhrenfestSample) -> Result<()> {
    let lo = line.x(0).to_f64_lossy();
    let hi = line.x(line.n - 1).to_f64_lossy();
    if s.mean_q - 4.0 * s.sigma_q < lo || s.mean_q + 4.0 * s.sigma_q > hi {
        return Err(Error::BoundaryContact(format!(
            "packet at {:.4} with width {:.4} is within 4 sigma of the grid edge",
            s.mean_q, s.sigma_q
        )));
    }
    Ok(())
}

/// Evolves the packet with split-step Fourier stepping and records
/// `(<q>, <p>, sigma_q, sigma_p)` every `record_every` steps.
pub fn ehrenfest_track<T: Real + FftNum>(
    line: &QuantumLine<T>,
    packet: &GaussianPacket<T>,
    dt: T,
    n_steps: usize,
    record_every: usize,
) -> Result<Vec<EhrenfestSample>> {
    let walk = evolve_with_collapses::<T, crate::rng::LabRng>(line, packet, None, T::one(), dt, n_steps, record_every, None)?;
    Ok(walk.samples)
}

/// Trajectory of a packet whose free evolution is interrupted by
/// localizations at Poisson times.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseWalk {
    pub samples: Vec<EhrenfestSample>,
    pub collapse_times: Vec<f64>,
    /// Localization centres drawn at each collapse.
    pub centres: Vec<f64>,
}

impl CollapseWalk {
    pub fn final_mean_q(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.mean_q)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["t", "mean_q", "mean_p", "sigma_q", "sigma_p"]);
        for s in &self.samples {
            t.push_floats(&[s.t, s.mean_q, s.mean_p, s.sigma_q, s.sigma_p]);
        }
        t
    }
}

/// As [`ehrenfest_track`], but at the ticks of `clock` the wavefunction is
/// multiplied by a Gaussian window `exp(-(x - c)^2 / (4 sigma_r^2))` centred
/// at a position `c` drawn from `|psi|^2`, then renormalized. Without a
/// clock the evolution is the plain Ehrenfest track.
pub fn collapse_random_walk<T: Real + FftNum, R: Rng + ?Sized>(
    line: &QuantumLine<T>,
    packet: &GaussianPacket<T>,
    clock: Option<&PoissonClock<T>>,
    sigma_r: T,
    dt: T,
    n_steps: usize,
    record_every: usize,
    rng: &mut R,
) -> Result<CollapseWalk> {
    if sigma_r < T::lit(4.0) * line.dx {
        return Err(Error::invalid(format!("localization width {sigma_r} is under 4 grid cells")));
    }
    evolve_with_collapses(line, packet, clock, sigma_r, dt, n_steps, record_every, Some(rng))
}

#[allow(clippy::too_many_arguments)]
fn evolve_with_collapses<T: Real + FftNum, R: Rng + ?Sized>(
    line: &QuantumLine<T>,
    packet: &GaussianPacket<T>,
    clock: Option<&PoissonClock<T>>,
    sigma_r: T,
    dt: T,
    n_steps: usize,
    record_every: usize,
    mut rng: Option<&mut R>,
) -> Result<CollapseWalk> {
    if !(dt > T::zero()) || record_every == 0 {
        return Err(Error::invalid("need a positive step and recording stride"));
    }
    let mut psi = line.packet(packet)?;
    let step = line.stepper(dt);
    let dt64 = dt.to_f64_lossy();
    let mut samples = vec![moments(line, &psi)];
    let mut collapse_times = Vec::new();
    let mut centres = Vec::new();
    let mut next_event = match (clock, rng.as_deref_mut()) {
        (Some(c), Some(r)) => c.sample(r).to_f64_lossy(),
        _ => f64::INFINITY,
    };
    for s in 1..=n_steps {
        step.apply(&mut psi);
        let t = s as f64 * dt64;
        while next_event <= t {
            let (c, r) = match (clock, rng.as_deref_mut()) {
                (Some(c), Some(r)) => (c, r),
                _ => unreachable!("events are only scheduled with a clock"),
            };
            let centre = sample_position(line, &psi, r);
            localize(line, &mut psi, centre, sigma_r)?;
            collapse_times.push(next_event);
            centres.push(centre.to_f64_lossy());
            next_event += c.sample(r).to_f64_lossy();
        }
        if s % record_every == 0 || s == n_steps {
            let mut m = moments(line, &psi);
            guard(line, &m)?;
            m.t = t;
            samples.push(m);
        }
    }
    Ok(CollapseWalk { samples, collapse_times, centres })
}

fn sample_position<T: Real + FftNum, R: Rng + ?Sized>(line: &QuantumLine<T>, psi: &[Complex<T>], rng: &mut R) -> T {
    let total: f64 = psi.iter().map(|c| c.norm_sqr().to_f64_lossy()).sum();
    let u = unit::<f64, _>(rng) * total;
    let mut acc = 0.0;
    for (j, c) in psi.iter().enumerate() {
        acc += c.norm_sqr().to_f64_lossy();
        if u < acc {
            return line.x(j);
        }
    }
    line.x(line.n - 1)
}

fn localize<T: Real>(line: &QuantumLine<T>, psi: &mut [Complex<T>], centre: T, sigma_r: T) -> Result<()>
where
    T: FftNum,
{
    let w = T::one() / (T::lit(4.0) * sigma_r * sigma_r);
    for (j, c) in psi.iter_mut().enumerate() {
        let d = line.x(j) - centre;
        *c *= (-w * d * d).exp();
    }
    normalize(psi, line.dx)
}

/// Exact spectral heat flow `u_t = alpha u_xx` for time `t >= 0`.
pub fn heat_evolve<T: Real + FftNum>(profile: &[Complex<T>], dx: T, alpha: T, t: T) -> Result<Vec<Complex<T>>> {
    if t < T::zero() {
        return Err(Error::invalid("the heat equation is ill-posed backwards in time"));
    }
    if !(alpha >= T::zero()) {
        return Err(Error::invalid(format!("diffusivity must be nonnegative, got {alpha}")));
    }
    let k = wavenumbers(profile.len(), dx);
    let mut u = profile.to_vec();
    fft(&mut u);
    for (c, &k) in u.iter_mut().zip(&k) {
        *c *= (-alpha * k * k * t).exp();
    }
    ifft(&mut u);
    Ok(u)
}

/// Exact spectral free Schrodinger flow `i psi_t = -psi_xx / 2` for any `t`.
pub fn schrodinger_evolve<T: Real + FftNum>(profile: &[Complex<T>], dx: T, t: T) -> Vec<Complex<T>> {
    let k = wavenumbers(profile.len(), dx);
    let mut u = profile.to_vec();
    fft(&mut u);
    for (c, &k) in u.iter_mut().zip(&k) {
        *c *= cis(-k * k * t / T::lit(2.0));
    }
    ifft(&mut u);
    u
}

/// L2 norms of the same profile under both flows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastSample {
    pub t: f64,
    pub schrodinger_norm: f64,
    pub heat_norm: f64,
}

/// Norm histories of the unitary and diffusive flows from one real profile
/// at `n_checkpoints + 1` evenly spaced times in `[0, t_end]`.
pub fn unitary_vs_diffusive<T: Real + FftNum>(
    profile: &[T],
    dx: T,
    alpha: T,
    t_end: T,
    n_checkpoints: usize,
) -> Result<Vec<ContrastSample>> {
    if profile.is_empty() || n_checkpoints == 0 {
        return Err(Error::invalid("need a profile and at least one checkpoint"));
    }
    let u0: Vec<Complex<T>> = profile.iter().map(|&v| Complex::new(v, T::zero())).collect();
    let l2 = |u: &[Complex<T>]| {
        (u.iter().map(|c| c.norm_sqr().to_f64_lossy()).collect::<CompensatedSum>().value() * dx.to_f64_lossy()).sqrt()
    };
    (0..=n_checkpoints)
        .map(|i| {
            let t = t_end * T::from_usize_lossy(i) / T::from_usize_lossy(n_checkpoints);
            Ok(ContrastSample {
                t: t.to_f64_lossy(),
                schrodinger_norm: l2(&schrodinger_evolve(&u0, dx, t)),
                heat_norm: l2(&heat_evolve(&u0, dx, alpha, t)?),
            })
        })
        .collect()
}
