//! Classical limit: Hamiltonian flows and their volume, stability and
//! entropy bookkeeping, and the quantum wave packets whose means they track.

mod ensemble;
mod walk;
mod wave;

pub use ensemble::{
    coarse_entropy, ensemble_entropy_evolution, gaussian_cloud, replay_distance, CoarseGrid, EnsembleConfig,
    EntropySample, EntropySeries, Jitter, MIN_ENSEMBLE,
};
pub use walk::{symmetric_walk, walk_statistics, WalkOutcome, WalkStatistics};
pub use wave::{
    collapse_random_walk, ehrenfest_track, heat_evolve, schrodinger_evolve, unitary_vs_diffusive, CollapseWalk,
    ContrastSample, EhrenfestSample, GaussianPacket, QuantumLine,
};

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::Real;
use crate::rng::{seeded, unit};

/// Canonical coordinates `(q, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpacePoint<T: Real = f64> {
    pub q: Vec<T>,
    pub p: Vec<T>,
}

impl<T: Real> PhaseSpacePoint<T> {
    pub fn new(q: Vec<T>, p: Vec<T>) -> Result<Self> {
        if q.len() != p.len() || q.is_empty() {
            return Err(Error::DimensionMismatch { expected: q.len(), found: p.len() });
        }
        let x = Self { q, p };
        x.check_finite()?;
        Ok(x)
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    fn check_finite(&self) -> Result<()> {
        if self.q.iter().chain(&self.p).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Numeric("phase-space point is not finite".into()))
        }
    }

    /// `(q_1..q_n, p_1..p_n)`.
    pub fn to_vec(&self) -> Vec<T> {
        self.q.iter().chain(&self.p).copied().collect()
    }

    pub fn from_slice(x: &[T]) -> Result<Self> {
        let n = x.len() / 2;
        if x.len() != 2 * n {
            return Err(Error::invalid("phase-space vectors have even length"));
        }
        Self::new(x[..n].to_vec(), x[n..].to_vec())
    }

    pub fn flip_momenta(&self) -> Self {
        Self { q: self.q.clone(), p: self.p.iter().map(|&v| -v).collect() }
    }

    pub fn distance(&self, other: &Self) -> T {
        self.q
            .iter()
            .zip(&other.q)
            .chain(self.p.iter().zip(&other.p))
            .fold(T::zero(), |acc, (a, b)| acc + (*a - *b) * (*a - *b))
            .sqrt()
    }
}

type ScalarFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
type GradFn<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;

/// Separable Hamiltonian `H = |p|^2 / 2m + V(q)` with an analytic force.
#[derive(Clone)]
pub struct HamiltonianSystem<T: Real = f64> {
    name: String,
    dof: usize,
    mass: T,
    potential: ScalarFn<T>,
    grad_potential: GradFn<T>,
    /// Hard walls `[lo, hi]` per coordinate, if the system lives in a box.
    walls: Option<Vec<(T, T)>>,
}

impl<T: Real> fmt::Debug for HamiltonianSystem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSystem").field("name", &self.name).field("dof", &self.dof).field("mass", &self.mass).finish()
    }
}

impl<T: Real> HamiltonianSystem<T> {
    /// Builds the system and checks `grad_potential` against central
    /// differences of `potential` at pseudo-random points of `[-scale, scale]^dof`.
    pub fn new(
        name: impl Into<String>,
        dof: usize,
        mass: T,
        potential: impl Fn(&[T]) -> T + Send + Sync + 'static,
        grad_potential: impl Fn(&[T], &mut [T]) + Send + Sync + 'static,
        scale: T,
    ) -> Result<Self> {
        if dof == 0 {
            return Err(Error::invalid("need at least one degree of freedom"));
        }
        if !(mass > T::zero()) {
            return Err(Error::invalid(format!("mass must be positive, got {mass}")));
        }
        let sys = Self {
            name: name.into(),
            dof,
            mass,
            potential: Arc::new(potential),
            grad_potential: Arc::new(grad_potential),
            walls: None,
        };
        sys.validate_gradient(scale)?;
        Ok(sys)
    }

    fn validate_gradient(&self, scale: T) -> Result<()> {
        let mut rng = seeded(0x5eed);
        let h = T::lit(1e-5) * scale.max(T::one());
        let mut grad = vec![T::zero(); self.dof];
        for _ in 0..8 {
            let q: Vec<T> = (0..self.dof).map(|_| (T::lit(2.0) * unit::<T, _>(&mut rng) - T::one()) * scale).collect();
            (self.grad_potential)(&q, &mut grad);
            for i in 0..self.dof {
                let mut a = q.clone();
                let mut b = q.clone();
                a[i] += h;
                b[i] -= h;
                let fd = ((self.potential)(&a) - (self.potential)(&b)) / (h + h);
                let err = (fd - grad[i]).abs();
                let tol = T::lit(1e-5) * grad[i].abs().max(T::one());
                if !(err <= tol) {
                    return Err(Error::invalid(format!(
                        "{}: analytic gradient {} disagrees with finite difference {fd} in coordinate {i}",
                        self.name, grad[i]
                    )));
                }
            }
        }
        Ok(())
    }

    /// `H = p^2/2 + omega^2 q^2 / 2`.
    pub fn harmonic(omega: T) -> Result<Self> {
        let w2 = omega * omega;
        Self::new("harmonic", 1, T::one(), move |q| w2 * q[0] * q[0] / T::lit(2.0), move |q, g| g[0] = w2 * q[0], T::one())
    }

    /// `H = p^2/2 - cos q`.
    pub fn pendulum() -> Result<Self> {
        Self::new("pendulum", 1, T::one(), |q| -q[0].cos(), |q, g| g[0] = q[0].sin(), T::lit(3.0))
    }

    /// `V = (x^2 + y^2)/2 + x^2 y - y^3/3`.
    pub fn henon_heiles() -> Result<Self> {
        Self::new(
            "henon-heiles",
            2,
            T::one(),
            |q| {
                let (x, y) = (q[0], q[1]);
                (x * x + y * y) / T::lit(2.0) + x * x * y - y * y * y / T::lit(3.0)
            },
            |q, g| {
                let (x, y) = (q[0], q[1]);
                g[0] = x + T::lit(2.0) * x * y;
                g[1] = y + x * x - y * y;
            },
            T::lit(0.5),
        )
    }

    /// `V = q^4 / 4`.
    pub fn quartic() -> Result<Self> {
        Self::new("quartic", 1, T::one(), |q| q[0] * q[0] * q[0] * q[0] / T::lit(4.0), |q, g| g[0] = q[0] * q[0] * q[0], T::one())
    }

    pub fn free_particle(dof: usize, mass: T) -> Result<Self> {
        Self::new("free", dof, mass, |_| T::zero(), |_, g| g.iter_mut().for_each(|v| *v = T::zero()), T::one())
    }

    /// Free particle confined to `[0, side]^dof`. Only used for phase-space
    /// volumes; trajectories ignore the walls.
    pub fn particle_in_box(dof: usize, mass: T, side: T) -> Result<Self> {
        let mut sys = Self::free_particle(dof, mass)?;
        sys.name = "box".into();
        sys.walls = Some(vec![(T::zero(), side); dof]);
        Ok(sys)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn potential(&self, q: &[T]) -> T {
        (self.potential)(q)
    }

    pub fn energy(&self, x: &PhaseSpacePoint<T>) -> T {
        let kinetic = x.p.iter().fold(T::zero(), |acc, &p| acc + p * p) / (T::lit(2.0) * self.mass);
        kinetic + (self.potential)(&x.q)
    }

    /// `dH/dq`.
    pub fn force_gradient(&self, q: &[T], out: &mut [T]) {
        (self.grad_potential)(q, out)
    }

    fn check(&self, x: &PhaseSpacePoint<T>) -> Result<()> {
        if x.dof() != self.dof {
            return Err(Error::DimensionMismatch { expected: self.dof, found: x.dof() });
        }
        x.check_finite()
    }
}

/// One kick-drift-kick leapfrog step.
pub fn hamilton_step<T: Real>(sys: &HamiltonianSystem<T>, x: &PhaseSpacePoint<T>, dt: T) -> Result<PhaseSpacePoint<T>> {
    sys.check(x)?;
    let mut out = x.clone();
    let mut grad = vec![T::zero(); sys.dof];
    leapfrog_in_place(sys, &mut out, dt, 1, None, &mut grad);
    out.check_finite()?;
    Ok(out)
}

fn leapfrog_in_place<T: Real>(
    sys: &HamiltonianSystem<T>,
    x: &mut PhaseSpacePoint<T>,
    dt: T,
    n_steps: usize,
    drag: Option<T>,
    grad: &mut [T],
) {
    let half = dt / T::lit(2.0);
    let damp = drag.map(|g| (-g * half).exp());
    let inv_m = T::one() / sys.mass;
    for _ in 0..n_steps {
        if let Some(d) = damp {
            x.p.iter_mut().for_each(|p| *p *= d);
        }
        sys.force_gradient(&x.q, grad);
        for (p, g) in x.p.iter_mut().zip(grad.iter()) {
            *p -= half * *g;
        }
        for (q, p) in x.q.iter_mut().zip(&x.p) {
            *q += dt * *p * inv_m;
        }
        sys.force_gradient(&x.q, grad);
        for (p, g) in x.p.iter_mut().zip(grad.iter()) {
            *p -= half * *g;
        }
        if let Some(d) = damp {
            x.p.iter_mut().for_each(|p| *p *= d);
        }
    }
}

/// `n_steps` leapfrog steps. With `drag = Some(gamma)` the momenta also
/// decay as `dp/dt = -gamma p` (Strang-split around each step), which
/// contracts phase-space volume by `exp(-gamma dof t)`.
pub fn integrate<T: Real>(
    sys: &HamiltonianSystem<T>,
    x0: &PhaseSpacePoint<T>,
    dt: T,
    n_steps: usize,
    drag: Option<T>,
) -> Result<PhaseSpacePoint<T>> {
    sys.check(x0)?;
    if !(dt.is_finite()) {
        return Err(Error::StepSize(format!("step {dt} is not finite")));
    }
    let mut x = x0.clone();
    let mut grad = vec![T::zero(); sys.dof];
    leapfrog_in_place(sys, &mut x, dt, n_steps, drag, &mut grad);
    x.check_finite()?;
    Ok(x)
}

/// Samples `(t, x)` every `record_every` steps, including the start.
pub fn trajectory<T: Real>(
    sys: &HamiltonianSystem<T>,
    x0: &PhaseSpacePoint<T>,
    dt: T,
    n_steps: usize,
    record_every: usize,
) -> Result<Vec<(T, PhaseSpacePoint<T>)>> {
    sys.check(x0)?;
    let every = record_every.max(1);
    let mut x = x0.clone();
    let mut grad = vec![T::zero(); sys.dof];
    let mut out = vec![(T::zero(), x.clone())];
    let mut done = 0;
    while done < n_steps {
        let chunk = every.min(n_steps - done);
        leapfrog_in_place(sys, &mut x, dt, chunk, None, &mut grad);
        done += chunk;
        x.check_finite()?;
        out.push((T::from_usize_lossy(done) * dt, x.clone()));
    }
    Ok(out)
}

/// Vertices of a simplex of size `radius` at `center`: the centre plus one
/// displaced vertex per phase-space axis.
pub fn simplex_cloud<T: Real>(center: &PhaseSpacePoint<T>, radius: T) -> Vec<PhaseSpacePoint<T>> {
    let base = center.to_vec();
    let mut cloud = vec![center.clone()];
    for i in 0..base.len() {
        let mut v = base.clone();
        v[i] += radius;
        cloud.push(PhaseSpacePoint::from_slice(&v).expect("same shape as centre"));
    }
    cloud
}

fn simplex_volume<T: Real>(cloud: &[PhaseSpacePoint<T>]) -> Result<f64> {
    let base: Vec<f64> = cloud[0].to_vec().iter().map(|v| v.to_f64_lossy()).collect();
    let n = base.len();
    if cloud.len() != n + 1 {
        return Err(Error::invalid(format!("a simplex in {n} dimensions needs {} vertices", n + 1)));
    }
    let m = DMatrix::from_fn(n, n, |i, j| cloud[j + 1].to_vec()[i].to_f64_lossy() - base[i]);
    Ok(m.determinant().abs())
}

/// Ratio of the evolved to the initial volume of a simplex cloud after time
/// `t_end`, optionally with linear drag on the momenta.
pub fn liouville_volume_check<T: Real>(
    sys: &HamiltonianSystem<T>,
    cloud: &[PhaseSpacePoint<T>],
    t_end: T,
    dt: T,
    drag: Option<T>,
) -> Result<f64> {
    let v0 = simplex_volume(cloud)?;
    if !(v0 > 0.0) {
        return Err(Error::invalid("degenerate cloud has zero volume"));
    }
    let n_steps = (t_end / dt).round().to_f64_lossy() as usize;
    let evolved: Vec<PhaseSpacePoint<T>> = cloud.iter().map(|x| integrate(sys, x, dt, n_steps, drag)).collect::<Result<_>>()?;
    Ok(simplex_volume(&evolved)? / v0)
}

/// Largest Lyapunov exponent by Benettin's method: a companion trajectory
/// at distance `eps0` (random direction) is pulled back to that distance
/// every `renormalize_every` steps and the log stretch factors averaged.
pub fn lyapunov_estimate<T: Real, R: Rng + ?Sized>(
    sys: &HamiltonianSystem<T>,
    x0: &PhaseSpacePoint<T>,
    eps0: T,
    t_end: T,
    dt: T,
    renormalize_every: usize,
    escape_radius: T,
    rng: &mut R,
) -> Result<T> {
    sys.check(x0)?;
    if !(eps0 > T::zero()) || renormalize_every == 0 || !(t_end > T::zero()) || !(dt > T::zero()) {
        return Err(Error::invalid("need eps0 > 0, positive times and a positive renormalization interval"));
    }
    let dim = 2 * sys.dof;
    let dir: Vec<T> = (0..dim).map(|_| crate::rng::normal::<T, _>(rng)).collect();
    let norm = dir.iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
    let base = x0.to_vec();
    let shifted: Vec<T> = base.iter().zip(&dir).map(|(&b, &d)| b + eps0 * d / norm).collect();
    let mut a = x0.clone();
    let mut b = PhaseSpacePoint::from_slice(&shifted)?;
    let n_total = (t_end / dt).round().to_f64_lossy() as usize;
    let mut grad = vec![T::zero(); sys.dof];
    let mut log_sum = 0.0;
    let mut done = 0;
    while done < n_total {
        let chunk = renormalize_every.min(n_total - done);
        leapfrog_in_place(sys, &mut a, dt, chunk, None, &mut grad);
        leapfrog_in_place(sys, &mut b, dt, chunk, None, &mut grad);
        done += chunk;
        a.check_finite()?;
        b.check_finite()?;
        if a.q.iter().any(|q| q.abs() > escape_radius) {
            return Err(Error::Numeric(format!("trajectory escaped beyond |q| = {escape_radius}")));
        }
        let d = a.distance(&b);
        if !(d > T::zero()) {
            return Err(Error::Numeric("companion trajectory collapsed onto the reference".into()));
        }
        log_sum += (d / eps0).to_f64_lossy().ln();
        let av = a.to_vec();
        let bv = b.to_vec();
        let pulled: Vec<T> = av.iter().zip(&bv).map(|(&x, &y)| x + (y - x) * eps0 / d).collect();
        b = PhaseSpacePoint::from_slice(&pulled)?;
    }
    Ok(T::lit(log_sum / (T::from_usize_lossy(n_total) * dt).to_f64_lossy()))
}

/// Monte Carlo estimate of the phase volume below an energy and of the
/// density of states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseVolume {
    pub gamma0: f64,
    pub gamma0_error: f64,
    pub omega: f64,
    pub omega_error: f64,
}

/// `Gamma0(E) = vol{H <= E}` from uniform samples of the box `bounds`
/// (`2 dof` intervals, coordinates first) and `omega(E)` as the central
/// difference of `Gamma0` over `[E - dE, E + dE]`.
pub fn estimate_phase_volume<T: Real, R: Rng + ?Sized>(
    sys: &HamiltonianSystem<T>,
    energy: T,
    delta_e: T,
    bounds: &[(T, T)],
    n_samples: usize,
    rng: &mut R,
) -> Result<PhaseVolume> {
    let dim = 2 * sys.dof;
    if bounds.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: bounds.len() });
    }
    if n_samples == 0 || !(delta_e > T::zero()) {
        return Err(Error::invalid("need samples and a positive energy step"));
    }
    if bounds.iter().any(|(lo, hi)| !(hi > lo)) {
        return Err(Error::invalid("empty sampling box"));
    }
    let widths: Vec<f64> = bounds.iter().map(|(lo, hi)| (*hi - *lo).to_f64_lossy()).collect();
    let box_volume: f64 = widths.iter().product();
    let hi_e = energy + delta_e;
    let lo_e = energy - delta_e;
    let (mut below, mut below_hi, mut below_lo, mut edge_hits) = (0u64, 0u64, 0u64, 0u64);
    let mut v = vec![T::zero(); dim];
    for _ in 0..n_samples {
        for (slot, (lo, hi)) in v.iter_mut().zip(bounds) {
            *slot = *lo + (*hi - *lo) * unit::<T, _>(rng);
        }
        if let Some(walls) = &sys.walls {
            if v[..sys.dof].iter().zip(walls).any(|(q, (a, b))| q < a || q > b) {
                continue;
            }
        }
        let x = PhaseSpacePoint { q: v[..sys.dof].to_vec(), p: v[sys.dof..].to_vec() };
        let h = sys.energy(&x);
        if h <= hi_e {
            below_hi += 1;
            let near_edge = v.iter().zip(bounds).enumerate().any(|(i, (val, (lo, hi)))| {
                let confined = i < sys.dof && sys.walls.is_some();
                let margin = (*hi - *lo) * T::lit(0.01);
                !confined && (*val - *lo < margin || *hi - *val < margin)
            });
            if near_edge {
                edge_hits += 1;
            }
            if h <= energy {
                below += 1;
            }
            if h <= lo_e {
                below_lo += 1;
            }
        }
    }
    if edge_hits > 0 {
        return Err(Error::BoundaryContact(format!("{edge_hits} samples within the energy shell touch the sampling box")));
    }
    let n = n_samples as f64;
    let frac = below as f64 / n;
    let gamma0 = box_volume * frac;
    let gamma0_error = box_volume * (frac * (1.0 - frac) / n).sqrt();
    let shell = (below_hi - below_lo) as f64 / n;
    let de = 2.0 * delta_e.to_f64_lossy();
    Ok(PhaseVolume {
        gamma0,
        gamma0_error,
        omega: box_volume * shell / de,
        omega_error: box_volume * (shell * (1.0 - shell) / n).sqrt() / de,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(q: f64, p: f64) -> PhaseSpacePoint {
        PhaseSpacePoint::new(vec![q], vec![p]).unwrap()
    }

    #[test]
    fn gradient_validation_rejects_wrong_force() {
        let bad = HamiltonianSystem::<f64>::new("bad", 1, 1.0, |q| q[0] * q[0], |q, g| g[0] = q[0], 1.0);
        assert!(bad.is_err());
        assert!(PhaseSpacePoint::new(vec![1.0_f64], vec![]).is_err());
    }

    #[test]
    fn free_particle_moves_uniformly() {
        let sys = HamiltonianSystem::free_particle(1, 2.0).unwrap();
        let x = integrate(&sys, &pt(0.0, 1.0), 0.25, 8, None).unwrap();
        assert_eq!(x.p, vec![1.0]);
        assert!((x.q[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn harmonic_period_closes() {
        let sys = HamiltonianSystem::harmonic(1.0).unwrap();
        let n = 100_000;
        let dt = std::f64::consts::TAU / n as f64;
        let x = integrate(&sys, &pt(1.0, 0.0), dt, n, None).unwrap();
        assert!(x.distance(&pt(1.0, 0.0)) < 1e-6);
    }

    #[test]
    fn time_reversal_round_trip() {
        let sys = HamiltonianSystem::pendulum().unwrap();
        let x0 = pt(0.3, 1.2);
        let x = integrate(&sys, &x0, 0.01, 5000, None).unwrap().flip_momenta();
        let back = integrate(&sys, &x, 0.01, 5000, None).unwrap().flip_momenta();
        assert!(back.distance(&x0) < 1e-8);
    }

    #[test]
    fn drag_contracts_area() {
        let sys = HamiltonianSystem::harmonic(1.0).unwrap();
        let cloud = simplex_cloud(&pt(0.5, 0.1), 1e-4);
        let r = liouville_volume_check(&sys, &cloud, 5.0, 0.01, Some(0.2)).unwrap();
        assert!((r - (-1.0_f64).exp()).abs() < 1e-3);
        assert!(liouville_volume_check(&sys, &cloud[..2], 5.0, 0.01, None).is_err());
    }
}
