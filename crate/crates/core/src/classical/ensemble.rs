use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use super::{leapfrog_in_place, liouville_volume_check, simplex_cloud, HamiltonianSystem, PhaseSpacePoint};
use crate::error::{Error, Result};
use crate::numerics::{CompensatedSum, Real};
use crate::rng::{normal, stream};
use crate::table::Table;

/// Smallest ensemble for which the coarse entropy is considered stable.
pub const MIN_ENSEMBLE: usize = 10_000;

/// Fixed phase-space grid. Points outside the box share one overflow cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseGrid {
    bounds: Vec<(f64, f64)>,
    cells: usize,
}

impl CoarseGrid {
    /// `cells` equal bins along each of the `2 dof` axes of `bounds`.
    pub fn new(bounds: Vec<(f64, f64)>, cells: usize) -> Result<Self> {
        if bounds.is_empty() || cells == 0 {
            return Err(Error::invalid("grid needs axes and cells"));
        }
        if bounds.iter().any(|(lo, hi)| !(hi > lo) || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::invalid("grid axes must be finite, nonempty intervals"));
        }
        Ok(Self { bounds, cells })
    }

    /// Square grid `[-half_width, half_width]` on every axis with cells of
    /// side close to `cell`.
    pub fn centred(dim: usize, half_width: f64, cell: f64) -> Result<Self> {
        if !(cell > 0.0) || !(half_width > 0.0) {
            return Err(Error::invalid("grid width and cell size must be positive"));
        }
        let cells = (2.0 * half_width / cell).round().max(1.0) as usize;
        Self::new(vec![(-half_width, half_width); dim], cells)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells
    }

    /// Flat cell index, or `None` for the overflow cell.
    pub fn cell_of<T: Real>(&self, x: &PhaseSpacePoint<T>) -> Option<u64> {
        let mut idx = 0u64;
        for (v, (lo, hi)) in x.q.iter().chain(&x.p).zip(&self.bounds) {
            let v = v.to_f64_lossy();
            if !(v >= *lo && v < *hi) {
                return None;
            }
            let k = (((v - lo) / (hi - lo)) * self.cells as f64) as u64;
            idx = idx * self.cells as u64 + k.min(self.cells as u64 - 1);
        }
        Some(idx)
    }

    /// Occupied cells and their counts, in cell order.
    pub fn histogram<T: Real>(&self, cloud: &[PhaseSpacePoint<T>]) -> Result<BTreeMap<Option<u64>, u64>> {
        let mut h = BTreeMap::new();
        for x in cloud {
            if x.dof() * 2 != self.dim() {
                return Err(Error::DimensionMismatch { expected: self.dim(), found: x.dof() * 2 });
            }
            *h.entry(self.cell_of(x)).or_insert(0) += 1;
        }
        Ok(h)
    }

    /// Total variation distance between the cell distributions of two clouds.
    pub fn total_variation<T: Real>(&self, a: &[PhaseSpacePoint<T>], b: &[PhaseSpacePoint<T>]) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::invalid("empty cloud"));
        }
        let (ha, hb) = (self.histogram(a)?, self.histogram(b)?);
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let mut keys: Vec<_> = ha.keys().chain(hb.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        let sum: CompensatedSum = keys
            .iter()
            .map(|k| {
                let pa = ha.get(k).copied().unwrap_or(0) as f64 / na;
                let pb = hb.get(k).copied().unwrap_or(0) as f64 / nb;
                (pa - pb).abs()
            })
            .collect();
        Ok(0.5 * sum.value())
    }
}

/// Shannon entropy (nats) of the cell occupation of `cloud`.
pub fn coarse_entropy<T: Real>(grid: &CoarseGrid, cloud: &[PhaseSpacePoint<T>]) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::invalid("empty cloud"));
    }
    let n = cloud.len() as f64;
    let mut terms: Vec<f64> = grid
        .histogram(cloud)?
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .collect();
    terms.sort_by(f64::total_cmp);
    Ok(terms.into_iter().collect::<CompensatedSum>().value())
}

/// `m` points with independent normal offsets of width `sigma` on every
/// axis around `center`.
pub fn gaussian_cloud<T: Real>(center: &PhaseSpacePoint<T>, sigma: T, m: usize, seed: u64) -> Result<Vec<PhaseSpacePoint<T>>> {
    if !(sigma > T::zero()) {
        return Err(Error::invalid(format!("cloud width must be positive, got {sigma}")));
    }
    let base = center.to_vec();
    (0..m as u64)
        .map(|i| {
            let mut rng = stream(seed, i);
            let v: Vec<T> = base.iter().map(|&b| b + sigma * normal::<T, _>(&mut rng)).collect();
            PhaseSpacePoint::from_slice(&v)
        })
        .collect()
}

/// Collapse kicks: at Poisson events of `rate`, every coordinate and
/// momentum receives an independent normal offset of width `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    pub rate: f64,
    pub sigma: f64,
}

impl Jitter {
    pub fn new(rate: f64, sigma: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() || !(sigma >= 0.0) {
            return Err(Error::invalid(format!("need rate > 0 and sigma >= 0, got {rate}, {sigma}")));
        }
        Ok(Self { rate, sigma })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub dt: f64,
    pub t_end: f64,
    pub n_checkpoints: usize,
    pub jitter: Option<Jitter>,
    pub seed: u64,
}

impl EnsembleConfig {
    fn steps(&self) -> Result<(usize, usize)> {
        if !(self.dt > 0.0) || !(self.t_end > 0.0) || self.n_checkpoints == 0 {
            return Err(Error::invalid("need positive dt, t_end and at least one checkpoint"));
        }
        let total = (self.t_end / self.dt).round() as usize;
        if total == 0 || total % self.n_checkpoints != 0 {
            return Err(Error::invalid(format!(
                "{total} steps do not split into {} equal checkpoint intervals",
                self.n_checkpoints
            )));
        }
        Ok((total, total / self.n_checkpoints))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySample {
    pub t: f64,
    pub coarse: f64,
    /// Gaussian-support entropy carried along by the Liouville volume ratio;
    /// only defined without jitter.
    pub fine: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropySeries {
    pub samples: Vec<EntropySample>,
}

impl EntropySeries {
    /// Index of the first checkpoint within `tolerance` of the maximum
    /// coarse entropy.
    pub fn plateau_start(&self, tolerance: f64) -> usize {
        let max = self.samples.iter().map(|s| s.coarse).fold(f64::NEG_INFINITY, f64::max);
        self.samples.iter().position(|s| s.coarse >= max - tolerance).unwrap_or(0)
    }

    /// Fraction of checkpoint intervals before the plateau over which the
    /// coarse entropy strictly increased.
    pub fn increasing_fraction(&self, tolerance: f64) -> f64 {
        let end = self.plateau_start(tolerance);
        if end == 0 {
            return 0.0;
        }
        let up = self.samples[..=end].windows(2).filter(|w| w[1].coarse > w[0].coarse).count();
        up as f64 / end as f64
    }

    /// Largest excursion of the fine entropy from its initial value.
    pub fn fine_drift(&self) -> Option<f64> {
        let s0 = self.samples.first()?.fine?;
        self.samples.iter().map(|s| s.fine.map(|f| (f - s0).abs())).try_fold(0.0, |m: f64, d| d.map(|d| m.max(d)))
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["t", "coarse_entropy", "fine_entropy"]);
        for s in &self.samples {
            t.push_floats(&[s.t, s.coarse, s.fine.unwrap_or(f64::NAN)]);
        }
        t
    }
}

/// Evolves one point for `n_steps`, applying jitter kicks at the event
/// times drawn from `rng`. `clock` holds the absolute time of the next event.
#[allow(clippy::too_many_arguments)]
fn advance<T: Real, R: Rng + ?Sized>(
    sys: &HamiltonianSystem<T>,
    x: &mut PhaseSpacePoint<T>,
    dt: T,
    n_steps: usize,
    t0: f64,
    jitter: Option<(&Jitter, &Exp<f64>)>,
    clock: &mut f64,
    rng: &mut R,
    grad: &mut [T],
) {
    let Some((j, wait)) = jitter else {
        leapfrog_in_place(sys, x, dt, n_steps, None, grad);
        return;
    };
    let dt64 = dt.to_f64_lossy();
    let sigma = T::lit(j.sigma);
    for s in 1..=n_steps {
        leapfrog_in_place(sys, x, dt, 1, None, grad);
        let t = t0 + s as f64 * dt64;
        while *clock <= t {
            for v in x.q.iter_mut().chain(x.p.iter_mut()) {
                *v += sigma * normal::<T, _>(rng);
            }
            *clock += wait.sample(rng);
        }
    }
}

fn exp_law(j: &Jitter) -> Result<Exp<f64>> {
    Exp::new(j.rate).map_err(|e| Error::invalid(format!("jitter rate: {e}")))
}

fn gaussian_support_entropy<T: Real>(cloud: &[PhaseSpacePoint<T>]) -> Result<(f64, PhaseSpacePoint<T>)> {
    let d = cloud[0].dof() * 2;
    let n = cloud.len() as f64;
    let rows: Vec<Vec<f64>> = cloud.iter().map(|x| x.to_vec().iter().map(|v| v.to_f64_lossy()).collect()).collect();
    let mean: Vec<f64> = (0..d).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n).collect();
    let cov = DMatrix::from_fn(d, d, |a, b| {
        rows.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (n - 1.0)
    });
    let det = cov.determinant();
    if !(det > 0.0) {
        return Err(Error::invalid("cloud covariance is singular"));
    }
    let s0 = 0.5 * ((2.0 * std::f64::consts::PI * std::f64::consts::E).powi(d as i32) * det).ln();
    let centre = PhaseSpacePoint::from_slice(&mean.iter().map(|&m| T::lit(m)).collect::<Vec<_>>())?;
    Ok((s0, centre))
}

/// Coarse entropy of an evolving ensemble at `n_checkpoints + 1` times.
///
/// Point `i` draws its jitter events from stream `seed + i`. Without jitter
/// the fine entropy is also reported: the Gaussian entropy of the initial
/// cloud plus the log of the phase-volume ratio of a small simplex carried
/// along at the cloud's mean.
pub fn ensemble_entropy_evolution<T: Real>(
    sys: &HamiltonianSystem<T>,
    cloud: &[PhaseSpacePoint<T>],
    grid: &CoarseGrid,
    cfg: &EnsembleConfig,
) -> Result<EntropySeries> {
    if cloud.len() < MIN_ENSEMBLE {
        return Err(Error::invalid(format!(
            "{} points undersample the grid; need at least {MIN_ENSEMBLE}",
            cloud.len()
        )));
    }
    let (_, per_checkpoint) = cfg.steps()?;
    let dt = T::lit(cfg.dt);
    let law = cfg.jitter.as_ref().map(exp_law).transpose()?;

    let tracks: Vec<Vec<PhaseSpacePoint<T>>> = cloud
        .par_iter()
        .enumerate()
        .map(|(i, x0)| {
            let mut rng = stream(cfg.seed, i as u64);
            let jit = cfg.jitter.as_ref().zip(law.as_ref());
            let mut clock = jit.map_or(f64::INFINITY, |(_, w)| w.sample(&mut rng));
            let mut x = x0.clone();
            let mut grad = vec![T::zero(); sys.dof()];
            let mut out = Vec::with_capacity(cfg.n_checkpoints);
            for c in 0..cfg.n_checkpoints {
                let t0 = (c * per_checkpoint) as f64 * cfg.dt;
                advance(sys, &mut x, dt, per_checkpoint, t0, jit, &mut clock, &mut rng, &mut grad);
                out.push(x.clone());
            }
            out
        })
        .collect();

    let fine_base = if cfg.jitter.is_none() { Some(gaussian_support_entropy(cloud)?) } else { None };
    let fine_at = |t: f64| -> Result<Option<f64>> {
        let Some((s0, centre)) = &fine_base else { return Ok(None) };
        if t == 0.0 {
            return Ok(Some(*s0));
        }
        let probe = simplex_cloud(centre, T::lit(1e-4));
        let ratio = liouville_volume_check(sys, &probe, T::lit(t), dt, None)?;
        Ok(Some(s0 + ratio.ln()))
    };

    let mut samples = vec![EntropySample { t: 0.0, coarse: coarse_entropy(grid, cloud)?, fine: fine_at(0.0)? }];
    for c in 0..cfg.n_checkpoints {
        let snap: Vec<PhaseSpacePoint<T>> = tracks.iter().map(|tr| tr[c].clone()).collect();
        let t = ((c + 1) * per_checkpoint) as f64 * cfg.dt;
        samples.push(EntropySample { t, coarse: coarse_entropy(grid, &snap)?, fine: fine_at(t)? });
    }
    Ok(EntropySeries { samples })
}

/// Runs the cloud forward for `t_end`, flips every momentum, runs another
/// `t_end` and flips back, then returns the total variation distance between
/// the final and initial cell distributions. Jitter, if any, keeps acting
/// during the return leg.
pub fn replay_distance<T: Real>(
    sys: &HamiltonianSystem<T>,
    cloud: &[PhaseSpacePoint<T>],
    grid: &CoarseGrid,
    dt: f64,
    t_end: f64,
    jitter: Option<Jitter>,
    seed: u64,
) -> Result<f64> {
    if cloud.is_empty() || !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::invalid("need a cloud and positive times"));
    }
    let n = (t_end / dt).round() as usize;
    let law = jitter.as_ref().map(exp_law).transpose()?;
    let step = T::lit(dt);
    let back: Vec<PhaseSpacePoint<T>> = cloud
        .par_iter()
        .enumerate()
        .map(|(i, x0)| {
            let mut rng = stream(seed, i as u64);
            let jit = jitter.as_ref().zip(law.as_ref());
            let mut clock = jit.map_or(f64::INFINITY, |(_, w)| w.sample(&mut rng));
            let mut grad = vec![T::zero(); sys.dof()];
            let mut x = x0.clone();
            advance(sys, &mut x, step, n, 0.0, jit, &mut clock, &mut rng, &mut grad);
            x = x.flip_momenta();
            advance(sys, &mut x, step, n, n as f64 * dt, jit, &mut clock, &mut rng, &mut grad);
            x.flip_momenta()
        })
        .collect();
    grid.total_variation(&back, cloud)
}
