//! Pairwise random energy exchange among `N` classical particles.
//!
//! Two distinct particles are drawn uniformly; their pooled energy is split
//! with a uniform fraction `r`: `E'_i = r (E_i + E_j)`, `E'_j` the remainder.
//! The total is conserved and the one-particle distribution relaxes to the
//! exponential law with the conserved mean. Energies are in meV.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{neg_p_ln_p, CompensatedSum, Real};
use crate::rng::unit;
use crate::table::Table;

/// Relative drift of the recomputed total that counts as a conservation failure.
pub const CONSERVATION_TOLERANCE: f64 = 1e-9;
/// Default total-variation threshold between late snapshots.
pub const STATIONARITY_THRESHOLD: f64 = 0.005;
/// Steps between full conservation and positivity audits.
pub const AUDIT_INTERVAL: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyEnsemble<T: Real = f64> {
    energies: Vec<T>,
    total: T,
}

impl<T: Real> EnergyEnsemble<T> {
    pub fn new(energies: Vec<T>) -> Result<Self> {
        if energies.len() < 2 {
            return Err(Error::invalid("an ensemble needs at least two particles"));
        }
        if let Some(e) = energies.iter().find(|e| !(**e >= T::zero()) || !e.is_finite()) {
            return Err(Error::invalid(format!("energies must be finite and nonnegative, got {e}")));
        }
        let total = T::lit(compensated_total(&energies));
        Ok(Self { energies, total })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    /// Total recorded at construction; exchange steps never change it.
    pub fn total(&self) -> T {
        self.total
    }

    pub fn mean(&self) -> T {
        self.total / T::from_usize_lossy(self.len())
    }

    pub fn min_energy(&self) -> T {
        self.energies.iter().copied().fold(self.energies[0], |m, e| m.min(e))
    }

    /// Relative difference between the recorded total and a compensated
    /// recomputation.
    pub fn conservation_drift(&self) -> f64 {
        let recorded = self.total.to_f64_lossy();
        let now = compensated_total(&self.energies);
        if recorded == 0.0 {
            now.abs()
        } else {
            ((now - recorded) / recorded).abs()
        }
    }

    /// Fails with a numeric error if conservation or positivity is broken.
    pub fn audit(&self) -> Result<()> {
        let drift = self.conservation_drift();
        if drift > CONSERVATION_TOLERANCE {
            return Err(Error::Numeric(format!("total energy drifted by {drift:e} (relative)")));
        }
        let min = self.min_energy();
        if min < T::zero() {
            return Err(Error::Numeric(format!("negative particle energy {min}")));
        }
        Ok(())
    }
}

fn compensated_total<T: Real>(energies: &[T]) -> f64 {
    energies.iter().map(|e| e.to_f64_lossy()).collect::<CompensatedSum>().value()
}

/// `N` energies `r E0` with `r` uniform on [0, 1].
pub fn init_uniform<T: Real, R: Rng + ?Sized>(n: usize, e0: T, rng: &mut R) -> Result<EnergyEnsemble<T>> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least two particles, got {n}")));
    }
    if !(e0 > T::zero()) || !e0.is_finite() {
        return Err(Error::invalid(format!("E0 must be positive, got {e0}")));
    }
    let energies = (0..n).map(|_| unit::<T, _>(rng) * e0).collect();
    EnergyEnsemble::new(energies)
}

/// Picks `i` uniformly, then `j != i` uniformly.
fn pick_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

/// Splits the pooled energy of `i` and `j` with fraction `r`.
///
/// The larger share is rounded first and the smaller recovered as
/// `pool - large`, which is exact because `large >= pool / 2`; the two
/// shares then add back to the rounded pool without error.
pub fn exchange<T: Real>(ens: &mut EnergyEnsemble<T>, i: usize, j: usize, r: T) {
    let pool = ens.energies[i] + ens.energies[j];
    let half = T::lit(0.5);
    let small_fraction = if r <= half { r } else { T::one() - r };
    let large = (pool - small_fraction * pool).min(pool);
    let small = pool - large;
    let (ei, ej) = if r <= half { (small, large) } else { (large, small) };
    ens.energies[i] = ei;
    ens.energies[j] = ej;
}

/// One exchange between a uniformly chosen pair.
pub fn redistribution_step<T: Real, R: Rng + ?Sized>(ens: &mut EnergyEnsemble<T>, rng: &mut R) {
    let (i, j) = pick_pair(ens.len(), rng);
    let r = unit::<T, _>(rng);
    exchange(ens, i, j, r);
}

/// Fixed-width histogram of particle energies starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyHistogram {
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub n_total: u64,
}

impl EnergyHistogram {
    pub fn from_energies<T: Real>(energies: &[T], bin_width: f64) -> Result<Self> {
        if !(bin_width > 0.0) || !bin_width.is_finite() {
            return Err(Error::invalid(format!("bin width must be positive, got {bin_width}")));
        }
        let mut counts: Vec<u64> = Vec::new();
        for e in energies {
            let e = e.to_f64_lossy();
            if !(e >= 0.0) || !e.is_finite() {
                return Err(Error::invalid(format!("cannot histogram energy {e}")));
            }
            let k = (e / bin_width).floor() as usize;
            if k >= counts.len() {
                counts.resize(k + 1, 0);
            }
            counts[k] += 1;
        }
        Ok(Self { bin_width, counts, n_total: energies.len() as u64 })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn bin_center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.bin_width
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.n_total as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Normalized density `count / (N * width)` per bin.
    pub fn density(&self) -> Vec<f64> {
        let scale = self.n_total as f64 * self.bin_width;
        self.counts.iter().map(|&c| c as f64 / scale).collect()
    }
}

/// Exponential density `exp(-eps / mean) / mean`.
pub fn boltzmann_pdf<T: Real>(eps: T, mean: T) -> Result<T> {
    if !(mean > T::zero()) || !(eps >= T::zero()) {
        return Err(Error::invalid(format!("need mean > 0 and eps >= 0, got mean {mean}, eps {eps}")));
    }
    Ok((-eps / mean).exp() / mean)
}

/// `P(E <= eps)` for the exponential law.
pub fn boltzmann_cdf<T: Real>(eps: T, mean: T) -> Result<T> {
    if !(mean > T::zero()) || !(eps >= T::zero()) {
        return Err(Error::invalid(format!("need mean > 0 and eps >= 0, got mean {mean}, eps {eps}")));
    }
    Ok(-(-eps / mean).exp_m1())
}

/// `-sum p ln p` over occupied bins, in nats.
pub fn shannon_entropy_of_histogram(h: &EnergyHistogram) -> Result<f64> {
    if h.n_total == 0 {
        return Err(Error::invalid("empty histogram"));
    }
    Ok(h.probabilities().into_iter().map(neg_p_ln_p).collect::<CompensatedSum>().value())
}

/// Discrete KL divergence from the exponential law with the given mean,
/// integrated over the histogram's bins; the last bin absorbs the tail.
pub fn kl_from_boltzmann(h: &EnergyHistogram, mean: f64) -> Result<f64> {
    if h.n_total == 0 {
        return Err(Error::invalid("empty histogram"));
    }
    if !(mean > 0.0) {
        return Err(Error::invalid(format!("mean must be positive, got {mean}")));
    }
    let last = h.len() - 1;
    let mut kl = CompensatedSum::new();
    for (k, p) in h.probabilities().into_iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let lo = (-(k as f64) * h.bin_width / mean).exp();
        let hi = if k == last { 0.0 } else { (-((k + 1) as f64) * h.bin_width / mean).exp() };
        let q = lo - hi;
        if q <= 0.0 {
            return Ok(f64::INFINITY);
        }
        kl.add(p * (p / q).ln());
    }
    Ok(kl.value())
}

/// Total-variation distance between two histograms with the same bin width.
pub fn total_variation(a: &EnergyHistogram, b: &EnergyHistogram) -> Result<f64> {
    if a.bin_width != b.bin_width {
        return Err(Error::invalid("histograms use different bin widths"));
    }
    if a.n_total == 0 || b.n_total == 0 {
        return Err(Error::invalid("empty histogram"));
    }
    let pa = a.probabilities();
    let pb = b.probabilities();
    let n = pa.len().max(pb.len());
    let at = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
    Ok(0.5 * (0..n).map(|k| (at(&pa, k) - at(&pb, k)).abs()).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub iteration: u64,
    pub histogram: EnergyHistogram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumRun<T: Real = f64> {
    pub snapshots: Vec<Snapshot>,
    pub ensemble: EnergyEnsemble<T>,
}

impl<T: Real> EquilibriumRun<T> {
    pub fn final_histogram(&self) -> &EnergyHistogram {
        &self.snapshots.last().expect("a run always holds the initial snapshot").histogram
    }

    pub fn entropy_trace(&self) -> Result<Vec<(u64, f64)>> {
        self.snapshots.iter().map(|s| Ok((s.iteration, shannon_entropy_of_histogram(&s.histogram)?))).collect()
    }

    /// KL divergence from the exponential law at every snapshot.
    pub fn kl_trace(&self) -> Result<Vec<(u64, f64)>> {
        let mean = self.ensemble.mean().to_f64_lossy();
        self.snapshots.iter().map(|s| Ok((s.iteration, kl_from_boltzmann(&s.histogram, mean)?))).collect()
    }

    /// Whether the last two snapshots differ by less than `threshold` in
    /// total variation.
    pub fn is_stationary(&self, threshold: f64) -> Result<bool> {
        match self.snapshots.as_slice() {
            [.., a, b] => Ok(total_variation(&a.histogram, &b.histogram)? < threshold),
            _ => Ok(false),
        }
    }

    /// Long-format time series: iteration, bin center, density.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["iteration", "bin_center", "density"]);
        for s in &self.snapshots {
            for (k, d) in s.histogram.density().into_iter().enumerate() {
                t.push(vec![(s.iteration as i64).into(), s.histogram.bin_center(k).into(), d.into()]);
            }
        }
        t
    }
}

/// Runs `n_iterations` exchange steps, snapshotting the histogram at the
/// start and every `sample_every` steps (and at the end). Conservation and
/// positivity are audited every [`AUDIT_INTERVAL`] steps and at the end.
pub fn run_to_equilibrium<T: Real, R: Rng + ?Sized>(
    mut ens: EnergyEnsemble<T>,
    n_iterations: u64,
    sample_every: u64,
    bin_width: f64,
    rng: &mut R,
) -> Result<EquilibriumRun<T>> {
    if sample_every == 0 {
        return Err(Error::invalid("sample interval must be positive"));
    }
    let mut snapshots = vec![Snapshot { iteration: 0, histogram: EnergyHistogram::from_energies(&ens.energies, bin_width)? }];
    for it in 1..=n_iterations {
        redistribution_step(&mut ens, rng);
        if it % AUDIT_INTERVAL == 0 {
            ens.audit()?;
        }
        if it % sample_every == 0 || it == n_iterations {
            snapshots.push(Snapshot { iteration: it, histogram: EnergyHistogram::from_energies(&ens.energies, bin_width)? });
        }
    }
    ens.audit()?;
    Ok(EquilibriumRun { snapshots, ensemble: ens })
}
