//! A photon absorbed by a screen of classical particles, one group of
//! candidate absorbers at a time, and the double-slit experiment on a grid.

mod grid;
mod slits;

pub use grid::{apply_slits, free_propagate, GridWavefunction, MaskOutcome};
pub use slits::{
    fringe_visibility, run_double_slit, which_path_collapse, DoubleSlitConfig, DoubleSlitRun, ImpactHistogram,
    ImpactSampling, OpenSlits, Side,
};

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{Complex, CompensatedSum, Real};
use crate::rng::unit;

/// Amplitudes `c_k` of the photon being absorbed by particle `k = 1..=N`;
/// `k = 0` is the vacuum channel (escape), whose amplitude is zero when
/// absent.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionAmplitudes<T: Real = f64> {
    amps: Vec<Complex<T>>,
    probs: Vec<f64>,
    has_vacuum: bool,
}

impl<T: Real> AbsorptionAmplitudes<T> {
    pub fn new(vacuum: Option<Complex<T>>, particles: Vec<Complex<T>>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::invalid("need at least one absorbing particle"));
        }
        let has_vacuum = vacuum.is_some();
        let mut amps = Vec::with_capacity(particles.len() + 1);
        amps.push(vacuum.unwrap_or_else(|| Complex::new(T::zero(), T::zero())));
        amps.extend(particles);
        let probs: Vec<f64> = amps.iter().map(|c| c.norm_sqr().to_f64_lossy()).collect();
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("amplitudes must be finite"));
        }
        let total = probs.iter().copied().collect::<CompensatedSum>().value();
        if (total - 1.0).abs() > 1e-9_f64.max(T::TOLERANCE_FLOOR) {
            return Err(Error::NotNormalized { norm: total.sqrt() });
        }
        Ok(Self { amps, probs, has_vacuum })
    }

    /// Normalizes the given amplitudes first.
    pub fn normalized(vacuum: Option<Complex<T>>, particles: Vec<Complex<T>>) -> Result<Self> {
        let total = vacuum.iter().chain(&particles).map(|c| c.norm_sqr().to_f64_lossy()).collect::<CompensatedSum>().value();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::invalid("amplitudes vanish"));
        }
        let s = T::lit(total.sqrt().recip());
        Self::new(vacuum.map(|c| c * s), particles.into_iter().map(|c| c * s).collect())
    }

    /// Number of particles `N`.
    pub fn particles(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn has_vacuum(&self) -> bool {
        self.has_vacuum
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    /// `|c_k|^2` for `k = 0..=N`.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }
}

/// Ordered disjoint groups of particle indices covering `1..=N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScreenPartition {
    groups: Vec<Vec<usize>>,
}

impl ScreenPartition {
    pub fn new(groups: Vec<Vec<usize>>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n + 1];
        for g in &groups {
            if g.is_empty() {
                return Err(Error::invalid("partition groups must be nonempty"));
            }
            for &k in g {
                if k == 0 || k > n {
                    return Err(Error::invalid(format!("index {k} is not a particle in 1..={n}")));
                }
                if seen[k] {
                    return Err(Error::invalid(format!("particle {k} appears in two groups")));
                }
                seen[k] = true;
            }
        }
        if let Some(k) = (1..=n).find(|&k| !seen[k]) {
            return Err(Error::invalid(format!("partition misses particle {k}")));
        }
        Ok(Self { groups })
    }

    /// Consecutive groups of `size` particles (the last may be shorter).
    pub fn contiguous(n: usize, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("group size must be positive"));
        }
        let groups = (1..=n).collect::<Vec<_>>().chunks(size).map(<[usize]>::to_vec).collect();
        Self::new(groups, n)
    }

    pub fn singletons(n: usize) -> Self {
        Self { groups: (1..=n).map(|k| vec![k]).collect() }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    fn check_against<T: Real>(&self, amps: &AbsorptionAmplitudes<T>) -> Result<()> {
        let covered: usize = self.groups.iter().map(Vec::len).sum();
        let max = self.groups.iter().flatten().copied().max().unwrap_or(0);
        if covered != amps.particles() || max != amps.particles() {
            return Err(Error::invalid(format!(
                "partition covers {covered} particles but there are {}",
                amps.particles()
            )));
        }
        Ok(())
    }
}

/// Group weights and the remaining weight before each group, with the
/// vacuum weight folded into every suffix.
fn group_masses(probs: &[f64], part: &ScreenPartition) -> (Vec<f64>, Vec<f64>) {
    let weights: Vec<f64> = part.groups.iter().map(|g| g.iter().map(|&k| probs[k]).collect::<CompensatedSum>().value()).collect();
    let mut remaining = vec![0.0; weights.len() + 1];
    remaining[weights.len()] = probs[0];
    for m in (0..weights.len()).rev() {
        remaining[m] = remaining[m + 1] + weights[m];
    }
    (weights, remaining)
}

/// Offers the photon to each group in turn. Inside a group, particle `k`
/// absorbs with its current normalized weight `|c_k|^2 / q`; if nobody in the
/// group absorbs, the group's amplitudes are removed and the rest
/// renormalized. Returns the absorbing particle, or 0 if the photon passes
/// every group and escapes.
pub fn sequential_absorption<T: Real, R: Rng + ?Sized>(
    amps: &AbsorptionAmplitudes<T>,
    part: &ScreenPartition,
    rng: &mut R,
) -> Result<usize> {
    part.check_against(amps)?;
    let probs = amps.probabilities();
    let (weights, remaining) = group_masses(probs, part);
    for (m, group) in part.groups.iter().enumerate() {
        let q = remaining[m];
        if weights[m] == 0.0 {
            continue;
        }
        let u = unit::<f64, _>(rng) * q;
        if u < weights[m] {
            let mut acc = 0.0;
            for &k in group {
                acc += probs[k];
                if u < acc {
                    return Ok(k);
                }
            }
            return Ok(*group.iter().rev().find(|&&k| probs[k] > 0.0).expect("group has weight"));
        }
    }
    if amps.has_vacuum() {
        Ok(0)
    } else {
        Err(Error::Numeric("photon passed every group without a vacuum channel".into()))
    }
}

/// Exact outcome distribution of [`sequential_absorption`], summing the
/// probability of every rejection path: `P(k) = prod_{m' < m} (1 - w_m' / q_m') * |c_k|^2 / q_m`.
pub fn sequential_outcome_distribution<T: Real>(amps: &AbsorptionAmplitudes<T>, part: &ScreenPartition) -> Result<Vec<f64>> {
    part.check_against(amps)?;
    let probs = amps.probabilities();
    let (weights, remaining) = group_masses(probs, part);
    let mut out = vec![0.0; probs.len()];
    let mut survive = 1.0;
    for (m, group) in part.groups.iter().enumerate() {
        let q = remaining[m];
        if q == 0.0 {
            break;
        }
        for &k in group {
            out[k] = survive * probs[k] / q;
        }
        survive *= 1.0 - weights[m] / q;
    }
    out[0] = if amps.has_vacuum() { survive } else { 0.0 };
    Ok(out)
}

/// Single Born collapse over all channels at once.
pub fn direct_born_sample<T: Real, R: Rng + ?Sized>(amps: &AbsorptionAmplitudes<T>, rng: &mut R) -> usize {
    let probs = amps.probabilities();
    let u = unit::<f64, _>(rng);
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn partition_validation() {
        assert!(ScreenPartition::new(vec![vec![1, 2], vec![2, 3]], 3).is_err());
        assert!(ScreenPartition::new(vec![vec![1], vec![3]], 3).is_err());
        assert!(ScreenPartition::new(vec![vec![1], vec![]], 1).is_err());
        assert!(ScreenPartition::new(vec![vec![0, 1]], 1).is_err());
        let p = ScreenPartition::contiguous(5, 2).unwrap();
        assert_eq!(p.groups(), &[vec![1, 2], vec![3, 4], vec![5]]);
    }

    #[test]
    fn amplitude_validation() {
        assert!(AbsorptionAmplitudes::new(None, vec![c(0.5), c(0.5)]).is_err());
        assert!(AbsorptionAmplitudes::<f64>::new(None, vec![]).is_err());
        let a = AbsorptionAmplitudes::normalized(Some(c(1.0)), vec![c(1.0)]).unwrap();
        assert!((a.probabilities()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_amplitude_is_certain() {
        let amps = AbsorptionAmplitudes::new(None, vec![c(0.0), c(0.0), c(1.0), c(0.0)]).unwrap();
        let part = ScreenPartition::contiguous(4, 3).unwrap();
        let mut rng = seeded(1);
        for _ in 0..200 {
            assert_eq!(sequential_absorption(&amps, &part, &mut rng).unwrap(), 3);
            assert_eq!(direct_born_sample(&amps, &mut rng), 3);
        }
    }

    #[test]
    fn mismatched_partition_is_rejected() {
        let amps = AbsorptionAmplitudes::new(None, vec![c(0.6), c(0.8)]).unwrap();
        let part = ScreenPartition::singletons(3);
        assert!(sequential_absorption(&amps, &part, &mut seeded(0)).is_err());
    }

    #[test]
    fn enumeration_matches_born_weights() {
        let amps = AbsorptionAmplitudes::normalized(
            Some(Complex::new(0.3, 0.1)),
            vec![c(0.2), Complex::new(0.0, -0.5), c(0.1), c(0.7)],
        )
        .unwrap();
        for part in [
            ScreenPartition::singletons(4),
            ScreenPartition::contiguous(4, 3).unwrap(),
            ScreenPartition::new(vec![vec![4, 1], vec![3], vec![2]], 4).unwrap(),
        ] {
            let dist = sequential_outcome_distribution(&amps, &part).unwrap();
            for (d, p) in dist.iter().zip(amps.probabilities()) {
                assert!((d - p).abs() < 1e-15, "{dist:?}");
            }
        }
    }
}
