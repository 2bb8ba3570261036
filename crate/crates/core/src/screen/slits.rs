use rand::Rng;
use rustfft::FftNum;

use super::grid::{apply_slits, free_propagate, GridWavefunction, MaskOutcome};
use super::{direct_born_sample, sequential_absorption, AbsorptionAmplitudes, ScreenPartition};
use crate::error::{Error, Result};
use crate::numerics::{Complex, Real};
use crate::rng::{stream, unit};
use crate::table::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpenSlits {
    Both,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// How the screen absorbs each photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpactSampling {
    /// One Born collapse over all screen cells.
    Direct,
    /// Groups of `group_size` contiguous cells offered in turn.
    Sequential { group_size: usize },
}

/// Transverse double-slit geometry in the paraxial picture: the beam's
/// longitudinal wavenumber plays the role of mass and distance that of time.
/// Lengths are in units of the grid spacing unless `dx` says otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleSlitConfig {
    pub n_grid: usize,
    pub n_screen: usize,
    pub dx: f64,
    pub wavenumber: f64,
    pub source_sigma: f64,
    pub source_distance: f64,
    /// Cells whose centre lies within half this width of a slit centre are open.
    pub slit_width: f64,
    /// Centre-to-centre distance between the slits.
    pub slit_separation: f64,
    pub screen_distance: f64,
    pub open: OpenSlits,
    pub which_path: bool,
    pub sampling: ImpactSampling,
    pub record_events: bool,
}

impl Default for DoubleSlitConfig {
    fn default() -> Self {
        Self {
            n_grid: 4096,
            n_screen: 1024,
            dx: 1.0,
            wavenumber: 4.0,
            source_sigma: 60.0,
            source_distance: 100.0,
            slit_width: 2.0,
            slit_separation: 32.0,
            screen_distance: 1000.0,
            open: OpenSlits::Both,
            which_path: false,
            sampling: ImpactSampling::Direct,
            record_events: false,
        }
    }
}

impl DoubleSlitConfig {
    /// Fringe spacing on the screen, `2 pi L / (k d)`.
    pub fn fringe_period(&self) -> f64 {
        std::f64::consts::TAU * self.screen_distance / (self.wavenumber * self.slit_separation)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dx", self.dx),
            ("wavenumber", self.wavenumber),
            ("source_sigma", self.source_sigma),
            ("slit_width", self.slit_width),
            ("slit_separation", self.slit_separation),
            ("screen_distance", self.screen_distance),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Geometry(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.source_distance >= 0.0) {
            return Err(Error::Geometry("source distance must be nonnegative".into()));
        }
        if self.n_screen < 2 || self.n_screen > self.n_grid {
            return Err(Error::Geometry(format!("screen of {} cells does not fit a grid of {}", self.n_screen, self.n_grid)));
        }
        if self.slit_separation < 8.0 * self.dx {
            return Err(Error::Geometry("slit separation must span at least 8 cells".into()));
        }
        if self.slit_width >= self.slit_separation {
            return Err(Error::Geometry("slits overlap".into()));
        }
        let reach = 0.5 * (self.slit_separation + self.slit_width);
        if reach >= 0.5 * (self.n_grid as f64 - 1.0) * self.dx {
            return Err(Error::Geometry("slits extend past the grid".into()));
        }
        let fringes = self.n_screen as f64 * self.dx / self.fringe_period();
        if fringes < 5.0 {
            return Err(Error::Geometry(format!("screen shows only {fringes:.2} fringe periods; need at least 5")));
        }
        if let ImpactSampling::Sequential { group_size: 0 } = self.sampling {
            return Err(Error::Geometry("group size must be positive".into()));
        }
        Ok(())
    }

    fn slit_mask(&self, side: Side) -> Vec<bool> {
        let centre = match side {
            Side::Left => -0.5 * self.slit_separation,
            Side::Right => 0.5 * self.slit_separation,
        };
        let half = self.n_grid / 2;
        let tol = 1e-9 * self.dx;
        (0..self.n_grid)
            .map(|j| ((j as f64 - half as f64) * self.dx - centre).abs() <= 0.5 * self.slit_width + tol)
            .collect()
    }

    /// Open cells for the configured slits.
    pub fn mask(&self) -> Vec<bool> {
        let left = self.slit_mask(Side::Left);
        let right = self.slit_mask(Side::Right);
        match self.open {
            OpenSlits::Both => left.iter().zip(&right).map(|(&a, &b)| a || b).collect(),
            OpenSlits::Left => left,
            OpenSlits::Right => right,
        }
    }

    fn screen_offset(&self) -> usize {
        (self.n_grid - self.n_screen) / 2
    }
}

/// Collapse onto the support of one slit, chosen with the probability mass
/// each slit carries.
pub fn which_path_collapse<T: Real, R: Rng + ?Sized>(
    psi: &GridWavefunction<T>,
    left: &[bool],
    right: &[bool],
    rng: &mut R,
) -> Result<(Side, MaskOutcome<T>)> {
    let p_left = side_probability(psi, left, right)?;
    if unit::<f64, _>(rng) < p_left {
        Ok((Side::Left, apply_slits(psi, left)?))
    } else {
        Ok((Side::Right, apply_slits(psi, right)?))
    }
}

fn side_probability<T: Real>(psi: &GridWavefunction<T>, left: &[bool], right: &[bool]) -> Result<f64> {
    let probs = psi.cell_probabilities();
    if left.len() != probs.len() || right.len() != probs.len() {
        return Err(Error::DimensionMismatch { expected: probs.len(), found: left.len().min(right.len()) });
    }
    let pl: f64 = probs.iter().zip(left).filter(|(_, &m)| m).map(|(p, _)| p).sum();
    let pr: f64 = probs.iter().zip(right).filter(|(_, &m)| m).map(|(p, _)| p).sum();
    if !(pl + pr > 0.0) {
        return Err(Error::invalid("neither slit carries any amplitude"));
    }
    Ok(pl / (pl + pr))
}

/// Impact counts per screen cell plus photons that missed the screen.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactHistogram {
    pub counts: Vec<u64>,
    pub misses: u64,
    pub dx: f64,
}

impl ImpactHistogram {
    pub fn new(n_cells: usize, dx: f64) -> Self {
        Self { counts: vec![0; n_cells], misses: 0, dx }
    }

    pub fn hits(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Adds another histogram over the same screen.
    pub fn merge(&mut self, other: &ImpactHistogram) -> Result<()> {
        if other.counts.len() != self.counts.len() {
            return Err(Error::DimensionMismatch { expected: self.counts.len(), found: other.counts.len() });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.misses += other.misses;
        Ok(())
    }

    /// Counts summed over detector bins of `cells` screen cells.
    pub fn rebin(&self, cells: usize) -> Vec<u64> {
        self.counts.chunks(cells.max(1)).map(|c| c.iter().sum()).collect()
    }

    /// Fraction of hits per detector bin.
    pub fn distribution(&self, cells: usize) -> Vec<f64> {
        let hits = self.hits().max(1) as f64;
        self.rebin(cells).into_iter().map(|c| c as f64 / hits).collect()
    }

    /// Total-variation distance between the hit distributions on detector
    /// bins of `cells` cells.
    pub fn total_variation(&self, other: &ImpactHistogram, cells: usize) -> Result<f64> {
        if other.counts.len() != self.counts.len() {
            return Err(Error::DimensionMismatch { expected: self.counts.len(), found: other.counts.len() });
        }
        let a = self.distribution(cells);
        let b = other.distribution(cells);
        Ok(0.5 * a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>())
    }

    /// Screen coordinate of the centre of detector bin `b`.
    pub fn bin_center(&self, b: usize, cells: usize) -> f64 {
        let centre_cell = (b * cells) as f64 + 0.5 * (cells as f64 - 1.0);
        (centre_cell - (self.counts.len() / 2) as f64) * self.dx
    }

    pub fn to_table(&self, cells: usize) -> Table {
        let mut t = Table::new(["x", "count", "fraction"]);
        let hits = self.hits().max(1) as f64;
        for (b, c) in self.rebin(cells).into_iter().enumerate() {
            t.push(vec![Cell::Float(self.bin_center(b, cells)), Cell::Int(c as i64), Cell::Float(c as f64 / hits)]);
        }
        t
    }
}

/// `(I_max - I_min) / (I_max + I_min)` over `values[lo..hi]`.
pub fn fringe_visibility(values: &[f64], lo: usize, hi: usize) -> Result<f64> {
    let window = values.get(lo..hi).filter(|w| !w.is_empty()).ok_or_else(|| Error::invalid("empty visibility window"))?;
    let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = window.iter().copied().fold(f64::INFINITY, f64::min);
    if max + min <= 0.0 {
        return Ok(0.0);
    }
    Ok((max - min) / (max + min))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhotonEvent {
    pub photon: u64,
    pub side: Option<Side>,
    /// Screen cell, or `None` if the photon missed the screen.
    pub cell: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleSlitRun {
    pub config: DoubleSlitConfig,
    pub histogram: ImpactHistogram,
    pub left_choices: u64,
    pub right_choices: u64,
    /// Probability that a photon gets through the open slits.
    pub survival: f64,
    pub events: Vec<PhotonEvent>,
}

impl DoubleSlitRun {
    /// Visibility over one fringe period either side of the screen centre,
    /// on detector bins of `cells` cells.
    pub fn central_visibility(&self, cells: usize) -> Result<f64> {
        let cells = cells.max(1);
        let centre = self.histogram.counts.len() / 2;
        let period = (self.config.fringe_period() / self.config.dx).ceil() as usize;
        let lo = centre.saturating_sub(period) / cells;
        let hi = (centre + period).div_ceil(cells);
        let values: Vec<f64> = self.histogram.rebin(cells).into_iter().map(|c| c as f64).collect();
        fringe_visibility(&values, lo, hi.min(values.len()))
    }
}

/// Screen-line channel amplitudes for a state in the screen plane.
fn screen_channels<T: Real>(psi: &GridWavefunction<T>, cfg: &DoubleSlitConfig) -> Result<AbsorptionAmplitudes<f64>> {
    let probs = psi.x_marginal();
    let off = cfg.screen_offset();
    let on: Vec<Complex<f64>> = probs[off..off + cfg.n_screen].iter().map(|p| Complex::new(p.sqrt(), 0.0)).collect();
    let on_screen: f64 = probs[off..off + cfg.n_screen].iter().sum();
    let vacuum = Complex::new((1.0 - on_screen).max(0.0).sqrt(), 0.0);
    AbsorptionAmplitudes::normalized(Some(vacuum), on)
}

fn to_screen<T: Real + FftNum>(psi: &GridWavefunction<T>, cfg: &DoubleSlitConfig) -> Result<AbsorptionAmplitudes<f64>> {
    let at_screen = free_propagate(psi, T::lit(cfg.wavenumber), T::lit(cfg.screen_distance), 1)?;
    screen_channels(&at_screen, cfg)
}

/// Sends `n_photons` through the slits. The deterministic propagation is
/// computed once; each photon then undergoes its own collapses (which-path,
/// if enabled, and absorption on the screen) with a private random stream
/// derived from a master seed drawn from `rng`.
pub fn run_double_slit<T: Real + FftNum, R: Rng + ?Sized>(
    cfg: &DoubleSlitConfig,
    n_photons: u64,
    rng: &mut R,
) -> Result<DoubleSlitRun> {
    cfg.validate()?;
    let dx = T::lit(cfg.dx);
    let source = GridWavefunction::<T>::gaussian_1d(cfg.n_grid, dx, T::zero(), T::lit(cfg.source_sigma), T::zero())?;
    source.boundary_guard()?;
    let incident = if cfg.source_distance > 0.0 {
        free_propagate(&source, T::lit(cfg.wavenumber), T::lit(cfg.source_distance), 1)?
    } else {
        source
    };
    let masked = apply_slits(&incident, &cfg.mask())?;
    let master: u64 = rng.random();

    let left_mask = cfg.slit_mask(Side::Left);
    let right_mask = cfg.slit_mask(Side::Right);
    let (coherent, branches, p_left) = if cfg.which_path && cfg.open == OpenSlits::Both {
        let p_left = side_probability(&masked.psi, &left_mask, &right_mask)?;
        let left = to_screen(&apply_slits(&masked.psi, &left_mask)?.psi, cfg)?;
        let right = to_screen(&apply_slits(&masked.psi, &right_mask)?.psi, cfg)?;
        (None, Some((left, right)), p_left)
    } else {
        (Some(to_screen(&masked.psi, cfg)?), None, 0.0)
    };

    let partition = match cfg.sampling {
        ImpactSampling::Direct => None,
        ImpactSampling::Sequential { group_size } => Some(ScreenPartition::contiguous(cfg.n_screen, group_size)?),
    };
    let mut hist = ImpactHistogram::new(cfg.n_screen, cfg.dx);
    let mut events = Vec::new();
    let (mut left_choices, mut right_choices) = (0u64, 0u64);
    for photon in 0..n_photons {
        let mut prng = stream(master, photon);
        let (channels, side) = match (&coherent, &branches) {
            (Some(c), _) => (c, None),
            (None, Some((l, r))) => {
                if unit::<f64, _>(&mut prng) < p_left {
                    left_choices += 1;
                    (l, Some(Side::Left))
                } else {
                    right_choices += 1;
                    (r, Some(Side::Right))
                }
            }
            (None, None) => unreachable!("one propagation branch is always prepared"),
        };
        let k = match &partition {
            None => direct_born_sample(channels, &mut prng),
            Some(part) => sequential_absorption(channels, part, &mut prng)?,
        };
        let cell = k.checked_sub(1);
        match cell {
            Some(c) => hist.counts[c] += 1,
            None => hist.misses += 1,
        }
        if cfg.record_events {
            events.push(PhotonEvent { photon, side, cell });
        }
    }
    Ok(DoubleSlitRun {
        config: cfg.clone(),
        histogram: hist,
        left_choices,
        right_choices,
        survival: masked.survival,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry_is_valid() {
        let cfg = DoubleSlitConfig::default();
        cfg.validate().unwrap();
        let mask = cfg.mask();
        let n = cfg.n_grid;
        for j in 1..n {
            assert_eq!(mask[j], mask[n - j], "mask not mirror symmetric at {j}");
        }
        assert_eq!(mask.iter().filter(|&&m| m).count(), 6);
    }

    #[test]
    fn rejects_bad_geometry() {
        let mut cfg = DoubleSlitConfig { slit_separation: 4.0, ..Default::default() };
        assert!(matches!(cfg.validate().unwrap_err(), Error::Geometry(_)));
        cfg.slit_separation = 32.0;
        cfg.screen_distance = 1e5;
        assert!(cfg.validate().is_err());
        cfg.screen_distance = 1000.0;
        cfg.slit_width = 40.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn visibility_examples() {
        assert_eq!(fringe_visibility(&[1.0, 1.0, 1.0], 0, 3).unwrap(), 0.0);
        assert_eq!(fringe_visibility(&[0.0, 2.0], 0, 2).unwrap(), 1.0);
        assert!(fringe_visibility(&[1.0], 1, 1).is_err());
    }

    #[test]
    fn histogram_rebin_and_merge() {
        let mut a = ImpactHistogram { counts: vec![1, 2, 3, 4], misses: 1, dx: 1.0 };
        let b = ImpactHistogram { counts: vec![1, 0, 0, 1], misses: 0, dx: 1.0 };
        a.merge(&b).unwrap();
        assert_eq!(a.rebin(2), vec![4, 8]);
        assert_eq!(a.misses, 1);
        assert_eq!(a.bin_center(0, 2), -1.5);
        assert_eq!(a.total_variation(&a, 2).unwrap(), 0.0);
    }
}
