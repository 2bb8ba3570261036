//! Per-experiment parameters.
//!
//! Each experiment has a flag/config struct whose fields are all optional and
//! a resolved struct with every default filled in. Flags overlay the config
//! file section, which overlays the defaults.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::report::Checks;

/// Flag/config input of one experiment.
pub trait Params: Sized {
    type Resolved: crate::experiments::Experiment;

    /// Fields set in `self` win over those in `under`.
    fn overlay(self, under: Self) -> Self;

    fn resolve(self) -> Self::Resolved;
}

macro_rules! params {
    (
        $(#[$meta:meta])*
        $resolved:ident / $input:ident {
            $( $(#[doc = $doc:literal])* $field:ident : $ty:ty = $default:expr ),* $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, PartialEq, clap::Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, rename_all = "kebab-case")]
        pub struct $input {
            $(
                $(#[doc = $doc])*
                #[arg(long, num_args = 0..=1, default_missing_value = "true")]
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }

        #[derive(Debug, Clone, PartialEq, Serialize)]
        #[serde(rename_all = "kebab-case")]
        pub struct $resolved {
            $( pub $field: $ty, )*
        }

        impl Params for $input {
            type Resolved = $resolved;

            fn overlay(self, under: Self) -> Self {
                Self { $( $field: self.$field.or(under.$field), )* }
            }

            fn resolve(self) -> $resolved {
                $resolved { $( $field: self.$field.unwrap_or_else(|| $default), )* }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementBasis {
    /// The basis in which the initial amplitudes are given.
    Computational,
    /// Eigenbasis of the Hamiltonian.
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Gaussian photon spot centred on the screen.
    Gaussian,
    Uniform,
    /// Independent complex Gaussian amplitudes.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Slits {
    Both,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    Harmonic,
    Pendulum,
    Quartic,
    HenonHeiles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    Exterior,
    Interior,
}

params! {
    /// Two-level system alternating unitary evolution with Poisson-timed collapses.
    Alternating / AlternatingArgs {
        /// Off-diagonal coupling of the Hamiltonian (energy units)
        coupling: f64 = 1.0,
        /// Level splitting of the Hamiltonian (energy units)
        detuning: f64 = 0.0,
        /// Collapse rate (events per unit time)
        rate: f64 = 0.5,
        /// Length of the run
        t_end: f64 = 20.0,
        /// Spacing of the recorded samples
        sample_dt: f64 = 0.05,
        /// Initial real amplitudes, comma separated; normalized on input
        initial: String = "1,0".into(),
        basis: MeasurementBasis = MeasurementBasis::Computational,
    }
}

params! {
    /// Random pairwise energy exchange relaxing to the exponential law.
    Gas / GasArgs {
        /// Number of particles
        n: u64 = 100_000,
        /// Upper bound of the uniform initial energies (meV)
        e0: f64 = 100.0,
        /// Number of exchange steps
        iters: u64 = 5_000_000,
        /// Steps between histogram snapshots
        sample_every: u64 = 250_000,
        /// Histogram bins spanning [0, e0]; the width is e0 / bins
        bins: u64 = 50,
    }
}

params! {
    /// Photon absorbed by a screen of particles, offered group by group.
    Screen / ScreenArgs {
        /// Screen particles
        n: u64 = 100,
        /// Shape of the absorption amplitudes
        profile: Profile = Profile::Gaussian,
        /// Width of the Gaussian spot, in particles
        width: f64 = 5.0,
        /// Probability that the photon is not absorbed at all
        vacuum: f64 = 0.0,
        /// Particles per sequential group
        group_size: u64 = 10,
        /// Photons sent
        trials: u64 = 100_000,
    }
}

params! {
    /// Paraxial double-slit interference with optional which-path collapse.
    DoubleSlit / DoubleSlitArgs {
        /// Photons sent
        photons: u64 = 100_000,
        /// Collapse onto one slit before the screen
        which_path: bool = false,
        open: Slits = Slits::Both,
        /// Transverse grid cells
        n_grid: u64 = 4096,
        /// Screen cells, centred on the grid
        n_screen: u64 = 1024,
        /// Grid spacing (length units)
        dx: f64 = 1.0,
        /// Longitudinal wavenumber (1/length)
        wavenumber: f64 = 4.0,
        /// Width of the incident Gaussian beam (length)
        source_sigma: f64 = 60.0,
        /// Source to slit distance (length)
        source_distance: f64 = 100.0,
        /// Slit width (length)
        slit_width: f64 = 2.0,
        /// Centre-to-centre slit separation (length)
        slit_separation: f64 = 32.0,
        /// Slit to screen distance (length)
        screen_distance: f64 = 1000.0,
        /// Screen cells per sequential absorption group; 0 samples directly
        group_size: u64 = 0,
        /// Screen cells per detector bin in the histogram
        bin_cells: u64 = 8,
        /// Also write one row per photon
        record_events: bool = false,
    }
}

params! {
    /// First-order perturbation theory against exact integration.
    Perturb / PerturbArgs {
        /// Unperturbed energy levels, comma separated
        levels: String = "0,1".into(),
        /// Real symmetric coupling matrix, rows separated by ';'
        coupling: String = "0,0.01;0.01,0".into(),
        /// Initial level
        initial: u64 = 0,
        /// Final level
        target: u64 = 1,
        /// Drive frequency
        omega: f64 = 1.0,
        /// Interval over which the drive acts
        interval: f64 = 20.0,
        /// Lower end of the resonance scan
        omega_min: f64 = 0.0,
        /// Upper end of the resonance scan
        omega_max: f64 = 2.0,
        /// Points in the resonance scan
        omega_points: u64 = 2001,
        /// Integrator steps per unit time
        steps_per_time: f64 = 200.0,
        /// Integrator steps between recorded amplitudes
        record_every: u64 = 100,
    }
}

params! {
    /// Hamiltonian trajectory, Liouville and Lyapunov diagnostics, random walk.
    Classical / ClassicalArgs {
        system: System = System::Harmonic,
        /// Initial coordinates, comma separated
        q: String = "1".into(),
        /// Initial momenta, comma separated
        p: String = "0".into(),
        /// Leapfrog step
        dt: f64 = 0.01,
        /// Trajectory length
        t_end: f64 = 100.0,
        /// Steps between recorded points
        record_every: u64 = 10,
        /// Velocity drag used for the Liouville contrast run
        drag: f64 = 0.1,
        /// Duration of the Liouville runs
        liouville_t: f64 = 10.0,
        /// Duration of the Lyapunov estimate
        lyapunov_t: f64 = 2000.0,
        /// Steps in each random walk
        walk_steps: u64 = 400,
        /// Step length of the random walk
        walk_d: f64 = 1.0,
        /// Number of random walks
        walks: u64 = 100_000,
    }
}

params! {
    /// Coarse-grained entropy of an ensemble with and without collapse kicks.
    Entropy / EntropyArgs {
        system: System = System::Harmonic,
        /// Centre of the initial cloud, coordinates
        q: String = "1".into(),
        /// Centre of the initial cloud, momenta
        p: String = "0".into(),
        /// Standard deviation of the initial cloud
        sigma: f64 = 0.1,
        /// Ensemble size
        members: u64 = 10_000,
        /// Half width of the coarse grid along each axis
        half_width: f64 = 3.0,
        /// Coarse cell side
        cell: f64 = 0.05,
        dt: f64 = 0.01,
        t_end: f64 = 20.0,
        /// Equal intervals between entropy checkpoints
        checkpoints: u64 = 10,
        /// Collapse kicks per unit time and member
        kick_rate: f64 = 1.0,
        /// Standard deviation of each kick
        kick_sigma: f64 = 0.05,
        /// Tolerance defining the entropy plateau (nat)
        plateau_tolerance: f64 = 0.02,
    }
}

params! {
    /// Five entropies of a joint distribution.
    Info / InfoArgs {
        /// CSV file of joint probabilities, one row per value of X
        joint: String = String::new(),
        /// Inline joint table, rows separated by ';', used when no file is given
        table: String = "0.5,0;0,0.5".into(),
    }
}

params! {
    /// Horizon thermodynamics of a Kerr–Newman hole.
    BlackHole / BlackHoleArgs {
        /// Mass (geometric units)
        m: f64 = 1.0,
        /// Charge
        q: f64 = 0.0,
        /// Angular momentum; ignored when the spin parameter is given
        l: f64 = 0.0,
        /// Spin parameter L / M
        a: f64 = f64::NAN,
    }
}

params! {
    /// Radial null curves of the Schwarzschild geometry.
    Geodesics / GeodesicsArgs {
        /// Mass (geometric units)
        m: f64 = 1.0,
        region: Region = Region::Exterior,
        /// Smallest radius sampled (units of M)
        r_min: f64 = 2.1,
        /// Largest radius sampled (units of M)
        r_max: f64 = 20.0,
        /// Points per curve
        points: u64 = 400,
        /// Radius the curves pass through (units of M)
        r0: f64 = 6.0,
        /// Coordinate time at r0 (units of M)
        t0: f64 = 0.0,
        /// Distance kept from the horizon (units of M)
        margin: f64 = 0.01,
    }
}

/// Parses a comma separated list of numbers.
pub fn number_list(checks: &mut Checks, field: &str, s: &str) -> Option<Vec<f64>> {
    let parsed: Result<Vec<f64>, _> = s.split(',').map(|x| x.trim().parse::<f64>()).collect();
    match parsed {
        Ok(v) if v.iter().all(|x| x.is_finite()) => Some(v),
        _ => {
            checks.push(field, format!("expected comma separated finite numbers, got {s:?}"));
            None
        }
    }
}

/// Parses rows separated by ';' into a rectangular table.
pub fn number_rows(checks: &mut Checks, field: &str, s: &str) -> Option<Vec<Vec<f64>>> {
    let rows: Option<Vec<Vec<f64>>> = s.split(';').map(|r| number_list(checks, field, r)).collect();
    let rows = rows?;
    if rows.windows(2).any(|w| w[0].len() != w[1].len()) {
        checks.push(field, "rows have different lengths");
        return None;
    }
    Some(rows)
}
