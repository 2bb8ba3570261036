use collapse_core::rng::{normal, stream};
use collapse_core::screen::{
    direct_born_sample, run_double_slit, sequential_absorption, sequential_outcome_distribution, AbsorptionAmplitudes,
    DoubleSlitConfig, GridWavefunction, ImpactSampling, OpenSlits, ScreenPartition, Side,
};
use collapse_core::table::{Cell, Table};
use collapse_core::Complex;
use serde::Serialize;

use super::Experiment;
use crate::output::Output;
use crate::params::{DoubleSlit, Profile, Screen, Slits};
use crate::report::{Checks, CliResult, Context};

impl Screen {
    fn amplitudes(&self, seed: u64) -> collapse_core::Result<AbsorptionAmplitudes> {
        let n = self.n as usize;
        let centre = 0.5 * (n as f64 - 1.0);
        let mut rng = stream(seed, 0);
        let particles: Vec<Complex<f64>> = (0..n)
            .map(|k| match self.profile {
                Profile::Gaussian => {
                    let z = (k as f64 - centre) / self.width;
                    Complex::new((-0.25 * z * z).exp(), 0.0)
                }
                Profile::Uniform => Complex::new(1.0, 0.0),
                Profile::Random => Complex::new(normal::<f64, _>(&mut rng), normal::<f64, _>(&mut rng)),
            })
            .collect();
        let norm: f64 = particles.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let scale = (1.0 - self.vacuum).sqrt() / norm;
        let vacuum = (self.vacuum > 0.0).then(|| Complex::new(self.vacuum.sqrt(), 0.0));
        AbsorptionAmplitudes::normalized(vacuum, particles.into_iter().map(|c| c * scale).collect())
    }
}

#[derive(Serialize)]
struct ScreenSummary {
    particles: u64,
    groups: usize,
    trials: u64,
    max_exact_deviation: f64,
    tv_sequential: f64,
    tv_direct: f64,
}

fn tv(counts: &[u64], probs: &[f64], trials: u64) -> f64 {
    0.5 * counts.iter().zip(probs).map(|(&c, p)| (c as f64 / trials as f64 - p).abs()).sum::<f64>()
}

impl Experiment for Screen {
    const NAME: &'static str = "screen";

    fn check(&self, c: &mut Checks) {
        c.at_least("n", self.n, 1);
        c.at_least("group-size", self.group_size, 1);
        c.at_least("trials", self.trials, 1);
        c.require((0.0..1.0).contains(&self.vacuum), "vacuum", || format!("must lie in [0, 1), got {}", self.vacuum));
        if self.profile == Profile::Gaussian {
            c.positive("width", self.width);
        }
    }

    fn run(&self, seed: u64, out: &mut Output) -> CliResult<()> {
        let amps = self.amplitudes(seed).ctx("profile")?;
        let part = ScreenPartition::contiguous(self.n as usize, self.group_size as usize).ctx("group-size")?;
        let exact = sequential_outcome_distribution(&amps, &part).ctx("partition")?;
        let born = amps.probabilities();

        let outcomes = born.len();
        let mut seq = vec![0u64; outcomes];
        let mut direct = vec![0u64; outcomes];
        let mut rng_seq = stream(seed, 1);
        let mut rng_direct = stream(seed, 2);
        for _ in 0..self.trials {
            seq[sequential_absorption(&amps, &part, &mut rng_seq).ctx("absorption")?] += 1;
            direct[direct_born_sample(&amps, &mut rng_direct)] += 1;
        }

        let mut t = Table::new(["outcome", "born_probability", "sequential_probability", "sequential_count", "direct_count"]);
        for k in 0..outcomes {
            t.push(vec![k.into(), born[k].into(), exact[k].into(), seq[k].into(), direct[k].into()]);
        }
        out.table("outcomes", &t.with_units(&["1"; 5]));
        out.summary(&ScreenSummary {
            particles: self.n,
            groups: part.groups().len(),
            trials: self.trials,
            max_exact_deviation: exact.iter().zip(born).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            tv_sequential: tv(&seq, born, self.trials),
            tv_direct: tv(&direct, born, self.trials),
        });
        Ok(())
    }
}

impl DoubleSlit {
    pub fn core_config(&self) -> DoubleSlitConfig {
        DoubleSlitConfig {
            n_grid: self.n_grid as usize,
            n_screen: self.n_screen as usize,
            dx: self.dx,
            wavenumber: self.wavenumber,
            source_sigma: self.source_sigma,
            source_distance: self.source_distance,
            slit_width: self.slit_width,
            slit_separation: self.slit_separation,
            screen_distance: self.screen_distance,
            open: match self.open {
                Slits::Both => OpenSlits::Both,
                Slits::Left => OpenSlits::Left,
                Slits::Right => OpenSlits::Right,
            },
            which_path: self.which_path,
            sampling: match self.group_size {
                0 => ImpactSampling::Direct,
                g => ImpactSampling::Sequential { group_size: g as usize },
            },
            record_events: self.record_events,
        }
    }
}

#[derive(Serialize)]
struct DoubleSlitSummary {
    photons: u64,
    hits: u64,
    misses: u64,
    left_choices: u64,
    right_choices: u64,
    survival: f64,
    fringe_period: f64,
    central_visibility: f64,
}

impl Experiment for DoubleSlit {
    const NAME: &'static str = "doubleslit";

    fn check(&self, c: &mut Checks) {
        c.at_least("photons", self.photons, 1);
        c.at_least("bin-cells", self.bin_cells, 1);
        if c.core("geometry", self.core_config().validate()).is_some() {
            let source = GridWavefunction::<f64>::gaussian_1d(self.n_grid as usize, self.dx, 0.0, self.source_sigma, 0.0);
            if let Some(psi) = c.core("source-sigma", source) {
                c.core("source-sigma", psi.boundary_guard());
            }
        }
    }

    fn run(&self, seed: u64, out: &mut Output) -> CliResult<()> {
        let run = run_double_slit::<f64, _>(&self.core_config(), self.photons, &mut stream(seed, 0)).ctx("doubleslit")?;
        let cells = self.bin_cells as usize;
        out.table("screen", &run.histogram.to_table(cells).with_units(&["L", "1", "1"]));
        if self.record_events {
            let mut t = Table::new(["photon", "slit", "cell"]);
            for e in &run.events {
                let side = match e.side {
                    Some(Side::Left) => "left",
                    Some(Side::Right) => "right",
                    None => "none",
                };
                let cell = e.cell.map_or(-1, |c| c as i64);
                t.push(vec![e.photon.into(), Cell::Text(side.into()), cell.into()]);
            }
            out.table("events", &t.with_units(&["1", "1", "1"]));
        }
        out.summary(&DoubleSlitSummary {
            photons: self.photons,
            hits: run.histogram.hits(),
            misses: run.histogram.misses,
            left_choices: run.left_choices,
            right_choices: run.right_choices,
            survival: run.survival,
            fringe_period: run.config.fringe_period(),
            central_visibility: run.central_visibility(cells).ctx("visibility")?,
        });
        Ok(())
    }
}
