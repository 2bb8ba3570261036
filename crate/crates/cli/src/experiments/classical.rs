use collapse_core::classical::{
    ensemble_entropy_evolution, gaussian_cloud, liouville_volume_check, lyapunov_estimate, replay_distance, simplex_cloud,
    trajectory, walk_statistics, CoarseGrid, EnsembleConfig, HamiltonianSystem, Jitter, PhaseSpacePoint, MIN_ENSEMBLE,
};
use collapse_core::rng::stream;
use collapse_core::table::Table;
use serde::Serialize;

use super::Experiment;
use crate::output::Output;
use crate::params::{number_list, Classical, Entropy, System};
use crate::report::{Checks, CliResult, Context};

fn system(s: System) -> collapse_core::Result<HamiltonianSystem> {
    match s {
        System::Harmonic => HamiltonianSystem::harmonic(1.0),
        System::Pendulum => HamiltonianSystem::pendulum(),
        System::Quartic => HamiltonianSystem::quartic(),
        System::HenonHeiles => HamiltonianSystem::henon_heiles(),
    }
}

/// System plus a starting point of matching dimension.
fn setup(c: &mut Checks, s: System, q: &str, p: &str) -> Option<(HamiltonianSystem, PhaseSpacePoint)> {
    let sys = c.core("system", system(s))?;
    let q = number_list(c, "q", q)?;
    let p = number_list(c, "p", p)?;
    if q.len() != sys.dof() || p.len() != sys.dof() {
        c.push("q", format!("{} needs {} coordinates and momenta", sys.name(), sys.dof()));
        return None;
    }
    let x = c.core("q", PhaseSpacePoint::new(q, p))?;
    Some((sys, x))
}

fn steps(t: f64, dt: f64) -> usize {
    (t / dt).round() as usize
}

#[derive(Serialize)]
struct ClassicalSummary {
    system: String,
    max_energy_drift: f64,
    liouville_ratio: f64,
    drag_ratio: f64,
    drag_expected: f64,
    lyapunov: f64,
    walk_count_sigma: f64,
    walk_expected_sigma: f64,
    walk_position_sigma: f64,
}

impl Experiment for Classical {
    const NAME: &'static str = "classical";

    fn check(&self, c: &mut Checks) {
        setup(c, self.system, &self.q, &self.p);
        c.positive("dt", self.dt);
        c.positive("t-end", self.t_end);
        c.positive("liouville-t", self.liouville_t);
        c.positive("lyapunov-t", self.lyapunov_t);
        c.require(self.drag >= 0.0 && self.drag.is_finite(), "drag", || "must be nonnegative".into());
        c.at_least("record-every", self.record_every, 1);
        c.at_least("walk-steps", self.walk_steps, 1);
        c.at_least("walks", self.walks, 2);
        c.positive("walk-d", self.walk_d);
    }

    fn run(&self, seed: u64, out: &mut Output) -> CliResult<()> {
        let mut c = Checks::default();
        let s = setup(&mut c, self.system, &self.q, &self.p);
        c.finish()?;
        let (sys, x0) = s.expect("checked");
        let n = steps(self.t_end, self.dt);
        let path = trajectory(&sys, &x0, self.dt, n, self.record_every as usize).ctx("trajectory")?;

        let dof = sys.dof();
        let mut header: Vec<String> = vec!["t".into()];
        header.extend((0..dof).map(|k| format!("q_{k}")));
        header.extend((0..dof).map(|k| format!("p_{k}")));
        header.push("energy".into());
        let mut t = Table::new(header);
        let e0 = sys.energy(&x0);
        let mut drift: f64 = 0.0;
        for (time, x) in &path {
            let e = sys.energy(x);
            drift = drift.max((e - e0).abs());
            let mut row = vec![*time];
            row.extend(x.to_vec());
            row.push(e);
            t.push_floats(&row);
        }
        out.table("trajectory", &t.with_units(&vec!["u"; 2 * dof + 2]));

        let liouville = liouville_volume_check(&sys, &simplex_cloud(&x0, 1e-7), self.liouville_t, self.dt, None)
            .ctx("liouville")?;
        let drag_ratio = liouville_volume_check(&sys, &simplex_cloud(&x0, 1e-5), self.liouville_t, self.dt, Some(self.drag))
            .ctx("drag")?;
        let lyapunov =
            lyapunov_estimate(&sys, &x0, 1e-8, self.lyapunov_t, self.dt, 100, 10.0, &mut stream(seed, 0)).ctx("lyapunov")?;
        let walk = walk_statistics(self.walk_steps, 0.5, self.walk_d, self.walks, seed).ctx("walk")?;

        out.summary(&ClassicalSummary {
            system: sys.name().to_string(),
            max_energy_drift: drift,
            liouville_ratio: liouville,
            drag_ratio,
            drag_expected: (-(dof as f64) * self.drag * self.liouville_t).exp(),
            lyapunov,
            walk_count_sigma: walk.count_sigma,
            walk_expected_sigma: (self.walk_steps as f64).sqrt() * self.walk_d / 2.0,
            walk_position_sigma: walk.position_sigma,
        });
        Ok(())
    }
}

impl Entropy {
    fn jitter(&self) -> collapse_core::Result<Jitter> {
        Jitter::new(self.kick_rate, self.kick_sigma)
    }
}

#[derive(Serialize)]
struct EntropySummary {
    fine_drift_off: f64,
    coarse_band_off: f64,
    increasing_fraction_on: f64,
    plateau_checkpoint_on: usize,
    replay_tv_off: f64,
    replay_tv_on: f64,
}

impl Experiment for Entropy {
    const NAME: &'static str = "entropy";

    fn check(&self, c: &mut Checks) {
        setup(c, self.system, &self.q, &self.p);
        c.positive("sigma", self.sigma);
        c.positive("half-width", self.half_width);
        c.positive("cell", self.cell);
        c.positive("dt", self.dt);
        c.positive("t-end", self.t_end);
        c.positive("plateau-tolerance", self.plateau_tolerance);
        c.at_least("members", self.members, MIN_ENSEMBLE as u64);
        c.at_least("checkpoints", self.checkpoints, 1);
        let n = steps(self.t_end, self.dt) as u64;
        c.require(self.checkpoints > 0 && n > 0 && n % self.checkpoints == 0, "checkpoints", || {
            format!("{n} steps do not split into {} equal intervals", self.checkpoints)
        });
        c.core("kick-rate", self.jitter());
    }

    fn run(&self, seed: u64, out: &mut Output) -> CliResult<()> {
        let mut c = Checks::default();
        let s = setup(&mut c, self.system, &self.q, &self.p);
        c.finish()?;
        let (sys, centre) = s.expect("checked");
        let cloud = gaussian_cloud(&centre, self.sigma, self.members as usize, seed).ctx("cloud")?;
        let grid = CoarseGrid::centred(2 * sys.dof(), self.half_width, self.cell).ctx("grid")?;
        let jitter = self.jitter().ctx("kick-rate")?;
        let off = EnsembleConfig {
            dt: self.dt,
            t_end: self.t_end,
            n_checkpoints: self.checkpoints as usize,
            jitter: None,
            seed: seed.wrapping_add(1),
        };
        let on = EnsembleConfig { jitter: Some(jitter), ..off.clone() };
        let without = ensemble_entropy_evolution(&sys, &cloud, &grid, &off).ctx("collapse-off")?;
        let with = ensemble_entropy_evolution(&sys, &cloud, &grid, &on).ctx("collapse-on")?;

        let mut t = Table::new(["t", "coarse_entropy_off", "fine_entropy_off", "coarse_entropy_on"]);
        for (a, b) in without.samples.iter().zip(&with.samples) {
            t.push_floats(&[a.t, a.coarse, a.fine.unwrap_or(f64::NAN), b.coarse]);
        }
        out.table("series", &t.with_units(&["u", "nat", "nat", "nat"]));

        let s0 = without.samples[0].coarse;
        let replay = |j: Option<Jitter>| replay_distance(&sys, &cloud, &grid, self.dt, self.t_end, j, seed.wrapping_add(2));
        out.summary(&EntropySummary {
            fine_drift_off: without.fine_drift().unwrap_or(f64::NAN),
            coarse_band_off: without.samples.iter().map(|x| (x.coarse - s0).abs()).fold(0.0, f64::max),
            increasing_fraction_on: with.increasing_fraction(self.plateau_tolerance),
            plateau_checkpoint_on: with.plateau_start(self.plateau_tolerance),
            replay_tv_off: replay(None).ctx("replay")?,
            replay_tv_on: replay(Some(jitter)).ctx("replay")?,
        });
        Ok(())
    }
}
