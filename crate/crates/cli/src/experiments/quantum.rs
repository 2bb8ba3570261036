use collapse_core::perturbation::{
    amplitude_table, first_order_amplitude, integrate_interaction_series, resonance_curve, resonance_peak, resonance_table,
    weak_coupling_holds, DiscreteSpectrum, HarmonicPerturbation,
};
use collapse_core::quantum::{Basis, HermitianOperator, StateVector};
use collapse_core::rng::stream;
use collapse_core::scheduler::{run_alternating, PoissonClock};
use collapse_core::table::{Cell, Table};
use collapse_core::Complex;
use serde::Serialize;

use super::Experiment;
use crate::output::Output;
use crate::params::{number_list, number_rows, Alternating, MeasurementBasis, Perturb};
use crate::report::{Checks, CliResult, Context};

impl Alternating {
    fn hamiltonian(&self) -> collapse_core::Result<HermitianOperator> {
        let h = 0.5 * self.detuning;
        HermitianOperator::from_real(2, &[h, self.coupling, self.coupling, -h])
    }

    fn initial_state(&self, checks: &mut Checks) -> Option<StateVector> {
        let amps = number_list(checks, "initial", &self.initial)?;
        if amps.len() != 2 {
            checks.push("initial", format!("need 2 amplitudes, got {}", amps.len()));
            return None;
        }
        checks.core("initial", StateVector::normalized(amps.iter().map(|&a| Complex::new(a, 0.0)).collect()))
    }
}

#[derive(Serialize)]
struct AlternatingSummary {
    events: usize,
    expected_events: f64,
    outcome_counts: [usize; 2],
    mean_info_change_nat: f64,
    final_populations: Vec<f64>,
}

impl Experiment for Alternating {
    const NAME: &'static str = "alternating";

    fn check(&self, c: &mut Checks) {
        c.require(self.coupling.is_finite(), "coupling", || "must be finite".into());
        c.require(self.detuning.is_finite(), "detuning", || "must be finite".into());
        c.core("rate", PoissonClock::new(self.rate));
        c.positive("t-end", self.t_end);
        c.positive("sample-dt", self.sample_dt);
        c.require(self.t_end / self.sample_dt <= 1e7, "sample-dt", || "more than 1e7 samples requested".into());
        self.initial_state(c);
    }

    fn run(&self, seed: u64, out: &mut Output) -> CliResult<()> {
        let mut c = Checks::default();
        let psi0 = self.initial_state(&mut c);
        c.finish()?;
        let psi0 = psi0.expect("checked");
        let h = self.hamiltonian().ctx("coupling")?;
        let basis = match self.basis {
            MeasurementBasis::Computational => Basis::computational(2),
            MeasurementBasis::Energy => Basis::eigenbasis(&h),
        };
        let clock = PoissonClock::new(self.rate).ctx("rate")?;
        let traj = run_alternating(&psi0, &h, &clock, &basis, self.t_end, self.sample_dt, &mut stream(seed, 0))
            .ctx("alternating")?;

        let dim = psi0.dim();
        let mut units = vec!["1/E"];
        units.extend(std::iter::repeat_n("1", 2 * dim + 2));
        out.table("trajectory", &traj.to_table().with_units(&units));

        let mut events = Table::new(["time", "chosen_index", "info_change"]);
        let mut counts = [0usize; 2];
        for e in &traj.events {
            counts[e.chosen_index.min(1)] += 1;
            events.push(vec![Cell::Float(e.time), Cell::from(e.chosen_index), Cell::Float(e.info_change)]);
        }
        out.table("events", &events.with_units(&["1/E", "1", "nat"]));

        let n = traj.events.len();
        let info: f64 = traj.events.iter().map(|e| e.info_change).sum();
        out.summary(&AlternatingSummary {
            events: n,
            expected_events: self.rate * self.t_end,
            outcome_counts: counts,
            mean_info_change_nat: if n > 0 { info / n as f64 } else { 0.0 },
            final_populations: traj.samples.last().map(|(_, s)| s.probabilities()).unwrap_or_default(),
        });
        Ok(())
    }
}

struct PerturbSetup {
    spectrum: DiscreteSpectrum,
    pert: HarmonicPerturbation,
}

impl Perturb {
    fn setup(&self, c: &mut Checks) -> Option<PerturbSetup> {
        let levels = number_list(c, "levels", &self.levels)?;
        let rows = number_rows(c, "coupling", &self.coupling)?;
        let n = levels.len();
        if rows.len() != n || rows[0].len() != n {
            c.push("coupling", format!("need a {n}x{n} matrix to match the levels"));
            return None;
        }
        c.require((self.initial as usize) < n, "initial", || format!("level index must be below {n}"));
        c.require((self.target as usize) < n, "target", || format!("level index must be below {n}"));
        let flat: Vec<f64> = rows.concat();
        let spectrum = c.core("levels", DiscreteSpectrum::new(levels))?;
        let coupling = c.core("coupling", HermitianOperator::from_real(n, &flat))?;
        let pert = c.core("omega", HarmonicPerturbation::new(coupling, self.omega))?;
        Some(PerturbSetup { spectrum, pert })
    }

    fn steps(&self) -> usize {
        (self.interval * self.steps_per_time).ceil() as usize
    }

    fn scan(&self) -> Vec<f64> {
        let n = self.omega_points as usize;
        (0..n).map(|k| self.omega_min + (self.omega_max - self.omega_min) * k as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Serialize)]
struct PerturbSummary {
    omega_fi: f64,
    peak_omega: f64,
    peak_probability: f64,
    first_order_probability: f64,
    exact_probability: f64,
    relative_difference: f64,
    weak_coupling: bool,
    final_norm: f64,
}

impl Experiment for Perturb {
    const NAME: &'static str = "perturb";

    fn check(&self, c: &mut Checks) {
        self.setup(c);
        c.positive("interval", self.interval);
        c.positive("steps-per-time", self.steps_per_time);
        c.at_least("omega-points", self.omega_points, 2);
        c.at_least("record-every", self.record_every, 1);
        c.require(self.omega_max > self.omega_min, "omega-max", || "must exceed omega-min".into());
        c.require(self.initial != self.target, "target", || "must differ from the initial level".into());
    }

    fn run(&self, _seed: u64, out: &mut Output) -> CliResult<()> {
        let mut c = Checks::default();
        let setup = self.setup(&mut c);
        c.finish()?;
        let PerturbSetup { spectrum, pert } = setup.expect("checked");
        let (i, f) = (self.initial as usize, self.target as usize);

        let curve = resonance_curve(&spectrum, &pert.coupling, i, f, self.interval, &self.scan()).ctx("resonance")?;
        out.table("resonance", &resonance_table(&curve).with_units(&["E", "1"]));
        let (peak_omega, peak_probability) = resonance_peak(&curve).unwrap_or((f64::NAN, f64::NAN));

        let series = integrate_interaction_series(&spectrum, &pert, i, self.interval, self.steps(), self.record_every as usize)
            .ctx("steps-per-time")?;
        let mut units = vec!["1/E"];
        units.extend(std::iter::repeat_n("1", spectrum.len() + 1));
        out.table("amplitudes", &amplitude_table(&series).with_units(&units));

        let last = &series.last().expect("at least one sample").amplitudes;
        let exact = last[f].norm_sqr();
        let first = first_order_amplitude(&spectrum, &pert, i, f, self.interval).ctx("first-order")?.norm_sqr();
        out.summary(&PerturbSummary {
            omega_fi: spectrum.bohr_frequency(i, f).ctx("levels")?,
            peak_omega,
            peak_probability,
            first_order_probability: first,
            exact_probability: exact,
            relative_difference: if exact > 0.0 { (first - exact).abs() / exact } else { f64::NAN },
            weak_coupling: weak_coupling_holds(&spectrum, &pert, i, f, self.interval).ctx("coupling")?,
            final_norm: last.iter().map(|a| a.norm_sqr()).sum(),
        });
        Ok(())
    }
}
