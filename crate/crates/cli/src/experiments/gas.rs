use collapse_core::gas::{init_uniform, run_to_equilibrium, total_variation};
use collapse_core::rng::stream;
use collapse_core::table::Table;
use serde::Serialize;

use super::Experiment;
use crate::output::Output;
use crate::params::Gas;
use crate::report::{Checks, CliResult, Context};

#[derive(Serialize)]
struct GasSummary {
    particles: u64,
    initial_total_mev: f64,
    final_total_mev: f64,
    mean_energy_mev: f64,
    relative_energy_drift: f64,
    final_kl_nat: f64,
    final_snapshot_tv: f64,
    kl_trace: Vec<(u64, f64)>,
    entropy_trace: Vec<(u64, f64)>,
}

impl Experiment for Gas {
    const NAME: &'static str = "gas";

    fn check(&self, c: &mut Checks) {
        c.at_least("n", self.n, 2);
        c.positive("e0", self.e0);
        c.at_least("bins", self.bins, 1);
        c.at_least("sample-every", self.sample_every, 1);
        c.require(self.n <= 100_000_000, "n", || "more than 1e8 particles".into());
    }

    fn run(&self, seed: u64, out: &mut Output) -> CliResult<()> {
        let ens = init_uniform(self.n as usize, self.e0, &mut stream(seed, 0)).ctx("n")?;
        let initial_total = ens.total();
        let bin_width = self.e0 / self.bins as f64;
        let run = run_to_equilibrium(ens, self.iters, self.sample_every, bin_width, &mut stream(seed, 1)).ctx("gas")?;
        run.ensemble.audit().ctx("conservation")?;

        out.table("histograms", &run.to_table().with_units(&["1", "meV", "1/meV"]));
        let kl = run.kl_trace().ctx("kl")?;
        let entropy = run.entropy_trace().ctx("entropy")?;
        let mut trace = Table::new(["iteration", "kl_divergence", "entropy"]);
        for (&(it, k), &(_, s)) in kl.iter().zip(&entropy) {
            trace.push(vec![it.into(), k.into(), s.into()]);
        }
        out.table("trace", &trace.with_units(&["1", "nat", "nat"]));

        let s = &run.snapshots;
        let final_snapshot_tv = match s.len() {
            0 | 1 => f64::NAN,
            n => total_variation(&s[n - 2].histogram, &s[n - 1].histogram).ctx("tv")?,
        };
        out.summary(&GasSummary {
            particles: self.n,
            initial_total_mev: initial_total,
            final_total_mev: run.ensemble.total(),
            mean_energy_mev: run.ensemble.mean(),
            relative_energy_drift: run.ensemble.conservation_drift(),
            final_kl_nat: kl.last().map_or(f64::NAN, |x| x.1),
            final_snapshot_tv,
            kl_trace: kl,
            entropy_trace: entropy,
        });
        Ok(())
    }
}
