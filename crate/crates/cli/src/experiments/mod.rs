use serde::Serialize;

use crate::output::Output;
use crate::report::{Checks, CliResult};

mod classical;
mod gas;
mod horizon;
mod info;
mod quantum;
mod screen;

/// A runnable experiment with fully resolved parameters.
pub trait Experiment: Serialize {
    const NAME: &'static str;

    /// Schema and physics preconditions, all reported together.
    fn check(&self, checks: &mut Checks);

    fn run(&self, seed: u64, out: &mut Output) -> CliResult<()>;
}
