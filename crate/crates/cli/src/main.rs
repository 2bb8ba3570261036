//! `collapse-lab`: runs the laboratory experiments and writes CSV/JSON
//! artifacts plus a run manifest.

mod config;
mod experiments;
mod output;
mod params;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use config::{ConfigFile, Format};
use experiments::Experiment;
use output::{Output, RunContext};
use params::*;
use report::{Checks, CliError, CliResult, Issue};

/// Default seed when neither the flag nor the config file sets one.
pub const DEFAULT_SEED: u64 = 1;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "COLLAPSE_LAB_OUT";

const DEFAULT_OUT: &str = "collapse-lab-output";

#[derive(Debug, Parser)]
#[command(name = "collapse-lab", version, about = "Objective-collapse laboratory experiments")]
struct Cli {
    /// Config file with run settings and per-experiment sections
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed [default: 1]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory [default: $COLLAPSE_LAB_OUT or ./collapse-lab-output]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Which artifacts to write [default: both]
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    #[command(flatten)]
    Run(ExperimentCmd),
    /// Check parameters and physical preconditions without running anything
    Validate {
        #[command(subcommand)]
        experiment: Option<ExperimentCmd>,
    },
}

#[derive(Debug, Subcommand)]
enum ExperimentCmd {
    /// Unitary evolution interrupted by Poisson-timed collapses
    #[command(allow_negative_numbers = true)]
    Alternating(AlternatingArgs),
    /// Pairwise energy exchange relaxing to the exponential law
    #[command(allow_negative_numbers = true)]
    Gas(GasArgs),
    /// Sequential absorption of a photon by a screen of particles
    #[command(allow_negative_numbers = true)]
    Screen(ScreenArgs),
    /// Double-slit impacts, coherent or with which-path collapse
    #[command(name = "doubleslit", allow_negative_numbers = true)]
    DoubleSlit(DoubleSlitArgs),
    /// Resonance scan and exact amplitudes for a driven spectrum
    #[command(allow_negative_numbers = true)]
    Perturb(PerturbArgs),
    /// Trajectory, phase-volume and Lyapunov diagnostics, random walk spread
    #[command(allow_negative_numbers = true)]
    Classical(ClassicalArgs),
    /// Ensemble entropy with collapse kicks off and on
    #[command(allow_negative_numbers = true)]
    Entropy(EntropyArgs),
    /// Entropies of a joint distribution
    #[command(allow_negative_numbers = true)]
    Info(InfoArgs),
    /// Horizon thermodynamics of a charged rotating hole
    #[command(name = "blackhole", allow_negative_numbers = true)]
    BlackHole(BlackHoleArgs),
    /// Radial null curves around a Schwarzschild hole
    #[command(allow_negative_numbers = true)]
    Geodesics(GeodesicsArgs),
}

/// Settings shared by every experiment after merging flags and file.
struct Settings {
    seed: u64,
    out: PathBuf,
    format: Format,
}

impl Settings {
    fn new(cli: &Cli, file: &ConfigFile) -> Self {
        let out = cli
            .out
            .clone()
            .or_else(|| file.out.clone())
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        Self {
            seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            out,
            format: cli.format.or(file.format).unwrap_or_default(),
        }
    }
}

fn resolve<P: Params>(flags: P, section: &Option<P>) -> P::Resolved
where
    P: Clone + Default,
{
    flags.overlay(section.clone().unwrap_or_default()).resolve()
}

fn issues<E: Experiment>(exp: &E) -> Vec<Issue> {
    let mut checks = Checks::default();
    exp.check(&mut checks);
    checks
        .issues
        .into_iter()
        .map(|mut i| {
            i.experiment = Some(E::NAME.to_string());
            i
        })
        .collect()
}

fn execute<E: Experiment>(exp: E, s: &Settings) -> CliResult<output::RunManifest> {
    let found = issues(&exp);
    if !found.is_empty() {
        return Err(CliError::validation(found));
    }
    let echo = serde_json::to_value(&exp).expect("parameters serialize");
    let ctx = RunContext::new(E::NAME, s.seed, s.format, s.out.clone(), echo);
    let mut out = Output::new(E::NAME, s.format);
    exp.run(s.seed, &mut out).map_err(|e| e.in_experiment(E::NAME))?;
    ctx.finish(out)
}

/// Applies `$body` to the resolved parameters of whichever experiment `cmd` names.
macro_rules! with_experiment {
    ($cmd:expr, $file:expr, |$exp:ident| $body:expr) => {
        match $cmd {
            ExperimentCmd::Alternating(a) => { let $exp = resolve(a, &$file.alternating); $body }
            ExperimentCmd::Gas(a) => { let $exp = resolve(a, &$file.gas); $body }
            ExperimentCmd::Screen(a) => { let $exp = resolve(a, &$file.screen); $body }
            ExperimentCmd::DoubleSlit(a) => { let $exp = resolve(a, &$file.doubleslit); $body }
            ExperimentCmd::Perturb(a) => { let $exp = resolve(a, &$file.perturb); $body }
            ExperimentCmd::Classical(a) => { let $exp = resolve(a, &$file.classical); $body }
            ExperimentCmd::Entropy(a) => { let $exp = resolve(a, &$file.entropy); $body }
            ExperimentCmd::Info(a) => { let $exp = resolve(a, &$file.info); $body }
            ExperimentCmd::BlackHole(a) => { let $exp = resolve(a, &$file.blackhole); $body }
            ExperimentCmd::Geodesics(a) => { let $exp = resolve(a, &$file.geodesics); $body }
        }
    };
}

/// Issues for every section present in the config file.
fn validate_file(file: &ConfigFile) -> Vec<Issue> {
    fn section<P: Params + Clone>(p: &Option<P>) -> Vec<Issue> {
        p.clone().map(|p| issues(&p.resolve())).unwrap_or_default()
    }
    [
        section(&file.alternating),
        section(&file.gas),
        section(&file.screen),
        section(&file.doubleslit),
        section(&file.perturb),
        section(&file.classical),
        section(&file.entropy),
        section(&file.info),
        section(&file.blackhole),
        section(&file.geodesics),
    ]
    .concat()
}

#[derive(Serialize)]
struct ValidationReport {
    valid: bool,
    issues: Vec<Issue>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(CliError::usage(e.to_string().trim_end())),
    };
    let file = match cli.config.as_deref().map(ConfigFile::load).transpose() {
        Ok(f) => f.unwrap_or_default(),
        Err(e) => return fail(e),
    };
    let settings = Settings::new(&cli, &file);

    match cli.command {
        Command::Run(cmd) => match with_experiment!(cmd, file, |exp| execute(exp, &settings)) {
            Ok(manifest) => {
                println!("{}", serde_json::to_string_pretty(&manifest).expect("manifest serializes"));
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Validate { experiment } => {
            let found = match experiment {
                Some(cmd) => with_experiment!(cmd, file, |exp| issues(&exp)),
                None => validate_file(&file),
            };
            let report = ValidationReport { valid: found.is_empty(), issues: found };
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if report.valid {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(report::EXIT_VALIDATION as u8)
            }
        }
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code as u8)
}
