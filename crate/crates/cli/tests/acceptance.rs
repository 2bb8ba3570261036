//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use collapse_core::blackhole::*;
use collapse_core::classical::*;
use collapse_core::gas::*;
use collapse_core::info::*;
use collapse_core::perturbation::*;
use collapse_core::quantum::*;
use collapse_core::rng::{normal, seeded, stream};
use collapse_core::scheduler::grw_rate;
use collapse_core::screen::*;
use collapse_core::Complex;
use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::One;
use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

// Tolerances.
const GAS_KL: f64 = 0.01;
const GAS_DRIFT: f64 = 1e-9;
const EXACT: f64 = 1e-12;
const SCREEN_TV: f64 = 0.01;
const VISIBILITY: f64 = 0.7;
const WHICH_PATH_TV: f64 = 0.02;
const CHI2_ALPHA: f64 = 0.001;
const TRIPLET_TOL: f64 = 0.01;
const UNITARY_TOL: f64 = 1e-9;
const OFF_DIAGONAL_MIN: f64 = 1e-6;
const FIRST_ORDER_REL: f64 = 0.1;
const WEAK: f64 = 0.05;
const NORM_TOL: f64 = 1e-6;
const LIOUVILLE_TOL: f64 = 1e-4;
const DRAG_TOL: f64 = 1e-3;
const LYAPUNOV_TOL: f64 = 0.01;
const EHRENFEST_TOL: f64 = 1e-4;
const WALK_REL: f64 = 0.03;
const FINE_DRIFT: f64 = 1e-3;
const INCREASING: f64 = 0.9;
const PLATEAU_TOL: f64 = 0.02;
const REPLAY_RESTORED: f64 = 1e-3;
const REPLAY_BROKEN: f64 = 0.5;
const SMARR_REL: f64 = 1e-6;
const INFO_TOL: f64 = 1e-10;

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("GRW rate arithmetic", grw),
        ("gas thermalization", gas),
        ("sequence invariance", sequence_invariance),
        ("double slit", double_slit),
        ("Born statistics", born),
        ("unitary invariants", unitary_invariants),
        ("perturbation theory", perturbation),
        ("classical limit", classical_limit),
        ("entropy dichotomy", entropy_dichotomy),
        ("black-hole suite", black_holes),
        ("information calculus", information),
        ("reproducibility", reproducibility),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let clock = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = clock.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2}: PASS  {name} ({secs:.1}s): {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name} ({secs:.1}s): {why}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn grw() -> Outcome {
    let ten = BigRational::from_integer(10.into());
    let micro = BigRational::one() / num_traits::pow(ten.clone(), 16);
    let n = num_traits::pow(ten.clone(), 23);
    let rate = grw_rate(n, micro).map_err(|e| e.to_string())?;
    ensure!(rate == num_traits::pow(ten, 7), "got {rate}");
    Ok(format!("1e23 x 1e-16 = {rate} exactly"))
}

/// `exp(-a/m) - exp(-b/m)` per bin, the last bin taking the tail.
fn exponential_bins(n_bins: usize, width: f64, mean: f64) -> Vec<f64> {
    (0..n_bins)
        .map(|k| {
            let lo = (-(k as f64) * width / mean).exp();
            let hi = if k + 1 == n_bins { 0.0 } else { (-((k + 1) as f64) * width / mean).exp() };
            lo - hi
        })
        .collect()
}

fn ks_distance(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn gas() -> Outcome {
    let (n, e0, steps): (usize, f64, u64) = (100_000, 100.0, 5_000_000);
    let ens = init_uniform(n, e0, &mut seeded(7)).map_err(|e| e.to_string())?;
    let mean = ens.mean();
    let total = ens.total();
    ensure!((mean - 50.0).abs() < 0.5, "initial mean {mean}");
    let run = run_to_equilibrium(ens, steps, 250_000, e0 / 50.0, &mut seeded(8)).map_err(|e| e.to_string())?;
    let drift = (run.ensemble.total() - total).abs() / total;
    ensure!(drift < GAS_DRIFT, "energy drift {drift}");
    ensure!(run.ensemble.conservation_drift() < GAS_DRIFT, "ledger drift {}", run.ensemble.conservation_drift());
    let h = run.final_histogram();
    let q = exponential_bins(h.len(), h.bin_width, mean);
    let kl: f64 = h.probabilities().iter().zip(&q).filter(|(p, _)| **p > 0.0).map(|(p, q)| p * (p / q).ln()).sum();
    let lib = kl_from_boltzmann(h, mean).map_err(|e| e.to_string())?;
    ensure!((kl - lib).abs() < EXACT, "library KL {lib} vs oracle {kl}");
    ensure!(kl < GAS_KL, "KL {kl}");
    let mut sample = run.ensemble.energies().to_vec();
    let d = ks_distance(&mut sample, |e| 1.0 - (-e / mean).exp());
    let critical = 1.949 / (n as f64).sqrt();
    ensure!(d < critical, "KS distance {d} above {critical}");
    Ok(format!("mean {mean:.4} meV, KL {kl:.2e}, drift {drift:.1e}, KS {d:.4} < {critical:.4}"))
}

/// Every set partition of `1..=n`.
fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn grow(k: usize, n: usize, acc: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if k > n {
            out.push(acc.clone());
            return;
        }
        for g in 0..acc.len() {
            acc[g].push(k);
            grow(k + 1, n, acc, out);
            acc[g].pop();
        }
        acc.push(vec![k]);
        grow(k + 1, n, acc, out);
        acc.pop();
    }
    let mut out = Vec::new();
    grow(1, n, &mut Vec::new(), &mut out);
    out
}

/// Outcome probabilities from walking every rejection path explicitly.
fn enumerate_paths(probs: &[f64], groups: &[Vec<usize>]) -> Vec<f64> {
    fn walk(current: Vec<f64>, groups: &[Vec<usize>], path: f64, out: &mut [f64]) {
        let Some((group, rest)) = groups.split_first() else {
            out[0] += path * current[0];
            return;
        };
        let in_group: f64 = group.iter().map(|&k| current[k]).sum();
        for &k in group {
            out[k] += path * current[k];
        }
        let reject = 1.0 - in_group;
        if reject <= 0.0 {
            return;
        }
        let mut next = current;
        for &k in group {
            next[k] = 0.0;
        }
        for p in &mut next {
            *p /= reject;
        }
        walk(next, rest, path * reject, out);
    }
    let mut out = vec![0.0; probs.len()];
    walk(probs.to_vec(), groups, 1.0, &mut out);
    out
}

fn random_amps<R: Rng>(n: usize, vacuum: bool, zeros: usize, rng: &mut R) -> AbsorptionAmplitudes {
    let mut parts: Vec<Complex<f64>> = (0..n).map(|_| c(normal(rng), normal(rng))).collect();
    for k in 0..zeros.min(n - 1) {
        parts[(k * 5) % n] = c(0.0, 0.0);
    }
    let vac = vacuum.then(|| c(normal(rng), normal(rng)));
    AbsorptionAmplitudes::normalized(vac, parts).unwrap()
}

fn all_orders(groups: &[Vec<usize>]) -> Vec<Vec<Vec<usize>>> {
    if groups.len() <= 1 {
        return vec![groups.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..groups.len() {
        let mut rest = groups.to_vec();
        let head = rest.remove(i);
        for mut tail in all_orders(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

fn sequence_invariance() -> Outcome {
    let mut rng = seeded(71);
    let mut cases = 0u64;
    let mut worst = 0.0_f64;
    for n in 1..=6 {
        for vacuum in [false, true] {
            for zeros in [0, 1, 2] {
                let amps = random_amps(n, vacuum, zeros, &mut rng);
                let born = amps.probabilities();
                for partition in set_partitions(n) {
                    for groups in all_orders(&partition) {
                        let paths = enumerate_paths(born, &groups);
                        let part = ScreenPartition::new(groups, n).map_err(|e| e.to_string())?;
                        let lib = sequential_outcome_distribution(&amps, &part).map_err(|e| e.to_string())?;
                        for ((b, l), p) in born.iter().zip(&lib).zip(&paths) {
                            worst = worst.max((b - l).abs()).max((b - p).abs());
                        }
                        cases += 1;
                    }
                }
            }
        }
    }
    ensure!(worst < EXACT, "largest deviation from Born weights {worst:e}");

    // Monte Carlo: a Gaussian spot over 100 particles.
    let n = 100;
    let spot: Vec<Complex<f64>> = (0..n)
        .map(|k| {
            let z = (k as f64 - 49.5) / 5.0;
            c((-0.25 * z * z).exp(), 0.0)
        })
        .collect();
    let amps = AbsorptionAmplitudes::normalized(None, spot).map_err(|e| e.to_string())?;
    let mut tvs = Vec::new();
    for (i, size) in [1usize, 10, 25, 100].into_iter().enumerate() {
        let part = ScreenPartition::contiguous(n, size).map_err(|e| e.to_string())?;
        let mut rng = stream(72, i as u64);
        let mut counts = vec![0u64; amps.probabilities().len()];
        for _ in 0..100_000 {
            counts[sequential_absorption(&amps, &part, &mut rng).map_err(|e| e.to_string())?] += 1;
        }
        let tv = 0.5 * counts.iter().zip(amps.probabilities()).map(|(&k, &p)| (k as f64 / 1e5 - p).abs()).sum::<f64>();
        ensure!(tv < SCREEN_TV, "group size {size}: TV {tv}");
        tvs.push(tv);
    }
    Ok(format!("{cases} ordered partitions, worst {worst:.1e}; N=100 TV {tvs:.4?} for groups 1/10/25/100"))
}

fn double_slit() -> Outcome {
    const PHOTONS: u64 = 100_000;
    let run = |cfg: &DoubleSlitConfig, seed: u64| run_double_slit::<f64, _>(cfg, PHOTONS, &mut seeded(seed)).unwrap();
    let cfg = DoubleSlitConfig::default();
    let coherent = run(&cfg, 1);
    let v = coherent.central_visibility(8).map_err(|e| e.to_string())?;
    ensure!(v > VISIBILITY, "coherent visibility {v}");
    let marked = run(&DoubleSlitConfig { which_path: true, ..cfg.clone() }, 2);
    let mut sum = run(&DoubleSlitConfig { open: OpenSlits::Left, ..cfg.clone() }, 3).histogram;
    sum.merge(&run(&DoubleSlitConfig { open: OpenSlits::Right, ..cfg.clone() }, 4).histogram).map_err(|e| e.to_string())?;
    let tv = marked.histogram.total_variation(&sum, 16).map_err(|e| e.to_string())?;
    ensure!(tv < WHICH_PATH_TV, "which-path vs single-slit sum TV {tv}");
    let vm = marked.central_visibility(8).map_err(|e| e.to_string())?;
    Ok(format!("coherent visibility {v:.3}, which-path visibility {vm:.3}, TV to single-slit sum {tv:.4}"))
}

fn chi_squared_p(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    1.0 - ChiSquared::new((probs.len() - 1) as f64).unwrap().cdf(stat)
}

fn random_state<R: Rng>(dim: usize, rng: &mut R) -> StateVector {
    StateVector::normalized((0..dim).map(|_| c(normal(rng), normal(rng))).collect()).unwrap()
}

fn random_hermitian<R: Rng>(dim: usize, rng: &mut R) -> HermitianOperator {
    let m = DMatrix::from_fn(dim, dim, |_, _| c(normal(rng), normal(rng)));
    HermitianOperator::new((&m + m.adjoint()) * c(0.5, 0.0)).unwrap()
}

fn random_density<R: Rng>(dim: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let w: Vec<f64> = (0..rank).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = w.iter().sum();
    let w: Vec<f64> = w.iter().map(|x| x / total).collect();
    let states: Vec<StateVector> = (0..rank).map(|_| random_state(dim, rng)).collect();
    DensityMatrix::from_ensemble(&w, &states).unwrap()
}

fn born() -> Outcome {
    let mut ps = Vec::new();
    for trial in 0..5u64 {
        let mut rng = stream(900, trial);
        let psi = random_state(8, &mut rng);
        let basis = Basis::computational(8);
        let probs = collapse_probabilities(&psi, &basis).map_err(|e| e.to_string())?;
        let mut counts = vec![0u64; 8];
        for _ in 0..100_000 {
            counts[collapse(&psi, &basis, &mut rng).map_err(|e| e.to_string())?.0] += 1;
        }
        let p = chi_squared_p(&counts, &probs);
        ensure!(p > CHI2_ALPHA, "state {trial}: p = {p}");
        ps.push(p);
    }
    let psi = StateVector::from_real(&[0.5, 0.5, 0.5, 0.5]).unwrap();
    let triplet = StateVector::from_real(&[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]).unwrap();
    let singlet = StateVector::from_real(&[0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0]).unwrap();
    let basis = Basis::new(vec![StateVector::basis(4, 0).unwrap(), triplet, StateVector::basis(4, 3).unwrap(), singlet])
        .map_err(|e| e.to_string())?;
    let mut rng = seeded(8);
    let mut counts = [0u64; 4];
    for _ in 0..100_000 {
        counts[collapse(&psi, &basis, &mut rng).map_err(|e| e.to_string())?.0] += 1;
    }
    let f: Vec<f64> = counts.iter().map(|&n| n as f64 / 1e5).collect();
    ensure!(
        (f[1] - 0.5).abs() < TRIPLET_TOL && (f[0] - 0.25).abs() < TRIPLET_TOL && (f[2] - 0.25).abs() < TRIPLET_TOL && counts[3] == 0,
        "triplet split {f:?}"
    );
    Ok(format!("chi-squared p {ps:.3?}; triplet split {:.4}/{:.4}/{:.4}", f[1], f[0], f[2]))
}

fn unitary_invariants() -> Outcome {
    let mut rng = seeded(81);
    let (mut trace_err, mut entropy_err) = (0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let dim = rng.random_range(2..7);
        let rank = rng.random_range(1..=dim);
        let rho = random_density(dim, rank, &mut rng);
        let h = random_hermitian(dim, &mut rng);
        let dt = rng.random_range(-10.0..10.0);
        let out = propagate_density(&rho, &h, dt).map_err(|e| e.to_string())?;
        trace_err = trace_err.max((out.trace() - 1.0).abs());
        entropy_err = entropy_err.max((von_neumann_entropy(&out) - von_neumann_entropy(&rho)).abs());
    }
    ensure!(trace_err < UNITARY_TOL && entropy_err < UNITARY_TOL, "trace error {trace_err:e}, entropy error {entropy_err:e}");

    // Dephasing: generic states plus near-diagonal ones in the dephasing basis.
    let (mut tested, mut skipped) = (0u32, 0u32);
    let mut smallest_gain = f64::INFINITY;
    for k in 0..1000 {
        let dim = rng.random_range(2..6);
        let basis = if k % 2 == 0 { Basis::computational(dim) } else { Basis::eigenbasis(&random_hermitian(dim, &mut rng)) };
        let rho = if k % 4 < 2 {
            random_density(dim, rng.random_range(1..=dim), &mut rng)
        } else {
            let diag = dephase(&random_density(dim, dim, &mut rng), &basis).unwrap();
            let t = 10f64.powf(rng.random_range(-4.0..-1.0));
            let pure = random_state(dim, &mut rng).to_density();
            DensityMatrix::new(diag.matrix() * c(1.0 - t, 0.0) + pure.matrix() * c(t, 0.0)).unwrap()
        };
        if off_diagonal_mass(&rho, &basis).unwrap() <= OFF_DIAGONAL_MIN {
            skipped += 1;
            continue;
        }
        let gain = von_neumann_entropy(&dephase(&rho, &basis).unwrap()) - von_neumann_entropy(&rho);
        ensure!(gain > 0.0, "dephasing did not raise the entropy: gain {gain:e}");
        smallest_gain = smallest_gain.min(gain);
        tested += 1;
    }
    Ok(format!(
        "trace error {trace_err:.1e}, entropy error {entropy_err:.1e}; dephasing raised S in {tested} states (min gain {smallest_gain:.1e}, {skipped} below the mass threshold)"
    ))
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn perturbation() -> Outcome {
    let spectrum = DiscreteSpectrum::new(vec![-0.4, 0.1, 1.1]).unwrap();
    let w = HermitianOperator::from_real(3, &[0.0, 0.01, 0.003, 0.01, 0.0, 0.02, 0.003, 0.02, 0.0]).unwrap();
    let step = 0.001;
    let omegas = grid(0.0, 2.0, 2001);
    let mirrored: Vec<f64> = omegas.iter().map(|w| -w).collect();
    let mut worst_peak = 0.0_f64;
    for (i, f) in [(0, 1), (1, 2), (2, 0)] {
        let curve = resonance_curve(&spectrum, &w, i, f, 400.0, &omegas).map_err(|e| e.to_string())?;
        let omega_fi = spectrum.bohr_frequency(i, f).unwrap().abs();
        let (peak, _) = resonance_peak(&curve).unwrap();
        ensure!((peak - omega_fi).abs() <= step + 1e-12, "{i}->{f}: peak {peak} vs {omega_fi}");
        worst_peak = worst_peak.max((peak - omega_fi).abs());
        let back = resonance_curve(&spectrum, &w, i, f, 400.0, &mirrored).map_err(|e| e.to_string())?;
        ensure!(curve.iter().zip(&back).all(|(a, b)| a.1 == b.1), "{i}->{f}: curve not symmetric under omega -> -omega");
    }

    let mut rng = seeded(82);
    let (mut compared, mut worst_rel, mut worst_norm) = (0u32, 0.0_f64, 0.0_f64);
    for _ in 0..300 {
        let coupling = rng.random_range(0.0005..0.02);
        let detune: f64 = rng.random_range(-1.0..1.0);
        let dt: f64 = rng.random_range(5.0..60.0);
        let omega = 1.0 + detune * PI / (2.0 * dt);
        let spectrum = DiscreteSpectrum::new(vec![0.0, 1.0]).unwrap();
        let z = c(0.0, 0.0);
        let op = HermitianOperator::new(DMatrix::from_row_slice(2, 2, &[z, c(coupling, 0.0), c(coupling, 0.0), z])).unwrap();
        let drive = HarmonicPerturbation::new(op, omega).unwrap();
        let exact = integrate_interaction_picture(&spectrum, &drive, 0, dt, (dt * 200.0) as usize).map_err(|e| e.to_string())?;
        let norm: f64 = exact.iter().map(|a| a.norm_sqr()).sum();
        worst_norm = worst_norm.max((norm - 1.0).abs());
        let first = first_order_amplitude(&spectrum, &drive, 0, 1, dt).unwrap().norm_sqr();
        if first < WEAK {
            let e = exact[1].norm_sqr();
            let rel = (first - e).abs() / e;
            ensure!(rel <= FIRST_ORDER_REL, "first order {first} vs exact {e} at dt {dt}, omega {omega}");
            worst_rel = worst_rel.max(rel);
            compared += 1;
        }
    }
    ensure!(worst_norm < NORM_TOL, "norm drift {worst_norm:e}");
    Ok(format!(
        "peaks within {worst_peak:.0e} of |omega_fi|, mirror exact; {compared} weak cases, worst relative gap {worst_rel:.3}; norm drift {worst_norm:.1e}"
    ))
}

fn pt(q: f64, p: f64) -> PhaseSpacePoint {
    PhaseSpacePoint::new(vec![q], vec![p]).unwrap()
}

fn hh_point(y: f64) -> PhaseSpacePoint {
    let v = 0.5 * y * y - y * y * y / 3.0;
    PhaseSpacePoint::new(vec![0.0, y], vec![(2.0 * (0.125 - v)).sqrt(), 0.0]).unwrap()
}

fn classical_limit() -> Outcome {
    let systems = [
        (HamiltonianSystem::harmonic(1.3).unwrap(), pt(0.7, -0.2)),
        (HamiltonianSystem::pendulum().unwrap(), pt(1.0, 0.5)),
        (HamiltonianSystem::quartic().unwrap(), pt(1.1, 0.0)),
        (HamiltonianSystem::henon_heiles().unwrap(), hh_point(-0.1)),
    ];
    let mut worst_liouville = 0.0_f64;
    for (sys, x0) in &systems {
        let r = liouville_volume_check(sys, &simplex_cloud(x0, 1e-7), 10.0, 0.005, None).map_err(|e| e.to_string())?;
        ensure!((r - 1.0).abs() < LIOUVILLE_TOL, "{}: volume ratio {r}", sys.name());
        worst_liouville = worst_liouville.max((r - 1.0).abs());
    }
    let harmonic = HamiltonianSystem::harmonic(1.0).unwrap();
    let (gamma, t) = (0.1, 10.0);
    let drag = liouville_volume_check(&harmonic, &simplex_cloud(&pt(0.2, 0.9), 1e-5), t, 0.001, Some(gamma)).map_err(|e| e.to_string())?;
    ensure!((drag - (-gamma * t).exp()).abs() < DRAG_TOL, "drag ratio {drag}");

    let lh = lyapunov_estimate(&harmonic, &pt(1.0, 0.0), 1e-8, 2000.0, 0.01, 100, 10.0, &mut seeded(1)).map_err(|e| e.to_string())?;
    ensure!(lh.abs() < LYAPUNOV_TOL, "harmonic Lyapunov {lh}");
    let hh = HamiltonianSystem::henon_heiles().unwrap();
    let lc = lyapunov_estimate(&hh, &hh_point(-0.1), 1e-8, 2000.0, 0.01, 100, 10.0, &mut seeded(0)).map_err(|e| e.to_string())?;
    ensure!(lc > 0.0, "Henon-Heiles Lyapunov {lc}");

    let line = QuantumLine::new(1024, 0.04, 1.0, |x: f64| 0.5 * x * x).unwrap();
    let pk = GaussianPacket::new(1.5, 0.5, 0.6, 1.1).unwrap();
    let mut worst_ehrenfest = 0.0_f64;
    for s in ehrenfest_track(&line, &pk, 0.005, 2000, 100).map_err(|e| e.to_string())? {
        let (q, p) = (1.5 * s.t.cos() + 0.5 * s.t.sin(), 0.5 * s.t.cos() - 1.5 * s.t.sin());
        worst_ehrenfest = worst_ehrenfest.max((s.mean_q - q).abs()).max((s.mean_p - p).abs());
    }
    let line = QuantumLine::new(1024, 0.04, 1.0, |x: f64| 0.3 * x).unwrap();
    let pk = GaussianPacket::coherent(2.0, 0.0, 0.8).unwrap();
    for s in ehrenfest_track(&line, &pk, 0.01, 500, 50).map_err(|e| e.to_string())? {
        let (q, p) = (2.0 - 0.15 * s.t * s.t, -0.3 * s.t);
        worst_ehrenfest = worst_ehrenfest.max((s.mean_q - q).abs()).max((s.mean_p - p).abs());
    }
    ensure!(worst_ehrenfest < EHRENFEST_TOL, "Ehrenfest gap {worst_ehrenfest:e}");

    let (n, d) = (400u64, 1.0);
    let walk = walk_statistics(n, 0.5, d, 100_000, 17).map_err(|e| e.to_string())?;
    let expected = (n as f64).sqrt() * d / 2.0;
    ensure!((walk.count_sigma / expected - 1.0).abs() < WALK_REL, "walk sigma {} vs {expected}", walk.count_sigma);
    Ok(format!(
        "Liouville within {worst_liouville:.1e}, drag {drag:.5} vs {:.5}, Lyapunov {lh:.1e} / {lc:.4}, Ehrenfest {worst_ehrenfest:.1e}, walk sigma {:.3} vs {expected}",
        (-gamma * t).exp(),
        walk.count_sigma
    ))
}

fn entropy_dichotomy() -> Outcome {
    let sys = HamiltonianSystem::harmonic(1.0).unwrap();
    let cloud = gaussian_cloud(&pt(1.0, 0.0), 0.1, 10_000, 11).map_err(|e| e.to_string())?;
    let grid = CoarseGrid::centred(2, 3.0, 0.05).map_err(|e| e.to_string())?;
    let off = EnsembleConfig { dt: 0.01, t_end: 20.0, n_checkpoints: 10, jitter: None, seed: 3 };
    let s_off = ensemble_entropy_evolution(&sys, &cloud, &grid, &off).map_err(|e| e.to_string())?;
    let drift = s_off.fine_drift().ok_or("no fine-grained accounting without collapse")?;
    ensure!(drift < FINE_DRIFT, "fine-grained drift {drift}");
    let on = EnsembleConfig { jitter: Some(Jitter::new(1.0, 0.05).unwrap()), ..off };
    let s_on = ensemble_entropy_evolution(&sys, &cloud, &grid, &on).map_err(|e| e.to_string())?;
    let frac = s_on.increasing_fraction(PLATEAU_TOL);
    ensure!(frac >= INCREASING, "entropy rose over {frac} of checkpoints");

    let pendulum = HamiltonianSystem::pendulum().unwrap();
    let cloud = gaussian_cloud(&pt(1.0, 0.0), 0.1, 10_000, 21).map_err(|e| e.to_string())?;
    let back_off = replay_distance(&pendulum, &cloud, &grid, 0.01, 20.0, None, 4).map_err(|e| e.to_string())?;
    let back_on = replay_distance(&pendulum, &cloud, &grid, 0.01, 20.0, Some(Jitter::new(1.0, 0.05).unwrap()), 4).map_err(|e| e.to_string())?;
    ensure!(back_off < REPLAY_RESTORED, "replay without collapse left TV {back_off}");
    ensure!(back_on > REPLAY_BROKEN, "replay with collapse returned to TV {back_on}");
    Ok(format!("fine drift {drift:.1e}; increasing over {frac:.2} of checkpoints; replay TV {back_off:.1e} off vs {back_on:.3} on"))
}

fn random_hole<R: Rng>(rng: &mut R, fill: f64) -> BlackHoleParams {
    let m = rng.random_range(0.1..5.0);
    let r = fill * m * rng.random::<f64>().sqrt();
    let phi = rng.random_range(-PI..PI);
    BlackHoleParams::new(m, r * phi.cos(), r * phi.sin()).unwrap()
}

/// Mass as a function of area, angular momentum and charge.
fn mass_of(area: f64, l: f64, q: f64) -> f64 {
    (area / (16.0 * PI) + 4.0 * PI * l * l / area + q * q / 2.0 + PI * q.powi(4) / area).sqrt()
}

fn black_holes() -> Outcome {
    let h = hawking_thermo(&BlackHoleParams::schwarzschild(1.0).unwrap()).map_err(|e| e.to_string())?;
    for (name, got, want) in [
        ("r_+", h.r_plus, 2.0),
        ("A", h.area, 16.0 * PI),
        ("M_irr", h.irreducible_mass, 1.0),
        ("S", h.entropy, 4.0 * PI),
        ("T_H", h.temperature, 1.0 / (8.0 * PI)),
    ] {
        ensure!((got - want).abs() < EXACT, "Schwarzschild {name} = {got}, want {want}");
    }
    let kerr = BlackHoleParams::new(1.0, 0.0, 1.0).unwrap();
    let mirr = irreducible_mass(&kerr).map_err(|e| e.to_string())?;
    ensure!((mirr - FRAC_1_SQRT_2).abs() < EXACT, "extremal Kerr M_irr {mirr}");

    let mut rng = seeded(62);
    let mut worst_smarr = 0.0_f64;
    for _ in 0..1000 {
        let p = random_hole(&mut rng, 0.9);
        let s = smarr_coefficients(&p).map_err(|e| e.to_string())?;
        let a = horizon_area(&p).unwrap();
        let (l, q, m) = (p.angular_momentum(), p.charge, p.mass);
        let e = 1e-5;
        let fd = [
            (mass_of(a * (1.0 + e), l, q) - mass_of(a * (1.0 - e), l, q)) / (2.0 * e * a),
            (mass_of(a, l + e * m * m, q) - mass_of(a, l - e * m * m, q)) / (2.0 * e * m * m),
            (mass_of(a, l, q + e * m) - mass_of(a, l, q - e * m)) / (2.0 * e * m),
        ];
        for (closed, fd) in [s.tension, s.omega, s.phi].into_iter().zip(fd) {
            let rel = (closed - fd).abs() / closed.abs().max(1e-3 / m);
            ensure!(rel < SMARR_REL, "{p:?}: coefficient {closed} vs finite difference {fd}");
            worst_smarr = worst_smarr.max(rel);
        }
    }

    let mut rng = seeded(65);
    let mut merges = 0;
    while merges < 1000 {
        let n = rng.random_range(1..4);
        let parts: Vec<BlackHoleParams> = (0..n).map(|_| random_hole(&mut rng, 1.0)).collect();
        let m: f64 = parts.iter().map(|p| p.mass).sum();
        let q: f64 = parts.iter().map(|p| p.charge).sum();
        let l: f64 = parts.iter().map(|p| p.angular_momentum()).sum();
        let Ok(merged) = BlackHoleParams::from_angular_momentum(m, q, l) else { continue };
        if horizons(&merged).is_err() {
            continue;
        }
        ensure!(area_theorem_check(&parts, &merged).map_err(|e| e.to_string())?, "area theorem violated: {parts:?} -> {merged:?}");
        merges += 1;
    }

    let mut rng = seeded(63);
    let mut decreases = 0;
    for _ in 0..1000 {
        let (a, b) = (random_hole(&mut rng, 1.0), random_hole(&mut rng, 1.0));
        let (ma, mb) = (irreducible_mass(&a).unwrap(), irreducible_mass(&b).unwrap());
        if mb < ma * (1.0 - 1e-10) {
            let class = classify_transformation(&a, &b).map_err(|e| e.to_string())?;
            ensure!(class == Transformation::Forbidden, "{a:?} -> {b:?} lowers M_irr but is {class:?}");
            decreases += 1;
        }
    }
    Ok(format!(
        "Schwarzschild and extremal Kerr exact; Smarr worst relative gap {worst_smarr:.1e}; {merges} mergers; {decreases} M_irr decreases all forbidden"
    ))
}

fn random_probs<R: Rng>(n: usize, zeros: usize, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    for k in 0..zeros.min(n - 1) {
        w[k * 3 % n] = 0.0;
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

fn information() -> Outcome {
    let mut rng = seeded(53);
    for _ in 0..500 {
        let n = rng.random_range(1..40);
        let p = random_probs(n, n / 5, &mut rng);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let (before, after) = transform_conservation_check(&p, &perm).map_err(|e| e.to_string())?;
        ensure!(before == after, "bijection changed entropy {before} -> {after}");
    }

    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let (nx, ny) = (rng.random_range(1..7), rng.random_range(1..7));
        let flat = random_probs(nx * ny, rng.random_range(0..nx * ny), &mut rng);
        let rows: Vec<Vec<f64>> = flat.chunks(ny).map(<[f64]>::to_vec).collect();
        let e = entropies(&JointDistribution::from_rows(&rows).map_err(|e| e.to_string())?);
        // Independent sum straight from the table.
        let px: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
        let py: Vec<f64> = (0..ny).map(|y| rows.iter().map(|r| r[y]).sum()).collect();
        let h = |v: &[f64]| -> f64 { v.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum() };
        let h_xy = h(&flat);
        let mut mutual = 0.0;
        for (x, row) in rows.iter().enumerate() {
            for (y, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    mutual += p * (p / (px[x] * py[y])).ln();
                }
            }
        }
        worst = worst
            .max((e.h_xy - (e.h_x + e.h_y - e.mutual)).abs())
            .max((e.h_xy - h_xy).abs())
            .max((e.mutual - mutual.max(0.0)).abs());
    }
    ensure!(worst < INFO_TOL, "joint entropy identity off by {worst:e}");

    let certain = info_measure(InfoEvent::new(1.0).unwrap());
    let h_certain = shannon_entropy(&[1.0]).unwrap();
    ensure!(certain == 0.0 && h_certain == 0.0, "certain event carries {certain} / {h_certain} nat");
    let fair = shannon_entropy(&[0.5, 0.5]).unwrap();
    let half = info_measure(InfoEvent::new(0.5).unwrap());
    ensure!((fair - LN_2).abs() < EXACT && (half - LN_2).abs() < EXACT, "fair binary {fair} / {half} nat");
    Ok(format!("500 bijections exact; identity within {worst:.1e} over 1000 joints; certain 0 nat; fair binary {fair:.15} nat"))
}

fn lab(args: &[&str], out: &Path) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_collapse-lab"))
        .args(args)
        .args(["--seed", "11", "--out"])
        .arg(out)
        .env_remove("COLLAPSE_LAB_OUT")
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&o.stderr)));
    }
    Ok(())
}

/// Every file of a run directory; the manifest contributes only its file list.
fn artifacts(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let bytes = fs::read(&path).map_err(|e| e.to_string())?;
        if name.ends_with("_manifest.json") {
            let v: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| e.to_string())?;
            out.insert(name, serde_json::to_vec(&(&v["files"], &v["config"], &v["seed"])).unwrap());
        } else {
            out.insert(name, bytes);
        }
    }
    Ok(out)
}

fn reproducibility() -> Outcome {
    let runs: [&[&str]; 10] = [
        &["alternating", "--t-end", "5"],
        &["gas", "--n", "2000", "--iters", "40000", "--sample-every", "10000"],
        &["screen", "--n", "30", "--trials", "5000", "--profile", "random"],
        &["doubleslit", "--photons", "3000", "--which-path"],
        &["perturb", "--omega-points", "201", "--interval", "10"],
        &["classical", "--system", "henon-heiles", "--q", "0,-0.1", "--p", "0.49,0", "--t-end", "10", "--lyapunov-t", "50", "--walks", "2000"],
        &["entropy", "--t-end", "1", "--checkpoints", "4"],
        &["info", "--table", "0.1,0.2;0.3,0.4"],
        &["blackhole", "--m", "1", "--q", "0.3", "--a", "0.5"],
        &["geodesics", "--points", "50"],
    ];
    let mut files = 0;
    for args in runs {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        lab(args, a.path())?;
        lab(args, b.path())?;
        let (fa, fb) = (artifacts(a.path())?, artifacts(b.path())?);
        ensure!(fa.len() > 1, "{}: only {} files", args[0], fa.len());
        ensure!(fa.keys().eq(fb.keys()), "{}: different file sets", args[0]);
        for (name, bytes) in &fa {
            ensure!(fb[name] == *bytes, "{name} differs between identical runs");
        }
        files += fa.len();
    }
    Ok(format!("10 experiments run twice, {files} artifacts byte-identical (manifest timing fields excluded)"))
}
