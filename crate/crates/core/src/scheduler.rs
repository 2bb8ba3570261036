//! Timing and orchestration of R-events.
//!
//! Collapses arrive as a Poisson process: waiting times are exponential with
//! the clock's rate. Between events the state evolves with the exact
//! propagator, so the only randomness in a trajectory comes from the clock and
//! the Born draws.

use nalgebra::DVector;
use num_traits::Num;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{Complex, Real};
use crate::quantum::{collapse, collapse_info_measure, Basis, HermitianOperator, StateVector, UnitaryPropagator};
use crate::rng::{normal, open01};
use crate::table::{Cell, Table};

/// Exponential waiting-time generator for a Poisson process of rate `rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonClock<T: Real = f64> {
    rate: T,
}

impl<T: Real> PoissonClock<T> {
    pub fn new(rate: T) -> Result<Self> {
        if !(rate > T::zero()) || !rate.is_finite() {
            return Err(Error::invalid(format!("clock rate must be positive and finite, got {rate}")));
        }
        Ok(Self { rate })
    }

    /// Clock with mean waiting time `tau`.
    pub fn with_mean_time(tau: T) -> Result<Self> {
        if !(tau > T::zero()) {
            return Err(Error::invalid(format!("mean waiting time must be positive, got {tau}")));
        }
        Self::new(T::one() / tau)
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn mean_time(&self) -> T {
        T::one() / self.rate
    }

    /// Draw a waiting time by inverting `1 - exp(-rate t)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        exponential_wait(self.rate, rng)
    }
}

fn exponential_wait<T: Real, R: Rng + ?Sized>(rate: T, rng: &mut R) -> T {
    let u: T = open01(rng);
    -u.ln() / rate
}

pub fn sample_waiting_time<T: Real, R: Rng + ?Sized>(clock: &PoissonClock<T>, rng: &mut R) -> T {
    clock.sample(rng)
}

/// `P(k; lambda) = exp(-lambda) lambda^k / k!`, evaluated in log space.
pub fn poisson_pmf<T: Real>(k: u64, lambda: T) -> Result<T> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::invalid(format!("Poisson mean must be nonnegative, got {lambda}")));
    }
    if lambda == T::zero() {
        return Ok(if k == 0 { T::one() } else { T::zero() });
    }
    let mut ln_fact = T::zero();
    for i in 2..=k {
        ln_fact += T::lit(i as f64).ln();
    }
    Ok((T::lit(k as f64) * lambda.ln() - lambda - ln_fact).exp())
}

/// Collapse rate of a body of `n_particles` constituents, each collapsing
/// independently at `lambda_micro`: rates add.
///
/// Generic over any numeric type; with an exact rational scalar the
/// additivity `grw_rate(a + b) = grw_rate(a) + grw_rate(b)` holds exactly.
pub fn grw_rate<N: Num + Clone + PartialOrd>(n_particles: N, lambda_micro: N) -> Result<N> {
    if !(n_particles >= N::one()) {
        return Err(Error::invalid("a body needs at least one constituent"));
    }
    if !(lambda_micro >= N::zero()) {
        return Err(Error::invalid("per-particle collapse rate must be nonnegative"));
    }
    Ok(n_particles * lambda_micro)
}

/// Collapse time `hbar / E_delta` for a superposition with gravitational
/// self-energy difference `E_delta` (`hbar = 1`).
pub fn penrose_time<T: Real>(e_delta: T) -> Result<T> {
    if !(e_delta > T::zero()) || !e_delta.is_finite() {
        return Err(Error::invalid(format!("self-energy difference must be positive, got {e_delta}")));
    }
    Ok(T::one() / e_delta)
}

/// One Euler–Maruyama step of the continuous-localization equation
/// `d psi = [-i H dt + A xi - lambda A^2 dt] psi`, followed by renormalization.
///
/// `xi` is a complex Gaussian increment with `E|xi|^2 = 2 lambda dt`. Its real
/// part is drawn with mean `2 lambda <A> dt`, the norm-weighted measure under
/// which renormalized trajectories reproduce Born statistics for any initial
/// state.
pub fn csl_step<T: Real, R: Rng + ?Sized>(
    psi: &StateVector<T>,
    h: &HermitianOperator<T>,
    a: &HermitianOperator<T>,
    lambda: T,
    dt: T,
    rng: &mut R,
) -> Result<StateVector<T>> {
    if !(lambda >= T::zero()) || !(dt > T::zero()) {
        return Err(Error::invalid("collapse strength must be nonnegative and dt positive"));
    }
    if lambda * dt >= T::lit(0.1) {
        return Err(Error::StepSize(format!("lambda * dt = {} must stay below 0.1", lambda * dt)));
    }
    let h_psi = h.apply(psi)?;
    let a_psi = a.apply(psi)?;
    let a2_psi = a.matrix() * &a_psi;
    let mean_a = psi.amplitudes().dotc(&a_psi).re;
    let sd = (lambda * dt).sqrt();
    let two = T::lit(2.0);
    let xi = Complex::new(two * lambda * mean_a * dt + sd * normal::<T, _>(rng), sd * normal::<T, _>(rng));
    let minus_i_dt = Complex::new(T::zero(), -dt);
    let damping = Complex::new(lambda * dt, T::zero());
    let next: DVector<Complex<T>> = psi.amplitudes() + h_psi * minus_i_dt + a_psi * xi - a2_psi * damping;
    StateVector::renormalize(next)
}

/// A recorded R-event.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseEvent<T: Real = f64> {
    pub time: T,
    pub pre_state: StateVector<T>,
    pub post_state: StateVector<T>,
    pub chosen_index: usize,
    /// `-2 ln |<post|pre>|`, in nats.
    pub info_change: T,
}

/// Output of [`run_alternating`]: regularly sampled states plus the R-events.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingTrajectory<T: Real = f64> {
    pub samples: Vec<(T, StateVector<T>)>,
    pub events: Vec<CollapseEvent<T>>,
}

impl<T: Real> AlternatingTrajectory<T> {
    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    /// Time series with columns `t, re_k, im_k..., event_flag, chosen_index`.
    ///
    /// Sample rows carry `event_flag = 0` and `chosen_index = -1`; every event
    /// adds a row with flag 1 holding the post-collapse state.
    pub fn to_table(&self) -> Table {
        let dim = self.samples.first().map(|(_, s)| s.dim()).unwrap_or(0);
        let mut header = vec!["t".to_string()];
        for k in 0..dim {
            header.push(format!("re_{k}"));
            header.push(format!("im_{k}"));
        }
        header.push("event_flag".into());
        header.push("chosen_index".into());
        let mut table = Table::new(header);
        let row = |t: T, s: &StateVector<T>, flag: i64, idx: i64| {
            let mut cells = vec![Cell::Float(t.to_f64_lossy())];
            for a in s.amplitudes().iter() {
                cells.push(Cell::Float(a.re.to_f64_lossy()));
                cells.push(Cell::Float(a.im.to_f64_lossy()));
            }
            cells.push(Cell::Int(flag));
            cells.push(Cell::Int(idx));
            cells
        };
        let mut events = self.events.iter().peekable();
        for (t, s) in &self.samples {
            while let Some(e) = events.next_if(|e| e.time <= *t) {
                table.push(row(e.time, &e.post_state, 1, e.chosen_index as i64));
            }
            table.push(row(*t, s, 0, -1));
        }
        for e in events {
            table.push(row(e.time, &e.post_state, 1, e.chosen_index as i64));
        }
        table
    }
}

/// Alternate exact unitary segments with collapses at exponential waiting
/// times of rate `clock.rate()`, up to time `t_end`.
pub fn run_alternating<T: Real, R: Rng + ?Sized>(
    psi0: &StateVector<T>,
    h: &HermitianOperator<T>,
    clock: &PoissonClock<T>,
    basis: &Basis<T>,
    t_end: T,
    sample_dt: T,
    rng: &mut R,
) -> Result<AlternatingTrajectory<T>> {
    let rate = clock.rate();
    run_alternating_with_rate(psi0, h, |_, _| rate, basis, t_end, sample_dt, rng)
}

/// Like [`run_alternating`], with the collapse rate supplied by a hook
/// `rate(state, energy)`.
///
/// The hook is evaluated after every event with the new state and its mean
/// energy `<H>`. The mean energy is conserved along a unitary segment, so an
/// energy-dependent rate is exact here. A zero rate switches collapses off for
/// the rest of the run.
pub fn run_alternating_with_rate<T, R, F>(
    psi0: &StateVector<T>,
    h: &HermitianOperator<T>,
    rate: F,
    basis: &Basis<T>,
    t_end: T,
    sample_dt: T,
    rng: &mut R,
) -> Result<AlternatingTrajectory<T>>
where
    T: Real,
    R: Rng + ?Sized,
    F: Fn(&StateVector<T>, T) -> T,
{
    if !(t_end > T::zero()) || !t_end.is_finite() {
        return Err(Error::invalid(format!("run length must be positive, got {t_end}")));
    }
    if !(sample_dt > T::zero()) {
        return Err(Error::invalid(format!("sampling interval must be positive, got {sample_dt}")));
    }
    if basis.dim() != psi0.dim() || h.dim() != psi0.dim() {
        return Err(Error::DimensionMismatch { expected: psi0.dim(), found: basis.dim().max(h.dim()) });
    }
    let propagator = UnitaryPropagator::new(h);
    let next_wait = |psi: &StateVector<T>, rng: &mut R| -> Result<Option<T>> {
        let lambda = rate(psi, h.mean(psi)?);
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(Error::invalid(format!("rate hook returned {lambda}")));
        }
        Ok((lambda > T::zero()).then(|| exponential_wait(lambda, rng)))
    };

    let mut samples = Vec::new();
    let mut events = Vec::new();
    let mut segment_start = T::zero();
    let mut segment_state = psi0.clone();
    let mut next_event = next_wait(&segment_state, rng)?.map(|w| segment_start + w);
    let mut sample_index = 0usize;

    loop {
        let horizon = next_event.filter(|&te| te <= t_end);
        // Samples falling before the next event belong to this segment.
        loop {
            let ts = T::from_usize_lossy(sample_index) * sample_dt;
            if ts > t_end || horizon.is_some_and(|te| ts >= te) {
                break;
            }
            samples.push((ts, propagator.evolve(&segment_state, ts - segment_start)?));
            sample_index += 1;
        }
        let Some(te) = horizon else { break };
        let pre = propagator.evolve(&segment_state, te - segment_start)?;
        let (k, post) = collapse(&pre, basis, rng)?;
        let info_change = collapse_info_measure(&pre, &post)?;
        events.push(CollapseEvent { time: te, pre_state: pre, post_state: post.clone(), chosen_index: k, info_change });
        segment_start = te;
        segment_state = post;
        next_event = next_wait(&segment_state, rng)?.map(|w| segment_start + w);
    }
    Ok(AlternatingTrajectory { samples, events })
}
