//! Time-dependent perturbation theory for a discrete spectrum driven by a
//! harmonic perturbation `H'(t) = 2 W cos(omega t)`, with `hbar = k_B = 1`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::numerics::{cis, sinc, Complex, Real};
use crate::quantum::{DensityMatrix, HermitianOperator};
use crate::table::Table;

/// Unperturbed energies `E_n`, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpectrum<T: Real = f64> {
    energies: Vec<T>,
}

impl<T: Real> DiscreteSpectrum<T> {
    pub fn new(energies: Vec<T>) -> Result<Self> {
        if energies.len() < 2 {
            return Err(Error::invalid("a spectrum needs at least two levels"));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid("energies must be finite"));
        }
        if energies.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("energies must be sorted ascending"));
        }
        Ok(Self { energies })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    /// Bohr frequency `omega_fi = E_f - E_i`.
    pub fn bohr_frequency(&self, i: usize, f: usize) -> Result<T> {
        self.check(i)?;
        self.check(f)?;
        Ok(self.energies[f] - self.energies[i])
    }

    fn check(&self, k: usize) -> Result<()> {
        if k < self.len() {
            Ok(())
        } else {
            Err(Error::invalid(format!("level {k} out of range for {} levels", self.len())))
        }
    }
}

/// `H'(t) = 2 W cos(omega t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicPerturbation<T: Real = f64> {
    pub coupling: HermitianOperator<T>,
    pub omega: T,
}

impl<T: Real> HarmonicPerturbation<T> {
    pub fn new(coupling: HermitianOperator<T>, omega: T) -> Result<Self> {
        if !(omega >= T::zero()) || !omega.is_finite() {
            return Err(Error::invalid(format!("drive frequency must be nonnegative, got {omega}")));
        }
        Ok(Self { coupling, omega })
    }

    fn element(&self, f: usize, i: usize) -> Complex<T> {
        self.coupling.matrix()[(f, i)]
    }

    fn check_against(&self, spectrum: &DiscreteSpectrum<T>) -> Result<()> {
        if self.coupling.dim() != spectrum.len() {
            return Err(Error::DimensionMismatch { expected: spectrum.len(), found: self.coupling.dim() });
        }
        Ok(())
    }
}

/// `(exp(i x dt) - 1) / (i x) = dt exp(i x dt / 2) sinc(x dt / 2)`.
fn phase_integral<T: Real>(x: T, dt: T) -> Complex<T> {
    let half = x * dt / T::lit(2.0);
    cis(half) * (dt * sinc(half))
}

/// First-order amplitude `a_f(t0 + dt)` starting from `|i>`, keeping both the
/// resonant and the anti-resonant term.
///
/// Each term is written in its `sinc` form, so exact resonance needs no
/// special casing.
pub fn first_order_amplitude<T: Real>(
    spectrum: &DiscreteSpectrum<T>,
    pert: &HarmonicPerturbation<T>,
    i: usize,
    f: usize,
    dt: T,
) -> Result<Complex<T>> {
    pert.check_against(spectrum)?;
    let omega_fi = spectrum.bohr_frequency(i, f)?;
    let delta = if i == f { T::one() } else { T::zero() };
    let bracket = phase_integral(omega_fi + pert.omega, dt) + phase_integral(omega_fi - pert.omega, dt);
    // W_fi / (i hbar) = -i W_fi
    let coupling = pert.element(f, i) * Complex::new(T::zero(), -T::one());
    Ok(Complex::new(delta, T::zero()) + coupling * bracket)
}

/// Resonant-term approximation
/// `a_f = delta_if + dt (W_fi / i) exp(i theta) sinc(theta)` with
/// `theta = (omega - |omega_fi|) dt / 2`.
pub fn resonant_amplitude<T: Real>(
    spectrum: &DiscreteSpectrum<T>,
    pert: &HarmonicPerturbation<T>,
    i: usize,
    f: usize,
    dt: T,
) -> Result<Complex<T>> {
    pert.check_against(spectrum)?;
    let omega_fi = spectrum.bohr_frequency(i, f)?;
    let delta = if i == f { T::one() } else { T::zero() };
    let theta = (pert.omega - omega_fi.abs()) * dt / T::lit(2.0);
    let coupling = pert.element(f, i) * Complex::new(T::zero(), -T::one());
    Ok(Complex::new(delta, T::zero()) + coupling * cis(theta) * (dt * sinc(theta)))
}

/// Whether first-order theory is trustworthy for `i -> f`: the coupling must
/// be small next to the level spacing and the predicted probability small.
pub fn weak_coupling_holds<T: Real>(
    spectrum: &DiscreteSpectrum<T>,
    pert: &HarmonicPerturbation<T>,
    i: usize,
    f: usize,
    dt: T,
) -> Result<bool> {
    let omega_fi = spectrum.bohr_frequency(i, f)?;
    let w = pert.element(f, i).norm_sqr().sqrt();
    let a = first_order_amplitude(spectrum, pert, i, f, dt)?;
    let transition = if i == f { T::zero() } else { a.norm_sqr() };
    Ok(w * T::lit(10.0) <= omega_fi.abs() && transition <= T::lit(0.1))
}

/// `|a_f|^2` of the first-order amplitude over a grid of drive frequencies.
///
/// The drive enters as `cos(omega t)`, so the curve is even in `omega`:
/// absorption and stimulated emission peaks at `+-|omega_fi|` have equal
/// height.
pub fn resonance_curve<T: Real>(
    spectrum: &DiscreteSpectrum<T>,
    coupling: &HermitianOperator<T>,
    i: usize,
    f: usize,
    dt: T,
    omega_grid: &[T],
) -> Result<Vec<(T, T)>> {
    if omega_grid.is_empty() {
        return Err(Error::invalid("resonance curve needs a nonempty frequency grid"));
    }
    if coupling.dim() != spectrum.len() {
        return Err(Error::DimensionMismatch { expected: spectrum.len(), found: coupling.dim() });
    }
    let omega_fi = spectrum.bohr_frequency(i, f)?;
    let w = coupling.matrix()[(f, i)] * Complex::new(T::zero(), -T::one());
    let delta = if i == f { T::one() } else { T::zero() };
    Ok(omega_grid
        .iter()
        .map(|&omega| {
            let bracket = phase_integral(omega_fi + omega, dt) + phase_integral(omega_fi - omega, dt);
            let a = Complex::new(delta, T::zero()) + w * bracket;
            (omega, a.norm_sqr())
        })
        .collect())
}

/// Grid point of the curve's maximum.
pub fn resonance_peak<T: Real>(curve: &[(T, T)]) -> Option<(T, T)> {
    curve.iter().copied().fold(None, |best, p| match best {
        Some(b) if b.1 >= p.1 => Some(b),
        _ => Some(p),
    })
}

pub fn resonance_table<T: Real>(curve: &[(T, T)]) -> Table {
    let mut t = Table::new(["omega", "probability"]);
    for &(w, p) in curve {
        t.push_floats(&[w.to_f64_lossy(), p.to_f64_lossy()]);
    }
    t
}

/// Snapshot of the interaction-picture amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSample<T: Real = f64> {
    pub time: T,
    pub amplitudes: Vec<Complex<T>>,
}

/// Exact (to integrator accuracy) amplitudes `a_n(T)` from
/// `i da_n/dt = sum_m <n|H'(t)|m> exp(i omega_nm t) a_m`, starting in `|i>`,
/// with classical fourth-order Runge–Kutta.
pub fn integrate_interaction_picture<T: Real>(
    spectrum: &DiscreteSpectrum<T>,
    pert: &HarmonicPerturbation<T>,
    i: usize,
    t_end: T,
    n_steps: usize,
) -> Result<Vec<Complex<T>>> {
    let series = integrate_interaction_series(spectrum, pert, i, t_end, n_steps, n_steps)?;
    Ok(series.into_iter().last().map(|s| s.amplitudes).unwrap_or_default())
}

/// As [`integrate_interaction_picture`], recording every `record_every` steps
/// (and always the initial and final state).
pub fn integrate_interaction_series<T: Real>(
    spectrum: &DiscreteSpectrum<T>,
    pert: &HarmonicPerturbation<T>,
    i: usize,
    t_end: T,
    n_steps: usize,
    record_every: usize,
) -> Result<Vec<AmplitudeSample<T>>> {
    pert.check_against(spectrum)?;
    spectrum.check(i)?;
    if n_steps == 0 || record_every == 0 {
        return Err(Error::invalid("need at least one step and a positive recording stride"));
    }
    if !(t_end > T::zero()) || !t_end.is_finite() {
        return Err(Error::invalid(format!("integration time must be positive, got {t_end}")));
    }
    let n = spectrum.len();
    let h = t_end / T::from_usize_lossy(n_steps);
    let e = spectrum.energies();
    let max_bohr = e[n - 1] - e[0];
    let coupling_scale = T::lit(2.0) * pert.coupling.matrix().iter().fold(T::zero(), |m, z| m.max(z.norm_sqr().sqrt()));
    let fastest = max_bohr.max(pert.omega).max(coupling_scale);
    if h * T::lit(50.0) * fastest > T::one() {
        return Err(Error::StepSize(format!(
            "step {h} exceeds 1/(50 * {fastest}); use at least {} steps",
            (t_end * T::lit(50.0) * fastest).ceil()
        )));
    }

    let w = pert.coupling.matrix();
    let rhs = |t: T, a: &DVector<Complex<T>>| -> DVector<Complex<T>> {
        let drive = T::lit(2.0) * (pert.omega * t).cos();
        DVector::from_fn(n, |row, _| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for m in 0..n {
                let wm = w[(row, m)];
                if wm.re != T::zero() || wm.im != T::zero() {
                    acc += wm * cis((e[row] - e[m]) * t) * a[m];
                }
            }
            // -i * drive * acc
            Complex::new(acc.im * drive, -acc.re * drive)
        })
    };

    let mut a = DVector::from_element(n, Complex::new(T::zero(), T::zero()));
    a[i] = Complex::new(T::one(), T::zero());
    let mut out = vec![AmplitudeSample { time: T::zero(), amplitudes: a.iter().copied().collect() }];
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    for step in 0..n_steps {
        let t = T::from_usize_lossy(step) * h;
        let k1 = rhs(t, &a);
        let k2 = rhs(t + half * h, &(&a + &k1 * Complex::new(half * h, T::zero())));
        let k3 = rhs(t + half * h, &(&a + &k2 * Complex::new(half * h, T::zero())));
        let k4 = rhs(t + h, &(&a + &k3 * Complex::new(h, T::zero())));
        let two = Complex::new(T::lit(2.0), T::zero());
        a += (k1 + k2 * two + k3 * two + k4) * Complex::new(h * sixth, T::zero());
        if (step + 1) % record_every == 0 || step + 1 == n_steps {
            out.push(AmplitudeSample {
                time: T::from_usize_lossy(step + 1) * h,
                amplitudes: a.iter().copied().collect(),
            });
        }
    }
    Ok(out)
}

pub fn amplitude_table<T: Real>(series: &[AmplitudeSample<T>]) -> Table {
    let n = series.first().map(|s| s.amplitudes.len()).unwrap_or(0);
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|k| format!("p_{k}")));
    header.push("norm".into());
    let mut table = Table::new(header);
    for s in series {
        let mut row = vec![s.time.to_f64_lossy()];
        let probs: Vec<f64> = s.amplitudes.iter().map(|a| a.norm_sqr().to_f64_lossy()).collect();
        let total: f64 = probs.iter().sum();
        row.extend(probs);
        row.push(total);
        table.push_floats(&row);
    }
    table
}

/// Golden-rule rate `2 pi |W_fi|^2 rho(E)`.
pub fn fermi_golden_rule_rate<T: Real>(w_fi: Complex<T>, density_of_states: T) -> Result<T> {
    if !(density_of_states >= T::zero()) {
        return Err(Error::invalid(format!("density of states must be nonnegative, got {density_of_states}")));
    }
    Ok(T::two_pi() * w_fi.norm_sqr() * density_of_states)
}

/// Canonical two-level state with level frequencies `omega1`, `omega2` at
/// temperature `temperature`.
pub fn two_level_thermal_density<T: Real>(omega1: T, omega2: T, temperature: T) -> Result<DensityMatrix<T>> {
    if !(temperature > T::zero()) {
        return Err(Error::invalid(format!("temperature must be positive, got {temperature}")));
    }
    // Shift by the ground level so the weights never overflow.
    let ground = omega1.min(omega2);
    let w1 = (-(omega1 - ground) / temperature).exp();
    let w2 = (-(omega2 - ground) / temperature).exp();
    let z = w1 + w2;
    DensityMatrix::diagonal(&[w1 / z, w2 / z])
}

/// First-order absorption and stimulated-emission probabilities
/// `(|a_{1->2}|^2, |a_{2->1}|^2)` of a two-level system over `dt`.
pub fn einstein_balance_check<T: Real>(
    spectrum: &DiscreteSpectrum<T>,
    pert: &HarmonicPerturbation<T>,
    dt: T,
) -> Result<(T, T)> {
    if spectrum.len() != 2 {
        return Err(Error::invalid("balance check needs a two-level spectrum"));
    }
    let up = first_order_amplitude(spectrum, pert, 0, 1, dt)?.norm_sqr();
    let down = first_order_amplitude(spectrum, pert, 1, 0, dt)?.norm_sqr();
    Ok((up, down))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_level(gap: f64, w: Complex<f64>, omega: f64) -> (DiscreteSpectrum, HarmonicPerturbation) {
        let spectrum = DiscreteSpectrum::new(vec![0.0, gap]).unwrap();
        let m = nalgebra::DMatrix::from_row_slice(2, 2, &[Complex::new(0.0, 0.0), w.conj(), w, Complex::new(0.0, 0.0)]);
        let pert = HarmonicPerturbation::new(HermitianOperator::new(m).unwrap(), omega).unwrap();
        (spectrum, pert)
    }

    #[test]
    fn spectrum_validation() {
        assert!(DiscreteSpectrum::new(vec![1.0_f64]).is_err());
        assert!(DiscreteSpectrum::new(vec![1.0_f64, 0.0]).is_err());
        assert!(HarmonicPerturbation::new(HermitianOperator::<f64>::zeros(2), -1.0).is_err());
    }

    #[test]
    fn zero_coupling_gives_kronecker_delta() {
        let spectrum = DiscreteSpectrum::new(vec![0.0, 1.0, 2.5]).unwrap();
        let pert = HarmonicPerturbation::new(HermitianOperator::zeros(3), 1.0).unwrap();
        for i in 0..3 {
            for f in 0..3 {
                let a = first_order_amplitude(&spectrum, &pert, i, f, 3.0).unwrap();
                let expected = if i == f { 1.0 } else { 0.0 };
                assert_eq!(a, Complex::new(expected, 0.0));
            }
        }
        assert!(first_order_amplitude(&spectrum, &pert, 0, 3, 1.0).is_err());
    }

    #[test]
    fn resonant_form_reaches_dt_times_coupling() {
        let (spectrum, pert) = two_level(5.0, Complex::new(0.01, 0.0), 5.0);
        let a = resonant_amplitude(&spectrum, &pert, 0, 1, 2.0).unwrap();
        assert!((a.norm() - 2.0 * 0.01).abs() < 1e-15);
        // The full form differs only by the anti-resonant term, O(|W| / omega_fi).
        let full = first_order_amplitude(&spectrum, &pert, 0, 1, 2.0).unwrap();
        assert!((full.norm() - 0.02).abs() <= 2.0 * 0.01 / 5.0);
    }

    #[test]
    fn far_detuning_decays_like_inverse_theta() {
        let (spectrum, _) = two_level(1.0, Complex::new(0.01, 0.0), 0.0);
        let dt = 10.0;
        for detune in [20.0, 40.0, 80.0, 160.0] {
            let (_, pert) = two_level(1.0, Complex::new(0.01, 0.0), 1.0 + detune);
            let a = first_order_amplitude(&spectrum, &pert, 0, 1, dt).unwrap().norm();
            // |a| <= 2 |W| / |omega_fi - omega| + anti-resonant contribution.
            assert!(a <= 2.0 * 0.01 / detune + 2.0 * 0.01 / (2.0 + detune) + 1e-15);
        }
    }

    #[test]
    fn golden_rule_examples() {
        assert_eq!(fermi_golden_rule_rate(Complex::new(0.0, 0.0), 10.0).unwrap(), 0.0);
        let r = fermi_golden_rule_rate(Complex::new(0.1, 0.0), 10.0).unwrap();
        assert!((r - 2.0 * std::f64::consts::PI * 0.01 * 10.0).abs() < 1e-15);
        assert!((r - 0.6283).abs() < 1e-4);
        let r2 = fermi_golden_rule_rate(Complex::new(0.0, 0.2), 10.0).unwrap();
        assert!((r2 / r - 4.0).abs() < 1e-12);
        assert!(fermi_golden_rule_rate(Complex::new(0.1, 0.0), -1.0).is_err());
    }

    #[test]
    fn thermal_two_level_examples() {
        let rho = two_level_thermal_density(0.0_f64, 1.0, 1.0).unwrap();
        assert!((rho.population(1) / rho.population(0) - (-1.0_f64).exp()).abs() < 1e-9);
        let hot = two_level_thermal_density(0.0_f64, 1.0, 1e9).unwrap();
        assert!((hot.population(0) - 0.5).abs() < 1e-8);
        let cold = two_level_thermal_density(0.0_f64, 1.0, 1e-3).unwrap();
        assert!((cold.population(0) - 1.0).abs() < 1e-12);
        assert!(two_level_thermal_density(0.0, 1.0, 0.0).is_err());
        assert!((rho.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn balance_holds_for_real_and_complex_coupling() {
        for w in [Complex::new(0.02, 0.0), Complex::new(0.01, -0.03)] {
            for dt in [0.5, 1.0, 3.3, 10.0, 40.0] {
                let (spectrum, pert) = two_level(2.0, w, 1.7);
                let (b12, b21) = einstein_balance_check(&spectrum, &pert, dt).unwrap();
                assert!((b12 - b21).abs() < 1e-12, "w {w} dt {dt}: {b12} vs {b21}");
            }
        }
    }

    #[test]
    fn integrator_rejects_coarse_steps() {
        let (spectrum, pert) = two_level(10.0, Complex::new(0.01, 0.0), 10.0);
        assert!(matches!(
            integrate_interaction_picture(&spectrum, &pert, 0, 10.0, 100).unwrap_err(),
            Error::StepSize(_)
        ));
    }

    #[test]
    fn integrator_without_coupling_stays_put() {
        let spectrum = DiscreteSpectrum::new(vec![0.0, 1.0, 3.0]).unwrap();
        let pert = HarmonicPerturbation::new(HermitianOperator::zeros(3), 2.0).unwrap();
        let a = integrate_interaction_picture(&spectrum, &pert, 1, 5.0, 2000).unwrap();
        assert_eq!(a, vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)]);
    }

    #[test]
    fn resonance_curve_rejects_empty_grid() {
        let (spectrum, pert) = two_level(1.0, Complex::new(0.01, 0.0), 1.0);
        assert!(resonance_curve(&spectrum, &pert.coupling, 0, 1, 1.0, &[]).is_err());
    }
}
