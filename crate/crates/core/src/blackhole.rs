//! Kerr–Newman horizon mechanics and thermodynamics in geometric units
//! (`G = c = 1`, and `hbar = k_B = 1` for temperatures and entropies).

use crate::error::{Error, Result};
use crate::numerics::Real;
use crate::table::Table;

/// Discriminants below `EXTREMAL_TOLERANCE * M^2` in magnitude count as extremal.
pub const EXTREMAL_TOLERANCE: f64 = 1e-12;
/// Relative slack for "conserved" irreducible mass.
pub const REVERSIBLE_TOLERANCE: f64 = 1e-10;
/// Relative slack when comparing total horizon areas.
pub const AREA_TOLERANCE: f64 = 1e-12;

/// Mass `M`, charge `Q` and spin parameter `a = L / M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlackHoleParams<T: Real = f64> {
    pub mass: T,
    pub charge: T,
    pub spin: T,
}

impl<T: Real> BlackHoleParams<T> {
    pub fn new(mass: T, charge: T, spin: T) -> Result<Self> {
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(Error::invalid(format!("mass must be positive, got {mass}")));
        }
        if !charge.is_finite() || !spin.is_finite() {
            return Err(Error::invalid("charge and spin must be finite"));
        }
        Ok(Self { mass, charge, spin })
    }

    pub fn schwarzschild(mass: T) -> Result<Self> {
        Self::new(mass, T::zero(), T::zero())
    }

    /// From angular momentum `L`, using `a = L / M`.
    pub fn from_angular_momentum(mass: T, charge: T, angular_momentum: T) -> Result<Self> {
        let p = Self::new(mass, charge, T::zero())?;
        Self::new(p.mass, charge, angular_momentum / mass)
    }

    pub fn angular_momentum(&self) -> T {
        self.spin * self.mass
    }

    /// `M^2 - Q^2 - a^2`, snapped to zero inside the extremal tolerance.
    pub fn discriminant(&self) -> T {
        let m2 = self.mass * self.mass;
        let d = m2 - self.charge * self.charge - self.spin * self.spin;
        if d.abs() < T::lit(EXTREMAL_TOLERANCE) * m2 {
            T::zero()
        } else {
            d
        }
    }

    pub fn is_extremal(&self) -> bool {
        self.discriminant() == T::zero()
    }

    fn checked_root(&self) -> Result<T> {
        let d = self.discriminant();
        if d < T::zero() {
            return Err(Error::NakedSingularity { discriminant: d.to_f64_lossy() });
        }
        Ok(d.sqrt())
    }
}

/// `r_+- = M +- sqrt(M^2 - Q^2 - a^2)`.
pub fn horizons<T: Real>(p: &BlackHoleParams<T>) -> Result<(T, T)> {
    let root = p.checked_root()?;
    Ok((p.mass + root, (p.mass - root).max(T::zero())))
}

/// `M_irr^2 = (M^2 - Q^2/2 + M sqrt(M^2 - Q^2 - a^2)) / 2`.
pub fn irreducible_mass<T: Real>(p: &BlackHoleParams<T>) -> Result<T> {
    let root = p.checked_root()?;
    let half = T::lit(0.5);
    Ok(((p.mass * p.mass - half * p.charge * p.charge + p.mass * root) * half).sqrt())
}

/// `M_irr^2` from the horizon radius, `(r_+^2 + a^2) / 4`.
pub fn irreducible_mass_from_horizon<T: Real>(p: &BlackHoleParams<T>) -> Result<T> {
    let (rp, _) = horizons(p)?;
    Ok(((rp * rp + p.spin * p.spin) / T::lit(4.0)).sqrt())
}

/// `A = 4 pi (r_+^2 + a^2)`.
pub fn horizon_area<T: Real>(p: &BlackHoleParams<T>) -> Result<T> {
    let (rp, _) = horizons(p)?;
    Ok(T::lit(4.0) * T::pi() * (rp * rp + p.spin * p.spin))
}

/// `A = 16 pi M_irr^2`.
pub fn horizon_area_from_irreducible<T: Real>(p: &BlackHoleParams<T>) -> Result<T> {
    let m = irreducible_mass(p)?;
    Ok(T::lit(16.0) * T::pi() * m * m)
}

/// Outer ergosurface radius at polar angle `theta`.
pub fn ergosphere_radius<T: Real>(p: &BlackHoleParams<T>, theta: T) -> Result<T> {
    p.checked_root()?;
    let c = theta.cos();
    let d = p.mass * p.mass - p.charge * p.charge - p.spin * p.spin * c * c;
    Ok(p.mass + d.max(T::zero()).sqrt())
}

/// Mass as a function of area, angular momentum and charge:
/// `M^2 = A/16pi + 4 pi L^2/A + Q^2/2 + pi Q^4/A`.
pub fn smarr_mass<T: Real>(area: T, angular_momentum: T, charge: T) -> Result<T> {
    if !(area > T::zero()) {
        return Err(Error::invalid(format!("area must be positive, got {area}")));
    }
    let pi = T::pi();
    let q2 = charge * charge;
    let m2 = area / (T::lit(16.0) * pi)
        + T::lit(4.0) * pi * angular_momentum * angular_momentum / area
        + q2 / T::lit(2.0)
        + pi * q2 * q2 / area;
    Ok(m2.sqrt())
}

/// Partial derivatives of `M(A, L, Q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmarrCoefficients<T: Real = f64> {
    /// `dM/dA`, the surface tension.
    pub tension: T,
    /// `dM/dL`, the horizon angular velocity.
    pub omega: T,
    /// `dM/dQ`, the electric potential.
    pub phi: T,
}

/// Closed-form Smarr coefficients. The tension is exactly zero at
/// extremality and never negative.
pub fn smarr_coefficients<T: Real>(p: &BlackHoleParams<T>) -> Result<SmarrCoefficients<T>> {
    let area = horizon_area(p)?;
    let m = p.mass;
    let l = p.angular_momentum();
    let q = p.charge;
    let pi = T::pi();
    let a2 = area * area;
    let tension = if p.is_extremal() {
        T::zero()
    } else {
        let t = (T::one() / (T::lit(32.0) * pi)
            - T::lit(2.0) * pi * l * l / a2
            - pi * q * q * q * q / (T::lit(2.0) * a2))
            / m;
        t.max(T::zero())
    };
    let omega = T::lit(4.0) * pi * l / (m * area);
    let phi = (q / T::lit(2.0) + T::lit(2.0) * pi * q * q * q / area) / m;
    Ok(SmarrCoefficients { tension, omega, phi })
}

/// Central finite differences of [`smarr_mass`] with steps `rel_step`
/// times the natural scale of each variable.
pub fn smarr_finite_differences<T: Real>(p: &BlackHoleParams<T>, rel_step: T) -> Result<SmarrCoefficients<T>> {
    let area = horizon_area(p)?;
    let l = p.angular_momentum();
    let q = p.charge;
    let scale = p.mass * p.mass;
    let central = |f: &dyn Fn(T) -> Result<T>, x: T, h: T| -> Result<T> { Ok((f(x + h)? - f(x - h)?) / (h + h)) };
    let ha = rel_step * area;
    let hl = rel_step * scale;
    let hq = rel_step * p.mass;
    Ok(SmarrCoefficients {
        tension: central(&|x| smarr_mass(x, l, q), area, ha)?,
        omega: central(&|x| smarr_mass(area, x, q), l, hl)?,
        phi: central(&|x| smarr_mass(area, l, x), q, hq)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonData<T: Real = f64> {
    pub r_plus: T,
    pub r_minus: T,
    pub area: T,
    pub irreducible_mass: T,
    pub surface_gravity: T,
    pub temperature: T,
    pub entropy: T,
}

/// `kappa = 8 pi T_tension`, `T_H = kappa / 2 pi`, `S = A / 4`.
pub fn hawking_thermo<T: Real>(p: &BlackHoleParams<T>) -> Result<HorizonData<T>> {
    let (r_plus, r_minus) = horizons(p)?;
    let area = horizon_area(p)?;
    let kappa = T::lit(8.0) * T::pi() * smarr_coefficients(p)?.tension;
    Ok(HorizonData {
        r_plus,
        r_minus,
        area,
        irreducible_mass: irreducible_mass(p)?,
        surface_gravity: kappa,
        temperature: kappa / T::two_pi(),
        entropy: area / T::lit(4.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transformation {
    Reversible,
    Irreversible,
    Forbidden,
}

impl Transformation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Transformation::Reversible => "reversible",
            Transformation::Irreversible => "irreversible",
            Transformation::Forbidden => "forbidden",
        }
    }
}

/// Classifies `before -> after` by the change in irreducible mass.
pub fn classify_transformation<T: Real>(before: &BlackHoleParams<T>, after: &BlackHoleParams<T>) -> Result<Transformation> {
    let m0 = irreducible_mass(before)?;
    let m1 = irreducible_mass(after)?;
    let delta = m1 - m0;
    Ok(if delta.abs() <= T::lit(REVERSIBLE_TOLERANCE) * m0 {
        Transformation::Reversible
    } else if delta > T::zero() {
        Transformation::Irreversible
    } else {
        Transformation::Forbidden
    })
}

fn total_area<T: Real>(holes: &[BlackHoleParams<T>]) -> Result<T> {
    holes.iter().try_fold(T::zero(), |acc, h| Ok(acc + horizon_area(h)?))
}

/// Whether the total horizon area does not decrease from `before` to `after`.
/// Totals equal within [`AREA_TOLERANCE`] count as allowed.
pub fn area_nondecreasing<T: Real>(before: &[BlackHoleParams<T>], after: &[BlackHoleParams<T>]) -> Result<bool> {
    let a0 = total_area(before)?;
    Ok(total_area(after)? >= a0 - T::lit(AREA_TOLERANCE) * a0)
}

/// Area theorem for a merger of `components` into `merged`.
pub fn area_theorem_check<T: Real>(components: &[BlackHoleParams<T>], merged: &BlackHoleParams<T>) -> Result<bool> {
    area_nondecreasing(components, std::slice::from_ref(merged))
}

/// `S_U = S + sum A_i / 4`.
pub fn generalized_entropy<T: Real>(s_outside: T, holes: &[BlackHoleParams<T>]) -> Result<T> {
    Ok(s_outside + total_area(holes)? / T::lit(4.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyBalance {
    Increase,
    Boundary,
    Violation,
}

/// Change of the generalized entropy when the outside entropy changes by
/// `delta_s` and the total horizon area by `delta_area`.
pub fn generalized_entropy_change<T: Real>(delta_s: T, delta_area: T) -> (T, EntropyBalance) {
    let d = delta_s + delta_area / T::lit(4.0);
    let scale = delta_s.abs().max((delta_area / T::lit(4.0)).abs()).max(T::one());
    let status = if d.abs() <= T::lit(1e-12) * scale {
        EntropyBalance::Boundary
    } else if d > T::zero() {
        EntropyBalance::Increase
    } else {
        EntropyBalance::Violation
    };
    (d, status)
}

/// Schwarzschild tortoise coordinate `r* = r + 2M ln|(r - 2M) / 2M|`.
pub fn tortoise<T: Real>(r: T, mass: T) -> Result<T> {
    if !(mass > T::zero()) {
        return Err(Error::invalid(format!("mass must be positive, got {mass}")));
    }
    if !(r > T::zero()) || !r.is_finite() {
        return Err(Error::invalid(format!("radius must be positive, got {r}")));
    }
    let rs = mass + mass;
    if r == rs {
        return Err(Error::SingularPoint(format!("tortoise coordinate diverges at r = 2M = {rs}")));
    }
    Ok(r + rs * ((r - rs) / rs).abs().ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NullBranch {
    Ingoing,
    Outgoing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Exterior,
    Interior,
}

/// Point on a radial null curve, with the ingoing Eddington–Finkelstein
/// coordinate `v = t + r*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullPoint<T: Real = f64> {
    pub r: T,
    pub t: T,
    pub v: T,
}

/// Specification of one radial null curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicRequest<T: Real = f64> {
    pub mass: T,
    pub r_min: T,
    pub r_max: T,
    pub n_points: usize,
    pub branch: NullBranch,
    pub region: Region,
    /// The curve passes through `(r0, t0)`.
    pub r0: T,
    pub t0: T,
    /// Minimum distance kept from `r = 2M`, in units of `M`.
    pub margin: T,
}

/// Radial null curve `t = +-(r* - r*(r0)) + t0` sampled on a uniform grid.
pub fn radial_null_geodesics<T: Real>(req: &GeodesicRequest<T>) -> Result<Vec<NullPoint<T>>> {
    let m = req.mass;
    if !(m > T::zero()) {
        return Err(Error::invalid(format!("mass must be positive, got {m}")));
    }
    if req.n_points < 2 || !(req.r_min < req.r_max) || !(req.margin >= T::zero()) {
        return Err(Error::invalid("need r_min < r_max, a nonnegative margin and at least two points"));
    }
    let rs = m + m;
    let gap = req.margin * m;
    match req.region {
        Region::Exterior if req.r_min < rs + gap || req.r_min <= rs => {
            return Err(Error::Geometry(format!("exterior range must start above 2M + margin = {}", rs + gap)));
        }
        Region::Interior if req.r_max > rs - gap || req.r_max >= rs || !(req.r_min > T::zero()) => {
            return Err(Error::Geometry(format!("interior range must lie in (0, 2M - margin = {})", rs - gap)));
        }
        _ => {}
    }
    if req.r0 < req.r_min || req.r0 > req.r_max {
        return Err(Error::Geometry("anchor radius lies outside the sampled range".into()));
    }
    let sign = match req.branch {
        NullBranch::Outgoing => T::one(),
        NullBranch::Ingoing => -T::one(),
    };
    let anchor = tortoise(req.r0, m)?;
    let steps = T::from_usize_lossy(req.n_points - 1);
    (0..req.n_points)
        .map(|k| {
            let r = if k + 1 == req.n_points {
                req.r_max
            } else {
                req.r_min + (req.r_max - req.r_min) * T::from_usize_lossy(k) / steps
            };
            let rstar = tortoise(r, m)?;
            let t = sign * (rstar - anchor) + req.t0;
            Ok(NullPoint { r, t, v: t + rstar })
        })
        .collect()
}

pub fn geodesic_table<T: Real>(points: &[NullPoint<T>]) -> Table {
    let mut table = Table::new(["r", "t", "v"]);
    for p in points {
        table.push_floats(&[p.r.to_f64_lossy(), p.t.to_f64_lossy(), p.v.to_f64_lossy()]);
    }
    table
}
