use collapse_core::blackhole::{
    geodesic_table, hawking_thermo, horizons, radial_null_geodesics, smarr_coefficients, BlackHoleParams, GeodesicRequest, NullBranch,
    Region as CoreRegion,
};
use collapse_core::table::{Cell, Table};
use serde::Serialize;

use super::Experiment;
use crate::output::Output;
use crate::params::{BlackHole, Geodesics, Region};
use crate::report::{Checks, CliResult, Context};

impl BlackHole {
    fn params(&self) -> collapse_core::Result<BlackHoleParams> {
        if self.a.is_nan() {
            BlackHoleParams::from_angular_momentum(self.m, self.q, self.l)
        } else {
            BlackHoleParams::new(self.m, self.q, self.a)
        }
    }
}

#[derive(Serialize)]
struct Smarr {
    tension: f64,
    omega: f64,
    phi: f64,
}

#[derive(Serialize)]
struct BlackHoleSummary {
    mass: f64,
    charge: f64,
    spin: f64,
    angular_momentum: f64,
    discriminant: f64,
    extremal: bool,
    r_plus: f64,
    r_minus: f64,
    area: f64,
    irreducible_mass: f64,
    surface_gravity: f64,
    temperature: f64,
    entropy: f64,
    smarr: Smarr,
}

impl Experiment for BlackHole {
    const NAME: &'static str = "blackhole";

    fn check(&self, c: &mut Checks) {
        if let Some(p) = c.core("discriminant", self.params()) {
            c.core("discriminant", horizons(&p));
        }
    }

    fn run(&self, _seed: u64, out: &mut Output) -> CliResult<()> {
        let p = self.params().ctx("discriminant")?;
        let h = hawking_thermo(&p).ctx("discriminant")?;
        let s = smarr_coefficients(&p).ctx("smarr")?;
        out.summary(&BlackHoleSummary {
            mass: p.mass,
            charge: p.charge,
            spin: p.spin,
            angular_momentum: p.angular_momentum(),
            discriminant: p.discriminant(),
            extremal: p.is_extremal(),
            r_plus: h.r_plus,
            r_minus: h.r_minus,
            area: h.area,
            irreducible_mass: h.irreducible_mass,
            surface_gravity: h.surface_gravity,
            temperature: h.temperature,
            entropy: h.entropy,
            smarr: Smarr { tension: s.tension, omega: s.omega, phi: s.phi },
        });
        Ok(())
    }
}

impl Geodesics {
    fn request(&self, branch: NullBranch) -> GeodesicRequest {
        GeodesicRequest {
            mass: self.m,
            r_min: self.r_min * self.m,
            r_max: self.r_max * self.m,
            n_points: self.points as usize,
            branch,
            region: match self.region {
                Region::Exterior => CoreRegion::Exterior,
                Region::Interior => CoreRegion::Interior,
            },
            r0: self.r0 * self.m,
            t0: self.t0 * self.m,
            margin: self.margin,
        }
    }
}

const BRANCHES: [(NullBranch, &str); 2] = [(NullBranch::Ingoing, "ingoing"), (NullBranch::Outgoing, "outgoing")];

#[derive(Serialize)]
struct GeodesicsSummary {
    curves: usize,
    points_per_curve: u64,
    horizon_radius: f64,
}

impl Experiment for Geodesics {
    const NAME: &'static str = "geodesics";

    fn check(&self, c: &mut Checks) {
        c.at_least("points", self.points, 2);
        c.core("geometry", radial_null_geodesics(&self.request(NullBranch::Ingoing)));
    }

    fn run(&self, _seed: u64, out: &mut Output) -> CliResult<()> {
        let mut t = Table::new(["branch", "r", "t", "v"]);
        for (branch, name) in BRANCHES {
            let pts = radial_null_geodesics(&self.request(branch)).ctx("geometry")?;
            for row in geodesic_table(&pts).rows() {
                let mut cells = vec![Cell::Text(name.into())];
                cells.extend(row.iter().cloned());
                t.push(cells);
            }
        }
        out.table("curves", &t.with_units(&["1", "geom", "geom", "geom"]));
        out.summary(&GeodesicsSummary { curves: BRANCHES.len(), points_per_curve: self.points, horizon_radius: 2.0 * self.m });
        Ok(())
    }
}
