use collapse_core::info::{entropies, nats_to_bits, JointDistribution};
use serde::Serialize;

use super::Experiment;
use crate::output::Output;
use crate::params::{number_rows, Info};
use crate::report::{Checks, CliResult};

impl Info {
    fn rows(&self, c: &mut Checks) -> Option<Vec<Vec<f64>>> {
        if self.joint.is_empty() {
            return number_rows(c, "table", &self.table);
        }
        let mut reader = match csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).comment(Some(b'#')).from_path(&self.joint) {
            Ok(r) => r,
            Err(e) => {
                c.push("joint", format!("cannot read {}: {e}", self.joint));
                return None;
            }
        };
        let mut rows = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = match record {
                Ok(r) => r,
                Err(e) => {
                    c.push("joint", e.to_string());
                    return None;
                }
            };
            let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(v) => rows.push(v),
                // A non-numeric first line is a header.
                Err(_) if line == 0 => {}
                Err(_) => {
                    c.push("joint", format!("row {} is not numeric", line + 1));
                    return None;
                }
            }
        }
        if rows.is_empty() {
            c.push("joint", "no numeric rows");
            return None;
        }
        Some(rows)
    }

    fn joint(&self, c: &mut Checks) -> Option<JointDistribution> {
        let rows = self.rows(c)?;
        c.core("joint", JointDistribution::from_rows(&rows))
    }
}

#[derive(Serialize)]
struct InfoSummary {
    rows: usize,
    columns: usize,
    h_x_nat: f64,
    h_y_nat: f64,
    h_xy_nat: f64,
    h_x_given_y_nat: f64,
    mutual_information_nat: f64,
    mutual_information_bit: f64,
}

impl Experiment for Info {
    const NAME: &'static str = "info";

    fn check(&self, c: &mut Checks) {
        self.joint(c);
    }

    fn run(&self, _seed: u64, out: &mut Output) -> CliResult<()> {
        let mut c = Checks::default();
        let j = self.joint(&mut c);
        c.finish()?;
        let j = j.expect("checked");
        let e = entropies(&j);
        let (rows, columns) = j.shape();
        out.summary(&InfoSummary {
            rows,
            columns,
            h_x_nat: e.h_x,
            h_y_nat: e.h_y,
            h_xy_nat: e.h_xy,
            h_x_given_y_nat: e.h_x_given_y,
            mutual_information_nat: e.mutual,
            mutual_information_bit: nats_to_bits(e.mutual),
        });
        Ok(())
    }
}
