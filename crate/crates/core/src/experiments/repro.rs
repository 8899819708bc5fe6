use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use super::{ExperimentError, Quantity, Scenario};
use crate::format::sig6;
use crate::sim::{self, Estimates};

/// One estimate compared against one reference value.
#[derive(Debug, Clone, PartialEq)]
pub struct ReproRow {
    pub case: String,
    pub quantity: Quantity,
    pub reference: f64,
    pub estimate: f64,
    pub half_width: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproReport {
    pub scenario: Scenario,
    /// Measured cycles per case, warmup excluded.
    pub cycles: u64,
    pub rows: Vec<ReproRow>,
    /// Full estimates per case, in case order.
    pub estimates: Vec<(String, Estimates)>,
}

impl ReproReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub const HEADER: [&'static str; 8] =
        ["case", "quantity", "reference", "estimate", "half_width", "tolerance", "pass", "source"];

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.case.clone(),
                r.quantity.to_string(),
                sig6(r.reference),
                sig6(r.estimate),
                sig6(r.half_width),
                sig6(r.tolerance),
                r.pass.to_string(),
                r.source.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for ReproReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} ({} cycles per case)", self.scenario, self.cycles)?;
        for r in &self.rows {
            writeln!(
                f,
                "{} {:<16} {:<3} estimate {:.4} ± {:.4}  reference {:.4} ± {}  [{}]",
                if r.pass { "PASS" } else { "FAIL" },
                r.case,
                r.quantity.to_string(),
                r.estimate,
                r.half_width,
                r.reference,
                r.tolerance,
                r.source
            )?;
        }
        Ok(())
    }
}

/// Simulate every case of `scenario` for `cycles` measured cycles (after a
/// further 1% of warmup) and compare with the reference values. Cases run in
/// parallel and share `seed`.
pub fn repro(scenario: Scenario, cycles: u64, seed: u64) -> Result<ReproReport, ExperimentError> {
    let warmup = cycles / 100;
    let cases = scenario.cases();
    let estimates = cases
        .par_iter()
        .map(|c| sim::run(&c.params, cycles + warmup, warmup, seed).map(|(e, _)| (c.id.clone(), e)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for (case, (_, est)) in cases.iter().zip(&estimates) {
        for r in &case.references {
            let (estimate, half_width) = match r.quantity {
                Quantity::P => (est.p, est.half_width.p),
                Quantity::U4 => (est.u4, est.half_width.u4),
            };
            rows.push(ReproRow {
                case: case.id.clone(),
                quantity: r.quantity,
                reference: r.value,
                estimate,
                half_width,
                tolerance: r.tolerance,
                pass: r.accepts(estimate),
                source: r.source.clone(),
            });
        }
    }
    Ok(ReproReport { scenario, cycles, rows, estimates })
}
