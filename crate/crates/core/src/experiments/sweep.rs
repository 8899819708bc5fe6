use std::io::Write;

use rayon::prelude::*;
use serde_json::Value;

use super::{config::config_from_value, simulate, ExperimentError, SimulationSummary};
use crate::format::sig6;
use crate::model::derive_quantities;
use crate::stability::check;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Simulate each point and report estimates with half-widths.
    Simulate,
    /// Classify each point with the closed-form conditions.
    Stability,
}

/// Replace the number at dotted `path` (array elements by index, e.g.
/// `queues.1.interarrival.mean`) with `value`.
pub fn set_path(doc: &mut Value, path: &str, value: f64) -> Result<(), ExperimentError> {
    let bad = |reason: &str| ExperimentError::BadAxis { path: path.to_string(), reason: reason.to_string() };
    let mut node = doc;
    for seg in path.split('.') {
        node = match node {
            Value::Object(map) => map.get_mut(seg).ok_or_else(|| bad(&format!("no key {seg:?}")))?,
            Value::Array(items) => {
                let i: usize = seg.parse().map_err(|_| bad(&format!("{seg:?} is not an array index")))?;
                items.get_mut(i).ok_or_else(|| bad(&format!("index {i} out of range")))?
            }
            _ => return Err(bad(&format!("cannot descend into a scalar at {seg:?}"))),
        };
    }
    if !node.is_number() {
        return Err(bad("target is not a number"));
    }
    let replacement = if node.is_u64() && value >= 0.0 && value.fract() == 0.0 && value <= u64::MAX as f64 {
        Value::from(value as u64)
    } else {
        serde_json::Number::from_f64(value).map(Value::Number).ok_or_else(|| bad("value is not finite"))?
    };
    *node = replacement;
    Ok(())
}

fn stability_row(doc: Value) -> Result<Vec<(String, String)>, ExperimentError> {
    let config = config_from_value(doc)?;
    let derived = derive_quantities(&config.params)?;
    Ok(check(&derived, &config.params.limits)?.to_record())
}

/// Evaluate `base` at every value of `axis` and write one CSV row per value,
/// in input order. Simulations reuse the base seed, so rows share random numbers.
pub fn sweep<W: Write>(base: &Value, axis: &str, values: &[f64], mode: SweepMode, out: W) -> Result<(), ExperimentError> {
    // Validate the axis even when there are no values.
    set_path(&mut base.clone(), axis, 1.0)?;
    let mut w = csv::Writer::from_writer(out);
    match mode {
        SweepMode::Simulate => {
            let rows = values
                .par_iter()
                .map(|&v| {
                    let mut doc = base.clone();
                    set_path(&mut doc, axis, v)?;
                    let config = config_from_value(doc)?;
                    simulate(&config.params, &config.run)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut header = vec!["value"];
            header.extend(SimulationSummary::HEADER);
            w.write_record(&header)?;
            for (v, row) in values.iter().zip(rows) {
                let mut fields = vec![sig6(*v)];
                fields.extend(row.fields());
                w.write_record(&fields)?;
            }
        }
        SweepMode::Stability => {
            let header = stability_row(base.clone())?;
            let rows = values
                .iter()
                .map(|&v| {
                    let mut doc = base.clone();
                    set_path(&mut doc, axis, v)?;
                    stability_row(doc)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut names = vec!["value".to_string()];
            names.extend(header.into_iter().map(|(k, _)| k));
            w.write_record(&names)?;
            for (v, row) in values.iter().zip(rows) {
                let mut fields = vec![sig6(*v)];
                fields.extend(row.into_iter().map(|(_, x)| x));
                w.write_record(&fields)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
