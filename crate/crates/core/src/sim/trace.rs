use std::io::Write;

use super::engine::{CumulativeRecord, Event, Observer, SimState, SATURATED};
use crate::format::sig6;

/// Observer that writes one CSV row per event:
/// `event_time,event_kind,station,Q1,Q2,Q3,cycle_index,cycle_type`.
///
/// Write errors are held until [`TraceWriter::finish`].
pub struct TraceWriter<W: Write> {
    out: csv::Writer<W>,
    error: Option<csv::Error>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Result<Self, csv::Error> {
        let mut out = csv::Writer::from_writer(out);
        out.write_record(["event_time", "event_kind", "station", "Q1", "Q2", "Q3", "cycle_index", "cycle_type"])?;
        Ok(Self { out, error: None })
    }

    pub fn finish(mut self) -> Result<W, csv::Error> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        self.out.into_inner().map_err(|e| csv::Error::from(e.into_error()))
    }
}

fn level(q: u64) -> String {
    if q == SATURATED {
        "inf".into()
    } else {
        q.to_string()
    }
}

impl<W: Write> Observer for TraceWriter<W> {
    fn on_event(&mut self, event: &Event, state: &SimState, _record: &CumulativeRecord) {
        if self.error.is_some() {
            return;
        }
        let row = [
            sig6(state.clock),
            event.kind().to_string(),
            event.station().to_string(),
            level(state.q[0]),
            level(state.q[1]),
            level(state.q[2]),
            state.cycle_index.to_string(),
            state.cycle_type.to_string(),
        ];
        if let Err(e) = self.out.write_record(row) {
            self.error = Some(e);
        }
    }
}
