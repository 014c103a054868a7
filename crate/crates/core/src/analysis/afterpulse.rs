use crate::error::{Error, Result};
use crate::sim::{EventRecord, EventStream};

/// Drops every click that follows its immediate predecessor in the raw
/// stream by less than `cutoff` seconds.
///
/// The gap is measured to the previous raw click, retained or not, so an
/// afterpulse that follows a dropped afterpulse is dropped too. Survivors are
/// separated by at least `cutoff`, which then acts as the effective dead time.
pub fn filter_afterpulses(stream: &EventStream, cutoff: f64) -> Result<EventStream> {
    let ticks = cutoff_ticks(cutoff, stream.tick())?;
    Ok(stream.with_events(filter_ticks(&stream.events, ticks)?))
}

fn cutoff_ticks(cutoff: f64, tick: f64) -> Result<u64> {
    if !(cutoff.is_finite() && cutoff >= 0.0) {
        return Err(Error::invalid("cutoff", format!("must be >= 0, got {cutoff}")));
    }
    // smallest whole-tick gap that is not below the cutoff
    Ok((cutoff / tick - 1e-9).ceil().max(0.0) as u64)
}

/// Tick-level form of [`filter_afterpulses`].
pub fn filter_ticks(events: &[EventRecord], cutoff_ticks: u64) -> Result<Vec<EventRecord>> {
    EventStream::check_order(events)?;
    let mut out = Vec::with_capacity(events.len());
    let mut prev: Option<u64> = None;
    for e in events {
        if prev.is_none_or(|p| e.t_abs - p >= cutoff_ticks) {
            out.push(*e);
        }
        prev = Some(e.t_abs);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::EventTag;

    fn stream(times: &[u64]) -> EventStream {
        let events = times.iter().map(|&t| EventRecord::from_abs(t, 10_000, EventTag::Signal)).collect();
        EventStream { tick_ps: 100, rep_ticks: 10_000, n_shots: 100, events }
    }

    fn times(s: &EventStream) -> Vec<u64> {
        s.events.iter().map(|e| e.t_abs).collect()
    }

    #[test]
    fn wide_gaps_pass_through() {
        let s = stream(&[0, 2000, 4000, 9000]);
        assert_eq!(filter_afterpulses(&s, 115e-9).unwrap(), s);
    }

    #[test]
    fn gap_is_measured_to_the_previous_raw_click() {
        // 60 ns, 60 ns: the third click is 60 ns after the dropped second one
        let s = stream(&[0, 600, 1200]);
        assert_eq!(times(&filter_afterpulses(&s, 115e-9).unwrap()), vec![0]);
    }

    #[test]
    fn gap_equal_to_cutoff_survives() {
        let s = stream(&[0, 1150, 2299]);
        assert_eq!(times(&filter_afterpulses(&s, 115e-9).unwrap()), vec![0, 1150]);
    }

    #[test]
    fn unordered_input_is_an_error() {
        let s = stream(&[10, 5]);
        assert!(matches!(filter_afterpulses(&s, 115e-9), Err(Error::UnorderedEvents { index: 1 })));
    }
}
