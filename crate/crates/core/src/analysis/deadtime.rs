use crate::error::{Error, Result};
use crate::histogram::TimeHistogram;

const SATURATION: f64 = 0.99;

/// Per-bin dead-time correction for a histogram of clicks separated by at
/// least `effective_dead`.
///
/// The probability that the detector is dead in bin `i` is the number of
/// clicks per shot in the preceding `effective_dead`, wrapping into the
/// previous shot. Bins of the repetition period not covered by the histogram
/// contribute nothing, so pass a histogram spanning the whole period and crop
/// afterwards.
pub fn deadtime_correct(hist: &TimeHistogram, effective_dead: f64, rep_period: f64) -> Result<TimeHistogram> {
    if hist.corrections().is_some() {
        return Err(Error::Incompatible("histogram is already dead-time corrected".into()));
    }
    if !(effective_dead >= 0.0 && effective_dead < rep_period) {
        return Err(Error::invalid("effective_dead", format!("must lie in [0, rep_period), got {effective_dead}")));
    }
    if hist.n_shots() == 0 {
        return Err(Error::invalid("n_shots", "cannot normalize occupancy without shots"));
    }
    let bin = hist.bin_width();
    let rep_bins = (rep_period / bin).round() as usize;
    if rep_bins < hist.len() {
        return Err(Error::invalid("rep_period", "histogram is longer than the repetition period"));
    }
    let dead_bins = (effective_dead / bin).round() as usize;
    let shots = hist.n_shots() as f64;

    // occupancy over one full period, zero past the histogram
    let counts = hist.counts();
    let occ = |j: usize| counts.get(j).copied().unwrap_or(0.0);
    let mut window: f64 = (rep_bins - dead_bins..rep_bins).map(occ).sum();

    let mut factors = Vec::with_capacity(hist.len());
    for i in 0..hist.len() {
        let dead = window / shots;
        if dead >= SATURATION {
            return Err(Error::Saturation { bin: i, occupancy: dead });
        }
        factors.push(1.0 / (1.0 - dead.max(0.0)));
        if dead_bins > 0 {
            window += occ(i) - occ((i + rep_bins - dead_bins) % rep_bins);
        }
    }
    let corrected = TimeHistogram::with_variance(
        bin,
        counts.iter().zip(&factors).map(|(c, f)| c * f).collect(),
        hist.variance().iter().zip(&factors).map(|(v, f)| v * f * f).collect(),
        hist.n_shots(),
    )?;
    Ok(corrected.with_corrections(factors))
}
