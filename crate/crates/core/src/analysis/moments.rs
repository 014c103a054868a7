use crate::error::{Error, Result};
use crate::histogram::TimeHistogram;
use crate::pointer::PulseShape;

use super::fit::FitWindow;
use super::result::Estimate;

/// Count-weighted mean of the bin centers inside `window`, minus the mean
/// delay added by the pulse. The standard error propagates the per-bin
/// variance channel.
pub fn estimate_mean_arrival(hist: &TimeHistogram, window: FitWindow, pulse: PulseShape) -> Result<Estimate> {
    let range = window.bins(hist)?;
    let counts = &hist.counts()[range.clone()];
    let total: f64 = counts.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyWindow { lo: window.lo, hi: window.hi });
    }
    let centers: Vec<f64> = range.clone().map(|i| hist.bin_center(i)).collect();
    let raw = centers.iter().zip(counts).map(|(t, n)| t * n).sum::<f64>() / total;
    let var: f64 = centers
        .iter()
        .zip(&hist.variance()[range])
        .map(|(t, v)| ((t - raw) / total).powi(2) * v)
        .sum();
    Ok(Estimate { value: raw - pulse.mean_offset(), se: var.sqrt() })
}
