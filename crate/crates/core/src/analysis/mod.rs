//! Data reduction: from detector clicks to the mean arrival time and decay
//! rate, plus the Cramer-Rao bound on the Zeeman shift.

mod afterpulse;
mod crlb;
mod deadtime;
mod fit;
mod moments;
mod pipeline;
mod result;
mod smooth;

pub use afterpulse::{filter_afterpulses, filter_ticks};
pub use crlb::{crlb_sensitivity, fisher_information};
pub use deadtime::deadtime_correct;
pub use fit::{
    fit_free_gamma, fit_reference, fit_scale_only, subtract_background, tail_window, FitWindow, ReferenceFit,
    STABILITY_LIMIT,
};
pub use moments::estimate_mean_arrival;
pub use pipeline::{analyze_events, analyze_histograms, PipelineOptions, PipelineOutput};
pub use result::{AnalysisResult, Estimate};
pub use smooth::smooth_gaussian;
