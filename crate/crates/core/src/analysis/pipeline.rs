//! The complete reduction chain from clicks to an [`AnalysisResult`]:
//! afterpulse filter, histogram, dead-time correction, eps = 0 reference
//! fits, background subtraction, model fits and the mean arrival time.

use crate::error::{Error, Result};
use crate::histogram::TimeHistogram;
use crate::pointer::VSystemParams;
use crate::sim::EventStream;

use super::afterpulse::filter_afterpulses;
use super::deadtime::deadtime_correct;
use super::fit::{fit_free_gamma, fit_reference, fit_scale_only, subtract_background, FitWindow, ReferenceFit};
use super::moments::estimate_mean_arrival;
use super::result::AnalysisResult;
use super::smooth::smooth_gaussian;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub bin_width: f64,
    /// Moment and scale-fit window; `[0, 20/gamma]` when unset.
    pub window: Option<FitWindow>,
    /// Minimum gap between kept clicks; `None` skips the filter.
    pub afterpulse_cutoff: Option<f64>,
    /// Dead time assumed by the correction; `None` skips it.
    pub effective_dead: Option<f64>,
    pub free_gamma: bool,
    /// Display filter FWHM; `None` skips it.
    pub smoothing_fwhm: Option<f64>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            bin_width: 100e-12,
            window: None,
            afterpulse_cutoff: Some(115e-9),
            effective_dead: Some(115e-9),
            free_gamma: true,
            smoothing_fwhm: Some(4.2e-9),
        }
    }
}

impl PipelineOptions {
    /// No filtering and no correction, for data from an ideal detector.
    pub fn ideal() -> Self {
        Self { afterpulse_cutoff: None, effective_dead: None, ..Self::default() }
    }

    pub fn moment_window(&self, params: &VSystemParams) -> FitWindow {
        self.window.unwrap_or(FitWindow::new(0.0, 20.0 / params.gamma()))
    }
}

/// Every intermediate histogram, cropped to the analysis window.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub raw: TimeHistogram,
    pub corrected: TimeHistogram,
    pub subtracted: TimeHistogram,
    pub smoothed: Option<TimeHistogram>,
    pub references: Option<[ReferenceFit; 2]>,
    /// Clicks removed by the afterpulse filter in the data run.
    pub filtered_out: usize,
    pub result: AnalysisResult,
}

/// Raw and corrected histograms of one run.
struct Prepared {
    raw: TimeHistogram,
    corrected: TimeHistogram,
    filtered_out: usize,
}

fn crop_bins(options: &PipelineOptions, params: &VSystemParams) -> usize {
    (options.moment_window(params).hi / options.bin_width - 1e-9).ceil() as usize
}

fn prepare_events(stream: &EventStream, params: &VSystemParams, options: &PipelineOptions) -> Result<Prepared> {
    let kept = match options.afterpulse_cutoff {
        Some(cutoff) => filter_afterpulses(stream, cutoff).map_err(|e| e.in_stage("filter"))?,
        None => stream.clone(),
    };
    let filtered_out = stream.len() - kept.len();
    let full = kept.histogram(options.bin_width, stream.rep_period()).map_err(|e| e.in_stage("histogram"))?;
    let mut prepared = prepare_histogram(&full, params, options, Some(stream.rep_period()))?;
    prepared.filtered_out = filtered_out;
    Ok(prepared)
}

fn prepare_histogram(
    full: &TimeHistogram,
    params: &VSystemParams,
    options: &PipelineOptions,
    rep_period: Option<f64>,
) -> Result<Prepared> {
    let n = crop_bins(options, params);
    if n > full.len() {
        return Err(Error::EmptyWindow { lo: 0.0, hi: options.moment_window(params).hi }.in_stage("histogram"));
    }
    let corrected = match (options.effective_dead, full.corrections()) {
        (Some(dead), None) => {
            let rep = rep_period.ok_or_else(|| {
                Error::invalid("rep_period", "dead-time correction needs the repetition period").in_stage("deadtime")
            })?;
            deadtime_correct(full, dead, rep).map_err(|e| e.in_stage("deadtime"))?
        }
        _ => full.clone(),
    };
    Ok(Prepared { raw: full.truncated(n), corrected: corrected.truncated(n), filtered_out: 0 })
}

/// Runs the chain on click streams. With references, their incoherent
/// background is removed from the data before fitting.
pub fn analyze_events(
    data: &EventStream,
    references: Option<(&EventStream, &EventStream)>,
    params: &VSystemParams,
    options: &PipelineOptions,
) -> Result<PipelineOutput> {
    let prepared = prepare_events(data, params, options)?;
    let refs = match references {
        Some((a, b)) => Some([prepare_events(a, params, options)?, prepare_events(b, params, options)?]),
        None => None,
    };
    finish(prepared, refs, params, options)
}

/// Runs the chain on histograms. Uncorrected histograms are dead-time
/// corrected when both `options.effective_dead` and `rep_period` are given;
/// the histograms must then span the whole period.
pub fn analyze_histograms(
    data: &TimeHistogram,
    references: Option<(&TimeHistogram, &TimeHistogram)>,
    params: &VSystemParams,
    options: &PipelineOptions,
    rep_period: Option<f64>,
) -> Result<PipelineOutput> {
    let mut options = options.clone();
    if rep_period.is_none() {
        options.effective_dead = None;
    }
    let prepared = prepare_histogram(data, params, &options, rep_period)?;
    let refs = match references {
        Some((a, b)) => Some([
            prepare_histogram(a, params, &options, rep_period)?,
            prepare_histogram(b, params, &options, rep_period)?,
        ]),
        None => None,
    };
    finish(prepared, refs, params, &options)
}

fn finish(
    data: Prepared,
    refs: Option<[Prepared; 2]>,
    params: &VSystemParams,
    options: &PipelineOptions,
) -> Result<PipelineOutput> {
    let references = match &refs {
        Some([a, b]) => {
            let fit = |p: &Prepared| fit_reference(&p.corrected, params).map_err(|e| e.in_stage("reference"));
            Some([fit(a)?, fit(b)?])
        }
        None => None,
    };
    let subtracted = match &references {
        Some([a, b]) => subtract_background(&data.corrected, a, b).map_err(|e| e.in_stage("subtract"))?,
        None => data.corrected.clone(),
    };
    let window = options.moment_window(params);
    let mut result = fit_scale_only(&subtracted, params, Some(window)).map_err(|e| e.in_stage("fit"))?;
    if options.free_gamma {
        let tail = fit_free_gamma(&subtracted, params, None).map_err(|e| e.in_stage("fit"))?;
        result.gamma_eff = tail.gamma_eff;
    }
    result.mean_arrival =
        Some(estimate_mean_arrival(&subtracted, window, params.pulse()).map_err(|e| e.in_stage("moments"))?);
    result.background_fraction =
        references.as_ref().map(|[a, b]| 0.5 * (a.background_fraction() + b.background_fraction()));
    let smoothed = match options.smoothing_fwhm {
        Some(w) => Some(smooth_gaussian(&subtracted, w).map_err(|e| e.in_stage("smooth"))?),
        None => None,
    };
    Ok(PipelineOutput {
        raw: data.raw,
        corrected: data.corrected,
        subtracted,
        smoothed,
        references,
        filtered_out: data.filtered_out,
        result,
    })
}
