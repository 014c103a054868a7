//! C ABI for weakbeam.
//!
//! Every function returns a [`WbStatus`]; on failure the message is
//! available from [`wb_last_error_message`] on the same thread. Objects are
//! opaque handles released with their `_free` function. Rates are angular
//! (rad/s) and times are in seconds throughout.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use weakbeam::analysis::{analyze_events, crlb_sensitivity, FitWindow, PipelineOptions};
use weakbeam::pointer::{PointerModel, PulseShape, VSystemParams};
use weakbeam::sim::{run_simulation, DetectorConfig, EventStream, SimConfig};
use weakbeam::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Degenerate = 3,
    Pipeline = 4,
    Io = 5,
    Format = 6,
    OutOfRange = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> WbStatus {
    match e {
        Error::InvalidParameter { .. } | Error::Validation { .. } | Error::ConfigParse { .. } => WbStatus::InvalidParameter,
        Error::DegenerateDistribution | Error::OrthogonalStates { .. } => WbStatus::Degenerate,
        Error::Io { .. } => WbStatus::Io,
        Error::Format { .. } => WbStatus::Format,
        _ => WbStatus::Pipeline,
    }
}

fn fail(status: WbStatus, msg: impl Into<String>) -> WbStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, recording errors and turning panics into [`WbStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), WbStatus>) -> WbStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WbStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(WbStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: weakbeam::Result<T>) -> Result<T, WbStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<'a, T>(p: *const T, name: &str) -> Result<&'a T, WbStatus> {
    // SAFETY: callers pass pointers obtained from this library or valid
    // for reads of T; null is rejected here.
    unsafe { p.as_ref() }.ok_or_else(|| fail(WbStatus::NullPointer, format!("`{name}` is null")))
}

fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, WbStatus> {
    // SAFETY: as in `non_null`, for writes.
    unsafe { p.as_mut() }.ok_or_else(|| fail(WbStatus::NullPointer, format!("`{name}` is null")))
}

fn path_arg(p: *const c_char) -> Result<PathBuf, WbStatus> {
    if p.is_null() {
        return Err(fail(WbStatus::NullPointer, "`path` is null"));
    }
    // SAFETY: non-null and NUL-terminated per the API contract.
    let s = unsafe { CStr::from_ptr(p) };
    s.to_str().map(PathBuf::from).map_err(|_| fail(WbStatus::InvalidParameter, "path is not valid UTF-8"))
}

/// Message of the last failed call on this thread, or NULL after a
/// successful one. The pointer stays valid until the next call into this
/// library from the same thread.
#[no_mangle]
pub extern "C" fn wb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Physical parameters of the V system.
pub struct WbParams(VSystemParams);

/// Creates a parameter set. `pulse_duration` of 0 means impulsive
/// excitation, otherwise a square pulse of that length.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wb_params_new(
    gamma: f64,
    delta: f64,
    epsilon: f64,
    pulse_duration: f64,
    out: *mut *mut WbParams,
) -> WbStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let pulse = lift(PulseShape::from_duration(pulse_duration))?;
        let p = lift(VSystemParams::new(gamma, delta, epsilon, pulse))?;
        *out = Box::into_raw(Box::new(WbParams(p)));
        Ok(())
    })
}

/// # Safety
/// `params` must be NULL or a handle from [`wb_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wb_params_free(params: *mut WbParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

fn with_model(params: *const WbParams, out: *mut f64, f: impl FnOnce(&PointerModel) -> f64) -> WbStatus {
    guard(|| {
        let p = non_null(params, "params")?;
        let out = out_ptr(out, "out")?;
        let model = lift(PointerModel::new(&p.0))?;
        *out = f(&model);
        Ok(())
    })
}

/// Exact mean emission time for impulsive excitation, s.
///
/// # Safety
/// `params` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wb_mean_arrival_time(params: *const WbParams, out: *mut f64) -> WbStatus {
    with_model(params, out, PointerModel::mean)
}

/// Postselection probability.
///
/// # Safety
/// `params` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wb_acceptance(params: *const WbParams, out: *mut f64) -> WbStatus {
    with_model(params, out, PointerModel::acceptance)
}

/// Normalized emission density at `t`, 1/s, without the pulse.
///
/// # Safety
/// `params` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wb_pdf(params: *const WbParams, t: f64, out: *mut f64) -> WbStatus {
    with_model(params, out, |m| m.pdf(t))
}

/// Emission density at `t` convolved with the excitation pulse, 1/s.
///
/// # Safety
/// `params` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wb_convolved_pdf(params: *const WbParams, t: f64, out: *mut f64) -> WbStatus {
    with_model(params, out, |m| m.convolved_pdf(t))
}

/// Cramer-Rao bound on the cyclic Zeeman shift in Hz/sqrt(Hz) at
/// `count_rate` detected photons per second; +infinity at insensitive points.
///
/// # Safety
/// `params` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wb_crlb_sensitivity(params: *const WbParams, count_rate: f64, out: *mut f64) -> WbStatus {
    guard(|| {
        let p = non_null(params, "params")?;
        let out = out_ptr(out, "out")?;
        *out = lift(crlb_sensitivity(&p.0, count_rate))?;
        Ok(())
    })
}

/// Simulation settings besides the physics.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WbSimOptions {
    pub n_shots: u64,
    pub rep_period: f64,
    pub detect_prob: f64,
    pub background_fraction: f64,
    pub seed: u64,
    pub detector_enabled: bool,
    pub dead_time: f64,
    pub afterpulse_prob: f64,
    /// Digitizer tick, s.
    pub bin_width: f64,
}

/// Library defaults for `n_shots` shots.
#[no_mangle]
pub extern "C" fn wb_sim_options_default(n_shots: u64) -> WbSimOptions {
    let d = DetectorConfig::default();
    WbSimOptions {
        n_shots,
        rep_period: 1e-6,
        detect_prob: 0.01,
        background_fraction: 0.0,
        seed: 1,
        detector_enabled: d.enabled,
        dead_time: d.dead_time,
        afterpulse_prob: d.afterpulse_prob,
        bin_width: d.bin_width,
    }
}

/// Detector clicks from one simulated or loaded run.
pub struct WbEvents(EventStream);

/// One click as seen through the C interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WbEvent {
    pub shot_index: u64,
    /// Time since the trigger, s.
    pub t_rel: f64,
    /// 0 signal, 1 background, 2 afterpulse.
    pub tag: u8,
}

/// Runs the Monte Carlo.
///
/// # Safety
/// `params` must be a live handle, `options` valid for reads and `out`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wb_simulate(
    params: *const WbParams,
    options: *const WbSimOptions,
    out: *mut *mut WbEvents,
) -> WbStatus {
    guard(|| {
        let p = non_null(params, "params")?;
        let o = non_null(options, "options")?;
        let out = out_ptr(out, "out")?;
        let config = SimConfig {
            physics: p.0,
            n_shots: o.n_shots,
            rep_period: o.rep_period,
            detect_prob: o.detect_prob,
            background_fraction: o.background_fraction,
            rng_seed: o.seed,
            detector: DetectorConfig {
                dead_time: o.dead_time,
                afterpulse_prob: o.afterpulse_prob,
                bin_width: o.bin_width,
                enabled: o.detector_enabled,
            },
        };
        let stream = lift(run_simulation(&config))?;
        *out = Box::into_raw(Box::new(WbEvents(stream)));
        Ok(())
    })
}

/// Loads a WBEV event file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wb_events_read(path: *const c_char, out: *mut *mut WbEvents) -> WbStatus {
    guard(|| {
        let path = path_arg(path)?;
        let out = out_ptr(out, "out")?;
        let stream = lift(EventStream::read_binary(&path))?;
        *out = Box::into_raw(Box::new(WbEvents(stream)));
        Ok(())
    })
}

/// Writes a WBEV event file.
///
/// # Safety
/// `events` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wb_events_write(events: *const WbEvents, path: *const c_char) -> WbStatus {
    guard(|| {
        let e = non_null(events, "events")?;
        let path = path_arg(path)?;
        lift(e.0.write_binary(&path))
    })
}

/// Number of clicks; 0 for a NULL handle.
///
/// # Safety
/// `events` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wb_events_len(events: *const WbEvents) -> usize {
    events.as_ref().map_or(0, |e| e.0.len())
}

/// Copies click `index` into `out`.
///
/// # Safety
/// `events` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wb_events_get(events: *const WbEvents, index: usize, out: *mut WbEvent) -> WbStatus {
    guard(|| {
        let e = non_null(events, "events")?;
        let out = out_ptr(out, "out")?;
        let rec = e.0.events.get(index).ok_or_else(|| {
            fail(WbStatus::OutOfRange, format!("index {index} out of range for {} events", e.0.len()))
        })?;
        *out = WbEvent { shot_index: rec.shot_index, t_rel: rec.t_rel as f64 * e.0.tick(), tag: rec.tag as u8 };
        Ok(())
    })
}

/// # Safety
/// `events` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wb_events_free(events: *mut WbEvents) {
    if !events.is_null() {
        drop(Box::from_raw(events));
    }
}

/// Reduction settings. Negative or NaN cutoff, dead time or smoothing width
/// disables that step; `window_hi <= window_lo` selects `[0, 20/gamma]`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WbAnalysisOptions {
    pub bin_width: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub afterpulse_cutoff: f64,
    pub effective_dead: f64,
    pub free_gamma: bool,
    pub smoothing_fwhm: f64,
}

#[no_mangle]
pub extern "C" fn wb_analysis_options_default() -> WbAnalysisOptions {
    let d = PipelineOptions::default();
    WbAnalysisOptions {
        bin_width: d.bin_width,
        window_lo: 0.0,
        window_hi: 0.0,
        afterpulse_cutoff: d.afterpulse_cutoff.unwrap_or(-1.0),
        effective_dead: d.effective_dead.unwrap_or(-1.0),
        free_gamma: d.free_gamma,
        smoothing_fwhm: d.smoothing_fwhm.unwrap_or(-1.0),
    }
}

impl WbAnalysisOptions {
    fn to_pipeline(self) -> PipelineOptions {
        let on = |x: f64| (x >= 0.0).then_some(x);
        PipelineOptions {
            bin_width: self.bin_width,
            window: (self.window_hi > self.window_lo).then(|| FitWindow::new(self.window_lo, self.window_hi)),
            afterpulse_cutoff: on(self.afterpulse_cutoff),
            effective_dead: on(self.effective_dead),
            free_gamma: self.free_gamma,
            smoothing_fwhm: on(self.smoothing_fwhm).filter(|&w| w > 0.0),
        }
    }
}

/// Outcome of an analysis. Quantities that were not computed are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WbAnalysisResult {
    pub scale: f64,
    pub scale_se: f64,
    pub gamma_eff: f64,
    pub gamma_eff_se: f64,
    pub mean_arrival: f64,
    pub mean_arrival_se: f64,
    pub chi2_reduced: f64,
    pub background_fraction: f64,
}

/// Full reduction of `data`. `reference_before` and `reference_after`
/// are eps = 0 runs used for background subtraction; pass both or neither.
///
/// # Safety
/// Handles must be live or NULL as described; `options` valid for reads;
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wb_analyze(
    data: *const WbEvents,
    reference_before: *const WbEvents,
    reference_after: *const WbEvents,
    params: *const WbParams,
    options: *const WbAnalysisOptions,
    out: *mut WbAnalysisResult,
) -> WbStatus {
    guard(|| {
        let d = non_null(data, "data")?;
        let p = non_null(params, "params")?;
        let o = non_null(options, "options")?;
        let out = out_ptr(out, "out")?;
        let refs = match (reference_before.as_ref(), reference_after.as_ref()) {
            (Some(a), Some(b)) => Some((&a.0, &b.0)),
            (None, None) => None,
            _ => return Err(fail(WbStatus::NullPointer, "pass both references or neither")),
        };
        let r = lift(analyze_events(&d.0, refs, &p.0, &o.to_pipeline()))?.result;
        let split = |e: Option<weakbeam::analysis::Estimate>| e.map_or((f64::NAN, f64::NAN), |e| (e.value, e.se));
        let (g, gse) = split(r.gamma_eff);
        let (m, mse) = split(r.mean_arrival);
        *out = WbAnalysisResult {
            scale: r.scale.value,
            scale_se: r.scale.se,
            gamma_eff: g,
            gamma_eff_se: gse,
            mean_arrival: m,
            mean_arrival_se: mse,
            chi2_reduced: r.chi2_reduced,
            background_fraction: r.background_fraction.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}
