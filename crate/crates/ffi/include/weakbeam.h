/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef WEAKBEAM_H
#define WEAKBEAM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  WB_STATUS_OK = 0,
  WB_STATUS_NULL_POINTER = 1,
  WB_STATUS_INVALID_PARAMETER = 2,
  WB_STATUS_DEGENERATE = 3,
  WB_STATUS_PIPELINE = 4,
  WB_STATUS_IO = 5,
  WB_STATUS_FORMAT = 6,
  WB_STATUS_OUT_OF_RANGE = 7,
  WB_STATUS_PANIC = 8,
} WbStatus;

// Detector clicks from one simulated or loaded run.
typedef struct WbEvents WbEvents;

// Physical parameters of the V system.
typedef struct WbParams WbParams;

// Simulation settings besides the physics.
typedef struct {
  uint64_t n_shots;
  double rep_period;
  double detect_prob;
  double background_fraction;
  uint64_t seed;
  bool detector_enabled;
  double dead_time;
  double afterpulse_prob;
  // Digitizer tick, s.
  double bin_width;
} WbSimOptions;

// One click as seen through the C interface.
typedef struct {
  uint64_t shot_index;
  // Time since the trigger, s.
  double t_rel;
  // 0 signal, 1 background, 2 afterpulse.
  uint8_t tag;
} WbEvent;

// Reduction settings. Negative or NaN cutoff, dead time or smoothing width
// disables that step; `window_hi <= window_lo` selects `[0, 20/gamma]`.
typedef struct {
  double bin_width;
  double window_lo;
  double window_hi;
  double afterpulse_cutoff;
  double effective_dead;
  bool free_gamma;
  double smoothing_fwhm;
} WbAnalysisOptions;

// Outcome of an analysis. Quantities that were not computed are NaN.
typedef struct {
  double scale;
  double scale_se;
  double gamma_eff;
  double gamma_eff_se;
  double mean_arrival;
  double mean_arrival_se;
  double chi2_reduced;
  double background_fraction;
} WbAnalysisResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL after a
// successful one. The pointer stays valid until the next call into this
// library from the same thread.
const char *wb_last_error_message(void);

// Creates a parameter set. `pulse_duration` of 0 means impulsive
// excitation, otherwise a square pulse of that length.
//
// # Safety
// `out` must be valid for writes.
WbStatus wb_params_new(double gamma,
                       double delta,
                       double epsilon,
                       double pulse_duration,
                       WbParams **out);

// # Safety
// `params` must be NULL or a handle from [`wb_params_new`] not yet freed.
void wb_params_free(WbParams *params);

// Exact mean emission time for impulsive excitation, s.
//
// # Safety
// `params` must be a live handle and `out` valid for writes.
WbStatus wb_mean_arrival_time(const WbParams *params, double *out);

// Postselection probability.
//
// # Safety
// `params` must be a live handle and `out` valid for writes.
WbStatus wb_acceptance(const WbParams *params, double *out);

// Normalized emission density at `t`, 1/s, without the pulse.
//
// # Safety
// `params` must be a live handle and `out` valid for writes.
WbStatus wb_pdf(const WbParams *params, double t, double *out);

// Emission density at `t` convolved with the excitation pulse, 1/s.
//
// # Safety
// `params` must be a live handle and `out` valid for writes.
WbStatus wb_convolved_pdf(const WbParams *params, double t, double *out);

// Cramer-Rao bound on the cyclic Zeeman shift in Hz/sqrt(Hz) at
// `count_rate` detected photons per second; +infinity at insensitive points.
//
// # Safety
// `params` must be a live handle and `out` valid for writes.
WbStatus wb_crlb_sensitivity(const WbParams *params, double count_rate, double *out);

// Library defaults for `n_shots` shots.
WbSimOptions wb_sim_options_default(uint64_t n_shots);

// Runs the Monte Carlo.
//
// # Safety
// `params` must be a live handle, `options` valid for reads and `out`
// valid for writes.
WbStatus wb_simulate(const WbParams *params, const WbSimOptions *options, WbEvents **out);

// Loads a WBEV event file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` valid for writes.
WbStatus wb_events_read(const char *path, WbEvents **out);

// Writes a WBEV event file.
//
// # Safety
// `events` must be a live handle and `path` a NUL-terminated string.
WbStatus wb_events_write(const WbEvents *events, const char *path);

// Number of clicks; 0 for a NULL handle.
//
// # Safety
// `events` must be NULL or a live handle.
size_t wb_events_len(const WbEvents *events);

// Copies click `index` into `out`.
//
// # Safety
// `events` must be a live handle and `out` valid for writes.
WbStatus wb_events_get(const WbEvents *events, size_t index, WbEvent *out);

// # Safety
// `events` must be NULL or a handle not yet freed.
void wb_events_free(WbEvents *events);

WbAnalysisOptions wb_analysis_options_default(void);

// Full reduction of `data`. `reference_before` and `reference_after`
// are eps = 0 runs used for background subtraction; pass both or neither.
//
// # Safety
// Handles must be live or NULL as described; `options` valid for reads;
// `out` valid for writes.
WbStatus wb_analyze(const WbEvents *data,
                    const WbEvents *reference_before,
                    const WbEvents *reference_after,
                    const WbParams *params,
                    const WbAnalysisOptions *options,
                    WbAnalysisResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WEAKBEAM_H */
