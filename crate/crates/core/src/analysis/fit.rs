//! Fits of histograms to the convolved model.
//!
//! Every bin is treated as a scaled Poisson count: its variance is the model
//! expectation times the bin's variance-to-count ratio, which is one for raw
//! counts and grows with dead-time correction and background subtraction.
//! Linear amplitudes come from iteratively reweighted least squares, whose
//! fixed point is the maximum-likelihood estimate. The reported chi^2 is
//! Pearson's, with the fitted model in the denominator, over the bins that
//! expect at least five counts.

use crate::error::{Error, Result};
use crate::histogram::TimeHistogram;
use crate::pointer::{PointerModel, VSystemParams};

use super::result::{AnalysisResult, Estimate};

/// Starting weight of a bin with the given variance; one count is the floor.
fn initial_weight(variance: f64) -> f64 {
    1.0 / variance.max(1.0)
}

/// Variance-to-count ratio of each bin in `range`. Empty bins fall back to
/// the squared dead-time factor, or one.
fn dispersion(hist: &TimeHistogram, range: std::ops::Range<usize>) -> Vec<f64> {
    let (counts, variance) = (hist.counts(), hist.variance());
    range
        .map(|i| {
            if counts[i] > 0.0 {
                (variance[i] / counts[i]).max(1e-12)
            } else {
                hist.corrections().map_or(1.0, |c| c[i] * c[i])
            }
        })
        .collect()
}

/// Half-open time range `[lo, hi)` selecting the bins that lie inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    pub lo: f64,
    pub hi: f64,
}

impl FitWindow {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// Bin indices fully inside the window.
    pub fn bins(&self, hist: &TimeHistogram) -> Result<std::ops::Range<usize>> {
        let w = hist.bin_width();
        let first = ((self.lo / w) - 1e-9).ceil().max(0.0) as usize;
        let last = (((self.hi / w) + 1e-9).floor().max(0.0) as usize).min(hist.len());
        if !(self.lo < self.hi) || first >= last {
            return Err(Error::EmptyWindow { lo: self.lo, hi: self.hi });
        }
        Ok(first..last)
    }

    fn whole(hist: &TimeHistogram) -> Self {
        Self { lo: 0.0, hi: hist.window() }
    }
}

/// Probability of each bin in `range` under the pulse-convolved model.
pub(crate) fn model_column(model: &PointerModel, bin: f64, range: std::ops::Range<usize>) -> Vec<f64> {
    range.map(|i| model.convolved_mass(i as f64 * bin, (i + 1) as f64 * bin)).collect()
}

/// Solves the 2x2 weighted normal equations with a small ridge.
fn solve2(cols: [&[f64]; 2], y: &[f64], w: &[f64]) -> Result<([f64; 2], [[f64; 2]; 2])> {
    let mut m = [[0.0; 2]; 2];
    let mut r = [0.0; 2];
    for i in 0..y.len() {
        for a in 0..2 {
            r[a] += w[i] * cols[a][i] * y[i];
            for b in 0..2 {
                m[a][b] += w[i] * cols[a][i] * cols[b][i];
            }
        }
    }
    let ridge = 1e-12 * (m[0][0] + m[1][1]);
    m[0][0] += ridge;
    m[1][1] += ridge;
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    // reject numerically collinear columns
    if !(det > 1e-10 * m[0][0] * m[1][1]) {
        return Err(Error::Singular(format!("2x2 normal matrix, det = {det:e}")));
    }
    let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
    let x = [inv[0][0] * r[0] + inv[0][1] * r[1], inv[1][0] * r[0] + inv[1][1] * r[1]];
    Ok((x, inv))
}

/// One-column weighted fit; returns the amplitude and its standard error.
fn solve1(col: &[f64], y: &[f64], w: &[f64]) -> Result<(f64, f64)> {
    let (mut mm, mut my) = (0.0, 0.0);
    for i in 0..y.len() {
        mm += w[i] * col[i] * col[i];
        my += w[i] * col[i] * y[i];
    }
    if !(mm > 0.0) {
        return Err(Error::Singular("model column vanishes on the window".into()));
    }
    Ok((my / mm, (1.0 / mm).sqrt()))
}

fn predict(cols: &[&[f64]], coef: &[f64], i: usize) -> f64 {
    cols.iter().zip(coef).map(|(c, a)| c[i] * a).sum()
}

/// Floor on the expected counts of a bin, relative to the largest one.
const MU_FLOOR: f64 = 1e-9;

fn model_weights(cols: &[&[f64]], coef: &[f64], r: &[f64]) -> Vec<f64> {
    let mu: Vec<f64> = (0..r.len()).map(|i| predict(cols, coef, i)).collect();
    let floor = MU_FLOOR * mu.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    mu.iter().zip(r).map(|(m, r)| 1.0 / (m.max(floor) * r)).collect()
}

/// Smallest expected count of a bin entering the goodness-of-fit sum.
const CHI2_MIN_EXPECTED: f64 = 5.0;

/// Coefficients, their covariance and Pearson's chi^2 of a linear
/// scaled-Poisson fit with one or two columns.
struct LinearFit {
    coef: Vec<f64>,
    cov: Vec<Vec<f64>>,
    chi2: f64,
    /// Bins contributing to `chi2`.
    bins: usize,
}

impl LinearFit {
    fn reduced_chi2(&self, free_params: usize) -> f64 {
        self.chi2 / (self.bins as f64 - free_params as f64).max(1.0)
    }
}

/// Pearson's chi^2 over the well-populated bins; all bins when none is.
fn pearson(cols: &[&[f64]], coef: &[f64], y: &[f64], r: &[f64]) -> (f64, usize) {
    let mu: Vec<f64> = (0..y.len()).map(|i| predict(cols, coef, i)).collect();
    let w = model_weights(cols, coef, r);
    let populated = mu.iter().filter(|&&m| m >= CHI2_MIN_EXPECTED).count();
    let keep = |m: f64| populated == 0 || m >= CHI2_MIN_EXPECTED;
    let chi = (0..y.len()).filter(|&i| keep(mu[i])).map(|i| w[i] * (y[i] - mu[i]).powi(2)).sum();
    (chi, if populated == 0 { y.len() } else { populated })
}

fn solve(cols: &[&[f64]], y: &[f64], w: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    match cols {
        [c] => {
            let (x, se) = solve1(c, y, w)?;
            Ok((vec![x], vec![vec![se * se]]))
        }
        [a, b] => {
            let (x, inv) = solve2([a, b], y, w)?;
            Ok((x.to_vec(), inv.iter().map(|row| row.to_vec()).collect()))
        }
        _ => unreachable!("fits have one or two columns"),
    }
}

fn poisson_fit(cols: &[&[f64]], y: &[f64], variance: &[f64], r: &[f64]) -> Result<LinearFit> {
    let w: Vec<f64> = variance.iter().map(|&v| initial_weight(v)).collect();
    let (mut coef, mut cov) = solve(cols, y, &w)?;
    let mut w = model_weights(cols, &coef, r);
    for _ in 0..50 {
        let (next, next_cov) = solve(cols, y, &w)?;
        let change = next.iter().zip(&coef).map(|(a, b)| (a - b).abs() / a.abs().max(1e-300)).fold(0.0, f64::max);
        coef = next;
        cov = next_cov;
        w = model_weights(cols, &coef, r);
        if change < 1e-12 {
            break;
        }
    }
    let (chi2, bins) = pearson(cols, &coef, y, r);
    Ok(LinearFit { coef, cov, chi2, bins })
}

/// Scaled-Poisson deviance of `y` against the model `mu`.
fn deviance(y: &[f64], mu: &[f64], r: &[f64]) -> f64 {
    let floor = MU_FLOOR * mu.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    y.iter()
        .zip(mu)
        .zip(r)
        .map(|((&y, &m), &r)| {
            let m = m.max(floor);
            let log_term = if y > 0.0 { y * (y / m).ln() } else { 0.0 };
            2.0 * (log_term - (y - m)) / r
        })
        .sum()
}

/// Decomposition of an eps = 0 reference histogram into a pure exponential
/// (incoherent background) and the coherent eps = 0 beat signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFit {
    /// Background probability per bin, i.e. the background for unit amplitude.
    pub exp_shape: Vec<f64>,
    /// Expected background counts per bin.
    pub exp_component: Vec<f64>,
    /// Expected coherent counts per bin.
    pub coherent_component: Vec<f64>,
    /// Total background counts over all times.
    pub a: Estimate,
    /// Total coherent counts over all times.
    pub b: Estimate,
    pub n_shots: u64,
    pub bin_width: f64,
    pub chi2_reduced: f64,
}

impl ReferenceFit {
    /// Background share of all reference photons, `A / (A + B)`.
    pub fn background_fraction(&self) -> f64 {
        self.a.value / (self.a.value + self.b.value)
    }

    /// Background amplitude per shot with its standard error.
    pub fn per_shot(&self) -> Estimate {
        let n = self.n_shots as f64;
        Estimate { value: self.a.value / n, se: self.a.se / n }
    }
}

/// Fits `A conv(exp) + B conv(exp sin^2(delta t))` to a corrected eps = 0
/// reference, with `gamma`, `delta` and the pulse taken from `params`.
/// Negative amplitudes are clamped to zero and the other one refitted.
pub fn fit_reference(hist: &TimeHistogram, params: &VSystemParams) -> Result<ReferenceFit> {
    let range = FitWindow::whole(hist).bins(hist)?;
    let bin = hist.bin_width();
    let natural = PointerModel::new(&VSystemParams::natural(params.gamma(), params.pulse())?)?;
    let coherent = PointerModel::new(&params.with_epsilon(0.0)?)
        .map_err(|_| Error::Singular("coherent reference column vanishes for delta = 0".into()))?;
    let e = model_column(&natural, bin, range.clone());
    let c = model_column(&coherent, bin, range.clone());
    let y = &hist.counts()[range.clone()];
    let v = &hist.variance()[range.clone()];
    let r = dispersion(hist, range.clone());

    let zero = Estimate { value: 0.0, se: 0.0 };
    let both = poisson_fit(&[&e, &c], y, v, &r)?;
    let (a, b, chi2_reduced) = if both.coef.iter().all(|&x| x >= 0.0) {
        let a = Estimate { value: both.coef[0], se: both.cov[0][0].sqrt() };
        let b = Estimate { value: both.coef[1], se: both.cov[1][1].sqrt() };
        (a, b, both.reduced_chi2(2))
    } else if both.coef[0] < 0.0 {
        let f = poisson_fit(&[&c], y, v, &r)?;
        (zero, Estimate { value: f.coef[0].max(0.0), se: f.cov[0][0].sqrt() }, f.reduced_chi2(2))
    } else {
        let f = poisson_fit(&[&e], y, v, &r)?;
        (Estimate { value: f.coef[0].max(0.0), se: f.cov[0][0].sqrt() }, zero, f.reduced_chi2(2))
    };
    Ok(ReferenceFit {
        exp_component: e.iter().map(|v| v * a.value).collect(),
        exp_shape: e,
        coherent_component: c.iter().map(|v| v * b.value).collect(),
        a,
        b,
        n_shots: hist.n_shots(),
        bin_width: bin,
        chi2_reduced,
    })
}

/// Limit on the relative disagreement of the two references' per-shot
/// background amplitudes.
pub const STABILITY_LIMIT: f64 = 0.05;

/// Removes the incoherent background estimated from the references taken
/// before and after the data. The background is scaled to the data's shot
/// count; negative results are clipped to zero and the references' amplitude
/// uncertainty is added to the variance channel.
pub fn subtract_background(data: &TimeHistogram, before: &ReferenceFit, after: &ReferenceFit) -> Result<TimeHistogram> {
    for r in [before, after] {
        if r.exp_shape.len() != data.len() || (r.bin_width - data.bin_width()).abs() > 1e-9 * data.bin_width() {
            return Err(Error::Incompatible("reference and data histograms differ in binning or window".into()));
        }
    }
    let (p, q) = (before.per_shot(), after.per_shot());
    let mean = 0.5 * (p.value + q.value);
    if mean > 0.0 {
        let relative = (p.value - q.value).abs() / mean;
        if relative > STABILITY_LIMIT {
            return Err(Error::Stability { relative: 100.0 * relative });
        }
    }
    let shots = data.n_shots() as f64;
    let amp = mean * shots;
    let amp_se = 0.5 * (p.se.powi(2) + q.se.powi(2)).sqrt() * shots;
    // average of the two normalized shapes; identical for identical binning
    let shape: Vec<f64> = before.exp_shape.iter().zip(&after.exp_shape).map(|(x, y)| 0.5 * (x + y)).collect();
    let counts = data.counts().iter().zip(&shape).map(|(c, s)| (c - amp * s).max(0.0)).collect();
    let variance = data.variance().iter().zip(&shape).map(|(v, s)| v + (s * amp_se).powi(2)).collect();
    let out = TimeHistogram::with_variance(data.bin_width(), counts, variance, data.n_shots())?;
    Ok(match data.corrections() {
        Some(c) => out.with_corrections(c.to_vec()),
        None => out,
    })
}

/// Fits `scale * convolved model` with every physical parameter fixed. The
/// scale is the expected number of photons over all times.
pub fn fit_scale_only(hist: &TimeHistogram, params: &VSystemParams, window: Option<FitWindow>) -> Result<AnalysisResult> {
    let window = window.unwrap_or_else(|| FitWindow::whole(hist));
    let range = window.bins(hist)?;
    let model = PointerModel::new(params)?;
    let m = model_column(&model, hist.bin_width(), range.clone());
    let y = &hist.counts()[range.clone()];
    let fit = poisson_fit(&[&m], y, &hist.variance()[range.clone()], &dispersion(hist, range))?;
    let scale = Estimate { value: fit.coef[0], se: fit.cov[0][0].sqrt() };
    Ok(AnalysisResult::new(scale, fit.reduced_chi2(1), window))
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Default window for the decay-rate fit. It opens 2 ns after the pulse and
/// closes once the beat phase has advanced by `eps/5`, where the single
/// exponential is still a good description; it is kept between one and
/// twenty lifetimes long.
pub fn tail_window(params: &VSystemParams) -> FitWindow {
    let gamma = params.gamma();
    let lo = params.pulse().duration() + 2e-9;
    let horizon = if params.delta() > 0.0 { params.epsilon() / (5.0 * params.delta()) } else { f64::INFINITY };
    let hi = (lo + horizon).max(lo + 1.0 / gamma).min(20.0 / gamma);
    FitWindow::new(lo, hi)
}

/// Two-parameter fit of `scale * conv(exp(-g t))`: golden-section search over
/// `g` with the scale solved linearly at each step. Without an explicit
/// window, [`tail_window`] is used.
pub fn fit_free_gamma(hist: &TimeHistogram, params: &VSystemParams, window: Option<FitWindow>) -> Result<AnalysisResult> {
    let gamma = params.gamma();
    let window = window.unwrap_or_else(|| tail_window(params));
    let range = window.bins(hist)?;
    let y = &hist.counts()[range.clone()];
    if y.len() < 3 {
        return Err(Error::EmptyWindow { lo: window.lo, hi: window.hi });
    }
    let v = &hist.variance()[range.clone()];
    let r = dispersion(hist, range.clone());
    // profiled deviance over the rate, with the scale at its likelihood maximum
    let fit_at = |g: f64| -> Result<(f64, LinearFit)> {
        let model = PointerModel::new(&VSystemParams::natural(g, params.pulse())?)?;
        let m = model_column(&model, hist.bin_width(), range.clone());
        let fit = poisson_fit(&[&m], y, v, &r)?;
        let mu: Vec<f64> = m.iter().map(|x| x * fit.coef[0]).collect();
        Ok((deviance(y, &mu, &r), fit))
    };
    let profile = |g: f64| fit_at(g).map(|(d, _)| d);

    // coarse log scan to bracket the minimum, then golden section in log g
    let (lo, hi) = ((0.02 * gamma).ln(), (5.0 * gamma).ln());
    let n_scan = 48;
    let grid: Vec<f64> = (0..=n_scan).map(|k| lo + (hi - lo) * k as f64 / n_scan as f64).collect();
    let values = grid.iter().map(|&x| profile(x.exp())).collect::<Result<Vec<_>>>()?;
    let best = (0..values.len()).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(n_scan)]);
    let f = |x: f64| profile(x.exp());
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut iterations = 0;
    while (b - a).abs() > 1e-10 {
        iterations += 1;
        if iterations > 200 {
            return Err(Error::NonConvergence("golden-section search on the decay rate".into()));
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d)?;
        }
    }
    let g = (0.5 * (a + b)).exp();
    if best == 0 || best == n_scan {
        return Err(Error::NonConvergence(format!("decay rate {g:e} at the edge of the search range")));
    }
    let (dev_min, best_fit) = fit_at(g)?;
    // curvature of the profiled deviance gives the standard error
    let h = 1e-3 * g;
    let second = (profile(g + h)? - 2.0 * dev_min + profile(g - h)?) / (h * h);
    let g_se = if second > 0.0 { (2.0 / second).sqrt() } else { f64::INFINITY };
    let scale = Estimate { value: best_fit.coef[0], se: best_fit.cov[0][0].sqrt() };
    let mut result = AnalysisResult::new(scale, best_fit.reduced_chi2(2), window);
    result.gamma_eff = Some(Estimate { value: g, se: g_se });
    Ok(result)
}
