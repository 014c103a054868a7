//! Independent reference implementations used as test oracles. Nothing here
//! calls into the closed forms under test.
#![allow(dead_code)]

use std::f64::consts::TAU;

use rand::Rng;
use weakbeam::pointer::{PulseShape, VSystemParams};

pub const LIFETIME: f64 = 26e-9;
pub const GAMMA: f64 = 1.0 / LIFETIME;
pub const DELTA: f64 = TAU * 600e3;
pub const PULSE: f64 = 4.2e-9;

pub fn lab_params(epsilon: f64) -> VSystemParams {
    VSystemParams::new(GAMMA, DELTA, epsilon, PulseShape::square(PULSE).unwrap()).unwrap()
}

pub fn impulse(gamma: f64, delta: f64, epsilon: f64) -> VSystemParams {
    VSystemParams::new(gamma, delta, epsilon, PulseShape::Impulse).unwrap()
}

/// Unnormalized emission density `exp(-g t) sin^2(d t + e)`.
pub fn raw_density(t: f64, g: f64, d: f64, e: f64) -> f64 {
    if t < 0.0 {
        0.0
    } else {
        (-g * t).exp() * (d * t + e).sin().powi(2)
    }
}

fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, m: f64, fm: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fb, fm) = (f(a), f(b), f(m));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, fa, b, fb, m, fm, whole, tol, 40)
}

/// Adaptive Simpson over `[a, b]` split into pieces no longer than `piece`,
/// with the tolerance shared in proportion to length.
pub fn simpson_pieces(f: &dyn Fn(f64) -> f64, a: f64, b: f64, piece: f64, tol: f64) -> f64 {
    let n = ((b - a) / piece).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    (0..n).map(|i| simpson(f, a + i as f64 * h, a + (i + 1) as f64 * h, tol / n as f64)).sum()
}

/// `(int w, int t w)` of the raw density over 60 lifetimes, relative accuracy ~`rel`.
pub fn raw_moments(g: f64, d: f64, e: f64, rel: f64) -> (f64, f64) {
    let piece = if d > 0.0 { (1.0 / g).min(0.5 / d) } else { 1.0 / g };
    let horizon = 60.0 / g;
    let f0 = |t: f64| raw_density(t, g, d, e);
    let f1 = |t: f64| t * raw_density(t, g, d, e);
    let coarse = simpson_pieces(&f0, 0.0, horizon, piece, 1e-3 / g);
    let zeroth = simpson_pieces(&f0, 0.0, horizon, piece, rel * coarse.abs());
    let first = simpson_pieces(&f1, 0.0, horizon, piece, rel * zeroth.abs() / g);
    (zeroth, first)
}

/// Normalization constant by quadrature.
pub fn norm_by_quadrature(g: f64, d: f64, e: f64) -> f64 {
    1.0 / raw_moments(g, d, e, 1e-12).0
}

/// Mean arrival time by quadrature.
pub fn mean_by_quadrature(g: f64, d: f64, e: f64) -> f64 {
    let (m0, m1) = raw_moments(g, d, e, 1e-12);
    m1 / m0
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Tabulated CDF of the pulse-convolved emission density for inverse-CDF
/// sampling and KS comparisons. Built by cumulative Simpson on a fine grid.
pub struct NumericCdf {
    t: Vec<f64>,
    cdf: Vec<f64>,
}

impl NumericCdf {
    pub fn new(g: f64, d: f64, e: f64, pulse: f64, points: usize) -> Self {
        let horizon = 40.0 / g + pulse;
        let base = |s: f64| raw_density(s, g, d, e);
        let density = |t: f64| {
            if pulse == 0.0 {
                base(t)
            } else {
                let lo = (t - pulse).max(0.0);
                if t <= 0.0 {
                    0.0
                } else {
                    simpson(&base, lo, t, 1e-14 / g) / pulse
                }
            }
        };
        let h = horizon / (points - 1) as f64;
        let mut t = vec![0.0; points];
        let mut cdf = vec![0.0; points];
        let mut prev = density(0.0);
        for i in 1..points {
            t[i] = i as f64 * h;
            let mid = density(t[i] - 0.5 * h);
            let cur = density(t[i]);
            cdf[i] = cdf[i - 1] + h / 6.0 * (prev + 4.0 * mid + cur);
            prev = cur;
        }
        let total = cdf[points - 1];
        cdf.iter_mut().for_each(|c| *c /= total);
        Self { t, cdf }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let h = self.t[1];
        let i = (x / h) as usize;
        if i + 1 >= self.t.len() {
            return 1.0;
        }
        let w = (x - self.t[i]) / h;
        self.cdf[i] * (1.0 - w) + self.cdf[i + 1] * w
    }

    /// Inverse CDF by bisection on the table plus linear interpolation.
    pub fn invert(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let w = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.t[i - 1] + w * (self.t[i] - self.t[i - 1])
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        self.invert(rng.random::<f64>())
    }
}

/// One-sample KS statistic of `xs` against `cdf`.
pub fn ks_statistic(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic KS critical value `c(alpha) / sqrt(n_eff)`.
pub fn ks_critical(alpha: f64, n_eff: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / n_eff.sqrt()
}

/// Maximum-likelihood estimate of `delta` from impulse-excited arrival
/// times with `gamma` and `eps` known. The log-likelihood per photon is
/// `2 ln|sin(d t + e)| - ln(1/C(d))`, with `1/C` integrated analytically
/// from `sin^2 = (1 - cos(2 d t + 2 e))/2`. Newton iterations on the score
/// from a start at `d0`.
pub fn ml_delta(times: &[f64], g: f64, e: f64, d0: f64) -> f64 {
    let inv_norm = |d: f64| {
        let z = g * g + 4.0 * d * d;
        0.5 * (1.0 / g - (g * (2.0 * e).cos() - 2.0 * d * (2.0 * e).sin()) / z)
    };
    let loglik = |d: f64| -> f64 {
        let n = times.len() as f64;
        times.iter().map(|&t| 2.0 * (d * t + e).sin().abs().ln()).sum::<f64>() - n * inv_norm(d).ln()
    };
    // score and curvature by central differences of the exact log-likelihood
    let mut d = d0;
    let h = 1e-4 * g;
    for _ in 0..50 {
        let (lp, l0, lm) = (loglik(d + h), loglik(d), loglik(d - h));
        let score = (lp - lm) / (2.0 * h);
        let curv = (lp - 2.0 * l0 + lm) / (h * h);
        if !(curv < 0.0) {
            break;
        }
        let step = -score / curv;
        d += step;
        if step.abs() < 1e-10 * g {
            break;
        }
    }
    d
}

/// Relative L2 distance between `|a(t)|^2` and the normalized density on
/// `t > 0`, after scaling the intensity by its least-squares constant.
pub fn fourier_l2_error(a: &weakbeam::pointer::TimeAmplitude, p: &VSystemParams) -> f64 {
    let pairs: Vec<(f64, f64)> = a
        .times()
        .zip(a.intensity())
        .skip(1)
        .map(|(t, v)| (v, weakbeam::pointer::pointer_pdf(t, p).unwrap()))
        .collect();
    let scale = pairs.iter().map(|(v, e)| v * e).sum::<f64>() / pairs.iter().map(|(v, _)| v * v).sum::<f64>();
    let num: f64 = pairs.iter().map(|(v, e)| (scale * v - e).powi(2)).sum();
    let den: f64 = pairs.iter().map(|(_, e)| e * e).sum();
    (num / den).sqrt()
}

pub fn mean_and_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}
