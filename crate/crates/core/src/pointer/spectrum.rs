//! Frequency-domain pointer: the postselected spectral amplitude and its
//! numerical inverse Fourier transform back to the time domain.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::params::VSystemParams;
use super::state::{postselect_angle, PolarizationState};
use crate::error::{Error, Result};

/// Half-span of a compliant grid in units of the larger of the two scales.
const SPAN_GAMMAS: f64 = 20.0;
const SPAN_DELTAS: f64 = 10.0;
const STEPS_PER_GAMMA: f64 = 50.0;
/// Orders of the `(W / (gamma/2 + i w))^k` tail basis removed before the FFT.
const TAIL_ORDERS: usize = 6;
const TAIL_FRACTION: f64 = 0.6;

#[derive(Debug, Clone)]
pub struct SpectralAmplitude {
    detuning: Vec<f64>,
    amplitude: Vec<Complex64>,
    gamma: f64,
    certified: bool,
}

/// Time-domain amplitude on `t_n = n dt`, `n = 0 .. len`.
#[derive(Debug, Clone)]
pub struct TimeAmplitude {
    pub dt: f64,
    pub amplitude: Vec<Complex64>,
}

impl TimeAmplitude {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.amplitude.len()).map(move |n| n as f64 * self.dt)
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Lorentzian amplitude `1 / (1 + 2 i w / gamma)`.
pub fn lorentzian(detuning: f64, gamma: f64) -> Complex64 {
    Complex64::new(1.0, 2.0 * detuning / gamma).inv()
}

/// Uniform grid with spacing `gamma/50` covering `+-(20 gamma + 10 delta)`.
pub fn compliant_grid(params: &VSystemParams) -> Vec<f64> {
    let step = params.gamma() / STEPS_PER_GAMMA;
    let half = SPAN_GAMMAS * params.gamma() + SPAN_DELTAS * params.delta();
    let n = (half / step).ceil() as i64;
    (-n..=n).map(|j| j as f64 * step).collect()
}

/// Postselected amplitude for the default pre- and postselected states.
pub fn spectral_amplitude(params: &VSystemParams, grid: &[f64]) -> Result<SpectralAmplitude> {
    let post = postselect_angle(params.epsilon())?;
    spectral_amplitude_for(params, &PolarizationState::preselected(), &post, grid)
}

/// `A(w) = sum_k conj(post_k) pre_k L(w + s_k delta)` with `s = +1` for |+>
/// and `-1` for |->. Each circular component carries its own shifted
/// Lorentzian, which is the effective evolution `exp(i delta sigma_z tau) L(w)`
/// seen through the postselection.
pub fn spectral_amplitude_for(
    params: &VSystemParams,
    pre: &PolarizationState,
    post: &PolarizationState,
    grid: &[f64],
) -> Result<SpectralAmplitude> {
    if grid.len() < 2 {
        return Err(Error::invalid("grid", "need at least two detunings"));
    }
    if let Some(i) = grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("grid", format!("detunings must be strictly increasing (index {})", i + 1)));
    }
    let (g, d) = (params.gamma(), params.delta());
    let wp = post.c_plus().conj() * pre.c_plus();
    let wm = post.c_minus().conj() * pre.c_minus();
    let amplitude = grid.iter().map(|&w| wp * lorentzian(w + d, g) + wm * lorentzian(w - d, g)).collect();
    let certified = certify(grid, params).is_ok();
    Ok(SpectralAmplitude { detuning: grid.to_vec(), amplitude, gamma: g, certified })
}

fn uniform_step(grid: &[f64]) -> Option<f64> {
    let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    let tol = 1e-9 * step;
    grid.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= tol).then_some(step)
}

fn certify(grid: &[f64], params: &VSystemParams) -> Result<f64> {
    let step = uniform_step(grid).ok_or_else(|| Error::GridTooCoarse("grid is not uniform".into()))?;
    let g = params.gamma();
    if step > g / STEPS_PER_GAMMA * (1.0 + 1e-9) {
        return Err(Error::GridTooCoarse(format!("spacing {step:e} exceeds gamma/50 = {:e}", g / STEPS_PER_GAMMA)));
    }
    let half = (SPAN_GAMMAS * g + SPAN_DELTAS * params.delta()) * (1.0 - 1e-9);
    if grid[0] > -half || grid[grid.len() - 1] < half {
        return Err(Error::GridTooCoarse(format!("span must cover +-{half:e} rad/s")));
    }
    Ok(step)
}

impl SpectralAmplitude {
    pub fn detuning(&self) -> &[f64] {
        &self.detuning
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    /// False when the grid is too coarse, too narrow or non-uniform for the
    /// time-domain reconstruction to be trusted.
    pub fn certified(&self) -> bool {
        self.certified
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `a(t) = (1/2pi) int A(w) exp(i w t) dw` for `t >= 0` on the FFT time
    /// grid, keeping the first half of the period to stay clear of wraparound.
    ///
    /// The slowly decaying `1/w` tails are fitted by a short series in
    /// `1/(gamma/2 + i w)` on the outer part of the grid and transformed
    /// analytically; only the remainder goes through the FFT.
    pub fn inverse_transform(&self) -> Result<TimeAmplitude> {
        let step = uniform_step(&self.detuning).ok_or_else(|| Error::GridTooCoarse("grid is not uniform".into()))?;
        let n = self.detuning.len();
        let w0 = self.detuning[0];
        let width = self.detuning[0].abs().max(self.detuning[n - 1].abs());
        let half_gamma = 0.5 * self.gamma;

        let basis = |w: f64, k: usize| (Complex64::new(half_gamma, w) / width).inv().powi(k as i32);
        let coeffs = self.fit_tail(width, &basis)?;

        let mut buf: Vec<Complex64> = self
            .detuning
            .iter()
            .zip(&self.amplitude)
            .map(|(&w, &a)| a - (1..=TAIL_ORDERS).map(|k| coeffs[k - 1] * basis(w, k)).sum::<Complex64>())
            .collect();
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);

        let dt = std::f64::consts::TAU / (n as f64 * step);
        let keep = n / 2;
        let amplitude = (0..keep)
            .map(|j| {
                let t = j as f64 * dt;
                let residual = buf[j] * Complex64::from_polar(step / std::f64::consts::TAU, w0 * t);
                let mut term = (-half_gamma * t).exp();
                let mut tail = Complex64::new(0.0, 0.0);
                for (k, c) in coeffs.iter().enumerate() {
                    // W^k t^(k-1) / (k-1)!
                    if k > 0 {
                        term *= t / k as f64;
                    }
                    tail += c * term * width.powi(k as i32 + 1);
                }
                residual + tail
            })
            .collect();
        Ok(TimeAmplitude { dt, amplitude })
    }

    fn fit_tail(&self, width: f64, basis: &impl Fn(f64, usize) -> Complex64) -> Result<Vec<Complex64>> {
        let rows: Vec<usize> =
            (0..self.detuning.len()).filter(|&j| self.detuning[j].abs() >= TAIL_FRACTION * width).collect();
        if rows.len() < 2 * TAIL_ORDERS {
            return Err(Error::GridTooCoarse("too few points in the spectral tails".into()));
        }
        let a = DMatrix::from_fn(rows.len(), TAIL_ORDERS, |r, k| basis(self.detuning[rows[r]], k + 1));
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|&j| self.amplitude[j]));
        let x = a.svd(true, true).solve(&b, 1e-14).map_err(|e| Error::Singular(format!("spectral tail fit: {e}")))?;
        Ok(x.iter().copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointer::params::PulseShape;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn natural_line_is_lorentzian() {
        let p = VSystemParams::natural(2.0, PulseShape::Impulse).unwrap();
        let s = spectral_amplitude(&p, &[-1.0, 0.0, 1.0]).unwrap();
        let i = s.intensity();
        assert!((i[1] - 1.0).abs() < 1e-15);
        assert!((i[0] - 0.5).abs() < 1e-15 && (i[2] - 0.5).abs() < 1e-15);
        assert!(!s.certified());
    }

    #[test]
    fn components_sit_at_plus_minus_delta() {
        let p = VSystemParams::new(1.0, 0.1, FRAC_PI_2, PulseShape::Impulse).unwrap();
        let pre = PolarizationState::preselected();
        let only_minus = PolarizationState::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)).unwrap();
        let only_plus = PolarizationState::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        let grid: Vec<f64> = (-400..=400).map(|j| j as f64 * 1e-3).collect();
        let peak = |post| {
            let s = spectral_amplitude_for(&p, &pre, &post, &grid).unwrap();
            let i = s.intensity();
            let k = (0..i.len()).max_by(|&a, &b| i[a].total_cmp(&i[b])).unwrap();
            grid[k]
        };
        let separation = peak(only_minus) - peak(only_plus);
        assert!((separation - 0.2).abs() < 1e-9, "{separation}");
    }

    #[test]
    fn rejects_unordered_grid() {
        let p = VSystemParams::natural(1.0, PulseShape::Impulse).unwrap();
        assert!(spectral_amplitude(&p, &[0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn compliant_grid_is_certified() {
        let p = VSystemParams::new(1.0, 0.3, 0.2, PulseShape::Impulse).unwrap();
        let s = spectral_amplitude(&p, &compliant_grid(&p)).unwrap();
        assert!(s.certified());
    }

    #[test]
    fn natural_decay_amplitude() {
        let p = VSystemParams::natural(1.0, PulseShape::Impulse).unwrap();
        let s = spectral_amplitude(&p, &compliant_grid(&p)).unwrap();
        let a = s.inverse_transform().unwrap();
        for (t, amp) in a.times().zip(&a.amplitude).skip(1).take(400) {
            // (gamma/2) exp(-gamma t / 2), up to the global phase of the port
            assert!((amp.norm() - 0.5 * (-0.5 * t).exp()).abs() < 1e-9, "t={t}");
        }
    }
}
