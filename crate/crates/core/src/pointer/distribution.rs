//! Closed forms for the postselected arrival-time distribution
//! `P(t) = C exp(-gamma t) sin^2(delta t + eps)`.
//!
//! Every closed form below is written as a sum of squares in
//! `phi = delta t + eps`, so no expression suffers cancellation when
//! `delta/gamma` and `eps` are both small.

use std::f64::consts::FRAC_PI_2;

use super::params::{PulseShape, VSystemParams};
use super::state::{postselect_angle, weak_value, PolarizationState};
use crate::error::{Error, Result};

/// Pre-evaluated normalization of one parameter set.
#[derive(Debug, Clone, Copy)]
pub struct PointerModel {
    gamma: f64,
    delta: f64,
    epsilon: f64,
    pulse: PulseShape,
    norm: f64,
    mean: f64,
}

impl PointerModel {
    pub fn new(params: &VSystemParams) -> Result<Self> {
        if params.is_degenerate() {
            return Err(Error::DegenerateDistribution);
        }
        let (g, d, e) = (params.gamma(), params.delta(), params.epsilon());
        let mut model = Self { gamma: g, delta: d, epsilon: e, pulse: params.pulse(), norm: 0.0, mean: 0.0 };
        model.norm = g * model.z2() / model.survival_poly(e);
        model.mean = model.norm * model.tail_poly(e) / (g * g * model.z2() * model.z2());
        Ok(model)
    }

    fn z2(&self) -> f64 {
        self.gamma * self.gamma + 4.0 * self.delta * self.delta
    }

    // (G sin + D cos)^2 + D^2 (1 + sin^2) = G^2 sin^2 + 2 D^2 + 2 G D sin cos
    fn survival_poly(&self, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        let (g, d) = (self.gamma, self.delta);
        (g * s + d * c).powi(2) + d * d * (1.0 + s * s)
    }

    // (G^2 sin + 2 G D cos)^2 + 2 G^2 D^2 + 8 D^4
    fn tail_poly(&self, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        let (g, d) = (self.gamma, self.delta);
        (g * g * s + 2.0 * g * d * c).powi(2) + 2.0 * g * g * d * d + 8.0 * d.powi(4)
    }

    /// Normalization constant C (1/s).
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Exact mean emission time, excluding the pulse.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Probability that a photon emitted into free decay passes postselection:
    /// the average of `sin^2(delta t + eps)` over `gamma exp(-gamma t)`.
    pub fn acceptance(&self) -> f64 {
        self.gamma / self.norm
    }

    pub fn pulse(&self) -> PulseShape {
        self.pulse
    }

    /// Emission-time density, ignoring the pulse.
    pub fn pdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        self.norm * (-self.gamma * t).exp() * (self.delta * t + self.epsilon).sin().powi(2)
    }

    /// `P(T > t)` for the emission time.
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let phi = self.delta * t + self.epsilon;
        self.norm * (-self.gamma * t).exp() * self.survival_poly(phi) / (self.gamma * self.z2())
    }

    /// `int_t^inf survival(s) ds`, continued linearly for negative `t`.
    pub fn integrated_survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.mean - t;
        }
        let phi = self.delta * t + self.epsilon;
        let z2 = self.z2();
        self.norm * (-self.gamma * t).exp() * self.tail_poly(phi) / (self.gamma * self.gamma * z2 * z2)
    }

    /// Density of the detected time: emission delayed by a uniform offset
    /// drawn over the pulse.
    pub fn convolved_pdf(&self, t: f64) -> f64 {
        match self.pulse {
            PulseShape::Impulse => self.pdf(t),
            PulseShape::Square { duration } => {
                if t < 0.0 {
                    return 0.0;
                }
                (self.survival(t - duration) - self.survival(t)) / duration
            }
        }
    }

    pub fn convolved_survival(&self, t: f64) -> f64 {
        match self.pulse {
            PulseShape::Impulse => self.survival(t),
            PulseShape::Square { duration } => {
                if t <= 0.0 {
                    return 1.0;
                }
                (self.integrated_survival(t - duration) - self.integrated_survival(t)) / duration
            }
        }
    }

    /// Probability mass of the detected time in `[lo, hi)`.
    pub fn convolved_mass(&self, lo: f64, hi: f64) -> f64 {
        (self.convolved_survival(lo) - self.convolved_survival(hi)).max(0.0)
    }

    /// Probability of each bin `[i w, (i+1) w)`, `i < n_bins`.
    pub fn bin_masses(&self, bin_width: f64, n_bins: usize) -> Vec<f64> {
        let mut upper = 1.0;
        (0..n_bins)
            .map(|i| {
                let lower = upper;
                upper = self.convolved_survival((i + 1) as f64 * bin_width);
                (lower - upper).max(0.0)
            })
            .collect()
    }

    pub fn convolved_mean(&self) -> f64 {
        self.mean + self.pulse.mean_offset()
    }
}

/// Normalization constant C of the postselected distribution, in 1/s.
pub fn closed_form_norm(params: &VSystemParams) -> Result<f64> {
    Ok(PointerModel::new(params)?.norm())
}

/// Emission-time density `C exp(-gamma t) sin^2(delta t + eps)`; the pulse is
/// not applied (see [`convolved_pdf`]).
pub fn pointer_pdf(t: f64, params: &VSystemParams) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::invalid("t", "time must be finite"));
    }
    Ok(PointerModel::new(params)?.pdf(t))
}

pub fn convolved_pdf(t: f64, params: &VSystemParams) -> Result<f64> {
    if !t.is_finite() {
        return Err(Error::invalid("t", "time must be finite"));
    }
    Ok(PointerModel::new(params)?.convolved_pdf(t))
}

/// Exact first moment of the normalized emission-time distribution.
pub fn mean_arrival_time(params: &VSystemParams) -> Result<f64> {
    Ok(PointerModel::new(params)?.mean())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxDecay {
    /// `(1 - 2 delta / (eps gamma)) gamma`
    pub rate: f64,
    /// `delta/gamma` is at least ten times smaller than `eps`, and `eps < 0.1`.
    pub valid: bool,
}

/// First-order effective decay rate of the postselected signal. Returns a
/// non-finite rate at `eps = 0`.
pub fn approx_decay_rate(params: &VSystemParams) -> ApproxDecay {
    let (g, d, e) = (params.gamma(), params.delta(), params.epsilon());
    let rate = (1.0 - 2.0 * d / (e * g)) * g;
    ApproxDecay { rate, valid: d / g <= e / 10.0 && e <= 0.1 }
}

/// First-order shift of the mean arrival time, `2 delta cot(eps) / gamma^2`.
pub fn mean_shift(params: &VSystemParams) -> f64 {
    let (g, d, e) = (params.gamma(), params.delta(), params.epsilon());
    if d == 0.0 {
        return 0.0;
    }
    2.0 * d / (e.tan() * g * g)
}

/// The same shift evaluated through the weak value: `2 delta Var[P0] Im A_w`
/// with `Var[P0] = 1/gamma^2`.
pub fn mean_shift_from_weak_value(params: &VSystemParams) -> Result<f64> {
    let w = weak_value(&PolarizationState::preselected(), &postselect_angle(params.epsilon())?)?;
    let variance = 1.0 / (params.gamma() * params.gamma());
    Ok(2.0 * params.delta() * variance * w.im)
}

/// Emission-time density seen at the orthogonal port, `C' exp(-gamma t) cos^2(delta t + eps)`.
pub fn orthogonal_port_pdf(t: f64, params: &VSystemParams) -> Result<f64> {
    let e = params.epsilon();
    let (g, d) = (params.gamma(), params.delta());
    if t < 0.0 {
        return Ok(0.0);
    }
    let z2 = g * g + 4.0 * d * d;
    let phi = e + FRAC_PI_2;
    let (s, c) = phi.sin_cos();
    let poly = g * g * s * s + 2.0 * d * d + 2.0 * g * d * s * c;
    if poly <= 0.0 {
        return Err(Error::DegenerateDistribution);
    }
    let norm = g * z2 / poly;
    Ok(norm * (-g * t).exp() * (d * t + phi).sin().powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(g: f64, d: f64, e: f64) -> VSystemParams {
        VSystemParams::new(g, d, e, PulseShape::Impulse).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn natural_decay_limit() {
        let p = params(2.0, 0.0, FRAC_PI_2);
        assert!(rel(closed_form_norm(&p).unwrap(), 2.0) < 1e-15);
        for t in [0.0, 0.3, 1.7] {
            assert!(rel(pointer_pdf(t, &p).unwrap(), 2.0 * (-2.0 * t).exp()) < 1e-14);
        }
        assert!(rel(mean_arrival_time(&p).unwrap(), 0.5) < 1e-15);
    }

    #[test]
    fn constant_sin_factor() {
        let p = params(1.0, 0.0, 0.3);
        assert!(rel(closed_form_norm(&p).unwrap(), 1.0 / 0.3f64.sin().powi(2)) < 1e-14);
        assert!(rel(mean_arrival_time(&p).unwrap(), 1.0) < 1e-14);
    }

    #[test]
    fn gamma_distribution_limit() {
        let p = params(1.0, 1e-3, 0.0);
        assert!(rel(mean_arrival_time(&p).unwrap(), 3.0) < 1e-4);
    }

    #[test]
    fn degenerate_is_an_error() {
        let p = params(1.0, 0.0, 0.0);
        assert!(matches!(closed_form_norm(&p), Err(Error::DegenerateDistribution)));
        assert!(matches!(pointer_pdf(0.1, &p), Err(Error::DegenerateDistribution)));
        assert!(matches!(mean_arrival_time(&p), Err(Error::DegenerateDistribution)));
    }

    #[test]
    fn density_vanishes_before_trigger_and_at_beat_nodes() {
        let p = params(1.0, 20.0, 0.0);
        assert_eq!(pointer_pdf(-1.0, &p).unwrap(), 0.0);
        let peak = pointer_pdf(std::f64::consts::PI / 40.0, &p).unwrap();
        for k in 1..6 {
            let t = k as f64 * std::f64::consts::PI / 20.0;
            assert!(pointer_pdf(t, &p).unwrap() < 1e-28 * peak.max(1.0) + 1e-25);
        }
    }

    #[test]
    fn eq3_arithmetic() {
        let p = params(1.0, 0.01, 0.1);
        let a = approx_decay_rate(&p);
        assert!(rel(a.rate, 0.8) < 1e-12);
        assert!(a.valid);
        assert_eq!(approx_decay_rate(&params(3.0, 0.0, 0.4)).rate, 3.0);
        assert!(!approx_decay_rate(&params(1.0, 0.1, 0.1)).valid);
    }

    #[test]
    fn approximate_mean_within_five_percent() {
        let p = params(1.0, 0.01, 0.1);
        let exact = mean_arrival_time(&p).unwrap();
        let approx = 1.0 / approx_decay_rate(&p).rate;
        assert!(rel(approx, exact) < 0.05, "{approx} vs {exact}");
    }

    #[test]
    fn shift_matches_weak_value_route() {
        for (d, e) in [(0.0, 0.5), (0.01, 0.1), (0.3, 1.2), (2.0, 0.05)] {
            let p = params(1.7, d, e);
            let a = mean_shift(&p);
            let b = mean_shift_from_weak_value(&p).unwrap();
            assert!((a - b).abs() <= 1e-13 * a.abs().max(1e-300), "{a} {b}");
        }
    }

    #[test]
    fn ports_are_complementary() {
        let p = params(1.0, 0.7, 0.2);
        let m = PointerModel::new(&p).unwrap();
        let c1 = m.norm();
        let port2 = orthogonal_port_pdf(0.0, &p).unwrap() / (0.2f64 + FRAC_PI_2).sin().powi(2);
        for t in [0.0, 0.4, 1.3, 3.0] {
            let sum = pointer_pdf(t, &p).unwrap() / c1 + orthogonal_port_pdf(t, &p).unwrap() / port2;
            assert!(rel(sum, (-t).exp()) < 1e-13);
        }
    }

    #[test]
    fn convolution_reduces_to_impulse_and_has_rising_edge() {
        let p = params(1.0, 0.0, FRAC_PI_2);
        let m = PointerModel::new(&p).unwrap();
        for t in [0.0, 0.1, 2.0] {
            assert_eq!(m.convolved_pdf(t), m.pdf(t));
        }
        let sq = PointerModel::new(&p.with_pulse(PulseShape::square(0.5).unwrap()).unwrap()).unwrap();
        assert_eq!(sq.convolved_pdf(0.0), 0.0);
        assert!(sq.convolved_pdf(0.2) < sq.convolved_pdf(0.4));
        // exponential tail beyond the pulse: (e^{T} - 1)/T * e^{-t}
        let tail = (0.5f64.exp() - 1.0) / 0.5;
        assert!(rel(sq.convolved_pdf(2.0), tail * (-2.0f64).exp()) < 1e-13);
        assert!(rel(sq.convolved_mean(), 1.25) < 1e-14);
    }

    #[test]
    fn bin_masses_sum_to_window_mass() {
        let p = VSystemParams::new(1.0, 0.3, 0.4, PulseShape::square(0.2).unwrap()).unwrap();
        let m = PointerModel::new(&p).unwrap();
        let masses = m.bin_masses(0.01, 3000);
        let total: f64 = masses.iter().sum();
        assert!((total - (1.0 - m.convolved_survival(30.0))).abs() < 1e-12);
    }
}
