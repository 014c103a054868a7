use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{Error, Result};

/// Temporal profile of the excitation pulse. The emission clock starts at a
/// uniformly distributed instant inside a square pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseShape {
    Impulse,
    Square { duration: f64 },
}

impl PulseShape {
    pub fn square(duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::invalid("pulse.duration", format!("square pulse needs a positive duration, got {duration}")));
        }
        Ok(PulseShape::Square { duration })
    }

    /// Impulse for a zero duration, square otherwise.
    pub fn from_duration(duration: f64) -> Result<Self> {
        if duration == 0.0 {
            Ok(PulseShape::Impulse)
        } else {
            Self::square(duration)
        }
    }

    pub fn duration(&self) -> f64 {
        match *self {
            PulseShape::Impulse => 0.0,
            PulseShape::Square { duration } => duration,
        }
    }

    /// Mean delay added by the pulse to the emission time.
    pub fn mean_offset(&self) -> f64 {
        0.5 * self.duration()
    }
}

/// Physical configuration of the Zeeman-split V system.
///
/// `gamma` is the excited-state decay rate in 1/s, `delta` the angular Zeeman
/// shift in rad/s (levels at +-hbar*delta) and `epsilon` the postselection
/// angle in radians. Configuration files speak cyclic frequencies; use
/// [`VSystemParams::from_cyclic`] to convert.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VSystemParams {
    gamma: f64,
    delta: f64,
    epsilon: f64,
    pulse: PulseShape,
}

impl VSystemParams {
    pub fn new(gamma: f64, delta: f64, epsilon: f64, pulse: PulseShape) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::invalid("gamma", format!("decay rate must be positive and finite, got {gamma}")));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::invalid("delta", format!("Zeeman splitting must be >= 0, got {delta}")));
        }
        if !(0.0..=FRAC_PI_2).contains(&epsilon) {
            return Err(Error::invalid("epsilon", format!("postselection angle must lie in [0, pi/2], got {epsilon}")));
        }
        if let PulseShape::Square { duration } = pulse {
            PulseShape::square(duration)?;
        }
        Ok(Self { gamma, delta, epsilon, pulse })
    }

    /// `gamma_fwhm_hz` is the Lorentzian FWHM and `delta_hz` the Zeeman shift,
    /// both cyclic; each is multiplied by 2*pi.
    pub fn from_cyclic(gamma_fwhm_hz: f64, delta_hz: f64, epsilon: f64, pulse: PulseShape) -> Result<Self> {
        Self::new(TAU * gamma_fwhm_hz, TAU * delta_hz, epsilon, pulse)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn pulse(&self) -> PulseShape {
        self.pulse
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.gamma, self.delta, epsilon, self.pulse)
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.gamma, delta, self.epsilon, self.pulse)
    }

    pub fn with_pulse(&self, pulse: PulseShape) -> Result<Self> {
        Self::new(self.gamma, self.delta, self.epsilon, pulse)
    }

    /// Natural decay: no splitting and no postselection bias.
    pub fn natural(gamma: f64, pulse: PulseShape) -> Result<Self> {
        Self::new(gamma, 0.0, FRAC_PI_2, pulse)
    }

    pub fn is_degenerate(&self) -> bool {
        self.delta == 0.0 && self.epsilon == 0.0
    }

    /// Diagnostic flag for the amplification regime `delta/gamma << epsilon << 1`,
    /// taken as one order of magnitude on each side.
    pub fn weak_regime(&self) -> bool {
        self.delta / self.gamma < self.epsilon / 10.0 && self.epsilon < 0.1 * FRAC_PI_2
    }

    pub fn lifetime(&self) -> f64 {
        1.0 / self.gamma
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(VSystemParams::new(-1.0, 0.0, 0.1, PulseShape::Impulse).is_err());
        assert!(VSystemParams::new(1.0, -0.1, 0.1, PulseShape::Impulse).is_err());
        assert!(VSystemParams::new(1.0, 0.0, 1.6, PulseShape::Impulse).is_err());
        assert!(VSystemParams::new(1.0, 0.0, 0.1, PulseShape::Square { duration: 0.0 }).is_err());
        assert!(PulseShape::from_duration(0.0).unwrap() == PulseShape::Impulse);
    }

    #[test]
    fn cyclic_conversion() {
        let p = VSystemParams::from_cyclic(1.0, 600e3, 0.2, PulseShape::Impulse).unwrap();
        assert_eq!(p.delta(), TAU * 600e3);
        assert_eq!(p.gamma(), TAU);
    }

    #[test]
    fn weak_regime_flag() {
        let p = VSystemParams::new(1.0, 0.001, 0.05, PulseShape::Impulse).unwrap();
        assert!(p.weak_regime());
        assert!(!p.with_delta(0.01).unwrap().weak_regime());
        assert!(!p.with_epsilon(0.5).unwrap().weak_regime());
    }
}
