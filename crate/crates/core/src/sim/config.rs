use crate::error::{Error, Result};
use crate::pointer::{PointerModel, VSystemParams};

/// Photodetector model applied to the merged photon stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Non-paralyzable dead time after each accepted click, seconds.
    pub dead_time: f64,
    /// Probability of a spurious click exactly at the end of the dead time.
    pub afterpulse_prob: f64,
    /// Digitizer tick, seconds. All timestamps are floor-quantized to it.
    pub bin_width: f64,
    /// When false the detector is ideal: no dead time and no afterpulses.
    pub enabled: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { dead_time: 52e-9, afterpulse_prob: 0.02, bin_width: 100e-12, enabled: true }
    }
}

impl DetectorConfig {
    pub fn ideal(bin_width: f64) -> Self {
        Self { dead_time: 0.0, afterpulse_prob: 0.0, bin_width, enabled: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            return Err(Error::invalid("detector.bin_width", format!("must be positive, got {}", self.bin_width)));
        }
        let ps = self.bin_width * 1e12;
        if ps < 0.5 || (ps - ps.round()).abs() > 1e-6 * ps {
            return Err(Error::invalid("detector.bin_width", "must be a whole number of picoseconds"));
        }
        if !(self.dead_time.is_finite() && self.dead_time >= 0.0) {
            return Err(Error::invalid("detector.dead_time", format!("must be >= 0, got {}", self.dead_time)));
        }
        if !(0.0..=0.1).contains(&self.afterpulse_prob) {
            return Err(Error::invalid("detector.afterpulse_prob", format!("must lie in [0, 0.1], got {}", self.afterpulse_prob)));
        }
        if self.enabled && self.afterpulse_prob > 0.0 && self.dead_ticks() == 0 {
            return Err(Error::invalid("detector.dead_time", "afterpulsing needs a dead time of at least one tick"));
        }
        Ok(())
    }

    /// Digitizer tick in whole picoseconds.
    pub fn tick_ps(&self) -> u64 {
        (self.bin_width * 1e12).round() as u64
    }

    pub fn dead_ticks(&self) -> u64 {
        (self.dead_time / self.bin_width).round() as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub physics: VSystemParams,
    pub n_shots: u64,
    /// Seconds between excitation triggers.
    pub rep_period: f64,
    /// Mean number of photons per shot that reach the postselection optics.
    pub detect_prob: f64,
    /// Incoherent share of all detected photons in the eps = 0 reference.
    pub background_fraction: f64,
    pub rng_seed: u64,
    pub detector: DetectorConfig,
}

impl SimConfig {
    pub fn new(physics: VSystemParams, n_shots: u64, rng_seed: u64) -> Self {
        Self {
            physics,
            n_shots,
            rep_period: 1e-6,
            detect_prob: 0.01,
            background_fraction: 0.0,
            rng_seed,
            detector: DetectorConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        if self.n_shots == 0 {
            return Err(Error::invalid("n_shots", "need at least one shot"));
        }
        let horizon = 20.0 / self.physics.gamma() + self.physics.pulse().duration();
        if !(self.rep_period.is_finite() && self.rep_period > horizon) {
            return Err(Error::invalid(
                "rep_period",
                format!("must exceed 20 lifetimes plus the pulse ({horizon:e} s), got {}", self.rep_period),
            ));
        }
        let ratio = self.rep_period / self.detector.bin_width;
        if (ratio - ratio.round()).abs() > 1e-6 * ratio {
            return Err(Error::invalid("rep_period", "must be a whole number of digitizer ticks"));
        }
        if !(self.detect_prob > 0.0 && self.detect_prob <= 1.0) {
            return Err(Error::invalid("detect_prob", format!("must lie in (0, 1], got {}", self.detect_prob)));
        }
        if !(0.0..0.5).contains(&self.background_fraction) {
            return Err(Error::invalid("background_fraction", format!("must lie in [0, 0.5), got {}", self.background_fraction)));
        }
        if self.background_fraction > 0.0 && self.physics.delta() == 0.0 {
            return Err(Error::invalid("background_fraction", "the eps = 0 reference is empty when delta = 0"));
        }
        PointerModel::new(&self.physics)?;
        Ok(())
    }

    pub fn rep_ticks(&self) -> u64 {
        (self.rep_period / self.detector.bin_width).round() as u64
    }

    /// Mean postselected signal photons per shot.
    pub fn signal_rate(&self) -> Result<f64> {
        Ok(self.detect_prob * PointerModel::new(&self.physics)?.acceptance())
    }

    /// Mean background photons per shot; fixed by the eps = 0 reference and
    /// independent of the configured angle.
    pub fn background_rate(&self) -> Result<f64> {
        if self.background_fraction == 0.0 {
            return Ok(0.0);
        }
        let reference = PointerModel::new(&self.physics.with_epsilon(0.0)?)?.acceptance();
        let f = self.background_fraction;
        Ok(f / (1.0 - f) * self.detect_prob * reference)
    }

    /// Sets `n_shots` so the expected number of photons before the detector
    /// is `target`.
    pub fn with_target_events(mut self, target: f64) -> Result<Self> {
        let per_shot = self.signal_rate()? + self.background_rate()?;
        self.n_shots = (target / per_shot).ceil().max(1.0) as u64;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointer::PulseShape;

    fn paper() -> VSystemParams {
        VSystemParams::new(1.0 / 26e-9, std::f64::consts::TAU * 600e3, 0.2, PulseShape::square(4.2e-9).unwrap()).unwrap()
    }

    #[test]
    fn defaults_validate() {
        assert!(SimConfig::new(paper(), 1000, 1).validate().is_ok());
    }

    #[test]
    fn invariants_are_enforced() {
        let base = SimConfig::new(paper(), 1000, 1);
        assert!(SimConfig { n_shots: 0, ..base.clone() }.validate().is_err());
        assert!(SimConfig { rep_period: 100e-9, ..base.clone() }.validate().is_err());
        assert!(SimConfig { background_fraction: 0.5, ..base.clone() }.validate().is_err());
        let mut d = base.clone();
        d.detector.afterpulse_prob = 0.2;
        assert!(d.validate().is_err());
        d.detector.afterpulse_prob = 0.02;
        d.detector.dead_time = 0.0;
        assert!(d.validate().is_err());
    }

    #[test]
    fn background_rate_ignores_epsilon() {
        let mut c = SimConfig::new(paper(), 1000, 1);
        c.background_fraction = 0.12;
        let a = c.background_rate().unwrap();
        c.physics = c.physics.with_epsilon(1.0).unwrap();
        assert_eq!(a, c.background_rate().unwrap());
        c.physics = c.physics.with_epsilon(0.0).unwrap();
        let s = c.signal_rate().unwrap();
        assert!((a / (a + s) - 0.12).abs() < 1e-12);
    }
}
