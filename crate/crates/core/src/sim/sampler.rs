use rand::Rng;
use rand_distr::Exp1;

use crate::error::Result;
use crate::pointer::{PointerModel, PulseShape, VSystemParams};

/// Rejection sampler for the detected arrival time of a postselected photon.
///
/// Proposals are pulse offset plus an exponential emission delay; a proposal
/// is kept with probability `sin^2(delta t' + eps)` at the emission delay `t'`.
#[derive(Debug, Clone, Copy)]
pub struct ArrivalSampler {
    gamma: f64,
    delta: f64,
    epsilon: f64,
    pulse: f64,
}

impl ArrivalSampler {
    pub fn new(params: &VSystemParams) -> Result<Self> {
        PointerModel::new(params)?;
        Ok(Self {
            gamma: params.gamma(),
            delta: params.delta(),
            epsilon: params.epsilon(),
            pulse: params.pulse().duration(),
        })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let emission = rng.sample::<f64, _>(Exp1) / self.gamma;
            let keep = (self.delta * emission + self.epsilon).sin().powi(2);
            if rng.random::<f64>() < keep {
                return emission + self.offset(rng);
            }
        }
    }

    /// Like [`sample`](Self::sample), also returning the number of proposals drawn.
    pub fn sample_counted<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, u64) {
        let mut proposals = 0;
        loop {
            proposals += 1;
            let emission = rng.sample::<f64, _>(Exp1) / self.gamma;
            if rng.random::<f64>() < (self.delta * emission + self.epsilon).sin().powi(2) {
                return (emission + self.offset(rng), proposals);
            }
        }
    }

    #[inline]
    fn offset<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.pulse > 0.0 {
            self.pulse * rng.random::<f64>()
        } else {
            0.0
        }
    }
}

/// One draw of the detected arrival time for the given physics.
pub fn sample_arrival<R: Rng + ?Sized>(params: &VSystemParams, rng: &mut R) -> Result<f64> {
    Ok(ArrivalSampler::new(params)?.sample(rng))
}

/// One draw from the pulse-convolved natural decay.
pub fn sample_background<R: Rng + ?Sized>(gamma: f64, pulse: PulseShape, rng: &mut R) -> f64 {
    let offset = match pulse {
        PulseShape::Impulse => 0.0,
        PulseShape::Square { duration } => duration * rng.random::<f64>(),
    };
    rng.sample::<f64, _>(Exp1) / gamma + offset
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn natural_decay_mean() {
        let p = VSystemParams::natural(2.0, PulseShape::Impulse).unwrap();
        let s = ArrivalSampler::new(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mean = (0..n).map(|_| s.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 4.0 * 0.5 / (n as f64).sqrt());
    }

    #[test]
    fn degenerate_is_rejected() {
        let p = VSystemParams::new(1.0, 0.0, 0.0, PulseShape::Impulse).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(sample_arrival(&p, &mut rng).is_err());
    }

    #[test]
    fn background_is_after_trigger() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pulse = PulseShape::square(0.3).unwrap();
        assert!((0..1000).all(|_| sample_background(1.0, pulse, &mut rng) >= 0.0));
    }
}
