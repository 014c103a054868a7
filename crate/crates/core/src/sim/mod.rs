//! Shot-based Monte Carlo of the photon-counting experiment.
//!
//! Each shot receives a Poisson number of photons (signal and background),
//! arrival times are drawn from the pulse-convolved model and quantized to
//! digitizer ticks, then a sequential detector pass adds dead time and
//! afterpulsing.

mod config;
mod detector;
mod events;
mod sampler;

pub use config::{DetectorConfig, SimConfig};
pub use detector::apply_detector;
pub use events::{EventRecord, EventStream, EventTag};
pub use sampler::{sample_arrival, sample_background, ArrivalSampler};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::Result;
use crate::pointer::PulseShape;

/// Shots per independently seeded block.
const BLOCK_SHOTS: u64 = 1 << 22;
/// RNG stream reserved for the detector pass.
const DETECTOR_STREAM: u64 = u64::MAX;

struct ShotModel {
    arrival: ArrivalSampler,
    gamma: f64,
    pulse: PulseShape,
    total_rate: f64,
    signal_share: f64,
    tick: f64,
    rep_ticks: u64,
    rep_period: f64,
}

impl ShotModel {
    /// Zero-truncated Poisson draw by inversion.
    fn photons<R: Rng>(&self, rng: &mut R) -> u32 {
        let mu = self.total_rate;
        let mut term = mu * (-mu).exp() / -(-mu).exp_m1();
        let mut u = rng.random::<f64>();
        let mut k = 1;
        while u > term && k < 1000 {
            u -= term;
            k += 1;
            term *= mu / k as f64;
        }
        k
    }

    fn block<R: Rng>(&self, first: u64, last: u64, rng: &mut R) -> Vec<EventRecord> {
        let mut out = Vec::new();
        let mut shot = first;
        let mut scratch = Vec::new();
        loop {
            // shots until the next non-empty one are geometric in 1 - exp(-mu)
            let skip = (rng.sample::<f64, _>(Exp1) / self.total_rate).floor();
            if skip >= (last - shot) as f64 {
                break;
            }
            shot += skip as u64;
            scratch.clear();
            for _ in 0..self.photons(rng) {
                let (t, tag) = if rng.random::<f64>() < self.signal_share {
                    (self.arrival.sample(rng), EventTag::Signal)
                } else {
                    (sample_background(self.gamma, self.pulse, rng), EventTag::Background)
                };
                if t < self.rep_period {
                    let ticks = ((t / self.tick).floor() as u64).min(self.rep_ticks - 1);
                    scratch.push((ticks, tag));
                }
            }
            scratch.sort_unstable_by_key(|&(t, _)| t);
            out.extend(scratch.iter().map(|&(t, tag)| EventRecord::new(shot, t, self.rep_ticks, tag)));
            shot += 1;
            if shot >= last {
                break;
            }
        }
        out
    }
}

/// Photon stream before the detector, ordered by absolute time.
pub fn generate_photons(config: &SimConfig) -> Result<EventStream> {
    config.validate()?;
    let signal = config.signal_rate()?;
    let background = config.background_rate()?;
    let rep_ticks = config.rep_ticks();
    let model = ShotModel {
        arrival: ArrivalSampler::new(&config.physics)?,
        gamma: config.physics.gamma(),
        pulse: config.physics.pulse(),
        total_rate: signal + background,
        signal_share: signal / (signal + background),
        tick: config.detector.bin_width,
        rep_ticks,
        rep_period: config.rep_period,
    };
    let n_blocks = config.n_shots.div_ceil(BLOCK_SHOTS);
    let blocks: Vec<Vec<EventRecord>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
            rng.set_stream(b);
            let first = b * BLOCK_SHOTS;
            model.block(first, (first + BLOCK_SHOTS).min(config.n_shots), &mut rng)
        })
        .collect();
    let mut events = Vec::with_capacity(blocks.iter().map(Vec::len).sum());
    for b in blocks {
        events.extend(b);
    }
    Ok(EventStream { tick_ps: config.detector.tick_ps(), rep_ticks, n_shots: config.n_shots, events })
}

/// Full simulation: photon generation followed by the detector model.
///
/// With the same seed, runs that differ only in the detector settings see
/// identical photons.
pub fn run_simulation(config: &SimConfig) -> Result<EventStream> {
    let photons = generate_photons(config)?;
    if !config.detector.enabled {
        return Ok(photons);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(DETECTOR_STREAM);
    let end = config.n_shots * photons.rep_ticks;
    let events = apply_detector(&photons.events, &config.detector, photons.rep_ticks, end, &mut rng);
    Ok(photons.with_events(events))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointer::VSystemParams;

    fn config(seed: u64) -> SimConfig {
        let p = VSystemParams::new(1.0 / 26e-9, std::f64::consts::TAU * 600e3, 0.3, PulseShape::square(4.2e-9).unwrap())
            .unwrap();
        let mut c = SimConfig::new(p, 2_000_000, seed);
        c.background_fraction = 0.12;
        c.detect_prob = 0.05;
        c
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = run_simulation(&config(5)).unwrap();
        let b = run_simulation(&config(5)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.events, run_simulation(&config(6)).unwrap().events);
    }

    #[test]
    fn ordered_and_quantized() {
        let s = run_simulation(&config(1)).unwrap();
        EventStream::check_order(&s.events).unwrap();
        assert!(s.events.iter().all(|e| e.t_rel < s.rep_ticks && e.t_abs == e.shot_index * s.rep_ticks + e.t_rel));
    }

    #[test]
    fn dead_time_is_respected() {
        let c = config(2);
        let s = run_simulation(&c).unwrap();
        let dead = c.detector.dead_ticks();
        assert!(s.events.windows(2).all(|w| w[1].t_abs - w[0].t_abs >= dead));
    }

    #[test]
    fn detector_off_keeps_every_photon() {
        let mut c = config(3);
        c.detector.enabled = false;
        let photons = generate_photons(&c).unwrap();
        assert_eq!(run_simulation(&c).unwrap(), photons);
        let expected = (c.signal_rate().unwrap() + c.background_rate().unwrap()) * c.n_shots as f64;
        assert!((photons.len() as f64 - expected).abs() < 5.0 * expected.sqrt());
    }
}
