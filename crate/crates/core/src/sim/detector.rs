use rand::Rng;

use super::config::DetectorConfig;
use super::events::{EventRecord, EventTag};

/// Sequential sweep of a non-paralyzable detector over an ordered photon
/// stream. Afterpulses fire exactly when the dead time ends and are clicks
/// in their own right, so they can cascade. An afterpulse due on the same
/// tick as a photon is processed first.
pub fn apply_detector<R: Rng + ?Sized>(
    photons: &[EventRecord],
    detector: &DetectorConfig,
    rep_ticks: u64,
    end_tick: u64,
    rng: &mut R,
) -> Vec<EventRecord> {
    if !detector.enabled {
        return photons.to_vec();
    }
    let dead = detector.dead_ticks();
    let p = detector.afterpulse_prob;
    let mut out = Vec::with_capacity(photons.len() + photons.len() / 20);
    let mut last: Option<u64> = None;
    let mut pending: Option<u64> = None;

    // records a click and returns the tick of its afterpulse, if any
    let click = |rec: EventRecord, rng: &mut R, out: &mut Vec<EventRecord>| -> Option<u64> {
        out.push(rec);
        (p > 0.0 && rng.random::<f64>() < p).then_some(rec.t_abs + dead)
    };

    for ph in photons {
        while let Some(ap) = pending.filter(|&ap| ap <= ph.t_abs) {
            last = Some(ap);
            pending = click(EventRecord::from_abs(ap, rep_ticks, EventTag::Afterpulse), rng, &mut out);
        }
        if last.is_none_or(|l| ph.t_abs - l >= dead) {
            last = Some(ph.t_abs);
            pending = click(*ph, rng, &mut out);
        }
    }
    while let Some(ap) = pending.filter(|&ap| ap < end_tick) {
        pending = click(EventRecord::from_abs(ap, rep_ticks, EventTag::Afterpulse), rng, &mut out);
    }
    out
}
