use std::f64::consts::{FRAC_PI_4, TAU};

use crate::error::{Error, Result};
use crate::pointer::{PointerModel, VSystemParams};
use crate::quad::integrate_segmented;

/// Integration horizon in lifetimes.
const HORIZON: f64 = 80.0;

/// Fisher information about `delta` carried by one detected photon, in s^2.
///
/// With `phi = delta t + eps` and `g = d ln C / d delta`, the score is
/// `g + 2 t cot(phi)`, so the integrand `(score)^2 P` becomes
/// `C exp(-gamma t) (g sin(phi) + 2 t cos(phi))^2`, free of poles.
pub fn fisher_information(params: &VSystemParams) -> Result<f64> {
    let model = PointerModel::new(params)?;
    let (g, d, e) = (params.gamma(), params.delta(), params.epsilon());
    let z2 = g * g + 4.0 * d * d;
    let (se, ce) = e.sin_cos();
    let q = (g * se + d * ce).powi(2) + d * d * (1.0 + se * se);
    let dq = 4.0 * d + 2.0 * g * se * ce;
    let dlog_norm = 8.0 * d / z2 - dq / q;
    let c = model.norm();
    let integrand = |t: f64| {
        let (s, co) = (d * t + e).sin_cos();
        c * (-g * t).exp() * (dlog_norm * s + 2.0 * t * co).powi(2)
    };
    let segment = if d > 0.0 { (1.0 / g).min(FRAC_PI_4 / d) } else { 1.0 / g };
    let horizon = HORIZON / g;
    let (rough, _) = integrate_segmented(integrand, 0.0, horizon, segment, 1e-6 / (g * g));
    let (value, _) = integrate_segmented(integrand, 0.0, horizon, segment, 1e-11 * rough.abs().max(1e-30 / (g * g)));
    Ok(value.max(0.0))
}

/// Cramer-Rao bound on the Zeeman shift for photons detected at
/// `count_rate` per second, as a cyclic frequency in Hz/sqrt(Hz). Returns
/// infinity where the distribution does not depend on `delta` to first order.
pub fn crlb_sensitivity(params: &VSystemParams, count_rate: f64) -> Result<f64> {
    if !(count_rate.is_finite() && count_rate > 0.0) {
        return Err(Error::invalid("count_rate", format!("must be positive, got {count_rate}")));
    }
    let info = fisher_information(params)?;
    let gamma = params.gamma();
    if info * gamma * gamma < 1e-24 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (info * count_rate).sqrt() / TAU)
}
