//! Analytic model of the postselected emission: states, weak values and the
//! arrival-time distribution in time and frequency.

mod distribution;
mod params;
mod spectrum;
mod state;

pub use distribution::{
    approx_decay_rate, closed_form_norm, convolved_pdf, mean_arrival_time, mean_shift, mean_shift_from_weak_value,
    orthogonal_port_pdf, pointer_pdf, ApproxDecay, PointerModel,
};
pub use params::{PulseShape, VSystemParams};
pub use spectrum::{compliant_grid, lorentzian, spectral_amplitude, spectral_amplitude_for, SpectralAmplitude, TimeAmplitude};
pub use state::{postselect_angle, weak_value, PolarizationState, WeakValue};
