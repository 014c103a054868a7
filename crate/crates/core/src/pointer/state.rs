use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Pure polarization state over the circular basis {|+>, |->}, which maps one
/// to one onto the m = +-1 excited states for emission along the field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    c_plus: Complex64,
    c_minus: Complex64,
}

const NORM_TOL: f64 = 1e-12;
const ORTHOGONAL_TOL: f64 = 1e-12;

impl PolarizationState {
    pub fn new(c_plus: Complex64, c_minus: Complex64) -> Result<Self> {
        let norm = c_plus.norm_sqr() + c_minus.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid("state", format!("|c+|^2 + |c-|^2 = {norm}, expected 1")));
        }
        Ok(Self { c_plus, c_minus })
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized(c_plus: Complex64, c_minus: Complex64) -> Result<Self> {
        let norm = (c_plus.norm_sqr() + c_minus.norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::invalid("state", "cannot normalize a zero or non-finite vector"));
        }
        Ok(Self { c_plus: c_plus / norm, c_minus: c_minus / norm })
    }

    /// Linear polarization excited by the pump: (|+> + |->)/sqrt2.
    pub fn preselected() -> Self {
        let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self { c_plus: a, c_minus: a }
    }

    pub fn c_plus(&self) -> Complex64 {
        self.c_plus
    }

    pub fn c_minus(&self) -> Complex64 {
        self.c_minus
    }

    /// <self|other>
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.c_plus.conj() * other.c_plus + self.c_minus.conj() * other.c_minus
    }

    /// <self|sigma_z|other>
    pub fn sigma_z_element(&self, other: &Self) -> Complex64 {
        self.c_plus.conj() * other.c_plus - self.c_minus.conj() * other.c_minus
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for WeakValue {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Weak value of sigma_z, `<post|sigma_z|pre> / <post|pre>`.
pub fn weak_value(pre: &PolarizationState, post: &PolarizationState) -> Result<WeakValue> {
    let overlap = post.inner(pre);
    if overlap.norm() <= ORTHOGONAL_TOL {
        return Err(Error::OrthogonalStates { overlap: overlap.norm() });
    }
    Ok((post.sigma_z_element(pre) / overlap).into())
}

/// Postselected linear polarization at 90 deg + `epsilon` from the prepared one.
///
/// The ket is `(e^{i eps}|+> - e^{-i eps}|->)/sqrt2`, so its bra carries the
/// coefficients `(e^{-i eps}, -e^{i eps})`. With |+> shifted up by hbar*delta
/// (evolving as `e^{-i delta t}`) this yields `|<phi|psi(t)>|^2 = sin^2(delta t + eps)`
/// and a weak value of `+i cot(eps)`.
pub fn postselect_angle(epsilon: f64) -> Result<PolarizationState> {
    if !(0.0..=FRAC_PI_2).contains(&epsilon) {
        return Err(Error::invalid("epsilon", format!("postselection angle must lie in [0, pi/2], got {epsilon}")));
    }
    let s = FRAC_1_SQRT_2;
    Ok(PolarizationState {
        c_plus: Complex64::from_polar(s, epsilon),
        c_minus: -Complex64::from_polar(s, -epsilon),
    })
}
