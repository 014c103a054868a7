use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

use super::fit::FitWindow;

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn new(value: f64, se: f64) -> Self {
        Self { value, se }
    }
}

/// Outcome of fitting one histogram. Quantities a given fit does not
/// produce stay `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisResult {
    /// Expected photons over all times, in counts.
    pub scale: Estimate,
    /// Effective decay rate, 1/s.
    pub gamma_eff: Option<Estimate>,
    /// Mean arrival time after removing the pulse offset, seconds.
    pub mean_arrival: Option<Estimate>,
    pub chi2_reduced: f64,
    pub window: FitWindow,
    /// Background share of the eps = 0 reference photons.
    pub background_fraction: Option<f64>,
}

impl AnalysisResult {
    pub fn new(scale: Estimate, chi2_reduced: f64, window: FitWindow) -> Self {
        Self { scale, gamma_eff: None, mean_arrival: None, chi2_reduced, window, background_fraction: None }
    }

    /// Parses the `key = value` block written by `Display`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::ConfigParse { line: n + 1, message: "expected `key = value`".into() })?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::ConfigParse { line: n + 1, message: format!("`{}` is not a number", v.trim()) })?;
            map.insert(k.trim().to_string(), v);
        }
        let need = |k: &str| {
            map.get(k).copied().ok_or_else(|| Error::Validation { key: k.into(), reason: "missing from result".into() })
        };
        let pair = |k: &str, se: &str| -> Result<Option<Estimate>> {
            match (map.get(k), map.get(se)) {
                (Some(&v), Some(&s)) => Ok(Some(Estimate::new(v, s))),
                (None, None) => Ok(None),
                _ => Err(Error::Validation { key: k.into(), reason: format!("needs both `{k}` and `{se}`") }),
            }
        };
        Ok(Self {
            scale: Estimate::new(need("scale")?, need("scale_se")?),
            gamma_eff: pair("gamma_eff_per_s", "gamma_eff_se_per_s")?,
            mean_arrival: pair("mean_arrival_s", "mean_arrival_se_s")?,
            chi2_reduced: need("chi2_reduced")?,
            window: FitWindow::new(need("window_lo_s")?, need("window_hi_s")?),
            background_fraction: map.get("background_fraction").copied(),
        })
    }
}

impl fmt::Display for AnalysisResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scale = {:e}", self.scale.value)?;
        writeln!(f, "scale_se = {:e}", self.scale.se)?;
        if let Some(g) = self.gamma_eff {
            writeln!(f, "gamma_eff_per_s = {:e}", g.value)?;
            writeln!(f, "gamma_eff_se_per_s = {:e}", g.se)?;
        }
        if let Some(m) = self.mean_arrival {
            writeln!(f, "mean_arrival_s = {:e}", m.value)?;
            writeln!(f, "mean_arrival_se_s = {:e}", m.se)?;
        }
        writeln!(f, "chi2_reduced = {:e}", self.chi2_reduced)?;
        writeln!(f, "window_lo_s = {:e}", self.window.lo)?;
        writeln!(f, "window_hi_s = {:e}", self.window.hi)?;
        if let Some(b) = self.background_fraction {
            writeln!(f, "background_fraction = {b:e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut r = AnalysisResult::new(Estimate::new(1.0 / 3.0, 0.1), 1.02, FitWindow::new(0.0, 5.2e-7));
        assert_eq!(AnalysisResult::from_text(&r.to_string()).unwrap(), r);
        r.gamma_eff = Some(Estimate::new(3.8e7, 1.1e5));
        r.mean_arrival = Some(Estimate::new(2.6e-8, 1.7e-11));
        r.background_fraction = Some(0.12);
        assert_eq!(AnalysisResult::from_text(&r.to_string()).unwrap(), r);
    }

    #[test]
    fn missing_keys_are_reported() {
        assert!(AnalysisResult::from_text("scale = 1\n").is_err());
        assert!(AnalysisResult::from_text("scale 1\n").is_err());
    }
}
