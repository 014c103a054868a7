use crate::error::{Error, Result};
use crate::histogram::TimeHistogram;

/// Gaussian low-pass filter for display. `full_width` is the FWHM; the
/// kernel is cut at four standard deviations and renormalized where it runs
/// off either end of the histogram. Variances propagate as `sum k^2 var`.
pub fn smooth_gaussian(hist: &TimeHistogram, full_width: f64) -> Result<TimeHistogram> {
    let bin = hist.bin_width();
    if !(full_width > bin) {
        return Err(Error::invalid("full_width", format!("must exceed the bin width {bin:e} s")));
    }
    let sigma = full_width / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt()) / bin;
    let reach = (4.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-reach..=reach).map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp()).collect();

    let n = hist.len() as isize;
    let (counts, variance) = (hist.counts(), hist.variance());
    let mut out_c = Vec::with_capacity(hist.len());
    let mut out_v = Vec::with_capacity(hist.len());
    for i in 0..n {
        let lo = (i - reach).max(0);
        let hi = (i + reach).min(n - 1);
        let taps = &kernel[(lo - i + reach) as usize..=(hi - i + reach) as usize];
        let norm: f64 = taps.iter().sum();
        let (mut c, mut v) = (0.0, 0.0);
        for (k, j) in taps.iter().zip(lo..=hi) {
            let w = k / norm;
            c += w * counts[j as usize];
            v += w * w * variance[j as usize];
        }
        out_c.push(c);
        out_v.push(v);
    }
    TimeHistogram::with_variance(bin, out_c, out_v, hist.n_shots())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spike_becomes_unit_gaussian() {
        let mut counts = vec![0.0; 201];
        counts[100] = 1.0;
        let h = TimeHistogram::from_counts(0.1, counts, 1).unwrap();
        let s = smooth_gaussian(&h, 2.0).unwrap();
        let c = s.counts();
        assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // half maximum one half-width (10 bins) from the centre
        let half = 0.5 * c[100];
        assert!(c[90] > half * 0.9 && c[90] < half * 1.1);
        assert!((c[90] - c[110]).abs() < 1e-15);
    }

    #[test]
    fn constant_is_preserved() {
        let h = TimeHistogram::from_counts(0.1, vec![4.0; 300], 1).unwrap();
        let s = smooth_gaussian(&h, 4.2).unwrap();
        assert!(s.counts().iter().all(|&c| (c - 4.0).abs() < 1e-12));
    }

    #[test]
    fn width_must_exceed_bin() {
        let h = TimeHistogram::from_counts(0.1, vec![4.0; 30], 1).unwrap();
        assert!(smooth_gaussian(&h, 0.1).is_err());
    }
}
