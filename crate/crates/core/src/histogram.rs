//! Arrival-time histograms relative to the excitation trigger.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::{EventRecord, EventStream};

/// Binned counts with a per-bin variance channel and optional dead-time
/// correction factors. Counts become real-valued once corrected or
/// background-subtracted.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeHistogram {
    bin_width: f64,
    counts: Vec<f64>,
    variance: Vec<f64>,
    n_shots: u64,
    corrections: Option<Vec<f64>>,
}

impl TimeHistogram {
    /// Raw counts with Poisson variance.
    pub fn from_counts(bin_width: f64, counts: Vec<f64>, n_shots: u64) -> Result<Self> {
        let variance = counts.clone();
        Self::with_variance(bin_width, counts, variance, n_shots)
    }

    pub fn with_variance(bin_width: f64, counts: Vec<f64>, variance: Vec<f64>, n_shots: u64) -> Result<Self> {
        if !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(Error::invalid("bin_width", format!("must be positive, got {bin_width}")));
        }
        if variance.len() != counts.len() {
            return Err(Error::invalid("variance", "length differs from counts"));
        }
        if let Some(i) = counts.iter().position(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::invalid("counts", format!("bin {i} is negative or non-finite")));
        }
        if let Some(i) = variance.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("variance", format!("bin {i} is negative or non-finite")));
        }
        Ok(Self { bin_width, counts, variance, n_shots, corrections: None })
    }

    pub(crate) fn with_corrections(mut self, corrections: Vec<f64>) -> Self {
        debug_assert_eq!(corrections.len(), self.counts.len());
        self.corrections = Some(corrections);
        self
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn variance(&self) -> &[f64] {
        &self.variance
    }

    pub fn n_shots(&self) -> u64 {
        self.n_shots
    }

    pub fn corrections(&self) -> Option<&[f64]> {
        self.corrections.as_deref()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn window(&self) -> f64 {
        self.bin_width * self.counts.len() as f64
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.bin_width
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// First `n_bins` bins.
    pub fn truncated(&self, n_bins: usize) -> Self {
        let n = n_bins.min(self.len());
        Self {
            bin_width: self.bin_width,
            counts: self.counts[..n].to_vec(),
            variance: self.variance[..n].to_vec(),
            n_shots: self.n_shots,
            corrections: self.corrections.as_ref().map(|c| c[..n].to_vec()),
        }
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if (self.bin_width - other.bin_width).abs() > 1e-9 * self.bin_width {
            return Err(Error::Incompatible(format!("bin widths {:e} s and {:e} s", self.bin_width, other.bin_width)));
        }
        if self.len() != other.len() {
            return Err(Error::Incompatible(format!("{} bins vs {} bins", self.len(), other.len())));
        }
        Ok(())
    }

    /// Bin-wise sum of counts and variances; shot counts add.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Self::with_variance(
            self.bin_width,
            self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect(),
            self.variance.iter().zip(&other.variance).map(|(a, b)| a + b).collect(),
            self.n_shots + other.n_shots,
        )
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut emit = || -> std::io::Result<()> {
            writeln!(
                w,
                "# bin_width_ps={}, n_shots={}, window_ps={}",
                to_ps(self.bin_width),
                self.n_shots,
                to_ps(self.bin_width) * self.len() as u64
            )?;
            writeln!(w, "bin_index,count,variance,correction")?;
            for i in 0..self.len() {
                let corr = self.corrections.as_ref().map(|c| format!("{:e}", c[i])).unwrap_or_default();
                writeln!(w, "{i},{:e},{:e},{corr}", self.counts[i], self.variance[i])?;
            }
            w.flush()
        };
        emit().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let bad = |line: usize, reason: String| Error::Format {
            what: "histogram",
            path: path.to_path_buf(),
            reason: format!("line {line}: {reason}"),
        };
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let lines: Vec<String> = BufReader::new(file).lines().collect::<std::io::Result<_>>().map_err(|e| Error::io(path, e))?;
        let meta = lines.first().ok_or_else(|| bad(1, "empty file".into()))?;
        let field = |key: &str| -> Result<u64> {
            meta.trim_start_matches('#')
                .split(',')
                .filter_map(|kv| kv.trim().split_once('='))
                .find(|(k, _)| *k == key)
                .and_then(|(_, v)| v.trim().parse().ok())
                .ok_or_else(|| bad(1, format!("missing `{key}`")))
        };
        let bin_ps = field("bin_width_ps")?;
        let n_shots = field("n_shots")?;
        let window_ps = field("window_ps")?;
        if lines.get(1).map(|l| l.trim()) != Some("bin_index,count,variance,correction") {
            return Err(bad(2, "expected header `bin_index,count,variance,correction`".into()));
        }
        let (mut counts, mut variance, mut corr) = (Vec::new(), Vec::new(), Vec::new());
        for (k, line) in lines.iter().enumerate().skip(2) {
            if line.trim().is_empty() {
                continue;
            }
            let n = k + 1;
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(bad(n, "expected four columns".into()));
            }
            if cols[0].parse::<usize>().ok() != Some(counts.len()) {
                return Err(bad(n, "bin indices must run 0, 1, 2, ...".into()));
            }
            let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(n, format!("bad {what} `{s}`")));
            counts.push(num(cols[1], "count")?);
            variance.push(num(cols[2], "variance")?);
            corr.push(if cols[3].is_empty() { None } else { Some(num(cols[3], "correction")?) });
        }
        if bin_ps * counts.len() as u64 != window_ps {
            return Err(bad(1, "window_ps disagrees with the number of bins".into()));
        }
        let hist = Self::with_variance(bin_ps as f64 * 1e-12, counts, variance, n_shots)
            .map_err(|e| bad(0, e.to_string()))?;
        match corr.iter().copied().collect::<Option<Vec<f64>>>() {
            Some(c) if !c.is_empty() => Ok(hist.with_corrections(c)),
            _ if corr.iter().all(Option::is_none) => Ok(hist),
            _ => Err(bad(0, "correction column must be all present or all empty".into())),
        }
    }
}

fn to_ps(seconds: f64) -> u64 {
    (seconds * 1e12).round() as u64
}

/// Counts of `t_rel` in `[i bin, (i+1) bin)` for `i < window / bin`. The bin
/// must be a whole number of ticks.
pub fn histogram(events: &[EventRecord], tick: f64, bin_width: f64, window: f64, n_shots: u64) -> Result<TimeHistogram> {
    EventStream::check_order(events)?;
    let ratio = bin_width / tick;
    let per_bin = ratio.round();
    if per_bin < 1.0 || (ratio - per_bin).abs() > 1e-6 * ratio {
        return Err(Error::invalid("bin_width", format!("must be a whole number of {tick:e} s ticks")));
    }
    let per_bin = per_bin as u64;
    let n_bins = (window / bin_width - 1e-9).ceil().max(0.0) as usize;
    let mut counts = vec![0.0; n_bins];
    for e in events {
        let i = (e.t_rel / per_bin) as usize;
        if i < n_bins {
            counts[i] += 1.0;
        }
    }
    TimeHistogram::from_counts(bin_width, counts, n_shots)
}

impl EventStream {
    /// Histogram over `[0, window)` at the given bin width.
    pub fn histogram(&self, bin_width: f64, window: f64) -> Result<TimeHistogram> {
        histogram(&self.events, self.tick(), bin_width, window, self.n_shots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::EventTag;

    #[test]
    fn empty_and_single() {
        let h = histogram(&[], 1e-10, 1e-10, 1e-8, 5).unwrap();
        assert_eq!(h.len(), 100);
        assert_eq!(h.total(), 0.0);
        let e = EventRecord::new(0, 0, 1000, EventTag::Signal);
        let h = histogram(&[e], 1e-10, 1e-10, 1e-8, 5).unwrap();
        assert_eq!(h.counts()[0], 1.0);
        assert_eq!(h.total(), 1.0);
    }

    #[test]
    fn coarser_bins_and_window() {
        let evs: Vec<_> = [0, 3, 4, 11, 25].iter().map(|&t| EventRecord::new(0, t, 1000, EventTag::Signal)).collect();
        let h = histogram(&evs, 1e-10, 4e-10, 2e-9, 1).unwrap();
        assert_eq!(h.counts(), &[2.0, 1.0, 1.0, 0.0, 0.0]);
        assert!(histogram(&evs, 1e-10, 1.5e-10, 2e-9, 1).is_err());
    }

    #[test]
    fn unordered_is_rejected() {
        let evs = [EventRecord::new(1, 0, 1000, EventTag::Signal), EventRecord::new(0, 0, 1000, EventTag::Signal)];
        assert!(matches!(histogram(&evs, 1e-10, 1e-10, 1e-8, 2), Err(Error::UnorderedEvents { .. })));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let h = TimeHistogram::with_variance(1e-10, vec![0.1, 2.0 / 3.0, 7.0], vec![1.0, 0.3, 1e-17], 42)
            .unwrap()
            .with_corrections(vec![1.0, 1.0 / 0.9, 1.25]);
        h.write_csv(&path).unwrap();
        assert_eq!(TimeHistogram::read_csv(&path).unwrap(), h);
        let plain = TimeHistogram::from_counts(1e-10, vec![1.0, 2.0], 3).unwrap();
        plain.write_csv(&path).unwrap();
        assert_eq!(TimeHistogram::read_csv(&path).unwrap(), plain);
    }
}
