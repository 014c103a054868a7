//! Run configuration: `key = value` sections in TOML syntax.
//!
//! Frequencies are cyclic (Hz) and converted to angular units on use. Times
//! are given in ns or ps as the key suffix says.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use toml::{Table, Value};

use crate::analysis::{FitWindow, PipelineOptions};
use crate::error::{Error, Result};
use crate::pointer::{PulseShape, VSystemParams};
use crate::sim::{DetectorConfig, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Analyze,
    Theory,
    Sweep,
    Crlb,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Analyze => "analyze",
            Mode::Theory => "theory",
            Mode::Sweep => "sweep",
            Mode::Crlb => "crlb",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "simulate" => Ok(Mode::Simulate),
            "analyze" => Ok(Mode::Analyze),
            "theory" => Ok(Mode::Theory),
            "sweep" => Ok(Mode::Sweep),
            "crlb" => Ok(Mode::Crlb),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

/// How the decay rate was written, kept so the echo matches the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSpec {
    /// Lorentzian FWHM in Hz.
    FwhmHz(f64),
    /// Excited-state lifetime in ns.
    LifetimeNs(f64),
}

impl GammaSpec {
    /// Decay rate in 1/s.
    pub fn rate(self) -> f64 {
        match self {
            GammaSpec::FwhmHz(hz) => std::f64::consts::TAU * hz,
            GammaSpec::LifetimeNs(ns) => 1.0 / (ns * 1e-9),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsSection {
    pub gamma: GammaSpec,
    pub delta_hz: f64,
    pub epsilon_rad: f64,
    pub pulse_ns: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSection {
    pub n_shots: Option<u64>,
    pub target_events: f64,
    pub rep_period_ns: f64,
    pub detect_prob: f64,
    pub background_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSection {
    pub enabled: bool,
    pub dead_time_ns: f64,
    pub afterpulse_prob: f64,
    pub bin_ps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSection {
    pub bin_ps: f64,
    pub window_lo_ns: f64,
    pub window_hi_ns: Option<f64>,
    pub afterpulse_filter: bool,
    pub afterpulse_cutoff_ns: f64,
    pub deadtime_correction: bool,
    pub effective_dead_ns: f64,
    pub free_gamma: bool,
    pub smoothing_fwhm_ns: f64,
    pub input: Option<PathBuf>,
    pub reference_before: Option<PathBuf>,
    pub reference_after: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub epsilons: Vec<f64>,
    pub seeds: Vec<u64>,
    pub references: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrlbSection {
    pub epsilons: Vec<f64>,
    pub count_rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheorySection {
    pub t_max_ns: f64,
    pub points: u64,
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub out_dir: PathBuf,
    pub events_csv: bool,
}

/// Fully resolved configuration for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub physics: PhysicsSection,
    pub simulation: SimulationSection,
    pub detector: DetectorSection,
    pub analysis: AnalysisSection,
    pub sweep: SweepSection,
    pub crlb: CrlbSection,
    pub theory: TheorySection,
    pub output: OutputSection,
}

const PHYSICS_KEYS: [&str; 5] = ["gamma_hz", "gamma_lifetime_ns", "delta_hz", "epsilon_rad", "pulse_ns"];
const SECTIONS: [&str; 8] = ["physics", "simulation", "detector", "analysis", "sweep", "crlb", "theory", "output"];

fn paper_epsilons() -> Vec<f64> {
    vec![0.15, 0.2, 0.3, 0.5, 0.8, FRAC_PI_2]
}

fn validation(key: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Validation { key: key.into(), reason: reason.into() }
}

/// Typed access to one table, remembering which keys were consumed.
struct Reader<'a> {
    prefix: String,
    table: Option<&'a Table>,
    used: BTreeSet<String>,
}

impl<'a> Reader<'a> {
    fn new(prefix: &str, table: Option<&'a Table>) -> Self {
        Self { prefix: prefix.to_string(), table, used: BTreeSet::new() }
    }

    fn key(&self, k: &str) -> String {
        if self.prefix.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.prefix)
        }
    }

    fn raw(&mut self, k: &str) -> Option<&'a Value> {
        let v = self.table?.get(k)?;
        self.used.insert(k.to_string());
        Some(v)
    }

    fn opt_f64(&mut self, k: &str) -> Result<Option<f64>> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(*x)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(validation(self.key(k), "expected a number")),
        }
    }

    fn f64(&mut self, k: &str, default: f64) -> Result<f64> {
        Ok(self.opt_f64(k)?.unwrap_or(default))
    }

    fn opt_u64(&mut self, k: &str) -> Result<Option<u64>> {
        let key = self.key(k);
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(Value::Float(x)) if *x >= 0.0 && x.fract() == 0.0 && *x < 1.8e19 => Ok(Some(*x as u64)),
            Some(_) => Err(validation(key, "expected a non-negative integer")),
        }
    }

    fn bool(&mut self, k: &str, default: bool) -> Result<bool> {
        match self.raw(k) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(validation(self.key(k), "expected true or false")),
        }
    }

    fn path(&mut self, k: &str) -> Result<Option<PathBuf>> {
        match self.raw(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(PathBuf::from(s))),
            Some(_) => Err(validation(self.key(k), "expected a quoted path")),
        }
    }

    fn list_f64(&mut self, k: &str, default: Vec<f64>) -> Result<Vec<f64>> {
        let key = self.key(k);
        match self.raw(k) {
            None => Ok(default),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(i) => Ok(*i as f64),
                    _ => Err(validation(key.clone(), "expected a list of numbers")),
                })
                .collect(),
            Some(_) => Err(validation(key, "expected a list")),
        }
    }

    fn list_u64(&mut self, k: &str, default: Vec<u64>) -> Result<Vec<u64>> {
        let key = self.key(k);
        match self.raw(k) {
            None => Ok(default),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i >= 0 => Ok(*i as u64),
                    _ => Err(validation(key.clone(), "expected a list of non-negative integers")),
                })
                .collect(),
            Some(_) => Err(validation(key, "expected a list")),
        }
    }

    /// Fails on keys nobody asked for.
    fn finish(&self, allowed_extra: &[&str]) -> Result<()> {
        if let Some(table) = self.table {
            if let Some(k) = table.keys().find(|k| !self.used.contains(*k) && !allowed_extra.contains(&k.as_str())) {
                return Err(validation(self.key(k), "unknown key"));
            }
        }
        Ok(())
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| Error::ConfigParse {
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        for (k, v) in &root {
            if SECTIONS.contains(&k.as_str()) && !v.is_table() {
                return Err(validation(k.clone(), "expected a [section]"));
            }
        }
        let section = |name: &str| root.get(name).and_then(Value::as_table);

        let mut top = Reader::new("", Some(&root));
        let mode = match top.raw("mode") {
            None => None,
            Some(Value::String(s)) => Some(s.parse::<Mode>().map_err(|m| validation("mode", m))?),
            Some(_) => return Err(validation("mode", "expected a quoted mode name")),
        };
        let top_out_dir = top.path("out_dir")?;

        // physics keys may sit at the top level or in [physics]
        let physics_table = section("physics");
        for k in PHYSICS_KEYS {
            if root.contains_key(k) && physics_table.is_some_and(|t| t.contains_key(k)) {
                return Err(validation(k, "given both at top level and in [physics]"));
            }
        }
        let mut merged = physics_table.cloned().unwrap_or_default();
        for k in PHYSICS_KEYS {
            if let Some(v) = root.get(k) {
                merged.insert(k.to_string(), v.clone());
                top.used.insert(k.to_string());
            }
        }
        let mut ph = Reader::new("physics", Some(&merged));
        let gamma = match (ph.opt_f64("gamma_hz")?, ph.opt_f64("gamma_lifetime_ns")?) {
            (Some(hz), None) => GammaSpec::FwhmHz(hz),
            (None, Some(ns)) => GammaSpec::LifetimeNs(ns),
            (Some(_), Some(_)) => return Err(validation("gamma", "give either gamma_hz or gamma_lifetime_ns, not both")),
            (None, None) => return Err(validation("gamma", "missing: set gamma_hz or gamma_lifetime_ns")),
        };
        let physics = PhysicsSection {
            gamma,
            delta_hz: ph.opt_f64("delta_hz")?.ok_or_else(|| validation("delta_hz", "missing"))?,
            epsilon_rad: ph.opt_f64("epsilon_rad")?.ok_or_else(|| validation("epsilon_rad", "missing"))?,
            pulse_ns: ph.f64("pulse_ns", 4.2)?,
        };
        ph.finish(&[])?;

        let mut s = Reader::new("simulation", section("simulation"));
        let simulation = SimulationSection {
            n_shots: s.opt_u64("n_shots")?,
            target_events: s.f64("target_events", 1e6)?,
            rep_period_ns: s.f64("rep_period_ns", 1000.0)?,
            detect_prob: s.f64("detect_prob", 0.01)?,
            background_fraction: s.f64("background_fraction", 0.0)?,
            seed: s.opt_u64("seed")?.unwrap_or(1),
        };
        s.finish(&[])?;

        let mut d = Reader::new("detector", section("detector"));
        let detector = DetectorSection {
            enabled: d.bool("enabled", true)?,
            dead_time_ns: d.f64("dead_time_ns", 52.0)?,
            afterpulse_prob: d.f64("afterpulse_prob", 0.02)?,
            bin_ps: d.f64("bin_ps", 100.0)?,
        };
        d.finish(&[])?;

        let mut a = Reader::new("analysis", section("analysis"));
        let analysis = AnalysisSection {
            bin_ps: a.f64("bin_ps", 100.0)?,
            window_lo_ns: a.f64("window_lo_ns", 0.0)?,
            window_hi_ns: a.opt_f64("window_hi_ns")?,
            afterpulse_filter: a.bool("afterpulse_filter", true)?,
            afterpulse_cutoff_ns: a.f64("afterpulse_cutoff_ns", 115.0)?,
            deadtime_correction: a.bool("deadtime_correction", true)?,
            effective_dead_ns: a.f64("effective_dead_ns", 115.0)?,
            free_gamma: a.bool("free_gamma", true)?,
            smoothing_fwhm_ns: a.f64("smoothing_fwhm_ns", 4.2)?,
            input: a.path("input")?,
            reference_before: a.path("reference_before")?,
            reference_after: a.path("reference_after")?,
        };
        a.finish(&[])?;

        let mut w = Reader::new("sweep", section("sweep"));
        let sweep = SweepSection {
            epsilons: w.list_f64("epsilons", paper_epsilons())?,
            seeds: w.list_u64("seeds", vec![1])?,
            references: w.bool("references", true)?,
        };
        w.finish(&[])?;

        let mut c = Reader::new("crlb", section("crlb"));
        let crlb = CrlbSection {
            epsilons: c.list_f64("epsilons", vec![0.05, 0.1, 0.2, 0.5, 1.0, FRAC_PI_2])?,
            count_rates: c.list_f64("count_rates", vec![1e4, 1e5, 1e6])?,
        };
        c.finish(&[])?;

        let mut t = Reader::new("theory", section("theory"));
        let default_eps: Vec<f64> = (1..=100).map(|k| FRAC_PI_2 * k as f64 / 100.0).collect();
        let theory = TheorySection {
            t_max_ns: t.f64("t_max_ns", 300.0)?,
            points: t.opt_u64("points")?.unwrap_or(1000),
            epsilons: t.list_f64("epsilons", default_eps)?,
        };
        t.finish(&[])?;

        let mut o = Reader::new("output", section("output"));
        let section_out_dir = o.path("out_dir")?;
        if top_out_dir.is_some() && section_out_dir.is_some() {
            return Err(validation("out_dir", "given both at top level and in [output]"));
        }
        let output = OutputSection {
            out_dir: section_out_dir.or(top_out_dir).unwrap_or_else(|| PathBuf::from("out")),
            events_csv: o.bool("events_csv", false)?,
        };
        o.finish(&[])?;
        top.finish(&SECTIONS)?;

        let config = Self { mode, physics, simulation, detector, analysis, sweep, crlb, theory, output };
        config.validate()?;
        Ok(config)
    }

    /// Re-checks every invariant of the physical and simulation parameters.
    pub fn validate(&self) -> Result<()> {
        let p = &self.physics;
        let rate = p.gamma.rate();
        if !(rate.is_finite() && rate > 0.0) {
            let key = match p.gamma {
                GammaSpec::FwhmHz(_) => "gamma_hz",
                GammaSpec::LifetimeNs(_) => "gamma_lifetime_ns",
            };
            return Err(validation(key, "gamma must be positive and finite"));
        }
        self.params().map_err(relabel)?;
        if !(p.pulse_ns >= 0.0) {
            return Err(validation("pulse_ns", "must be >= 0"));
        }
        if self.simulation.n_shots == Some(0) {
            return Err(validation("simulation.n_shots", "need at least one shot"));
        }
        if !(self.simulation.target_events > 0.0) {
            return Err(validation("simulation.target_events", "must be positive"));
        }
        let mut sim = self.sim_config()?;
        sim.n_shots = sim.n_shots.max(1);
        sim.validate().map_err(relabel)?;
        let a = &self.analysis;
        for (k, v) in [
            ("analysis.bin_ps", a.bin_ps),
            ("analysis.afterpulse_cutoff_ns", a.afterpulse_cutoff_ns),
            ("analysis.effective_dead_ns", a.effective_dead_ns),
            ("analysis.smoothing_fwhm_ns", a.smoothing_fwhm_ns),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(validation(k, "must be a finite non-negative number"));
            }
        }
        if !(a.bin_ps > 0.0) {
            return Err(validation("analysis.bin_ps", "must be positive"));
        }
        let window = self.window();
        if !(window.lo >= 0.0 && window.lo < window.hi) {
            return Err(validation("analysis.window_hi_ns", "window must satisfy 0 <= lo < hi"));
        }
        if a.reference_before.is_some() != a.reference_after.is_some() {
            return Err(validation("analysis.reference_after", "references come in pairs: set both or neither"));
        }
        if let Some(e) = self.sweep.epsilons.iter().chain(&self.crlb.epsilons).find(|e| !(0.0..=FRAC_PI_2).contains(*e)) {
            return Err(validation("epsilons", format!("{e} is outside [0, pi/2]")));
        }
        if let Some(r) = self.crlb.count_rates.iter().find(|r| !(**r > 0.0)) {
            return Err(validation("crlb.count_rates", format!("{r} is not positive")));
        }
        if !(self.theory.t_max_ns > 0.0) || self.theory.points < 2 {
            return Err(validation("theory", "need t_max_ns > 0 and at least two points"));
        }
        Ok(())
    }

    /// Checks that only matter for one command.
    pub fn validate_for(&self, mode: Mode) -> Result<()> {
        match mode {
            Mode::Analyze => {
                let input = self.analysis.input.as_ref().ok_or_else(|| validation("analysis.input", "required in analyze mode"))?;
                if !input.exists() {
                    return Err(validation("analysis.input", format!("{} does not exist", input.display())));
                }
            }
            Mode::Sweep => {
                if self.sweep.epsilons.is_empty() {
                    return Err(validation("sweep.epsilons", "must not be empty"));
                }
                if self.sweep.seeds.is_empty() {
                    return Err(validation("sweep.seeds", "must not be empty"));
                }
            }
            Mode::Crlb if self.crlb.epsilons.is_empty() || self.crlb.count_rates.is_empty() => {
                return Err(validation("crlb", "epsilon and count-rate grids must not be empty"));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn params(&self) -> Result<VSystemParams> {
        let p = &self.physics;
        VSystemParams::new(
            p.gamma.rate(),
            std::f64::consts::TAU * p.delta_hz,
            p.epsilon_rad,
            PulseShape::from_duration(p.pulse_ns * 1e-9)?,
        )
    }

    pub fn detector(&self) -> DetectorConfig {
        let d = &self.detector;
        DetectorConfig {
            dead_time: d.dead_time_ns * 1e-9,
            afterpulse_prob: d.afterpulse_prob,
            bin_width: d.bin_ps * 1e-12,
            enabled: d.enabled,
        }
    }

    /// Simulation settings; `n_shots` comes from `target_events` when unset.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let s = &self.simulation;
        let config = SimConfig {
            physics: self.params()?,
            n_shots: s.n_shots.unwrap_or(1),
            rep_period: s.rep_period_ns * 1e-9,
            detect_prob: s.detect_prob,
            background_fraction: s.background_fraction,
            rng_seed: s.seed,
            detector: self.detector(),
        };
        match s.n_shots {
            Some(_) => Ok(config),
            None => config.with_target_events(s.target_events),
        }
    }

    /// Repetition period in seconds, used to dead-time correct histograms.
    pub fn sim_rep_period(&self) -> f64 {
        self.simulation.rep_period_ns * 1e-9
    }

    pub fn window(&self) -> FitWindow {
        let hi = self.analysis.window_hi_ns.map_or(20.0 / self.physics.gamma.rate(), |ns| ns * 1e-9);
        FitWindow::new(self.analysis.window_lo_ns * 1e-9, hi)
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        let a = &self.analysis;
        PipelineOptions {
            bin_width: a.bin_ps * 1e-12,
            window: Some(self.window()),
            afterpulse_cutoff: a.afterpulse_filter.then_some(a.afterpulse_cutoff_ns * 1e-9),
            effective_dead: a.deadtime_correction.then_some(a.effective_dead_ns * 1e-9),
            free_gamma: a.free_gamma,
            smoothing_fwhm: (a.smoothing_fwhm_ns > 0.0).then_some(a.smoothing_fwhm_ns * 1e-9),
        }
    }

    /// Resolved configuration in the same syntax it is read from. Loading
    /// the dump gives back an identical `RunConfig`.
    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        let num = |x: f64| format!("{x:?}");
        let list = |xs: &[f64]| format!("[{}]", xs.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", "));
        let path = |p: &Path| Value::String(p.display().to_string()).to_string();
        let _ = (|| -> std::fmt::Result {
            writeln!(out, "# resolved weakbeam configuration")?;
            if let Some(m) = self.mode {
                writeln!(out, "mode = \"{}\"", m.as_str())?;
            }
            let p = &self.physics;
            writeln!(out, "\n[physics]")?;
            match p.gamma {
                GammaSpec::FwhmHz(hz) => writeln!(out, "gamma_hz = {}", num(hz))?,
                GammaSpec::LifetimeNs(ns) => writeln!(out, "gamma_lifetime_ns = {}", num(ns))?,
            }
            writeln!(out, "delta_hz = {}", num(p.delta_hz))?;
            writeln!(out, "epsilon_rad = {}", num(p.epsilon_rad))?;
            writeln!(out, "pulse_ns = {}", num(p.pulse_ns))?;

            let s = &self.simulation;
            writeln!(out, "\n[simulation]")?;
            match s.n_shots {
                Some(n) => writeln!(out, "n_shots = {n}")?,
                None => writeln!(out, "# n_shots unset: derived from target_events")?,
            }
            writeln!(out, "target_events = {}", num(s.target_events))?;
            writeln!(out, "rep_period_ns = {}", num(s.rep_period_ns))?;
            writeln!(out, "detect_prob = {}", num(s.detect_prob))?;
            writeln!(out, "background_fraction = {}", num(s.background_fraction))?;
            writeln!(out, "seed = {}", s.seed)?;

            let d = &self.detector;
            writeln!(out, "\n[detector]")?;
            writeln!(out, "enabled = {}", d.enabled)?;
            writeln!(out, "dead_time_ns = {}", num(d.dead_time_ns))?;
            writeln!(out, "afterpulse_prob = {}", num(d.afterpulse_prob))?;
            writeln!(out, "bin_ps = {}", num(d.bin_ps))?;

            let a = &self.analysis;
            writeln!(out, "\n[analysis]")?;
            writeln!(out, "bin_ps = {}", num(a.bin_ps))?;
            writeln!(out, "window_lo_ns = {}", num(a.window_lo_ns))?;
            match a.window_hi_ns {
                Some(hi) => writeln!(out, "window_hi_ns = {}", num(hi))?,
                None => writeln!(out, "# window_hi_ns unset: 20 lifetimes = {} ns", num(self.window().hi * 1e9))?,
            }
            writeln!(out, "afterpulse_filter = {}", a.afterpulse_filter)?;
            writeln!(out, "afterpulse_cutoff_ns = {}", num(a.afterpulse_cutoff_ns))?;
            writeln!(out, "deadtime_correction = {}", a.deadtime_correction)?;
            writeln!(out, "effective_dead_ns = {}", num(a.effective_dead_ns))?;
            writeln!(out, "free_gamma = {}", a.free_gamma)?;
            writeln!(out, "smoothing_fwhm_ns = {}", num(a.smoothing_fwhm_ns))?;
            for (k, v) in [("input", &a.input), ("reference_before", &a.reference_before), ("reference_after", &a.reference_after)] {
                if let Some(p) = v {
                    writeln!(out, "{k} = {}", path(p))?;
                }
            }

            writeln!(out, "\n[sweep]")?;
            writeln!(out, "epsilons = {}", list(&self.sweep.epsilons))?;
            let seeds: Vec<String> = self.sweep.seeds.iter().map(u64::to_string).collect();
            writeln!(out, "seeds = [{}]", seeds.join(", "))?;
            writeln!(out, "references = {}", self.sweep.references)?;

            writeln!(out, "\n[crlb]")?;
            writeln!(out, "epsilons = {}", list(&self.crlb.epsilons))?;
            writeln!(out, "count_rates = {}", list(&self.crlb.count_rates))?;

            writeln!(out, "\n[theory]")?;
            writeln!(out, "t_max_ns = {}", num(self.theory.t_max_ns))?;
            writeln!(out, "points = {}", self.theory.points)?;
            writeln!(out, "epsilons = {}", list(&self.theory.epsilons))?;

            writeln!(out, "\n[output]")?;
            writeln!(out, "out_dir = {}", path(&self.output.out_dir))?;
            writeln!(out, "events_csv = {}", self.output.events_csv)
        })();
        out
    }
}

/// Turns a parameter error into a validation error naming the key.
fn relabel(e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => validation(name, reason),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves_defaults() {
        let c = RunConfig::parse("gamma_hz = 6.1e6\ndelta_hz = 6e5\nepsilon_rad = 0.2\n").unwrap();
        assert_eq!(c.simulation.detect_prob, 0.01);
        assert_eq!(c.detector.dead_time_ns, 52.0);
        assert_eq!(c.analysis.afterpulse_cutoff_ns, 115.0);
        assert_eq!(c.physics.pulse_ns, 4.2);
        let dump = c.to_toml();
        for key in ["detect_prob", "dead_time_ns", "afterpulse_prob", "bin_ps", "smoothing_fwhm_ns", "seeds"] {
            assert!(dump.contains(key), "{key} missing from echo");
        }
    }

    #[test]
    fn lifetime_and_cyclic_units() {
        let c = RunConfig::parse("[physics]\ndelta_hz = 600e3\ngamma_lifetime_ns = 26\nepsilon_rad = 0.2\n").unwrap();
        let p = c.params().unwrap();
        assert_eq!(p.delta(), std::f64::consts::TAU * 6e5);
        assert_eq!(p.gamma(), 1.0 / 26e-9);
    }

    #[test]
    fn negative_gamma_names_the_key() {
        let err = RunConfig::parse("gamma_hz = -1\ndelta_hz = 0\nepsilon_rad = 0.2\n").unwrap_err();
        match err {
            Error::Validation { key, .. } => assert!(key.contains("gamma"), "{key}"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn parse_errors_carry_the_line() {
        let err = RunConfig::parse("gamma_hz = 1\ndelta_hz = = 2\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 2, .. }), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse("gamma_hz = 6e6\ndelta_hz = 0\nepsilon_rad = 0.2\n[detector]\ndeadtime = 3\n").unwrap_err();
        assert!(matches!(err, Error::Validation { ref key, .. } if key == "detector.deadtime"), "{err}");
    }

    #[test]
    fn echo_round_trips() {
        let text = "mode = \"sweep\"\ngamma_lifetime_ns = 26\ndelta_hz = 6e5\nepsilon_rad = 0.1\n\
                    [simulation]\nn_shots = 1000\nseed = 7\n[analysis]\nwindow_hi_ns = 300\ninput = \"a b.wbev\"\n\
                    [sweep]\nepsilons = [0.2, 1]\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn zero_shots_and_unpaired_references() {
        assert!(RunConfig::parse("gamma_hz = 6e6\ndelta_hz = 0\nepsilon_rad = 0.2\n[simulation]\nn_shots = 0\n").is_err());
        let one = "gamma_hz = 6e6\ndelta_hz = 1\nepsilon_rad = 0.2\n[analysis]\nreference_before = \"x\"\n";
        assert!(RunConfig::parse(one).is_err());
    }

    #[test]
    fn empty_sweep_is_rejected_for_sweeps() {
        let c = RunConfig::parse("gamma_hz = 6e6\ndelta_hz = 0\nepsilon_rad = 0.2\n[sweep]\nepsilons = []\n").unwrap();
        assert!(c.validate_for(Mode::Sweep).is_err());
        assert!(c.validate_for(Mode::Theory).is_ok());
    }
}
