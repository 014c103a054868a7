//! The five batch commands. Each writes its files under the configured
//! output directory and returns a short human-readable summary.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{analyze_events, analyze_histograms, crlb_sensitivity, PipelineOutput, ReferenceFit};
use crate::error::{Error, Result};
use crate::histogram::TimeHistogram;
use crate::pointer::{
    approx_decay_rate, compliant_grid, mean_arrival_time, mean_shift, spectral_amplitude, PointerModel, VSystemParams,
};
use crate::sim::{run_simulation, EventStream, EventTag, SimConfig};

use super::config::RunConfig;

/// Seed offsets of the two eps = 0 reference runs that bracket a sweep point.
pub const REFERENCE_SEED_OFFSETS: [u64; 2] = [1 << 32, 2 << 32];

fn write_lines(path: &Path, emit: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    emit(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes the resolved configuration next to the command outputs.
pub fn write_resolved_config(config: &RunConfig) -> Result<PathBuf> {
    ensure_dir(&config.output.out_dir)?;
    let path = config.output.out_dir.join("config.resolved.toml");
    fs::write(&path, config.to_toml()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Pdf, spectrum and mean-versus-eps curves.
pub fn cmd_theory(config: &RunConfig) -> Result<String> {
    let params = config.params()?;
    let model = PointerModel::new(&params)?;
    let dir = &config.output.out_dir;
    ensure_dir(dir)?;

    let approx = approx_decay_rate(&params);
    let n = config.theory.points as usize;
    let t_max = config.theory.t_max_ns * 1e-9;
    write_lines(&dir.join("theory_pdf.csv"), |w| {
        writeln!(w, "# t_s: time since excitation, s")?;
        writeln!(w, "# pdf_exact_per_s: postselected emission density, impulse excitation")?;
        writeln!(w, "# pdf_approx_per_s: single exponential at the first-order effective rate {:e} 1/s", approx.rate)?;
        writeln!(w, "# pdf_convolved_per_s: exact density convolved with the excitation pulse")?;
        writeln!(w, "t_s,pdf_exact_per_s,pdf_approx_per_s,pdf_convolved_per_s")?;
        for i in 0..n {
            let t = t_max * i as f64 / (n - 1) as f64;
            let a = if approx.rate.is_finite() && approx.rate > 0.0 { approx.rate * (-approx.rate * t).exp() } else { f64::NAN };
            writeln!(w, "{t:e},{:e},{a:e},{:e}", model.pdf(t), model.convolved_pdf(t))?;
        }
        Ok(())
    })?;

    let spectrum = spectral_amplitude(&params, &compliant_grid(&params))?;
    write_lines(&dir.join("theory_spectrum.csv"), |w| {
        writeln!(w, "# detuning_rad_per_s: angular detuning from the line centre")?;
        writeln!(w, "# intensity: |postselected spectral amplitude|^2, dimensionless")?;
        writeln!(w, "detuning_rad_per_s,intensity")?;
        for (d, i) in spectrum.detuning().iter().zip(spectrum.intensity()) {
            writeln!(w, "{d:e},{i:e}")?;
        }
        Ok(())
    })?;

    let rows = config
        .theory
        .epsilons
        .iter()
        .map(|&e| {
            let p = params.with_epsilon(e)?;
            let m = PointerModel::new(&p)?;
            Ok((e, m.mean(), 1.0 / p.gamma() + mean_shift(&p), m.acceptance()))
        })
        .collect::<Result<Vec<_>>>()?;
    write_lines(&dir.join("theory_mean.csv"), |w| {
        writeln!(w, "# mean_s: exact mean arrival time; mean_first_order_s: 1/gamma plus the weak-value shift")?;
        writeln!(w, "# acceptance: postselection probability")?;
        writeln!(w, "epsilon_rad,mean_s,mean_first_order_s,acceptance")?;
        for (e, m, f, a) in &rows {
            writeln!(w, "{e:e},{m:e},{f:e},{a:e}")?;
        }
        Ok(())
    })?;
    Ok(format!(
        "theory: mean arrival {:.4} ns at eps = {}, acceptance {:.4e}; wrote theory_pdf.csv, theory_spectrum.csv, theory_mean.csv",
        model.mean() * 1e9,
        params.epsilon(),
        model.acceptance()
    ))
}

/// Realized composition of a click stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamSummary {
    pub events: usize,
    pub signal: usize,
    pub background: usize,
    pub afterpulse: usize,
}

impl StreamSummary {
    pub fn of(stream: &EventStream) -> Self {
        Self {
            events: stream.len(),
            signal: stream.count(EventTag::Signal),
            background: stream.count(EventTag::Background),
            afterpulse: stream.count(EventTag::Afterpulse),
        }
    }

    /// Background share among photon clicks.
    pub fn background_fraction(&self) -> f64 {
        self.background as f64 / (self.signal + self.background).max(1) as f64
    }
}

/// Simulates one run and stores the clicks and their full-period histogram.
pub fn cmd_simulate(config: &RunConfig) -> Result<String> {
    let sim = config.sim_config()?;
    let dir = &config.output.out_dir;
    ensure_dir(dir)?;
    let stream = run_simulation(&sim)?;
    stream.write_binary(&dir.join("events.wbev"))?;
    if config.output.events_csv {
        stream.write_csv(&dir.join("events.csv"))?;
    }
    stream.histogram(sim.detector.bin_width, sim.rep_period)?.write_csv(&dir.join("histogram.csv"))?;
    let s = StreamSummary::of(&stream);
    let acceptance = PointerModel::new(&sim.physics)?.acceptance();
    let summary = format!(
        "simulate: {} shots, {} events ({} signal, {} background, {} afterpulse), acceptance {:.4e}, realized background fraction {:.4}",
        sim.n_shots,
        s.events,
        s.signal,
        s.background,
        s.afterpulse,
        acceptance,
        s.background_fraction()
    );
    let path = dir.join("simulate_summary.txt");
    fs::write(&path, format!("{summary}\n")).map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

/// Analysis input: a click stream or an already binned histogram.
#[derive(Debug, Clone)]
pub enum Input {
    Events(EventStream),
    Histogram(TimeHistogram),
}

/// Reads a WBEV file, an event CSV or a histogram CSV, told apart by content.
pub fn load_input(path: &Path) -> Result<Input> {
    let mut head = [0u8; 64];
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let n = file.read(&mut head).map_err(|e| Error::io(path, e))?;
    let head = &head[..n];
    if head.starts_with(b"WBEV") {
        return EventStream::read_binary(path).map(Input::Events);
    }
    let text = String::from_utf8_lossy(head);
    if text.starts_with("# tick_ps=") {
        EventStream::read_csv(path).map(Input::Events)
    } else if text.starts_with("# bin_width_ps=") {
        TimeHistogram::read_csv(path).map(Input::Histogram)
    } else {
        Err(Error::Format {
            what: "analysis input",
            path: path.to_path_buf(),
            reason: "neither a WBEV event file, an event CSV nor a histogram CSV".into(),
        })
    }
}

fn write_references(path: &Path, refs: &[ReferenceFit; 2]) -> Result<()> {
    write_lines(path, |w| {
        writeln!(w, "# a: incoherent exponential amplitude; b: coherent amplitude; both in counts")?;
        writeln!(w, "reference,a,a_se,b,b_se,background_fraction,chi2_reduced")?;
        for (name, r) in ["before", "after"].iter().zip(refs) {
            writeln!(
                w,
                "{name},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.a.value,
                r.a.se,
                r.b.value,
                r.b.se,
                r.background_fraction(),
                r.chi2_reduced
            )?;
        }
        Ok(())
    })
}

/// Persists the result and every intermediate histogram.
pub fn write_pipeline_output(dir: &Path, out: &PipelineOutput) -> Result<()> {
    ensure_dir(dir)?;
    let path = dir.join("result.txt");
    fs::write(&path, out.result.to_string()).map_err(|e| Error::io(&path, e))?;
    out.raw.write_csv(&dir.join("stage_raw.csv"))?;
    out.corrected.write_csv(&dir.join("stage_corrected.csv"))?;
    out.subtracted.write_csv(&dir.join("stage_subtracted.csv"))?;
    if let Some(s) = &out.smoothed {
        s.write_csv(&dir.join("stage_smoothed.csv"))?;
    }
    if let Some(refs) = &out.references {
        write_references(&dir.join("stage_references.csv"), refs)?;
    }
    Ok(())
}

/// Runs the reduction chain on the configured input files.
pub fn cmd_analyze(config: &RunConfig) -> Result<String> {
    let params = config.params()?;
    let options = config.pipeline_options();
    let input = config
        .analysis
        .input
        .as_ref()
        .ok_or_else(|| Error::Validation { key: "analysis.input".into(), reason: "required in analyze mode".into() })?;
    let data = load_input(input)?;
    let refs = match (&config.analysis.reference_before, &config.analysis.reference_after) {
        (Some(a), Some(b)) => {
            let load = |p: &PathBuf| load_input(p).map_err(|e| e.in_stage("reference"));
            Some((load(a)?, load(b)?))
        }
        _ => None,
    };
    let out = match (&data, &refs) {
        (Input::Events(d), None) => analyze_events(d, None, &params, &options)?,
        (Input::Events(d), Some((Input::Events(a), Input::Events(b)))) => {
            analyze_events(d, Some((a, b)), &params, &options)?
        }
        (Input::Histogram(d), None) => analyze_histograms(d, None, &params, &options, Some(config.sim_rep_period()))?,
        (Input::Histogram(d), Some((Input::Histogram(a), Input::Histogram(b)))) => {
            analyze_histograms(d, Some((a, b)), &params, &options, Some(config.sim_rep_period()))?
        }
        _ => {
            return Err(Error::Incompatible("data and references must all be event files or all histograms".into())
                .in_stage("reference"))
        }
    };
    write_pipeline_output(&config.output.out_dir, &out)?;
    let r = &out.result;
    let mut summary = format!("analyze: scale {:.6e} +- {:.2e} counts", r.scale.value, r.scale.se);
    if let Some(m) = r.mean_arrival {
        summary += &format!(", mean arrival {:.4} +- {:.4} ns", m.value * 1e9, m.se * 1e9);
    }
    if let Some(g) = r.gamma_eff {
        summary += &format!(", gamma_eff {:.5e} +- {:.2e} 1/s", g.value, g.se);
    }
    summary += &format!(", chi2_red {:.3}", r.chi2_reduced);
    Ok(summary)
}

/// One `(eps, seed)` point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub seed: u64,
    pub mean_ps: f64,
    pub se_ps: f64,
    pub gamma_eff: f64,
    pub chi2_red: f64,
    pub theory_mean_ps: f64,
    pub error: Option<String>,
}

pub const SWEEP_HEADER: &str = "epsilon,seed,mean_ps,se_ps,gamma_eff,chi2_red,theory_mean_ps,error";

impl SweepRow {
    pub fn to_csv(&self) -> String {
        let error = self.error.as_deref().unwrap_or("").replace([',', '\n', '\r'], ";");
        format!(
            "{:e},{},{:e},{:e},{:e},{:e},{:e},{error}",
            self.epsilon, self.seed, self.mean_ps, self.se_ps, self.gamma_eff, self.chi2_red, self.theory_mean_ps
        )
    }

    pub fn from_csv(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.splitn(8, ',').collect();
        if f.len() != 8 {
            return None;
        }
        Some(Self {
            epsilon: f[0].parse().ok()?,
            seed: f[1].parse().ok()?,
            mean_ps: f[2].parse().ok()?,
            se_ps: f[3].parse().ok()?,
            gamma_eff: f[4].parse().ok()?,
            chi2_red: f[5].parse().ok()?,
            theory_mean_ps: f[6].parse().ok()?,
            error: (!f[7].is_empty()).then(|| f[7].to_string()),
        })
    }
}

/// Simulates and analyzes one data point, with eps = 0 references sharing
/// its shot count when `with_references` is set.
pub fn sweep_point(
    base: &SimConfig,
    params: &VSystemParams,
    config: &RunConfig,
    with_references: bool,
) -> Result<PipelineOutput> {
    let data = run_simulation(base)?;
    let options = config.pipeline_options();
    if !with_references {
        return analyze_events(&data, None, params, &options);
    }
    let reference = |offset: u64| -> Result<EventStream> {
        let mut c = base.clone();
        c.physics = params.with_epsilon(0.0)?;
        c.rng_seed = base.rng_seed.wrapping_add(offset);
        run_simulation(&c)
    };
    let before = reference(REFERENCE_SEED_OFFSETS[0])?;
    let after = reference(REFERENCE_SEED_OFFSETS[1])?;
    analyze_events(&data, Some((&before, &after)), params, &options)
}

fn sweep_row(config: &RunConfig, epsilon: f64, seed: u64) -> SweepRow {
    let mut row = SweepRow {
        epsilon,
        seed,
        mean_ps: f64::NAN,
        se_ps: f64::NAN,
        gamma_eff: f64::NAN,
        chi2_red: f64::NAN,
        theory_mean_ps: f64::NAN,
        error: None,
    };
    let mut run = || -> Result<PipelineOutput> {
        let mut c = config.clone();
        c.physics.epsilon_rad = epsilon;
        c.simulation.seed = seed;
        let params = c.params()?;
        row.theory_mean_ps = mean_arrival_time(&params)? * 1e12;
        sweep_point(&c.sim_config()?, &params, &c, config.sweep.references)
    };
    match run() {
        Ok(out) => {
            let r = out.result;
            if let Some(m) = r.mean_arrival {
                row.mean_ps = m.value * 1e12;
                row.se_ps = m.se * 1e12;
            }
            row.gamma_eff = r.gamma_eff.map_or(f64::NAN, |g| g.value);
            row.chi2_red = r.chi2_reduced;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Simulate-and-analyze over every `(eps, seed)` pair. Rows run in
/// parallel, each into its own file, and are merged in order at the end.
/// A failed row keeps its error message and does not stop the sweep.
pub fn cmd_sweep(config: &RunConfig) -> Result<String> {
    let dir = &config.output.out_dir;
    let rows_dir = dir.join("sweep_rows");
    ensure_dir(&rows_dir)?;
    let jobs: Vec<(usize, f64, u64)> = config
        .sweep
        .epsilons
        .iter()
        .flat_map(|&e| config.sweep.seeds.iter().map(move |&s| (e, s)))
        .enumerate()
        .map(|(i, (e, s))| (i, e, s))
        .collect();
    let paths = jobs
        .par_iter()
        .map(|&(i, e, s)| {
            let row = sweep_row(config, e, s);
            let path = rows_dir.join(format!("row_{i:05}.csv"));
            fs::write(&path, row.to_csv() + "\n").map_err(|err| Error::io(&path, err))?;
            Ok(path)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut failed = 0;
    let out_path = dir.join("sweep.csv");
    let mut merged = format!("{SWEEP_HEADER}\n");
    for p in &paths {
        let line = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        failed += usize::from(line.trim_end().rsplit(',').next().is_some_and(|e| !e.is_empty()));
        merged += &line;
    }
    fs::write(&out_path, merged).map_err(|e| Error::io(&out_path, e))?;
    fs::remove_dir_all(&rows_dir).map_err(|e| Error::io(&rows_dir, e))?;
    Ok(format!("sweep: {} rows ({failed} failed); wrote sweep.csv", paths.len()))
}

/// Cramer-Rao bound over the eps and count-rate grids.
pub fn cmd_crlb(config: &RunConfig) -> Result<String> {
    let params = config.params()?;
    let dir = &config.output.out_dir;
    ensure_dir(dir)?;
    let mut rows = Vec::new();
    for &e in &config.crlb.epsilons {
        let p = params.with_epsilon(e)?;
        for &rate in &config.crlb.count_rates {
            rows.push((e, rate, crlb_sensitivity(&p, rate)?));
        }
    }
    write_lines(&dir.join("crlb.csv"), |w| {
        writeln!(w, "# bound_hz_per_rthz: Cramer-Rao bound on the cyclic Zeeman shift; inf where the data carry no information")?;
        writeln!(w, "epsilon,count_rate,bound_hz_per_rthz")?;
        for (e, r, b) in &rows {
            writeln!(w, "{e:e},{r:e},{b:e}")?;
        }
        Ok(())
    })?;
    let best = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    Ok(format!("crlb: {} grid points, best bound {best:.4e} Hz/sqrt(Hz); wrote crlb.csv", rows.len()))
}
