use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ScenarioConfig, SweepOutput, DEFAULT_ESCALATIONS, DEFAULT_TAIL_TOLERANCE, ESCALATION_STEP};
use crate::dynamics::{evolve_full, IntegratorConfig, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::hilbert::StateVector;
use crate::models::drive_operator;
use crate::observables::{trajectory_summary, ObservableSample, TrajectorySummary};
use crate::spectra::{
    dce_reference_ratio, diagonalize, find_resonance, gaps_upto, rate_ratio, DressedSpectrum,
    ResonanceReport, ResonanceSearch,
};

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Configuration with every default filled in at the accepted truncation.
    pub config: ScenarioConfig,
    pub record: TrajectoryRecord,
    pub summary: TrajectorySummary,
    pub n_max: usize,
    pub escalations: usize,
}

/// Integrates a scenario from the bare vacuum, raising `n_max` by 8 (up to
/// the configured number of times) while the top two Fock levels carry more
/// than the tail tolerance.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let eta = cfg.eta()?;
    let tail_tol = cfg.numerics.tail_tolerance.unwrap_or(DEFAULT_TAIL_TOLERANCE);
    let max_esc = cfg.numerics.max_escalations.unwrap_or(DEFAULT_ESCALATIONS);
    let mut n_max = cfg.n_max();
    let mut last_tail = f64::NAN;
    for escalation in 0..=max_esc {
        let h = cfg.driven_at(eta, n_max)?;
        let integ = cfg.integrator(h.fast_frequency())?;
        let psi0 = StateVector::bare(h.basis(), 0, 0)?;
        info!("{}: n_max = {n_max}, dt = {}, {} steps", cfg.name, integ.dt, integ.steps());
        let record = evolve_full(&h, &psi0, &integ)?;
        let summary = trajectory_summary(&record.samples).expect("a run records at least one sample");
        if summary.max_tail_probability < tail_tol {
            return Ok(RunOutcome { config: cfg.resolved(n_max)?, record, summary, n_max, escalations: escalation });
        }
        last_tail = summary.max_tail_probability;
        warn!("{}: tail probability {last_tail:e} at n_max = {n_max}; escalating", cfg.name);
        n_max += ESCALATION_STEP;
    }
    Err(Error::TruncationNotConverged { n_max: n_max - ESCALATION_STEP, tail: last_tail })
}

/// CSV header for a trajectory with photon numbers `0..=n_max`.
pub fn trajectory_header(n_max: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "mean_n", "mandel_q", "p_e", "p_nonvacuum", "norm"].iter().map(|s| s.to_string()).collect();
    h.extend((0..=n_max).map(|n| format!("p_{n}")));
    h
}

fn sample_row(s: &ObservableSample) -> Vec<String> {
    let mut row = vec![s.t, s.mean_n, s.mandel_q, s.p_e, s.p_nonvacuum, s.norm];
    row.extend_from_slice(&s.p_n);
    row.iter().map(|x| x.to_string()).collect()
}

pub fn write_trajectory_csv<W: std::io::Write>(samples: &[ObservableSample], n_max: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(n_max)).map_err(csv_err)?;
    for s in samples {
        w.write_record(sample_row(s)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

#[derive(Serialize)]
struct RunSummaryFile<'a> {
    version: &'a str,
    config: &'a ScenarioConfig,
    n_max: usize,
    escalations: usize,
    dt: f64,
    steps: usize,
    max_norm_drift: f64,
    summary: &'a TrajectorySummary,
}

/// Writes `<name>.csv` and `<name>.summary.json` into `dir`.
pub fn export(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let name = &outcome.config.name;
    let csv_path = dir.join(format!("{name}.csv"));
    write_trajectory_csv(&outcome.record.samples, outcome.n_max, fs::File::create(&csv_path)?)?;
    let json_path = dir.join(format!("{name}.summary.json"));
    let body = RunSummaryFile {
        version: VERSION,
        config: &outcome.config,
        n_max: outcome.n_max,
        escalations: outcome.escalations,
        dt: outcome.record.dt,
        steps: outcome.record.steps,
        max_norm_drift: outcome.record.max_norm_drift,
        summary: &outcome.summary,
    };
    fs::write(&json_path, serde_json::to_string_pretty(&body).map_err(|e| Error::Config(e.to_string()))?)?;
    Ok(vec![csv_path, json_path])
}

/// Ladder data of the static Hamiltonian: `n, lambda_n, xi_n, eta_n, r_n`
/// for `n < levels`.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub n: usize,
    pub lambda_n: f64,
    pub xi_n: f64,
    pub eta_n: f64,
    pub r_n: f64,
}

pub fn dressed_spectrum(cfg: &ScenarioConfig) -> Result<DressedSpectrum> {
    diagonalize(&cfg.static_hamiltonian(cfg.n_max())?, cfg.physics.k)
}

pub fn spectrum(cfg: &ScenarioConfig, levels: usize) -> Result<Vec<SpectrumRow>> {
    let spec = dressed_spectrum(cfg)?;
    let drive = drive_operator(spec.basis(), cfg.physics.k)?;
    let gaps = gaps_upto(&spec, levels)?;
    let ladder = spec.ladder(levels + 2)?;
    (0..levels)
        .map(|n| {
            let i = ladder[n];
            Ok(SpectrumRow {
                n,
                lambda_n: spec.lambdas()[i],
                xi_n: spec.xi()[i],
                eta_n: gaps[n],
                r_n: rate_ratio(&spec, &drive, n)?,
            })
        })
        .collect()
}

pub fn write_spectrum_csv<W: std::io::Write>(rows: &[SpectrumRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "lambda_n", "xi_n", "eta_n", "r_n"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.n.to_string(), r.lambda_n.to_string(), r.xi_n.to_string(), r.eta_n.to_string(), r.r_n.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One grid point of a sweep; `error` is set when the point failed.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub values: Vec<f64>,
    /// Labeling diagnostics, e.g. near-degenerate or ambiguous dressed states.
    pub flags: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub parameter: String,
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![self.parameter.clone()];
        header.extend(self.columns.iter().cloned());
        header.push("flags".into());
        header.push("error".into());
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![r.value.to_string()];
            if r.values.len() == self.columns.len() {
                rec.extend(r.values.iter().map(|v| v.to_string()));
            } else {
                rec.extend(std::iter::repeat_n(String::new(), self.columns.len()));
            }
            rec.push(r.flags.join(";"));
            rec.push(r.error.clone().unwrap_or_default());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

fn spectral_point(cfg: &ScenarioConfig, levels: usize) -> Result<(Vec<f64>, Vec<String>)> {
    let spec = dressed_spectrum(cfg)?;
    let drive = drive_operator(spec.basis(), cfg.physics.k)?;
    let mut flags = Vec::new();
    if !spec.near_degenerate().is_empty() {
        flags.push(format!("near_degenerate:{}", spec.near_degenerate().len()));
    }
    let ladder = spec.ladder(levels + 3)?;
    if let Some(l) = ladder.iter().map(|&i| spec.labels()[i]).find(|l| l.weight < 0.5) {
        flags.push(format!("weak_label:{}", l.photons));
    }
    let mut out = Vec::with_capacity(3 * levels + 1);
    for n in 1..=levels {
        out.push(rate_ratio(&spec, &drive, n)?);
    }
    out.extend((1..=levels).map(dce_reference_ratio));
    out.extend(gaps_upto(&spec, levels + 1)?);
    Ok((out, flags))
}

fn dynamics_point(cfg: &ScenarioConfig) -> Result<(Vec<f64>, Vec<String>)> {
    let o = run(cfg)?;
    let s = &o.summary;
    let flags = if o.escalations > 0 { vec![format!("n_max:{}", o.n_max)] } else { Vec::new() };
    Ok((vec![s.t_star, s.max_mean_n, s.mandel_q_at_t_star, s.max_tail_probability, o.record.max_norm_drift], flags))
}

/// Evaluates every grid point of the sweep block on `jobs` workers. Rows
/// come back in grid order; failing points are recorded and skipped.
pub fn sweep(cfg: &ScenarioConfig, jobs: usize) -> Result<SweepTable> {
    cfg.validate()?;
    let block = cfg.sweep.as_ref().ok_or_else(|| Error::Config("configuration has no [sweep] block".into()))?;
    let grid = block.grid()?;
    let levels = block.levels;
    let columns: Vec<String> = match block.output {
        SweepOutput::Spectrum => (1..=levels)
            .map(|n| format!("r_{n}"))
            .chain((1..=levels).map(|n| format!("r_dce_{n}")))
            .chain((0..=levels).map(|n| format!("eta_{n}")))
            .collect(),
        SweepOutput::Dynamics => ["t_star", "max_mean_n", "mandel_q_at_t_star", "max_tail_probability", "max_norm_drift"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    };
    let rows = pool(jobs)?.install(|| {
        grid.par_iter()
            .map(|&value| {
                let mut point = cfg.clone();
                point.sweep = None;
                let result = point.set_parameter(&block.parameter, value).and_then(|_| match block.output {
                    SweepOutput::Spectrum => spectral_point(&point, levels),
                    SweepOutput::Dynamics => dynamics_point(&point),
                });
                match result {
                    Ok((values, flags)) => SweepRow { value, values, flags, error: None },
                    Err(e) => SweepRow { value, values: Vec::new(), flags: Vec::new(), error: Some(e.to_string()) },
                }
            })
            .collect()
    });
    Ok(SweepTable { parameter: block.parameter.clone(), columns, rows })
}

/// Numerical resonance search for the scenario's model over `bracket`, with
/// probes spread over `jobs` workers.
pub fn resonance_scan(cfg: &ScenarioConfig, bracket: Option<(f64, f64)>, jobs: usize) -> Result<ResonanceReport> {
    cfg.validate()?;
    let block = cfg.resonance.clone().unwrap_or_default();
    let (lo, hi) = bracket
        .or(block.bracket.map(|b| (b[0], b[1])))
        .ok_or_else(|| Error::Config("no resonance bracket given".into()))?;
    if !(lo < hi) {
        return Err(Error::invalid("bracket", format!("empty bracket [{lo}, {hi}]")));
    }
    let n_max = cfg.n_max();
    let h_hi = cfg.driven_at(hi, n_max)?;
    let dt = cfg.numerics.dt.unwrap_or_else(|| IntegratorConfig::max_dt(h_hi.fast_frequency()));
    let psi0 = StateVector::bare(h_hi.basis(), 0, 0)?;
    let build = |eta: f64| cfg.driven_at(eta, n_max);
    let mut search = ResonanceSearch::new(&build, psi0, dt);
    if let Some(t) = block.probe_horizon {
        search.probe_horizon = t;
    }
    if let Some(c) = block.coarse_points {
        search.coarse_points = c;
    }
    if let Some(t) = block.tolerance {
        search.tolerance = t;
    }
    pool(jobs)?.install(|| find_resonance(&search, (lo, hi)))
}
