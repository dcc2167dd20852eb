//! End-to-end runs: simulate count files, analyze them, write reports.

use std::path::{Path, PathBuf};

use crate::chsh::{chsh_monte_carlo_sigma, chsh_s, ChshInput};
use crate::config::ExperimentConfig;
use crate::conversion::{convert, source_state, SourceModel};
use crate::counts::{
    derive_seed, expected_counts, read_csv_file, simulate_counts, simulate_process_counts,
    write_csv_file, CountRecord, DetectionModel, Sampling,
};
use crate::efficiency::{efficiency_budget, focusing_factor};
use crate::error::{Error, Result};
use crate::quantum::{DensityMatrix, Measured};
use crate::report::Report;
use crate::tomography::{
    monte_carlo_errors, process_reconstructors, state_reconstructors, tomography_settings,
    Estimate, TomographyKind, TomographyOptions,
};

pub const STATE_IN_CSV: &str = "state_in.csv";
pub const STATE_OUT_CSV: &str = "state_out.csv";
pub const PROCESS_CSV: &str = "process.csv";
pub const CHSH_CSV: &str = "chsh.csv";
pub const SUMMARY: &str = "summary.txt";

/// Published values, shown next to simulated ones for comparison only.
pub const LITERATURE: &[(&str, f64)] = &[
    ("chsh.s_value", 2.615),
    ("chsh.s_sigma", 0.027),
    ("state_in.raw.fidelity", 0.9591),
    ("state_in.raw.tangle", 0.843),
    ("state_out.raw.fidelity", 0.938),
    ("state_out.raw.tangle", 0.77),
    ("state_out.corrected.fidelity", 0.967),
    ("state_out.corrected.purity", 0.947),
    ("state_out.corrected.tangle", 0.88),
    ("process.fidelity", 0.9923),
    ("process.purity", 0.9854),
    ("efficiency.theoretical_efficiency", 0.008),
    ("efficiency.observed_efficiency", 0.006),
    ("efficiency.intrinsic_efficiency", 0.0004),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    ReconstructState,
    ReconstructProcess,
    Chsh,
    Efficiency,
    Report,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn state_counts(
    rho: &DensityMatrix,
    settings: &[(crate::counts::Setting, crate::counts::Setting)],
    source: &SourceModel,
    det: &DetectionModel,
    duration: f64,
    noiseless: bool,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    if noiseless {
        Ok(expected_counts(rho, settings, source, det, duration))
    } else {
        simulate_counts(rho, settings, source, det, duration, seed)
    }
}

/// Writes the four count files and returns their paths.
pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out)?;
    let acq = &cfg.acquisition;
    let source = cfg.source.model();
    let rho_in = source_state(&source)?;
    let (rho_out, success) = convert(&rho_in, &cfg.conversion)?;
    let converted = SourceModel { pair_rate: source.pair_rate * success, ..source.clone() };
    let tomo = tomography_settings(TomographyKind::State2q);

    let state_in = state_counts(
        &rho_in,
        &tomo,
        &source,
        &cfg.detection.input,
        acq.input_state_s,
        acq.noiseless,
        derive_seed(cfg.seed, "state_in"),
    )?;
    let state_out = state_counts(
        &rho_out,
        &tomo,
        &converted,
        &cfg.detection.output,
        acq.output_state_s,
        acq.noiseless,
        derive_seed(cfg.seed, "state_out"),
    )?;
    let chsh = state_counts(
        &rho_out,
        &cfg.chsh.measurement_settings(),
        &converted,
        &cfg.detection.output,
        acq.chsh_s,
        acq.noiseless,
        derive_seed(cfg.seed, "chsh"),
    )?;
    let sampling = if acq.noiseless {
        Sampling::Expected
    } else {
        Sampling::Poisson { seed: derive_seed(cfg.seed, "process") }
    };
    let process =
        simulate_process_counts(&cfg.process.channel, cfg.process.photon_rate_cps, acq.process_s, sampling)?;

    let mut written = Vec::new();
    for (name, records) in
        [(STATE_IN_CSV, state_in), (STATE_OUT_CSV, state_out), (PROCESS_CSV, process), (CHSH_CSV, chsh)]
    {
        let path = out.join(name);
        write_csv_file(&path, &records)?;
        written.push(path);
    }
    Ok(written)
}

fn push_estimate(report: &mut Report, estimate: &Estimate) {
    match estimate {
        Estimate::State(rho) => report.matrix("rho", rho.matrix()),
        Estimate::Process(chi) => report.matrix("chi", chi.matrix()),
    };
}

/// Reconstructs one state dataset; error bars from Monte-Carlo resampling when `mc_samples > 0`.
pub fn reconstruct_state_records(
    records: &[CountRecord],
    name: &str,
    options: &TomographyOptions,
    mc_samples: usize,
    seed: u64,
) -> Result<Report> {
    let reconstructor = state_reconstructors().build(name, options)?;
    let result = reconstructor.reconstruct(records)?;
    let mut metrics = result.metrics;
    if mc_samples > 0 {
        metrics = monte_carlo_errors(records, reconstructor.as_ref(), &metrics, mc_samples, seed)?.report;
    }
    let mut report = Report::new();
    report
        .text("reconstructor", reconstructor.name())
        .text("accidentals_subtracted", options.subtract_accidentals.to_string())
        .text("converged", result.converged.to_string())
        .number("iterations", result.iterations as f64)
        .number("log_likelihood", result.log_likelihood)
        .number("mc_samples", mc_samples as f64)
        .measured("fidelity", metrics.fidelity)
        .measured("purity", metrics.purity);
    if let Some(t) = metrics.tangle {
        report.measured("tangle", t);
    }
    push_estimate(&mut report, &result.estimate);
    Ok(report)
}

pub fn reconstruct_process_records(
    records: &[CountRecord],
    name: &str,
    options: &TomographyOptions,
    mc_samples: usize,
    seed: u64,
) -> Result<Report> {
    let reconstructor = process_reconstructors().build(name, options)?;
    let result = reconstructor.reconstruct(records)?;
    let mut metrics = result.metrics;
    if mc_samples > 0 {
        metrics = monte_carlo_errors(records, reconstructor.as_ref(), &metrics, mc_samples, seed)?.report;
    }
    let mut report = Report::new();
    report
        .text("reconstructor", reconstructor.name())
        .text("converged", result.converged.to_string())
        .number("iterations", result.iterations as f64)
        .number("log_likelihood", result.log_likelihood)
        .number("mc_samples", mc_samples as f64)
        .measured("fidelity", metrics.fidelity)
        .measured("purity", metrics.purity);
    push_estimate(&mut report, &result.estimate);
    Ok(report)
}

pub fn chsh_records(cfg: &ExperimentConfig, records: &[CountRecord], mc_samples: usize) -> Result<Report> {
    let r = chsh_s(&cfg.chsh, ChshInput::Counts(records))?;
    let mut report = Report::new();
    for (key, (e, s)) in ["e_ab", "e_ab_prime", "e_a_prime_b", "e_a_prime_b_prime"]
        .iter()
        .zip(r.correlations.iter().zip(&r.correlation_sigmas))
    {
        report.measured(key, Measured { value: *e, std_error: *s });
    }
    report.number("s_value", r.s_value).number("s_sigma", r.s_sigma);
    if r.s_sigma > 0.0 {
        report.number("violation_sigmas", (r.s_value.abs() - 2.0) / r.s_sigma);
    }
    if mc_samples > 1 {
        let mc = chsh_monte_carlo_sigma(&cfg.chsh, records, mc_samples, derive_seed(cfg.seed, "mc-chsh"))?;
        report.number("s_sigma_monte_carlo", mc);
    }
    Ok(report)
}

pub fn efficiency_report(cfg: &ExperimentConfig) -> Result<Report> {
    let budget = efficiency_budget(&cfg.efficiency.crystal, &cfg.efficiency.budget)?;
    let mut report = Report::new();
    report.number("pump_power_w", cfg.efficiency.crystal.pump_power_w);
    report.number("h_m", cfg.efficiency.crystal.h_m);
    report.number("h_m_optimal_focus", focusing_factor(2.84)?);
    for (k, v) in budget.entries() {
        report.number(k, v);
    }
    Ok(report)
}

fn stem(name: &str) -> &str {
    name.trim_end_matches(".csv")
}

fn write_report(out: &Path, name: &str, report: &Report) -> Result<PathBuf> {
    ensure_dir(out)?;
    let path = out.join(name);
    report.write_file(&path)?;
    Ok(path)
}

fn with_prefix(prefix: &str, report: Report) -> Report {
    let mut out = Report::new();
    for (k, v) in report.entries() {
        let key = format!("{prefix}.{k}");
        match v {
            crate::report::Value::Number(x) => out.number(key, *x),
            crate::report::Value::Text(s) => out.text(key, s.clone()),
            crate::report::Value::Matrix(m) => out.matrix(key, m),
        };
    }
    out
}

/// Options for the raw and (if configured) accidental-corrected variants.
fn state_variants(cfg: &ExperimentConfig) -> Result<Vec<(&'static str, TomographyOptions)>> {
    let options = cfg.tomography.options()?;
    let mut variants = vec![("raw", TomographyOptions { subtract_accidentals: false, ..options })];
    if options.subtract_accidentals {
        variants.push(("corrected", options));
    }
    Ok(variants)
}

fn state_reports(cfg: &ExperimentConfig, file: &str, records: &[CountRecord]) -> Result<Report> {
    let mut report = Report::new();
    for (variant, options) in state_variants(cfg)? {
        let seed = derive_seed(cfg.seed, &format!("mc-{}-{variant}", stem(file)));
        let r = reconstruct_state_records(
            records,
            &cfg.tomography.state_reconstructor,
            &options,
            cfg.tomography.mc_samples,
            seed,
        )?;
        report.extend(with_prefix(variant, r));
    }
    Ok(report)
}

fn process_report(cfg: &ExperimentConfig, records: &[CountRecord]) -> Result<Report> {
    reconstruct_process_records(
        records,
        &cfg.tomography.process_reconstructor,
        &TomographyOptions { subtract_accidentals: false, ..cfg.tomography.options()? },
        cfg.tomography.mc_samples,
        derive_seed(cfg.seed, "mc-process"),
    )
}

/// Runs `command`, writing its outputs under `out`. `input` overrides the
/// count file read by the reconstruct and chsh commands.
pub fn run(cfg: &ExperimentConfig, command: Command, out: &Path, input: Option<&Path>) -> Result<Vec<PathBuf>> {
    let load = |default: &str| -> Result<(String, Vec<CountRecord>)> {
        let path = input.map(Path::to_path_buf).unwrap_or_else(|| out.join(default));
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or(default).to_string();
        Ok((name, read_csv_file(&path)?))
    };
    match command {
        Command::Simulate => simulate(cfg, out),
        Command::ReconstructState => {
            let files: Vec<&str> = if input.is_some() { vec![STATE_IN_CSV] } else { vec![STATE_IN_CSV, STATE_OUT_CSV] };
            let mut written = Vec::new();
            for f in files {
                let (name, records) = load(f)?;
                let report = state_reports(cfg, &name, &records)?;
                written.push(write_report(out, &format!("{}_report.txt", stem(&name)), &report)?);
            }
            Ok(written)
        }
        Command::ReconstructProcess => {
            let (name, records) = load(PROCESS_CSV)?;
            let report = process_report(cfg, &records)?;
            Ok(vec![write_report(out, &format!("{}_report.txt", stem(&name)), &report)?])
        }
        Command::Chsh => {
            let (name, records) = load(CHSH_CSV)?;
            let report = chsh_records(cfg, &records, cfg.tomography.mc_samples)?;
            Ok(vec![write_report(out, &format!("{}_report.txt", stem(&name)), &report)?])
        }
        Command::Efficiency => Ok(vec![write_report(out, "efficiency_report.txt", &efficiency_report(cfg)?)?]),
        Command::Report => Ok(vec![write_report(out, SUMMARY, &summary(cfg, out)?)?]),
    }
}

/// Aggregates every analysis of the count files in `dir`, with literature values alongside.
pub fn summary(cfg: &ExperimentConfig, dir: &Path) -> Result<Report> {
    let read = |name: &str| read_csv_file(&dir.join(name));
    let mut report = Report::new();
    report.number("seed", cfg.seed as f64);
    report.extend(with_prefix("chsh", chsh_records(cfg, &read(CHSH_CSV)?, cfg.tomography.mc_samples)?));
    for file in [STATE_IN_CSV, STATE_OUT_CSV] {
        let mut r = state_reports(cfg, file, &read(file)?)?;
        r = strip_matrices(r);
        report.extend(with_prefix(stem(file), r));
    }
    report.extend(with_prefix("process", strip_matrices(process_report(cfg, &read(PROCESS_CSV)?)?)));
    report.extend(with_prefix("efficiency", efficiency_report(cfg)?));
    let mut anchors = Report::new();
    for (k, v) in LITERATURE {
        anchors.number(*k, *v);
    }
    report.extend(with_prefix("literature", anchors));
    Ok(report)
}

fn strip_matrices(report: Report) -> Report {
    let mut out = Report::new();
    for (k, v) in report.entries() {
        match v {
            crate::report::Value::Number(x) => out.number(k.clone(), *x),
            crate::report::Value::Text(s) => out.text(k.clone(), s.clone()),
            crate::report::Value::Matrix(_) => continue,
        };
    }
    out
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::UnknownStrategy(_) | Error::InvalidParameter(_) => 2,
        Error::NonConvergence { .. } | Error::MonteCarlo { .. } => 3,
        Error::Io { .. } | Error::Parse(_) => 4,
        _ => 1,
    }
}
