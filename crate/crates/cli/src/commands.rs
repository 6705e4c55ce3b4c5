//! Subcommand bodies.

use std::fs;
use std::path::{Path, PathBuf};

use quva_core::ansatz::{build_ansatz, AnsatzSpec, ParameterVector};
use quva_core::expectation::{total_expectation, MeasurementConfig, MeasurementMode};
use quva_core::gpr::{run_search, CandidateRecord};
use quva_core::oracle::{correlation_study, fidelity, oracle_solutions_with, ClassicalSolution};
use serde::Serialize;

use crate::config::{CorrelationConfig, ExperimentConfig, RunPlan};
use crate::output::{fmt_f64, write_json, write_records_csv, write_records_json, OracleSummary, RunSummary};
use crate::plot::{Chart, Series, Style};
use crate::verify::{run_suite, CheckOutcome, VerifyOptions};
use crate::CliError;

#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub shots: Option<u64>,
    pub no_plots: bool,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.apply_seed(seed);
        }
        if let Some(shots) = self.shots {
            cfg.apply_shots(shots);
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        if self.no_plots {
            cfg.emit_plots = false;
        }
    }
}

pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub summary: RunSummary,
}

fn oracle_references(plan: &RunPlan) -> (Vec<ClassicalSolution>, OracleSummary) {
    match oracle_solutions_with(&plan.problem, &plan.potential, plan.f0, &plan.shooting) {
        Ok(refs) => {
            let fp0 = refs.iter().map(|r| r.fp0).collect();
            (refs, OracleSummary { f0: plan.f0, fp0, error: None })
        }
        Err(e) => (Vec::new(), OracleSummary { f0: plan.f0, fp0: Vec::new(), error: Some(e.to_string()) }),
    }
}

/// Loads `config_path`, applies `overrides`, runs the search and writes every
/// artifact. Failed evaluations are persisted before the error is returned.
pub fn cmd_run(config_path: &Path, overrides: &Overrides) -> Result<RunOutcome, CliError> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    overrides.apply(&mut cfg);
    run_config(&cfg)
}

pub fn run_config(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let plan = cfg.plan()?;
    let (references, oracle) = oracle_references(&plan);
    let records = run_search(&plan.problem, &plan.potential, &plan.ansatz, &plan.search, &plan.measurement, &references)?;

    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    write_records_csv(&dir.join("records.csv"), &records, plan.ansatz.parameter_count())?;
    write_records_json(&dir.join("records.json"), &records)?;
    let shot_seed = match plan.measurement.mode {
        MeasurementMode::Shots { seed, .. } => Some(seed),
        MeasurementMode::Exact => None,
    };
    let summary = RunSummary::from_records(&records, plan.search.seed, shot_seed, oracle);
    write_json(&dir.join("summary.json"), &summary)?;
    if cfg.emit_plots {
        write_run_plots(&dir, &plan, &records, &references, &summary)?;
    }
    if let Some(bad) = records.iter().find(|r| r.error.is_some()) {
        return Err(CliError::Record { index: bad.eval_index, message: bad.error.clone().unwrap_or_default() });
    }
    Ok(RunOutcome { output_dir: dir, summary })
}

/// Record shown in the figures: the best flagged candidate, else the smallest `|total|`.
fn featured<'a>(records: &'a [CandidateRecord], summary: &RunSummary) -> Option<&'a CandidateRecord> {
    let index = summary.best_fidelity_index.or(summary.min_abs_total_index)?;
    records.get(index)
}

fn write_run_plots(
    dir: &Path,
    plan: &RunPlan,
    records: &[CandidateRecord],
    references: &[ClassicalSolution],
    summary: &RunSummary,
) -> Result<(), CliError> {
    let Some(record) = featured(records, summary) else { return Ok(()) };
    let params = ParameterVector::new(record.lambda.clone())?;
    let psi = build_ansatz(&plan.ansatz, &params)?;
    let amps = psi.real_parts();
    let dim = amps.len() as f64;
    let xs = |i: usize| i as f64 / dim;

    let mut chart = Chart::new(
        format!("solution vector, record {}", record.eval_index),
        "x",
        "amplitude",
    );
    let reference = references.iter().max_by(|a, b| {
        let fa = fidelity(&psi, a).unwrap_or(0.0);
        let fb = fidelity(&psi, b).unwrap_or(0.0);
        fa.total_cmp(&fb)
    });
    let sign = reference.map_or(1.0, |r| {
        let dot: f64 = r.samples.iter().zip(&amps).map(|(a, b)| a * b).sum();
        if dot < 0.0 {
            -1.0
        } else {
            1.0
        }
    });
    chart = chart.with(Series::new("candidate", amps.iter().enumerate().map(|(i, a)| (xs(i), sign * a)).collect(), Style::Bars));
    if let Some(r) = reference {
        chart = chart.with(Series::new(
            format!("oracle f'(0) = {:.3}", r.fp0),
            r.samples.iter().enumerate().map(|(i, v)| (xs(i), *v)).collect(),
            Style::Line,
        ));
    }
    fs::write(dir.join("solution.svg"), chart.render())?;

    let mut landscape = Chart::new("total expectation along each angle", "angle (rad)", "total expectation");
    let exact = MeasurementConfig::exact();
    for j in 0..params.len() {
        let mut points = Vec::with_capacity(65);
        for k in 0..=64 {
            let mut lambda = record.lambda.clone();
            lambda[j] = lambda_at(k);
            let p = ParameterVector::new(lambda)?;
            let t = total_expectation(&plan.problem, &plan.potential, &plan.ansatz, &p, &exact)?.total;
            points.push((lambda_at(k), t));
        }
        landscape = landscape.with(Series::new(format!("lambda_{j}"), points, Style::Line));
    }
    fs::write(dir.join("landscape.svg"), landscape.render())?;
    Ok(())
}

fn lambda_at(k: usize) -> f64 {
    2.0 * std::f64::consts::PI * k as f64 / 64.0
}

pub fn cmd_verify(opts: &VerifyOptions) -> (Vec<CheckOutcome>, bool) {
    let outcomes = run_suite(opts);
    let ok = outcomes.iter().all(|o| o.passed);
    (outcomes, ok)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthSummary {
    pub depth: usize,
    pub n_samples: usize,
    pub spearman: f64,
    pub cauchy_schwarz_violations: usize,
    pub file: String,
}

pub fn cmd_correlation(config_path: &Path, overrides: &Overrides) -> Result<Vec<DepthSummary>, CliError> {
    let mut cfg = CorrelationConfig::load(config_path)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &overrides.output_dir {
        cfg.output_dir = dir.clone();
    }
    if overrides.no_plots {
        cfg.emit_plots = false;
    }
    run_correlation(&cfg)
}

pub fn run_correlation(cfg: &CorrelationConfig) -> Result<Vec<DepthSummary>, CliError> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    let mut summaries = Vec::new();
    for &depth in &cfg.depths {
        let spec = AnsatzSpec::new(cfg.n_qubits, depth, cfg.layout)?;
        let data = correlation_study(cfg.n_qubits, &spec, cfg.n_samples, cfg.seed.wrapping_add(depth as u64))?;
        let file = format!("correlation_d{depth}.csv");
        let mut w = csv::Writer::from_path(dir.join(&file))?;
        let mut header = vec!["index".to_string(), "kappa1".into(), "kappa0".into()];
        header.extend((0..spec.parameter_count()).map(|j| format!("lambda_{j}")));
        header.extend(["total".to_string(), "abs_total".into(), "res_q".into()]);
        w.write_record(&header)?;
        for (i, p) in data.points.iter().enumerate() {
            let mut row = vec![i.to_string(), fmt_f64(p.kappa1), fmt_f64(p.kappa0)];
            row.extend(p.lambda.iter().map(|&x| fmt_f64(x)));
            row.extend([fmt_f64(p.total), fmt_f64(p.total.abs()), fmt_f64(p.res_q)]);
            w.write_record(&row)?;
        }
        w.flush()?;
        if cfg.emit_plots {
            let points = data.points.iter().map(|p| (p.res_q.max(1e-300).log10(), p.total.abs().max(1e-300).log10())).collect();
            let chart = Chart::new(
                format!("depth {depth}: Spearman {:.3}", data.spearman),
                "log10 Res_Q",
                "log10 |total expectation|",
            )
            .with(Series::new("samples", points, Style::Markers));
            fs::write(dir.join(format!("correlation_d{depth}.svg")), chart.render())?;
        }
        summaries.push(DepthSummary {
            depth,
            n_samples: data.points.len(),
            spearman: data.spearman,
            cauchy_schwarz_violations: data.cauchy_schwarz_violations,
            file,
        });
    }
    write_json(&dir.join("correlation_summary.json"), &summaries)?;
    Ok(summaries)
}
