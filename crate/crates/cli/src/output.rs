//! Record and summary files.
//!
//! `records.csv` columns, in order:
//! `eval_index, lambda_0 .. lambda_{k-1}, re_a_dagger, pot_overlap, nl_overlap,
//! total, res_q, fidelity_vs_oracle, flagged, phase, error`.
//! Floats use 17 significant digits; absent values are empty cells.

use std::path::Path;

use quva_core::gpr::{CandidateRecord, SearchPhase};
use serde::Serialize;

use crate::CliError;

/// Round-trip exact float text.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn phase_name(phase: SearchPhase) -> &'static str {
    match phase {
        SearchPhase::Random => "random",
        SearchPhase::Guided => "guided",
    }
}

pub fn record_header(n_params: usize) -> Vec<String> {
    let mut h = vec!["eval_index".to_string()];
    h.extend((0..n_params).map(|j| format!("lambda_{j}")));
    for c in ["re_a_dagger", "pot_overlap", "nl_overlap", "total", "res_q", "fidelity_vs_oracle", "flagged", "phase", "error"] {
        h.push(c.into());
    }
    h
}

pub fn write_records_csv(path: &Path, records: &[CandidateRecord], n_params: usize) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(record_header(n_params))?;
    for r in records {
        let b = r.breakdown;
        let mut row = vec![r.eval_index.to_string()];
        row.extend(r.lambda.iter().map(|&x| fmt_f64(x)));
        row.push(fmt_opt(b.map(|b| b.re_a_dagger)));
        row.push(fmt_opt(b.map(|b| b.pot_overlap)));
        row.push(fmt_opt(b.map(|b| b.nl_overlap)));
        row.push(fmt_opt(b.map(|b| b.total)));
        row.push(fmt_opt(r.res_q));
        row.push(fmt_opt(r.fidelity_vs_oracle));
        row.push(r.flagged.to_string());
        row.push(phase_name(r.phase).into());
        row.push(r.error.clone().unwrap_or_default());
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RecordRow<'a> {
    eval_index: usize,
    lambda: &'a [f64],
    re_a_dagger: Option<f64>,
    pot_overlap: Option<f64>,
    nl_overlap: Option<f64>,
    total: Option<f64>,
    res_q: Option<f64>,
    fidelity_vs_oracle: Option<f64>,
    flagged: bool,
    phase: &'static str,
    error: Option<&'a str>,
}

pub fn write_records_json(path: &Path, records: &[CandidateRecord]) -> Result<(), CliError> {
    let rows: Vec<RecordRow> = records
        .iter()
        .map(|r| RecordRow {
            eval_index: r.eval_index,
            lambda: &r.lambda,
            re_a_dagger: r.breakdown.map(|b| b.re_a_dagger),
            pot_overlap: r.breakdown.map(|b| b.pot_overlap),
            nl_overlap: r.breakdown.map(|b| b.nl_overlap),
            total: r.total(),
            res_q: r.res_q,
            fidelity_vs_oracle: r.fidelity_vs_oracle,
            flagged: r.flagged,
            phase: phase_name(r.phase),
            error: r.error.as_deref(),
        })
        .collect();
    write_json(path, &rows)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleSummary {
    pub f0: f64,
    /// `f′(0)` of each reference family member.
    pub fp0: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub shot_seed: Option<u64>,
    pub n_records: usize,
    pub n_failed: usize,
    pub candidate_count: usize,
    /// Highest oracle fidelity among flagged candidates.
    pub best_fidelity: Option<f64>,
    pub best_fidelity_index: Option<usize>,
    /// Highest oracle fidelity over every record, flagged or not.
    pub best_fidelity_any: Option<f64>,
    pub min_abs_total: Option<f64>,
    pub min_abs_total_index: Option<usize>,
    pub oracle: OracleSummary,
}

impl RunSummary {
    pub fn from_records(records: &[CandidateRecord], seed: u64, shot_seed: Option<u64>, oracle: OracleSummary) -> Self {
        let argmax = |it: &mut dyn Iterator<Item = (usize, f64)>| it.fold(None, |best: Option<(usize, f64)>, (i, f)| {
            if best.is_none_or(|(_, b)| f > b) {
                Some((i, f))
            } else {
                best
            }
        });
        let best = argmax(&mut records.iter().filter(|r| r.flagged).filter_map(|r| r.fidelity_vs_oracle.map(|f| (r.eval_index, f))));
        let any = argmax(&mut records.iter().filter_map(|r| r.fidelity_vs_oracle.map(|f| (r.eval_index, f))));
        let closest = argmax(&mut records.iter().filter_map(|r| r.total().map(|t| (r.eval_index, -t.abs()))));
        Self {
            seed,
            shot_seed,
            n_records: records.len(),
            n_failed: records.iter().filter(|r| r.error.is_some()).count(),
            candidate_count: records.iter().filter(|r| r.flagged).count(),
            best_fidelity: best.map(|b| b.1),
            best_fidelity_index: best.map(|b| b.0),
            best_fidelity_any: any.map(|b| b.1),
            min_abs_total: closest.map(|c| -c.1),
            min_abs_total_index: closest.map(|c| c.0),
            oracle,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use quva_core::expectation::ExpectationBreakdown;

    fn record(i: usize, total: f64, fid: f64, flagged: bool) -> CandidateRecord {
        let breakdown = ExpectationBreakdown { re_a_dagger: 0.1, im_a_dagger: 0.0, pot_overlap: 0.2, potential: 0.0, nl_overlap: 0.3, total };
        CandidateRecord {
            eval_index: i,
            lambda: vec![0.5, 1.0 / 3.0],
            breakdown: Some(breakdown),
            res_q: Some(total * total + 1.0),
            fidelity_vs_oracle: Some(fid),
            flagged,
            phase: SearchPhase::Random,
            error: None,
        }
    }

    #[test]
    fn floats_round_trip() {
        for x in [1.0 / 3.0, -2.5e-300, 6.02214076e23, std::f64::consts::PI] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_records_csv(&path, &[record(0, 2.0, 0.5, true)], 2).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "eval_index,lambda_0,lambda_1,re_a_dagger,pot_overlap,nl_overlap,total,res_q,fidelity_vs_oracle,flagged,phase,error"
        );
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "0");
        assert_eq!(row[2].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(row[9], "true");
        assert_eq!(row[10], "random");
        assert_eq!(row[11], "");
    }

    #[test]
    fn summary_picks_flagged_best() {
        let records = vec![record(0, 5.0, 0.99, false), record(1, 0.5, 0.7, true), record(2, -0.1, 0.8, true)];
        let oracle = OracleSummary { f0: 1.0, fp0: vec![], error: None };
        let s = RunSummary::from_records(&records, 1, None, oracle);
        assert_eq!(s.candidate_count, 2);
        assert_eq!(s.best_fidelity, Some(0.8));
        assert_eq!(s.best_fidelity_index, Some(2));
        assert_eq!(s.best_fidelity_any, Some(0.99));
        assert_eq!(s.min_abs_total, Some(0.1));
    }
}
