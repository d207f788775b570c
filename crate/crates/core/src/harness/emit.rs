//! Result files.
//!
//! | file | contents |
//! |---|---|
//! | `trials.csv` | one [`TrialRecord`] per row, header [`TRIALS_HEADER`] |
//! | `trials.json` | the same records as a JSON array |
//! | `timings.csv` | per-trial wall time, kept apart so `trials.csv` is reproducible |
//! | `summary.csv`, `summary.json` | one [`CellSummary`] per cell |
//! | `table.md` | correctness table of the summaries |
//! | `fig_<dataset>.csv` | eps on the x-axis, mean and std of error and width per series |

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::summary::{format_table, CellSummary};
use crate::harness::trials::{TrialRecord, TECHNIQUE};

pub const TRIALS_HEADER: &str = "technique,dataset,trial_id,seed,eps_total,eps1,eps2,beta,split_policy,step,\
estimate,lower,upper,true_median,median_error,ri_width,covered,covered_numeric";

pub fn emit(records: &[TrialRecord], summaries: &[CellSummary], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("no trial records to emit".into()));
    }
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let path = out_dir.join("trials.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    written.push(path);

    let path = out_dir.join("timings.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["dataset", "split_policy", "eps_total", "trial_id", "wall_time_ms"])?;
    for r in records {
        w.write_record([
            r.dataset.clone(),
            r.split_policy.to_string(),
            r.eps_total.to_string(),
            r.trial_id.to_string(),
            r.wall_time_ms.to_string(),
        ])?;
    }
    w.flush()?;
    written.push(path);

    let path = out_dir.join("trials.json");
    fs::write(&path, serde_json::to_string_pretty(records)?)?;
    written.push(path);

    written.extend(emit_summaries(summaries, out_dir)?);
    Ok(written)
}

/// Writes the summary tables and one plot-data file per dataset.
pub fn emit_summaries(summaries: &[CellSummary], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if summaries.is_empty() {
        return Err(Error::InvalidParameter("no summaries to emit".into()));
    }
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let path = out_dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for s in summaries {
        w.serialize(s)?;
    }
    w.flush()?;
    written.push(path);

    let path = out_dir.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(summaries)?)?;
    written.push(path);

    let path = out_dir.join("table.md");
    fs::write(&path, format_table(summaries))?;
    written.push(path);

    written.extend(emit_plots(summaries, out_dir)?);
    Ok(written)
}

fn series_label(s: &CellSummary) -> String {
    if s.technique == TECHNIQUE {
        s.split_policy.to_string()
    } else {
        s.technique.clone()
    }
}

fn file_stem(dataset: &str) -> String {
    dataset
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// `fig_<dataset>.csv`: one row per eps, four columns per series
/// (`<series>_median_error_mean`, `_std`, `<series>_ri_width_mean`, `_std`).
/// Cells missing from the sweep are left blank.
pub fn emit_plots(summaries: &[CellSummary], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut datasets: Vec<&str> = Vec::new();
    for s in summaries {
        if !datasets.contains(&s.dataset.as_str()) {
            datasets.push(&s.dataset);
        }
    }

    let mut written = Vec::new();
    for dataset in datasets {
        let cells: Vec<&CellSummary> = summaries.iter().filter(|s| s.dataset == dataset).collect();
        let mut series: Vec<String> = Vec::new();
        let mut eps: Vec<f64> = Vec::new();
        for c in &cells {
            let label = series_label(c);
            if !series.contains(&label) {
                series.push(label);
            }
            if !eps.contains(&c.eps_total) {
                eps.push(c.eps_total);
            }
        }
        eps.sort_by(f64::total_cmp);

        let path = out_dir.join(format!("fig_{}.csv", file_stem(dataset)));
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec!["eps".to_string()];
        for label in &series {
            for col in ["median_error_mean", "median_error_std", "ri_width_mean", "ri_width_std"] {
                header.push(format!("{label}_{col}"));
            }
        }
        w.write_record(&header)?;
        for e in &eps {
            let mut row = vec![e.to_string()];
            for label in &series {
                match cells.iter().find(|c| c.eps_total == *e && series_label(c) == *label) {
                    Some(c) => row.extend(
                        [c.median_error_mean, c.median_error_std, c.ri_width_mean, c.ri_width_std]
                            .map(|x| x.to_string()),
                    ),
                    None => row.extend(std::iter::repeat_n(String::new(), 4)),
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let records = reader.deserialize().collect::<std::result::Result<Vec<TrialRecord>, _>>()?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::summary::summarize;
    use crate::hyperparams::SplitPolicy;

    fn records() -> Vec<TrialRecord> {
        let mut out = Vec::new();
        for (i, (eps, policy)) in [
            (0.5, SplitPolicy::Default),
            (0.5, SplitPolicy::MedianFocused),
            (1.0, SplitPolicy::Default),
            (1.0, SplitPolicy::Ratio(2.5)),
        ]
        .into_iter()
        .enumerate()
        {
            out.push(TrialRecord {
                technique: TECHNIQUE.into(),
                dataset: "bank full".into(),
                trial_id: i,
                seed: 0xdead_beef_0000 + i as u64,
                eps_total: eps,
                eps1: eps * 0.7,
                eps2: eps - eps * 0.7,
                beta: 0.01,
                split_policy: policy,
                step: 3,
                estimate: -12,
                lower: -20,
                upper: 7,
                true_median: 0.5,
                median_error: 12.5,
                ri_width: 27.0,
                covered: i % 2 == 0,
                covered_numeric: true,
                wall_time_ms: 1.25,
            });
        }
        out
    }

    #[test]
    fn round_trip_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let rs = records();
        let files = emit(&rs, &summarize(&rs).unwrap(), dir.path()).unwrap();
        assert!(files.iter().all(|p| p.exists()));
        let text = fs::read_to_string(dir.path().join("trials.csv")).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRIALS_HEADER);
        let back = read_trials(&dir.path().join("trials.csv")).unwrap();
        let expected: Vec<TrialRecord> = rs
            .into_iter()
            .map(|mut r| {
                r.wall_time_ms = 0.0;
                r
            })
            .collect();
        assert_eq!(back, expected);
    }

    #[test]
    fn figure_layout() {
        let dir = tempfile::tempdir().unwrap();
        let rs = records();
        emit(&rs, &summarize(&rs).unwrap(), dir.path()).unwrap();
        let fig = fs::read_to_string(dir.path().join("fig_bank_full.csv")).unwrap();
        let lines: Vec<&str> = fig.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("eps,default_median_error_mean,default_median_error_std,default_ri_width_mean"));
        assert!(lines[0].contains("median-focused_ri_width_std"));
        assert!(lines[0].contains("ratio=2.5_median_error_mean"));
        assert!(lines[1].starts_with("0.5,12.5,0,27,0,12.5,0,27,0,,,,"));
    }

    #[test]
    fn empty_records_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        assert!(emit(&[], &[], &out).is_err());
        assert!(!out.exists());
    }
}
