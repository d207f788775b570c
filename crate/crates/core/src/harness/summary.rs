use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::trials::TrialRecord;
use crate::hyperparams::SplitPolicy;

/// Aggregates of one `(dataset, technique, policy, eps)` cell. Standard
/// deviations are population (divide by the run count).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub dataset: String,
    pub technique: String,
    pub split_policy: SplitPolicy,
    pub eps_total: f64,
    pub beta: f64,
    pub runs: usize,
    pub median_error_mean: f64,
    pub median_error_std: f64,
    pub ri_width_mean: f64,
    pub ri_width_std: f64,
    /// Fraction of runs meeting the rank condition; reported as correctness.
    pub coverage: f64,
    pub numeric_coverage: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn same_cell(a: &TrialRecord, b: &TrialRecord) -> bool {
    a.dataset == b.dataset
        && a.technique == b.technique
        && a.split_policy == b.split_policy
        && a.eps_total.to_bits() == b.eps_total.to_bits()
        && a.beta.to_bits() == b.beta.to_bits()
}

/// One summary per cell, in order of first appearance.
pub fn summarize(records: &[TrialRecord]) -> Result<Vec<CellSummary>> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("no trial records to summarize".into()));
    }
    let mut cells: Vec<Vec<&TrialRecord>> = Vec::new();
    for r in records {
        match cells.iter_mut().find(|c| same_cell(c[0], r)) {
            Some(cell) => cell.push(r),
            None => cells.push(vec![r]),
        }
    }
    Ok(cells
        .into_iter()
        .map(|cell| {
            let errors: Vec<f64> = cell.iter().map(|r| r.median_error).collect();
            let widths: Vec<f64> = cell.iter().map(|r| r.ri_width).collect();
            let (median_error_mean, median_error_std) = mean_std(&errors);
            let (ri_width_mean, ri_width_std) = mean_std(&widths);
            let runs = cell.len();
            let rate = |pred: fn(&TrialRecord) -> bool| {
                cell.iter().filter(|r| pred(r)).count() as f64 / runs as f64
            };
            let first = cell[0];
            CellSummary {
                dataset: first.dataset.clone(),
                technique: first.technique.clone(),
                split_policy: first.split_policy,
                eps_total: first.eps_total,
                beta: first.beta,
                runs,
                median_error_mean,
                median_error_std,
                ri_width_mean,
                ri_width_std,
                coverage: rate(|r| r.covered),
                numeric_coverage: rate(|r| r.covered_numeric),
            }
        })
        .collect())
}

/// Plain-text table in the layout
/// `Dataset | Technique | Median Error | Average RI Width | Correctness`.
pub fn format_table(summaries: &[CellSummary]) -> String {
    let mut out = String::from(
        "| Dataset | Technique | Split | eps | Median Error | Average RI Width | Correctness |\n\
         |---|---|---|---|---|---|---|\n",
    );
    for s in summaries {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {:.2} (± {:.2}) | {:.2} (± {:.2}) | {:.2} |\n",
            s.dataset,
            s.technique,
            s.split_policy,
            s.eps_total,
            s.median_error_mean,
            s.median_error_std,
            s.ri_width_mean,
            s.ri_width_std,
            s.coverage
        ));
    }
    out
}
