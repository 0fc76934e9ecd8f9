//! CSV and aligned-text renderings of Parzen reports.

use crate::error::{Error, Result};
use crate::parzen::ParzenReport;

pub const REPORT_CSV_HEADER: &str = "condition,sigma,mean_ll,stderr,n_test,n_samples";

/// One line per condition; missing estimates leave their fields empty.
pub fn report_csv(report: &ParzenReport) -> String {
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.condition,
            opt(r.sigma),
            opt(r.mean_ll),
            opt(r.stderr),
            r.n_test,
            r.n_samples
        ));
    }
    out
}

/// Mean log-likelihoods laid out with one column per condition label and
/// one row per model:
///
/// ```text
///        Label of tiny-mnist-3
/// Model      0      1      2
/// sbp    123.4  567.8   90.1
/// ```
///
/// All reports must cover the same labels. Missing estimates print as `-`.
pub fn format_table(reports: &[ParzenReport]) -> Result<String> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Input("no reports to tabulate".into()))?;
    let labels: Vec<&str> = first.rows.iter().map(|r| r.label.as_str()).collect();
    for rep in reports {
        let these: Vec<&str> = rep.rows.iter().map(|r| r.label.as_str()).collect();
        if these != labels {
            return Err(Error::Input(format!(
                "report {:?} has labels {these:?}, expected {labels:?}",
                rep.model
            )));
        }
    }
    let cells: Vec<Vec<String>> = reports
        .iter()
        .map(|rep| {
            rep.rows
                .iter()
                .map(|r| r.mean_ll.map_or_else(|| "-".to_string(), |v| format!("{v:.1}")))
                .collect()
        })
        .collect();
    let model_w = reports
        .iter()
        .map(|r| r.model.chars().count())
        .chain([5])
        .max()
        .unwrap_or(5);
    let col_w: Vec<usize> = (0..labels.len())
        .map(|j| {
            cells
                .iter()
                .map(|row| row[j].len())
                .chain([labels[j].chars().count()])
                .max()
                .unwrap_or(1)
        })
        .collect();

    let mut out = String::new();
    let title = format!("Label of {}", first.dataset);
    out.push_str(&format!("{:model_w$}  {title}\n", ""));
    let mut header = format!("{:<model_w$}", "Model");
    for (label, w) in labels.iter().zip(&col_w) {
        header.push_str(&format!("  {label:>w$}"));
    }
    out.push_str(header.trim_end());
    out.push('\n');
    for (rep, row) in reports.iter().zip(&cells) {
        let mut line = format!("{:<model_w$}", rep.model);
        for (cell, w) in row.iter().zip(&col_w) {
            line.push_str(&format!("  {cell:>w$}"));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    Ok(out)
}
