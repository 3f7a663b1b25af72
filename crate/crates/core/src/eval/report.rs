//! Report files of a run directory:
//!
//! * `details.csv`: one risk score per row,
//!   `run_id,scenario,method,example_id,metric,value`.
//! * `utility.csv`: one utility score per row,
//!   `run_id,scenario,method,split,task_kind,task_id,value`.
//! * `summary.json`: win rates and utility means with bootstrap intervals.
//!   A pure function of the two CSV files and the seed.
//! * `distributions/<metric>.csv`: `method,example_id,value` per metric.
//! * `efficiency.json`: measured speeds. The only file that varies between
//!   identical runs.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eval::{bootstrap_ci, EfficiencyResult, EvalError, RiskTable, UtilityResult, WinRateTable, BOOTSTRAP_RESAMPLES, CI_LEVEL};
use crate::metrics::Metric;
use crate::scalar::Real;

pub const DETAILS_FILE: &str = "details.csv";
pub const UTILITY_FILE: &str = "utility.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const EFFICIENCY_FILE: &str = "efficiency.json";
pub const DISTRIBUTION_DIR: &str = "distributions";
pub const DETAILS_HEADER: &str = "run_id,scenario,method,example_id,metric,value";
pub const UTILITY_HEADER: &str = "run_id,scenario,method,split,task_kind,task_id,value";
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetailRow {
    pub run_id: String,
    pub scenario: String,
    pub method: String,
    pub example_id: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityRow {
    pub run_id: String,
    pub scenario: String,
    pub method: String,
    pub split: String,
    pub task_kind: String,
    pub task_id: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodWinRate {
    pub method: String,
    pub overall: Option<f64>,
    pub per_metric: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodUtility {
    pub method: String,
    pub split: String,
    pub task_kind: String,
    pub n: usize,
    pub mean: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub run_id: String,
    pub scenario: String,
    pub seed: u64,
    pub methods: Vec<String>,
    pub num_examples: usize,
    pub win_rates: Vec<MethodWinRate>,
    pub utility: Vec<MethodUtility>,
    pub warnings: Vec<String>,
}

/// Rows ordered by method, then example, then metric. Failed generations
/// have no rows.
pub fn risk_rows<T: Real>(run_id: &str, table: &RiskTable<T>) -> Vec<DetailRow> {
    let mut rows = Vec::new();
    for (m, method) in table.methods.iter().enumerate() {
        for (e, ex) in table.example_ids.iter().enumerate() {
            let Some(s) = &table.scores[m][e] else { continue };
            for (metric, v) in s.values() {
                rows.push(DetailRow {
                    run_id: run_id.to_owned(),
                    scenario: table.scenario.name().to_owned(),
                    method: method.clone(),
                    example_id: ex.clone(),
                    metric: metric.name().to_owned(),
                    value: v.as_f64(),
                });
            }
        }
    }
    rows
}

pub fn utility_rows<T: Real>(run_id: &str, scenario: &str, results: &[UtilityResult<T>]) -> Vec<UtilityRow> {
    results
        .iter()
        .flat_map(|r| {
            r.per_task.iter().filter_map(move |(id, v)| {
                v.map(|v| UtilityRow {
                    run_id: run_id.to_owned(),
                    scenario: scenario.to_owned(),
                    method: r.method.clone(),
                    split: r.split.name().to_owned(),
                    task_kind: r.kind.name().to_owned(),
                    task_id: id.clone(),
                    value: v.as_f64(),
                })
            })
        })
        .collect()
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = Vec::<String>::new();
    for s in items {
        if !seen.iter().any(|x| x == s) {
            seen.push(s.to_owned());
        }
    }
    seen
}

/// Win rates and utility intervals recomputed from rows. Methods and
/// examples keep their first-appearance order.
pub fn summarize(
    run_id: &str,
    scenario: &str,
    seed: u64,
    details: &[DetailRow],
    utility: &[UtilityRow],
) -> Result<Summary, EvalError> {
    let methods = first_seen(details.iter().map(|r| r.method.as_str()).chain(utility.iter().map(|r| r.method.as_str())));
    let examples = first_seen(details.iter().map(|r| r.example_id.as_str()));
    let risk_methods = first_seen(details.iter().map(|r| r.method.as_str()));
    let mut warnings = Vec::new();

    let mut win_rates = Vec::new();
    if risk_methods.len() >= 2 {
        let mi: HashMap<&str, usize> = risk_methods.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
        let ei: HashMap<&str, usize> = examples.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
        let mut values = vec![vec![vec![None; Metric::ALL.len()]; examples.len()]; risk_methods.len()];
        for r in details {
            let metric: Metric = r.metric.parse().map_err(|_| EvalError::Report(format!("unknown metric {:?}", r.metric)))?;
            let k = Metric::ALL.iter().position(|&m| m == metric).expect("metric in ALL");
            values[mi[r.method.as_str()]][ei[r.example_id.as_str()]][k] = Some(r.value);
        }
        let table = WinRateTable::compute(&risk_methods, &values)?;
        for (i, m) in risk_methods.iter().enumerate() {
            win_rates.push(MethodWinRate {
                method: m.clone(),
                overall: table.overall[i],
                per_metric: Metric::ALL.iter().zip(&table.per_metric[i]).map(|(m, &v)| (m.name().to_owned(), v)).collect(),
            });
        }
    } else if !details.is_empty() {
        warnings.push(format!("win rate skipped: needs at least 2 methods, got {}", risk_methods.len()));
    }

    let keys = first_seen(utility.iter().map(|r| r.method.as_str()));
    let mut util = Vec::new();
    for m in &keys {
        let groups: Vec<(String, String)> = {
            let mut g: Vec<(String, String)> = Vec::new();
            for r in utility.iter().filter(|r| &r.method == m) {
                let k = (r.split.clone(), r.task_kind.clone());
                if !g.contains(&k) {
                    g.push(k);
                }
            }
            g
        };
        for (split, kind) in groups {
            let vals: Vec<f64> = utility
                .iter()
                .filter(|r| &r.method == m && r.split == split && r.task_kind == kind)
                .map(|r| r.value)
                .collect();
            let (lo, hi) = bootstrap_ci(&vals, BOOTSTRAP_RESAMPLES, CI_LEVEL, seed);
            util.push(MethodUtility {
                method: m.clone(),
                split,
                task_kind: kind,
                n: vals.len(),
                mean: Some(vals.iter().sum::<f64>() / vals.len() as f64),
                ci_low: Some(lo),
                ci_high: Some(hi),
            });
        }
    }

    Ok(Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        run_id: run_id.to_owned(),
        scenario: scenario.to_owned(),
        seed,
        methods,
        num_examples: examples.len(),
        win_rates,
        utility: util,
        warnings,
    })
}

/// `(metric, [(method, example_id, value)])` in metric order.
pub fn distribution_rows(details: &[DetailRow]) -> Vec<(String, Vec<(String, String, f64)>)> {
    Metric::ALL
        .iter()
        .map(|m| {
            let rows = details
                .iter()
                .filter(|r| r.metric == m.name())
                .map(|r| (r.method.clone(), r.example_id.clone(), r.value))
                .collect();
            (m.name().to_owned(), rows)
        })
        .collect()
}

fn csv_err(e: csv::Error) -> EvalError {
    EvalError::Report(e.to_string())
}

fn write_csv<S: Serialize>(path: &Path, header: &[&str], rows: &[S]) -> Result<(), EvalError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<D>, EvalError> {
    if !path.exists() {
        return Err(EvalError::Report(format!("missing report file {}", path.display())));
    }
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|x| x.map_err(csv_err)).collect()
}

pub fn read_details(path: &Path) -> Result<Vec<DetailRow>, EvalError> {
    read_csv(path)
}

pub fn read_utility(path: &Path) -> Result<Vec<UtilityRow>, EvalError> {
    read_csv(path)
}

/// Writes the distribution tables under `dir/distributions`.
pub fn write_distributions(dir: &Path, details: &[DetailRow]) -> Result<(), EvalError> {
    let ddir = dir.join(DISTRIBUTION_DIR);
    fs::create_dir_all(&ddir)?;
    for (metric, rows) in distribution_rows(details) {
        write_csv(&ddir.join(format!("{metric}.csv")), &["method", "example_id", "value"], &rows)?;
    }
    Ok(())
}

pub fn write_details(path: &Path, rows: &[DetailRow]) -> Result<(), EvalError> {
    write_csv(path, &DETAILS_HEADER.split(',').collect::<Vec<_>>(), rows)
}

pub fn write_utility(path: &Path, rows: &[UtilityRow]) -> Result<(), EvalError> {
    write_csv(path, &UTILITY_HEADER.split(',').collect::<Vec<_>>(), rows)
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<(), EvalError> {
    fs::write(path, serde_json::to_string_pretty(summary)? + "\n")?;
    Ok(())
}

pub fn write_efficiency(path: &Path, results: &[EfficiencyResult]) -> Result<(), EvalError> {
    fs::write(path, serde_json::to_string_pretty(results)? + "\n")?;
    Ok(())
}

pub fn read_efficiency(path: &Path) -> Result<Vec<EfficiencyResult>, EvalError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Writes every report file into `dir`, creating it if needed.
pub fn emit_report(
    dir: &Path,
    details: &[DetailRow],
    utility: &[UtilityRow],
    summary: &Summary,
    efficiency: Option<&[EfficiencyResult]>,
) -> Result<(), EvalError> {
    fs::create_dir_all(dir)?;
    write_details(&dir.join(DETAILS_FILE), details)?;
    write_utility(&dir.join(UTILITY_FILE), utility)?;
    write_summary(&dir.join(SUMMARY_FILE), summary)?;
    write_distributions(dir, details)?;
    if let Some(eff) = efficiency {
        write_efficiency(&dir.join(EFFICIENCY_FILE), eff)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, ex: &str, metric: Metric, v: f64) -> DetailRow {
        DetailRow {
            run_id: "r".into(),
            scenario: "rag".into(),
            method: method.into(),
            example_id: ex.into(),
            metric: metric.name().into(),
            value: v,
        }
    }

    #[test]
    fn csv_round_trip_and_summary_purity() {
        let dir = tempfile::tempdir().unwrap();
        let mut rows = Vec::new();
        for (m, base) in [("a", 0.1), ("b, quoted", 0.7)] {
            for e in ["e1", "e2", "e3"] {
                for metric in Metric::ALL {
                    rows.push(row(m, e, metric, base + e.len() as f64 / 3.0));
                }
            }
        }
        assert_eq!(rows.len(), 48);
        let s = summarize("r", "rag", 5, &rows, &[]).unwrap();
        emit_report(dir.path(), &rows, &[], &s, None).unwrap();
        let back = read_details(&dir.path().join(DETAILS_FILE)).unwrap();
        assert_eq!(back, rows);
        assert_eq!(summarize("r", "rag", 5, &back, &[]).unwrap(), s);
        let text = fs::read_to_string(dir.path().join(DETAILS_FILE)).unwrap();
        assert_eq!(text.lines().count(), 49);
        assert!(text.starts_with(DETAILS_HEADER));
        let mean: f64 = s.win_rates.iter().map(|w| w.overall.unwrap()).sum::<f64>() / 2.0;
        assert!((mean - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_method_warns() {
        let s = summarize("r", "rag", 0, &[row("a", "e", Metric::LcsWord, 1.0)], &[]).unwrap();
        assert!(s.win_rates.is_empty());
        assert_eq!(s.warnings.len(), 1);
    }
}
