use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};
use takedown::eval::{read_efficiency, EfficiencyResult, Summary, DETAILS_FILE, EFFICIENCY_FILE, UTILITY_FILE};

use crate::config::RunConfig;
use crate::pipeline::{refresh_summary, run_id, CONFIG_FILE};

/// Utility columns of the summary table, as `(split, task_kind)`.
pub const UTILITY_COLUMNS: [(&str, &str); 4] =
    [("blocklisted", "qa"), ("blocklisted", "summary"), ("in_domain", "qa"), ("in_domain", "summary")];

pub fn column_names() -> Vec<String> {
    let mut c = vec!["method".to_owned(), "win_rate".to_owned()];
    c.extend(UTILITY_COLUMNS.iter().map(|(s, k)| format!("{s}_{k}")));
    c.push("speed".to_owned());
    c
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.3}"))
}

/// One row per method: win rate, utility means and speed ratio.
pub fn render_table(summary: &Summary, efficiency: Option<&[EfficiencyResult]>) -> String {
    let mut rows = vec![column_names()];
    for m in &summary.methods {
        let mut r = vec![m.clone()];
        r.push(fmt(summary.win_rates.iter().find(|w| &w.method == m).and_then(|w| w.overall)));
        for (split, kind) in UTILITY_COLUMNS {
            let u = summary.utility.iter().find(|u| &u.method == m && u.split == split && u.task_kind == kind);
            r.push(fmt(u.and_then(|u| u.mean)));
        }
        r.push(fmt(efficiency.and_then(|e| e.iter().find(|e| &e.method == m)).map(|e| e.ratio)));
        rows.push(r);
    }
    let widths: Vec<usize> = (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in &rows {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        writeln!(out, "{}", cells.join("  ").trim_end()).expect("write to string");
    }
    for w in &summary.warnings {
        writeln!(out, "warning: {w}").expect("write to string");
    }
    out
}

/// Re-reads a run directory, rewrites its summary and distributions, and
/// returns the printable table.
pub fn report(dir: &Path) -> Result<String> {
    let missing: Vec<&str> =
        [CONFIG_FILE, DETAILS_FILE, UTILITY_FILE].into_iter().filter(|f| !dir.join(f).exists()).collect();
    if !missing.is_empty() {
        bail!("run directory {} is missing {}", dir.display(), missing.join(", "));
    }
    let cfg = RunConfig::load(&dir.join(CONFIG_FILE))?;
    let summary = refresh_summary(dir, &run_id(&cfg)?, &cfg)?;
    let eff_path = dir.join(EFFICIENCY_FILE);
    let eff = if eff_path.exists() { Some(read_efficiency(&eff_path)?) } else { None };
    Ok(render_table(&summary, eff.as_deref()))
}
