//! Comparison tables and long-format plot data from result files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::runner::{mean_std, RunResult};
use crate::error::{Error, Result};
use crate::io_util::write_atomic;
use crate::metrics::SUBSETS;

pub const TABLE_HEADER: &str = "method,runs,overall,majority,minority,boundary";
pub const PLOT_HEADER: &str = "system,method,subset,seed,rmse";

/// Result files in `dir` and in its `results/` subdirectory, sorted by path.
pub fn load_results(dir: &Path) -> Result<Vec<RunResult>> {
    let mut paths: Vec<PathBuf> = Vec::new();
    for d in [dir.to_path_buf(), dir.join("results")] {
        let Ok(entries) = fs::read_dir(&d) else {
            continue;
        };
        for e in entries {
            let p = e.map_err(|e| Error::io(&d, e))?.path();
            if p.extension().is_some_and(|x| x == "json")
                && p.file_name()
                    .is_some_and(|n| n != "config.json" && n != "failures.json")
            {
                paths.push(p);
            }
        }
    }
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        let r: RunResult = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: p.clone(),
            message: e.to_string(),
        })?;
        out.push(r);
    }
    if out.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no result files in {}",
            dir.display()
        )));
    }
    Ok(out)
}

/// Written file paths: one `table_<system>.csv` per system and `plot_data.csv`.
pub fn compare(results: &[RunResult], out: &Path) -> Result<Vec<PathBuf>> {
    let mut by_system: BTreeMap<_, Vec<&RunResult>> = BTreeMap::new();
    for r in results {
        by_system.entry(r.system).or_default().push(r);
    }
    let mut written = Vec::new();
    for (system, rs) in &by_system {
        let mut by_method: BTreeMap<_, Vec<&RunResult>> = BTreeMap::new();
        for r in rs {
            by_method.entry(r.method).or_default().push(*r);
        }
        let mut text = format!("{TABLE_HEADER}\n");
        for (method, group) in by_method {
            let _ = write!(text, "{},{}", method.tag(), group.len());
            for subset in SUBSETS {
                let vals: Vec<f64> = group
                    .iter()
                    .filter_map(|r| r.report.subset(subset))
                    .collect();
                let _ = write!(
                    text,
                    ",{}",
                    mean_std(&vals)
                        .0
                        .map(|m| format!("{m:.6e}"))
                        .unwrap_or_default()
                );
            }
            text.push('\n');
        }
        let path = out.join(format!("table_{}.csv", system.name()));
        write_atomic(&path, text.as_bytes())?;
        written.push(path);
    }
    let mut plot = format!("{PLOT_HEADER}\n");
    for r in results {
        for subset in SUBSETS {
            let v = r
                .report
                .subset(subset)
                .map(|x| format!("{x:.6e}"))
                .unwrap_or_default();
            let _ = writeln!(
                plot,
                "{},{},{subset},{},{v}",
                r.system.name(),
                r.method.tag(),
                r.seed
            );
        }
    }
    let path = out.join("plot_data.csv");
    write_atomic(&path, plot.as_bytes())?;
    written.push(path);
    Ok(written)
}
