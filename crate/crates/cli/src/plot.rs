//! Turns a per-sample table into mean ± 2 std bands ready for plotting.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use crate::output::{ensure_dir, Cell, LoadedTable, Table};

/// Which variance column the bands are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BandVariance {
    Latent,
    Total,
}

impl BandVariance {
    fn column(self) -> &'static str {
        match self {
            BandVariance::Latent => "latent_variance",
            BandVariance::Total => "latent_plus_noise_variance",
        }
    }
}

#[derive(Deserialize)]
struct ReportTables {
    tables: std::collections::BTreeMap<String, PathBuf>,
}

/// Resolves `table` through the `report.json` in `run_dir`.
pub fn table_path(run_dir: &Path, table: &str) -> anyhow::Result<PathBuf> {
    let report = run_dir.join("report.json");
    let text = std::fs::read_to_string(&report)
        .with_context(|| format!("reading {}", report.display()))?;
    let parsed: ReportTables =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", report.display()))?;
    match parsed.tables.get(table) {
        Some(rel) => Ok(run_dir.join(rel)),
        None => bail!(
            "report has no table `{table}` (available: {})",
            parsed.tables.keys().cloned().collect::<Vec<_>>().join(", ")
        ),
    }
}

/// Channel suffixes present in `t`: `[""]` for single-output tables, `["0", "1", ...]` otherwise.
fn channel_suffixes(t: &LoadedTable) -> anyhow::Result<Vec<String>> {
    if t.column_index("mean").is_ok() {
        return Ok(vec![String::new()]);
    }
    let suffixes: Vec<String> = (0..)
        .map(|c: usize| c.to_string())
        .take_while(|s| t.column_index(&format!("mean{s}")).is_ok())
        .collect();
    if suffixes.is_empty() {
        bail!("table has no `mean` column");
    }
    Ok(suffixes)
}

pub fn bands(samples: &LoadedTable, variance: BandVariance) -> anyhow::Result<Table> {
    let suffixes = channel_suffixes(samples)?;
    let time = samples.numeric("time")?;
    let var = samples.numeric(variance.column())?;
    let mut header = vec!["time".to_string()];
    let mut columns = Vec::new();
    for s in &suffixes {
        header.extend(["truth", "mean", "lower", "upper"].map(|h| format!("{h}{s}")));
        columns.push((samples.numeric(&format!("truth{s}"))?, samples.numeric(&format!("mean{s}"))?));
    }
    let mut out = Table::new(header);
    for k in 0..time.len() {
        let half = 2.0 * var[k].max(0.0).sqrt();
        let mut row = vec![Cell::Num(time[k])];
        for (truth, mean) in &columns {
            row.extend([truth[k], mean[k], mean[k] - half, mean[k] + half].map(Cell::Num));
        }
        out.push(row);
    }
    Ok(out)
}

/// Reads `table` of the run in `run_dir` and writes `bands.csv` into `out`.
pub fn run_to_dir(
    run_dir: &Path,
    table: &str,
    variance: BandVariance,
    out: &Path,
) -> anyhow::Result<PathBuf> {
    let samples = LoadedTable::read(&table_path(run_dir, table)?)?;
    let t = bands(&samples, variance)?;
    ensure_dir(out)?;
    let path = out.join("bands.csv");
    t.write(&path)?;
    Ok(path)
}
