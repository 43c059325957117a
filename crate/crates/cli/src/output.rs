//! CSV tables, the JSON run summary and the binary value-table dump.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use percolation_core::experiments::{
    ConcatRow, ConcentrationRow, ConvergenceReport, CounterexampleRow, RunRecord, WitnessRow,
};
use percolation_core::{SquareKind, ValueTable};
use serde_json::{json, Value};

use crate::config::ConfigFile;
use crate::CliError;

pub const RUNS_HEADER: [&str; 5] = ["seed", "n", "value", "min_cone_value", "wall_ms"];
pub const CONVERGENCE_HEADER: [&str; 5] = ["n", "mean", "std", "ci95", "diff_to_half"];
pub const CONCENTRATION_HEADER: [&str; 4] = ["n", "lambda", "empirical", "bound"];
pub const COUNTEREXAMPLE_HEADER: [&str; 11] = [
    "seed", "scale", "kind", "center_x", "center_y", "center_h", "dist", "horizon", "value", "bound", "holds",
];
pub const CONCAT_HEADER: [&str; 7] = ["seed", "m", "n", "lhs", "rhs", "min_cone_value", "holds"];
pub const WITNESS_HEADER: [&str; 9] = [
    "scale", "radius_b", "radius_c", "samples", "b_freq", "c_freq", "joint_freq", "product", "correlation",
];
pub const ENV_HEADER: [&str; 4] = ["x", "y", "h", "payoff"];

/// Magic bytes of the value-table dump.
pub const DUMP_MAGIC: &[u8; 4] = b"PGVT";
pub const DUMP_VERSION: u32 = 1;

pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes a CSV file with a fixed header.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<PathBuf, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(path.to_path_buf())
}

pub fn runs_rows(records: &[RunRecord], timing: bool) -> impl Iterator<Item = Vec<String>> + '_ {
    records.iter().map(move |r| {
        vec![
            r.seed_index.to_string(),
            r.n.to_string(),
            opt(r.value),
            opt(r.min_cone_value),
            num(if timing { r.wall_ms } else { 0.0 }),
        ]
    })
}

pub fn convergence_rows(report: &ConvergenceReport) -> impl Iterator<Item = Vec<String>> + '_ {
    report.rows.iter().map(|r| {
        vec![
            r.n.to_string(),
            opt(r.summary.map(|s| s.mean)),
            opt(r.summary.map(|s| s.std)),
            opt(r.summary.map(|s| s.ci95)),
            opt(r.diff_to_half),
        ]
    })
}

pub fn concentration_rows(rows: &[ConcentrationRow]) -> impl Iterator<Item = Vec<String>> + '_ {
    rows.iter()
        .map(|r| vec![r.n.to_string(), num(r.lambda), num(r.empirical), num(r.bound)])
}

pub fn kind_label(kind: SquareKind) -> &'static str {
    match kind {
        SquareKind::One => "one",
        SquareKind::Zero => "zero",
    }
}

pub fn counterexample_rows(rows: &[CounterexampleRow]) -> impl Iterator<Item = Vec<String>> + '_ {
    rows.iter().map(|r| {
        let c = |ax: usize| r.center.map(|c| c[ax].to_string()).unwrap_or_default();
        vec![
            r.seed_index.to_string(),
            r.scale.to_string(),
            kind_label(r.kind).to_string(),
            c(0),
            c(1),
            c(2),
            r.dist.map(|d| d.to_string()).unwrap_or_default(),
            r.horizon.to_string(),
            opt(r.value),
            num(r.bound),
            r.holds.map(|h| h.to_string()).unwrap_or_default(),
        ]
    })
}

pub fn concat_rows(rows: &[ConcatRow]) -> impl Iterator<Item = Vec<String>> + '_ {
    rows.iter().map(|r| {
        let mut v = vec![r.seed_index.to_string(), r.m.to_string(), r.n.to_string()];
        match &r.outcome {
            Ok(o) => v.extend([num(o.lhs), num(o.rhs), num(o.min_cone_value), o.holds.to_string()]),
            Err(_) => v.extend([String::new(), String::new(), String::new(), "error".to_string()]),
        }
        v
    })
}

pub fn witness_rows(rows: &[WitnessRow]) -> impl Iterator<Item = Vec<String>> + '_ {
    rows.iter().map(|r| {
        vec![
            r.scale.to_string(),
            r.radius_b.to_string(),
            r.radius_c.to_string(),
            r.samples.to_string(),
            num(r.b_freq),
            num(r.c_freq),
            num(r.joint_freq),
            num(r.product),
            opt(r.correlation),
        ]
    })
}

/// Binary dump: magic, version, dimension, horizon, origin, then for each
/// stage `1..=n+1` the state count followed by `(coords, value)` records in
/// lexicographic state order. All little-endian.
pub fn write_dump(path: &Path, table: &ValueTable<f64>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| io_err(path, e));
    let origin = table.origin();
    put(DUMP_MAGIC)?;
    put(&DUMP_VERSION.to_le_bytes())?;
    put(&(origin.dim() as u32).to_le_bytes())?;
    put(&(table.horizon() as u64).to_le_bytes())?;
    for c in origin.iter() {
        put(&c.to_le_bytes())?;
    }
    for m in 1..=table.horizon() + 1 {
        put(&(table.stage(m).len() as u64).to_le_bytes())?;
        for (z, v) in table.stage_values(m) {
            for c in z.iter() {
                put(&c.to_le_bytes())?;
            }
            put(&v.to_le_bytes())?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// JSON summary. Everything except `metadata` is a function of the inputs.
pub struct Summary<'a> {
    pub command: &'a str,
    pub config: Option<&'a ConfigFile>,
    pub hash_extra: String,
    pub results: Value,
    pub outputs: Vec<PathBuf>,
    pub started: Instant,
}

impl Summary<'_> {
    pub fn write(&self, path: &Path) -> Result<PathBuf, CliError> {
        let unix_time = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let body = json!({
            "command": self.command,
            "content_hash": self.config.map(|c| c.content_hash(&self.hash_extra)),
            "config": self.config.map(|c| serde_json::to_value(c).expect("config serializes")),
            "results": self.results,
            "outputs": self.outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "metadata": {
                "unix_time": unix_time,
                "wall_ms": self.started.elapsed().as_secs_f64() * 1e3,
                "threads": rayon::current_num_threads(),
                "version": env!("CARGO_PKG_VERSION"),
            },
        });
        let text = serde_json::to_string_pretty(&body).expect("summary serializes");
        std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))?;
        Ok(path.to_path_buf())
    }
}
