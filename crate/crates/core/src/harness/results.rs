use std::fmt::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::experiment::{ExperimentResult, RESULT_FORMAT};
use super::grid::MANIFEST_FILE;
use crate::data::write_atomic;
use crate::error::{Error, Result};

pub const FLAT_TABLE_FILE: &str = "results.csv";
pub const FLAT_HEADER: &str =
    "dataset,family,replicate,seed,cv_accuracy,test_accuracy,duration_s,complexity";

/// Serialises writers that rebuild the flat table from the directory.
static WRITE_LOCK: Mutex<()> = Mutex::new(());

/// Canonical text: sorted keys, two-space indent, shortest round-trip floats.
pub(crate) fn to_text(result: &ExperimentResult) -> String {
    let value = serde_json::to_value(result).expect("results serialise");
    let mut s = serde_json::to_string_pretty(&value).expect("values serialise");
    s.push('\n');
    s
}

pub fn load_result(path: &Path) -> Result<ExperimentResult> {
    let bad = |message: String| Error::ResultFile {
        path: path.to_path_buf(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let r: ExperimentResult = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if r.format != RESULT_FORMAT {
        return Err(bad(format!(
            "format '{}', expected '{RESULT_FORMAT}'",
            r.format
        )));
    }
    if r.replicates.len() != r.config.replicates {
        return Err(bad(format!(
            "{} replicate records for {} configured replicates",
            r.replicates.len(),
            r.config.replicates
        )));
    }
    Ok(r)
}

/// Result files in `dir`, sorted by name.
pub(crate) fn result_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_json = path.extension().is_some_and(|e| e == "json");
        let is_manifest = path.file_name().is_some_and(|n| n == MANIFEST_FILE);
        if is_json && !is_manifest && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn flat_rows(r: &ExperimentResult, out: &mut String) {
    for rep in &r.replicates {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            csv_field(&r.config.dataset),
            r.family,
            rep.replicate,
            rep.seed,
            rep.cv_accuracy,
            rep.test_accuracy,
            rep.duration_s,
            rep.complexity
        )
        .unwrap();
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Rebuilds the per-replicate table from every result file in `dir`.
pub fn write_flat_table(dir: &Path) -> Result<PathBuf> {
    let mut text = String::from(FLAT_HEADER);
    text.push('\n');
    for path in result_files(dir)? {
        flat_rows(&load_result(&path)?, &mut text);
    }
    let path = dir.join(FLAT_TABLE_FILE);
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

/// Writes `<out_dir>/<id>.json` and refreshes the flat table. Returns both paths.
pub fn write_results(result: &ExperimentResult, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let _guard = WRITE_LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let path = out_dir.join(format!("{}.json", result.id));
    write_atomic(&path, to_text(result).as_bytes())?;
    let table = write_flat_table(out_dir)?;
    Ok((path, table))
}
