//! Run-directory layout, CSV/JSON writers and the versioned schema file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Serialize};

use crate::error::{CliError, CliResult};

/// Bumped whenever a column is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;
/// Bumped whenever a checkpoint layout changes.
pub const CHECKPOINT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn ensure_dir(p: &Path) -> CliResult<()> {
    fs::create_dir_all(p).map_err(|e| CliError::io(p.display(), e))
}

pub fn write_text(p: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = p.parent() {
        ensure_dir(parent)?;
    }
    fs::write(p, text).map_err(|e| CliError::io(p.display(), e))
}

pub fn read_text(p: &Path) -> CliResult<String> {
    fs::read_to_string(p).map_err(|e| CliError::io(p.display(), e))
}

pub fn write_json<T: Serialize>(p: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(p.display(), e))?;
    write_text(p, &(text + "\n"))
}

pub fn read_json<T: DeserializeOwned>(p: &Path) -> CliResult<T> {
    serde_json::from_str(&read_text(p)?).map_err(|e| CliError::io(p.display(), e))
}

pub fn write_csv<T: Serialize>(p: &Path, rows: &[T]) -> CliResult<()> {
    if let Some(parent) = p.parent() {
        ensure_dir(parent)?;
    }
    let mut w = csv::Writer::from_path(p).map_err(|e| CliError::io(p.display(), e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::io(p.display(), e))?;
    }
    w.flush().map_err(|e| CliError::io(p.display(), e))
}

pub fn read_csv<T: DeserializeOwned>(p: &Path) -> CliResult<Vec<T>> {
    let mut r = csv::Reader::from_path(p).map_err(|e| CliError::io(p.display(), e))?;
    r.deserialize().map(|row| row.map_err(|e| CliError::io(p.display(), e))).collect()
}

pub fn write_jsonl<T: Serialize>(p: &Path, rows: &[T]) -> CliResult<()> {
    let mut text = String::new();
    for r in rows {
        text.push_str(&serde_json::to_string(r).map_err(|e| CliError::io(p.display(), e))?);
        text.push('\n');
    }
    write_text(p, &text)
}

#[derive(Serialize)]
struct RunInfo<'a> {
    tool: &'a str,
    version: &'a str,
    schema_version: u32,
    command: &'a str,
    seed: u64,
}

/// Writes `config.toml`, `run.json` and `schema.json` into `dir`.
pub fn write_run_header(dir: &Path, command: &str, seed: u64, resolved_toml: &str) -> CliResult<()> {
    ensure_dir(dir)?;
    write_text(&dir.join("config.toml"), resolved_toml)?;
    write_json(
        &dir.join("run.json"),
        &RunInfo { tool: "setgreedy", version: TOOL_VERSION, schema_version: SCHEMA_VERSION, command, seed },
    )?;
    write_json(&dir.join("schema.json"), &schema())
}

#[derive(Serialize)]
pub struct Column {
    pub name: &'static str,
    pub description: &'static str,
}

#[derive(Serialize)]
pub struct FileSchema {
    pub file: &'static str,
    pub columns: Vec<Column>,
}

#[derive(Serialize)]
pub struct Schema {
    pub version: u32,
    pub files: Vec<FileSchema>,
}

fn file(file: &'static str, cols: &[(&'static str, &'static str)]) -> FileSchema {
    FileSchema { file, columns: cols.iter().map(|&(name, description)| Column { name, description }).collect() }
}

/// Column layout of every CSV the tool writes.
pub fn schema() -> Schema {
    let train_cols: &[(&str, &str)] = &[
        ("update", "policy update index, 1-based"),
        ("conditioning_size", "size k of the conditioning subset sampled for this update"),
        ("mean_return", "mean marginal-gain return of the update's episodes"),
        ("eval_value", "acquisition value of the evaluated greedy-sampling subset, empty between evaluations"),
        ("best_value", "best evaluated acquisition value so far"),
        ("queries", "cumulative surrogate queries"),
        ("wall_time_s", "seconds since training started; the only non-reproducible column"),
    ];
    Schema {
        version: SCHEMA_VERSION,
        files: vec![
            file(
                "subset_trials.csv",
                &[
                    ("strategy", "selection method"),
                    ("n", "batch cardinality"),
                    ("trial", "trial index"),
                    ("seed", "seed of this trial's stream"),
                    ("hypervolume", "acquisition value (HVI) of the selected batch"),
                    ("queries", "surrogate queries spent"),
                    ("batch", "selected candidates joined by '|'"),
                ],
            ),
            file(
                "subset_summary.csv",
                &[
                    ("strategy", "selection method"),
                    ("n", "batch cardinality"),
                    ("trials", "number of trials"),
                    ("mean", "mean hypervolume over trials"),
                    ("std", "population standard deviation over trials"),
                    ("median", "median hypervolume"),
                    ("min", "smallest hypervolume"),
                    ("max", "largest hypervolume"),
                    ("exact_greedy", "exact-greedy hypervolume, empty when the space is not enumerable"),
                    ("median_ratio", "median / exact_greedy, empty when exact_greedy is empty or zero"),
                ],
            ),
            file(
                "traces/<strategy>_n<n>_t<trial>.csv",
                &[
                    ("step", "greedy step, 1-based"),
                    ("candidate", "chosen candidate, empty when the step stalled"),
                    ("gain", "marginal gain achieved"),
                    ("best_gain", "exact best marginal gain when enumerable, else empty"),
                    ("ties", "candidates tied for the best gain when enumerable"),
                    ("size", "subset size after the step"),
                    ("queries", "surrogate queries spent in the step"),
                ],
            ),
            file("train/<strategy>_n<n>_t<trial>.csv", train_cols),
            file("trials/<strategy>/t<trial>/train_r<round>.csv", train_cols),
            file(
                "trials/<strategy>/t<trial>/metrics.csv",
                &[
                    ("strategy", "selection method"),
                    ("trial", "trial index"),
                    ("round", "round index; 0 describes the initial dataset"),
                    ("queries", "oracle queries after initialization"),
                    ("total_queries", "oracle queries including the initial dataset"),
                    ("hypervolume", "hypervolume of the evaluated dataset"),
                    ("relative_hypervolume", "hypervolume / round-0 hypervolume (absolute when relative_is_absolute)"),
                    ("relative_is_absolute", "true when the round-0 hypervolume was zero"),
                    ("proposed", "candidates proposed this round"),
                    ("duplicates", "proposed candidates skipped as already evaluated"),
                ],
            ),
            file(
                "al_curves.csv",
                &[
                    ("strategy", "selection method"),
                    ("queries", "oracle queries after initialization"),
                    ("total_queries", "oracle queries including the initial dataset"),
                    ("trials", "trials contributing"),
                    ("hv_p30", "30th percentile of hypervolume across trials"),
                    ("hv_p50", "median hypervolume across trials"),
                    ("hv_p70", "70th percentile of hypervolume across trials"),
                ],
            ),
            file(
                "queries_to_target.csv",
                &[
                    ("strategy", "selection method"),
                    ("fraction", "target as a fraction of the best median final hypervolume"),
                    ("target", "absolute hypervolume target"),
                    ("trials_reached", "trials reaching the target"),
                    ("median_queries", "median post-initialization queries to reach it, empty if most trials never do"),
                    ("reference_strategy", "first configured strategy"),
                    ("ratio", "reference median_queries / this median_queries"),
                ],
            ),
            file(
                "verify.csv",
                &[
                    ("bound", "approx-greedy or non-oblivious"),
                    ("index", "instance index"),
                    ("seed", "instance seed, replayable"),
                    ("instance", "instance description"),
                    ("n", "batch cardinality"),
                    ("alpha", "approximation ratio used"),
                    ("gamma", "submodularity ratio used"),
                    ("achieved", "value of the greedy subset"),
                    ("optimal", "optimal value by enumeration"),
                    ("factor", "guaranteed approximation factor"),
                    ("slack", "achieved - factor * optimal"),
                    ("violated", "true when the guarantee failed"),
                ],
            ),
            file(
                "factors.csv",
                &[
                    ("bound", "approx-greedy or non-oblivious"),
                    ("alpha", "approximation ratio"),
                    ("gamma", "submodularity ratio"),
                    ("factor", "guaranteed approximation factor"),
                ],
            ),
        ],
    }
}

/// Directory of one active-learning trial.
pub fn trial_dir(root: &Path, strategy: &str, trial: usize) -> PathBuf {
    root.join("trials").join(strategy).join(format!("t{trial}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        #[derive(Serialize, serde::Deserialize, PartialEq, Debug)]
        struct Row {
            a: u32,
            b: Option<f64>,
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x/y.csv");
        let rows = vec![Row { a: 1, b: Some(0.1) }, Row { a: 2, b: None }];
        write_csv(&p, &rows).unwrap();
        assert_eq!(read_csv::<Row>(&p).unwrap(), rows);
        assert_eq!(read_text(&p).unwrap(), "a,b\n1,0.1\n2,\n");
    }

    #[test]
    fn schema_lists_every_file_once() {
        let s = schema();
        let mut names: Vec<_> = s.files.iter().map(|f| f.file).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), s.files.len());
        assert!(s.files.iter().all(|f| !f.columns.is_empty()));
    }
}
