use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentOutput, RunSummary};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    #[default]
    Csv,
    Json,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes into `dir`:
/// - `trace_r{repeat}_i{iteration}.csv` (or `.json`) per inner LGD run,
/// - `checkpoint_r{repeat}.json` with the selected parameters,
/// - `summary.json`.
///
/// Returns the written paths in that order.
pub fn emit_results(output: &ExperimentOutput, dir: &Path, format: TraceFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (r, traces) in output.traces.iter().enumerate() {
        for (i, trace) in traces.iter().enumerate() {
            let path = match format {
                TraceFormat::Csv => {
                    let path = dir.join(format!("trace_r{r}_i{i}.csv"));
                    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                    trace
                        .write_csv(BufWriter::new(file))
                        .map_err(|e| Error::io(&path, e))?;
                    path
                }
                TraceFormat::Json => {
                    let path = dir.join(format!("trace_r{r}_i{i}.json"));
                    write_json(&path, trace)?;
                    path
                }
            };
            written.push(path);
        }
    }
    for (r, checkpoint) in output.checkpoints.iter().enumerate() {
        let path = dir.join(format!("checkpoint_r{r}.json"));
        write_json(&path, checkpoint)?;
        written.push(path);
    }
    let path = dir.join("summary.json");
    write_json(&path, &output.summary)?;
    written.push(path);
    Ok(written)
}

pub fn load_summary(path: &Path) -> Result<RunSummary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}
