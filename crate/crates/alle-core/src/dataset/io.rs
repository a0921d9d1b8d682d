//! CSV and sidecar-JSON formats for recordings and sample sets.
//!
//! Recording CSV: header `t,P0,PL1,PL2,PL3,PL4,PR1,PR2,PR3,PR4`, one row per
//! time step, decimal point, UTF-8, LF line endings. Each `<name>.csv` is
//! accompanied by `<name>.meta.json` carrying the recording metadata.
//!
//! Sample-set CSV: comment line `# state=<kind> unit=<unit>` followed by the
//! header `Y,X1,...,X9`.
//!
//! Numbers are written with the shortest representation that parses back to
//! the same value, so ingest followed by export reproduces a canonical file
//! byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{Provenance, Recording, Sample, SampleSet, SensorId, StateKind, SENSOR_COUNT};
use crate::error::{Error, Result};

/// Sidecar metadata stored next to each recording CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub state_kind: String,
    pub unit: String,
    pub parameter_value: f64,
    pub parameter_index: usize,
    pub recording_index: usize,
    pub sample_rate_hz: f64,
}

fn recording_header() -> String {
    let mut h = String::from("t");
    for id in SensorId::all() {
        h.push(',');
        h.push_str(id.label());
    }
    h
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

fn parse_cell(path: &Path, row: usize, cell: &str) -> Result<f64> {
    let value: f64 = cell.trim().parse().map_err(|_| Error::Parse {
        path: path.display().to_string(),
        row,
        message: format!("cell {cell:?} is not numeric"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            path: path.display().to_string(),
            row,
            message: format!("cell {cell:?} is not finite"),
        });
    }
    Ok(value)
}

/// Reads one recording (CSV plus sidecar), checking it against the expected
/// state kind.
pub fn ingest_recording(path: &Path, expected: StateKind) -> Result<Recording> {
    let text = fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Schema {
        path: display.clone(),
        message: "empty file".to_owned(),
    })?;

    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.first() != Some(&"t") {
        return Err(Error::Schema {
            path: display.clone(),
            message: format!("first column must be \"t\", found {:?}", columns.first()),
        });
    }
    // Map each sensor to its column position; every sensor must be present.
    let mut sensor_cols = [0usize; SENSOR_COUNT];
    for id in SensorId::all() {
        match columns.iter().position(|&c| c == id.label()) {
            Some(pos) => sensor_cols[id.index()] = pos,
            None => {
                return Err(Error::Schema {
                    path: display.clone(),
                    message: format!("missing channel column {}", id.label()),
                })
            }
        }
    }

    let mut channels: [Vec<f64>; SENSOR_COUNT] = Default::default();
    for (line_no, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row = line_no + 1; // 1-based data row number
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            return Err(Error::Parse {
                path: display.clone(),
                row,
                message: format!("expected {} cells, found {}", columns.len(), cells.len()),
            });
        }
        for id in SensorId::all() {
            let value = parse_cell(path, row, cells[sensor_cols[id.index()]])?;
            channels[id.index()].push(value);
        }
    }

    let meta_path = sidecar_path(path);
    let meta: RecordingMeta = serde_json::from_str(&fs::read_to_string(&meta_path)?)?;
    let found = StateKind::from_code(&meta.state_kind)?;
    if found != expected {
        return Err(Error::StateMismatch {
            expected: expected.code().to_owned(),
            found: found.code().to_owned(),
        });
    }
    let rec = Recording::new(
        found,
        meta.parameter_index,
        meta.recording_index,
        channels,
        meta.sample_rate_hz,
    )?;
    if rec.parameter_value() != meta.parameter_value {
        return Err(Error::Schema {
            path: meta_path.display().to_string(),
            message: format!(
                "parameter_value {} does not match grid value {} at index {}",
                meta.parameter_value,
                rec.parameter_value(),
                meta.parameter_index
            ),
        });
    }
    Ok(rec)
}

/// Writes a recording CSV plus its sidecar; returns the CSV path.
pub fn write_recording(dir: &Path, recording: &Recording) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let base = format!(
        "{}_p{:02}_r{}",
        recording.state.code(),
        recording.parameter_index,
        recording.recording_index
    );
    let csv_path = dir.join(format!("{base}.csv"));

    let mut out = recording_header();
    out.push('\n');
    for t in 0..recording.step_count() {
        write!(out, "{t}").expect("write to string");
        for channel in &recording.channels {
            write!(out, ",{}", channel[t]).expect("write to string");
        }
        out.push('\n');
    }
    fs::write(&csv_path, out)?;

    let meta = RecordingMeta {
        state_kind: recording.state.code().to_owned(),
        unit: recording.state.unit().label().to_owned(),
        parameter_value: recording.parameter_value(),
        parameter_index: recording.parameter_index,
        recording_index: recording.recording_index,
        sample_rate_hz: recording.sample_rate_hz,
    };
    let mut meta_text = serde_json::to_string_pretty(&meta)?;
    meta_text.push('\n');
    fs::write(sidecar_path(&csv_path), meta_text)?;
    Ok(csv_path)
}

/// Reads every `<name>.csv` with a `<name>.meta.json` sidecar in a directory.
pub fn read_recording_dir(dir: &Path, expected: StateKind) -> Result<Vec<Recording>> {
    let mut csv_paths: Vec<PathBuf> = fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| {
            p.extension().is_some_and(|ext| ext == "csv") && sidecar_path(p).exists()
        })
        .collect();
    csv_paths.sort();
    if csv_paths.is_empty() {
        return Err(Error::Schema {
            path: dir.display().to_string(),
            message: "no recording CSV files with sidecars found".to_owned(),
        });
    }
    csv_paths
        .iter()
        .map(|p| ingest_recording(p, expected))
        .collect()
}

/// Writes a sample set in the export schema.
pub fn export_sample_set(path: &Path, set: &SampleSet) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = format!(
        "# state={} unit={}\nY,X1,X2,X3,X4,X5,X6,X7,X8,X9\n",
        set.state.code(),
        set.state.unit().label()
    );
    for sample in &set.samples {
        write!(out, "{}", sample.label).expect("write to string");
        for &x in &sample.features {
            write!(out, ",{x}").expect("write to string");
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a sample set written by [`export_sample_set`].
pub fn ingest_sample_set(path: &Path) -> Result<SampleSet> {
    let text = fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut lines = text.lines();

    let comment = lines.next().ok_or_else(|| Error::Schema {
        path: display.clone(),
        message: "empty file".to_owned(),
    })?;
    let state = parse_state_comment(comment).ok_or_else(|| Error::Schema {
        path: display.clone(),
        message: format!("expected \"# state=<kind> unit=<unit>\", found {comment:?}"),
    })?;
    let state = StateKind::from_code(state)?;

    let header = lines.next().ok_or_else(|| Error::Schema {
        path: display.clone(),
        message: "missing header row".to_owned(),
    })?;
    let expected_header = "Y,X1,X2,X3,X4,X5,X6,X7,X8,X9";
    if header != expected_header {
        return Err(Error::Schema {
            path: display.clone(),
            message: format!("expected header {expected_header:?}, found {header:?}"),
        });
    }

    let mut samples = Vec::new();
    for (line_no, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row = line_no + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != SENSOR_COUNT + 1 {
            return Err(Error::Parse {
                path: display.clone(),
                row,
                message: format!("expected {} cells, found {}", SENSOR_COUNT + 1, cells.len()),
            });
        }
        let label = parse_cell(path, row, cells[0])?;
        let mut features = [0.0; SENSOR_COUNT];
        for (k, cell) in cells[1..].iter().enumerate() {
            features[k] = parse_cell(path, row, cell)?;
        }
        samples.push(Sample { features, label });
    }
    Ok(SampleSet::new(state, Provenance::Ingested, samples))
}

fn parse_state_comment(line: &str) -> Option<&str> {
    let rest = line.strip_prefix("# state=")?;
    let (state, unit) = rest.split_once(" unit=")?;
    if unit.is_empty() {
        return None;
    }
    Some(state)
}
