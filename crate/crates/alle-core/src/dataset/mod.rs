//! Sample data model: recordings, smoothing, assembly of the original sample
//! set, and seeded train/test splits.
//!
//! A recording is one time series of the nine pressure channels captured at a
//! single (parameter value, repetition) pair. Five repetitions per parameter
//! value are smoothed and a fixed-size block of each is flattened into labeled
//! samples, forming the original sample set from which all regression analyses
//! start.

mod io;
mod sensor;
mod smooth;
mod state;

pub use io::{
    export_sample_set, ingest_recording, ingest_sample_set, read_recording_dir, write_recording,
    RecordingMeta,
};
pub use sensor::{SensorId, SENSOR_COUNT};
pub use smooth::{default_sigma, gaussian_kernel, smooth, DEFAULT_WINDOW};
pub use state::{StateKind, Unit};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, domain};

/// Number of repeated recordings per parameter value.
pub const RECORDINGS_PER_PARAMETER: usize = 5;

/// Number of samples retained from each smoothed recording under the
/// standard protocol.
pub const SAMPLES_PER_RECORDING: usize = 250;

/// One raw or smoothed time series of all nine channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub state: StateKind,
    /// 1-based position of the parameter value on the state's grid.
    pub parameter_index: usize,
    /// 1-based repetition number, 1..=5.
    pub recording_index: usize,
    /// `channels[k][t]` is sensor `k`'s pressure at time step `t`.
    pub channels: [Vec<f64>; SENSOR_COUNT],
    pub sample_rate_hz: f64,
}

impl Recording {
    pub fn new(
        state: StateKind,
        parameter_index: usize,
        recording_index: usize,
        channels: [Vec<f64>; SENSOR_COUNT],
        sample_rate_hz: f64,
    ) -> Result<Recording> {
        if parameter_index == 0 || parameter_index > state.parameter_count() {
            return Err(Error::arg(format!(
                "parameter index {parameter_index} outside 1..={} for state {state}",
                state.parameter_count()
            )));
        }
        if recording_index == 0 || recording_index > RECORDINGS_PER_PARAMETER {
            return Err(Error::arg(format!(
                "recording index {recording_index} outside 1..={RECORDINGS_PER_PARAMETER}"
            )));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::arg("channels have unequal lengths".to_owned()));
        }
        if sample_rate_hz.is_nan() || sample_rate_hz <= 0.0 {
            return Err(Error::arg(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        Ok(Recording {
            state,
            parameter_index,
            recording_index,
            channels,
            sample_rate_hz,
        })
    }

    pub fn step_count(&self) -> usize {
        self.channels[0].len()
    }

    /// The grid value this recording is labeled with.
    pub fn parameter_value(&self) -> f64 {
        self.state.grid()[self.parameter_index - 1]
    }
}

/// One labeled sample: nine pressure features and a state value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: [f64; SENSOR_COUNT],
    pub label: f64,
}

/// Where a sample set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Ingested,
    Synthetic,
    DerivedSplit,
}

/// An ordered collection of labeled samples for one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub state: StateKind,
    pub provenance: Provenance,
    pub samples: Vec<Sample>,
}

impl SampleSet {
    pub fn new(state: StateKind, provenance: Provenance, samples: Vec<Sample>) -> SampleSet {
        SampleSet {
            state,
            provenance,
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Sample indices grouped by grid position. Errors if a label is off-grid.
    pub fn parameter_groups(&self) -> Result<Vec<Vec<usize>>> {
        let mut groups = vec![Vec::new(); self.state.parameter_count()];
        for (j, sample) in self.samples.iter().enumerate() {
            let i = self.state.grid_index(sample.label)?;
            groups[i].push(j);
        }
        Ok(groups)
    }

    /// Feature matrix restricted to the given sensors, row per sample.
    pub fn feature_rows(&self, sensors: &[SensorId]) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|s| sensors.iter().map(|id| s.features[id.index()]).collect())
            .collect()
    }
}

/// Assembles the original sample set from a complete batch of recordings.
///
/// For each of the `p` parameter values all five repetitions must be present.
/// From each recording the centered contiguous block of `per_recording` steps
/// is retained, skipping start-up transients symmetrically, and every retained
/// step becomes one sample labeled with the recording's parameter value.
pub fn assemble(recordings: &[Recording], per_recording: usize) -> Result<SampleSet> {
    if recordings.is_empty() {
        return Err(Error::arg("no recordings given".to_owned()));
    }
    if per_recording == 0 {
        return Err(Error::arg("per_recording must be positive".to_owned()));
    }
    let state = recordings[0].state;
    if let Some(r) = recordings.iter().find(|r| r.state != state) {
        return Err(Error::StateMismatch {
            expected: state.code().to_owned(),
            found: r.state.code().to_owned(),
        });
    }

    let p = state.parameter_count();
    let mut slots: Vec<Vec<Option<&Recording>>> = vec![vec![None; RECORDINGS_PER_PARAMETER]; p];
    for rec in recordings {
        let slot = &mut slots[rec.parameter_index - 1][rec.recording_index - 1];
        if slot.is_some() {
            return Err(Error::Completeness(format!(
                "duplicate recording for parameter {} repetition {}",
                rec.parameter_index, rec.recording_index
            )));
        }
        *slot = Some(rec);
    }

    let mut gaps = Vec::new();
    for (i, row) in slots.iter().enumerate() {
        for (r, slot) in row.iter().enumerate() {
            match slot {
                None => gaps.push(format!("(parameter {}, recording {})", i + 1, r + 1)),
                Some(rec) if rec.step_count() < per_recording => gaps.push(format!(
                    "(parameter {}, recording {}): {} steps < {per_recording}",
                    i + 1,
                    r + 1,
                    rec.step_count()
                )),
                _ => {}
            }
        }
    }
    if !gaps.is_empty() {
        return Err(Error::Completeness(gaps.join(", ")));
    }

    let mut samples = Vec::with_capacity(p * RECORDINGS_PER_PARAMETER * per_recording);
    for row in &slots {
        for slot in row {
            let rec = slot.expect("completeness checked above");
            let start = (rec.step_count() - per_recording) / 2;
            let label = rec.parameter_value();
            for t in start..start + per_recording {
                let mut features = [0.0; SENSOR_COUNT];
                for (k, channel) in rec.channels.iter().enumerate() {
                    features[k] = channel[t];
                }
                samples.push(Sample { features, label });
            }
        }
    }
    Ok(SampleSet::new(state, Provenance::Ingested, samples))
}

/// Splits a sample set into disjoint train/test subsets, stratified by
/// parameter value and reproducible from the seed.
///
/// Each stratum contributes `round(fraction * stratum_size)` training samples;
/// a fraction that would empty either side of any stratum is an error.
pub fn split(set: &SampleSet, train_fraction: f64, seed: u64) -> Result<(SampleSet, SampleSet)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::arg(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let groups = set.parameter_groups()?;
    let mut rng = rng::stream(seed, &[domain::SPLIT]);

    let mut train_mask = vec![false; set.len()];
    for (i, group) in groups.iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        let take = (train_fraction * group.len() as f64).round() as usize;
        if take == 0 || take == group.len() {
            return Err(Error::Stratification(format!(
                "fraction {train_fraction} leaves parameter {} with an empty {} side ({} samples)",
                i + 1,
                if take == 0 { "train" } else { "test" },
                group.len()
            )));
        }
        let mut shuffled = group.clone();
        rng::shuffle(&mut rng, &mut shuffled);
        for &j in shuffled.iter().take(take) {
            train_mask[j] = true;
        }
    }

    let pick = |keep: bool| -> Vec<Sample> {
        set.samples
            .iter()
            .zip(&train_mask)
            .filter(|(_, &m)| m == keep)
            .map(|(s, _)| *s)
            .collect()
    };
    let train = SampleSet::new(set.state, Provenance::DerivedSplit, pick(true));
    let test = SampleSet::new(set.state, Provenance::DerivedSplit, pick(false));
    Ok((train, test))
}
