//! The nine-sensor pressure array.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One pressure sensor of the array: the nose sensor plus four per side.
///
/// Ordinal indices 0..=8 map to the labels `P0, PL1..PL4, PR1..PR4`; that
/// index order is also the tie-break order wherever sensors are ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SensorId(u8);

pub const SENSOR_COUNT: usize = 9;

const LABELS: [&str; SENSOR_COUNT] = [
    "P0", "PL1", "PL2", "PL3", "PL4", "PR1", "PR2", "PR3", "PR4",
];

impl SensorId {
    /// All nine sensors in index order.
    pub const fn all() -> [SensorId; SENSOR_COUNT] {
        [
            SensorId(0),
            SensorId(1),
            SensorId(2),
            SensorId(3),
            SensorId(4),
            SensorId(5),
            SensorId(6),
            SensorId(7),
            SensorId(8),
        ]
    }

    pub fn from_index(index: usize) -> Result<SensorId> {
        if index < SENSOR_COUNT {
            Ok(SensorId(index as u8))
        } else {
            Err(Error::arg(format!("sensor index {index} out of range 0..9")))
        }
    }

    pub fn from_label(label: &str) -> Result<SensorId> {
        LABELS
            .iter()
            .position(|&l| l == label)
            .map(|i| SensorId(i as u8))
            .ok_or_else(|| Error::arg(format!("unknown sensor label {label:?}")))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn label(self) -> &'static str {
        LABELS[self.index()]
    }
}

impl std::fmt::Display for SensorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl TryFrom<String> for SensorId {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        SensorId::from_label(&value)
    }
}

impl From<SensorId> for String {
    fn from(id: SensorId) -> String {
        id.label().to_owned()
    }
}
