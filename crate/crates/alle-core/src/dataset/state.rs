//! The seven relative states and their experimental parameter grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Measurement unit of a relative state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "mm")]
    Millimeter,
    #[serde(rename = "degree")]
    Degree,
    #[serde(rename = "Hz")]
    Hertz,
}

impl Unit {
    pub fn label(self) -> &'static str {
        match self {
            Unit::Millimeter => "mm",
            Unit::Degree => "degree",
            Unit::Hertz => "Hz",
        }
    }
}

impl std::fmt::Display for Unit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One of the seven relative states between the upstream and downstream body.
///
/// Each state carries a fixed grid of experimental parameter values; samples
/// are always labeled with a member of that grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StateKind {
    /// Vertical distance `d` (mm).
    VerticalDistance,
    /// Oscillating amplitude `A` (degree).
    Amplitude,
    /// Oscillating frequency `f` (Hz).
    Frequency,
    /// Oscillating offset `phi` (degree).
    Offset,
    /// Relative yaw angle `alpha` (degree).
    Yaw,
    /// Relative pitch angle `beta` (degree).
    Pitch,
    /// Relative roll angle `gamma` (degree).
    Roll,
}

const D_GRID: [f64; 7] = [-45.0, -30.0, -15.0, 0.0, 15.0, 30.0, 45.0];
const A_GRID: [f64; 16] = [
    0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0, 22.0, 24.0, 26.0, 28.0, 30.0,
];
const F_GRID: [f64; 6] = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
const PHI_GRID: [f64; 13] = [
    -30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0,
];
const ALPHA_GRID: [f64; 19] = [
    -90.0, -80.0, -70.0, -60.0, -50.0, -40.0, -30.0, -20.0, -10.0, 0.0, 10.0, 20.0, 30.0, 40.0,
    50.0, 60.0, 70.0, 80.0, 90.0,
];
const BETA_GRID: [f64; 9] = [-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0];
const GAMMA_GRID: [f64; 11] = [
    -50.0, -40.0, -30.0, -20.0, -10.0, 0.0, 10.0, 20.0, 30.0, 40.0, 50.0,
];

impl StateKind {
    pub const ALL: [StateKind; 7] = [
        StateKind::VerticalDistance,
        StateKind::Amplitude,
        StateKind::Frequency,
        StateKind::Offset,
        StateKind::Yaw,
        StateKind::Pitch,
        StateKind::Roll,
    ];

    /// Short code used in file formats and reports.
    pub fn code(self) -> &'static str {
        match self {
            StateKind::VerticalDistance => "d",
            StateKind::Amplitude => "A",
            StateKind::Frequency => "f",
            StateKind::Offset => "phi",
            StateKind::Yaw => "alpha",
            StateKind::Pitch => "beta",
            StateKind::Roll => "gamma",
        }
    }

    pub fn from_code(code: &str) -> Result<StateKind> {
        StateKind::ALL
            .iter()
            .copied()
            .find(|s| s.code() == code)
            .ok_or_else(|| Error::arg(format!("unknown state kind {code:?}")))
    }

    pub fn unit(self) -> Unit {
        match self {
            StateKind::VerticalDistance => Unit::Millimeter,
            StateKind::Frequency => Unit::Hertz,
            _ => Unit::Degree,
        }
    }

    /// The ordered grid of experimental parameter values for this state.
    pub fn grid(self) -> &'static [f64] {
        match self {
            StateKind::VerticalDistance => &D_GRID,
            StateKind::Amplitude => &A_GRID,
            StateKind::Frequency => &F_GRID,
            StateKind::Offset => &PHI_GRID,
            StateKind::Yaw => &ALPHA_GRID,
            StateKind::Pitch => &BETA_GRID,
            StateKind::Roll => &GAMMA_GRID,
        }
    }

    /// Number of experimental parameters `p`.
    pub fn parameter_count(self) -> usize {
        self.grid().len()
    }

    /// Span of the grid, `max - min`.
    pub fn grid_span(self) -> f64 {
        let g = self.grid();
        g[g.len() - 1] - g[0]
    }

    /// Grid index of a label value, matched exactly (grid values are literals,
    /// so labels produced by this crate or parsed from its files are bit-equal).
    pub fn grid_index(self, value: f64) -> Result<usize> {
        self.grid()
            .iter()
            .position(|&g| g == value)
            .ok_or_else(|| {
                Error::arg(format!(
                    "label {value} is not on the {} parameter grid",
                    self.code()
                ))
            })
    }
}

impl std::fmt::Display for StateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

impl TryFrom<String> for StateKind {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        StateKind::from_code(&value)
    }
}

impl From<StateKind> for String {
    fn from(s: StateKind) -> String {
        s.code().to_owned()
    }
}
