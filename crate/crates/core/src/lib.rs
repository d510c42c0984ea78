//! Level-of-detail management for head-tracked displays with a degraded periphery.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: display and inset arithmetic, pixel budgets, resolvability.
//! - [`gaze`]: eye/head coordination model for single gaze shifts.
//! - [`simulator`]: trial generation and simulated visual search.
//! - [`harness`]: the inset-size experiment grid, calibration and pattern checks.
//!
//! All angles are in degrees, all times in seconds.

pub mod angle;
pub mod error;
pub mod gaze;
pub mod geometry;
pub mod harness;
pub mod simulator;

pub use angle::Angle2;
pub use error::{Error, Result};
pub use gaze::{GazeParams, GazeState, ShiftKind, ShiftResult};
pub use geometry::{Axis, DisplaySpec, InsetSpec, PixelBudget};
pub use harness::{ConditionStats, ExperimentConfig, PatternReport, ReferenceTable};
pub use simulator::{ProtocolSpec, SceneObject, Trial, TrialResult};
