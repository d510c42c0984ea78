//! Eye/head coordination for single gaze shifts.
//!
//! A gaze shift is either carried by the eye alone or by a combined movement
//! in which the head turns toward the target and the eye is left with a small
//! residual offset. Without degradation the eye handles shifts up to
//! [`GazeParams::eye_only_threshold_deg`] on each axis. A head-fixed inset
//! shrinks that range: the eye must land inside the inset's high-detail core
//! to see the target in detail, so anything farther recruits the head.
//!
//! Timing is constant-velocity with a single onset latency. Eye and head
//! start together, so a combined shift lasts as long as the slower of the two
//! movements.

use serde::{Deserialize, Serialize};

use crate::angle::Angle2;
use crate::error::{Error, Result};
use crate::geometry::InsetSpec;

/// Rounding allowance when re-deriving the eye offset from stored directions.
const BOUND_SLACK_DEG: f64 = 1e-9;

/// The shipped parameter file.
pub const CALIBRATED_JSON: &str = include_str!("../params/gaze_calibrated.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GazeParams {
    /// Largest offset fixated without head motion.
    pub eye_only_threshold_deg: f64,
    /// Offset beyond which eye and head start almost simultaneously.
    pub simultaneous_onset_deg: f64,
    /// Mechanical range of the eye in the head.
    pub eye_range_deg: f64,
    /// Eye eccentricity left over once a combined shift settles.
    pub residual_eye_offset_deg: f64,
    pub eye_latency_s: f64,
    pub eye_velocity_dps: f64,
    pub head_velocity_dps: f64,
    /// Inspection time per fixated object.
    pub dwell_s: f64,
}

impl GazeParams {
    /// Parameters from the parameter file shipped with the crate.
    pub fn calibrated() -> Self {
        ParamFile::from_json(CALIBRATED_JSON)
            .expect("shipped parameter file is valid")
            .params
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("eye_only_threshold_deg", self.eye_only_threshold_deg),
            ("simultaneous_onset_deg", self.simultaneous_onset_deg),
            ("eye_range_deg", self.eye_range_deg),
            ("residual_eye_offset_deg", self.residual_eye_offset_deg),
            ("eye_latency_s", self.eye_latency_s),
            ("eye_velocity_dps", self.eye_velocity_dps),
            ("head_velocity_dps", self.head_velocity_dps),
            ("dwell_s", self.dwell_s),
        ];
        for (name, x) in all {
            if !x.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        for (name, x) in all {
            if name != "residual_eye_offset_deg" && x <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {x}")));
            }
        }
        if !(self.simultaneous_onset_deg <= self.eye_only_threshold_deg
            && self.eye_only_threshold_deg <= self.eye_range_deg)
        {
            return Err(Error::InvalidParams(format!(
                "need simultaneous_onset ({}) <= eye_only_threshold ({}) <= eye_range ({})",
                self.simultaneous_onset_deg, self.eye_only_threshold_deg, self.eye_range_deg
            )));
        }
        if !(0.0..=self.eye_only_threshold_deg).contains(&self.residual_eye_offset_deg) {
            return Err(Error::InvalidParams(format!(
                "residual_eye_offset_deg must lie in [0, eye_only_threshold], got {}",
                self.residual_eye_offset_deg
            )));
        }
        if self.eye_velocity_dps <= self.head_velocity_dps {
            return Err(Error::InvalidParams(format!(
                "eye velocity ({}) must exceed head velocity ({})",
                self.eye_velocity_dps, self.head_velocity_dps
            )));
        }
        Ok(())
    }
}

impl Default for GazeParams {
    fn default() -> Self {
        Self::calibrated()
    }
}

/// Where a calibrated parameter set came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub note: String,
    pub method: String,
    pub master_seed: u64,
    pub trials_per_condition: usize,
    /// Root-mean-square error over the fitted conditions, seconds.
    pub rms_residual_s: f64,
    pub fitted: Vec<FitPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitPoint {
    pub condition: String,
    pub reference_s: f64,
    pub simulated_s: f64,
}

/// On-disk form of a parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub params: GazeParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl ParamFile {
    pub fn from_json(s: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(s)?;
        f.params.validate()?;
        Ok(f)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShiftKind {
    EyeOnly,
    Combined,
}

impl ShiftKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ShiftKind::EyeOnly => "eye_only",
            ShiftKind::Combined => "combined",
        }
    }
}

/// Head direction plus the line of sight; the eye-in-head offset is their
/// difference.
///
/// The line of sight is stored directly so that a shift lands on its target
/// without rounding error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeState {
    pub head_dir: Angle2,
    pub line_of_sight: Angle2,
}

impl GazeState {
    /// Eye centered in the head, looking at `dir`.
    pub fn centered(dir: Angle2) -> Self {
        Self {
            head_dir: dir,
            line_of_sight: dir,
        }
    }

    pub fn eye_offset(&self) -> Angle2 {
        self.line_of_sight - self.head_dir
    }

    /// The head catches up with the eye while the line of sight stays put.
    pub fn recentered(&self) -> Self {
        Self::centered(self.line_of_sight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftResult {
    pub kind: ShiftKind,
    pub duration_s: f64,
    pub eye_amplitude_deg: f64,
    pub head_amplitude_deg: f64,
    pub new_state: GazeState,
}

/// Per-axis offset the eye may cover without head motion.
pub fn eye_only_limit(inset: Option<&InsetSpec>, params: &GazeParams) -> Angle2 {
    let t = params.eye_only_threshold_deg;
    match inset {
        None => Angle2::new(t, t),
        Some(i) => {
            let half = i.effective_half_extent();
            Angle2::new(t.min(half.h), t.min(half.v))
        }
    }
}

/// Per-axis eye eccentricity left after a combined shift.
pub fn residual_limit(inset: Option<&InsetSpec>, params: &GazeParams) -> Angle2 {
    let r = params.residual_eye_offset_deg.min(params.eye_range_deg);
    match inset {
        None => Angle2::new(r, r),
        Some(i) => {
            let half = i.effective_half_extent();
            Angle2::new(r.min(half.h), r.min(half.v))
        }
    }
}

/// Largest eye-in-head offset at which the fixated target is seen in detail.
fn eye_bound(inset: Option<&InsetSpec>, params: &GazeParams) -> Angle2 {
    let e = params.eye_range_deg;
    match inset {
        None => Angle2::new(e, e),
        Some(i) => {
            let half = i.effective_half_extent();
            Angle2::new(e.min(half.h), e.min(half.v))
        }
    }
}

fn within(offset: Angle2, limit: Angle2) -> bool {
    offset.h.abs() <= limit.h && offset.v.abs() <= limit.v
}

pub fn classify_shift(offset: Angle2, inset: Option<&InsetSpec>, params: &GazeParams) -> ShiftKind {
    if within(offset, eye_only_limit(inset, params)) {
        ShiftKind::EyeOnly
    } else {
        ShiftKind::Combined
    }
}

/// Moves `|x|` toward zero by `limit`, keeping the sign.
fn excess(x: f64, limit: f64) -> f64 {
    x.signum() * (x.abs() - limit).max(0.0)
}

/// Head rotation of a combined shift that starts with the eye centered.
pub fn head_displacement(offset: Angle2, inset: Option<&InsetSpec>, params: &GazeParams) -> Angle2 {
    let r = residual_limit(inset, params);
    Angle2::new(excess(offset.h, r.h), excess(offset.v, r.v))
}

/// Duration of a shift given its eye and head amplitudes.
pub fn movement_time(kind: ShiftKind, eye_amp: f64, head_amp: f64, params: &GazeParams) -> f64 {
    let eye = eye_amp / params.eye_velocity_dps;
    match kind {
        ShiftKind::EyeOnly => params.eye_latency_s + eye,
        ShiftKind::Combined => params.eye_latency_s + eye.max(head_amp / params.head_velocity_dps),
    }
}

/// Duration of a shift by `offset` starting with the eye centered in the head.
pub fn shift_time(
    offset: Angle2,
    kind: ShiftKind,
    inset: Option<&InsetSpec>,
    params: &GazeParams,
) -> f64 {
    let head = match kind {
        ShiftKind::EyeOnly => 0.0,
        ShiftKind::Combined => head_displacement(offset, inset, params).norm(),
    };
    movement_time(kind, offset.norm(), head, params)
}

/// Moves the line of sight onto `target`.
///
/// When the state starts with the eye off-center, an eye-only shift that
/// would push the eye out of range (or out of the inset core) is promoted to
/// a combined one.
pub fn apply_shift(
    state: &GazeState,
    target: Angle2,
    inset: Option<&InsetSpec>,
    params: &GazeParams,
) -> ShiftResult {
    let offset = target - state.line_of_sight;
    let mut kind = classify_shift(offset, inset, params);
    let bound = eye_bound(inset, params);
    let slack = Angle2::new(bound.h + BOUND_SLACK_DEG, bound.v + BOUND_SLACK_DEG);
    if kind == ShiftKind::EyeOnly && !within(target - state.head_dir, slack) {
        kind = ShiftKind::Combined;
    }

    let head_dir = match kind {
        ShiftKind::EyeOnly => state.head_dir,
        ShiftKind::Combined => {
            let rel = target - state.head_dir;
            let r = residual_limit(inset, params);
            let eye = Angle2::new(
                rel.h.signum() * rel.h.abs().min(r.h),
                rel.v.signum() * rel.v.abs().min(r.v),
            );
            target - eye
        }
    };
    let head_amp = (head_dir - state.head_dir).norm();
    let eye_amp = offset.norm();
    ShiftResult {
        kind,
        duration_s: movement_time(kind, eye_amp, head_amp, params),
        eye_amplitude_deg: eye_amp,
        head_amplitude_deg: head_amp,
        new_state: GazeState {
            head_dir,
            line_of_sight: target,
        },
    }
}
