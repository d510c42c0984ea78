//! The inset-size experiment: a grid of inset conditions plus an undegraded
//! baseline, each run over the same seeded trials.
//!
//! Trial `i` is identical in every condition (same layout, same target, same
//! slip draw), so condition differences come from gaze timing alone.

mod calibrate;
mod pattern;
mod reference;

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaze::GazeParams;
use crate::geometry::{DisplaySpec, InsetSpec, DEFAULT_BLEND_BAND_DEG};
use crate::simulator::{generate_trial, simulate_trial, trial_seed, ProtocolSpec, Trial, TrialResult};

pub use calibrate::{calibrate, Bounds, Calibration, CALIBRATION_RMS_LIMIT_S};
pub use pattern::{check_pattern, spearman, PatternReport, BASELINE_REL_TOLERANCE, MARGIN_S};
pub use reference::{ReferenceTable, EXTENTS_DEG, UNDEGRADED_EXTENT_DEG};

pub const DEFAULT_MASTER_SEED: u64 = 1996;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Undegraded,
    Inset { h_extent_deg: f64, v_extent_deg: f64 },
}

impl Condition {
    pub fn inset(h_extent_deg: f64, v_extent_deg: f64) -> Self {
        Condition::Inset {
            h_extent_deg,
            v_extent_deg,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Undegraded => f.write_str("undegraded"),
            Condition::Inset {
                h_extent_deg,
                v_extent_deg,
            } => write!(f, "{h_extent_deg}x{v_extent_deg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub display: DisplaySpec,
    /// (horizontal, vertical) inset extents in degrees.
    pub inset_grid: Vec<(f64, f64)>,
    pub include_undegraded: bool,
    pub trials_per_condition: usize,
    /// Target-present to target-absent trials, e.g. 14:6.
    pub present_absent_ratio: (u32, u32),
    pub master_seed: u64,
    pub params: GazeParams,
    pub protocol: ProtocolSpec,
    pub periphery_h_px: u32,
    pub periphery_v_px: u32,
    pub blend_band_deg: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let grid = EXTENTS_DEG
            .iter()
            .flat_map(|&h| EXTENTS_DEG.iter().map(move |&v| (h, v)))
            .collect();
        Self {
            display: DisplaySpec::FLIGHT_HELMET,
            inset_grid: grid,
            include_undegraded: true,
            trials_per_condition: 1000,
            present_absent_ratio: (14, 6),
            master_seed: DEFAULT_MASTER_SEED,
            params: GazeParams::calibrated(),
            protocol: ProtocolSpec::default(),
            periphery_h_px: 42,
            periphery_v_px: 28,
            blend_band_deg: DEFAULT_BLEND_BAND_DEG,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.display.validate()?;
        self.params.validate()?;
        self.protocol.validate()?;
        if self.inset_grid.is_empty() {
            return Err(Error::InvalidArgument("inset_grid is empty".into()));
        }
        if self.trials_per_condition == 0 {
            return Err(Error::InvalidArgument("trials_per_condition must be at least 1".into()));
        }
        if self.present_absent_ratio.0 == 0 {
            return Err(Error::InvalidArgument(
                "present_absent_ratio needs at least one target-present trial".into(),
            ));
        }
        for &(h, v) in &self.inset_grid {
            self.inset(h, v).validate_for(&self.display)?;
        }
        Ok(())
    }

    pub fn inset(&self, h_extent_deg: f64, v_extent_deg: f64) -> InsetSpec {
        InsetSpec::new(h_extent_deg, v_extent_deg)
            .with_periphery(self.periphery_h_px, self.periphery_v_px)
            .with_blend_band(self.blend_band_deg)
    }

    /// Conditions in output order: the grid as given, then the baseline.
    pub fn conditions(&self) -> Vec<Condition> {
        let mut c: Vec<Condition> = self
            .inset_grid
            .iter()
            .map(|&(h, v)| Condition::inset(h, v))
            .collect();
        if self.include_undegraded {
            c.push(Condition::Undegraded);
        }
        c
    }

    pub fn inset_for(&self, condition: &Condition) -> Option<InsetSpec> {
        match *condition {
            Condition::Undegraded => None,
            Condition::Inset {
                h_extent_deg,
                v_extent_deg,
            } => Some(self.inset(h_extent_deg, v_extent_deg)),
        }
    }

    /// Whether trial `index` has a target, cycling through the ratio.
    pub fn target_present(&self, index: u64) -> bool {
        let (p, a) = self.present_absent_ratio;
        index % u64::from(p + a) < u64::from(p)
    }

    pub fn trial(&self, index: u64) -> Result<Trial> {
        generate_trial(
            &self.protocol,
            self.target_present(index),
            trial_seed(self.master_seed, index),
        )
    }

    pub fn trials(&self) -> Result<Vec<Trial>> {
        (0..self.trials_per_condition as u64)
            .into_par_iter()
            .map(|i| self.trial(i))
            .collect()
    }

    pub fn simulate_condition(
        &self,
        condition: &Condition,
        trials: &[Trial],
    ) -> Result<Vec<TrialResult>> {
        let inset = self.inset_for(condition);
        trials
            .par_iter()
            .map(|t| simulate_trial(t, &self.display, inset.as_ref(), &self.params, &self.protocol))
            .collect()
    }
}

/// Neumaier-compensated sum; the result depends only on input order.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionStats {
    pub condition: Condition,
    /// Target-present trials run.
    pub n: usize,
    /// Target-present trials answered correctly.
    pub n_correct: usize,
    /// Mean over correct target-present trials; NaN when there are none.
    pub mean_time_present_s: f64,
    /// Sample standard deviation of those times; zero below two trials.
    pub sd_time_s: f64,
    pub accuracy_present: f64,
    /// Mean over correct target-absent trials, if any ran.
    pub mean_time_absent_s: Option<f64>,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
    (mean, (ss / (n - 1.0)).sqrt())
}

impl ConditionStats {
    pub fn from_results(condition: Condition, trials: &[Trial], results: &[TrialResult]) -> Self {
        let mut present = Vec::new();
        let mut absent = Vec::new();
        let mut n = 0;
        for (t, r) in trials.iter().zip(results) {
            if t.target_present {
                n += 1;
                if r.correct {
                    present.push(r.search_time_s);
                }
            } else if r.correct {
                absent.push(r.search_time_s);
            }
        }
        let (mean, sd) = mean_sd(&present);
        Self {
            condition,
            n,
            n_correct: present.len(),
            mean_time_present_s: mean,
            sd_time_s: sd,
            accuracy_present: if n > 0 { present.len() as f64 / n as f64 } else { 0.0 },
            mean_time_absent_s: (!absent.is_empty()).then(|| mean_sd(&absent).0),
        }
    }

    /// A single summary row with known mean and accuracy.
    pub fn summary(condition: Condition, mean_time_present_s: f64, accuracy_present: f64) -> Self {
        Self {
            condition,
            n: 1,
            n_correct: 1,
            mean_time_present_s,
            sd_time_s: 0.0,
            accuracy_present,
            mean_time_absent_s: None,
        }
    }
}

/// Simulates every condition; output follows [`ExperimentConfig::conditions`].
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ConditionStats>> {
    config.validate()?;
    let trials = config.trials()?;
    config
        .conditions()
        .par_iter()
        .map(|c| {
            let results = config.simulate_condition(c, &trials)?;
            Ok(ConditionStats::from_results(*c, &trials, &results))
        })
        .collect()
}

/// Writes the per-condition results table with one header row.
pub fn write_results_csv<W: Write>(out: W, stats: &[ConditionStats]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "h_extent_deg",
        "v_extent_deg",
        "n",
        "mean_time_present_s",
        "sd_time_s",
        "accuracy_present",
    ])?;
    for s in stats {
        let (h, v) = match s.condition {
            Condition::Undegraded => (String::new(), String::new()),
            Condition::Inset {
                h_extent_deg,
                v_extent_deg,
            } => (format!("{h_extent_deg:.6}"), format!("{v_extent_deg:.6}")),
        };
        w.write_record([
            h,
            v,
            s.n.to_string(),
            format!("{:.6}", s.mean_time_present_s),
            format!("{:.6}", s.sd_time_s),
            format!("{:.6}", s.accuracy_present),
        ])?;
    }
    w.flush()?;
    Ok(())
}
