//! Fits the gaze kinematics to the measured search times.
//!
//! Three conditions anchor the fit: the undegraded display, the smallest
//! inset and the largest inset. The remaining grid cells are left out and
//! serve as a holdout.
//!
//! Which shifts are eye-only or combined, and their amplitudes, depend only
//! on the thresholds and the inset, not on velocities or timing. The fit
//! therefore simulates each anchor condition once and re-times the recorded
//! shifts for every candidate parameter set.

use super::{compensated_sum, Condition, ExperimentConfig, ReferenceTable};
use crate::error::{Error, Result};
use crate::gaze::{movement_time, FitPoint, GazeParams, ParamFile, Provenance, ShiftKind};
use crate::simulator::Trial;

/// Calibration fails when the fitted conditions miss by more than this (RMS).
pub const CALIBRATION_RMS_LIMIT_S: f64 = 0.25;

const ROUNDS: usize = 14;
const GRID_POINTS: usize = 17;
const SHRINK: f64 = 0.6;

/// Search box for the fitted parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub eye_velocity_dps: (f64, f64),
    pub head_velocity_dps: (f64, f64),
    pub eye_latency_s: (f64, f64),
    pub dwell_s: (f64, f64),
}

impl Default for Bounds {
    /// Average (not peak) saccade and head velocities, saccadic latency, and
    /// a per-object inspection time of up to a second and a half.
    fn default() -> Self {
        Self {
            eye_velocity_dps: (100.0, 600.0),
            head_velocity_dps: (20.0, 200.0),
            eye_latency_s: (0.15, 0.30),
            dwell_s: (0.2, 1.5),
        }
    }
}

impl Bounds {
    fn as_array(&self) -> [(f64, f64); 4] {
        [
            self.eye_velocity_dps,
            self.head_velocity_dps,
            self.eye_latency_s,
            self.dwell_s,
        ]
    }
}

fn with_coords(base: &GazeParams, x: [f64; 4]) -> GazeParams {
    GazeParams {
        eye_velocity_dps: x[0],
        head_velocity_dps: x[1],
        eye_latency_s: x[2],
        dwell_s: x[3],
        ..*base
    }
}

pub fn fit_conditions() -> [Condition; 3] {
    [
        Condition::Undegraded,
        Condition::inset(10.0, 10.0),
        Condition::inset(40.0, 40.0),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub params: GazeParams,
    pub rms_residual_s: f64,
    pub fitted: Vec<FitPoint>,
    pub evaluations: usize,
}

impl Calibration {
    pub fn param_file(&self, config: &ExperimentConfig) -> ParamFile {
        ParamFile {
            params: self.params,
            provenance: Some(Provenance {
                note: "Thresholds are fixed model constants (30/15/45/15 deg). Velocities, latency \
                       and dwell are fitted by `perilod calibrate`; latency and dwell enter search \
                       time only through their sum."
                    .into(),
                method: format!(
                    "coordinate grid search, {ROUNDS} rounds x {GRID_POINTS} points, \
                     least squares on target-present means"
                ),
                master_seed: config.master_seed,
                trials_per_condition: config.trials_per_condition,
                rms_residual_s: self.rms_residual_s,
                fitted: self.fitted.clone(),
            }),
        }
    }
}

/// Recorded shifts of one correct target-present trial.
type Path = Vec<(ShiftKind, f64, f64)>;

fn present_trials(config: &ExperimentConfig) -> Result<Vec<Trial>> {
    let mut out = Vec::with_capacity(config.trials_per_condition);
    let mut i = 0u64;
    while out.len() < config.trials_per_condition {
        if config.target_present(i) {
            out.push(config.trial(i)?);
        }
        i += 1;
    }
    Ok(out)
}

fn mean_time(paths: &[Path], p: &GazeParams) -> f64 {
    let per_trial = paths.iter().map(|path| {
        compensated_sum(
            path.iter()
                .map(|&(k, e, h)| movement_time(k, e, h, p) + p.dwell_s),
        )
    });
    compensated_sum(per_trial) / paths.len() as f64
}

fn condition_means(
    config: &ExperimentConfig,
    trials: &[Trial],
    params: &GazeParams,
) -> Result<Vec<f64>> {
    let cfg = ExperimentConfig {
        params: *params,
        ..config.clone()
    };
    fit_conditions()
        .iter()
        .map(|c| {
            let results = cfg.simulate_condition(c, trials)?;
            let times: Vec<f64> = results
                .iter()
                .filter(|r| r.correct)
                .map(|r| r.search_time_s)
                .collect();
            Ok(compensated_sum(times.iter().copied()) / times.len() as f64)
        })
        .collect()
}

pub fn calibrate(config: &ExperimentConfig, reference: &ReferenceTable) -> Result<Calibration> {
    calibrate_within(config, reference, &Bounds::default())
}

pub fn calibrate_within(
    config: &ExperimentConfig,
    reference: &ReferenceTable,
    bounds: &Bounds,
) -> Result<Calibration> {
    config.validate()?;
    let targets: Vec<f64> = fit_conditions()
        .iter()
        .map(|c| reference.mean_time(c).expect("fit conditions are in the table"))
        .collect();
    let trials = present_trials(config)?;

    let mut paths: Vec<Vec<Path>> = Vec::new();
    for c in fit_conditions() {
        let results = config.simulate_condition(&c, &trials)?;
        let p: Vec<Path> = results
            .iter()
            .filter(|r| r.correct)
            .map(|r| {
                r.fixations
                    .iter()
                    .map(|f| (f.shift.kind, f.shift.eye_amplitude_deg, f.shift.head_amplitude_deg))
                    .collect()
            })
            .collect();
        if p.is_empty() {
            return Err(Error::Calibration(format!("no correct target-present trials in {c}")));
        }
        paths.push(p);
    }

    let mut evaluations = 0usize;
    let mut sse = |x: [f64; 4]| -> f64 {
        evaluations += 1;
        let p = with_coords(&config.params, x);
        if p.validate().is_err() {
            return f64::INFINITY;
        }
        paths
            .iter()
            .zip(&targets)
            .map(|(ps, t)| (mean_time(ps, &p) - t).powi(2))
            .sum()
    };

    let b = bounds.as_array();
    let mut x = b.map(|(lo, hi)| (lo + hi) / 2.0);
    let mut width = b.map(|(lo, hi)| hi - lo);
    let mut best = sse(x);
    for _ in 0..ROUNDS {
        for k in 0..4 {
            let (lo, hi) = b[k];
            let a = (x[k] - width[k] / 2.0).max(lo);
            let z = (x[k] + width[k] / 2.0).min(hi);
            for g in 0..GRID_POINTS {
                let mut cand = x;
                cand[k] = a + (z - a) * g as f64 / (GRID_POINTS - 1) as f64;
                let e = sse(cand);
                if e < best {
                    best = e;
                    x = cand;
                }
            }
        }
        width = width.map(|w| w * SHRINK);
    }

    let params = with_coords(&config.params, x);
    let simulated = condition_means(config, &trials, &params)?;
    let fitted: Vec<FitPoint> = fit_conditions()
        .iter()
        .zip(targets.iter().zip(&simulated))
        .map(|(c, (&r, &s))| FitPoint {
            condition: c.to_string(),
            reference_s: r,
            simulated_s: s,
        })
        .collect();
    let rms_residual_s = (fitted
        .iter()
        .map(|f| (f.simulated_s - f.reference_s).powi(2))
        .sum::<f64>()
        / fitted.len() as f64)
        .sqrt();

    if rms_residual_s.is_nan() || rms_residual_s > CALIBRATION_RMS_LIMIT_S {
        let detail: Vec<String> = fitted
            .iter()
            .map(|f| format!("{}: simulated {:.3} s vs {:.3} s", f.condition, f.simulated_s, f.reference_s))
            .collect();
        return Err(Error::Calibration(format!(
            "rms residual {rms_residual_s:.3} s exceeds {CALIBRATION_RMS_LIMIT_S} s ({}); best params {params:?}",
            detail.join(", ")
        )));
    }

    Ok(Calibration {
        params,
        rms_residual_s,
        fitted,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ExperimentConfig {
        ExperimentConfig {
            trials_per_condition: 150,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn recorded_paths_retime_exactly() {
        let config = quick();
        let trials = present_trials(&config).unwrap();
        assert!(trials.iter().all(|t| t.target_present));
        let other = GazeParams {
            eye_velocity_dps: 250.0,
            head_velocity_dps: 40.0,
            eye_latency_s: 0.18,
            dwell_s: 0.9,
            ..config.params
        };
        let direct = condition_means(&config, &trials, &other).unwrap();
        for (i, c) in fit_conditions().iter().enumerate() {
            let results = config.simulate_condition(c, &trials).unwrap();
            let paths: Vec<Path> = results
                .iter()
                .filter(|r| r.correct)
                .map(|r| {
                    r.fixations
                        .iter()
                        .map(|f| (f.shift.kind, f.shift.eye_amplitude_deg, f.shift.head_amplitude_deg))
                        .collect()
                })
                .collect();
            assert!((mean_time(&paths, &other) - direct[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic() {
        let a = calibrate(&quick(), &ReferenceTable::MEASURED).unwrap();
        let b = calibrate(&quick(), &ReferenceTable::MEASURED).unwrap();
        assert_eq!(a, b);
        let fa = a.param_file(&quick()).to_json().unwrap();
        let fb = b.param_file(&quick()).to_json().unwrap();
        assert_eq!(fa, fb);
    }

    #[test]
    fn unreachable_target_fails() {
        let mut table = ReferenceTable::MEASURED;
        table.undegraded_time_s = 60.0;
        let r = calibrate(&quick(), &table);
        assert!(matches!(r, Err(Error::Calibration(_))));
    }
}
