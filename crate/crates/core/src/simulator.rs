//! Trial generation and simulated visual search.
//!
//! A trial is a cluster of identical objects, at most one of them the
//! target, placed at random inside a larger search space. The simulated
//! observer sees every object's location (objects are large enough to show up
//! in the low-detail periphery) but can only identify an object by fixating
//! it with the high-detail region. Objects are visited in nearest-neighbor
//! order from the current line of sight. That order does not depend on the
//! inset; the inset only changes how long each shift takes.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::angle::Angle2;
use crate::error::{Error, Result};
use crate::gaze::{apply_shift, GazeParams, GazeState, ShiftResult};
use crate::geometry::{
    degrading_inset, resolvable, worst_periphery_resolution, worst_resolution, DisplaySpec,
    InsetSpec,
};

/// Placement attempts per object before a layout is abandoned.
const PLACEMENT_TRIES: usize = 1_000;
/// Layouts tried before generation gives up.
const LAYOUT_TRIES: usize = 100;
/// Largest trial [`visit_order_oracle`] will enumerate.
pub const ORACLE_MAX_OBJECTS: usize = 8;

const SLIP_STREAM: u64 = 1;

/// Where gaze rests when a trial begins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum HomePlacement {
    /// Midpoint of the left edge of the cluster window, so that every object
    /// lies to the right of the starting view.
    ClusterLeftEdge,
    SearchSpaceCenter,
    Fixed { h: f64, v: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSpec {
    pub n_objects: usize,
    pub object_size_deg: f64,
    /// Size of the detail that tells the target apart (the closed mouth).
    pub feature_size_deg: f64,
    /// Full extent of the search space, centered on the origin.
    pub search_space: Angle2,
    /// Extent of the window the object cluster is confined to.
    pub cluster_extent: Angle2,
    pub onset_delay_range_s: (f64, f64),
    pub slip_probability: f64,
    pub home: HomePlacement,
}

impl Default for ProtocolSpec {
    fn default() -> Self {
        Self {
            n_objects: 5,
            object_size_deg: 12.0,
            feature_size_deg: 3.0,
            search_space: Angle2::new(150.0, 118.0),
            cluster_extent: Angle2::new(75.3, 58.4),
            onset_delay_range_s: (0.1, 0.8),
            slip_probability: 0.03,
            home: HomePlacement::ClusterLeftEdge,
        }
    }
}

impl ProtocolSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidProtocol(m));
        if self.n_objects == 0 {
            return bad("n_objects must be at least 1".into());
        }
        if !(self.object_size_deg > 0.0 && self.object_size_deg.is_finite()) {
            return bad(format!("object_size_deg must be positive, got {}", self.object_size_deg));
        }
        if !(self.feature_size_deg > 0.0 && self.feature_size_deg <= self.object_size_deg) {
            return bad(format!(
                "feature_size_deg must lie in (0, object_size_deg], got {}",
                self.feature_size_deg
            ));
        }
        let (c, s) = (self.cluster_extent, self.search_space);
        if !(c.is_finite() && s.is_finite() && c.h > 0.0 && c.v > 0.0) {
            return bad("cluster and search extents must be positive".into());
        }
        if c.h > s.h || c.v > s.v {
            return bad(format!(
                "cluster extent {}x{} exceeds search space {}x{}",
                c.h, c.v, s.h, s.v
            ));
        }
        let (lo, hi) = self.onset_delay_range_s;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return bad(format!("onset delay range must satisfy 0 < lo < hi, got [{lo}, {hi}]"));
        }
        if !(0.0..=1.0).contains(&self.slip_probability) {
            return bad(format!("slip_probability must lie in [0, 1], got {}", self.slip_probability));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub dir: Angle2,
    pub is_target: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub objects: Vec<SceneObject>,
    pub target_present: bool,
    pub onset_delay_s: f64,
    pub seed: u64,
    /// Starting line of sight.
    pub home: Angle2,
}

impl Trial {
    pub fn target_index(&self) -> Option<usize> {
        self.objects.iter().position(|o| o.is_target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub object_index: usize,
    pub shift: ShiftResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub search_time_s: f64,
    pub correct: bool,
    pub fixations: Vec<Fixation>,
}

impl TrialResult {
    pub fn visit_order(&self) -> Vec<usize> {
        self.fixations.iter().map(|f| f.object_index).collect()
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master_seed`; independent of scheduling.
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    mix64(mix64(master_seed).wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

fn uniform(rng: &mut ChaCha8Rng, center: f64, extent: f64) -> f64 {
    if extent > 0.0 {
        center + rng.gen_range(-extent / 2.0..extent / 2.0)
    } else {
        center
    }
}

fn place_cluster(
    protocol: &ProtocolSpec,
    center: Angle2,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<Angle2>> {
    let c = protocol.cluster_extent;
    let min_sep = protocol.object_size_deg;
    let mut dirs: Vec<Angle2> = Vec::with_capacity(protocol.n_objects);
    for _ in 0..protocol.n_objects {
        let placed = (0..PLACEMENT_TRIES).find_map(|_| {
            let d = Angle2::new(uniform(rng, center.h, c.h), uniform(rng, center.v, c.v));
            dirs.iter().all(|o| (*o - d).norm() >= min_sep).then_some(d)
        })?;
        dirs.push(placed);
    }
    Some(dirs)
}

pub fn generate_trial(protocol: &ProtocolSpec, target_present: bool, seed: u64) -> Result<Trial> {
    protocol.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s, c) = (protocol.search_space, protocol.cluster_extent);
    for _ in 0..LAYOUT_TRIES {
        let center = Angle2::new(uniform(&mut rng, 0.0, s.h - c.h), uniform(&mut rng, 0.0, s.v - c.v));
        let Some(dirs) = place_cluster(protocol, center, &mut rng) else {
            continue;
        };
        let target = target_present.then(|| rng.gen_range(0..dirs.len()));
        let (lo, hi) = protocol.onset_delay_range_s;
        let onset_delay_s = rng.gen_range(lo..hi);
        let home = match protocol.home {
            HomePlacement::ClusterLeftEdge => Angle2::new(center.h - c.h / 2.0, center.v),
            HomePlacement::SearchSpaceCenter => Angle2::ZERO,
            HomePlacement::Fixed { h, v } => Angle2::new(h, v),
        };
        let objects = dirs
            .into_iter()
            .enumerate()
            .map(|(i, dir)| SceneObject {
                dir,
                is_target: Some(i) == target,
            })
            .collect();
        return Ok(Trial {
            objects,
            target_present,
            onset_delay_s,
            seed,
            home,
        });
    }
    Err(Error::Generation(format!(
        "could not place {} objects {} deg apart in a {}x{} window",
        protocol.n_objects, protocol.object_size_deg, c.h, c.v
    )))
}

/// Nearest-neighbor visiting order from the home direction; ties go to the
/// lower index.
pub fn visit_order(trial: &Trial) -> Vec<usize> {
    let n = trial.objects.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut at = trial.home;
    for _ in 0..n {
        let next = (0..n)
            .filter(|&i| !visited[i])
            .min_by(|&a, &b| {
                let da = (trial.objects[a].dir - at).norm();
                let db = (trial.objects[b].dir - at).norm();
                da.total_cmp(&db)
            })
            .expect("unvisited object remains");
        visited[next] = true;
        order.push(next);
        at = trial.objects[next].dir;
    }
    order
}

/// Resolves which inset, if any, constrains gaze for this task.
///
/// Fails when the task cannot be done on the display: the distinguishing
/// feature is too small even at full resolution, or the objects vanish in the
/// periphery so the next fixation cannot be chosen. When the periphery
/// already resolves the feature the inset imposes nothing.
pub fn gaze_constraint<'a>(
    display: &DisplaySpec,
    inset: Option<&'a InsetSpec>,
    protocol: &ProtocolSpec,
) -> Result<Option<&'a InsetSpec>> {
    display.validate()?;
    protocol.validate()?;
    if let Some(i) = inset {
        i.validate_for(display)?;
    }
    let hi = worst_resolution(display)?;
    if !resolvable(protocol.feature_size_deg, hi)? {
        return Err(Error::Configuration(format!(
            "a {} deg feature is not resolvable at {hi:.2} arcmin/px; the task is impossible on this display",
            protocol.feature_size_deg
        )));
    }
    let Some(i) = degrading_inset(display, inset) else {
        return Ok(None);
    };
    let lo = worst_periphery_resolution(display, i)?;
    if !resolvable(protocol.object_size_deg, lo)? {
        return Err(Error::Configuration(format!(
            "{} deg objects are not resolvable in the {}x{} periphery ({lo:.2} arcmin/px)",
            protocol.object_size_deg, i.periphery_h_px, i.periphery_v_px
        )));
    }
    if resolvable(protocol.feature_size_deg, lo)? {
        return Ok(None);
    }
    Ok(Some(i))
}

/// Walks `order`, returning each shift and the elapsed time through its dwell.
fn walk<'t>(
    trial: &'t Trial,
    order: impl IntoIterator<Item = usize> + 't,
    constraint: Option<&'t InsetSpec>,
    params: &'t GazeParams,
) -> impl Iterator<Item = (usize, ShiftResult)> + 't {
    let mut state = GazeState::centered(trial.home);
    order.into_iter().map(move |idx| {
        let shift = apply_shift(&state, trial.objects[idx].dir, constraint, params);
        // The eye drifts back to center during the dwell.
        state = shift.new_state.recentered();
        (idx, shift)
    })
}

fn validate_trial(trial: &Trial) -> Result<()> {
    if trial.objects.is_empty() {
        return Err(Error::InvalidArgument("trial has no objects".into()));
    }
    let targets = trial.objects.iter().filter(|o| o.is_target).count();
    if targets > 1 || trial.target_present != (targets == 1) {
        return Err(Error::InvalidArgument(format!(
            "trial flags {} target(s) but target_present = {}",
            targets, trial.target_present
        )));
    }
    Ok(())
}

pub fn simulate_trial(
    trial: &Trial,
    display: &DisplaySpec,
    inset: Option<&InsetSpec>,
    params: &GazeParams,
    protocol: &ProtocolSpec,
) -> Result<TrialResult> {
    validate_trial(trial)?;
    params.validate()?;
    let constraint = gaze_constraint(display, inset, protocol)?;

    let mut fixations = Vec::with_capacity(trial.objects.len());
    let mut search_time_s = 0.0;
    for (idx, shift) in walk(trial, visit_order(trial), constraint, params) {
        search_time_s += shift.duration_s + params.dwell_s;
        fixations.push(Fixation {
            object_index: idx,
            shift,
        });
        if trial.objects[idx].is_target {
            break;
        }
    }

    let mut slip_rng = ChaCha8Rng::seed_from_u64(trial.seed);
    slip_rng.set_stream(SLIP_STREAM);
    let correct = !slip_rng.gen_bool(protocol.slip_probability);

    Ok(TrialResult {
        search_time_s,
        correct,
        fixations,
    })
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = p.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = p.iter().rposition(|&x| x > p[i]).expect("successor exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Minimum time of a full visit of every object over all visiting orders.
///
/// Test oracle for the nearest-neighbor strategy: on exhaustive
/// (target-absent) trials the simulated time can never beat it.
pub fn visit_order_oracle(
    trial: &Trial,
    display: &DisplaySpec,
    inset: Option<&InsetSpec>,
    params: &GazeParams,
    protocol: &ProtocolSpec,
) -> Result<f64> {
    let n = trial.objects.len();
    if n > ORACLE_MAX_OBJECTS {
        return Err(Error::TooManyObjects(n, ORACLE_MAX_OBJECTS));
    }
    validate_trial(trial)?;
    params.validate()?;
    let constraint = gaze_constraint(display, inset, protocol)?;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    loop {
        let t: f64 = walk(trial, perm.iter().copied(), constraint, params)
            .map(|(_, s)| s.duration_s + params.dwell_s)
            .sum();
        best = best.min(t);
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(best)
}

/// Writes fixation logs as CSV with one header row.
pub fn write_fixation_log<'a, W: Write>(
    out: W,
    results: impl IntoIterator<Item = (u64, &'a TrialResult)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial_id", "fixation_index", "object_index", "kind", "duration_s"])?;
    for (trial_id, r) in results {
        for (k, f) in r.fixations.iter().enumerate() {
            w.write_record([
                trial_id.to_string(),
                k.to_string(),
                f.object_index.to_string(),
                f.shift.kind.as_str().to_string(),
                format!("{:.6}", f.shift.duration_s),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::gaze::ShiftKind;

    fn params() -> GazeParams {
        GazeParams {
            eye_only_threshold_deg: 30.0,
            simultaneous_onset_deg: 15.0,
            eye_range_deg: 45.0,
            residual_eye_offset_deg: 15.0,
            eye_latency_s: 0.2,
            eye_velocity_dps: 300.0,
            head_velocity_dps: 60.0,
            dwell_s: 0.5,
        }
    }

    fn no_slip() -> ProtocolSpec {
        ProtocolSpec {
            slip_probability: 0.0,
            ..ProtocolSpec::default()
        }
    }

    fn manual(dirs: &[(f64, f64)], target: Option<usize>) -> Trial {
        Trial {
            objects: dirs
                .iter()
                .enumerate()
                .map(|(i, &(h, v))| SceneObject {
                    dir: Angle2::new(h, v),
                    is_target: Some(i) == target,
                })
                .collect(),
            target_present: target.is_some(),
            onset_delay_s: 0.5,
            seed: 0,
            home: Angle2::ZERO,
        }
    }

    const FH: DisplaySpec = DisplaySpec::FLIGHT_HELMET;

    #[test]
    fn generated_trial_invariants() {
        let p = ProtocolSpec::default();
        let t = generate_trial(&p, true, 1).unwrap();
        assert_eq!(t.objects.len(), 5);
        assert_eq!(t.objects.iter().filter(|o| o.is_target).count(), 1);
        let (hmin, hmax) = t.objects.iter().fold((f64::MAX, f64::MIN), |(a, b), o| {
            (a.min(o.dir.h), b.max(o.dir.h))
        });
        let (vmin, vmax) = t.objects.iter().fold((f64::MAX, f64::MIN), |(a, b), o| {
            (a.min(o.dir.v), b.max(o.dir.v))
        });
        assert!(hmax - hmin <= 75.3 && vmax - vmin <= 58.4);
        assert!(t.objects.iter().all(|o| o.dir.h >= t.home.h));
        assert!((0.1..0.8).contains(&t.onset_delay_s));

        let t = generate_trial(&p, false, 2).unwrap();
        assert_eq!(t.objects.len(), 5);
        assert!(t.target_index().is_none());
        assert!(!t.target_present);
    }

    #[test]
    fn generation_is_seeded() {
        let p = ProtocolSpec::default();
        assert_eq!(generate_trial(&p, true, 99).unwrap(), generate_trial(&p, true, 99).unwrap());
        assert_ne!(generate_trial(&p, true, 99).unwrap(), generate_trial(&p, true, 100).unwrap());
    }

    #[test]
    fn impossible_layout_fails() {
        let p = ProtocolSpec {
            n_objects: 50,
            ..ProtocolSpec::default()
        };
        assert!(matches!(generate_trial(&p, true, 1), Err(Error::Generation(_))));
    }

    #[test]
    fn protocol_validation() {
        let p = ProtocolSpec {
            cluster_extent: Angle2::new(200.0, 10.0),
            ..ProtocolSpec::default()
        };
        assert!(p.validate().is_err());
        let p = ProtocolSpec {
            onset_delay_range_s: (0.5, 0.5),
            ..ProtocolSpec::default()
        };
        assert!(p.validate().is_err());
        let p = ProtocolSpec {
            n_objects: 0,
            ..ProtocolSpec::default()
        };
        assert!(p.validate().is_err());
        let p = ProtocolSpec {
            slip_probability: 1.5,
            ..ProtocolSpec::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn single_object_at_home() {
        let p = params();
        let t = manual(&[(0.0, 0.0)], Some(0));
        let r = simulate_trial(&t, &FH, Some(&InsetSpec::new(40.0, 40.0)), &p, &no_slip()).unwrap();
        assert!(r.correct);
        assert_eq!(r.fixations.len(), 1);
        assert_abs_diff_eq!(r.search_time_s, p.eye_latency_s + p.dwell_s, epsilon = 1e-12);
    }

    #[test]
    fn present_trials_stop_at_the_target() {
        let p = params();
        let t = manual(&[(30.0, 0.0), (10.0, 0.0), (50.0, 0.0)], Some(0));
        let r = simulate_trial(&t, &FH, None, &p, &no_slip()).unwrap();
        assert_eq!(r.visit_order(), vec![1, 0]);
        let absent = manual(&[(30.0, 0.0), (10.0, 0.0), (50.0, 0.0)], None);
        let r = simulate_trial(&absent, &FH, None, &p, &no_slip()).unwrap();
        assert_eq!(r.visit_order(), vec![1, 0, 2]);
    }

    #[test]
    fn small_inset_forces_head_motion() {
        let p = params();
        let t = manual(&[(20.0, 0.0)], None);
        let wide = simulate_trial(&t, &FH, None, &p, &no_slip()).unwrap();
        let narrow = simulate_trial(&t, &FH, Some(&InsetSpec::new(10.0, 10.0)), &p, &no_slip()).unwrap();
        assert_eq!(wide.fixations[0].shift.kind, ShiftKind::EyeOnly);
        assert_eq!(narrow.fixations[0].shift.kind, ShiftKind::Combined);
        // head covers 20 - 3 = 17 deg
        assert_abs_diff_eq!(narrow.search_time_s, 0.2 + 17.0 / 60.0 + 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(wide.search_time_s, 0.2 + 20.0 / 300.0 + 0.5, epsilon = 1e-12);
    }

    #[test]
    fn impossible_display_is_a_configuration_error() {
        let t = manual(&[(1.0, 0.0)], None);
        let blurry = DisplaySpec::new(75.3, 58.4, 20, 14).unwrap();
        let r = simulate_trial(&t, &blurry, None, &params(), &no_slip());
        assert!(matches!(r, Err(Error::Configuration(_))));
        // a 2x2 periphery hides the objects themselves
        let inset = InsetSpec::new(20.0, 20.0).with_periphery(2, 2);
        let r = simulate_trial(&t, &FH, Some(&inset), &params(), &no_slip());
        assert!(matches!(r, Err(Error::Configuration(_))));
    }

    #[test]
    fn sharp_periphery_does_not_constrain() {
        let inset = InsetSpec::new(10.0, 10.0).with_periphery(208, 139);
        assert!(gaze_constraint(&FH, Some(&inset), &no_slip()).unwrap().is_none());
        let inset = InsetSpec::new(10.0, 10.0);
        assert!(gaze_constraint(&FH, Some(&inset), &no_slip()).unwrap().is_some());
    }

    #[test]
    fn malformed_trials_are_rejected() {
        let mut t = manual(&[(1.0, 0.0), (20.0, 0.0)], Some(0));
        t.objects[1].is_target = true;
        assert!(simulate_trial(&t, &FH, None, &params(), &no_slip()).is_err());
        let mut t = manual(&[(1.0, 0.0)], None);
        t.target_present = true;
        assert!(simulate_trial(&t, &FH, None, &params(), &no_slip()).is_err());
    }

    #[test]
    fn slips_follow_probability() {
        let p = ProtocolSpec {
            slip_probability: 1.0,
            ..ProtocolSpec::default()
        };
        let t = generate_trial(&p, true, 5).unwrap();
        assert!(!simulate_trial(&t, &FH, None, &params(), &p).unwrap().correct);
        let errs = (0..2000)
            .filter(|&s| {
                let t = generate_trial(&ProtocolSpec::default(), true, s).unwrap();
                !simulate_trial(&t, &FH, None, &params(), &ProtocolSpec::default()).unwrap().correct
            })
            .count();
        // 3% of 2000 = 60; binomial sd ~7.6
        assert!((30..=90).contains(&errs), "{errs}");
    }

    #[test]
    fn permutation_enumeration() {
        let mut p = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 24);
        assert_eq!(p, vec![3, 2, 1, 0]);
    }

    #[test]
    fn oracle_refuses_large_trials() {
        let dirs: Vec<(f64, f64)> = (0..9).map(|i| (i as f64 * 13.0, 0.0)).collect();
        let t = manual(&dirs, None);
        assert!(matches!(
            visit_order_oracle(&t, &FH, None, &params(), &no_slip()),
            Err(Error::TooManyObjects(9, 8))
        ));
    }

    #[test]
    fn oracle_matches_greedy_on_a_line() {
        let t = manual(&[(40.0, 0.0), (14.0, 0.0), (27.0, 0.0)], None);
        let sim = simulate_trial(&t, &FH, None, &params(), &no_slip()).unwrap();
        let best = visit_order_oracle(&t, &FH, None, &params(), &no_slip()).unwrap();
        assert_abs_diff_eq!(best, sim.search_time_s, epsilon = 1e-12);
    }

    #[test]
    fn fixation_csv_layout() {
        let t = manual(&[(20.0, 0.0), (40.0, 0.0)], None);
        let r = simulate_trial(&t, &FH, None, &params(), &no_slip()).unwrap();
        let mut buf = Vec::new();
        write_fixation_log(&mut buf, [(7, &r)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "trial_id,fixation_index,object_index,kind,duration_s");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("7,0,0,eye_only,0.266667"));
    }

    #[test]
    fn trial_json_round_trip() {
        let t = generate_trial(&ProtocolSpec::default(), true, 3).unwrap();
        let back: Trial = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
        let r = simulate_trial(&t, &FH, None, &params(), &ProtocolSpec::default()).unwrap();
        let back: TrialResult = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
