//! Qualitative comparison of a condition grid against the measured pattern.
//!
//! Only the contrasts that held up in the human data are checked: 10° insets
//! are slower than 30° and 40° ones on each axis, and the 40°×40° inset is
//! indistinguishable from the undegraded display. A fixed margin stands in
//! for significance testing.

use serde::{Deserialize, Serialize};

use super::{Condition, ConditionStats, ReferenceTable};
use crate::error::{Error, Result};

/// Minimum marginal-mean gap, seconds, for a contrast to count.
pub const MARGIN_S: f64 = 0.1;
/// Largest relative gap between the 40°×40° and undegraded means.
pub const BASELINE_REL_TOLERANCE: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    /// Mean over vertical extents for each horizontal extent.
    pub horizontal_marginals_s: [f64; 4],
    /// Mean over horizontal extents for each vertical extent.
    pub vertical_marginals_s: [f64; 4],
    pub horizontal_effect: bool,
    pub vertical_effect: bool,
    pub baseline_rel_diff: f64,
    pub baseline_match: bool,
    /// Spearman correlation with the reference grid; informational.
    pub rank_correlation: f64,
}

impl PatternReport {
    pub fn passed(&self) -> bool {
        self.horizontal_effect && self.vertical_effect && self.baseline_match
    }
}

fn small_beats_large(m: &[f64; 4]) -> bool {
    m[0] - m[2] >= MARGIN_S && m[0] - m[3] >= MARGIN_S
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; NaN when either
/// side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    num / (da * db).sqrt()
}

fn find(stats: &[ConditionStats], c: &Condition) -> Option<f64> {
    stats
        .iter()
        .find(|s| match (s.condition, c) {
            (Condition::Undegraded, Condition::Undegraded) => true,
            (
                Condition::Inset { h_extent_deg: h1, v_extent_deg: v1 },
                Condition::Inset { h_extent_deg: h2, v_extent_deg: v2 },
            ) => (h1 - h2).abs() < 1e-9 && (v1 - v2).abs() < 1e-9,
            _ => false,
        })
        .map(|s| s.mean_time_present_s)
}

pub fn check_pattern(stats: &[ConditionStats], reference: &ReferenceTable) -> Result<PatternReport> {
    let ext = reference.extents_deg;
    let mut grid = [[0.0; 4]; 4];
    for (i, &h) in ext.iter().enumerate() {
        for (j, &v) in ext.iter().enumerate() {
            grid[i][j] = find(stats, &Condition::inset(h, v))
                .ok_or_else(|| Error::IncompleteGrid(format!("missing {h}x{v} inset")))?;
        }
    }
    let undegraded = find(stats, &Condition::Undegraded)
        .ok_or_else(|| Error::IncompleteGrid("missing undegraded condition".into()))?;

    let mut horizontal = [0.0; 4];
    let mut vertical = [0.0; 4];
    for k in 0..4 {
        horizontal[k] = (0..4).map(|j| grid[k][j]).sum::<f64>() / 4.0;
        vertical[k] = (0..4).map(|i| grid[i][k]).sum::<f64>() / 4.0;
    }
    let baseline_rel_diff = (grid[3][3] - undegraded).abs() / undegraded;

    let sim: Vec<f64> = grid.iter().flatten().copied().collect();
    let refs: Vec<f64> = reference.mean_time_s.iter().flatten().copied().collect();

    Ok(PatternReport {
        horizontal_marginals_s: horizontal,
        vertical_marginals_s: vertical,
        horizontal_effect: small_beats_large(&horizontal),
        vertical_effect: small_beats_large(&vertical),
        baseline_rel_diff,
        baseline_match: baseline_rel_diff <= BASELINE_REL_TOLERANCE,
        rank_correlation: spearman(&sim, &refs),
    })
}
