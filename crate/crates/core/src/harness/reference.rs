//! Measured search times and accuracies for the 4×4 inset grid.

use super::{Condition, ConditionStats};

/// Inset extents of the measured grid, degrees, both axes.
pub const EXTENTS_DEG: [f64; 4] = [10.0, 20.0, 30.0, 40.0];

/// Mean target-present search times (s); rows are horizontal extent, columns
/// vertical extent, both in [`EXTENTS_DEG`] order.
const MEAN_TIME_S: [[f64; 4]; 4] = [
    [4.147, 4.150, 4.058, 3.538],
    [3.721, 3.552, 3.398, 3.448],
    [3.601, 3.451, 2.876, 3.147],
    [3.808, 3.105, 3.281, 3.061],
];

/// Percent of target-present trials correct, same layout.
const ACCURACY_PCT: [[f64; 4]; 4] = [
    [92.1, 97.6, 96.5, 95.4],
    [97.3, 93.3, 98.2, 99.1],
    [97.3, 95.9, 94.6, 94.1],
    [99.1, 95.8, 92.6, 95.8],
];

const UNDEGRADED_TIME_S: f64 = 2.85;
const UNDEGRADED_ACCURACY_PCT: f64 = 94.9;
/// The undegraded display's extent as quoted alongside the table.
pub const UNDEGRADED_EXTENT_DEG: (f64, f64) = (75.0, 58.0);

/// The human reference data; immutable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceTable {
    pub extents_deg: [f64; 4],
    pub mean_time_s: [[f64; 4]; 4],
    pub accuracy_pct: [[f64; 4]; 4],
    pub undegraded_time_s: f64,
    pub undegraded_accuracy_pct: f64,
}

impl Default for ReferenceTable {
    fn default() -> Self {
        Self::MEASURED
    }
}

impl ReferenceTable {
    pub const MEASURED: ReferenceTable = ReferenceTable {
        extents_deg: EXTENTS_DEG,
        mean_time_s: MEAN_TIME_S,
        accuracy_pct: ACCURACY_PCT,
        undegraded_time_s: UNDEGRADED_TIME_S,
        undegraded_accuracy_pct: UNDEGRADED_ACCURACY_PCT,
    };

    fn index(&self, deg: f64) -> Option<usize> {
        self.extents_deg.iter().position(|&e| (e - deg).abs() < 1e-9)
    }

    /// Reference mean time for a condition, if the table has it.
    pub fn mean_time(&self, condition: &Condition) -> Option<f64> {
        match *condition {
            Condition::Undegraded => Some(self.undegraded_time_s),
            Condition::Inset { h_extent_deg, v_extent_deg } => {
                Some(self.mean_time_s[self.index(h_extent_deg)?][self.index(v_extent_deg)?])
            }
        }
    }

    /// The table as condition statistics, grid first then the undegraded row.
    ///
    /// Subject counts and spreads are not part of the table; `n` is set to 1
    /// and the spread to zero.
    pub fn as_stats(&self) -> Vec<ConditionStats> {
        let mut out = Vec::with_capacity(17);
        for (i, &h) in self.extents_deg.iter().enumerate() {
            for (j, &v) in self.extents_deg.iter().enumerate() {
                out.push(ConditionStats::summary(
                    Condition::inset(h, v),
                    self.mean_time_s[i][j],
                    self.accuracy_pct[i][j] / 100.0,
                ));
            }
        }
        out.push(ConditionStats::summary(
            Condition::Undegraded,
            self.undegraded_time_s,
            self.undegraded_accuracy_pct / 100.0,
        ));
        out
    }

    /// Rows rendered as `time accuracy%` cells, tab-separated.
    pub fn render(&self) -> String {
        let mut s = String::from("H \\ V\t10°\t20°\t30°\t40°\n");
        for (i, &h) in self.extents_deg.iter().enumerate() {
            s.push_str(&format!("{h:.0}°"));
            for j in 0..4 {
                s.push_str(&format!(
                    "\t{:.3} {:.1}%",
                    self.mean_time_s[i][j], self.accuracy_pct[i][j]
                ));
            }
            s.push('\n');
        }
        s
    }
}
