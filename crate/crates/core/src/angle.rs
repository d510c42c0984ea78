use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A pair of angles in degrees: horizontal (azimuth) and vertical (elevation).
///
/// Used both for directions and for offsets between directions. Angles are
/// treated as flat coordinates; no spherical correction is applied.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Angle2 {
    pub h: f64,
    pub v: f64,
}

impl Angle2 {
    pub const ZERO: Angle2 = Angle2 { h: 0.0, v: 0.0 };

    pub const fn new(h: f64, v: f64) -> Self {
        Self { h, v }
    }

    /// Euclidean amplitude in degrees.
    pub fn norm(self) -> f64 {
        self.h.hypot(self.v)
    }

    /// Largest per-axis magnitude.
    pub fn max_abs(self) -> f64 {
        self.h.abs().max(self.v.abs())
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.h * k, self.v * k)
    }

    pub fn is_finite(self) -> bool {
        self.h.is_finite() && self.v.is_finite()
    }
}

impl Add for Angle2 {
    type Output = Angle2;
    fn add(self, rhs: Angle2) -> Angle2 {
        Angle2::new(self.h + rhs.h, self.v + rhs.v)
    }
}

impl Sub for Angle2 {
    type Output = Angle2;
    fn sub(self, rhs: Angle2) -> Angle2 {
        Angle2::new(self.h - rhs.h, self.v - rhs.v)
    }
}

impl Neg for Angle2 {
    type Output = Angle2;
    fn neg(self) -> Angle2 {
        Angle2::new(-self.h, -self.v)
    }
}
