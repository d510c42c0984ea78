//! Display and inset arithmetic.
//!
//! Angular extents are multiplied as flat rectangles (degree × degree). This
//! is the convention under which a 30°×30° inset occupies 900/72900 ≈ 1.23%
//! of a 270°×270° surround display; no solid-angle correction is made.

use serde::{Deserialize, Serialize};

use crate::angle::Angle2;
use crate::error::{Error, Result};

/// Minimum pixel footprint for a feature to count as resolvable.
pub const NYQUIST_PX: f64 = 2.0;

/// Default width of the alpha-blended seam between inset and periphery.
pub const DEFAULT_BLEND_BAND_DEG: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// Angular field of view and pixel dimensions of a head-fixed display.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplaySpec {
    pub hfov_deg: f64,
    pub vfov_deg: f64,
    pub h_px: u32,
    pub v_px: u32,
}

impl DisplaySpec {
    /// Virtual Research Flight Helmet: 75.3°×58.4° field, 208×139 color triads.
    pub const FLIGHT_HELMET: DisplaySpec = DisplaySpec {
        hfov_deg: 75.3,
        vfov_deg: 58.4,
        h_px: 208,
        v_px: 139,
    };

    pub fn new(hfov_deg: f64, vfov_deg: f64, h_px: u32, v_px: u32) -> Result<Self> {
        let d = Self {
            hfov_deg,
            vfov_deg,
            h_px,
            v_px,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, fov) in [("hfov_deg", self.hfov_deg), ("vfov_deg", self.vfov_deg)] {
            if !(fov.is_finite() && fov > 0.0 && fov <= 360.0) {
                return Err(Error::InvalidDisplay(format!(
                    "{name} must lie in (0, 360], got {fov}"
                )));
            }
        }
        if self.h_px == 0 || self.v_px == 0 {
            return Err(Error::InvalidDisplay(format!(
                "pixel dimensions must be positive, got {}x{}",
                self.h_px, self.v_px
            )));
        }
        Ok(())
    }

    pub fn fov(&self) -> Angle2 {
        Angle2::new(self.hfov_deg, self.vfov_deg)
    }

    pub fn fov_along(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Horizontal => self.hfov_deg,
            Axis::Vertical => self.vfov_deg,
        }
    }

    pub fn px_along(&self, axis: Axis) -> u32 {
        match axis {
            Axis::Horizontal => self.h_px,
            Axis::Vertical => self.v_px,
        }
    }

    pub fn pixel_count(&self) -> u64 {
        u64::from(self.h_px) * u64::from(self.v_px)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(s)?;
        d.validate()?;
        Ok(d)
    }
}

/// A rectangular high-detail region fixed at the center of the display, plus
/// the resolution of the low-detail view that fills the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsetSpec {
    pub h_extent_deg: f64,
    pub v_extent_deg: f64,
    pub periphery_h_px: u32,
    pub periphery_v_px: u32,
    #[serde(default = "default_blend_band")]
    pub blend_band_deg: f64,
}

fn default_blend_band() -> f64 {
    DEFAULT_BLEND_BAND_DEG
}

impl InsetSpec {
    /// An inset with the 42×28 periphery and default blend band.
    pub fn new(h_extent_deg: f64, v_extent_deg: f64) -> Self {
        Self {
            h_extent_deg,
            v_extent_deg,
            periphery_h_px: 42,
            periphery_v_px: 28,
            blend_band_deg: DEFAULT_BLEND_BAND_DEG,
        }
    }

    pub fn with_periphery(mut self, h_px: u32, v_px: u32) -> Self {
        self.periphery_h_px = h_px;
        self.periphery_v_px = v_px;
        self
    }

    pub fn with_blend_band(mut self, band_deg: f64) -> Self {
        self.blend_band_deg = band_deg;
        self
    }

    /// Checks the inset on its own, without reference to a display.
    pub fn validate(&self) -> Result<()> {
        for (name, e) in [
            ("h_extent_deg", self.h_extent_deg),
            ("v_extent_deg", self.v_extent_deg),
        ] {
            if !(e.is_finite() && e > 0.0 && e <= 360.0) {
                return Err(Error::InvalidInset(format!(
                    "{name} must lie in (0, 360], got {e}"
                )));
            }
        }
        if self.periphery_h_px == 0 || self.periphery_v_px == 0 {
            return Err(Error::InvalidInset(format!(
                "periphery resolution must be at least 1x1, got {}x{}",
                self.periphery_h_px, self.periphery_v_px
            )));
        }
        if !(self.blend_band_deg.is_finite() && self.blend_band_deg >= 0.0) {
            return Err(Error::InvalidInset(format!(
                "blend_band_deg must be non-negative, got {}",
                self.blend_band_deg
            )));
        }
        Ok(())
    }

    /// Checks the inset against the display it is placed on.
    pub fn validate_for(&self, display: &DisplaySpec) -> Result<()> {
        display.validate()?;
        self.validate()?;
        if self.h_extent_deg > display.hfov_deg || self.v_extent_deg > display.vfov_deg {
            return Err(Error::InvalidInset(format!(
                "inset {}x{} exceeds display {}x{}",
                self.h_extent_deg, self.v_extent_deg, display.hfov_deg, display.vfov_deg
            )));
        }
        Ok(())
    }

    pub fn extent(&self) -> Angle2 {
        Angle2::new(self.h_extent_deg, self.v_extent_deg)
    }

    /// Half-extent per axis minus the blend band, floored at zero.
    ///
    /// Only this core region counts as fully high-detail; the band on each
    /// edge is a cross-fade with the periphery.
    pub fn effective_half_extent(&self) -> Angle2 {
        Angle2::new(
            (self.h_extent_deg / 2.0 - self.blend_band_deg).max(0.0),
            (self.v_extent_deg / 2.0 - self.blend_band_deg).max(0.0),
        )
    }

    /// Full-width extent of the high-detail core (extent less a band on each edge).
    pub fn effective_extent(&self) -> Angle2 {
        self.effective_half_extent().scale(2.0)
    }

    /// True when the inset spans the whole display, leaving no periphery.
    pub fn covers(&self, display: &DisplaySpec) -> bool {
        self.h_extent_deg >= display.hfov_deg && self.v_extent_deg >= display.vfov_deg
    }

    /// True when `eye_offset` (relative to the head) falls in the high-detail core.
    pub fn contains(&self, eye_offset: Angle2) -> bool {
        let half = self.effective_half_extent();
        eye_offset.h.abs() <= half.h && eye_offset.v.abs() <= half.v
    }
}

/// Returns the inset only when it actually leaves a degraded periphery.
pub fn degrading_inset<'a>(
    display: &DisplaySpec,
    inset: Option<&'a InsetSpec>,
) -> Option<&'a InsetSpec> {
    inset.filter(|i| !i.covers(display))
}

/// Pixel cost of a composite inset+periphery frame relative to a full
/// high-detail frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelBudget {
    pub full_hi_px: u64,
    pub inset_hi_px: u64,
    pub periphery_lo_px: u64,
    pub composite_px: u64,
    pub savings_fraction: f64,
}

/// Arcminutes per pixel along `axis`.
pub fn angular_resolution(display: &DisplaySpec, axis: Axis) -> Result<f64> {
    display.validate()?;
    Ok(display.fov_along(axis) * 60.0 / f64::from(display.px_along(axis)))
}

/// Arcminutes per pixel of the low-detail view, which spans the whole
/// display at the periphery pixel dimensions.
pub fn periphery_resolution(display: &DisplaySpec, inset: &InsetSpec, axis: Axis) -> Result<f64> {
    display.validate()?;
    inset.validate()?;
    let px = match axis {
        Axis::Horizontal => inset.periphery_h_px,
        Axis::Vertical => inset.periphery_v_px,
    };
    Ok(display.fov_along(axis) * 60.0 / f64::from(px))
}

/// Coarser of the two per-axis resolutions.
pub fn worst_resolution(display: &DisplaySpec) -> Result<f64> {
    Ok(angular_resolution(display, Axis::Horizontal)?
        .max(angular_resolution(display, Axis::Vertical)?))
}

pub fn worst_periphery_resolution(display: &DisplaySpec, inset: &InsetSpec) -> Result<f64> {
    Ok(periphery_resolution(display, inset, Axis::Horizontal)?
        .max(periphery_resolution(display, inset, Axis::Vertical)?))
}

pub fn inset_area_fraction(display: &DisplaySpec, inset: &InsetSpec) -> Result<f64> {
    inset.validate_for(display)?;
    Ok((inset.h_extent_deg * inset.v_extent_deg) / (display.hfov_deg * display.vfov_deg))
}

pub fn degraded_area_fraction(display: &DisplaySpec, inset: &InsetSpec) -> Result<f64> {
    Ok(1.0 - inset_area_fraction(display, inset)?)
}

/// Pixels along one axis covered by `extent_deg`, rounded half-up.
fn inset_px(display_px: u32, extent_deg: f64, fov_deg: f64) -> u64 {
    let px = (f64::from(display_px) * extent_deg / fov_deg).round() as u64;
    px.min(u64::from(display_px))
}

pub fn pixel_budget(display: &DisplaySpec, inset: &InsetSpec) -> Result<PixelBudget> {
    inset.validate_for(display)?;
    let full_hi_px = display.pixel_count();
    let inset_hi_px = inset_px(display.h_px, inset.h_extent_deg, display.hfov_deg)
        * inset_px(display.v_px, inset.v_extent_deg, display.vfov_deg);
    let periphery_lo_px = u64::from(inset.periphery_h_px) * u64::from(inset.periphery_v_px);
    let composite_px = inset_hi_px + periphery_lo_px;
    let savings_fraction = (1.0 - composite_px as f64 / full_hi_px as f64).clamp(0.0, 1.0);
    Ok(PixelBudget {
        full_hi_px,
        inset_hi_px,
        periphery_lo_px,
        composite_px,
        savings_fraction,
    })
}

/// Whether a feature of `feature_deg` covers at least [`NYQUIST_PX`] pixels.
pub fn resolvable(feature_deg: f64, resolution_arcmin_per_px: f64) -> Result<bool> {
    resolvable_with(feature_deg, resolution_arcmin_per_px, NYQUIST_PX)
}

pub fn resolvable_with(
    feature_deg: f64,
    resolution_arcmin_per_px: f64,
    min_px: f64,
) -> Result<bool> {
    if !(feature_deg > 0.0 && resolution_arcmin_per_px > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "feature size and resolution must be positive, got {feature_deg} deg at {resolution_arcmin_per_px} arcmin/px"
        )));
    }
    Ok(feature_deg * 60.0 / resolution_arcmin_per_px >= min_px)
}
