use serde::{Deserialize, Serialize};

use super::sellmeier::SellmeierSet;
use crate::error::{Error, Result};

/// Uniaxial crystal cut for type-II phase matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalSpec {
    /// Angle between the surface normal and the optic axis, degrees.
    pub cut_angle_deg: f64,
    pub length_mm: f64,
    pub sellmeier_o: SellmeierSet,
    pub sellmeier_e: SellmeierSet,
    /// External deviation of the pump from the surface normal, degrees, signed.
    #[serde(default)]
    pub tilt_deg: f64,
}

impl CrystalSpec {
    /// 5 mm BBO cut at 29.67 degrees, untilted.
    pub fn bbo_default() -> Self {
        CrystalSpec {
            cut_angle_deg: 29.67,
            length_mm: 5.0,
            sellmeier_o: SellmeierSet::BBO_ORDINARY,
            sellmeier_e: SellmeierSet::BBO_EXTRAORDINARY,
            tilt_deg: 0.0,
        }
    }

    pub fn length_um(&self) -> f64 {
        self.length_mm * 1e3
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_mm > 0.0) {
            return Err(Error::Precondition(format!(
                "crystal.length_mm must be > 0, got {}",
                self.length_mm
            )));
        }
        if !(0.0..=90.0).contains(&self.cut_angle_deg) {
            return Err(Error::Precondition(format!(
                "crystal.cut_angle_deg must lie in [0, 90], got {}",
                self.cut_angle_deg
            )));
        }
        if !self.tilt_deg.is_finite() || self.tilt_deg.abs() >= 90.0 {
            return Err(Error::Precondition(format!(
                "crystal.tilt_deg must lie in (-90, 90), got {}",
                self.tilt_deg
            )));
        }
        self.sellmeier_o.validate()?;
        self.sellmeier_e.validate()
    }

    /// Ordinary refractive index.
    pub fn index_o(&self, lambda_um: f64) -> Result<f64> {
        self.sellmeier_o.index(lambda_um)
    }

    /// Extraordinary index for propagation at `theta_deg` to the optic axis.
    pub fn index_e(&self, lambda_um: f64, theta_deg: f64) -> Result<f64> {
        if !(0.0..=90.0).contains(&theta_deg) {
            return Err(Error::Precondition(format!(
                "propagation angle {theta_deg} deg outside [0, 90]"
            )));
        }
        let no = self.sellmeier_o.index(lambda_um)?;
        let ne = self.sellmeier_e.index(lambda_um)?;
        let (s, c) = theta_deg.to_radians().sin_cos();
        Ok(1.0 / (c * c / (no * no) + s * s / (ne * ne)).sqrt())
    }
}
