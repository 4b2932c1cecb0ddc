use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{angular_frequency, nm_to_um, C_UM_PER_PS, FWHM_PER_SIGMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PumpKind {
    Cw,
    Pulsed,
}

/// Pump spectrum: a CW line or a Gaussian pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSpec {
    pub kind: PumpKind,
    pub center_wavelength_nm: f64,
    /// Intensity FWHM in pump wavelength; pulsed only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_fwhm_nm: Option<f64>,
}

impl PumpSpec {
    pub fn cw(center_wavelength_nm: f64) -> Self {
        PumpSpec {
            kind: PumpKind::Cw,
            center_wavelength_nm,
            bandwidth_fwhm_nm: None,
        }
    }

    pub fn pulsed(center_wavelength_nm: f64, bandwidth_fwhm_nm: f64) -> Self {
        PumpSpec {
            kind: PumpKind::Pulsed,
            center_wavelength_nm,
            bandwidth_fwhm_nm: Some(bandwidth_fwhm_nm),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center_wavelength_nm > 0.0) {
            return Err(Error::Precondition(format!(
                "pump.center_wavelength_nm must be > 0, got {}",
                self.center_wavelength_nm
            )));
        }
        match (self.kind, self.bandwidth_fwhm_nm) {
            (PumpKind::Cw, None) => Ok(()),
            (PumpKind::Cw, Some(_)) => Err(Error::Precondition(
                "pump.bandwidth_fwhm_nm must be unset for a CW pump".into(),
            )),
            (PumpKind::Pulsed, Some(b)) if b > 0.0 && b.is_finite() => Ok(()),
            (PumpKind::Pulsed, b) => Err(Error::Precondition(format!(
                "pulsed pump needs bandwidth_fwhm_nm > 0, got {b:?}"
            ))),
        }
    }

    /// Standard deviation of the pump intensity spectrum in angular
    /// frequency, rad/ps (wavelength FWHM mapped through dω = 2πc·dλ/λ²).
    pub fn intensity_sigma_omega(&self) -> Result<f64> {
        self.validate()?;
        let fwhm_nm = self.bandwidth_fwhm_nm.ok_or_else(cw_usage)?;
        let lambda_um = nm_to_um(self.center_wavelength_nm);
        let d_omega = std::f64::consts::TAU * C_UM_PER_PS * nm_to_um(fwhm_nm) / (lambda_um * lambda_um);
        Ok(d_omega / FWHM_PER_SIGMA)
    }
}

fn cw_usage() -> Error {
    Error::Usage("a CW pump is a delta in ω_s + ω_i; use cw_slice instead".into())
}

/// Pump spectral amplitude A(ω_s + ω_i): Gaussian in the sum frequency,
/// 1 at ω_s + ω_i = ω_p.
pub fn pump_envelope(pump: &PumpSpec, lambda_s_nm: f64, lambda_i_nm: f64) -> Result<f64> {
    if pump.kind == PumpKind::Cw {
        return Err(cw_usage());
    }
    let sigma = pump.intensity_sigma_omega()?;
    let detuning = angular_frequency(lambda_s_nm) + angular_frequency(lambda_i_nm)
        - angular_frequency(pump.center_wavelength_nm);
    Ok((-detuning * detuning / (4.0 * sigma * sigma)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::wavelength_from_angular;

    #[test]
    fn peak_on_energy_conservation() {
        let p = PumpSpec::pulsed(775.0, 2.0);
        assert!((pump_envelope(&p, 1550.0, 1550.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(pump_envelope(&p, 1540.0, 1550.0).unwrap() < 1.0);
    }

    #[test]
    fn half_intensity_at_half_fwhm_detuning() {
        let p = PumpSpec::pulsed(775.0, 3.0);
        let half = 0.5 * p.intensity_sigma_omega().unwrap() * FWHM_PER_SIGMA;
        let idler = wavelength_from_angular(angular_frequency(775.0) + half - angular_frequency(1550.0));
        let a = pump_envelope(&p, 1550.0, idler).unwrap();
        assert!((a * a - 0.5).abs() < 1e-9, "{}", a * a);
    }

    #[test]
    fn cw_pump_is_usage_error() {
        let p = PumpSpec::cw(775.0);
        assert!(matches!(pump_envelope(&p, 1550.0, 1550.0), Err(Error::Usage(_))));
    }

    #[test]
    fn invariants_checked() {
        assert!(PumpSpec::pulsed(775.0, 0.0).validate().is_err());
        assert!(PumpSpec {
            kind: PumpKind::Cw,
            center_wavelength_nm: 775.0,
            bandwidth_fwhm_nm: Some(1.0)
        }
        .validate()
        .is_err());
    }
}
