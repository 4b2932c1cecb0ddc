use serde::{Deserialize, Serialize};

use super::model::JointAmplitude;
use super::golden_section_min;
use crate::error::{Error, Result};
use crate::units::{compensated_sum, conjugate_wavelength};

/// Pump wavelengths accepted by [`cw_slice`], nm.
pub const CW_PUMP_RANGE_NM: (f64, f64) = (650.0, 820.0);

/// Peak amplitude below which a slice is reported as carrying no signal.
pub const NO_SIGNAL_THRESHOLD: f64 = 1e-12;

const LOCATE_TOLERANCE_NM: f64 = 1e-9;

/// Joint amplitude along the energy-conservation line of a CW pump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CwSlice {
    pub pump_wavelength_nm: f64,
    pub signal_axis: Vec<f64>,
    /// λ_i = (1/λ_p − 1/λ_s)⁻¹ for each signal sample.
    pub idler_axis: Vec<f64>,
    /// Normalized so that Σ|a|²·Δλ_s = 1.
    pub amplitude: Vec<f64>,
    /// Signal wavelength of the intensity maximum, refined between samples.
    pub center_signal_nm: f64,
    pub center_idler_nm: f64,
    /// Intensity FWHM in signal wavelength; `None` if the slice never falls
    /// to half maximum inside the axis.
    pub fwhm_nm: Option<f64>,
}

impl CwSlice {
    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a * a).collect()
    }

    pub fn signal_step(&self) -> f64 {
        self.signal_axis[1] - self.signal_axis[0]
    }
}

fn check_signal_axis(pump_nm: f64, axis: &[f64]) -> Result<f64> {
    if axis.len() < 3 {
        return Err(Error::Usage("a CW slice needs at least three signal samples".into()));
    }
    let step = axis[1] - axis[0];
    let uniform = axis
        .windows(2)
        .all(|w| w[1] > w[0] && ((w[1] - w[0]) - step).abs() <= 1e-9 * step.max(1.0));
    if !uniform {
        return Err(Error::Usage("signal axis must be uniform and strictly increasing".into()));
    }
    if axis[0] <= pump_nm {
        return Err(Error::Precondition(format!(
            "signal wavelength {} nm is not longer than the pump ({pump_nm} nm)",
            axis[0]
        )));
    }
    Ok(step)
}

/// Θ(λ_s, λ_i(λ_s)) sampled on `signal_axis` with λ_i fixed by the CW pump.
pub fn cw_slice<A: JointAmplitude + ?Sized>(epmf: &A, pump_wavelength_nm: f64, signal_axis: &[f64]) -> Result<CwSlice> {
    let (lo, hi) = CW_PUMP_RANGE_NM;
    if !(lo..=hi).contains(&pump_wavelength_nm) {
        return Err(Error::Precondition(format!(
            "CW pump wavelength {pump_wavelength_nm} nm outside [{lo}, {hi}] nm"
        )));
    }
    let step = check_signal_axis(pump_wavelength_nm, signal_axis)?;
    let profile = |ls: f64| -> Result<f64> {
        Ok(epmf.amplitude(ls, conjugate_wavelength(pump_wavelength_nm, ls))?.norm())
    };
    let raw: Vec<f64> = signal_axis.iter().map(|&ls| profile(ls)).collect::<Result<_>>()?;
    let (k, &peak) = raw
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("axis checked non-empty");
    if !(peak >= NO_SIGNAL_THRESHOLD) {
        return Err(Error::NoSignal { peak });
    }

    let n = signal_axis.len();
    let a = signal_axis[k.saturating_sub(1)];
    let b = signal_axis[(k + 1).min(n - 1)];
    // Errors inside the optimizer are impossible here: the bracket lies
    // between samples that were already evaluated successfully.
    let center = golden_section_min(|x| -profile(x).unwrap_or(0.0), a, b, LOCATE_TOLERANCE_NM);
    let peak_value = profile(center)?.max(peak);
    let half = std::f64::consts::FRAC_1_SQRT_2 * peak_value;

    let crossing = |inner: f64, outer: f64| -> Result<f64> {
        // inner is above half amplitude, outer below.
        let (mut x0, mut x1) = (inner, outer);
        while (x1 - x0).abs() > LOCATE_TOLERANCE_NM {
            let m = 0.5 * (x0 + x1);
            if profile(m)? >= half {
                x0 = m;
            } else {
                x1 = m;
            }
        }
        Ok(0.5 * (x0 + x1))
    };
    let left = (0..k).rev().find(|&j| raw[j] < half);
    let right = (k + 1..n).find(|&j| raw[j] < half);
    let fwhm_nm = match (left, right) {
        (Some(l), Some(r)) => Some(crossing(signal_axis[r - 1], signal_axis[r])? - crossing(signal_axis[l + 1], signal_axis[l])?),
        _ => None,
    };

    let norm = (compensated_sum(raw.iter().map(|a| a * a)) * step).sqrt();
    Ok(CwSlice {
        pump_wavelength_nm,
        signal_axis: signal_axis.to_vec(),
        idler_axis: signal_axis
            .iter()
            .map(|&ls| conjugate_wavelength(pump_wavelength_nm, ls))
            .collect(),
        amplitude: raw.iter().map(|a| a / norm).collect(),
        center_signal_nm: center,
        center_idler_nm: conjugate_wavelength(pump_wavelength_nm, center),
        fwhm_nm,
    })
}
