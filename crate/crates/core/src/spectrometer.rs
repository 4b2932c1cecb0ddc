//! Dispersive-fiber time-of-flight spectrometer: forward map from wavelength
//! to arrival time, resolution budget, calibration and the inverse map from
//! timing histograms back to spectra.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dispersion::{fiber_dispersion, fiber_group_index, FiberSpec};
use crate::error::{Error, Result};
use crate::units::{compensated_sum, conjugate_wavelength, nm_to_um, C_M_PER_S};

/// |D| below this (ps/(nm·km)) is treated as the zero-dispersion point.
pub const SINGULAR_DISPERSION: f64 = 1e-3;

/// Bins further than this fraction of the calibrated span outside it are
/// flagged as extrapolated.
pub const EXTRAPOLATION_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    pub label: String,
    pub jitter_fwhm_ps: f64,
    pub efficiency: f64,
    pub dark_count_rate_hz: f64,
    pub gated: bool,
    /// Gate length; required when `gated`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_width_ns: Option<f64>,
    /// Gate opening relative to the triggering click.
    #[serde(default)]
    pub gate_delay_ns: f64,
}

impl DetectorSpec {
    /// Free-running InGaAs avalanche diode used as the trigger.
    pub fn free_running(label: &str, jitter_fwhm_ps: f64, efficiency: f64, dark_count_rate_hz: f64) -> Self {
        DetectorSpec {
            label: label.to_string(),
            jitter_fwhm_ps,
            efficiency,
            dark_count_rate_hz,
            gated: false,
            gate_width_ns: None,
            gate_delay_ns: 0.0,
        }
    }

    pub fn gated(label: &str, jitter_fwhm_ps: f64, efficiency: f64, dark_count_rate_hz: f64, gate_width_ns: f64) -> Self {
        DetectorSpec {
            gated: true,
            gate_width_ns: Some(gate_width_ns),
            ..Self::free_running(label, jitter_fwhm_ps, efficiency, dark_count_rate_hz)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Precondition(format!("detector '{}': {what}", self.label)));
        if !(self.jitter_fwhm_ps >= 0.0 && self.jitter_fwhm_ps.is_finite()) {
            return bad(format!("jitter_fwhm_ps must be >= 0, got {}", self.jitter_fwhm_ps));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return bad(format!("efficiency must lie in [0, 1], got {}", self.efficiency));
        }
        if !(self.dark_count_rate_hz >= 0.0 && self.dark_count_rate_hz.is_finite()) {
            return bad(format!("dark_count_rate_hz must be >= 0, got {}", self.dark_count_rate_hz));
        }
        if !self.gate_delay_ns.is_finite() {
            return bad("gate_delay_ns must be finite".into());
        }
        match (self.gated, self.gate_width_ns) {
            (true, Some(w)) if w > 0.0 && w.is_finite() => Ok(()),
            (true, w) => bad(format!("gated detector needs gate_width_ns > 0, got {w:?}")),
            (false, None) => Ok(()),
            (false, Some(_)) => bad("gate_width_ns is only meaningful for a gated detector".into()),
        }
    }

    /// Gate window in ps relative to the trigger, `None` if free-running.
    pub fn gate_window_ps(&self) -> Option<(f64, f64)> {
        let start = self.gate_delay_ns * 1e3;
        self.gate_width_ns.filter(|_| self.gated).map(|w| (start, start + w * 1e3))
    }
}

/// Transit time through the fiber plus its fixed offset, ps.
pub fn arrival_time(fiber: &FiberSpec, wavelength_nm: f64) -> Result<f64> {
    fiber.validate()?;
    let ng = fiber_group_index(fiber, nm_to_um(wavelength_nm))?;
    Ok(fiber.length_m * ng / C_M_PER_S * 1e12 + fiber.delay_offset_ps)
}

/// Arrival of a photon at λ_b through fiber B minus one at λ_a through fiber A, ps.
pub fn relative_delay(fiber_a: &FiberSpec, lambda_a_nm: f64, fiber_b: &FiberSpec, lambda_b_nm: f64) -> Result<f64> {
    Ok(arrival_time(fiber_b, lambda_b_nm)? - arrival_time(fiber_a, lambda_a_nm)?)
}

/// Quadrature sum of the two detector jitters and the tagger resolution, ps.
pub fn effective_timing_uncertainty(det_a: &DetectorSpec, det_b: &DetectorSpec, tagger_resolution_ps: f64) -> f64 {
    (det_a.jitter_fwhm_ps.powi(2) + det_b.jitter_fwhm_ps.powi(2) + tagger_resolution_ps.powi(2)).sqrt()
}

/// Wavelength resolution δλ = δt / (|D(λ)|·L), L the mean of the two fiber lengths.
pub fn resolution(
    fiber_a: &FiberSpec,
    fiber_b: &FiberSpec,
    det_a: &DetectorSpec,
    det_b: &DetectorSpec,
    tagger_resolution_ps: f64,
    wavelength_nm: f64,
) -> Result<f64> {
    fiber_a.validate()?;
    fiber_b.validate()?;
    det_a.validate()?;
    det_b.validate()?;
    if !(tagger_resolution_ps >= 0.0) {
        return Err(Error::Precondition(format!(
            "tagger resolution must be >= 0 ps, got {tagger_resolution_ps}"
        )));
    }
    let length_km = 0.5 * (fiber_a.length_m + fiber_b.length_m) * 1e-3;
    if !(length_km > 0.0) {
        return Err(Error::Precondition("fiber lengths sum to zero; there is no dispersion to exploit".into()));
    }
    // Both fibers share a profile in practice; average in case they don't.
    let lambda_um = nm_to_um(wavelength_nm);
    let d = 0.5 * (fiber_dispersion(fiber_a, lambda_um)? + fiber_dispersion(fiber_b, lambda_um)?);
    if d.abs() < SINGULAR_DISPERSION {
        return Err(Error::SingularResolution { wavelength_nm });
    }
    Ok(effective_timing_uncertainty(det_a, det_b, tagger_resolution_ps) / (d.abs() * length_km))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationModel {
    #[default]
    Affine,
    Quadratic,
}

impl CalibrationModel {
    pub fn terms(self) -> usize {
        match self {
            CalibrationModel::Affine => 2,
            CalibrationModel::Quadratic => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationPoint {
    pub wavelength_nm: f64,
    pub time_ps: f64,
}

/// λ(t) = Σ c_k (t − t_ref)^k, fitted by least squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationFit {
    pub model: CalibrationModel,
    pub reference_time_ps: f64,
    pub coefficients: Vec<f64>,
    pub references: Vec<CalibrationPoint>,
    /// Fitted minus reference wavelength, nm.
    pub residuals_nm: Vec<f64>,
}

impl CalibrationFit {
    pub fn wavelength_at(&self, time_ps: f64) -> f64 {
        let x = time_ps - self.reference_time_ps;
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// dλ/dt at `time_ps`, nm/ps.
    pub fn slope_at(&self, time_ps: f64) -> f64 {
        let x = time_ps - self.reference_time_ps;
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c * x.powi(k as i32 - 1))
            .sum()
    }

    pub fn time_span_ps(&self) -> (f64, f64) {
        self.references
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.time_ps), hi.max(p.time_ps)))
    }

    pub fn max_abs_residual_nm(&self) -> f64 {
        self.residuals_nm.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

pub fn calibrate(references: &[CalibrationPoint], model: CalibrationModel) -> Result<CalibrationFit> {
    let terms = model.terms();
    if references.len() < terms {
        return Err(Error::Usage(format!(
            "{model:?} calibration needs at least {terms} references, got {}",
            references.len()
        )));
    }
    for (k, a) in references.iter().enumerate() {
        if !(a.wavelength_nm.is_finite() && a.time_ps.is_finite()) {
            return Err(Error::Usage(format!("reference {k} is not finite")));
        }
        for b in &references[k + 1..] {
            if a.wavelength_nm == b.wavelength_nm {
                return Err(Error::Usage(format!("duplicate reference wavelength {} nm", a.wavelength_nm)));
            }
            if a.time_ps == b.time_ps {
                return Err(Error::Usage(format!(
                    "references at {} and {} nm share the time {} ps",
                    a.wavelength_nm, b.wavelength_nm, a.time_ps
                )));
            }
        }
    }
    let reference_time_ps = compensated_sum(references.iter().map(|p| p.time_ps)) / references.len() as f64;
    // Scale the regressor so the normal equations stay well conditioned.
    let scale = references
        .iter()
        .fold(0.0f64, |m, p| m.max((p.time_ps - reference_time_ps).abs()));
    let design = DMatrix::from_fn(references.len(), terms, |r, c| {
        ((references[r].time_ps - reference_time_ps) / scale).powi(c as i32)
    });
    let target = DVector::from_iterator(references.len(), references.iter().map(|p| p.wavelength_nm));
    let solution = design
        .svd(true, true)
        .solve(&target, 1e-12)
        .map_err(|e| Error::Model(format!("calibration least squares failed: {e}")))?;
    let coefficients: Vec<f64> = solution
        .iter()
        .enumerate()
        .map(|(k, c)| c / scale.powi(k as i32))
        .collect();
    let mut fit = CalibrationFit {
        model,
        reference_time_ps,
        coefficients,
        references: references.to_vec(),
        residuals_nm: Vec::new(),
    };
    fit.residuals_nm = references
        .iter()
        .map(|p| fit.wavelength_at(p.time_ps) - p.wavelength_nm)
        .collect();
    Ok(fit)
}

/// Counts of (gated − trigger) delays in uniform bins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingHistogram {
    pub bin_width_ps: i64,
    pub origin_ps: i64,
    pub counts: Vec<u64>,
    /// Spacing of the binned delays. Tagged delays sit on multiples of the
    /// tagger resolution, so the values in a bin average to
    /// `start + (width - tick) / 2` rather than the geometric middle.
    /// Zero means continuous delays.
    #[serde(default)]
    pub tick_ps: i64,
}

impl TimingHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_start(&self, k: usize) -> i64 {
        self.origin_ps + self.bin_width_ps * k as i64
    }

    pub fn bin_center(&self, k: usize) -> f64 {
        self.bin_start(k) as f64 + 0.5 * (self.bin_width_ps - self.tick_ps) as f64
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub lambda_s_nm: f64,
    /// Conjugate wavelength under CW energy conservation, when a pump is given.
    pub lambda_i_nm: Option<f64>,
    /// Counts per nm.
    pub density: f64,
    /// Width of the bin mapped to wavelength, nm.
    pub bin_width_nm: f64,
    pub extrapolated: bool,
}

/// Map a histogram through a calibration into a spectral density.
pub fn reconstruct_spectrum(
    hist: &TimingHistogram,
    fit: &CalibrationFit,
    pump_wavelength_nm: Option<f64>,
) -> Result<Vec<SpectrumPoint>> {
    if hist.is_empty() {
        return Err(Error::Usage("histogram has no bins".into()));
    }
    let (t_lo, t_hi) = fit.time_span_ps();
    let margin = EXTRAPOLATION_MARGIN * (t_hi - t_lo);
    hist.counts
        .iter()
        .enumerate()
        .map(|(k, &count)| {
            let center = hist.bin_center(k);
            let start = center - 0.5 * hist.bin_width_ps as f64;
            let end = center + 0.5 * hist.bin_width_ps as f64;
            let width_nm = (fit.wavelength_at(end) - fit.wavelength_at(start)).abs();
            if !(width_nm > 0.0) {
                return Err(Error::Model(format!(
                    "calibration is flat across the bin starting at {start} ps"
                )));
            }
            let lambda_s = fit.wavelength_at(center);
            Ok(SpectrumPoint {
                lambda_s_nm: lambda_s,
                lambda_i_nm: pump_wavelength_nm.map(|p| conjugate_wavelength(p, lambda_s)),
                density: count as f64 / width_nm,
                bin_width_nm: width_nm,
                extrapolated: center < t_lo - margin || center > t_hi + margin,
            })
        })
        .collect()
}
