use serde::{Deserialize, Serialize};

use super::golden_section_min;
use super::grid::{apply_pump, JointSpectrumGrid};
use super::metrics::{metrics, moments, CorrelationMetrics};
use super::pump::PumpSpec;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};

const REFINE_TOLERANCE_NM: f64 = 1e-4;

/// Pump bandwidths (intensity FWHM, nm) to scan, linearly spaced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthRange {
    pub min_nm: f64,
    pub max_nm: f64,
    pub samples: usize,
}

impl BandwidthRange {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_nm > 0.0 && self.max_nm >= self.min_nm && self.max_nm.is_finite()) {
            return Err(Error::Usage(format!(
                "bandwidth range [{}, {}] nm must be positive and ordered",
                self.min_nm, self.max_nm
            )));
        }
        if self.samples < 3 {
            return Err(Error::Usage(format!(
                "a bandwidth scan needs at least 3 samples, got {}",
                self.samples
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let step = (self.max_nm - self.min_nm) / (self.samples - 1) as f64;
        (0..self.samples).map(|k| self.min_nm + step * k as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecorrelationScan {
    pub best_bandwidth_nm: f64,
    pub metrics: CorrelationMetrics,
    /// Set when the minimum of |pearson| sits on an end of the range, i.e.
    /// the range was probably too narrow.
    pub at_boundary: bool,
    /// (bandwidth, pearson) for every coarse sample.
    pub coarse: Vec<(f64, f64)>,
}

fn pearson_at(epmf: &JointSpectrumGrid, pump_nm: f64, bandwidth_nm: f64) -> Result<f64> {
    let psi = apply_pump(epmf, &PumpSpec::pulsed(pump_nm, bandwidth_nm), Execution::Sequential)?;
    Ok(moments(&psi).pearson())
}

/// Pulsed-pump bandwidth that minimizes |pearson| of Θ·A.
///
/// `epmf` is the sampled Θ (any normalization); the pump is centred on
/// `pump_nm`. A coarse scan brackets the minimum and golden-section search
/// refines it.
pub fn decorrelation_scan(
    epmf: &JointSpectrumGrid,
    pump_nm: f64,
    range: BandwidthRange,
    exec: Execution,
) -> Result<DecorrelationScan> {
    range.validate()?;
    let bws = range.values();
    let pearsons = map_indexed(exec, bws.len(), |k| pearson_at(epmf, pump_nm, bws[k]))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let coarse: Vec<(f64, f64)> = bws.iter().copied().zip(pearsons.iter().copied()).collect();

    let (k, _) = pearsons
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("validated non-empty");
    let n = bws.len();
    let degenerate = range.max_nm == range.min_nm;
    let best = if degenerate {
        bws[0]
    } else {
        let lo = bws[k.saturating_sub(1)];
        let hi = bws[(k + 1).min(n - 1)];
        golden_section_min(
            |b| pearson_at(epmf, pump_nm, b).map(f64::abs).unwrap_or(f64::INFINITY),
            lo,
            hi,
            REFINE_TOLERANCE_NM,
        )
    };
    let at_boundary = degenerate || k == 0 || k == n - 1;
    let psi = apply_pump(epmf, &PumpSpec::pulsed(pump_nm, best), exec)?;
    Ok(DecorrelationScan {
        best_bandwidth_nm: best,
        metrics: metrics(&psi)?,
        at_boundary,
        coarse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epmf::grid::{sample_grid, GridSpec};
    use crate::units::{angular_frequency, C_UM_PER_PS, FWHM_PER_SIGMA};
    use num_complex::Complex64;

    const PUMP: f64 = 775.0;

    // Θ Gaussian in frequency detunings, long axis exactly along +45°.
    // Intensity sigmas: `a` along the diagonal, `b` across it (rad/ps).
    fn rotated(a: f64, b: f64) -> impl Fn(f64, f64) -> Result<Complex64> + Sync {
        let w0 = angular_frequency(2.0 * PUMP);
        move |ls, li| {
            let (x, y) = (angular_frequency(ls) - w0, angular_frequency(li) - w0);
            let u = (x + y) / std::f64::consts::SQRT_2;
            let v = (x - y) / std::f64::consts::SQRT_2;
            Ok(Complex64::new((-u * u / (4.0 * a * a) - v * v / (4.0 * b * b)).exp(), 0.0))
        }
    }

    fn sigma_omega_to_fwhm_nm(sigma: f64) -> f64 {
        let lp = PUMP * 1e-3;
        sigma * FWHM_PER_SIGMA * lp * lp / (std::f64::consts::TAU * C_UM_PER_PS) * 1e3
    }

    #[test]
    fn synthetic_diagonal_ridge_matches_gaussian_algebra() {
        let (a, b): (f64, f64) = (6.0, 2.0);
        // Pump intensity exp(−(x+y)²/2σ²) narrows u to 1/a² + 2/σ²; equal to 1/b² at decorrelation.
        let sigma = (2.0 / (1.0 / (b * b) - 1.0 / (a * a))).sqrt();
        let expected = sigma_omega_to_fwhm_nm(sigma);
        let grid = sample_grid(&rotated(a, b), &GridSpec::square(1550.0, 40.0, 128), Execution::Parallel).unwrap();
        let r = decorrelation_scan(
            &grid,
            PUMP,
            BandwidthRange { min_nm: 0.2 * expected, max_nm: 3.0 * expected, samples: 12 },
            Execution::Parallel,
        )
        .unwrap();
        assert!(!r.at_boundary);
        let rel = (r.best_bandwidth_nm - expected).abs() / expected;
        assert!(rel < 0.02, "{} vs {expected}", r.best_bandwidth_nm);
        assert!(r.metrics.pearson.abs() < 0.01);
        assert!(r.metrics.purity > 0.99);
    }

    #[test]
    fn degenerate_range_returns_that_bandwidth_with_warning() {
        let grid = sample_grid(&rotated(6.0, 2.0), &GridSpec::square(1550.0, 40.0, 32), Execution::Sequential).unwrap();
        let r = decorrelation_scan(
            &grid,
            PUMP,
            BandwidthRange { min_nm: 4.0, max_nm: 4.0, samples: 3 },
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(r.best_bandwidth_nm, 4.0);
        assert!(r.at_boundary);
    }

    #[test]
    fn too_few_samples_is_usage_error() {
        let grid = sample_grid(&rotated(6.0, 2.0), &GridSpec::square(1550.0, 40.0, 16), Execution::Sequential).unwrap();
        let r = decorrelation_scan(&grid, PUMP, BandwidthRange { min_nm: 1.0, max_nm: 2.0, samples: 2 }, Execution::Sequential);
        assert!(matches!(r, Err(Error::Usage(_))));
    }
}
