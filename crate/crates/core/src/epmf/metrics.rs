use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::JointSpectrumGrid;
use crate::error::{Error, Result};
use crate::units::compensated_sum;

/// Spectral-correlation summary of a normalized joint spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMetrics {
    /// Pearson coefficient of |ψ|² as a distribution over (λ_s, λ_i).
    pub pearson: f64,
    pub schmidt_number: f64,
    pub purity: f64,
    pub marginal_fwhm_signal_nm: Option<f64>,
    pub marginal_fwhm_idler_nm: Option<f64>,
    /// Principal-axis angle of the intensity covariance in the (λ_s, λ_i)
    /// plane, degrees in (−90, 90].
    pub ridge_angle_deg: f64,
    pub mean_signal_nm: f64,
    pub mean_idler_nm: f64,
}

/// Second moments of |ψ|² over the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean_s: f64,
    pub mean_i: f64,
    pub var_s: f64,
    pub var_i: f64,
    pub cov: f64,
}

impl Moments {
    pub fn pearson(&self) -> f64 {
        let d = (self.var_s * self.var_i).sqrt();
        if d > 0.0 {
            (self.cov / d).clamp(-1.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn ridge_angle_deg(&self) -> f64 {
        0.5 * (2.0 * self.cov).atan2(self.var_s - self.var_i).to_degrees()
    }
}

/// Intensity moments; works on unnormalized grids too.
pub fn moments(grid: &JointSpectrumGrid) -> Moments {
    let (ns, ni) = grid.shape();
    let s_axis = grid.signal_axis();
    let i_axis = grid.idler_axis();
    let w = grid.intensity();
    let total = compensated_sum(w.iter().copied());
    let idx = |k: usize| (k / ni, k % ni);
    let mean_s = compensated_sum(w.iter().enumerate().map(|(k, p)| p * s_axis[idx(k).0])) / total;
    let mean_i = compensated_sum(w.iter().enumerate().map(|(k, p)| p * i_axis[idx(k).1])) / total;
    let var_s = compensated_sum(w.iter().enumerate().map(|(k, p)| p * (s_axis[idx(k).0] - mean_s).powi(2))) / total;
    let var_i = compensated_sum(w.iter().enumerate().map(|(k, p)| p * (i_axis[idx(k).1] - mean_i).powi(2))) / total;
    let cov = compensated_sum(
        w.iter()
            .enumerate()
            .map(|(k, p)| p * (s_axis[idx(k).0] - mean_s) * (i_axis[idx(k).1] - mean_i)),
    ) / total;
    debug_assert_eq!(w.len(), ns * ni);
    Moments {
        mean_s,
        mean_i,
        var_s,
        var_i,
        cov,
    }
}

/// FWHM of a sampled profile by linear interpolation of the half-maximum
/// crossings nearest the peak. `None` if either side never drops below half.
pub fn fwhm(axis: &[f64], values: &[f64]) -> Option<f64> {
    let (peak_k, &peak) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if !(peak > 0.0) {
        return None;
    }
    let half = 0.5 * peak;
    let cross = |a: usize, b: usize| {
        let t = (values[a] - half) / (values[a] - values[b]);
        axis[a] + t * (axis[b] - axis[a])
    };
    let left = (1..=peak_k).rev().find(|&k| values[k - 1] < half).map(|k| cross(k, k - 1))?;
    let right = (peak_k..values.len() - 1)
        .find(|&k| values[k + 1] < half)
        .map(|k| cross(k, k + 1))?;
    Some(right - left)
}

/// Schmidt number K = 1/Σσ⁴ of the amplitude matrix scaled to Σσ² = 1.
pub fn schmidt_number(grid: &JointSpectrumGrid) -> f64 {
    let (ns, ni) = grid.shape();
    let scale = grid.cell_area().sqrt();
    let m = DMatrix::<Complex64>::from_fn(ns, ni, |s, i| grid.at(s, i) * scale);
    let sv = m.singular_values();
    let norm = compensated_sum(sv.iter().map(|s| s * s));
    let inv_k = compensated_sum(sv.iter().map(|s| (s * s / norm).powi(2)));
    1.0 / inv_k
}

pub fn metrics(grid: &JointSpectrumGrid) -> Result<CorrelationMetrics> {
    if !grid.is_normalized() {
        return Err(Error::Usage(
            "metrics need a normalized grid (normalize() it first)".into(),
        ));
    }
    let m = moments(grid);
    let (ns, ni) = grid.shape();
    let w = grid.intensity();
    let marginal_s: Vec<f64> = (0..ns).map(|s| compensated_sum(w[s * ni..(s + 1) * ni].iter().copied())).collect();
    let marginal_i: Vec<f64> = (0..ni).map(|i| compensated_sum((0..ns).map(|s| w[s * ni + i]))).collect();
    let k = schmidt_number(grid);
    Ok(CorrelationMetrics {
        pearson: m.pearson(),
        schmidt_number: k,
        purity: 1.0 / k,
        marginal_fwhm_signal_nm: fwhm(grid.signal_axis(), &marginal_s),
        marginal_fwhm_idler_nm: fwhm(grid.idler_axis(), &marginal_i),
        ridge_angle_deg: m.ridge_angle_deg(),
        mean_signal_nm: m.mean_s,
        mean_idler_nm: m.mean_i,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epmf::grid::{sample_grid, GridSpec};
    use crate::exec::Execution;

    fn grid_of<F: Fn(f64, f64) -> f64 + Sync>(f: F) -> JointSpectrumGrid {
        sample_grid(
            &|s: f64, i: f64| -> Result<Complex64> { Ok(Complex64::new(f(s - 1550.0, i - 1550.0), 0.0)) },
            &GridSpec::square(1550.0, 30.0, 96),
            Execution::Sequential,
        )
        .unwrap()
        .normalized()
        .unwrap()
    }

    #[test]
    fn separable_gaussian_is_uncorrelated_and_pure() {
        let g = grid_of(|x, y| (-x * x / 40.0 - y * y / 15.0).exp());
        let m = metrics(&g).unwrap();
        assert!(m.pearson.abs() < 1e-12);
        assert!((m.schmidt_number - 1.0).abs() < 1e-9);
        assert!((m.purity - 1.0 / m.schmidt_number).abs() < 1e-12);
    }

    #[test]
    fn narrow_antidiagonal_is_anticorrelated() {
        let g = grid_of(|x, y| (-(x + y).powi(2) / 0.5 - (x - y).powi(2) / 400.0).exp());
        let m = metrics(&g).unwrap();
        assert!(m.pearson < -0.99, "{}", m.pearson);
        assert!((m.ridge_angle_deg + 45.0).abs() < 0.5, "{}", m.ridge_angle_deg);
    }

    #[test]
    fn unnormalized_grid_is_usage_error() {
        let g = sample_grid(
            &|_: f64, _: f64| -> Result<Complex64> { Ok(Complex64::new(2.0, 0.0)) },
            &GridSpec::square(1550.0, 10.0, 16),
            Execution::Sequential,
        )
        .unwrap();
        assert!(matches!(metrics(&g), Err(Error::Usage(_))));
    }

    #[test]
    fn global_phase_and_transpose_leave_k_unchanged() {
        let g = grid_of(|x, y| (-(x - y).powi(2) / 10.0 - (x + y).powi(2) / 300.0).exp());
        let k = schmidt_number(&g);
        let phased = g
            .map(Execution::Sequential, |_, _, a| Ok(a * Complex64::from_polar(1.0, 0.7)))
            .unwrap()
            .normalized()
            .unwrap();
        assert!((schmidt_number(&phased) - k).abs() < 1e-9 * k);
        assert!((schmidt_number(&g.transposed()) - k).abs() < 1e-9 * k);
        assert!(k > 1.5);
    }

    #[test]
    fn fwhm_of_sampled_gaussian() {
        let axis: Vec<f64> = (0..2001).map(|k| -10.0 + 0.01 * k as f64).collect();
        let sigma: f64 = 1.3;
        let v: Vec<f64> = axis.iter().map(|x| (-x * x / (2.0 * sigma * sigma)).exp()).collect();
        let w = fwhm(&axis, &v).unwrap();
        assert!((w - 2.354_820_045 * sigma).abs() < 1e-4);
        assert_eq!(fwhm(&axis[..1000], &v[..1000]), None);
    }
}
