use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::model::JointAmplitude;
use super::pump::{pump_envelope, PumpKind, PumpSpec};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::units::compensated_sum;

pub const MIN_GRID_POINTS: usize = 8;
pub const DEFAULT_GRID_POINTS: usize = 256;
pub const DEFAULT_HALF_WIDTH_NM: f64 = 40.0;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Uniform axis: `points` samples from `min_nm` to `max_nm` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub min_nm: f64,
    pub max_nm: f64,
    pub points: usize,
}

impl AxisSpec {
    pub fn centered(center_nm: f64, half_width_nm: f64, points: usize) -> Self {
        AxisSpec {
            min_nm: center_nm - half_width_nm,
            max_nm: center_nm + half_width_nm,
            points,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let step = self.step();
        (0..self.points).map(|k| self.min_nm + step * k as f64).collect()
    }

    pub fn step(&self) -> f64 {
        if self.points < 2 {
            0.0
        } else {
            (self.max_nm - self.min_nm) / (self.points - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub signal: AxisSpec,
    pub idler: AxisSpec,
}

impl GridSpec {
    /// Square grid of `points`² samples, ±`half_width_nm` around `center_nm`
    /// on both axes.
    pub fn square(center_nm: f64, half_width_nm: f64, points: usize) -> Self {
        let axis = AxisSpec::centered(center_nm, half_width_nm, points);
        GridSpec {
            signal: axis,
            idler: axis,
        }
    }

    /// Default 256×256 grid over ±40 nm around the degenerate point 2λ_p.
    pub fn default_for_pump(pump_nm: f64) -> Self {
        Self::square(2.0 * pump_nm, DEFAULT_HALF_WIDTH_NM, DEFAULT_GRID_POINTS)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("signal", self.signal), ("idler", self.idler)] {
            if a.points < MIN_GRID_POINTS {
                return Err(Error::Usage(format!(
                    "{name} axis has {} points; at least {MIN_GRID_POINTS} are needed for reliable metrics",
                    a.points
                )));
            }
            if !(a.min_nm > 0.0 && a.max_nm > a.min_nm) {
                return Err(Error::Usage(format!(
                    "{name} axis range [{}, {}] nm is not increasing",
                    a.min_nm, a.max_nm
                )));
            }
        }
        Ok(())
    }
}

/// Complex joint amplitude sampled on a uniform (λ_s, λ_i) grid.
///
/// Row-major: `amplitude[s * idler_len + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectrumGrid {
    signal_axis: Vec<f64>,
    idler_axis: Vec<f64>,
    amplitude: Vec<Complex64>,
    normalized: bool,
}

fn check_axis(name: &str, axis: &[f64]) -> Result<f64> {
    if axis.len() < 2 {
        return Err(Error::Usage(format!("{name} axis needs at least two points")));
    }
    let step = axis[1] - axis[0];
    if !(step > 0.0) {
        return Err(Error::Usage(format!("{name} axis must be strictly increasing")));
    }
    for w in axis.windows(2) {
        let d = w[1] - w[0];
        if !(d > 0.0) || (d - step).abs() > 1e-9 * step.max(1.0) {
            return Err(Error::Usage(format!("{name} axis must be uniform and strictly increasing")));
        }
    }
    Ok(step)
}

impl JointSpectrumGrid {
    pub fn new(signal_axis: Vec<f64>, idler_axis: Vec<f64>, amplitude: Vec<Complex64>) -> Result<Self> {
        check_axis("signal", &signal_axis)?;
        check_axis("idler", &idler_axis)?;
        if amplitude.len() != signal_axis.len() * idler_axis.len() {
            return Err(Error::Usage(format!(
                "amplitude has {} entries, axes need {}x{}",
                amplitude.len(),
                signal_axis.len(),
                idler_axis.len()
            )));
        }
        Ok(JointSpectrumGrid {
            signal_axis,
            idler_axis,
            amplitude,
            normalized: false,
        })
    }

    pub fn signal_axis(&self) -> &[f64] {
        &self.signal_axis
    }

    pub fn idler_axis(&self) -> &[f64] {
        &self.idler_axis
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.signal_axis.len(), self.idler_axis.len())
    }

    pub fn signal_step(&self) -> f64 {
        self.signal_axis[1] - self.signal_axis[0]
    }

    pub fn idler_step(&self) -> f64 {
        self.idler_axis[1] - self.idler_axis[0]
    }

    pub fn cell_area(&self) -> f64 {
        self.signal_step() * self.idler_step()
    }

    #[inline]
    pub fn at(&self, s: usize, i: usize) -> Complex64 {
        self.amplitude[s * self.idler_axis.len() + i]
    }

    /// |ψ|² per grid point, row-major.
    pub fn intensity(&self) -> Vec<f64> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Σ|ψ|²·Δλ_s·Δλ_i, summed in a fixed order.
    pub fn norm_integral(&self) -> f64 {
        compensated_sum(self.amplitude.iter().map(|a| a.norm_sqr())) * self.cell_area()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized && (self.norm_integral() - 1.0).abs() <= NORMALIZATION_TOLERANCE
    }

    pub fn normalize(&mut self) -> Result<()> {
        let total = self.norm_integral();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::NoSignal { peak: total.sqrt() });
        }
        let scale = 1.0 / total.sqrt();
        for a in &mut self.amplitude {
            *a *= scale;
        }
        self.normalized = true;
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// Swap the roles of signal and idler.
    pub fn transposed(&self) -> Self {
        let (ns, ni) = self.shape();
        let mut amp = Vec::with_capacity(ns * ni);
        for i in 0..ni {
            for s in 0..ns {
                amp.push(self.at(s, i));
            }
        }
        JointSpectrumGrid {
            signal_axis: self.idler_axis.clone(),
            idler_axis: self.signal_axis.clone(),
            amplitude: amp,
            normalized: self.normalized,
        }
    }

    /// Multiply every amplitude by `f(λ_s, λ_i)`; clears the normalization flag.
    pub fn map<F>(&self, exec: Execution, f: F) -> Result<Self>
    where
        F: Fn(f64, f64, Complex64) -> Result<Complex64> + Sync + Send,
    {
        let ni = self.idler_axis.len();
        let rows = map_indexed(exec, self.signal_axis.len(), |s| {
            let ls = self.signal_axis[s];
            (0..ni)
                .map(|i| f(ls, self.idler_axis[i], self.amplitude[s * ni + i]))
                .collect::<Result<Vec<_>>>()
        });
        let mut amplitude = Vec::with_capacity(self.amplitude.len());
        for row in rows {
            amplitude.extend(row?);
        }
        Ok(JointSpectrumGrid {
            signal_axis: self.signal_axis.clone(),
            idler_axis: self.idler_axis.clone(),
            amplitude,
            normalized: false,
        })
    }
}

/// Sample any joint amplitude on a grid (not normalized).
pub fn sample_grid<A: JointAmplitude + ?Sized>(source: &A, spec: &GridSpec, exec: Execution) -> Result<JointSpectrumGrid> {
    spec.validate()?;
    let signal = spec.signal.values();
    let idler = spec.idler.values();
    let rows = map_indexed(exec, signal.len(), |s| {
        idler
            .iter()
            .map(|&li| source.amplitude(signal[s], li))
            .collect::<Result<Vec<_>>>()
    });
    let mut amplitude = Vec::with_capacity(signal.len() * idler.len());
    for row in rows {
        amplitude.extend(row?);
    }
    JointSpectrumGrid::new(signal, idler, amplitude)
}

/// Θ on a grid, unnormalized (pump factor unity).
pub fn epmf_grid<A: JointAmplitude + ?Sized>(epmf: &A, spec: &GridSpec, exec: Execution) -> Result<JointSpectrumGrid> {
    sample_grid(epmf, spec, exec)
}

fn require_pulsed(pump: &PumpSpec) -> Result<()> {
    pump.validate()?;
    if pump.kind == PumpKind::Cw {
        return Err(Error::Usage(
            "joint_spectrum needs a pulsed pump; use cw_slice for CW pumping".into(),
        ));
    }
    Ok(())
}

/// Normalized ψ = Θ·A for a pulsed pump.
pub fn joint_spectrum<A: JointAmplitude + ?Sized>(
    epmf: &A,
    pump: &PumpSpec,
    spec: &GridSpec,
    exec: Execution,
) -> Result<JointSpectrumGrid> {
    require_pulsed(pump)?;
    spec.validate()?;
    let grid = sample_grid(
        &|ls: f64, li: f64| -> Result<Complex64> { Ok(epmf.amplitude(ls, li)? * pump_envelope(pump, ls, li)?) },
        spec,
        exec,
    )?;
    grid.normalized()
}

/// ψ = Θ·A from an already sampled Θ grid, normalized.
pub fn apply_pump(epmf: &JointSpectrumGrid, pump: &PumpSpec, exec: Execution) -> Result<JointSpectrumGrid> {
    require_pulsed(pump)?;
    let (ns, ni) = epmf.shape();
    if ns < MIN_GRID_POINTS || ni < MIN_GRID_POINTS {
        return Err(Error::Usage(format!(
            "grid {ns}x{ni} is smaller than {MIN_GRID_POINTS}x{MIN_GRID_POINTS}"
        )));
    }
    epmf.map(exec, |ls, li, a| Ok(a * pump_envelope(pump, ls, li)?))?
        .normalized()
}
