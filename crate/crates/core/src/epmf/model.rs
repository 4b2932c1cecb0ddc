//! Effective phase-matching function of the fiber-coupled source.
//!
//! Θ(λ_s, λ_i) is the overlap, in transverse momentum, of the Gaussian pump
//! mode with the two Gaussian collection modes (centred on the ±emission
//! directions), weighted by the crystal response to the longitudinal
//! mismatch Δk_z. The pump wave is evaluated at the sum frequency, so Θ
//! carries the full two-dimensional structure and the pump spectrum only
//! enters through [`super::pump_envelope`].
//!
//! Two evaluation paths are provided:
//!
//! * `GaussianSinc`: sinc(x) → exp(−γx²), Δk_z linear in the transverse
//!   momenta around the mode centres; the four-dimensional Gaussian integral
//!   is then closed form. The mismatch and its gradient are either evaluated
//!   exactly at every (λ_s, λ_i) or Taylor expanded in frequency about the
//!   degenerate point.
//! * `Quadrature`: nested Gauss–Hermite over the four transverse momenta with
//!   the exact wavevectors and (by default) the true sinc. Used as the oracle
//!   for the closed form.
//!
//! Both are normalized so that a perfectly phase-matched, perfectly
//! overlapping point has |Θ| = 1.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::gauss_hermite;
use crate::dispersion::CrystalSpec;
use crate::error::{Error, Result};
use crate::phasematching::{internal_pump_axis_angle, medium, SourceGeometry};
use crate::units::{angular_frequency, nm_to_um, sum_frequency_wavelength, wavelength_from_angular};
use crate::wavevector::{self, Axis, Medium};

/// sinc(x) ≈ exp(−γx²) with matched amplitude FWHM.
pub const GAUSSIAN_SINC_GAMMA: f64 = 0.193;

pub const DEFAULT_QUADRATURE_ORDER: usize = 15;

/// Anything that can be evaluated as a joint spectral amplitude.
pub trait JointAmplitude: Sync {
    fn amplitude(&self, lambda_s_nm: f64, lambda_i_nm: f64) -> Result<Complex64>;
}

impl<F> JointAmplitude for F
where
    F: Fn(f64, f64) -> Result<Complex64> + Sync,
{
    fn amplitude(&self, lambda_s_nm: f64, lambda_i_nm: f64) -> Result<Complex64> {
        self(lambda_s_nm, lambda_i_nm)
    }
}

/// How Δk_z and its transverse gradient depend on frequency in the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyExpansion {
    /// Evaluated from the full dispersion at every point.
    #[default]
    Exact,
    /// First-order Taylor expansion about the degenerate point.
    First,
    /// Second-order expansion of Δk_z, gradient held at first order.
    Second,
}

/// Crystal response to the longitudinal mismatch x = Δk_z·L/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrystalResponse {
    Sinc,
    GaussianSinc,
}

impl CrystalResponse {
    #[inline]
    fn eval(self, x: f64) -> f64 {
        match self {
            CrystalResponse::Sinc => {
                if x.abs() < 1e-8 {
                    1.0 - x * x / 6.0
                } else {
                    x.sin() / x
                }
            }
            CrystalResponse::GaussianSinc => (-GAUSSIAN_SINC_GAMMA * x * x).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "path", rename_all = "snake_case")]
pub enum EpmfPath {
    GaussianSinc { expansion: FrequencyExpansion },
    Quadrature { order: usize, response: CrystalResponse },
}

impl Default for EpmfPath {
    fn default() -> Self {
        EpmfPath::GaussianSinc {
            expansion: FrequencyExpansion::Exact,
        }
    }
}

impl EpmfPath {
    pub fn quadrature_oracle() -> Self {
        EpmfPath::Quadrature {
            order: DEFAULT_QUADRATURE_ORDER,
            response: CrystalResponse::Sinc,
        }
    }
}

/// Δk_z at the mode centres with its gradient in (δq_s, δq_i) and the total
/// transverse momentum of the two mode centres.
#[derive(Debug, Clone, Copy)]
struct Linearization {
    delta: f64,
    gradient: [f64; 4],
    q_total_x: f64,
}

#[derive(Debug, Clone)]
struct Taylor {
    omega0: f64,
    delta0: f64,
    d_s: f64,
    d_i: f64,
    d_ss: f64,
    d_ii: f64,
    d_si: f64,
    gradient0: [f64; 4],
    second: bool,
}

#[derive(Debug, Clone)]
struct Rule {
    /// Transverse momentum offsets, rad/um.
    offsets: Vec<f64>,
    weights: Vec<f64>,
    /// (2/w_c)^4, the Jacobian of the node scaling.
    jacobian: f64,
    response: CrystalResponse,
}

/// The source EPMF for one crystal and collection geometry.
#[derive(Debug, Clone)]
pub struct EpmfModel {
    crystal: CrystalSpec,
    geometry: SourceGeometry,
    theta_deg: f64,
    axis: Axis,
    path: EpmfPath,
    sin_alpha: f64,
    beta: f64,
    // Inverse and determinant of the mode-only quadratic form.
    modes_inv: Matrix4<f64>,
    modes_det: f64,
    taylor: Option<Taylor>,
    rule: Option<Rule>,
}

impl EpmfModel {
    /// Closed-form model at the crystal's internal pump–axis angle.
    pub fn new(crystal: &CrystalSpec, geometry: &SourceGeometry) -> Result<Self> {
        Self::with_path(crystal, geometry, EpmfPath::default())
    }

    pub fn with_path(crystal: &CrystalSpec, geometry: &SourceGeometry, path: EpmfPath) -> Result<Self> {
        crystal.validate()?;
        geometry.validate()?;
        let theta_deg = internal_pump_axis_angle(crystal, geometry.pump_wavelength_nm)?;
        let wc2 = geometry.collection_waist_um.powi(2);
        let wp2 = geometry.pump_waist_um.powi(2);
        let mut modes = Matrix4::<f64>::identity() * (0.5 * wc2);
        for (r, c) in [(0, 0), (1, 1), (2, 2), (3, 3), (0, 2), (2, 0), (1, 3), (3, 1)] {
            modes[(r, c)] += 0.5 * wp2;
        }
        let modes_det = modes.determinant();
        let modes_inv = modes
            .try_inverse()
            .ok_or_else(|| Error::Model("singular mode overlap matrix".into()))?;
        let l = crystal.length_um();
        let mut model = EpmfModel {
            crystal: *crystal,
            geometry: *geometry,
            theta_deg,
            axis: Axis::from_deg(theta_deg),
            path,
            sin_alpha: geometry.external_emission_angle_deg.to_radians().sin(),
            beta: GAUSSIAN_SINC_GAMMA * l * l / 4.0,
            modes_inv,
            modes_det,
            taylor: None,
            rule: None,
        };
        match path {
            EpmfPath::GaussianSinc { expansion } => {
                if expansion != FrequencyExpansion::Exact {
                    model.taylor = Some(model.build_taylor(expansion == FrequencyExpansion::Second)?);
                }
            }
            EpmfPath::Quadrature { order, response } => {
                let (x, w) = gauss_hermite(order)?;
                let scale = 2.0 / geometry.collection_waist_um;
                model.rule = Some(Rule {
                    offsets: x.iter().map(|x| x * scale).collect(),
                    weights: w,
                    jacobian: scale.powi(4),
                    response,
                });
            }
        }
        Ok(model)
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta_deg
    }

    pub fn path(&self) -> EpmfPath {
        self.path
    }

    pub fn crystal(&self) -> &CrystalSpec {
        &self.crystal
    }

    pub fn geometry(&self) -> &SourceGeometry {
        &self.geometry
    }

    fn media(&self, lambda_s_nm: f64, lambda_i_nm: f64) -> Result<(Medium, Medium, Medium)> {
        let lambda_p_nm = sum_frequency_wavelength(lambda_s_nm, lambda_i_nm);
        Ok((
            medium(&self.crystal, nm_to_um(lambda_p_nm))?,
            medium(&self.crystal, nm_to_um(lambda_s_nm))?,
            medium(&self.crystal, nm_to_um(lambda_i_nm))?,
        ))
    }

    fn linearize(&self, lambda_s_nm: f64, lambda_i_nm: f64) -> Result<Linearization> {
        let (p, s, i) = self.media(lambda_s_nm, lambda_i_nm)?;
        let qs = s.k0 * self.sin_alpha;
        let qi = -i.k0 * self.sin_alpha;
        let q_total_x = qs + qi;
        let kp = wavevector::extraordinary_with_gradient(&p, self.axis, q_total_x, 0.0);
        let ks = wavevector::ordinary_with_gradient(&s, qs, 0.0);
        let ki = wavevector::extraordinary_with_gradient(&i, self.axis, qi, 0.0);
        Ok(Linearization {
            delta: kp.kz - ks.kz - ki.kz,
            gradient: [
                kp.dqx - ks.dqx,
                kp.dqy - ks.dqy,
                kp.dqx - ki.dqx,
                kp.dqy - ki.dqy,
            ],
            q_total_x,
        })
    }

    fn build_taylor(&self, second: bool) -> Result<Taylor> {
        let center_nm = 2.0 * self.geometry.pump_wavelength_nm;
        let omega0 = angular_frequency(center_nm);
        let h = 0.02; // rad/ps
        let at = |ds: f64, di: f64| -> Result<f64> {
            Ok(self
                .linearize(wavelength_from_angular(omega0 + ds), wavelength_from_angular(omega0 + di))?
                .delta)
        };
        let base = self.linearize(center_nm, center_nm)?;
        let f0 = base.delta;
        let (fsp, fsm) = (at(h, 0.0)?, at(-h, 0.0)?);
        let (fip, fim) = (at(0.0, h)?, at(0.0, -h)?);
        let d_si = (at(h, h)? - at(h, -h)? - at(-h, h)? + at(-h, -h)?) / (4.0 * h * h);
        Ok(Taylor {
            omega0,
            delta0: f0,
            d_s: (fsp - fsm) / (2.0 * h),
            d_i: (fip - fim) / (2.0 * h),
            d_ss: (fsp - 2.0 * f0 + fsm) / (h * h),
            d_ii: (fip - 2.0 * f0 + fim) / (h * h),
            d_si,
            gradient0: base.gradient,
            second,
        })
    }

    fn expanded(&self, t: &Taylor, lambda_s_nm: f64, lambda_i_nm: f64) -> Result<Linearization> {
        let (_, s, i) = self.media(lambda_s_nm, lambda_i_nm)?;
        let ns = angular_frequency(lambda_s_nm) - t.omega0;
        let ni = angular_frequency(lambda_i_nm) - t.omega0;
        let mut delta = t.delta0 + t.d_s * ns + t.d_i * ni;
        if t.second {
            delta += 0.5 * (t.d_ss * ns * ns + t.d_ii * ni * ni) + t.d_si * ns * ni;
        }
        Ok(Linearization {
            delta,
            gradient: t.gradient0,
            q_total_x: (s.k0 - i.k0) * self.sin_alpha,
        })
    }

    /// Closed-form Gaussian integral, normalized by the mode-only integral.
    fn gaussian_overlap(&self, lin: &Linearization) -> f64 {
        let wp2 = self.geometry.pump_waist_um.powi(2);
        let kappa = 2.0 * self.beta;
        let g = Vector4::from(lin.gradient);
        // h = (w_p²/2)·Pᵀ·Q0 + 2β·Δ·g
        let h = Vector4::new(lin.q_total_x, 0.0, lin.q_total_x, 0.0) * (0.5 * wp2) + g * (kappa * lin.delta);
        let c0 = 0.25 * wp2 * lin.q_total_x * lin.q_total_x + self.beta * lin.delta * lin.delta;
        // Rank-one update M = M0 + κ g gᵀ (Sherman–Morrison).
        let u = self.modes_inv * g;
        let s = g.dot(&u);
        let uh = u.dot(&h);
        let quad = h.dot(&(self.modes_inv * h)) - kappa * uh * uh / (1.0 + kappa * s);
        (0.5 * quad - c0).exp() / (1.0 + kappa * s).sqrt()
    }

    fn quadrature(&self, rule: &Rule, lambda_s_nm: f64, lambda_i_nm: f64) -> Result<f64> {
        let (p, s, i) = self.media(lambda_s_nm, lambda_i_nm)?;
        let half_l = 0.5 * self.crystal.length_um();
        let wp2 = self.geometry.pump_waist_um.powi(2);
        let qs0 = s.k0 * self.sin_alpha;
        let qi0 = -i.k0 * self.sin_alpha;
        let d = &rule.offsets;
        let w = &rule.weights;
        let n = d.len();
        let mut ks = vec![0.0; n * n];
        let mut ki = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                ks[a * n + b] = wavevector::ordinary(&s, qs0 + d[a], d[b]);
                ki[a * n + b] = wavevector::extraordinary(&i, self.axis, qi0 + d[a], d[b]);
            }
        }
        let mut total = 0.0;
        for a in 0..n {
            for c in 0..n {
                let qx = qs0 + qi0 + d[a] + d[c];
                let wx = w[a] * w[c] * (-0.25 * wp2 * qx * qx).exp();
                for b in 0..n {
                    for e in 0..n {
                        let qy = d[b] + d[e];
                        let wy = w[b] * w[e] * (-0.25 * wp2 * qy * qy).exp();
                        let kp = wavevector::extraordinary(&p, self.axis, qx, qy);
                        let dk = kp - ks[a * n + b] - ki[c * n + e];
                        total += wx * wy * rule.response.eval(dk * half_l);
                    }
                }
            }
        }
        // Mode-only integral (2π)²/sqrt(det M0).
        let norm = (2.0 * std::f64::consts::PI).powi(2) / self.modes_det.sqrt();
        Ok(total * rule.jacobian / norm)
    }

    /// Θ(λ_s, λ_i), real valued.
    pub fn epmf_amplitude(&self, lambda_s_nm: f64, lambda_i_nm: f64) -> Result<f64> {
        match (&self.rule, &self.taylor) {
            (Some(rule), _) => self.quadrature(rule, lambda_s_nm, lambda_i_nm),
            (None, Some(t)) => Ok(self.gaussian_overlap(&self.expanded(t, lambda_s_nm, lambda_i_nm)?)),
            (None, None) => Ok(self.gaussian_overlap(&self.linearize(lambda_s_nm, lambda_i_nm)?)),
        }
    }
}

impl JointAmplitude for EpmfModel {
    fn amplitude(&self, lambda_s_nm: f64, lambda_i_nm: f64) -> Result<Complex64> {
        Ok(Complex64::new(self.epmf_amplitude(lambda_s_nm, lambda_i_nm)?, 0.0))
    }
}

/// Θ at one point with the default closed-form model.
pub fn epmf_amplitude(
    crystal: &CrystalSpec,
    geometry: &SourceGeometry,
    lambda_s_nm: f64,
    lambda_i_nm: f64,
) -> Result<Complex64> {
    EpmfModel::new(crystal, geometry)?.amplitude(lambda_s_nm, lambda_i_nm)
}
