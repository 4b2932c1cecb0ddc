//! Longitudinal wavevector components inside a uniaxial crystal.
//!
//! Lab frame: z along the pump, optic axis in the y–z plane at the pump–axis
//! angle θ, photons emitted in the x–z plane. Transverse components (qx, qy)
//! are in rad/um and are conserved across the exit face.

/// Principal indices of one wave at one wavelength.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Medium {
    /// Vacuum wavenumber, rad/um.
    pub k0: f64,
    pub n_o: f64,
    /// Principal extraordinary index (θ = 90°).
    pub n_e: f64,
}

/// Optic-axis orientation as (sin θ, cos θ).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Axis {
    pub sin: f64,
    pub cos: f64,
}

impl Axis {
    pub fn from_deg(theta_deg: f64) -> Self {
        let (sin, cos) = theta_deg.to_radians().sin_cos();
        Axis { sin, cos }
    }
}

/// kz and its transverse gradient (dkz/dqx, dkz/dqy).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kz {
    pub kz: f64,
    pub dqx: f64,
    pub dqy: f64,
}

#[inline]
pub(crate) fn ordinary(m: &Medium, qx: f64, qy: f64) -> f64 {
    let k = m.n_o * m.k0;
    (k * k - qx * qx - qy * qy).sqrt()
}

#[inline]
pub(crate) fn ordinary_with_gradient(m: &Medium, qx: f64, qy: f64) -> Kz {
    let kz = ordinary(m, qx, qy);
    Kz {
        kz,
        dqx: -qx / kz,
        dqy: -qy / kz,
    }
}

/// Extraordinary wave: solves k⊥²/n_e² + k∥²/n_o² = k0² for kz, where k∥ is
/// the component along the optic axis.
#[inline]
pub(crate) fn extraordinary(m: &Medium, axis: Axis, qx: f64, qy: f64) -> f64 {
    let a = 1.0 / (m.n_e * m.n_e);
    let b = 1.0 / (m.n_o * m.n_o);
    let ba = b - a;
    let qs = qy * axis.sin;
    let qa = a + ba * axis.cos * axis.cos;
    let qb = 2.0 * ba * qs * axis.cos;
    let qc = a * (qx * qx + qy * qy) + ba * qs * qs - m.k0 * m.k0;
    (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa)
}

#[inline]
pub(crate) fn extraordinary_with_gradient(m: &Medium, axis: Axis, qx: f64, qy: f64) -> Kz {
    let kz = extraordinary(m, axis, qx, qy);
    let a = 1.0 / (m.n_e * m.n_e);
    let ba = 1.0 / (m.n_o * m.n_o) - a;
    let k_par = qy * axis.sin + kz * axis.cos;
    let denom = a * kz + ba * k_par * axis.cos;
    Kz {
        kz,
        dqx: -(a * qx) / denom,
        dqy: -(a * qy + ba * k_par * axis.sin) / denom,
    }
}
