//! Energy and momentum conservation for type-II non-collinear emission.
//!
//! Polarizations: extraordinary pump, ordinary signal, extraordinary idler.
//! Signal and idler leave the crystal at the same external angle on opposite
//! sides of the pump, in the plane perpendicular to the one holding the optic
//! axis (where the two emission cones intersect).

use serde::{Deserialize, Serialize};

use crate::dispersion::CrystalSpec;
use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::units::{conjugate_wavelength, nm_to_um, wavenumber};
use crate::wavevector::{self, Axis, Medium};

/// |Δk_z| below which a solution counts as phase matched, rad/um.
pub const RESIDUAL_TOLERANCE: f64 = 1e-4;

/// Central-wavelength search window for either photon, nm.
pub const SEARCH_WINDOW_NM: (f64, f64) = (1300.0, 1800.0);

/// Bracket for the degeneracy-angle solve, degrees.
pub const DEGENERACY_BRACKET_DEG: (f64, f64) = (20.0, 45.0);

const WAVELENGTH_TOLERANCE_NM: f64 = 1e-6;
const ANGLE_TOLERANCE_DEG: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceGeometry {
    pub pump_waist_um: f64,
    pub collection_waist_um: f64,
    /// External emission angle of each photon relative to the pump, degrees.
    pub external_emission_angle_deg: f64,
    pub pump_wavelength_nm: f64,
}

impl SourceGeometry {
    /// 150 um pump, 105 um collection modes at 3 degrees, 775 nm pump.
    pub fn reference_setup() -> Self {
        SourceGeometry {
            pump_waist_um: 150.0,
            collection_waist_um: 105.0,
            external_emission_angle_deg: 3.0,
            pump_wavelength_nm: 775.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pump_waist_um > 0.0) || !(self.collection_waist_um > 0.0) {
            return Err(Error::Precondition(format!(
                "geometry waists must be > 0, got pump {} um and collection {} um",
                self.pump_waist_um, self.collection_waist_um
            )));
        }
        // 0 is accepted so that collinear geometries can be studied.
        if !(self.external_emission_angle_deg >= 0.0 && self.external_emission_angle_deg < 90.0) {
            return Err(Error::Precondition(format!(
                "geometry.external_emission_angle_deg must lie in [0, 90), got {}",
                self.external_emission_angle_deg
            )));
        }
        if !(self.pump_wavelength_nm > 0.0) {
            return Err(Error::Precondition(format!(
                "geometry.pump_wavelength_nm must be > 0, got {}",
                self.pump_wavelength_nm
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningCurvePoint {
    pub internal_pump_axis_angle_deg: f64,
    pub lambda_o_nm: f64,
    pub lambda_e_nm: f64,
    /// Δk_z at the solution, rad/um.
    pub residual_mismatch: f64,
}

/// Internal angle after refraction at the exit face (Snell's law).
pub fn refract(external_deg: f64, index: f64) -> Result<f64> {
    if !(0.0..90.0).contains(&external_deg.abs()) || !(index >= 1.0) {
        return Err(Error::Precondition(format!(
            "refract needs |angle| < 90 deg and index >= 1, got {external_deg} deg, n = {index}"
        )));
    }
    Ok((external_deg.to_radians().sin() / index).asin().to_degrees())
}

/// External angle for a given internal angle (inverse of [`refract`]).
pub fn unrefract(internal_deg: f64, index: f64) -> Result<f64> {
    let s = index * internal_deg.to_radians().sin();
    if !(index >= 1.0) || s.abs() >= 1.0 {
        return Err(Error::Precondition(format!(
            "internal angle {internal_deg} deg at n = {index} is totally reflected"
        )));
    }
    Ok(s.asin().to_degrees())
}

/// Pump–optic-axis angle inside the crystal: cut angle plus the refracted tilt.
pub fn internal_pump_axis_angle(crystal: &CrystalSpec, pump_nm: f64) -> Result<f64> {
    let n = crystal.index_e(nm_to_um(pump_nm), crystal.cut_angle_deg)?;
    let theta = crystal.cut_angle_deg + refract(crystal.tilt_deg, n)?;
    if !(0.0..=90.0).contains(&theta) {
        return Err(Error::Precondition(format!(
            "internal pump-axis angle {theta} deg outside [0, 90]"
        )));
    }
    Ok(theta)
}

/// External tilt that puts the internal pump–axis angle at `theta_deg`.
pub fn tilt_for_internal_angle(crystal: &CrystalSpec, pump_nm: f64, theta_deg: f64) -> Result<f64> {
    let n = crystal.index_e(nm_to_um(pump_nm), crystal.cut_angle_deg)?;
    unrefract(theta_deg - crystal.cut_angle_deg, n)
}

pub(crate) fn medium(crystal: &CrystalSpec, lambda_um: f64) -> Result<Medium> {
    Ok(Medium {
        k0: wavenumber(lambda_um),
        n_o: crystal.sellmeier_o.index(lambda_um)?,
        n_e: crystal.sellmeier_e.index(lambda_um)?,
    })
}

/// Internal propagation geometry of the two photons at their mode centres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionAngles {
    /// Internal angle of the ordinary photon to the pump, degrees.
    pub signal_internal_deg: f64,
    /// Internal angle of the extraordinary photon to the pump, degrees.
    pub idler_internal_deg: f64,
    /// Angle between the extraordinary photon and the optic axis, degrees.
    pub idler_axis_deg: f64,
}

/// Internal angles implied by the external emission angle.
pub fn emission_angles(
    crystal: &CrystalSpec,
    geometry: &SourceGeometry,
    lambda_s_nm: f64,
    lambda_i_nm: f64,
    theta_pump_axis_deg: f64,
) -> Result<EmissionAngles> {
    let axis = Axis::from_deg(theta_pump_axis_deg);
    let sin_a = geometry.external_emission_angle_deg.to_radians().sin();
    let s = medium(crystal, nm_to_um(lambda_s_nm))?;
    let i = medium(crystal, nm_to_um(lambda_i_nm))?;
    let qs = s.k0 * sin_a;
    let qi = i.k0 * sin_a;
    let ks = wavevector::ordinary(&s, qs, 0.0);
    let ki = wavevector::extraordinary(&i, axis, -qi, 0.0);
    let signal = qs.atan2(ks);
    let idler = qi.atan2(ki);
    Ok(EmissionAngles {
        signal_internal_deg: signal.to_degrees(),
        idler_internal_deg: idler.to_degrees(),
        idler_axis_deg: (axis.cos * idler.cos()).acos().to_degrees(),
    })
}

/// Δk_z = k_p − k_s·cosθ_s − k_i·cosθ_i for an on-axis pump at the
/// geometry's pump wavelength; energy conservation is not imposed.
pub fn longitudinal_mismatch(
    crystal: &CrystalSpec,
    geometry: &SourceGeometry,
    lambda_s_nm: f64,
    lambda_i_nm: f64,
    theta_pump_axis_deg: f64,
) -> Result<f64> {
    if !(0.0..=90.0).contains(&theta_pump_axis_deg) {
        return Err(Error::Precondition(format!(
            "pump-axis angle {theta_pump_axis_deg} deg outside [0, 90]"
        )));
    }
    let axis = Axis::from_deg(theta_pump_axis_deg);
    let sin_a = geometry.external_emission_angle_deg.to_radians().sin();
    let p = medium(crystal, nm_to_um(geometry.pump_wavelength_nm))?;
    let s = medium(crystal, nm_to_um(lambda_s_nm))?;
    let i = medium(crystal, nm_to_um(lambda_i_nm))?;
    let kp = wavevector::extraordinary(&p, axis, 0.0, 0.0);
    let ks = wavevector::ordinary(&s, s.k0 * sin_a, 0.0);
    let ki = wavevector::extraordinary(&i, axis, -i.k0 * sin_a, 0.0);
    Ok(kp - ks - ki)
}

/// Bisection on a bracket [lo, hi] where `f` changes sign.
pub(crate) fn bisect<F>(mut lo: f64, mut hi: f64, tol: f64, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f_lo = f(lo)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let f_hi = f(hi)?;
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoPhaseMatching(format!(
            "no sign change in [{lo}, {hi}]"
        )));
    }
    let lo_sign = f_lo.signum();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Phase-matched (λ_o, λ_e) for a CW pump at the geometry's wavelength.
///
/// λ_o is scanned on a 1 nm grid for the first sign change of Δk_z with λ_e
/// tied by energy conservation; the bracket is then bisected to 1e-6 nm.
pub fn central_wavelengths(
    crystal: &CrystalSpec,
    geometry: &SourceGeometry,
    theta_pump_axis_deg: f64,
) -> Result<(f64, f64)> {
    let pump = geometry.pump_wavelength_nm;
    let (win_lo, win_hi) = SEARCH_WINDOW_NM;
    // Both photons must fall inside the window.
    let lo = win_lo.max(conjugate_wavelength(pump, win_hi));
    let hi = win_hi.min(conjugate_wavelength(pump, win_lo));
    if !(lo < hi) || pump >= 0.5 * win_hi || 2.0 * pump <= win_lo {
        return Err(Error::NoPhaseMatching(format!(
            "pump at {pump} nm cannot produce both photons inside {win_lo}-{win_hi} nm"
        )));
    }
    let mismatch = |lo_nm: f64| {
        longitudinal_mismatch(
            crystal,
            geometry,
            lo_nm,
            conjugate_wavelength(pump, lo_nm),
            theta_pump_axis_deg,
        )
    };
    let mut grid: Vec<f64> = Vec::new();
    grid.push(lo);
    let mut x = lo.floor() + 1.0;
    while x < hi {
        grid.push(x);
        x += 1.0;
    }
    grid.push(hi);

    let mut prev = (grid[0], mismatch(grid[0])?);
    if prev.1 == 0.0 {
        return Ok((prev.0, conjugate_wavelength(pump, prev.0)));
    }
    for &x in &grid[1..] {
        let fx = mismatch(x)?;
        if fx == 0.0 {
            return Ok((x, conjugate_wavelength(pump, x)));
        }
        if fx.signum() != prev.1.signum() {
            let lambda_o = bisect(prev.0, x, WAVELENGTH_TOLERANCE_NM, mismatch)?;
            return Ok((lambda_o, conjugate_wavelength(pump, lambda_o)));
        }
        prev = (x, fx);
    }
    Err(Error::NoPhaseMatching(format!(
        "no phase-matched pair in {win_lo}-{win_hi} nm at {theta_pump_axis_deg} deg"
    )))
}

/// Tuning curve over internal pump–axis angles. Angles without a solution
/// are reported in `failures` and do not abort the scan.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningCurve {
    pub points: Vec<TuningCurvePoint>,
    pub failures: Vec<(f64, Error)>,
}

pub fn tuning_curve(
    crystal: &CrystalSpec,
    geometry: &SourceGeometry,
    thetas_deg: &[f64],
    exec: Execution,
) -> TuningCurve {
    let solved = map_slice(exec, thetas_deg, |&theta| {
        central_wavelengths(crystal, geometry, theta).and_then(|(lo, le)| {
            let residual = longitudinal_mismatch(crystal, geometry, lo, le, theta)?;
            Ok(TuningCurvePoint {
                internal_pump_axis_angle_deg: theta,
                lambda_o_nm: lo,
                lambda_e_nm: le,
                residual_mismatch: residual,
            })
        })
    });
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (theta, r) in thetas_deg.iter().zip(solved) {
        match r {
            Ok(p) => points.push(p),
            Err(e) => failures.push((*theta, e)),
        }
    }
    TuningCurve { points, failures }
}

/// Internal pump–axis angle giving frequency-degenerate emission at
/// 2λ_p. The crystal's cut angle and tilt are ignored.
pub fn degeneracy_angle(crystal: &CrystalSpec, geometry: &SourceGeometry) -> Result<f64> {
    let degenerate = 2.0 * geometry.pump_wavelength_nm;
    let (lo, hi) = DEGENERACY_BRACKET_DEG;
    bisect(lo, hi, ANGLE_TOLERANCE_DEG, |theta| {
        longitudinal_mismatch(crystal, geometry, degenerate, degenerate, theta)
    })
    .map_err(|e| match e {
        Error::NoPhaseMatching(_) => Error::NoPhaseMatching(format!(
            "degenerate emission at {degenerate} nm not reachable for pump-axis angles {lo}-{hi} deg"
        )),
        other => other,
    })
}

/// Copy of `crystal` tilted so that its internal pump–axis angle is the
/// degeneracy angle for `geometry`.
pub fn align_for_degeneracy(crystal: &CrystalSpec, geometry: &SourceGeometry) -> Result<CrystalSpec> {
    let theta = degeneracy_angle(crystal, geometry)?;
    let tilt = tilt_for_internal_angle(crystal, geometry.pump_wavelength_nm, theta)?;
    Ok(CrystalSpec {
        tilt_deg: tilt,
        ..*crystal
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::SellmeierSet;

    fn setup() -> (CrystalSpec, SourceGeometry) {
        (CrystalSpec::bbo_default(), SourceGeometry::reference_setup())
    }

    #[test]
    fn refract_trivial_cases() {
        assert_eq!(refract(0.0, 1.65).unwrap(), 0.0);
        assert!((refract(3.0, 1.0).unwrap() - 3.0).abs() < 1e-13);
        // asin(sin 3° / 1.65) evaluated by hand: 1.8183°
        assert!((refract(3.0, 1.65).unwrap() - 1.8183).abs() < 1e-3);
    }

    #[test]
    fn refract_inverse_is_identity() {
        for a in [0.0, 0.5, 3.0, 17.0, 45.0, 80.0] {
            let back = unrefract(refract(a, 1.63).unwrap(), 1.63).unwrap();
            assert!((back - a).abs() < 1e-12);
        }
    }

    #[test]
    fn operating_point_is_near_phase_matched() {
        let (c, g) = setup();
        let dk = longitudinal_mismatch(&c, &g, 1550.0, 1550.0, 29.67).unwrap();
        assert!(dk.abs() < 0.02, "{dk}");
        // A badly wrong angle is many crystal bandwidths away.
        let wrong = longitudinal_mismatch(&c, &g, 1550.0, 1550.0, 20.0).unwrap();
        assert!(wrong.abs() > 10.0 * std::f64::consts::PI / c.length_um());
    }

    #[test]
    fn isotropic_collinear_reduces_to_scalar_formula() {
        let n = 1.7;
        let iso = SellmeierSet::constant(n, 0.2, 3.0);
        let c = CrystalSpec {
            sellmeier_o: iso,
            sellmeier_e: iso,
            ..CrystalSpec::bbo_default()
        };
        let g = SourceGeometry {
            external_emission_angle_deg: 0.0,
            pump_wavelength_nm: 780.0,
            ..SourceGeometry::reference_setup()
        };
        let dk = longitudinal_mismatch(&c, &g, 1500.0, 1650.0, 33.0).unwrap();
        let tau = std::f64::consts::TAU;
        let expected = tau * (n / 0.78 - n / 1.5 - n / 1.65);
        assert!((dk - expected).abs() < 1e-12);
    }

    #[test]
    fn emission_angles_obey_snell() {
        let (c, g) = setup();
        let theta = 29.76;
        let a = emission_angles(&c, &g, 1540.0, 1560.0, theta).unwrap();
        let ns = c.index_o(1.54).unwrap();
        assert!((a.signal_internal_deg - refract(3.0, ns).unwrap()).abs() < 1e-12);
        let ni = c.index_e(1.56, a.idler_axis_deg).unwrap();
        assert!((a.idler_internal_deg - refract(3.0, ni).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn degeneracy_angle_near_cut() {
        let (c, g) = setup();
        let theta = degeneracy_angle(&c, &g).unwrap();
        assert!((theta - 29.67).abs() < 0.5, "{theta}");
        let (lo, le) = central_wavelengths(&c, &g, theta).unwrap();
        assert!((lo - 1550.0).abs() < 1e-3 && (le - 1550.0).abs() < 1e-3, "{lo} {le}");
    }

    #[test]
    fn collinear_degeneracy_differs() {
        let (c, g) = setup();
        let noncollinear = degeneracy_angle(&c, &g).unwrap();
        let collinear = degeneracy_angle(
            &c,
            &SourceGeometry {
                external_emission_angle_deg: 0.0,
                ..g
            },
        )
        .unwrap();
        assert!((noncollinear - collinear).abs() > 0.1, "{noncollinear} {collinear}");
    }

    #[test]
    fn unreachable_geometry_reports_no_phase_matching() {
        let c = CrystalSpec::bbo_default();
        let g = SourceGeometry {
            pump_wavelength_nm: 400.0,
            external_emission_angle_deg: 45.0,
            ..SourceGeometry::reference_setup()
        };
        assert!(matches!(degeneracy_angle(&c, &g), Err(Error::NoPhaseMatching(_))));
    }

    #[test]
    fn polarization_labels_are_not_interchangeable() {
        let (c, g) = setup();
        let theta = degeneracy_angle(&c, &g).unwrap() - 0.1;
        let (lo, le) = central_wavelengths(&c, &g, theta).unwrap();
        assert!(lo < le);
        let right = longitudinal_mismatch(&c, &g, lo, le, theta).unwrap();
        let swapped = longitudinal_mismatch(&c, &g, le, lo, theta).unwrap();
        assert!(right.abs() < RESIDUAL_TOLERANCE);
        assert!(swapped.abs() > 10.0 * RESIDUAL_TOLERANCE, "{swapped}");
    }

    #[test]
    fn empty_scan_is_empty() {
        let (c, g) = setup();
        let t = tuning_curve(&c, &g, &[], Execution::Sequential);
        assert!(t.points.is_empty() && t.failures.is_empty());
    }

    #[test]
    fn scan_reports_failures_without_aborting() {
        let (c, g) = setup();
        let t = tuning_curve(&c, &g, &[10.0, 29.7, 60.0], Execution::Sequential);
        assert_eq!(t.points.len(), 1);
        assert_eq!(t.failures.len(), 2);
    }

    #[test]
    fn alignment_puts_internal_angle_at_degeneracy() {
        let (c, g) = setup();
        let aligned = align_for_degeneracy(&c, &g).unwrap();
        let theta = internal_pump_axis_angle(&aligned, g.pump_wavelength_nm).unwrap();
        assert!((theta - degeneracy_angle(&c, &g).unwrap()).abs() < 1e-9);
    }
}
