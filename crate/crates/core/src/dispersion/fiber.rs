use serde::{Deserialize, Serialize};

use super::bessel;
use super::sellmeier::SellmeierSet;
use crate::error::{Error, Result};
use crate::units::{wavenumber, C_M_PER_S};

/// LP11 cutoff: first zero of J0.
pub const LP11_CUTOFF_V: f64 = 2.404_825_557_695_773;

/// Telecom O- to U-band window the fiber is required to be single-mode in, um.
pub const OPERATING_BAND_UM: (f64, f64) = (1.260, 1.640);

/// Default finite-difference step for wavelength derivatives, um (1 nm).
pub const DEFAULT_STEP_UM: f64 = 1e-3;

/// Bracket on the normalized propagation constant b.
const B_BRACKET: (f64, f64) = (1e-9, 1.0 - 1e-9);
const B_TOLERANCE: f64 = 1e-12;

/// Step-index single-mode fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    pub length_m: f64,
    pub core_radius_um: f64,
    pub numerical_aperture: f64,
    pub cladding: SellmeierSet,
    /// Fixed delay added to every transit time, ps.
    #[serde(default)]
    pub delay_offset_ps: f64,
}

impl FiberSpec {
    /// Standard telecom profile (cutoff near 1253 nm, zero dispersion near 1304 nm).
    pub fn standard(length_m: f64) -> Self {
        FiberSpec {
            length_m,
            core_radius_um: 4.1,
            numerical_aperture: 0.117,
            cladding: SellmeierSet::FUSED_SILICA,
            delay_offset_ps: 0.0,
        }
    }

    pub fn cladding_index(&self, lambda_um: f64) -> Result<f64> {
        self.cladding.index(lambda_um)
    }

    pub fn core_index(&self, lambda_um: f64) -> Result<f64> {
        let n = self.cladding.index(lambda_um)?;
        Ok((n * n + self.numerical_aperture * self.numerical_aperture).sqrt())
    }

    /// Normalized frequency V = (2π/λ)·a·NA.
    pub fn v_number(&self, lambda_um: f64) -> f64 {
        wavenumber(lambda_um) * self.core_radius_um * self.numerical_aperture
    }

    pub fn cutoff_wavelength_um(&self) -> f64 {
        std::f64::consts::TAU * self.core_radius_um * self.numerical_aperture / LP11_CUTOFF_V
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_m >= 0.0) || !self.length_m.is_finite() {
            return Err(Error::Precondition(format!(
                "fiber.length_m must be >= 0, got {}",
                self.length_m
            )));
        }
        if !(self.core_radius_um > 0.0) {
            return Err(Error::Precondition(format!(
                "fiber.core_radius_um must be > 0, got {}",
                self.core_radius_um
            )));
        }
        if !(self.numerical_aperture > 0.0 && self.numerical_aperture < 1.0) {
            return Err(Error::Precondition(format!(
                "fiber.numerical_aperture must lie in (0, 1), got {}",
                self.numerical_aperture
            )));
        }
        if !self.delay_offset_ps.is_finite() {
            return Err(Error::Precondition("fiber.delay_offset_ps must be finite".into()));
        }
        self.cladding.validate()?;
        // V falls with λ, so the short band edge is the binding one.
        let v = self.v_number(OPERATING_BAND_UM.0);
        if v >= LP11_CUTOFF_V {
            return Err(Error::Precondition(format!(
                "fiber is multimode at {} nm (V = {v:.4}); cutoff is {:.1} nm",
                OPERATING_BAND_UM.0 * 1e3,
                self.cutoff_wavelength_um() * 1e3
            )));
        }
        Ok(())
    }

    /// Normalized propagation constant b of LP01 by bisection on the scalar
    /// characteristic equation u·J1(u)/J0(u) = w·K1(w)/K0(w).
    pub fn normalized_propagation_constant(&self, lambda_um: f64) -> Result<f64> {
        let v = self.v_number(lambda_um);
        if !(v > 0.0) || v >= LP11_CUTOFF_V {
            return Err(Error::Precondition(format!(
                "fiber not single-mode at {} nm (V = {v:.4})",
                lambda_um * 1e3
            )));
        }
        let residual = |b: f64| {
            let u = v * (1.0 - b).sqrt();
            let w = v * b.sqrt();
            bessel::core_ratio(u) - bessel::cladding_ratio(w)
        };
        let (mut lo, mut hi) = B_BRACKET;
        let f_lo = residual(lo);
        let f_hi = residual(hi);
        if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo.signum() == f_hi.signum() {
            return Err(Error::Model(format!(
                "no LP01 root in b bracket at {} nm (V = {v:.4})",
                lambda_um * 1e3
            )));
        }
        let lo_sign = f_lo.signum();
        while hi - lo >= B_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            let f = residual(mid);
            if f == 0.0 {
                return Ok(mid);
            }
            if f.signum() == lo_sign {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// A guided mode whose effective index is known as a function of wavelength.
pub trait ModeIndex {
    fn effective_index(&self, lambda_um: f64) -> Result<f64>;

    /// Band in which derivatives may be taken, um.
    fn band_um(&self) -> (f64, f64) {
        OPERATING_BAND_UM
    }
}

impl ModeIndex for FiberSpec {
    fn effective_index(&self, lambda_um: f64) -> Result<f64> {
        let b = self.normalized_propagation_constant(lambda_um)?;
        let n_clad = self.cladding.index(lambda_um)?;
        let n2 = n_clad * n_clad + b * self.numerical_aperture * self.numerical_aperture;
        Ok(n2.sqrt())
    }
}

fn check_stencil<M: ModeIndex + ?Sized>(mode: &M, lambda_um: f64, reach_um: f64) -> Result<()> {
    let (lo, hi) = mode.band_um();
    if lambda_um - reach_um < lo || lambda_um + reach_um > hi {
        return Err(Error::Domain {
            wavelength_um: lambda_um,
            min_um: lo + reach_um,
            max_um: hi - reach_um,
        });
    }
    Ok(())
}

/// LP01 effective index of a step-index fiber.
pub fn fiber_neff(fiber: &FiberSpec, lambda_um: f64) -> Result<f64> {
    fiber.effective_index(lambda_um)
}

/// Group index n_g = n_eff − λ·dn_eff/dλ by central difference with step `step_um`.
pub fn group_index<M: ModeIndex + ?Sized>(mode: &M, lambda_um: f64, step_um: f64) -> Result<f64> {
    check_stencil(mode, lambda_um, step_um)?;
    group_index_unchecked(mode, lambda_um, step_um)
}

fn group_index_unchecked<M: ModeIndex + ?Sized>(mode: &M, lambda_um: f64, h: f64) -> Result<f64> {
    let n = mode.effective_index(lambda_um)?;
    let np = mode.effective_index(lambda_um + h)?;
    let nm = mode.effective_index(lambda_um - h)?;
    Ok(n - lambda_um * (np - nm) / (2.0 * h))
}

/// Dispersion parameter D = (1/c)·dn_g/dλ = −(λ/c)·d²n_eff/dλ², in ps/(nm·km).
///
/// Positive D means longer wavelengths arrive later.
pub fn dispersion<M: ModeIndex + ?Sized>(mode: &M, lambda_um: f64, step_um: f64) -> Result<f64> {
    check_stencil(mode, lambda_um, 2.0 * step_um)?;
    let gp = group_index_unchecked(mode, lambda_um + step_um, step_um)?;
    let gm = group_index_unchecked(mode, lambda_um - step_um, step_um)?;
    // dn_g/dλ in 1/um; 1/um divided by c in m/s is 1e6 s/m², i.e. 1e12 ps/(nm·km).
    Ok((gp - gm) / (2.0 * step_um) * 1e12 / C_M_PER_S)
}

pub fn fiber_group_index(fiber: &FiberSpec, lambda_um: f64) -> Result<f64> {
    group_index(fiber, lambda_um, DEFAULT_STEP_UM)
}

pub fn fiber_dispersion(fiber: &FiberSpec, lambda_um: f64) -> Result<f64> {
    dispersion(fiber, lambda_um, DEFAULT_STEP_UM)
}

/// Zero-dispersion wavelength inside `[lo_um, hi_um]` by bisection on D.
pub fn zero_dispersion_wavelength<M: ModeIndex + ?Sized>(
    mode: &M,
    lo_um: f64,
    hi_um: f64,
    step_um: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = (lo_um, hi_um);
    let d_lo = dispersion(mode, lo, step_um)?;
    let d_hi = dispersion(mode, hi, step_um)?;
    if d_lo.signum() == d_hi.signum() {
        return Err(Error::Model(format!(
            "dispersion does not change sign in [{lo_um}, {hi_um}] um"
        )));
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        let d = dispersion(mode, mid, step_um)?;
        if d.signum() == d_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Constant(f64);
    impl ModeIndex for Constant {
        fn effective_index(&self, _: f64) -> Result<f64> {
            Ok(self.0)
        }
    }

    /// n(λ) = n0 + κ(λ − λ0)²/2
    struct Parabolic {
        n0: f64,
        kappa: f64,
        lambda0: f64,
    }
    impl ModeIndex for Parabolic {
        fn effective_index(&self, l: f64) -> Result<f64> {
            Ok(self.n0 + 0.5 * self.kappa * (l - self.lambda0).powi(2))
        }
    }

    // Frozen from an independent scipy evaluation (dense residual scan
    // followed by Brent refinement of the sign change).
    const NEFF_1550: f64 = 1.445_907_976_441_534_1;
    const NG_1550: f64 = 1.467_556_653_848_977;
    const NG_1310: f64 = 1.466_874_425_765_921_6;
    const D_1550: f64 = 16.656_145_163_424_696;
    const ZDW_UM: f64 = 1.304_245_679_660_429;

    #[test]
    fn neff_matches_frozen_scan() {
        let f = FiberSpec::standard(1000.0);
        let n = fiber_neff(&f, 1.55).unwrap();
        assert!((n - NEFF_1550).abs() < 1e-11, "{n}");
        assert!(n > f.cladding_index(1.55).unwrap());
        assert!(n < f.core_index(1.55).unwrap());
    }

    #[test]
    fn multimode_v_is_precondition_error() {
        // a chosen so that V = 3 at 1.55 um.
        let mut f = FiberSpec::standard(1.0);
        f.core_radius_um = 3.0 * 1.55 / (std::f64::consts::TAU * f.numerical_aperture);
        assert!(matches!(fiber_neff(&f, 1.55), Err(Error::Precondition(_))));
        assert!(f.validate().is_err());
    }

    #[test]
    fn default_profile_is_single_mode_over_band() {
        let f = FiberSpec::standard(1.0);
        f.validate().unwrap();
        assert!(f.cutoff_wavelength_um() < OPERATING_BAND_UM.0);
    }

    #[test]
    fn group_index_matches_frozen_values() {
        let f = FiberSpec::standard(1.0);
        let g1550 = fiber_group_index(&f, 1.55).unwrap();
        let g1310 = fiber_group_index(&f, 1.31).unwrap();
        assert!((g1550 - NG_1550).abs() < 1e-9, "{g1550}");
        assert!((g1310 - NG_1310).abs() < 1e-9, "{g1310}");
        assert!((1.46..1.47).contains(&g1550));
        assert!((g1310 - g1550).abs() / g1550 < 0.007);
    }

    #[test]
    fn group_index_is_stable_under_step_halving() {
        let f = FiberSpec::standard(1.0);
        for l in [1.31, 1.45, 1.55, 1.62] {
            let a = group_index(&f, l, 1e-3).unwrap();
            let b = group_index(&f, l, 0.5e-3).unwrap();
            assert!((a - b).abs() < 1e-6, "{l}: {a} vs {b}");
        }
    }

    #[test]
    fn constant_index_has_equal_group_index_and_no_dispersion() {
        let m = Constant(1.45);
        assert_eq!(group_index(&m, 1.55, 1e-3).unwrap(), 1.45);
        assert_eq!(dispersion(&m, 1.55, 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn parabolic_index_gives_analytic_dispersion() {
        let m = Parabolic {
            n0: 1.45,
            kappa: -3.0e-3,
            lambda0: 1.3,
        };
        let l = 1.55;
        // D = −λκ/c, converted as in `dispersion`.
        let expected = -l * m.kappa * 1e12 / C_M_PER_S;
        let d = dispersion(&m, l, 1e-3).unwrap();
        assert!((d - expected).abs() < 1e-7 * expected.abs(), "{d} vs {expected}");
    }

    #[test]
    fn dispersion_matches_frozen_values() {
        let f = FiberSpec::standard(1.0);
        let d = fiber_dispersion(&f, 1.55).unwrap();
        assert!((d - D_1550).abs() < 1e-3, "{d}");
        assert!((15.0..=19.0).contains(&d));
        let z = zero_dispersion_wavelength(&f, 1.27, 1.36, DEFAULT_STEP_UM).unwrap();
        assert!((z - ZDW_UM).abs() < 1e-5, "{z}");
        assert!((1.29..=1.33).contains(&z));
    }

    #[test]
    fn stencil_straddling_band_edge_is_domain_error() {
        let f = FiberSpec::standard(1.0);
        assert!(matches!(fiber_group_index(&f, 1.6395), Err(Error::Domain { .. })));
        assert!(matches!(fiber_dispersion(&f, 1.2615), Err(Error::Domain { .. })));
    }

    #[test]
    fn neff_decreases_and_dispersion_changes_sign_once() {
        let f = FiberSpec::standard(1.0);
        let grid: Vec<f64> = (0..=76).map(|k| 1.262 + 0.376 * k as f64 / 76.0).collect();
        let n: Vec<f64> = grid.iter().map(|&l| fiber_neff(&f, l).unwrap()).collect();
        assert!(n.windows(2).all(|w| w[1] < w[0]));
        let d: Vec<f64> = grid
            .iter()
            .map(|&l| fiber_dispersion(&f, l).unwrap())
            .collect();
        let changes = d.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
        assert_eq!(changes, 1);
    }
}
