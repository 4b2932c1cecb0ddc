//! Refractive-index, group-index and chromatic-dispersion models for the
//! birefringent crystal and the single-mode fiber.

mod bessel;
mod crystal;
mod fiber;
mod sellmeier;

pub use crystal::CrystalSpec;
pub use fiber::{
    dispersion, fiber_dispersion, fiber_group_index, fiber_neff, group_index,
    zero_dispersion_wavelength, FiberSpec, ModeIndex, DEFAULT_STEP_UM, LP11_CUTOFF_V,
    OPERATING_BAND_UM,
};
pub use sellmeier::SellmeierSet;

/// Ordinary index of `crystal` at `lambda_um`.
pub fn index_o(crystal: &CrystalSpec, lambda_um: f64) -> crate::Result<f64> {
    crystal.index_o(lambda_um)
}

/// Extraordinary index at `theta_deg` to the optic axis.
pub fn index_e(crystal: &CrystalSpec, lambda_um: f64, theta_deg: f64) -> crate::Result<f64> {
    crystal.index_e(lambda_um, theta_deg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bbo_is_negative_uniaxial() {
        let c = CrystalSpec::bbo_default();
        for k in 0..100 {
            let l = 0.4 + 1.3 * k as f64 / 99.0;
            assert!(index_o(&c, l).unwrap() > index_e(&c, l, 90.0).unwrap());
        }
    }

    #[test]
    fn extraordinary_index_is_monotone_in_angle() {
        let c = CrystalSpec::bbo_default();
        let vals: Vec<f64> = (0..=90).map(|t| index_e(&c, 0.775, t as f64).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }
}
