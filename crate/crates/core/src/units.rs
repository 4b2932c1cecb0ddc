//! Physical constants and unit conversions.
//!
//! Interfaces speak vacuum wavelength in nanometres; wavevectors are kept in
//! rad/um and angular frequencies in rad/ps.

/// Speed of light in vacuum, m/s.
pub const C_M_PER_S: f64 = 299_792_458.0;

/// Speed of light in um/ps.
pub const C_UM_PER_PS: f64 = 299.792_458;

/// Intensity FWHM of a Gaussian in units of its standard deviation.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

#[inline]
pub fn nm_to_um(nm: f64) -> f64 {
    nm * 1e-3
}

#[inline]
pub fn um_to_nm(um: f64) -> f64 {
    um * 1e3
}

/// Vacuum wavenumber 2π/λ in rad/um.
#[inline]
pub fn wavenumber(lambda_um: f64) -> f64 {
    std::f64::consts::TAU / lambda_um
}

/// ω = 2πc/λ in rad/ps for λ in nm.
#[inline]
pub fn angular_frequency(lambda_nm: f64) -> f64 {
    std::f64::consts::TAU * C_UM_PER_PS / nm_to_um(lambda_nm)
}

/// Inverse of [`angular_frequency`].
#[inline]
pub fn wavelength_from_angular(omega: f64) -> f64 {
    um_to_nm(std::f64::consts::TAU * C_UM_PER_PS / omega)
}

/// Idler wavelength fixed by energy conservation with a CW pump.
#[inline]
pub fn conjugate_wavelength(pump_nm: f64, signal_nm: f64) -> f64 {
    1.0 / (1.0 / pump_nm - 1.0 / signal_nm)
}

/// Pump wavelength whose frequency is the sum of the two photon frequencies.
#[inline]
pub fn sum_frequency_wavelength(signal_nm: f64, idler_nm: f64) -> f64 {
    1.0 / (1.0 / signal_nm + 1.0 / idler_nm)
}

/// Sum of `values` with Neumaier compensation, in slice order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
