//! Effective phase-matching function, joint spectra and correlation metrics.

mod grid;
mod metrics;
mod model;
mod pump;
mod quadrature;
mod scan;
mod slice;

pub use grid::{
    apply_pump, epmf_grid, joint_spectrum, sample_grid, AxisSpec, GridSpec, JointSpectrumGrid, DEFAULT_GRID_POINTS,
    DEFAULT_HALF_WIDTH_NM, MIN_GRID_POINTS, NORMALIZATION_TOLERANCE,
};
pub use metrics::{fwhm, metrics, moments, schmidt_number, CorrelationMetrics, Moments};
pub use model::{
    epmf_amplitude, CrystalResponse, EpmfModel, EpmfPath, FrequencyExpansion, JointAmplitude,
    DEFAULT_QUADRATURE_ORDER, GAUSSIAN_SINC_GAMMA,
};
pub use pump::{pump_envelope, PumpKind, PumpSpec};
pub use quadrature::gauss_hermite;
pub use scan::{decorrelation_scan, BandwidthRange, DecorrelationScan};
pub use slice::{cw_slice, CwSlice, CW_PUMP_RANGE_NM, NO_SIGNAL_THRESHOLD};

/// Golden-section search for the minimum of a unimodal `f` on [a, b].
pub(crate) fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
