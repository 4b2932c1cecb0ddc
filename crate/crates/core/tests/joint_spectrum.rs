use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spdc_core::dispersion::CrystalSpec;
use spdc_core::epmf::{
    apply_pump, epmf_grid, metrics, schmidt_number, EpmfModel, GridSpec, JointSpectrumGrid, PumpSpec,
};
use spdc_core::phasematching::{align_for_degeneracy, SourceGeometry};
use spdc_core::units::conjugate_wavelength;
use spdc_core::Execution;

fn aligned_model() -> EpmfModel {
    let geometry = SourceGeometry::reference_setup();
    let crystal = align_for_degeneracy(&CrystalSpec::bbo_default(), &geometry).unwrap();
    EpmfModel::new(&crystal, &geometry).unwrap()
}

/// K = (Tr ρ)² / Tr ρ² with ρ the reduced density matrix of the signal,
/// summed element by element.
fn schmidt_from_density_matrix(grid: &JointSpectrumGrid) -> f64 {
    let (ns, ni) = grid.shape();
    let w = grid.cell_area();
    let mut trace = 0.0;
    let mut trace_sq = 0.0;
    for s in 0..ns {
        for t in 0..ns {
            let rho: Complex64 = (0..ni).map(|i| grid.at(s, i) * grid.at(t, i).conj()).sum::<Complex64>() * w;
            trace_sq += rho.norm_sqr();
            if s == t {
                trace += rho.re;
            }
        }
    }
    trace * trace / trace_sq
}

#[test]
fn schmidt_number_matches_density_matrix_on_random_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let axis: Vec<f64> = (0..16).map(|k| 1540.0 + k as f64).collect();
    let amp: Vec<Complex64> = (0..256)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let grid = JointSpectrumGrid::new(axis.clone(), axis, amp).unwrap().normalized().unwrap();
    let k = schmidt_number(&grid);
    let oracle = schmidt_from_density_matrix(&grid);
    assert!(k > 1.5, "a random state is entangled, K = {k}");
    assert!((k / oracle - 1.0).abs() < 1e-9, "{k} vs {oracle}");
}

#[test]
fn narrow_pump_collapses_onto_energy_conservation() {
    let theta = epmf_grid(&aligned_model(), &GridSpec::square(1550.0, 20.0, 512), Execution::Parallel).unwrap();
    let psi = apply_pump(&theta, &PumpSpec::pulsed(775.0, 0.02), Execution::Parallel).unwrap();
    let intensity = psi.intensity();
    let ni = psi.idler_axis().len();
    let mut near = 0.0;
    let mut total = 0.0;
    for (s, &ls) in psi.signal_axis().iter().enumerate() {
        let line = conjugate_wavelength(775.0, ls);
        for (i, &li) in psi.idler_axis().iter().enumerate() {
            let w = intensity[s * ni + i];
            total += w;
            if (li - line).abs() <= 0.2 {
                near += w;
            }
        }
    }
    assert!(near / total > 0.99, "only {:.4} of the weight lies on the CW line", near / total);
}

#[test]
fn broad_pump_reproduces_the_phase_matching_function() {
    let spec = GridSpec::square(1550.0, 40.0, 96);
    let theta = epmf_grid(&aligned_model(), &spec, Execution::Parallel).unwrap().normalized().unwrap();
    let psi = apply_pump(&theta, &PumpSpec::pulsed(775.0, 1000.0), Execution::Parallel).unwrap();
    let peak = theta.amplitude().iter().map(|a| a.norm()).fold(0.0, f64::max);
    let worst = theta
        .amplitude()
        .iter()
        .zip(psi.amplitude())
        .map(|(a, b)| (a.norm() - b.norm()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-3 * peak, "largest deviation {worst:e} of peak {peak:e}");
}

#[test]
fn correlation_sign_follows_pump_bandwidth() {
    let theta = epmf_grid(&aligned_model(), &GridSpec::square(1550.0, 40.0, 128), Execution::Parallel).unwrap();
    let pearson = |bw: f64| {
        metrics(&apply_pump(&theta, &PumpSpec::pulsed(775.0, bw), Execution::Parallel).unwrap())
            .unwrap()
            .pearson
    };
    assert!(pearson(1.0) < -0.9);
    assert!(pearson(30.0) > 0.3);
}
