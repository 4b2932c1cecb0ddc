use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spdc_core::dispersion::{CrystalSpec, FiberSpec};
use spdc_core::epmf::{cw_slice, epmf_grid, EpmfModel, GridSpec};
use spdc_core::montecarlo::{simulate, Chunking, DetectionSetup, PairSpectrum, Polarizer};
use spdc_core::phasematching::{align_for_degeneracy, degeneracy_angle, tuning_curve, SourceGeometry};
use spdc_core::spectrometer::DetectorSpec;
use spdc_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn setup() -> (CrystalSpec, SourceGeometry, EpmfModel) {
    let geometry = SourceGeometry::reference_setup();
    let crystal = align_for_degeneracy(&CrystalSpec::bbo_default(), &geometry).unwrap();
    let model = EpmfModel::new(&crystal, &geometry).unwrap();
    (crystal, geometry, model)
}

fn grid(c: &mut Criterion) {
    let (_, _, model) = setup();
    let spec = GridSpec::square(1550.0, 40.0, 128);
    let mut g = c.benchmark_group("epmf_grid_128");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| epmf_grid(&model, &spec, exec).unwrap())
        });
    }
    g.finish();
}

fn tuning(c: &mut Criterion) {
    let (crystal, geometry, _) = setup();
    let hi = degeneracy_angle(&crystal, &geometry).unwrap();
    let thetas: Vec<f64> = (0..200).map(|k| 29.0 + (hi - 29.0) * k as f64 / 199.0).collect();
    let mut g = c.benchmark_group("tuning_curve_200");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| tuning_curve(&crystal, &geometry, &thetas, exec))
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let (_, _, model) = setup();
    let axis: Vec<f64> = (0..=480).map(|k| 1490.0 + 0.25 * k as f64).collect();
    let spectrum = PairSpectrum::Cw(cw_slice(&model, 775.0, &axis).unwrap());
    let detection = DetectionSetup {
        fiber_a: FiberSpec::standard(4202.0),
        fiber_b: FiberSpec::standard(4217.0),
        detector_a: DetectorSpec::free_running("NFAD", 156.0, 0.375, 100.0),
        detector_b: DetectorSpec::gated("id201", 300.0, 0.15, 1000.0, 100.0),
        coupling_efficiency: 0.04,
        tagger_resolution_ps: 156,
        polarizer: Polarizer::None,
        asymmetry: 1.0,
    };
    let chunking = Chunking::new(5.0, 0.05).unwrap();
    let mut g = c.benchmark_group("simulate_5s");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| simulate(&spectrum, 1e6, &detection, chunking, 1, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, grid, tuning, monte_carlo);
criterion_main!(benches);
