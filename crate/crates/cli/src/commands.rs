//! One function per subcommand. Each returns the files it wrote and the
//! lines to print; the dispatcher adds the manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use spdc_core::dispersion::CrystalSpec;
use spdc_core::epmf::{
    cw_slice, decorrelation_scan, epmf_grid, joint_spectrum, metrics, AxisSpec, CwSlice, EpmfModel, GridSpec,
    JointSpectrumGrid, PumpKind,
};
use spdc_core::montecarlo::{histogram, simulate, Chunking, PairSpectrum, Polarizer};
use spdc_core::phasematching::{degeneracy_angle, tilt_for_internal_angle, tuning_curve};
use spdc_core::spectrometer::{
    arrival_time, calibrate, effective_timing_uncertainty, reconstruct_spectrum, relative_delay, resolution,
    CalibrationFit, CalibrationPoint,
};
use spdc_core::units::conjugate_wavelength;
use spdc_core::Execution;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::io::{self, Cell, Format, Table};

/// Signal window of each CW slice: ±this around 2λ_p.
pub const CW_SLICE_HALF_WIDTH_NM: f64 = 120.0;
pub const CW_SLICE_STEP_NM: f64 = 0.25;

/// Half width of the automatic histogram window, ps.
pub const AUTO_WINDOW_HALF_WIDTH_PS: i64 = 8_000;

pub struct Context {
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    pub format: Format,
    pub exec: Execution,
}

#[derive(Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub warnings: Vec<String>,
    pub outputs: Vec<PathBuf>,
}

impl Context {
    fn path(&self, stem: &str, ext: &str) -> PathBuf {
        self.out_dir.join(format!("{stem}.{ext}"))
    }

    fn write_table(&self, out: &mut Outcome, stem: &str, table: &Table) -> CliResult<()> {
        let path = self.path(stem, self.format.extension());
        io::write_atomic(&path, table.render(self.format).as_bytes())?;
        out.outputs.push(path);
        Ok(())
    }

    fn write_json<T: Serialize + ?Sized>(&self, out: &mut Outcome, stem: &str, value: &T) -> CliResult<()> {
        let path = self.path(stem, "json");
        io::write_atomic(&path, io::to_json(value).as_bytes())?;
        out.outputs.push(path);
        Ok(())
    }

    fn model(&self, crystal: &CrystalSpec) -> CliResult<EpmfModel> {
        let c = &self.config;
        Ok(EpmfModel::with_path(crystal, &c.geometry, c.epmf.path)?)
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

pub fn degeneracy(ctx: &Context) -> CliResult<Outcome> {
    let c = &ctx.config;
    let theta = degeneracy_angle(&c.crystal, &c.geometry)?;
    let tilt = tilt_for_internal_angle(&c.crystal, c.pump.center_wavelength_nm, theta)?;
    let mut out = Outcome::default();
    ctx.write_json(
        &mut out,
        "degeneracy",
        &json!({
            "degeneracy_angle_deg": theta,
            "cut_angle_deg": c.crystal.cut_angle_deg,
            "alignment_tilt_deg": tilt,
            "pump_wavelength_nm": c.pump.center_wavelength_nm,
            "external_emission_angle_deg": c.geometry.external_emission_angle_deg,
        }),
    )?;
    out.lines.push(format!("degeneracy angle: {theta:.4} deg"));
    out.lines.push(format!(
        "external tilt for a {:.2} deg cut: {tilt:.4} deg",
        c.crystal.cut_angle_deg
    ));
    Ok(out)
}

pub fn tuning(ctx: &Context) -> CliResult<Outcome> {
    let c = &ctx.config;
    let t = &c.analysis.tuning;
    let hi = match t.theta_max_deg {
        Some(v) => v,
        None => degeneracy_angle(&c.crystal, &c.geometry)?,
    };
    let thetas = linspace(t.theta_min_deg, hi, t.points);
    let curve = tuning_curve(&c.crystal, &c.geometry, &thetas, ctx.exec);
    if curve.points.is_empty() {
        let first = curve.failures.first().map(|(_, e)| e.to_string()).unwrap_or_default();
        return Err(CliError::Solver(format!("no angle in the scan phase matches: {first}")));
    }
    let mut table = Table::new(&["theta_deg", "lambda_o_nm", "lambda_e_nm", "residual"]);
    for p in &curve.points {
        table.push(vec![
            p.internal_pump_axis_angle_deg.into(),
            p.lambda_o_nm.into(),
            p.lambda_e_nm.into(),
            p.residual_mismatch.into(),
        ]);
    }
    let mut out = Outcome::default();
    ctx.write_table(&mut out, "tuning_curve", &table)?;
    for (theta, e) in &curve.failures {
        out.warnings.push(format!("theta {theta:.4} deg: {e}"));
    }
    out.lines.push(format!(
        "{} of {} angles solved between {:.4} and {:.4} deg",
        curve.points.len(),
        thetas.len(),
        t.theta_min_deg,
        hi
    ));
    Ok(out)
}

fn grid_table(grid: &JointSpectrumGrid) -> Table {
    let mut table = Table::new(&["lambda_s_nm", "lambda_i_nm", "intensity"]);
    let intensity = grid.intensity();
    let ni = grid.idler_axis().len();
    for (s, &ls) in grid.signal_axis().iter().enumerate() {
        for (i, &li) in grid.idler_axis().iter().enumerate() {
            table.push(vec![ls.into(), li.into(), intensity[s * ni + i].into()]);
        }
    }
    table
}

fn apply_grid_size(spec: GridSpec, size: Option<(usize, usize)>) -> GridSpec {
    match size {
        None => spec,
        Some((ns, ni)) => GridSpec {
            signal: AxisSpec { points: ns, ..spec.signal },
            idler: AxisSpec { points: ni, ..spec.idler },
        },
    }
}

pub fn epmf(ctx: &Context, size: Option<(usize, usize)>) -> CliResult<Outcome> {
    let c = &ctx.config;
    let spec = apply_grid_size(c.grid_spec(), size);
    let grid = epmf_grid(&ctx.model(&c.crystal)?, &spec, ctx.exec)?.normalized()?;
    let m = metrics(&grid)?;
    let mut out = Outcome::default();
    ctx.write_table(&mut out, "epmf_grid", &grid_table(&grid))?;
    ctx.write_json(&mut out, "epmf_summary", &json!({ "grid": spec, "metrics": m }))?;
    out.lines.push(format!(
        "EPMF ridge angle {:.3} deg, pearson {:.4}",
        m.ridge_angle_deg, m.pearson
    ));
    Ok(out)
}

pub fn slice_axis(pump_nm: f64, half_width_nm: f64, step_nm: f64) -> Vec<f64> {
    let n = (2.0 * half_width_nm / step_nm).round() as usize + 1;
    (0..n).map(|k| 2.0 * pump_nm - half_width_nm + step_nm * k as f64).collect()
}

pub fn cw_slices(ctx: &Context, pumps: &[f64]) -> CliResult<Outcome> {
    let c = &ctx.config;
    let pumps = if pumps.is_empty() { &c.analysis.cw_pumps_nm[..] } else { pumps };
    let model = ctx.model(&c.crystal)?;
    let slices = spdc_core::exec::map_slice(ctx.exec, pumps, |&p| {
        cw_slice(&model, p, &slice_axis(p, CW_SLICE_HALF_WIDTH_NM, CW_SLICE_STEP_NM))
    })
    .into_iter()
    .collect::<spdc_core::Result<Vec<CwSlice>>>()?;
    let mut table = Table::new(&["pump_nm", "lambda_s_nm", "lambda_i_nm", "intensity"]);
    let mut summary = Vec::new();
    let mut out = Outcome::default();
    for s in &slices {
        for ((ls, li), a) in s.signal_axis.iter().zip(&s.idler_axis).zip(&s.amplitude) {
            table.push(vec![s.pump_wavelength_nm.into(), (*ls).into(), (*li).into(), (a * a).into()]);
        }
        summary.push(json!({
            "pump_nm": s.pump_wavelength_nm,
            "center_signal_nm": s.center_signal_nm,
            "center_idler_nm": s.center_idler_nm,
            "fwhm_nm": s.fwhm_nm,
        }));
        out.lines.push(format!(
            "pump {:.1} nm: centre ({:.2}, {:.2}) nm, FWHM {}",
            s.pump_wavelength_nm,
            s.center_signal_nm,
            s.center_idler_nm,
            s.fwhm_nm.map_or("n/a".into(), |w| format!("{w:.2} nm"))
        ));
    }
    ctx.write_table(&mut out, "cw_slices", &table)?;
    ctx.write_json(&mut out, "cw_slices_summary", &summary)?;
    Ok(out)
}

pub fn joint_metrics(ctx: &Context, size: Option<(usize, usize)>, bandwidth: Option<f64>) -> CliResult<Outcome> {
    let c = &ctx.config;
    let pump = c.pulsed_pump(bandwidth)?;
    let spec = apply_grid_size(c.grid_spec(), size);
    let psi = joint_spectrum(&ctx.model(&c.crystal)?, &pump, &spec, ctx.exec)?;
    let m = metrics(&psi)?;
    let mut out = Outcome::default();
    ctx.write_table(&mut out, "joint_spectrum", &grid_table(&psi))?;
    ctx.write_json(&mut out, "metrics", &json!({ "pump": pump, "grid": spec, "metrics": m }))?;
    out.lines.push(format!(
        "pearson {:.4}, Schmidt number {:.4}, purity {:.4}, ridge angle {:.3} deg",
        m.pearson, m.schmidt_number, m.purity, m.ridge_angle_deg
    ));
    Ok(out)
}

pub fn decorrelation(ctx: &Context, size: Option<(usize, usize)>) -> CliResult<Outcome> {
    let c = &ctx.config;
    let spec = apply_grid_size(c.grid_spec(), size);
    let theta = epmf_grid(&ctx.model(&c.crystal)?, &spec, ctx.exec)?;
    let scan = decorrelation_scan(&theta, c.pump.center_wavelength_nm, c.analysis.decorrelation, ctx.exec)?;
    let mut out = Outcome::default();
    ctx.write_json(&mut out, "decorrelation", &scan)?;
    if scan.at_boundary {
        out.warnings.push("minimum |pearson| lies on the edge of the scanned bandwidth range".into());
    }
    out.lines.push(format!(
        "decorrelated at {:.3} nm pump FWHM: pearson {:.2e}, purity {:.4}",
        scan.best_bandwidth_nm, scan.metrics.pearson, scan.metrics.purity
    ));
    Ok(out)
}

pub fn resolution_budget(ctx: &Context, wavelength: Option<f64>, fiber_length_m: Option<f64>) -> CliResult<Outcome> {
    let c = &ctx.config;
    let lambda = wavelength.unwrap_or(c.analysis.resolution_wavelength_nm);
    let mut fibers = c.fibers;
    if let Some(l) = fiber_length_m {
        fibers.iter_mut().for_each(|f| f.length_m = l);
    }
    let r = resolution(&fibers[0], &fibers[1], &c.detectors[0], &c.detectors[1], c.tagger_resolution_ps as f64, lambda)?;
    let dt = effective_timing_uncertainty(&c.detectors[0], &c.detectors[1], c.tagger_resolution_ps as f64);
    let mut out = Outcome::default();
    ctx.write_json(
        &mut out,
        "resolution",
        &json!({
            "wavelength_nm": lambda,
            "resolution_nm": r,
            "timing_fwhm_ps": dt,
            "fiber_lengths_m": [fibers[0].length_m, fibers[1].length_m],
        }),
    )?;
    out.lines.push(format!("resolution at {lambda} nm: {r:.3} nm"));
    Ok(out)
}

/// Pair spectrum for `simulate`: the CW slice at the configured pump, or
/// the pulsed joint spectrum on the configured grid.
pub fn pair_spectrum(ctx: &Context) -> CliResult<PairSpectrum> {
    let c = &ctx.config;
    let s = &c.simulation;
    let mut crystal = c.crystal;
    if let Some(theta) = s.internal_angle_deg {
        crystal.tilt_deg = tilt_for_internal_angle(&crystal, c.pump.center_wavelength_nm, theta)?;
    }
    let model = ctx.model(&crystal)?;
    Ok(match c.pump.kind {
        PumpKind::Cw => {
            let p = c.pump.center_wavelength_nm;
            PairSpectrum::Cw(cw_slice(&model, p, &slice_axis(p, s.slice_half_width_nm, s.slice_step_nm))?)
        }
        PumpKind::Pulsed => PairSpectrum::Pulsed(joint_spectrum(&model, &c.pump, &c.grid_spec(), ctx.exec)?),
    })
}

pub fn run_simulation(ctx: &Context, polarizer: Option<Polarizer>, duration_s: Option<f64>) -> CliResult<Outcome> {
    let c = &ctx.config;
    let s = &c.simulation;
    let setup = c.detection_setup(polarizer.unwrap_or(s.polarizer));
    let chunking = Chunking::new(duration_s.unwrap_or(s.duration_s), s.chunk_duration_s)?;
    let spectrum = pair_spectrum(ctx)?;
    let records = simulate(&spectrum, s.pair_rate_hz, &setup, chunking, c.seed, ctx.exec)?;
    let gated = records
        .iter()
        .filter(|r| r.channel == spdc_core::montecarlo::Channel::Gated)
        .count();
    let mut out = Outcome::default();
    ctx.write_table(&mut out, "timetags", &io::time_tags_table(&records))?;
    out.lines.push(format!(
        "{} trigger and {gated} gated records over {} s (polarizer {})",
        records.len() - gated,
        chunking.duration_s,
        setup.polarizer
    ));
    Ok(out)
}

/// Default histogram window: ±8 ns around the delay of a degenerate pair.
pub fn auto_window(config: &ExperimentConfig) -> CliResult<(i64, i64)> {
    let degenerate = 2.0 * config.pump.center_wavelength_nm;
    let d = relative_delay(&config.fibers[0], degenerate, &config.fibers[1], degenerate)?;
    let center = d.round() as i64;
    Ok((center - AUTO_WINDOW_HALF_WIDTH_PS, center + AUTO_WINDOW_HALF_WIDTH_PS))
}

fn read_tags(path: &Path) -> CliResult<Vec<spdc_core::montecarlo::EventRecord>> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = io::read_text(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    } else {
        io::read_time_tags(path)
    }
}

pub fn timing_histogram(
    ctx: &Context,
    input: Option<&Path>,
    bin_width: Option<i64>,
    window: Option<(i64, i64)>,
) -> CliResult<Outcome> {
    let c = &ctx.config;
    let default_input = ctx.path("timetags", ctx.format.extension());
    let input = input.unwrap_or(&default_input);
    let records = read_tags(input)?;
    let bin = bin_width
        .or(c.analysis.histogram.bin_width_ps)
        .unwrap_or(c.tagger_resolution_ps);
    let window = match window.or(c.analysis.histogram.window_ps) {
        Some(w) => w,
        None => auto_window(c)?,
    };
    let h = histogram(&records, c.tagger_resolution_ps, bin, window)?;
    let mut out = Outcome::default();
    ctx.write_table(&mut out, "histogram", &io::histogram_table(&h))?;
    out.lines.push(format!(
        "{} coincidences in {} bins of {} ps",
        h.total(),
        h.counts.len(),
        h.bin_width_ps
    ));
    Ok(out)
}

/// Reference (gated wavelength, delay) pairs predicted by the fiber model
/// for a CW pump at the configured wavelength.
pub fn calibration_references(config: &ExperimentConfig) -> CliResult<Vec<CalibrationPoint>> {
    let pump = config.pump.center_wavelength_nm;
    config
        .analysis
        .calibration
        .reference_wavelengths_nm
        .iter()
        .map(|&w| {
            Ok(CalibrationPoint {
                wavelength_nm: w,
                time_ps: relative_delay(&config.fibers[0], conjugate_wavelength(pump, w), &config.fibers[1], w)?,
            })
        })
        .collect()
}

pub fn calibration(ctx: &Context) -> CliResult<Outcome> {
    let c = &ctx.config;
    let refs = calibration_references(c)?;
    let fit = calibrate(&refs, c.analysis.calibration.model)?;
    let mut out = Outcome::default();
    ctx.write_json(&mut out, "calibration", &fit)?;
    out.lines.push(format!(
        "{:?} fit through {} references, max residual {:.3e} nm",
        fit.model,
        refs.len(),
        fit.max_abs_residual_nm()
    ));
    Ok(out)
}

pub fn reconstruction(ctx: &Context, hist_path: Option<&Path>, fit_path: Option<&Path>) -> CliResult<Outcome> {
    let c = &ctx.config;
    let default_hist = ctx.path("histogram", ctx.format.extension());
    let default_fit = ctx.path("calibration", "json");
    let hist_path = hist_path.unwrap_or(&default_hist);
    let fit_path = fit_path.unwrap_or(&default_fit);
    let bin = c.analysis.histogram.bin_width_ps.unwrap_or(c.tagger_resolution_ps);
    let hist = io::read_histogram(hist_path, bin, c.tagger_resolution_ps)?;
    let fit: CalibrationFit = serde_json::from_str(&io::read_text(fit_path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", fit_path.display())))?;
    let pump = (c.pump.kind == PumpKind::Cw).then_some(c.pump.center_wavelength_nm);
    let spectrum = reconstruct_spectrum(&hist, &fit, pump)?;
    let mut table = Table::new(&["lambda_s_nm", "lambda_i_nm", "density"]);
    for p in &spectrum {
        table.push(vec![p.lambda_s_nm.into(), Cell::from(p.lambda_i_nm), p.density.into()]);
    }
    let mut out = Outcome::default();
    ctx.write_table(&mut out, "spectrum", &table)?;
    let extrapolated = spectrum.iter().filter(|p| p.extrapolated).count();
    if extrapolated > 0 {
        out.warnings.push(format!(
            "{extrapolated} of {} bins lie more than 10% outside the calibrated span",
            spectrum.len()
        ));
    }
    out.lines.push(format!("{} spectral bins from {} counts", spectrum.len(), hist.total()));
    Ok(out)
}

/// Transit time of the degenerate photon in each fiber, for the record.
pub fn transit_summary(config: &ExperimentConfig) -> CliResult<(f64, f64)> {
    let w = 2.0 * config.pump.center_wavelength_nm;
    Ok((arrival_time(&config.fibers[0], w)?, arrival_time(&config.fibers[1], w)?))
}
