//! Experiment configuration: strict JSON schema with canonical serialization.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spdc_core::dispersion::{CrystalSpec, FiberSpec};
use spdc_core::epmf::{BandwidthRange, EpmfPath, GridSpec, PumpKind, PumpSpec};
use spdc_core::montecarlo::{Chunking, DetectionSetup, Polarizer, DEFAULT_CHUNK_DURATION_S};
use spdc_core::phasematching::SourceGeometry;
use spdc_core::spectrometer::{CalibrationModel, DetectorSpec};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// Directory every command writes into, unless `--out` overrides it.
    pub directory: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            directory: "out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpmfSettings {
    #[serde(default)]
    pub path: EpmfPath,
    /// Defaults to 256×256 over ±40 nm around 2λ_p.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    pub pair_rate_hz: f64,
    pub duration_s: f64,
    pub chunk_duration_s: f64,
    /// Per-photon probability of entering the fiber.
    pub coupling_efficiency: f64,
    pub asymmetry: f64,
    pub polarizer: Polarizer,
    /// Retilt the crystal to this internal pump–axis angle for the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub internal_angle_deg: Option<f64>,
    /// Half width of the CW slice sampled for pairs, around 2λ_p.
    pub slice_half_width_nm: f64,
    pub slice_step_nm: f64,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        SimulationSettings {
            pair_rate_hz: 1e6,
            duration_s: 200.0,
            chunk_duration_s: DEFAULT_CHUNK_DURATION_S,
            coupling_efficiency: 0.008,
            asymmetry: 1.0,
            polarizer: Polarizer::None,
            internal_angle_deg: None,
            slice_half_width_nm: 60.0,
            slice_step_nm: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSettings {
    pub theta_min_deg: f64,
    /// Defaults to the degeneracy angle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_max_deg: Option<f64>,
    pub points: usize,
}

impl Default for TuningSettings {
    fn default() -> Self {
        TuningSettings {
            theta_min_deg: 29.0,
            theta_max_deg: None,
            points: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramSettings {
    /// Defaults to the tagger resolution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_width_ps: Option<i64>,
    /// Defaults to ±8 ns around the predicted degenerate delay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_ps: Option<(i64, i64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSettings {
    pub model: CalibrationModel,
    /// Gated-photon wavelengths of the reference lines.
    pub reference_wavelengths_nm: Vec<f64>,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        CalibrationSettings {
            model: CalibrationModel::Quadratic,
            reference_wavelengths_nm: vec![1525.0, 1550.0, 1575.0],
        }
    }
}

fn default_cw_pumps() -> Vec<f64> {
    let mut v = vec![687.0];
    v.extend((0..10).map(|k| 700.0 + 10.0 * k as f64));
    v.extend([775.0, 796.0]);
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSettings {
    #[serde(default)]
    pub tuning: TuningSettings,
    #[serde(default = "default_cw_pumps")]
    pub cw_pumps_nm: Vec<f64>,
    #[serde(default = "default_scan")]
    pub decorrelation: BandwidthRange,
    #[serde(default)]
    pub histogram: HistogramSettings,
    #[serde(default)]
    pub calibration: CalibrationSettings,
    #[serde(default = "default_resolution_wavelength")]
    pub resolution_wavelength_nm: f64,
}

fn default_scan() -> BandwidthRange {
    BandwidthRange {
        min_nm: 2.0,
        max_nm: 40.0,
        samples: 12,
    }
}

fn default_resolution_wavelength() -> f64 {
    1550.0
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            tuning: TuningSettings::default(),
            cw_pumps_nm: default_cw_pumps(),
            decorrelation: default_scan(),
            histogram: HistogramSettings::default(),
            calibration: CalibrationSettings::default(),
            resolution_wavelength_nm: default_resolution_wavelength(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub crystal: CrystalSpec,
    pub geometry: SourceGeometry,
    pub pump: PumpSpec,
    /// Trigger arm A, gated arm B.
    pub fibers: [FiberSpec; 2],
    pub detectors: [DetectorSpec; 2],
    pub tagger_resolution_ps: i64,
    pub seed: u64,
    #[serde(default)]
    pub outputs: OutputPaths,
    #[serde(default)]
    pub epmf: EpmfSettings,
    #[serde(default)]
    pub simulation: SimulationSettings,
    #[serde(default)]
    pub analysis: AnalysisSettings,
}

fn field_check(ok: bool, field: &str, detail: String) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{field}: {detail}")))
    }
}

fn scoped<T>(field: &str, r: spdc_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Validation(format!("{field}: {e}")))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Validation(format!("{path}: {}", e.inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        scoped("crystal", self.crystal.validate())?;
        scoped("geometry", self.geometry.validate())?;
        scoped("pump", self.pump.validate())?;
        field_check(
            (self.pump.center_wavelength_nm - self.geometry.pump_wavelength_nm).abs() < 1e-9,
            "pump.center_wavelength_nm",
            format!(
                "{} differs from geometry.pump_wavelength_nm {}",
                self.pump.center_wavelength_nm, self.geometry.pump_wavelength_nm
            ),
        )?;
        scoped("fibers[0]", self.fibers[0].validate())?;
        scoped("fibers[1]", self.fibers[1].validate())?;
        scoped("detectors[0]", self.detectors[0].validate())?;
        scoped("detectors[1]", self.detectors[1].validate())?;
        field_check(!self.detectors[0].gated, "detectors[0].gated", "the trigger detector must be free-running".into())?;
        field_check(self.detectors[1].gated, "detectors[1].gated", "the second detector must be gated".into())?;
        field_check(
            self.tagger_resolution_ps >= 1,
            "tagger_resolution_ps",
            format!("must be >= 1, got {}", self.tagger_resolution_ps),
        )?;
        field_check(!self.outputs.directory.is_empty(), "outputs.directory", "must not be empty".into())?;
        if let Some(g) = &self.epmf.grid {
            scoped("epmf.grid", g.validate())?;
        }
        let s = &self.simulation;
        field_check(
            s.pair_rate_hz >= 0.0 && s.pair_rate_hz.is_finite(),
            "simulation.pair_rate_hz",
            format!("must be >= 0, got {}", s.pair_rate_hz),
        )?;
        scoped("simulation", Chunking::new(s.duration_s, s.chunk_duration_s).map(|_| ()))?;
        scoped("simulation", self.detection_setup(s.polarizer).validate())?;
        field_check(
            s.slice_half_width_nm > 0.0 && s.slice_step_nm > 0.0 && s.slice_step_nm < s.slice_half_width_nm,
            "simulation.slice_step_nm",
            "slice half width and step must be positive, step smaller than half width".into(),
        )?;
        let a = &self.analysis;
        field_check(a.tuning.points >= 2, "analysis.tuning.points", format!("must be >= 2, got {}", a.tuning.points))?;
        field_check(!a.cw_pumps_nm.is_empty(), "analysis.cw_pumps_nm", "must not be empty".into())?;
        scoped("analysis.decorrelation", a.decorrelation.validate())?;
        if let Some(b) = a.histogram.bin_width_ps {
            field_check(
                b >= 1 && b % self.tagger_resolution_ps == 0,
                "analysis.histogram.bin_width_ps",
                format!("{b} is not a positive multiple of tagger_resolution_ps"),
            )?;
        }
        if let Some((lo, hi)) = a.histogram.window_ps {
            field_check(hi > lo, "analysis.histogram.window_ps", format!("[{lo}, {hi}] is empty"))?;
        }
        Ok(())
    }

    /// Canonical form: sorted keys, two-space indentation, trailing newline.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config is always representable as JSON");
        let mut s = serde_json::to_string_pretty(&value).expect("JSON values always serialize");
        s.push('\n');
        s
    }

    pub fn sha256(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn detection_setup(&self, polarizer: Polarizer) -> DetectionSetup {
        DetectionSetup {
            fiber_a: self.fibers[0],
            fiber_b: self.fibers[1],
            detector_a: self.detectors[0].clone(),
            detector_b: self.detectors[1].clone(),
            coupling_efficiency: self.simulation.coupling_efficiency,
            tagger_resolution_ps: self.tagger_resolution_ps,
            polarizer,
            asymmetry: self.simulation.asymmetry,
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.epmf
            .grid
            .unwrap_or_else(|| GridSpec::default_for_pump(self.pump.center_wavelength_nm))
    }

    /// The configured pump if pulsed, else a pulsed pump of `bandwidth_nm`.
    pub fn pulsed_pump(&self, bandwidth_nm: Option<f64>) -> CliResult<PumpSpec> {
        match (bandwidth_nm, self.pump.kind) {
            (Some(b), _) => Ok(PumpSpec::pulsed(self.pump.center_wavelength_nm, b)),
            (None, PumpKind::Pulsed) => Ok(self.pump),
            (None, PumpKind::Cw) => Err(CliError::Validation(
                "pump.kind: a joint spectrum needs a pulsed pump; pass --bandwidth or configure a pulsed pump".into(),
            )),
        }
    }
}
