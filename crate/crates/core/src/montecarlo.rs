//! Monte Carlo of the fiber spectrometer experiment.
//!
//! Time is split into fixed chunks; every chunk draws from its own ChaCha
//! stream keyed by (seed, purpose, chunk index), so output depends only on
//! the seed and the chunk duration, never on how chunks are scheduled.
//!
//! Two routes produce time tags:
//!
//! * [`sample_pairs`] then [`detect`]: every emitted pair is materialized
//!   and then thinned photon by photon.
//! * [`simulate`]: survival does not depend on wavelength, so the Poisson
//!   process of pairs is thinned up front to those with at least one
//!   detected photon, and wavelengths are drawn only for those. Same
//!   distribution, a small fraction of the work; this is what long runs use.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::dispersion::{fiber_group_index, FiberSpec};
use crate::epmf::{CwSlice, JointSpectrumGrid};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::spectrometer::{DetectorSpec, TimingHistogram};
use crate::units::{compensated_sum, conjugate_wavelength, nm_to_um, C_M_PER_S, FWHM_PER_SIGMA};

pub const DEFAULT_CHUNK_DURATION_S: f64 = 0.05;

/// Node spacing of the transit-time lookup, nm.
const TRANSIT_STEP_NM: f64 = 0.1;

const PS_PER_S: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarizer {
    E,
    O,
    #[default]
    None,
}

impl FromStr for Polarizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e" => Ok(Polarizer::E),
            "o" => Ok(Polarizer::O),
            "none" => Ok(Polarizer::None),
            other => Err(Error::Usage(format!("polarizer must be e, o or none, got '{other}'"))),
        }
    }
}

impl std::fmt::Display for Polarizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Polarizer::E => "e",
            Polarizer::O => "o",
            Polarizer::None => "none",
        })
    }
}

/// Which fiber each polarization enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmAssignment {
    /// o-photon into arm A (trigger), e-photon into arm B (gated).
    OToA,
    OToB,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEvent {
    pub lambda_o_nm: f64,
    pub lambda_e_nm: f64,
    pub emission_time_ps: f64,
    pub arms: ArmAssignment,
}

impl PairEvent {
    pub fn lambda_a_nm(&self) -> f64 {
        match self.arms {
            ArmAssignment::OToA => self.lambda_o_nm,
            ArmAssignment::OToB => self.lambda_e_nm,
        }
    }

    pub fn lambda_b_nm(&self) -> f64 {
        match self.arms {
            ArmAssignment::OToA => self.lambda_e_nm,
            ArmAssignment::OToB => self.lambda_o_nm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Trigger,
    Gated,
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Channel::Trigger => "trigger",
            Channel::Gated => "gated",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventRecord {
    pub time_ps: i64,
    pub channel: Channel,
}

/// The spectrum pairs are drawn from. Signal is the o-photon.
#[derive(Debug, Clone, PartialEq)]
pub enum PairSpectrum {
    Cw(CwSlice),
    Pulsed(JointSpectrumGrid),
}

/// Discrete inverse-CDF sampler over the cells of a spectrum.
#[derive(Debug, Clone)]
struct SpectrumTable {
    cdf: Vec<f64>,
    signal: Vec<f64>,
    idler: Vec<f64>,
    signal_step: f64,
    idler_step: f64,
    pump_nm: Option<f64>,
    support_nm: (f64, f64),
}

impl SpectrumTable {
    fn new(spectrum: &PairSpectrum) -> Result<Self> {
        let (weights, signal, idler, signal_step, idler_step, pump_nm) = match spectrum {
            PairSpectrum::Cw(slice) => {
                let step = slice.signal_step();
                let total = compensated_sum(slice.intensity()) * step;
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Usage(format!(
                        "CW slice is not normalized (integral {total})"
                    )));
                }
                (
                    slice.intensity(),
                    slice.signal_axis.clone(),
                    Vec::new(),
                    step,
                    0.0,
                    Some(slice.pump_wavelength_nm),
                )
            }
            PairSpectrum::Pulsed(grid) => {
                if !grid.is_normalized() {
                    return Err(Error::Usage("joint spectrum grid is not normalized".into()));
                }
                (
                    grid.intensity(),
                    grid.signal_axis().to_vec(),
                    grid.idler_axis().to_vec(),
                    grid.signal_step(),
                    grid.idler_step(),
                    None,
                )
            }
        };
        let total = compensated_sum(weights.iter().copied());
        let mut acc = 0.0;
        let cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        let mut table = SpectrumTable {
            cdf,
            signal,
            idler,
            signal_step,
            idler_step,
            pump_nm,
            support_nm: (f64::INFINITY, f64::NEG_INFINITY),
        };
        table.support_nm = table.support(&weights);
        Ok(table)
    }

    /// Wavelength range any sampled photon can take.
    fn support(&self, weights: &[f64]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut include = |a: f64, b: f64| {
            lo = lo.min(a.min(b));
            hi = hi.max(a.max(b));
        };
        for (k, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            match self.pump_nm {
                Some(p) => {
                    let (a, b) = (self.signal[k] - 0.5 * self.signal_step, self.signal[k] + 0.5 * self.signal_step);
                    include(a, b);
                    include(conjugate_wavelength(p, a), conjugate_wavelength(p, b));
                }
                None => {
                    let ni = self.idler.len();
                    let (s, i) = (self.signal[k / ni], self.idler[k % ni]);
                    include(s - 0.5 * self.signal_step, s + 0.5 * self.signal_step);
                    include(i - 0.5 * self.idler_step, i + 0.5 * self.idler_step);
                }
            }
        }
        (lo, hi)
    }

    /// (λ_o, λ_e) with uniform dithering inside the chosen cell.
    fn draw<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let u: f64 = rng.random();
        let k = self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1);
        match self.pump_nm {
            Some(p) => {
                let s = self.signal[k] + (rng.random::<f64>() - 0.5) * self.signal_step;
                (s, conjugate_wavelength(p, s))
            }
            None => {
                let ni = self.idler.len();
                let s = self.signal[k / ni] + (rng.random::<f64>() - 0.5) * self.signal_step;
                let i = self.idler[k % ni] + (rng.random::<f64>() - 0.5) * self.idler_step;
                (s, i)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Purpose {
    Pairs = 1,
    Photons = 2,
    Darks = 3,
    Thinned = 4,
}

fn chunk_rng(seed: u64, purpose: Purpose, chunk: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8] = purpose as u8;
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(chunk);
    rng
}

/// Chunked time axis of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chunking {
    pub duration_s: f64,
    pub chunk_duration_s: f64,
}

impl Chunking {
    pub fn new(duration_s: f64, chunk_duration_s: f64) -> Result<Self> {
        if !(duration_s >= 0.0 && duration_s.is_finite()) {
            return Err(Error::Usage(format!("duration must be >= 0 s, got {duration_s}")));
        }
        if !(chunk_duration_s > 0.0 && chunk_duration_s.is_finite()) {
            return Err(Error::Usage(format!("chunk duration must be > 0 s, got {chunk_duration_s}")));
        }
        Ok(Chunking {
            duration_s,
            chunk_duration_s,
        })
    }

    pub fn count(&self) -> usize {
        (self.duration_s / self.chunk_duration_s).ceil() as usize
    }

    /// [start, end) of chunk `k`, ps.
    pub fn window_ps(&self, k: usize) -> (f64, f64) {
        let start = k as f64 * self.chunk_duration_s * PS_PER_S;
        let end = ((k + 1) as f64 * self.chunk_duration_s).min(self.duration_s) * PS_PER_S;
        (start, end)
    }
}

/// Event times of a Poisson process with `rate_per_ps` on [start, end).
fn poisson_times<R: Rng>(rng: &mut R, rate_per_ps: f64, start: f64, end: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if !(rate_per_ps > 0.0) {
        return out;
    }
    let gap = Exp::new(rate_per_ps).expect("rate checked positive");
    let mut t = start;
    loop {
        t += gap.sample(rng);
        if t >= end {
            return out;
        }
        out.push(t);
    }
}

fn check_rate(pair_rate_hz: f64) -> Result<()> {
    if !(pair_rate_hz >= 0.0 && pair_rate_hz.is_finite()) {
        return Err(Error::Usage(format!("pair rate must be >= 0 Hz, got {pair_rate_hz}")));
    }
    Ok(())
}

/// Poisson pair emission with wavelengths drawn from `spectrum`.
pub fn sample_pairs(
    spectrum: &PairSpectrum,
    pair_rate_hz: f64,
    chunking: Chunking,
    seed: u64,
    exec: Execution,
) -> Result<Vec<PairEvent>> {
    check_rate(pair_rate_hz)?;
    let table = SpectrumTable::new(spectrum)?;
    let rate = pair_rate_hz / PS_PER_S;
    let chunks = map_indexed(exec, chunking.count(), |k| {
        let mut rng = chunk_rng(seed, Purpose::Pairs, k as u64);
        let (start, end) = chunking.window_ps(k);
        poisson_times(&mut rng, rate, start, end)
            .into_iter()
            .map(|t| {
                let (o, e) = table.draw(&mut rng);
                let arms = if rng.random::<bool>() {
                    ArmAssignment::OToA
                } else {
                    ArmAssignment::OToB
                };
                PairEvent {
                    lambda_o_nm: o,
                    lambda_e_nm: e,
                    emission_time_ps: t,
                    arms,
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(chunks.concat())
}

/// Fixed part of the detection chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSetup {
    pub fiber_a: FiberSpec,
    pub fiber_b: FiberSpec,
    /// Free-running trigger detector on arm A.
    pub detector_a: DetectorSpec,
    /// Gated detector on arm B.
    pub detector_b: DetectorSpec,
    /// Per-photon probability of reaching the fiber.
    pub coupling_efficiency: f64,
    pub tagger_resolution_ps: i64,
    #[serde(default)]
    pub polarizer: Polarizer,
    /// Survival factor of the trigger photon when the o-photon goes to arm A.
    #[serde(default = "unit")]
    pub asymmetry: f64,
}

fn unit() -> f64 {
    1.0
}

impl DetectionSetup {
    pub fn validate(&self) -> Result<()> {
        self.fiber_a.validate()?;
        self.fiber_b.validate()?;
        self.detector_a.validate()?;
        self.detector_b.validate()?;
        if self.detector_a.gated {
            return Err(Error::Precondition("detector A must be free-running".into()));
        }
        if !self.detector_b.gated {
            return Err(Error::Precondition("detector B must be gated".into()));
        }
        if !(0.0..=1.0).contains(&self.coupling_efficiency) {
            return Err(Error::Precondition(format!(
                "coupling_efficiency must lie in [0, 1], got {}",
                self.coupling_efficiency
            )));
        }
        if !(0.0..=1.0).contains(&self.asymmetry) {
            return Err(Error::Precondition(format!("asymmetry must lie in [0, 1], got {}", self.asymmetry)));
        }
        if self.tagger_resolution_ps < 1 {
            return Err(Error::Precondition(format!(
                "tagger_resolution_ps must be >= 1, got {}",
                self.tagger_resolution_ps
            )));
        }
        Ok(())
    }

    /// Probability that the arm-A photon of a pair produces a trigger click.
    pub fn survival_a(&self, arms: ArmAssignment) -> f64 {
        let passes = match (self.polarizer, arms) {
            (Polarizer::None, _) => true,
            (Polarizer::O, a) => a == ArmAssignment::OToA,
            (Polarizer::E, a) => a == ArmAssignment::OToB,
        };
        if !passes {
            return 0.0;
        }
        let branch = if arms == ArmAssignment::OToA { self.asymmetry } else { 1.0 };
        self.coupling_efficiency * self.detector_a.efficiency * branch
    }

    pub fn survival_b(&self) -> f64 {
        self.coupling_efficiency * self.detector_b.efficiency
    }
}

/// Fiber transit time tabulated on a fixed 0.1 nm lattice, linearly interpolated.
#[derive(Debug, Clone)]
struct TransitTable {
    first_nm: f64,
    times_ps: Vec<f64>,
}

impl TransitTable {
    fn new(fiber: &FiberSpec, lo_nm: f64, hi_nm: f64) -> Result<Self> {
        // Anchor nodes on the global lattice so the table does not depend on the range.
        let first = (lo_nm / TRANSIT_STEP_NM).floor() as i64;
        let last = (hi_nm / TRANSIT_STEP_NM).ceil() as i64 + 1;
        let scale = fiber.length_m / C_M_PER_S * PS_PER_S;
        let times_ps = (first..=last)
            .map(|k| {
                let nm = k as f64 * TRANSIT_STEP_NM;
                Ok(scale * fiber_group_index(fiber, nm_to_um(nm))? + fiber.delay_offset_ps)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TransitTable {
            first_nm: first as f64 * TRANSIT_STEP_NM,
            times_ps,
        })
    }

    fn eval(&self, nm: f64) -> f64 {
        let x = (nm - self.first_nm) / TRANSIT_STEP_NM;
        let k = (x.floor().max(0.0) as usize).min(self.times_ps.len() - 2);
        let t = x - k as f64;
        self.times_ps[k] * (1.0 - t) + self.times_ps[k + 1] * t
    }
}

struct Chain<'a> {
    setup: &'a DetectionSetup,
    transit_a: TransitTable,
    transit_b: TransitTable,
    jitter_a: Normal<f64>,
    jitter_b: Normal<f64>,
    tick: i64,
}

impl<'a> Chain<'a> {
    fn new(setup: &'a DetectionSetup, range_nm: (f64, f64)) -> Result<Self> {
        setup.validate()?;
        let (lo, hi) = if range_nm.0 <= range_nm.1 {
            range_nm
        } else {
            // Nothing to propagate; any in-band node will do.
            (1550.0, 1550.0)
        };
        let jitter = |d: &DetectorSpec| {
            Normal::new(0.0, d.jitter_fwhm_ps / FWHM_PER_SIGMA)
                .map_err(|e| Error::Precondition(format!("detector '{}': {e}", d.label)))
        };
        Ok(Chain {
            setup,
            transit_a: TransitTable::new(&setup.fiber_a, lo, hi)?,
            transit_b: TransitTable::new(&setup.fiber_b, lo, hi)?,
            jitter_a: jitter(&setup.detector_a)?,
            jitter_b: jitter(&setup.detector_b)?,
            tick: setup.tagger_resolution_ps,
        })
    }

    fn quantize(&self, t_ps: f64) -> i64 {
        let ticks = (t_ps.max(0.0) / self.tick as f64).floor() as i64;
        ticks * self.tick
    }

    fn click_a<R: Rng>(&self, rng: &mut R, emission: f64, nm: f64) -> EventRecord {
        let t = emission + self.transit_a.eval(nm) + self.jitter_a.sample(rng);
        EventRecord {
            time_ps: self.quantize(t),
            channel: Channel::Trigger,
        }
    }

    fn click_b<R: Rng>(&self, rng: &mut R, emission: f64, nm: f64) -> EventRecord {
        let t = emission + self.transit_b.eval(nm) + self.jitter_b.sample(rng);
        EventRecord {
            time_ps: self.quantize(t),
            channel: Channel::Gated,
        }
    }

    fn darks(&self, seed: u64, chunk: usize, window: (f64, f64), out: &mut Vec<EventRecord>) {
        let mut rng = chunk_rng(seed, Purpose::Darks, chunk as u64);
        for (rate_hz, channel) in [
            (self.setup.detector_a.dark_count_rate_hz, Channel::Trigger),
            (self.setup.detector_b.dark_count_rate_hz, Channel::Gated),
        ] {
            for t in poisson_times(&mut rng, rate_hz / PS_PER_S, window.0, window.1) {
                out.push(EventRecord {
                    time_ps: self.quantize(t),
                    channel,
                });
            }
        }
    }

    /// Keep every trigger and those gated clicks that fall inside a gate.
    fn gate(&self, mut clicks: Vec<EventRecord>) -> Vec<EventRecord> {
        clicks.sort_unstable();
        let (start, end) = self
            .setup
            .detector_b
            .gate_window_ps()
            .expect("detector B validated as gated");
        let triggers: Vec<i64> = clicks
            .iter()
            .filter(|r| r.channel == Channel::Trigger)
            .map(|r| r.time_ps)
            .collect();
        clicks.retain(|r| {
            if r.channel == Channel::Trigger {
                return true;
            }
            let t = r.time_ps as f64;
            // Latest trigger whose gate has opened by t.
            let k = triggers.partition_point(|&tr| tr as f64 + start <= t);
            k > 0 && t <= triggers[k - 1] as f64 + end
        });
        clicks
    }
}

fn pair_range(pairs: &[PairEvent]) -> (f64, f64) {
    pairs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.lambda_o_nm.min(p.lambda_e_nm)), hi.max(p.lambda_o_nm.max(p.lambda_e_nm)))
    })
}

/// Detection of a materialized pair stream (sorted by emission time).
pub fn detect(
    pairs: &[PairEvent],
    setup: &DetectionSetup,
    chunking: Chunking,
    seed: u64,
    exec: Execution,
) -> Result<Vec<EventRecord>> {
    if pairs.windows(2).any(|w| w[1].emission_time_ps < w[0].emission_time_ps) {
        return Err(Error::Usage("pair stream must be sorted by emission time".into()));
    }
    let chain = Chain::new(setup, pair_range(pairs))?;
    let chunk_ps = chunking.chunk_duration_s * PS_PER_S;
    let per_chunk = map_indexed(exec, chunking.count(), |k| {
        let (start, end) = chunking.window_ps(k);
        let lo = pairs.partition_point(|p| p.emission_time_ps < k as f64 * chunk_ps);
        let hi = pairs.partition_point(|p| p.emission_time_ps < (k + 1) as f64 * chunk_ps);
        let mut rng = chunk_rng(seed, Purpose::Photons, k as u64);
        let mut out = Vec::new();
        for p in &pairs[lo..hi] {
            let (ua, ub): (f64, f64) = (rng.random(), rng.random());
            if ua < setup.survival_a(p.arms) {
                out.push(chain.click_a(&mut rng, p.emission_time_ps, p.lambda_a_nm()));
            }
            if ub < setup.survival_b() {
                out.push(chain.click_b(&mut rng, p.emission_time_ps, p.lambda_b_nm()));
            }
        }
        chain.darks(seed, k, (start, end), &mut out);
        out
    });
    Ok(chain.gate(per_chunk.concat()))
}

/// Emission and detection in one pass, drawing only pairs that leave a click.
pub fn simulate(
    spectrum: &PairSpectrum,
    pair_rate_hz: f64,
    setup: &DetectionSetup,
    chunking: Chunking,
    seed: u64,
    exec: Execution,
) -> Result<Vec<EventRecord>> {
    check_rate(pair_rate_hz)?;
    let table = SpectrumTable::new(spectrum)?;
    let chain = Chain::new(setup, table.support_nm)?;
    let pb = setup.survival_b();
    let branches = [ArmAssignment::OToA, ArmAssignment::OToB].map(|arms| {
        let pa = setup.survival_a(arms);
        (arms, pa, 1.0 - (1.0 - pa) * (1.0 - pb))
    });
    let per_chunk = map_indexed(exec, chunking.count(), |k| {
        let window = chunking.window_ps(k);
        let mut rng = chunk_rng(seed, Purpose::Thinned, k as u64);
        let mut out = Vec::new();
        for &(arms, pa, p_any) in &branches {
            let rate = 0.5 * pair_rate_hz * p_any / PS_PER_S;
            for t in poisson_times(&mut rng, rate, window.0, window.1) {
                // Condition on at least one click: A only, B only or both.
                let u = rng.random::<f64>() * p_any;
                let (hit_a, hit_b) = if u < pa * (1.0 - pb) {
                    (true, false)
                } else if u < pa * (1.0 - pb) + (1.0 - pa) * pb {
                    (false, true)
                } else {
                    (true, true)
                };
                let (o, e) = table.draw(&mut rng);
                let pair = PairEvent {
                    lambda_o_nm: o,
                    lambda_e_nm: e,
                    emission_time_ps: t,
                    arms,
                };
                if hit_a {
                    out.push(chain.click_a(&mut rng, t, pair.lambda_a_nm()));
                }
                if hit_b {
                    out.push(chain.click_b(&mut rng, t, pair.lambda_b_nm()));
                }
            }
        }
        chain.darks(seed, k, window, &mut out);
        out
    });
    Ok(chain.gate(per_chunk.concat()))
}

/// Histogram of (gated − latest preceding trigger) over `window_ps`.
///
/// The window start is rounded down to a whole bin; delays outside the
/// window are not counted.
pub fn histogram(
    records: &[EventRecord],
    tagger_resolution_ps: i64,
    bin_width_ps: i64,
    window_ps: (i64, i64),
) -> Result<TimingHistogram> {
    if tagger_resolution_ps < 1 || bin_width_ps < 1 || bin_width_ps % tagger_resolution_ps != 0 {
        return Err(Error::Usage(format!(
            "bin width {bin_width_ps} ps must be a positive multiple of the tagger resolution {tagger_resolution_ps} ps"
        )));
    }
    if window_ps.1 <= window_ps.0 {
        return Err(Error::Usage(format!("empty histogram window {window_ps:?} ps")));
    }
    let origin = window_ps.0.div_euclid(bin_width_ps) * bin_width_ps;
    let bins = (window_ps.1 - origin + bin_width_ps - 1) / bin_width_ps;
    let mut counts = vec![0u64; bins as usize];
    let mut sorted = records.to_vec();
    sorted.sort_unstable();
    let mut last_trigger = None;
    for r in sorted {
        match (r.channel, last_trigger) {
            (Channel::Trigger, _) => last_trigger = Some(r.time_ps),
            (Channel::Gated, Some(t0)) => {
                let k = (r.time_ps - t0 - origin).div_euclid(bin_width_ps);
                if (0..bins).contains(&k) {
                    counts[k as usize] += 1;
                }
            }
            (Channel::Gated, None) => {}
        }
    }
    Ok(TimingHistogram {
        bin_width_ps,
        origin_ps: origin,
        counts,
        tick_ps: tagger_resolution_ps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateInputs {
    pub pair_rate_hz: f64,
    pub coupling_efficiency: f64,
    pub efficiency_a: f64,
    pub efficiency_b: f64,
    pub dark_rate_a_hz: f64,
    pub dark_rate_b_hz: f64,
    /// Fraction of time the gated detector is armed.
    pub gate_duty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBudget {
    pub singles_a_hz: f64,
    /// Clicks detector B would register if it were never gated off.
    pub singles_b_hz: f64,
    pub coincidences_hz: f64,
    /// Uncorrelated clicks landing in an open gate.
    pub accidentals_hz: f64,
    pub gated_hz: f64,
}

/// First-order rate model, no multi-pair terms.
pub fn rate_budget(r: &RateInputs) -> Result<RateBudget> {
    for (name, v) in [
        ("coupling_efficiency", r.coupling_efficiency),
        ("efficiency_a", r.efficiency_a),
        ("efficiency_b", r.efficiency_b),
        ("gate_duty", r.gate_duty),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Precondition(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    for (name, v) in [
        ("pair_rate_hz", r.pair_rate_hz),
        ("dark_rate_a_hz", r.dark_rate_a_hz),
        ("dark_rate_b_hz", r.dark_rate_b_hz),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Precondition(format!("{name} must be >= 0, got {v}")));
        }
    }
    let singles_a = r.pair_rate_hz * r.coupling_efficiency * r.efficiency_a + r.dark_rate_a_hz;
    let singles_b = r.pair_rate_hz * r.coupling_efficiency * r.efficiency_b + r.dark_rate_b_hz;
    let coincidences = r.pair_rate_hz * r.coupling_efficiency.powi(2) * r.efficiency_a * r.efficiency_b;
    let accidentals = singles_b * r.gate_duty;
    Ok(RateBudget {
        singles_a_hz: singles_a,
        singles_b_hz: singles_b,
        coincidences_hz: coincidences,
        accidentals_hz: accidentals,
        gated_hz: coincidences + accidentals,
    })
}

/// Fraction of time covered by at least one gate of `gate_width_ns` opened
/// by Poisson triggers at `trigger_rate_hz`.
pub fn gate_duty(trigger_rate_hz: f64, gate_width_ns: f64) -> f64 {
    1.0 - (-trigger_rate_hz * gate_width_ns * 1e-9).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrometer::arrival_time;

    fn line_slice(center: f64) -> CwSlice {
        let signal_axis: Vec<f64> = (0..41).map(|k| center - 2.0 + 0.1 * k as f64).collect();
        let raw: Vec<f64> = signal_axis
            .iter()
            .map(|s| (-(s - center) * (s - center) / 0.5).exp())
            .collect();
        let norm = (compensated_sum(raw.iter().map(|a| a * a)) * 0.1).sqrt();
        let pump = 775.0;
        CwSlice {
            pump_wavelength_nm: pump,
            idler_axis: signal_axis.iter().map(|&s| conjugate_wavelength(pump, s)).collect(),
            amplitude: raw.iter().map(|a| a / norm).collect(),
            center_signal_nm: center,
            center_idler_nm: conjugate_wavelength(pump, center),
            fwhm_nm: None,
            signal_axis,
        }
    }

    fn noiseless() -> DetectionSetup {
        DetectionSetup {
            fiber_a: FiberSpec::standard(4202.0),
            fiber_b: FiberSpec::standard(4217.0),
            detector_a: DetectorSpec::free_running("a", 0.0, 1.0, 0.0),
            detector_b: DetectorSpec::gated("b", 0.0, 1.0, 0.0, 100.0),
            coupling_efficiency: 1.0,
            tagger_resolution_ps: 1,
            polarizer: Polarizer::None,
            asymmetry: 1.0,
        }
    }

    #[test]
    fn zero_duration_is_empty() {
        let spectrum = PairSpectrum::Cw(line_slice(1550.0));
        let c = Chunking::new(0.0, 0.01).unwrap();
        assert!(sample_pairs(&spectrum, 1e6, c, 1, Execution::Sequential).unwrap().is_empty());
    }

    #[test]
    fn cw_pairs_conserve_energy() {
        let spectrum = PairSpectrum::Cw(line_slice(1538.0));
        let c = Chunking::new(1e-3, 1e-4).unwrap();
        let pairs = sample_pairs(&spectrum, 1e6, c, 3, Execution::Sequential).unwrap();
        assert!(pairs.len() > 800);
        for p in &pairs {
            let r = 1.0 / p.lambda_o_nm + 1.0 / p.lambda_e_nm - 1.0 / 775.0;
            assert!(r.abs() < 1e-15, "{r}");
        }
        assert!(pairs.windows(2).all(|w| w[0].emission_time_ps <= w[1].emission_time_ps));
    }

    #[test]
    fn sampling_is_independent_of_execution_mode() {
        let spectrum = PairSpectrum::Cw(line_slice(1550.0));
        let c = Chunking::new(2e-3, 1e-4).unwrap();
        let a = sample_pairs(&spectrum, 1e6, c, 9, Execution::Sequential).unwrap();
        let b = sample_pairs(&spectrum, 1e6, c, 9, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let c2 = sample_pairs(&spectrum, 1e6, c, 10, Execution::Sequential).unwrap();
        assert_ne!(a, c2);
    }

    #[test]
    fn unnormalized_slice_is_usage_error() {
        let mut s = line_slice(1550.0);
        s.amplitude.iter_mut().for_each(|a| *a *= 2.0);
        let c = Chunking::new(1e-3, 1e-3).unwrap();
        let r = sample_pairs(&PairSpectrum::Cw(s), 1e6, c, 1, Execution::Sequential);
        assert!(matches!(r, Err(Error::Usage(_))));
    }

    #[test]
    fn single_noiseless_pair_gives_one_coincidence() {
        let setup = noiseless();
        let pair = PairEvent {
            lambda_o_nm: 1538.0,
            lambda_e_nm: 1561.0,
            emission_time_ps: 1000.0,
            arms: ArmAssignment::OToA,
        };
        let c = Chunking::new(1e-6, 1e-6).unwrap();
        let rec = detect(&[pair], &setup, c, 5, Execution::Sequential).unwrap();
        assert_eq!(rec.len(), 2);
        let expected = arrival_time(&setup.fiber_b, 1561.0).unwrap() - arrival_time(&setup.fiber_a, 1538.0).unwrap();
        let trig = rec.iter().find(|r| r.channel == Channel::Trigger).unwrap().time_ps;
        let gated = rec.iter().find(|r| r.channel == Channel::Gated).unwrap().time_ps;
        assert!(((gated - trig) as f64 - expected).abs() <= 1.0, "{} vs {expected}", gated - trig);

        let h = histogram(&rec, 1, 1, (0, 100_000)).unwrap();
        assert_eq!(h.total(), 1);
        let bin = h.counts.iter().position(|&c| c == 1).unwrap();
        assert_eq!(h.bin_start(bin), gated - trig);
    }

    #[test]
    fn polarizer_removes_one_branch() {
        let mut setup = noiseless();
        let mk = |arms| PairEvent {
            lambda_o_nm: 1538.0,
            lambda_e_nm: 1561.0,
            emission_time_ps: 0.0,
            arms,
        };
        setup.polarizer = Polarizer::E;
        assert_eq!(setup.survival_a(ArmAssignment::OToA), 0.0);
        assert_eq!(setup.survival_a(ArmAssignment::OToB), 1.0);
        let c = Chunking::new(1e-6, 1e-6).unwrap();
        let rec = detect(&[mk(ArmAssignment::OToA)], &setup, c, 1, Execution::Sequential).unwrap();
        assert!(rec.iter().all(|r| r.channel != Channel::Trigger));
        // No trigger, so no gate: the B photon is lost too.
        assert!(rec.is_empty());
        assert!("x".parse::<Polarizer>().is_err());
        assert_eq!("o".parse::<Polarizer>().unwrap(), Polarizer::O);
    }

    #[test]
    fn timestamps_are_quantized() {
        let mut setup = noiseless();
        setup.tagger_resolution_ps = 156;
        setup.detector_a.jitter_fwhm_ps = 156.0;
        let spectrum = PairSpectrum::Cw(line_slice(1550.0));
        let c = Chunking::new(1e-3, 1e-4).unwrap();
        let rec = simulate(&spectrum, 1e5, &setup, c, 2, Execution::Sequential).unwrap();
        assert!(!rec.is_empty());
        assert!(rec.iter().all(|r| r.time_ps >= 0 && r.time_ps % 156 == 0));
        assert!(rec.windows(2).all(|w| w[0].time_ps <= w[1].time_ps));
    }

    #[test]
    fn histogram_bin_must_be_tagger_multiple() {
        assert!(matches!(histogram(&[], 156, 100, (0, 1000)), Err(Error::Usage(_))));
        let h = histogram(&[], 156, 312, (0, 1000)).unwrap();
        assert_eq!(h.total(), 0);
    }

    #[test]
    fn ideal_rates_equal_pair_rate() {
        let b = rate_budget(&RateInputs {
            pair_rate_hz: 1e6,
            coupling_efficiency: 1.0,
            efficiency_a: 1.0,
            efficiency_b: 1.0,
            dark_rate_a_hz: 0.0,
            dark_rate_b_hz: 0.0,
            gate_duty: 0.0,
        })
        .unwrap();
        assert_eq!(b.singles_a_hz, 1e6);
        assert_eq!(b.coincidences_hz, 1e6);
    }

    #[test]
    fn transit_table_matches_direct_evaluation() {
        let f = FiberSpec::standard(4202.0);
        let table = TransitTable::new(&f, 1530.0, 1570.0).unwrap();
        for nm in [1530.0, 1538.37, 1550.0, 1561.05, 1569.99] {
            let direct = arrival_time(&f, nm).unwrap();
            assert!((table.eval(nm) - direct).abs() < 0.01, "{nm}");
        }
    }
}
