//! Dechirped beat-signal synthesis, range spectrum and the amplitude/phase
//! observables at the floor-interface bin.
//!
//! Range maps to intermediate frequency through a linear calibration
//! `f_if = k * range` (`k = 40 MHz/m` puts a 0.30 m floor at 12 MHz). The
//! textbook sweep slope `B / T` with a 300 ms chirp would instead give a few
//! hertz, so the sweep duration only sets measurement timing; the sampled
//! record is the stretch of dechirped signal consistent with `k`.
//!
//! The beat signal is synthesised in quadrature, `sum |G| exp(j(2 pi f t + phi))`,
//! whose real part is the cosine beat. Working with the analytic signal keeps
//! the negative-frequency image from biasing the peak.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dielectric::{state_to_reflection, Materials};
use crate::error::{Error, Result};
use crate::scene::TerrainGrid;
use crate::{wrap_deg, SPEED_OF_LIGHT};

/// Amplitudes are floored here so `amplitude_db` stays finite.
const AMPLITUDE_FLOOR: f64 = 1e-12;

/// Sweep, sampling and timing parameters of the radar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChirpConfig {
    /// Sweep start frequency, Hz.
    pub carrier_start: f64,
    /// Sweep bandwidth, Hz.
    pub bandwidth: f64,
    /// Chirp duration, s.
    pub sweep_duration: f64,
    /// Beat-signal sampling rate, Hz.
    pub adc_rate: f64,
    /// Returns per second.
    pub measurement_rate: f64,
    /// Data transmit time, s.
    pub transmit_time: f64,
    /// Per-sample analysis budget, s. Also used as the simulated command latency.
    pub analysis_budget: f64,
    /// IF calibration constant, Hz per meter.
    pub if_per_meter: f64,
    /// Zero-padded FFT length.
    pub fft_len: usize,
    /// Largest range the ADC must represent, m.
    pub max_range: f64,
}

impl Default for ChirpConfig {
    fn default() -> Self {
        Self {
            carrier_start: 24.0e9,
            bandwidth: 1.5e9,
            sweep_duration: 0.300,
            adc_rate: 100.0e6,
            measurement_rate: 0.5,
            transmit_time: 1.2,
            analysis_budget: 0.031,
            if_per_meter: 40.0e6,
            fft_len: 1 << 18,
            max_range: 1.2,
        }
    }
}

impl ChirpConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_start", self.carrier_start),
            ("bandwidth", self.bandwidth),
            ("sweep_duration", self.sweep_duration),
            ("adc_rate", self.adc_rate),
            ("measurement_rate", self.measurement_rate),
            ("if_per_meter", self.if_per_meter),
            ("max_range", self.max_range),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("transmit_time", self.transmit_time),
            ("analysis_budget", self.analysis_budget),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("must be >= 0, got {v}")));
            }
        }
        let max_if = self.if_per_meter * self.max_range;
        if self.adc_rate <= 2.0 * max_if {
            return Err(Error::Configuration(format!(
                "adc_rate {} Hz violates Nyquist for max IF {} Hz",
                self.adc_rate, max_if
            )));
        }
        if self.record_len() < 2 {
            return Err(Error::Configuration(
                "record shorter than two samples; raise adc_rate or bandwidth".into(),
            ));
        }
        if self.fft_len < self.record_len() {
            return Err(Error::param(
                "fft_len",
                format!("must be >= record length {}", self.record_len()),
            ));
        }
        Ok(())
    }

    /// Sweep centre frequency, Hz.
    pub fn center_frequency(&self) -> f64 {
        self.carrier_start + self.bandwidth / 2.0
    }

    /// Range resolution `c / 2B`, m.
    pub fn range_resolution(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bandwidth)
    }

    /// Samples per record.
    ///
    /// The dechirp slope implied by `k` is `k c / 2`, so a sweep of bandwidth
    /// `B` lasts `2B / (k c)`. Two such spans are recorded: the Hann window
    /// doubles the main lobe, leaving the 6 dB resolution at `c / 2B`.
    pub fn record_len(&self) -> usize {
        let span = 2.0 * self.bandwidth / (self.if_per_meter * SPEED_OF_LIGHT);
        (2.0 * span * self.adc_rate).round() as usize
    }

    pub fn bin_spacing(&self) -> f64 {
        self.adc_rate / self.fft_len as f64
    }
}

/// Horn antenna placement and beam footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntennaGeometry {
    /// Antenna tip to floor, m.
    pub standoff: f64,
    /// Peak-amplitude spot radius at 10 cm, m.
    pub spot_radius_at_10cm: f64,
    /// Near-field divergence half angle, degrees.
    pub divergence_half_angle: f64,
    /// Illuminated floor area at the standoff, m^2.
    pub fov_area_at_standoff: f64,
}

impl Default for AntennaGeometry {
    fn default() -> Self {
        Self {
            standoff: 0.30,
            spot_radius_at_10cm: 0.0364,
            divergence_half_angle: 15.0,
            fov_area_at_standoff: 20.0e-3,
        }
    }
}

impl AntennaGeometry {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("standoff", self.standoff),
            ("fov_area_at_standoff", self.fov_area_at_standoff),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Radius of the illuminated disc at the standoff.
    pub fn fov_radius(&self) -> f64 {
        (self.fov_area_at_standoff / PI).sqrt()
    }

    /// Footprint area obtained by extrapolating the 10 cm spot along the
    /// divergence cone. Differs from the tabulated FOV; kept for reference.
    pub fn extrapolated_fov_area(&self) -> f64 {
        let r = self.spot_radius_at_10cm
            + (self.standoff - 0.10) * self.divergence_half_angle.to_radians().tan();
        PI * r * r
    }
}

pub fn range_to_if(range: f64, cfg: &ChirpConfig) -> Result<f64> {
    if !(range.is_finite() && range > 0.0) {
        return Err(Error::param("range", format!("must be > 0, got {range}")));
    }
    Ok(cfg.if_per_meter * range)
}

pub fn if_to_range(freq_hz: f64, cfg: &ChirpConfig) -> Result<f64> {
    if !(freq_hz.is_finite() && freq_hz > 0.0) {
        return Err(Error::param(
            "frequency",
            format!("must be > 0, got {freq_hz}"),
        ));
    }
    Ok(freq_hz / cfg.if_per_meter)
}

/// A point reflector in the beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub range: f64,
    pub reflection: Complex64,
}

/// Round-trip phase of a reflector: path term plus reflection phase, radians.
pub fn target_phase(target: &Target, cfg: &ChirpConfig) -> f64 {
    let path = -4.0 * PI * cfg.center_frequency() / SPEED_OF_LIGHT * target.range;
    crate::wrap_rad(path + target.reflection.arg())
}

/// Synthesises one dechirped record. An empty target list yields pure noise.
pub fn synthesize_beat(
    targets: &[Target],
    cfg: &ChirpConfig,
    noise_std: f64,
    seed: u64,
) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    if !(noise_std.is_finite() && noise_std >= 0.0) {
        return Err(Error::param(
            "noise_std",
            format!("must be >= 0, got {noise_std}"),
        ));
    }
    let n = cfg.record_len();
    let dt = 1.0 / cfg.adc_rate;
    let mut series = vec![Complex64::new(0.0, 0.0); n];
    for target in targets {
        let f_if = range_to_if(target.range, cfg)?;
        if 2.0 * f_if >= cfg.adc_rate {
            return Err(Error::Configuration(format!(
                "target at {} m gives IF {} Hz, above Nyquist for adc_rate {} Hz",
                target.range, f_if, cfg.adc_rate
            )));
        }
        let amp = target.reflection.norm();
        let phase = target_phase(target, cfg);
        let w = 2.0 * PI * f_if * dt;
        for (i, s) in series.iter_mut().enumerate() {
            *s += Complex64::from_polar(amp, w * i as f64 + phase);
        }
    }
    if noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise_std / 2f64.sqrt())
            .map_err(|e| Error::param("noise_std", e.to_string()))?;
        for s in series.iter_mut() {
            *s += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
        }
    }
    Ok(series)
}

/// Zero-padded, Hann-windowed DFT normalised so a unit tone reads 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bins: Vec<Complex64>,
    pub bin_hz: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Signed frequency of bin `i` (upper half maps to negative frequencies).
    pub fn frequency(&self, i: usize) -> f64 {
        let n = self.bins.len();
        if i < n.div_ceil(2) {
            i as f64 * self.bin_hz
        } else {
            (i as f64 - n as f64) * self.bin_hz
        }
    }

    /// Bin nearest a positive frequency, if it lies in the positive half.
    pub fn bin_of(&self, freq_hz: f64) -> Option<usize> {
        let i = (freq_hz / self.bin_hz).round();
        (i >= 0.0 && (i as usize) < self.bins.len().div_ceil(2)).then_some(i as usize)
    }

    /// Index of the strongest positive-frequency bin.
    pub fn peak_bin(&self) -> usize {
        let half = self.bins.len().div_ceil(2);
        self.bins[..half]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_hz,real,imag\n");
        for (i, b) in self.bins.iter().enumerate() {
            let _ = writeln!(out, "{:.6},{:.9e},{:.9e}", self.frequency(i), b.re, b.im);
        }
        out
    }
}

/// Symmetric Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / (n - 1) as f64).cos()))
        .collect()
}

/// Reusable range-FFT stage: planned transform plus window.
#[derive(Clone)]
pub struct RangeProcessor {
    fft: Arc<dyn Fft<f64>>,
    len: usize,
    bin_hz: f64,
}

impl std::fmt::Debug for RangeProcessor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RangeProcessor")
            .field("len", &self.len)
            .field("bin_hz", &self.bin_hz)
            .finish()
    }
}

impl RangeProcessor {
    pub fn new(cfg: &ChirpConfig) -> Self {
        let len = cfg.fft_len.max(2);
        let fft = FftPlanner::new().plan_fft_forward(len);
        Self {
            fft,
            len,
            bin_hz: cfg.adc_rate / len as f64,
        }
    }

    pub fn spectrum(&self, series: &[Complex64]) -> Result<Spectrum> {
        if series.len() < 2 {
            return Err(Error::param(
                "series",
                format!("needs at least 2 samples, got {}", series.len()),
            ));
        }
        if series.len() > self.len {
            return Err(Error::param(
                "series",
                format!("length {} exceeds FFT length {}", series.len(), self.len),
            ));
        }
        let window = hann(series.len());
        let gain: f64 = window.iter().sum();
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for ((b, s), w) in buf.iter_mut().zip(series).zip(&window) {
            *b = s * (w / gain);
        }
        self.fft.process(&mut buf);
        Ok(Spectrum {
            bins: buf,
            bin_hz: self.bin_hz,
        })
    }
}

pub fn range_spectrum(series: &[Complex64], cfg: &ChirpConfig) -> Result<Spectrum> {
    RangeProcessor::new(cfg).spectrum(series)
}

/// Amplitude and phase read at one range bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub bin: usize,
    /// dB relative to a unit reflector.
    pub amplitude_db: f64,
    /// Degrees on (-180, 180].
    pub phase_deg: f64,
}

pub fn extract_observables(
    spectrum: &Spectrum,
    at_range: f64,
    cfg: &ChirpConfig,
) -> Result<Observables> {
    let f_if = range_to_if(at_range, cfg)?;
    let bin = spectrum.bin_of(f_if).ok_or_else(|| {
        Error::param(
            "at_range",
            format!("{at_range} m maps to {f_if} Hz, outside the spectrum"),
        )
    })?;
    let z = spectrum.bins[bin];
    Ok(Observables {
        bin,
        amplitude_db: 20.0 * z.norm().max(AMPLITUDE_FLOOR).log10(),
        phase_deg: wrap_deg(z.arg().to_degrees()),
    })
}

/// One cell touched by the beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootprintCell {
    pub col: usize,
    pub row: usize,
    /// Normalised Gaussian beam weight; weights sum to 1.
    pub weight: f64,
    /// Fraction of the cell's area inside the illuminated disc.
    pub coverage: f64,
}

/// Beam footprint on the floor: each grid cell under the FOV disc is split
/// into an m x m sub-lattice, and every sub-point inside the disc carries a
/// Gaussian radial weight (sigma = radius / 2).
pub fn footprint(
    ground_point: (f64, f64),
    geom: &AntennaGeometry,
    grid: &TerrainGrid,
) -> Result<Vec<FootprintCell>> {
    let (cx, cy) = ground_point;
    grid.cell_of(cx, cy)?;
    let radius = geom.fov_radius();
    let sigma = radius / 2.0;
    let res = grid.resolution();
    // At least 4 sub-points per cell side and 16 per disc radius.
    let m = ((16.0 * res / radius).ceil() as usize).max(4);
    let h = res / m as f64;
    let (cols, rows) = grid.dims();
    let span = |lo: f64, hi: f64, n: usize| {
        let a = (lo / res).floor().max(0.0) as usize;
        let b = ((hi / res).floor().max(0.0) as usize).min(n - 1);
        a..=b
    };

    let mut out = Vec::new();
    let mut total = 0.0;
    for row in span(cy - radius, cy + radius, rows) {
        for col in span(cx - radius, cx + radius, cols) {
            let (x0, y0) = (col as f64 * res, row as f64 * res);
            let (mut w, mut count) = (0.0, 0usize);
            for j in 0..m {
                let y = y0 + (j as f64 + 0.5) * h;
                for i in 0..m {
                    let x = x0 + (i as f64 + 0.5) * h;
                    let d2 = (x - cx).powi(2) + (y - cy).powi(2);
                    if d2 > radius * radius || !grid.in_bounds(x, y) {
                        continue;
                    }
                    w += (-d2 / (2.0 * sigma * sigma)).exp();
                    count += 1;
                }
            }
            if count > 0 {
                total += w;
                out.push(FootprintCell {
                    col,
                    row,
                    weight: w,
                    coverage: count as f64 / (m * m) as f64,
                });
            }
        }
    }
    for c in &mut out {
        c.weight /= total;
    }
    Ok(out)
}

/// One sweep's processed return.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarReturn {
    pub spectrum: Spectrum,
    pub target_bin: usize,
    pub amplitude_db: f64,
    pub phase_deg: f64,
    pub timestamp: f64,
}

/// A configured radar: chirp, antenna, material constants and a planned FFT.
#[derive(Debug, Clone)]
pub struct Radar {
    pub chirp: ChirpConfig,
    pub antenna: AntennaGeometry,
    pub materials: Materials,
    processor: RangeProcessor,
}

impl Radar {
    pub fn new(chirp: ChirpConfig, antenna: AntennaGeometry, materials: Materials) -> Result<Self> {
        chirp.validate()?;
        antenna.validate()?;
        materials.validate()?;
        let processor = RangeProcessor::new(&chirp);
        Ok(Self {
            chirp,
            antenna,
            materials,
            processor,
        })
    }

    /// Beam-weighted reflection coefficient of the floor under `ground_point`.
    pub fn effective_reflection(
        &self,
        grid: &TerrainGrid,
        ground_point: (f64, f64),
    ) -> Result<Complex64> {
        let f = self.chirp.center_frequency();
        let mut gamma = Complex64::new(0.0, 0.0);
        for cell in footprint(ground_point, &self.antenna, grid)? {
            let state = grid.cell(cell.col, cell.row);
            gamma += state_to_reflection(state, f, &self.materials)? * cell.weight;
        }
        Ok(gamma)
    }

    pub fn measure(
        &self,
        grid: &TerrainGrid,
        ground_point: (f64, f64),
        noise_std: f64,
        seed: u64,
        timestamp: f64,
    ) -> Result<RadarReturn> {
        let reflection = self.effective_reflection(grid, ground_point)?;
        let target = Target {
            range: self.antenna.standoff,
            reflection,
        };
        let series = synthesize_beat(&[target], &self.chirp, noise_std, seed)?;
        let spectrum = self.processor.spectrum(&series)?;
        let obs = extract_observables(&spectrum, self.antenna.standoff, &self.chirp)?;
        Ok(RadarReturn {
            spectrum,
            target_bin: obs.bin,
            amplitude_db: obs.amplitude_db,
            phase_deg: obs.phase_deg,
            timestamp,
        })
    }
}

/// One-shot measurement; see [`Radar::measure`] for repeated use.
#[allow(clippy::too_many_arguments)]
pub fn measure(
    grid: &TerrainGrid,
    ground_point: (f64, f64),
    cfg: &ChirpConfig,
    geom: &AntennaGeometry,
    materials: &Materials,
    noise_std: f64,
    seed: u64,
    timestamp: f64,
) -> Result<RadarReturn> {
    Radar::new(*cfg, *geom, *materials)?.measure(grid, ground_point, noise_std, seed, timestamp)
}
