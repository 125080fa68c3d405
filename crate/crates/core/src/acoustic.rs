//! Frame-based acoustic low-level descriptors and their mean/std functionals.
//!
//! The "lite" preset computes 22 descriptors per frame (log-energy, ZCR,
//! F0, voicing probability, spectral centroid/flux/rolloff, MFCC 1-13,
//! jitter and shimmer proxies) and reduces each to its mean and population
//! standard deviation over the caregiver's speech, giving 44 features.
//! Exact toolkit feature sets enter through [`crate::matrix::import_features`].

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

pub const ANALYSIS_RATE: u32 = 16_000;
pub const LOG_ENERGY_FLOOR: f64 = 1e-10;
pub const MEL_FILTERS: usize = 26;
pub const N_MFCC: usize = 13;
pub const ROLLOFF_FRACTION: f64 = 0.85;

#[derive(Debug, thiserror::Error)]
pub enum AcousticError {
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("signal of {samples} samples is shorter than one {window}-sample window")]
    TooShort { samples: usize, window: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = AcousticError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(AcousticError::Config("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(AcousticError::Config("signal contains non-finite samples".into()));
        }
        Ok(Signal {
            samples,
            sample_rate,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Linear-interpolation resampling.
    pub fn resample(&self, target_rate: u32) -> Signal {
        if target_rate == self.sample_rate || self.samples.is_empty() {
            return Signal {
                samples: self.samples.clone(),
                sample_rate: target_rate,
            };
        }
        let ratio = self.sample_rate as f64 / target_rate as f64;
        let n_out = (self.samples.len() as f64 / ratio).round() as usize;
        let last = self.samples.len() - 1;
        let samples = (0..n_out)
            .map(|j| {
                let pos = j as f64 * ratio;
                let i = (pos.floor() as usize).min(last);
                let frac = pos - i as f64;
                let a = self.samples[i];
                let b = self.samples[(i + 1).min(last)];
                a + (b - a) * frac
            })
            .collect();
        Signal {
            samples,
            sample_rate: target_rate,
        }
    }
}

/// Reads 8- or 16-bit PCM, downmixes to mono and resamples to 16 kHz.
pub fn read_wav(path: &Path) -> Result<Signal> {
    read_wav_at(path, ANALYSIS_RATE)
}

pub fn read_wav_at(path: &Path, target_rate: u32) -> Result<Signal> {
    let format = |reason: String| AcousticError::Format {
        path: path.to_owned(),
        reason,
    };
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(source) if source.kind() != std::io::ErrorKind::UnexpectedEof => {
            AcousticError::Io {
                path: path.to_owned(),
                source,
            }
        }
        other => format(other.to_string()),
    })?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int {
        return Err(format("only integer PCM is supported".into()));
    }
    let scale = match spec.bits_per_sample {
        8 => 128.0,
        16 => 32768.0,
        b => return Err(format(format!("unsupported bit depth {b}"))),
    };
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(format("zero channels".into()));
    }
    let raw: Vec<i32> = reader
        .into_samples::<i32>()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format(format!("truncated or corrupt data: {e}")))?;
    if raw.len() % channels != 0 {
        return Err(format("truncated final frame".into()));
    }
    let mono: Vec<f64> = raw
        .chunks_exact(channels)
        .map(|frame| frame.iter().map(|&s| s as f64 / scale).sum::<f64>() / channels as f64)
        .collect();
    Ok(Signal::new(mono, spec.sample_rate)?.resample(target_rate))
}

/// Writes a 16-bit mono PCM file; samples are clipped to [-1, 1].
pub fn write_wav(path: &Path, sig: &Signal) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: sig.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let format = |e: hound::Error| AcousticError::Format {
        path: path.to_owned(),
        reason: e.to_string(),
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(format)?;
    for &s in &sig.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        w.write_sample(v).map_err(format)?;
    }
    w.finalize().map_err(format)
}

/// Cached FFT plan for one frame length.
#[derive(Clone)]
pub struct SpectrumAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    len: usize,
}

impl SpectrumAnalyzer {
    pub fn new(len: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(len);
        SpectrumAnalyzer { fft, len }
    }

    /// Magnitudes of DFT bins `0..=n/2`.
    pub fn magnitudes(&self, frame: &[f64]) -> Vec<f64> {
        assert_eq!(frame.len(), self.len, "frame length differs from plan");
        let mut buf: Vec<Complex<f64>> = frame.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.fft.process(&mut buf);
        buf[..=self.len / 2].iter().map(|c| c.norm()).collect()
    }
}

pub fn magnitude_spectrum(frame: &[f64]) -> Vec<f64> {
    SpectrumAnalyzer::new(frame.len()).magnitudes(frame)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowFn {
    Hamming,
    Hann,
}

impl WindowFn {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![1.0];
        }
        let denom = (n - 1) as f64;
        (0..n)
            .map(|i| {
                let c = (2.0 * PI * i as f64 / denom).cos();
                match self {
                    WindowFn::Hamming => 0.54 - 0.46 * c,
                    WindowFn::Hann => 0.5 - 0.5 * c,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    pub window_s: f64,
    pub hop_s: f64,
    pub window_fn: WindowFn,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            window_s: 0.025,
            hop_s: 0.010,
            window_fn: WindowFn::Hamming,
        }
    }
}

impl FrameConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hop_s > 0.0 && self.hop_s <= self.window_s) {
            return Err(AcousticError::Config(format!(
                "need 0 < hop_s <= window_s, got hop {} window {}",
                self.hop_s, self.window_s
            )));
        }
        Ok(())
    }

    pub fn window_len(&self, sample_rate: u32) -> usize {
        (self.window_s * sample_rate as f64).round() as usize
    }

    pub fn hop_len(&self, sample_rate: u32) -> usize {
        ((self.hop_s * sample_rate as f64).round() as usize).max(1)
    }
}

/// `floor((n - window) / hop) + 1` for `n >= window`, else 0.
pub fn frame_count(n: usize, window: usize, hop: usize) -> usize {
    if n < window || window == 0 {
        0
    } else {
        (n - window) / hop + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PitchConfig {
    pub min_hz: f64,
    pub max_hz: f64,
    pub voicing_threshold: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        PitchConfig {
            min_hz: 40.0,
            max_hz: 500.0,
            voicing_threshold: 0.45,
        }
    }
}

/// Autocorrelation pitch estimate for one (unwindowed) frame.
///
/// Uses the normalized cross-correlation between the frame and its lagged
/// copy. The longest lag searched is capped at half the frame so every
/// correlation is taken over at least half the samples. Returns
/// `(f0_hz, voicing_probability)`; `f0_hz` is 0 when unvoiced.
pub fn estimate_f0(frame: &[f64], sample_rate: u32, cfg: &PitchConfig) -> (f64, f64) {
    let n = frame.len();
    let sr = sample_rate as f64;
    if n < 4 {
        return (0.0, 0.0);
    }
    let mean = frame.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = frame.iter().map(|v| v - mean).collect();
    let energy: f64 = x.iter().map(|v| v * v).sum();
    if energy <= 1e-20 {
        return (0.0, 0.0);
    }
    let lag_min = ((sr / cfg.max_hz).ceil() as usize).max(2);
    let lag_max = ((sr / cfg.min_hz).floor() as usize).min(n / 2);
    if lag_min + 1 >= lag_max {
        return (0.0, 0.0);
    }

    // Prefix sums of x² give both window energies in O(1) per lag.
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in &x {
        prefix.push(prefix.last().unwrap() + v * v);
    }
    let nccf = |lag: usize| -> f64 {
        let m = n - lag;
        let num: f64 = x[..m].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum();
        let e0 = prefix[m];
        let e1 = prefix[n] - prefix[lag];
        let den = (e0 * e1).sqrt();
        if den <= 0.0 {
            0.0
        } else {
            num / den
        }
    };
    let lo = lag_min - 1;
    let r: Vec<f64> = (lo..=lag_max + 1).map(nccf).collect();
    let at = |lag: usize| r[lag - lo];

    let best = (lag_min..=lag_max)
        .map(at)
        .fold(f64::NEG_INFINITY, f64::max);
    let voicing = best.clamp(0.0, 1.0);
    if best <= cfg.voicing_threshold {
        return (0.0, voicing);
    }
    // First local maximum close to the global one, which avoids picking a
    // multiple of the true period.
    let lag = (lag_min..=lag_max)
        .find(|&l| at(l) >= 0.9 * best && at(l) >= at(l - 1) && at(l) >= at(l + 1))
        .unwrap_or_else(|| {
            (lag_min..=lag_max)
                .find(|&l| at(l) == best)
                .expect("maximum is attained")
        });
    let (a, b, c) = (at(lag - 1), at(lag), at(lag + 1));
    let curv = a - 2.0 * b + c;
    let shift = if curv < 0.0 {
        (0.5 * (a - c) / curv).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    (sr / (lag as f64 + shift), at(lag).clamp(0.0, 1.0))
}

/// Triangular filters on the mel scale spanning 0 Hz to Nyquist.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    weights: Vec<Vec<(usize, f64)>>,
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

impl MelFilterbank {
    pub fn new(n_filters: usize, fft_len: usize, sample_rate: u32) -> Self {
        let nyquist = sample_rate as f64 / 2.0;
        let top = hz_to_mel(nyquist);
        let edges: Vec<f64> = (0..n_filters + 2)
            .map(|i| mel_to_hz(top * i as f64 / (n_filters + 1) as f64))
            .collect();
        let bin_hz = sample_rate as f64 / fft_len as f64;
        let weights = (0..n_filters)
            .map(|m| {
                let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                (0..=fft_len / 2)
                    .filter_map(|k| {
                        let f = k as f64 * bin_hz;
                        let w = if f > lo && f <= mid {
                            (f - lo) / (mid - lo)
                        } else if f > mid && f < hi {
                            (hi - f) / (hi - mid)
                        } else {
                            0.0
                        };
                        (w > 0.0).then_some((k, w))
                    })
                    .collect()
            })
            .collect();
        MelFilterbank { weights }
    }

    pub fn energies(&self, power: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|f| f.iter().map(|&(k, w)| w * power[k]).sum())
            .collect()
    }
}

/// Orthonormal DCT-II coefficients `1..=n_coeffs` (c0 is dropped).
pub fn dct_ii(input: &[f64], n_coeffs: usize) -> Vec<f64> {
    let m = input.len() as f64;
    let scale = (2.0 / m).sqrt();
    (1..=n_coeffs)
        .map(|k| {
            scale
                * input
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * (PI * k as f64 * (i as f64 + 0.5) / m).cos())
                    .sum::<f64>()
        })
        .collect()
}

pub const LLD_NAMES: [&str; 22] = [
    "log_energy",
    "zcr",
    "f0",
    "voicing_prob",
    "spectral_centroid",
    "spectral_flux",
    "spectral_rolloff",
    "mfcc1",
    "mfcc2",
    "mfcc3",
    "mfcc4",
    "mfcc5",
    "mfcc6",
    "mfcc7",
    "mfcc8",
    "mfcc9",
    "mfcc10",
    "mfcc11",
    "mfcc12",
    "mfcc13",
    "jitter",
    "shimmer",
];

/// Descriptor columns whose functionals only pool voiced frames.
pub const VOICED_ONLY: [&str; 3] = ["f0", "jitter", "shimmer"];

pub const LITE_DIM: usize = 2 * LLD_NAMES.len();

pub fn lite_feature_names() -> Vec<String> {
    LLD_NAMES
        .iter()
        .flat_map(|n| [format!("{n}_mean"), format!("{n}_std")])
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LldMatrix {
    pub frame_times: Vec<f64>,
    /// `columns[c][t]`, in [`LLD_NAMES`] order.
    pub columns: Vec<Vec<f64>>,
    pub voiced_mask: Vec<bool>,
}

impl LldMatrix {
    pub fn n_frames(&self) -> usize {
        self.frame_times.len()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        LLD_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.columns[i].as_slice())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiteConfig {
    #[serde(default)]
    pub frame: FrameConfig,
    #[serde(default)]
    pub pitch: PitchConfig,
}

pub fn compute_llds(sig: &Signal, cfg: &FrameConfig) -> Result<LldMatrix> {
    compute_llds_with(sig, cfg, &PitchConfig::default())
}

pub fn compute_llds_with(sig: &Signal, cfg: &FrameConfig, pitch: &PitchConfig) -> Result<LldMatrix> {
    cfg.validate()?;
    let sr = sig.sample_rate;
    let win = cfg.window_len(sr);
    let hop = cfg.hop_len(sr);
    if win < 2 {
        return Err(AcousticError::Config("window shorter than 2 samples".into()));
    }
    if sig.samples.len() < win {
        return Err(AcousticError::TooShort {
            samples: sig.samples.len(),
            window: win,
        });
    }
    let n_frames = frame_count(sig.samples.len(), win, hop);
    let window = cfg.window_fn.coefficients(win);
    let analyzer = SpectrumAnalyzer::new(win);
    let mel = MelFilterbank::new(MEL_FILTERS, win, sr);
    let bin_hz = sr as f64 / win as f64;

    let mut columns = vec![Vec::with_capacity(n_frames); LLD_NAMES.len()];
    let mut voiced_mask = Vec::with_capacity(n_frames);
    let mut frame_times = Vec::with_capacity(n_frames);
    let mut prev_dist: Option<Vec<f64>> = None;
    let mut prev_voiced: Option<(f64, f64)> = None;

    for t in 0..n_frames {
        let start = t * hop;
        let frame = &sig.samples[start..start + win];
        frame_times.push((start as f64 + win as f64 / 2.0) / sr as f64);

        let energy: f64 = frame.iter().map(|v| v * v).sum();
        let log_energy = energy.max(LOG_ENERGY_FLOOR).log10();
        let crossings = frame
            .windows(2)
            .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
            .count();
        let zcr = crossings as f64 / (win - 1) as f64;
        let (f0, voicing) = estimate_f0(frame, sr, pitch);
        let voiced = f0 > 0.0;

        let windowed: Vec<f64> = frame.iter().zip(&window).map(|(a, w)| a * w).collect();
        let mags = analyzer.magnitudes(&windowed);
        let mag_sum: f64 = mags.iter().sum();
        let centroid = if mag_sum > 0.0 {
            mags.iter()
                .enumerate()
                .map(|(k, m)| k as f64 * bin_hz * m)
                .sum::<f64>()
                / mag_sum
        } else {
            0.0
        };
        let dist: Vec<f64> = if mag_sum > 0.0 {
            mags.iter().map(|m| m / mag_sum).collect()
        } else {
            vec![0.0; mags.len()]
        };
        let flux = prev_dist
            .as_ref()
            .map(|p| {
                p.iter()
                    .zip(&dist)
                    .map(|(a, b)| (b - a) * (b - a))
                    .sum::<f64>()
                    .sqrt()
            })
            .unwrap_or(0.0);
        prev_dist = Some(dist);

        let power: Vec<f64> = mags.iter().map(|m| m * m).collect();
        let total: f64 = power.iter().sum();
        let rolloff = if total > 0.0 {
            let target = ROLLOFF_FRACTION * total;
            let mut acc = 0.0;
            let mut bin = power.len() - 1;
            for (k, p) in power.iter().enumerate() {
                acc += p;
                if acc >= target {
                    bin = k;
                    break;
                }
            }
            bin as f64 * bin_hz
        } else {
            0.0
        };

        let log_mel: Vec<f64> = mel
            .energies(&power)
            .into_iter()
            .map(|e| e.max(LOG_ENERGY_FLOOR).ln())
            .collect();
        let mfcc = dct_ii(&log_mel, N_MFCC);

        let rms = (energy / win as f64).sqrt();
        let (jitter, shimmer) = match (voiced, prev_voiced) {
            (true, Some((pf0, prms))) => {
                let s = if rms > 0.0 { (rms - prms).abs() / rms } else { 0.0 };
                ((f0 - pf0).abs() / f0, s)
            }
            _ => (0.0, 0.0),
        };
        prev_voiced = voiced.then_some((f0, rms));

        let row = [log_energy, zcr, f0, voicing, centroid, flux, rolloff]
            .into_iter()
            .chain(mfcc)
            .chain([jitter, shimmer]);
        for (col, v) in columns.iter_mut().zip(row) {
            col.push(v);
        }
        voiced_mask.push(voiced);
    }
    Ok(LldMatrix {
        frame_times,
        columns,
        voiced_mask,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Functionals {
    pub values: Vec<f64>,
    /// Set when no frame fell inside any segment.
    pub empty: bool,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean and population std of every descriptor over the frames whose centre
/// lies inside any of `segments` (half-open `[start, end)` in seconds).
pub fn functionals(llds: &LldMatrix, segments: &[(f64, f64)]) -> Functionals {
    let pooled: Vec<usize> = llds
        .frame_times
        .iter()
        .enumerate()
        .filter(|(_, &t)| segments.iter().any(|&(s, e)| t >= s && t < e))
        .map(|(i, _)| i)
        .collect();
    if pooled.is_empty() {
        return Functionals {
            values: vec![0.0; LITE_DIM],
            empty: true,
        };
    }
    let voiced: Vec<usize> = pooled
        .iter()
        .copied()
        .filter(|&i| llds.voiced_mask[i])
        .collect();
    let mut values = Vec::with_capacity(LITE_DIM);
    for (name, col) in LLD_NAMES.iter().zip(&llds.columns) {
        let frames = if VOICED_ONLY.contains(name) {
            &voiced
        } else {
            &pooled
        };
        let xs: Vec<f64> = frames.iter().map(|&i| col[i]).collect();
        let (m, s) = mean_std(&xs);
        values.push(m);
        values.push(s);
    }
    Functionals {
        values,
        empty: false,
    }
}
