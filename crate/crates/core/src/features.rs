//! Frame-level features: audio power, and spectral centroid, spread and
//! flux of the force and torque magnitudes, aligned on the audio frame
//! timeline.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::signal::{self, FrameSpec, MultimodalRecording, TimeSeries};

pub const N_FEATURES: usize = 7;

/// Column order of every feature matrix, model and CSV file.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "audio_power",
    "f_centroid",
    "f_spread",
    "f_flux",
    "t_centroid",
    "t_spread",
    "t_flux",
];

pub type FeatureRow = [f64; N_FEATURES];

/// Mean squared amplitude of one frame.
pub fn audio_power(frame: &[f64]) -> Result<f64> {
    if frame.is_empty() {
        return Err(Error::EmptyFrame);
    }
    Ok(frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64)
}

/// DFT magnitudes of one frame; bin `k` (1-based) is `magnitudes[k - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrame {
    pub magnitudes: Vec<f64>,
    pub center_time: f64,
}

impl SpectralFrame {
    pub fn new(magnitudes: Vec<f64>, center_time: f64) -> Self {
        Self {
            magnitudes,
            center_time,
        }
    }

    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }
}

/// Full-length DFT magnitudes with a rectangular window. Holds a plan so
/// repeated frames of one length reuse it.
pub struct SpectrumAnalyzer {
    len: usize,
    fft: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl std::fmt::Debug for SpectrumAnalyzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectrumAnalyzer").field("len", &self.len).finish()
    }
}

impl SpectrumAnalyzer {
    pub fn new(len: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(len);
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        Self {
            len,
            fft,
            buffer: vec![Complex::default(); len],
            scratch,
        }
    }

    pub fn frame_len(&self) -> usize {
        self.len
    }

    pub fn analyze(&mut self, frame: &[f64], center_time: f64) -> Result<SpectralFrame> {
        if frame.len() != self.len {
            return Err(Error::LengthMismatch {
                left: frame.len(),
                right: self.len,
            });
        }
        for (b, &x) in self.buffer.iter_mut().zip(frame) {
            *b = Complex::new(x, 0.0);
        }
        self.fft
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        Ok(SpectralFrame::new(
            self.buffer.iter().map(|c| c.norm()).collect(),
            center_time,
        ))
    }
}

/// One-shot DFT magnitude of `frame` (length taken as the DFT size).
pub fn dft_magnitude(frame: &[f64]) -> Result<SpectralFrame> {
    if frame.is_empty() {
        return Err(Error::EmptyFrame);
    }
    SpectrumAnalyzer::new(frame.len()).analyze(frame, 0.0)
}

/// Centroid and spread in bin units (1-based bins), or `None` for an
/// all-zero spectrum.
fn centroid_spread_bins(s: &SpectralFrame) -> Option<(f64, f64)> {
    let total: f64 = s.magnitudes.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let centroid = s
        .magnitudes
        .iter()
        .enumerate()
        .map(|(i, x)| (i + 1) as f64 * x)
        .sum::<f64>()
        / total;
    let variance = s
        .magnitudes
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let d = (i + 1) as f64 - centroid;
            d * d * x
        })
        .sum::<f64>()
        / total;
    Some((centroid, variance.max(0.0).sqrt()))
}

/// Magnitude-weighted mean bin divided by the number of bins, in `(0, 1]`.
/// An all-zero spectrum gives 0.
pub fn spectral_centroid(s: &SpectralFrame) -> f64 {
    centroid_spread_bins(s).map_or(0.0, |(c, _)| c / s.len() as f64)
}

/// Magnitude-weighted standard deviation of the bin index around the
/// centroid, divided by the number of bins. An all-zero spectrum gives 0.
pub fn spectral_spread(s: &SpectralFrame) -> f64 {
    centroid_spread_bins(s).map_or(0.0, |(_, sd)| sd / s.len() as f64)
}

/// Spectrum scaled to unit sum; an all-zero spectrum maps to uniform.
fn unit_sum(s: &SpectralFrame) -> Vec<f64> {
    let total: f64 = s.magnitudes.iter().sum();
    if total <= 0.0 {
        let n = s.len() as f64;
        return vec![1.0 / n; s.len()];
    }
    s.magnitudes.iter().map(|x| x / total).collect()
}

/// Squared distance between the sum-normalized spectra of two frames.
pub fn spectral_flux(current: &SpectralFrame, previous: &SpectralFrame) -> Result<f64> {
    if current.len() != previous.len() {
        return Err(Error::LengthMismatch {
            left: current.len(),
            right: previous.len(),
        });
    }
    let a = unit_sum(current);
    let b = unit_sum(previous);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Centroid, spread and flux of one wrench frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralFeatures {
    pub center_time: f64,
    pub centroid: f64,
    pub spread: f64,
    pub flux: f64,
}

/// Running spectral feature state over one stream; flux needs the previous
/// frame's spectrum.
#[derive(Debug)]
pub(crate) struct SpectralTracker {
    analyzer: SpectrumAnalyzer,
    previous: Option<SpectralFrame>,
}

impl SpectralTracker {
    pub(crate) fn new(frame_len: usize) -> Self {
        Self {
            analyzer: SpectrumAnalyzer::new(frame_len),
            previous: None,
        }
    }

    pub(crate) fn push(&mut self, frame: &[f64], center_time: f64) -> Result<SpectralFeatures> {
        let spectrum = self.analyzer.analyze(frame, center_time)?;
        let flux = match &self.previous {
            Some(prev) => spectral_flux(&spectrum, prev)?,
            None => 0.0,
        };
        let out = SpectralFeatures {
            center_time,
            centroid: spectral_centroid(&spectrum),
            spread: spectral_spread(&spectrum),
            flux,
        };
        self.previous = Some(spectrum);
        Ok(out)
    }
}

/// Spectral features for every frame of a single-channel signal.
pub fn spectral_series(x: &TimeSeries, spec: FrameSpec) -> Result<Vec<SpectralFeatures>> {
    let frames = signal::frame_signal(x, spec)?;
    let mut tracker = SpectralTracker::new(spec.frame_len);
    frames
        .iter()
        .map(|f| tracker.push(f.samples, f.center_time))
        .collect()
}

/// `(center_time, audio_power)` for every audio frame.
pub fn audio_power_series(audio: &TimeSeries, spec: FrameSpec) -> Result<Vec<(f64, f64)>> {
    signal::frame_signal(audio, spec)?
        .iter()
        .map(|f| Ok((f.center_time, audio_power(f.samples)?)))
        .collect()
}

/// Feature rows on the audio frame timeline.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    pub timestamps: Vec<f64>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    pub fn new(timestamps: Vec<f64>, rows: Vec<FeatureRow>) -> Result<Self> {
        if timestamps.len() != rows.len() {
            return Err(Error::LengthMismatch {
                left: timestamps.len(),
                right: rows.len(),
            });
        }
        Ok(Self { timestamps, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, index: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[index])
    }
}

/// Computes the seven-column feature matrix of one recording.
///
/// Wrench features are computed separately on the force and torque
/// magnitudes and linearly interpolated onto the audio frame centers.
pub fn extract_features(
    rec: &MultimodalRecording,
    audio_spec: FrameSpec,
    wrench_spec: FrameSpec,
) -> Result<FeatureMatrix> {
    let power = audio_power_series(&rec.audio, audio_spec)?;
    let timeline: Vec<f64> = power.iter().map(|p| p.0).collect();

    let force = spectral_series(&signal::magnitude(&rec.force())?, wrench_spec)?;
    let torque = spectral_series(&signal::magnitude(&rec.torque())?, wrench_spec)?;

    let picks: [fn(&SpectralFeatures) -> f64; 3] = [|f| f.centroid, |f| f.spread, |f| f.flux];
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(6);
    for series in [&force, &torque] {
        for pick in picks {
            let points: Vec<(f64, f64)> = series.iter().map(|f| (f.center_time, pick(f))).collect();
            columns.push(signal::interpolate_to_timeline(&points, &timeline)?);
        }
    }

    let rows = power
        .iter()
        .enumerate()
        .map(|(i, &(_, p))| {
            let mut row = [0.0; N_FEATURES];
            row[0] = p;
            for (c, col) in columns.iter().enumerate() {
                row[c + 1] = col[i];
            }
            row
        })
        .collect();
    FeatureMatrix::new(timeline, rows)
}
