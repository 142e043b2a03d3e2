//! Uniformly sampled signals, framing, channel magnitude and timeline
//! interpolation.
//!
//! Audio and wrench streams are assumed to share one time base at ingest;
//! no clock drift correction is attempted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniformly sampled, possibly multi-channel signal.
///
/// Sample `n` of every channel is taken at `start_time + n / sample_rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    channels: Vec<Vec<f64>>,
    sample_rate: f64,
    start_time: f64,
}

impl TimeSeries {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: f64, start_time: f64) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::invalid("time series", "no channels"));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::invalid(
                "time series",
                format!("sample rate must be positive, got {sample_rate}"),
            ));
        }
        if !start_time.is_finite() {
            return Err(Error::invalid("time series", "start time is not finite"));
        }
        let len = channels[0].len();
        if let Some(bad) = channels.iter().find(|c| c.len() != len) {
            return Err(Error::LengthMismatch {
                left: len,
                right: bad.len(),
            });
        }
        Ok(Self {
            channels,
            sample_rate,
            start_time,
        })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: f64, start_time: f64) -> Result<Self> {
        Self::new(vec![samples], sample_rate, start_time)
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    /// Time just past the last sample, `start_time + len / sample_rate`.
    pub fn end_time(&self) -> f64 {
        self.start_time + self.len() as f64 / self.sample_rate
    }

    pub fn timestamp(&self, n: usize) -> f64 {
        self.start_time + n as f64 / self.sample_rate
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    /// New series made of the channels in `range`.
    pub fn select(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.n_channels() || range.is_empty() {
            return Err(Error::ChannelCount {
                expected: range.end,
                actual: self.n_channels(),
            });
        }
        Self::new(
            self.channels[range].to_vec(),
            self.sample_rate,
            self.start_time,
        )
    }
}

/// Frame length and hop, both in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub frame_len: usize,
    pub hop: usize,
}

impl FrameSpec {
    /// 512-sample frames with a 160-sample hop, used for audio power.
    pub const AUDIO: FrameSpec = FrameSpec {
        frame_len: 512,
        hop: 160,
    };
    /// 160-sample frames with a 128-sample hop, used for the wrench spectra.
    pub const WRENCH: FrameSpec = FrameSpec {
        frame_len: 160,
        hop: 128,
    };

    pub fn new(frame_len: usize, hop: usize) -> Result<Self> {
        let spec = Self { frame_len, hop };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_len == 0 || self.hop == 0 {
            return Err(Error::invalid(
                "frame spec",
                format!("frame_len={} hop={} must both be >= 1", self.frame_len, self.hop),
            ));
        }
        Ok(())
    }

    /// Number of complete frames in a signal of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.frame_len {
            0
        } else {
            (len - self.frame_len) / self.hop + 1
        }
    }

    /// Center of frame `index`, in seconds.
    pub fn center_time(&self, index: usize, sample_rate: f64, start_time: f64) -> f64 {
        start_time + (index * self.hop) as f64 / sample_rate + self.frame_len as f64 / 2.0 / sample_rate
    }
}

/// A borrowed window of a signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame<'a> {
    pub start: usize,
    pub samples: &'a [f64],
    pub center_time: f64,
}

/// Splits a single-channel signal into complete frames; trailing samples
/// that do not fill a frame are dropped.
pub fn frame_signal<'a>(x: &'a TimeSeries, spec: FrameSpec) -> Result<Vec<Frame<'a>>> {
    spec.validate()?;
    if x.n_channels() != 1 {
        return Err(Error::ChannelCount {
            expected: 1,
            actual: x.n_channels(),
        });
    }
    let samples = x.channel(0);
    if samples.len() < spec.frame_len {
        return Err(Error::SignalTooShort {
            len: samples.len(),
            frame_len: spec.frame_len,
        });
    }
    Ok((0..spec.frame_count(samples.len()))
        .map(|i| {
            let start = i * spec.hop;
            Frame {
                start,
                samples: &samples[start..start + spec.frame_len],
                center_time: spec.center_time(i, x.sample_rate(), x.start_time()),
            }
        })
        .collect())
}

/// Euclidean norm across three channels, sample by sample.
pub fn magnitude(v: &TimeSeries) -> Result<TimeSeries> {
    if v.n_channels() != 3 {
        return Err(Error::ChannelCount {
            expected: 3,
            actual: v.n_channels(),
        });
    }
    let (a, b, c) = (v.channel(0), v.channel(1), v.channel(2));
    let out = a
        .iter()
        .zip(b)
        .zip(c)
        .map(|((x, y), z)| vector_norm(*x, *y, *z))
        .collect();
    TimeSeries::mono(out, v.sample_rate(), v.start_time())
}

#[inline]
pub(crate) fn vector_norm(x: f64, y: f64, z: f64) -> f64 {
    (x * x + y * y + z * z).sqrt()
}

/// Linear interpolation on the segment `(t0, v0)`-`(t1, v1)`, clamped to
/// the segment's value range. Requires `t0 < t1`.
#[inline]
pub fn lerp_segment(t0: f64, v0: f64, t1: f64, v1: f64, t: f64) -> f64 {
    if t <= t0 {
        return v0;
    }
    if t >= t1 {
        return v1;
    }
    let w = (t - t0) / (t1 - t0);
    let v = v0 + (v1 - v0) * w;
    v.clamp(v0.min(v1), v0.max(v1))
}

/// Resamples `(timestamp, value)` points onto `targets` by linear
/// interpolation, holding the first/last value outside the source span.
pub fn interpolate_to_timeline(values: &[(f64, f64)], targets: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptySource);
    }
    if let Some(index) = values.windows(2).position(|w| !(w[0].0 < w[1].0)) {
        return Err(Error::NonIncreasing { index: index + 1 });
    }
    let first = values[0];
    let last = values[values.len() - 1];
    Ok(targets
        .iter()
        .map(|&t| {
            if t <= first.0 {
                return first.1;
            }
            if t >= last.0 {
                return last.1;
            }
            // First source point strictly after t; always in 1..len here.
            let j = values.partition_point(|&(ts, _)| ts <= t);
            let (t0, v0) = values[j - 1];
            let (t1, v1) = values[j];
            lerp_segment(t0, v0, t1, v1, t)
        })
        .collect())
}

/// One recorded trial: mono audio, 6-channel wrench and ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct MultimodalRecording {
    pub trial_id: String,
    pub audio: TimeSeries,
    /// Channels fx, fy, fz (N), tx, ty, tz (N·m).
    pub wrench: TimeSeries,
    pub contact_times: Vec<f64>,
    pub exogenous_times: Vec<f64>,
}

impl MultimodalRecording {
    pub fn new(
        trial_id: impl Into<String>,
        audio: TimeSeries,
        wrench: TimeSeries,
        contact_times: Vec<f64>,
        exogenous_times: Vec<f64>,
    ) -> Result<Self> {
        let rec = Self {
            trial_id: trial_id.into(),
            audio,
            wrench,
            contact_times,
            exogenous_times,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.audio.n_channels() != 1 {
            return Err(Error::ChannelCount {
                expected: 1,
                actual: self.audio.n_channels(),
            });
        }
        if self.wrench.n_channels() != 6 {
            return Err(Error::ChannelCount {
                expected: 6,
                actual: self.wrench.n_channels(),
            });
        }
        let (a0, a1) = (self.audio.start_time(), self.audio.end_time());
        let (w0, w1) = (self.wrench.start_time(), self.wrench.end_time());
        if a0.max(w0) >= a1.min(w1) {
            return Err(Error::invalid(
                "recording",
                format!("audio [{a0}, {a1}] and wrench [{w0}, {w1}] spans do not overlap"),
            ));
        }
        if self.contact_times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("recording", "contact times are not sorted"));
        }
        let (s0, s1) = (a0.min(w0), a1.max(w1));
        for &t in self.contact_times.iter().chain(&self.exogenous_times) {
            if !(t >= s0 && t <= s1) {
                return Err(Error::invalid(
                    "recording",
                    format!("annotation at {t} s outside recording span [{s0}, {s1}]"),
                ));
            }
        }
        Ok(())
    }

    pub fn force(&self) -> TimeSeries {
        self.wrench.select(0..3).expect("wrench has 6 channels")
    }

    pub fn torque(&self) -> TimeSeries {
        self.wrench.select(3..6).expect("wrench has 6 channels")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(len: usize) -> TimeSeries {
        TimeSeries::mono((0..len).map(|i| i as f64).collect(), 44_100.0, 0.0).unwrap()
    }

    #[test]
    fn one_frame_when_length_equals_frame() {
        let x = ramp(512);
        let frames = frame_signal(&x, FrameSpec::AUDIO).unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].samples.len(), 512);
    }

    #[test]
    fn frame_starts_follow_hop() {
        // floor((832 - 512) / 160) + 1 = 3
        let x = ramp(832);
        let frames = frame_signal(&x, FrameSpec::AUDIO).unwrap();
        let starts: Vec<_> = frames.iter().map(|f| f.start).collect();
        assert_eq!(starts, vec![0, 160, 320]);
        assert_eq!(frames[2].samples[0], 320.0);
        assert!((frames[1].center_time - (160.0 + 256.0) / 44_100.0).abs() < 1e-15);
    }

    #[test]
    fn short_signal_is_rejected() {
        let err = frame_signal(&ramp(100), FrameSpec::AUDIO).unwrap_err();
        assert!(matches!(err, Error::SignalTooShort { len: 100, frame_len: 512 }));
        assert!(err.to_string().contains("signal too short"));
    }

    #[test]
    fn zero_hop_is_invalid() {
        assert!(FrameSpec::new(4, 0).is_err());
        assert!(FrameSpec::new(0, 1).is_err());
    }

    #[test]
    fn magnitude_examples() {
        let v = TimeSeries::new(
            vec![vec![3.0, 0.0, 1.0], vec![4.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]],
            100.0,
            2.5,
        )
        .unwrap();
        let m = magnitude(&v).unwrap();
        assert_eq!(m.channel(0)[0], 5.0);
        assert_eq!(m.channel(0)[1], 0.0);
        assert!((m.channel(0)[2] - 1.732_050_8).abs() < 1e-7);
        assert_eq!(m.sample_rate(), 100.0);
        assert_eq!(m.start_time(), 2.5);
    }

    #[test]
    fn magnitude_needs_three_channels() {
        let v = TimeSeries::new(vec![vec![1.0]; 2], 100.0, 0.0).unwrap();
        assert!(matches!(
            magnitude(&v),
            Err(Error::ChannelCount { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn interpolation_examples() {
        assert_eq!(
            interpolate_to_timeline(&[(0.0, 0.0), (1.0, 10.0)], &[0.5]).unwrap(),
            vec![5.0]
        );
        assert_eq!(
            interpolate_to_timeline(&[(0.0, 7.0)], &[-1.0, 0.0, 3.0]).unwrap(),
            vec![7.0, 7.0, 7.0]
        );
        assert_eq!(
            interpolate_to_timeline(&[(0.0, 0.0), (1.0, 10.0), (2.0, 0.0)], &[0.25, 1.5]).unwrap(),
            vec![2.5, 5.0]
        );
    }

    #[test]
    fn interpolation_errors() {
        assert!(matches!(
            interpolate_to_timeline(&[], &[0.0]),
            Err(Error::EmptySource)
        ));
        assert!(matches!(
            interpolate_to_timeline(&[(0.0, 1.0), (0.0, 2.0)], &[0.0]),
            Err(Error::NonIncreasing { index: 1 })
        ));
    }

    #[test]
    fn time_series_rejects_ragged_channels() {
        assert!(TimeSeries::new(vec![vec![1.0, 2.0], vec![1.0]], 10.0, 0.0).is_err());
        assert!(TimeSeries::mono(vec![1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn recording_checks_annotations() {
        let audio = TimeSeries::mono(vec![0.0; 1000], 1000.0, 0.0).unwrap();
        let wrench = TimeSeries::new(vec![vec![0.0; 100]; 6], 100.0, 0.0).unwrap();
        assert!(MultimodalRecording::new("t", audio.clone(), wrench.clone(), vec![0.5], vec![]).is_ok());
        assert!(MultimodalRecording::new("t", audio.clone(), wrench.clone(), vec![5.0], vec![]).is_err());
        assert!(MultimodalRecording::new("t", audio.clone(), wrench.clone(), vec![0.6, 0.5], vec![]).is_err());
        let late = TimeSeries::new(vec![vec![0.0; 100]; 6], 100.0, 10.0).unwrap();
        assert!(MultimodalRecording::new("t", audio, late, vec![], vec![]).is_err());
    }

    proptest! {
        #[test]
        fn frames_stay_in_bounds(len in 1usize..4000, frame_len in 1usize..600, hop in 1usize..300) {
            let x = ramp(len);
            let spec = FrameSpec { frame_len, hop };
            match frame_signal(&x, spec) {
                Ok(frames) => {
                    prop_assert_eq!(frames.len(), (len - frame_len) / hop + 1);
                    for w in frames.windows(2) {
                        prop_assert_eq!(w[1].start - w[0].start, hop);
                    }
                    let last = frames.last().unwrap();
                    prop_assert!(last.start + frame_len <= len);
                }
                Err(_) => prop_assert!(len < frame_len),
            }
        }

        #[test]
        fn magnitude_is_sign_and_permutation_invariant(
            x in -1e3f64..1e3, y in -1e3f64..1e3, z in -1e3f64..1e3
        ) {
            let m = vector_norm(x, y, z);
            prop_assert!(m >= 0.0);
            prop_assert_eq!(m, vector_norm(-x, y, z));
            prop_assert_eq!(m, vector_norm(x, -y, -z));
            let mut sorted = [x * x, y * y, z * z];
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let permuted = [vector_norm(z, x, y), vector_norm(y, z, x), vector_norm(z, y, x)];
            for p in permuted {
                prop_assert!((p - m).abs() <= 1e-12 * m.max(1.0));
            }
        }

        #[test]
        fn interpolation_reproduces_knots_and_stays_bounded(
            steps in proptest::collection::vec((0.01f64..2.0, -50.0f64..50.0), 1..30),
            targets in proptest::collection::vec(-5.0f64..80.0, 0..50),
        ) {
            let mut t = 0.0;
            let source: Vec<(f64, f64)> = steps.iter().map(|&(dt, v)| { t += dt; (t, v) }).collect();
            let knots: Vec<f64> = source.iter().map(|p| p.0).collect();
            let at_knots = interpolate_to_timeline(&source, &knots).unwrap();
            for (out, src) in at_knots.iter().zip(&source) {
                prop_assert_eq!(*out, src.1);
            }
            let lo = source.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            let hi = source.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            for v in interpolate_to_timeline(&source, &targets).unwrap() {
                prop_assert!(v >= lo && v <= hi);
            }
        }
    }
}
