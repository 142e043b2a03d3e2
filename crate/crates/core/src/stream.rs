//! Incremental feature extraction and event detection over chunked streams.
//!
//! [`StreamingExtractor`] produces exactly the rows of
//! [`extract_features`](crate::features::extract_features) without seeing the
//! whole recording: an audio frame is emitted once the wrench stream has a
//! frame centered at or after it, so its interpolated wrench features are
//! final. Frames after the last wrench frame are flushed by
//! [`StreamingExtractor::finish`] with constant extrapolation.

use std::collections::VecDeque;

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::features::{audio_power, FeatureRow, SpectralFeatures, SpectralTracker, N_FEATURES};
use crate::forest::RandomForestModel;
use crate::signal::{lerp_segment, vector_norm, FrameSpec};

/// Number of wrench-derived feature columns.
const N_WRENCH: usize = N_FEATURES - 1;

/// One feature row produced by the streaming extractor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamRow {
    pub center_time: f64,
    pub features: FeatureRow,
    /// Stream time of the newest sample received when the row became
    /// available; `available_at - center_time` is the alignment latency.
    pub available_at: f64,
}

impl StreamRow {
    pub fn latency(&self) -> f64 {
        self.available_at - self.center_time
    }
}

/// Sliding sample buffer that cuts fixed frames as samples arrive.
#[derive(Debug)]
struct Framer {
    spec: FrameSpec,
    rate: f64,
    start_time: f64,
    buffer: VecDeque<f64>,
    /// Absolute sample index of `buffer[0]`.
    offset: usize,
    received: usize,
    next_frame: usize,
}

impl Framer {
    fn new(spec: FrameSpec, rate: f64, start_time: f64) -> Self {
        Self {
            spec,
            rate,
            start_time,
            buffer: VecDeque::with_capacity(spec.frame_len * 2),
            offset: 0,
            received: 0,
            next_frame: 0,
        }
    }

    fn push(&mut self, x: f64) {
        self.buffer.push_back(x);
        self.received += 1;
    }

    /// Time of the newest received sample.
    fn now(&self) -> f64 {
        if self.received == 0 {
            f64::NEG_INFINITY
        } else {
            self.start_time + (self.received - 1) as f64 / self.rate
        }
    }

    /// Next complete frame as `(center_time, samples)`, if any.
    fn next(&mut self) -> Option<(f64, &[f64])> {
        let start = self.next_frame * self.spec.hop;
        if start + self.spec.frame_len > self.received {
            return None;
        }
        let drop = (start - self.offset).min(self.buffer.len());
        self.buffer.drain(..drop);
        self.offset += drop;
        let center = self.spec.center_time(self.next_frame, self.rate, self.start_time);
        self.next_frame += 1;
        let samples = self.buffer.make_contiguous();
        Some((center, &samples[..self.spec.frame_len]))
    }
}

/// Interpolation knot: a wrench frame center and its six feature values.
type Knot = (f64, [f64; N_WRENCH]);

/// Incremental equivalent of batch feature extraction for one recording.
#[derive(Debug)]
pub struct StreamingExtractor {
    audio: Framer,
    wrench: Framer,
    /// Wrench samples are buffered as force and torque magnitudes.
    torque: Framer,
    force_tracker: SpectralTracker,
    torque_tracker: SpectralTracker,
    /// Audio frames waiting for wrench context: `(center, power)`.
    pending: VecDeque<(f64, f64)>,
    /// Wrench knots still needed by pending or future audio frames.
    knots: VecDeque<Knot>,
    ready: Vec<StreamRow>,
}

impl StreamingExtractor {
    pub fn new(
        audio_rate: f64,
        audio_start: f64,
        audio_spec: FrameSpec,
        wrench_rate: f64,
        wrench_start: f64,
        wrench_spec: FrameSpec,
    ) -> Result<Self> {
        audio_spec.validate()?;
        wrench_spec.validate()?;
        for (what, rate) in [("audio rate", audio_rate), ("wrench rate", wrench_rate)] {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(Error::invalid(what, format!("must be positive, got {rate}")));
            }
        }
        Ok(Self {
            audio: Framer::new(audio_spec, audio_rate, audio_start),
            wrench: Framer::new(wrench_spec, wrench_rate, wrench_start),
            torque: Framer::new(wrench_spec, wrench_rate, wrench_start),
            force_tracker: SpectralTracker::new(wrench_spec.frame_len),
            torque_tracker: SpectralTracker::new(wrench_spec.frame_len),
            pending: VecDeque::new(),
            knots: VecDeque::new(),
            ready: Vec::new(),
        })
    }

    fn now(&self) -> f64 {
        self.audio.now().max(self.wrench.now())
    }

    /// Appends mono audio samples; returns rows that became final.
    pub fn push_audio(&mut self, samples: &[f64]) -> Result<Vec<StreamRow>> {
        for &x in samples {
            self.audio.push(x);
        }
        while let Some((center, frame)) = self.audio.next() {
            let power = audio_power(frame)?;
            self.pending.push_back((center, power));
        }
        self.resolve(false);
        Ok(std::mem::take(&mut self.ready))
    }

    /// Appends wrench samples `[fx, fy, fz, tx, ty, tz]`; returns rows that
    /// became final.
    pub fn push_wrench(&mut self, samples: &[[f64; 6]]) -> Result<Vec<StreamRow>> {
        for s in samples {
            self.wrench.push(vector_norm(s[0], s[1], s[2]));
            self.torque.push(vector_norm(s[3], s[4], s[5]));
            loop {
                let Some((center, frame)) = self.wrench.next() else { break };
                let force = self.force_tracker.push(frame, center)?;
                let (_, frame) = self.torque.next().expect("force and torque framers advance together");
                let torque = self.torque_tracker.push(frame, center)?;
                self.add_knot(center, &force, &torque);
                self.resolve(false);
            }
        }
        Ok(std::mem::take(&mut self.ready))
    }

    fn add_knot(&mut self, center: f64, force: &SpectralFeatures, torque: &SpectralFeatures) {
        let values = [
            force.centroid,
            force.spread,
            force.flux,
            torque.centroid,
            torque.spread,
            torque.flux,
        ];
        self.knots.push_back((center, values));
    }

    /// Emits pending audio frames whose wrench features are final. With
    /// `flush`, frames past the last wrench frame take its values.
    fn resolve(&mut self, flush: bool) {
        let Some(&(last, _)) = self.knots.back() else { return };
        let now = self.now();
        while let Some(&(t, power)) = self.pending.front() {
            if t > last && !flush {
                break;
            }
            // First knot strictly after t; knots before the retained front
            // were pruned only once no frame could fall before them.
            let j = self.knots.partition_point(|&(tk, _)| tk <= t);
            let mut features = [0.0; N_FEATURES];
            features[0] = power;
            for c in 0..N_WRENCH {
                features[c + 1] = if j == 0 {
                    self.knots[0].1[c]
                } else if j == self.knots.len() {
                    self.knots[j - 1].1[c]
                } else {
                    let ((t0, v0), (t1, v1)) = (self.knots[j - 1], self.knots[j]);
                    lerp_segment(t0, v0[c], t1, v1[c], t)
                };
            }
            self.ready.push(StreamRow {
                center_time: t,
                features,
                available_at: now,
            });
            self.pending.pop_front();
        }
        let earliest = match self.pending.front() {
            Some(&(t, _)) => t,
            None => self.audio.spec.center_time(self.audio.next_frame, self.audio.rate, self.audio.start_time),
        };
        while self.knots.len() >= 2 && self.knots[1].0 <= earliest {
            self.knots.pop_front();
        }
    }

    /// Ends the stream, flushing every remaining audio frame.
    pub fn finish(mut self) -> Result<Vec<StreamRow>> {
        if self.audio.next_frame == 0 {
            return Err(Error::SignalTooShort {
                len: self.audio.received,
                frame_len: self.audio.spec.frame_len,
            });
        }
        if self.knots.is_empty() {
            return Err(Error::SignalTooShort {
                len: self.wrench.received,
                frame_len: self.wrench.spec.frame_len,
            });
        }
        self.resolve(true);
        Ok(self.ready)
    }
}

/// A run of positive frames merged into one contact event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEvent {
    /// Center time of the first positive frame; the event timestamp.
    pub onset: f64,
    /// Center time of the last positive frame.
    pub end: f64,
    pub peak_time: f64,
    pub peak_probability: f64,
    pub n_frames: usize,
}

/// Per-frame classification from [`ContactDetector::push`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub center_time: f64,
    pub probability: f64,
    pub label: Label,
    /// True when this frame opened a new event.
    pub new_event: bool,
}

/// Classifies stream rows and merges positive frames separated by at most
/// `merge_gap` seconds into events.
#[derive(Debug)]
pub struct ContactDetector<'m> {
    model: &'m RandomForestModel,
    merge_gap: f64,
    open: Option<ContactEvent>,
    events: Vec<ContactEvent>,
}

impl<'m> ContactDetector<'m> {
    pub fn new(model: &'m RandomForestModel, merge_gap: f64) -> Result<Self> {
        if !(merge_gap >= 0.0 && merge_gap.is_finite()) {
            return Err(Error::invalid("merge gap", format!("must be >= 0, got {merge_gap}")));
        }
        Ok(Self {
            model,
            merge_gap,
            open: None,
            events: Vec::new(),
        })
    }

    pub fn push(&mut self, center_time: f64, features: &[f64]) -> Result<Decision> {
        let proba = self.model.predict_proba(features)?;
        let probability = proba[Label::Contact.index()];
        let label = if proba[Label::Contact.index()] > proba[Label::NotContact.index()] {
            Label::Contact
        } else {
            Label::NotContact
        };
        let mut new_event = false;
        if label == Label::Contact {
            match &mut self.open {
                Some(ev) if center_time - ev.end <= self.merge_gap => {
                    ev.end = center_time;
                    ev.n_frames += 1;
                    if probability > ev.peak_probability {
                        ev.peak_probability = probability;
                        ev.peak_time = center_time;
                    }
                }
                _ => {
                    self.events.extend(self.open.take());
                    self.open = Some(ContactEvent {
                        onset: center_time,
                        end: center_time,
                        peak_time: center_time,
                        peak_probability: probability,
                        n_frames: 1,
                    });
                    new_event = true;
                }
            }
        }
        Ok(Decision {
            center_time,
            probability,
            label,
            new_event,
        })
    }

    /// Closes any open event and returns all events in time order.
    pub fn finish(mut self) -> Vec<ContactEvent> {
        self.events.extend(self.open.take());
        self.events
    }
}
