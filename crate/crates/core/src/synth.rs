//! Synthetic glass-placing trials.
//!
//! A trial runs: static arm, downward motion with actuator ego-noise,
//! contact (impact sound plus a step in vertical force and a torque ramp
//! past the stop threshold), release and return motion, static arm.
//! Exogenous impact sounds are added to the audio only unless
//! [`ExogenousConfig::wrench_transient`] is set.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{MultimodalRecording, TimeSeries};

/// Index of the torque channel driven toward the stop threshold (ty).
pub const THRESHOLD_TORQUE_CHANNEL: usize = 4;

/// Delay between the torque threshold crossing and the arm reacting, s.
const RELEASE_LAG: f64 = 0.1;

/// Sum of exponentially decaying sinusoids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImpactConfig {
    /// Peak amplitude of the summed carriers, in full-scale units.
    pub amplitude: f64,
    /// Envelope decay rate, 1/s.
    pub decay_rate: f64,
    pub carrier_freqs: Vec<f64>,
}

impl Default for ImpactConfig {
    fn default() -> Self {
        Self {
            amplitude: 0.25,
            decay_rate: 40.0,
            carrier_freqs: vec![1200.0, 2800.0, 4500.0],
        }
    }
}

impl ImpactConfig {
    /// Expected mean square of the burst over `[0, window]` after onset,
    /// treating carriers as incoherent.
    pub fn mean_square(&self, window: f64) -> f64 {
        let n = self.carrier_freqs.len() as f64;
        let per_carrier = self.amplitude / n;
        let envelope = (1.0 - (-2.0 * self.decay_rate * window).exp()) / (2.0 * self.decay_rate * window);
        n * per_carrier * per_carrier / 2.0 * envelope
    }

    fn validate(&self) -> Result<()> {
        if !(self.decay_rate > 0.0) {
            return Err(Error::invalid("impact", "decay_rate must be > 0"));
        }
        if self.amplitude < 0.0 || self.carrier_freqs.is_empty() {
            return Err(Error::invalid("impact", "need amplitude >= 0 and at least one carrier"));
        }
        Ok(())
    }
}

/// Impact sounds from other sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExogenousConfig {
    pub count: usize,
    /// Burst onsets are drawn uniformly in `[window.0, window.1]`.
    pub window: (f64, f64),
    /// No burst starts within this many seconds of the contact.
    pub contact_guard: f64,
    pub impact: ImpactConfig,
    /// Also add a small force transient for each burst.
    pub wrench_transient: bool,
}

impl Default for ExogenousConfig {
    fn default() -> Self {
        Self {
            count: 0,
            window: (2.0, 19.5),
            contact_guard: 1.5,
            impact: ImpactConfig {
                amplitude: 0.25,
                decay_rate: 40.0,
                carrier_freqs: vec![900.0, 2100.0, 5200.0],
            },
            wrench_transient: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionConfig {
    /// Arm starts moving toward the table.
    pub start_move_t: f64,
    /// Drop in vertical force when the table takes the object's load, N.
    pub contact_force_step: f64,
    /// Stop threshold on the torque channel, N·m.
    pub torque_threshold: f64,
    /// Time for the torque ramp to reach its end value after contact, s.
    pub ramp_duration: f64,
    /// Return motion after release, s.
    pub return_duration: f64,
    /// Amplitude of the low-frequency force transient at motion onsets, N.
    pub onset_transient: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            start_move_t: 2.0,
            contact_force_step: 2.0,
            torque_threshold: -3.0,
            ramp_duration: 0.5,
            return_duration: 3.0,
            onset_transient: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrialConfig {
    pub trial_id: String,
    /// s
    pub duration: f64,
    /// Hz
    pub audio_rate: f64,
    /// Hz
    pub wrench_rate: f64,
    /// N
    pub object_weight: f64,
    /// s
    pub contact_time: f64,
    /// When false the arm stays still: no motion, contact or ego-noise.
    pub placing: bool,
    /// RMS of the microphone noise floor.
    pub noise_floor_audio: f64,
    /// RMS of actuator noise while the arm moves.
    pub ego_noise: f64,
    /// Standard deviation of the wrench sensor noise, N or N·m.
    pub wrench_noise_sd: f64,
    pub impact: ImpactConfig,
    pub exogenous: ExogenousConfig,
    pub motion: MotionConfig,
    pub seed: u64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            trial_id: "trial_000".into(),
            duration: 20.0,
            audio_rate: 44_100.0,
            wrench_rate: 100.0,
            object_weight: 2.5,
            contact_time: 9.0,
            placing: true,
            noise_floor_audio: 0.002,
            ego_noise: 0.006,
            wrench_noise_sd: 0.02,
            impact: ImpactConfig::default(),
            exogenous: ExogenousConfig::default(),
            motion: MotionConfig::default(),
            seed: 0,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::invalid("trial config", reason));
        if !(self.duration > 0.0) {
            return bad(format!("duration {} must be > 0", self.duration));
        }
        if !(self.contact_time > 0.0 && self.contact_time < self.duration) {
            return bad(format!("contact_time {} outside (0, {})", self.contact_time, self.duration));
        }
        if !(self.audio_rate > 0.0 && self.wrench_rate > 0.0) {
            return bad("sample rates must be positive".into());
        }
        if self.noise_floor_audio < 0.0 || self.ego_noise < 0.0 || self.wrench_noise_sd < 0.0 {
            return bad("noise levels must be >= 0".into());
        }
        if self.placing {
            let m = &self.motion;
            if !(m.start_move_t >= 0.0 && m.start_move_t < self.contact_time) {
                return bad(format!("start_move_t {} must precede contact", m.start_move_t));
            }
            if !(m.ramp_duration > 0.0) {
                return bad("ramp_duration must be > 0".into());
            }
            if !(m.torque_threshold < self.baseline_torque()) {
                return bad("torque threshold must lie below the resting torque".into());
            }
        }
        let (w0, w1) = self.exogenous.window;
        if self.exogenous.count > 0 && !(w0 < w1) {
            return bad(format!("exogenous window ({w0}, {w1}) is empty"));
        }
        self.impact.validate()?;
        self.exogenous.impact.validate()
    }

    /// Resting value of the threshold torque channel while holding the
    /// object (lever arm of 8 cm).
    pub fn baseline_torque(&self) -> f64 {
        -0.08 * self.object_weight
    }

    /// End value of the torque ramp; overshoots the threshold as the stop
    /// command lags detection.
    fn ramp_target(&self) -> f64 {
        self.motion.torque_threshold - 0.5
    }

    /// Noise-free time at which the torque ramp reaches the threshold.
    pub fn threshold_time(&self) -> f64 {
        let base = self.baseline_torque();
        let frac = (self.motion.torque_threshold - base) / (self.ramp_target() - base);
        self.contact_time + frac * self.motion.ramp_duration
    }

    /// The arm releases and starts returning a fixed controller lag after
    /// the threshold is reached.
    pub fn release_time(&self) -> f64 {
        self.threshold_time() + RELEASE_LAG
    }

    fn exogenous_window(&self) -> (f64, f64) {
        let (w0, w1) = self.exogenous.window;
        (w0.max(0.0), w1.min(self.duration))
    }
}

/// Adds `amplitude * exp(-decay t) * mean(sin(2π f t + φ))` starting at
/// `onset`.
fn add_impact(audio: &mut [f64], rate: f64, onset: f64, impact: &ImpactConfig, rng: &mut ChaCha8Rng) {
    let phases: Vec<f64> = impact.carrier_freqs.iter().map(|_| rng.random_range(0.0..TAU)).collect();
    let per_carrier = impact.amplitude / impact.carrier_freqs.len() as f64;
    let first = (onset * rate).ceil().max(0.0) as usize;
    // Stop once the envelope is far below any noise floor.
    let span = (12.0 / impact.decay_rate * rate) as usize;
    for n in first..(first + span).min(audio.len()) {
        let t = n as f64 / rate - onset;
        let env = per_carrier * (-impact.decay_rate * t).exp();
        let s: f64 = impact
            .carrier_freqs
            .iter()
            .zip(&phases)
            .map(|(f, p)| (TAU * f * t + p).sin())
            .sum();
        audio[n] += env * s;
    }
}

/// Damped low-frequency oscillation starting at `onset`.
fn damped(t: f64, onset: f64, amplitude: f64, freq: f64, decay: f64) -> f64 {
    if t < onset {
        return 0.0;
    }
    let dt = t - onset;
    amplitude * (-decay * dt).exp() * (TAU * freq * dt).sin()
}

/// Smooth 0→1 gate over `[start, end]` with short raised-cosine edges.
fn gate(t: f64, start: f64, end: f64, fade: f64) -> f64 {
    if t <= start || t >= end {
        return 0.0;
    }
    let edge = |x: f64| 0.5 - 0.5 * (std::f64::consts::PI * (x / fade).min(1.0)).cos();
    edge(t - start).min(edge(end - t))
}

fn draw_exogenous_times(cfg: &TrialConfig, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let (w0, w1) = cfg.exogenous_window();
    let mut times = Vec::with_capacity(cfg.exogenous.count);
    let mut attempts = 0;
    while times.len() < cfg.exogenous.count {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::invalid(
                "exogenous config",
                "window leaves no room outside the contact guard",
            ));
        }
        let t = rng.random_range(w0..w1);
        if cfg.placing && (t - cfg.contact_time).abs() < cfg.exogenous.contact_guard {
            continue;
        }
        times.push(t);
    }
    times.sort_by(f64::total_cmp);
    Ok(times)
}

/// Renders one trial; deterministic given `cfg.seed`.
pub fn generate_trial(cfg: &TrialConfig) -> Result<MultimodalRecording> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let exogenous_times = draw_exogenous_times(cfg, &mut rng)?;
    let release = cfg.release_time();
    let return_end = release + cfg.motion.return_duration;
    let moving = |t: f64| {
        cfg.placing
            && ((t > cfg.motion.start_move_t && t < cfg.contact_time) || (t > release && t < return_end))
    };

    // Audio.
    let n_audio = (cfg.duration * cfg.audio_rate).round() as usize;
    let mut audio = vec![0.0; n_audio];
    if cfg.noise_floor_audio > 0.0 {
        let noise = Normal::new(0.0, cfg.noise_floor_audio).expect("finite sd");
        audio.iter_mut().for_each(|x| *x = noise.sample(&mut rng));
    }
    if cfg.placing && cfg.ego_noise > 0.0 {
        // One-pole low-passed white noise, scaled to the requested RMS.
        let a: f64 = 0.15;
        let gain = ((1.0 - (1.0 - a) * (1.0 - a)) / (a * a)).sqrt();
        let white = Normal::new(0.0, cfg.ego_noise * gain).expect("finite sd");
        let mut state = 0.0;
        for (n, x) in audio.iter_mut().enumerate() {
            state += a * (white.sample(&mut rng) - state);
            let t = n as f64 / cfg.audio_rate;
            let g = gate(t, cfg.motion.start_move_t, cfg.contact_time, 0.1)
                + gate(t, release, return_end, 0.1);
            *x += g * state;
        }
    }
    if cfg.placing {
        add_impact(&mut audio, cfg.audio_rate, cfg.contact_time, &cfg.impact, &mut rng);
    }
    for &t in &exogenous_times {
        add_impact(&mut audio, cfg.audio_rate, t, &cfg.exogenous.impact, &mut rng);
    }

    // Wrench.
    let n_wrench = (cfg.duration * cfg.wrench_rate).round() as usize;
    let mut wrench = vec![vec![0.0; n_wrench]; 6];
    let m = &cfg.motion;
    let base_ty = cfg.baseline_torque();
    let ramp_target = cfg.ramp_target();
    let noise = Normal::new(0.0, cfg.wrench_noise_sd.max(f64::MIN_POSITIVE)).expect("finite sd");
    for n in 0..n_wrench {
        let t = n as f64 / cfg.wrench_rate;
        let mut fz = cfg.object_weight;
        let mut fx = 0.12 * cfg.object_weight;
        let mut ty = base_ty;
        let mut tx = 0.03 * cfg.object_weight;

        if cfg.placing {
            // Onset transients of both motions.
            for onset in [m.start_move_t, release] {
                fz += damped(t, onset, m.onset_transient, 1.2, 3.0);
                ty += damped(t, onset, 0.15 * m.onset_transient, 1.2, 3.0);
            }
            if moving(t) {
                fz += 0.02 * (TAU * 11.0 * t).sin();
            }
            if t >= cfg.contact_time && t < release {
                let dt = t - cfg.contact_time;
                fz -= m.contact_force_step * (1.0 - (-dt / 0.015).exp());
                fz += damped(t, cfg.contact_time, 0.3, 8.0, 10.0);
                fx += damped(t, cfg.contact_time, 0.15, 6.0, 12.0);
                ty = base_ty + (ramp_target - base_ty) * (dt / m.ramp_duration).min(1.0);
            } else if t >= release {
                // The object stays on the table; loads relax to the empty
                // gripper.
                let k = (-(t - release) / 0.2).exp();
                let dropped = cfg.object_weight - m.contact_force_step;
                let at_release_ty = base_ty + (ramp_target - base_ty) * ((release - cfg.contact_time) / m.ramp_duration).min(1.0);
                fz = 0.3 + (dropped - 0.3) * k + damped(t, release, m.onset_transient, 1.2, 3.0);
                fx = 0.12 * 0.3 + (0.12 * cfg.object_weight - 0.036) * k;
                ty = -0.024 + (at_release_ty + 0.024) * k + damped(t, release, 0.15 * m.onset_transient, 1.2, 3.0);
                tx = 0.009 + (0.03 * cfg.object_weight - 0.009) * k;
            }
        }
        if cfg.exogenous.wrench_transient {
            for &e in &exogenous_times {
                fz += damped(t, e, 0.1, 15.0, 20.0);
            }
        }
        let values = [fx, 0.05 * cfg.object_weight, fz, tx, ty, 0.01];
        for (ch, v) in wrench.iter_mut().zip(values) {
            ch[n] = v + if cfg.wrench_noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        }
    }

    let contact_times = if cfg.placing { vec![cfg.contact_time] } else { vec![] };
    MultimodalRecording::new(
        cfg.trial_id.clone(),
        TimeSeries::mono(audio, cfg.audio_rate, 0.0)?,
        TimeSeries::new(wrench, cfg.wrench_rate, 0.0)?,
        contact_times,
        exogenous_times,
    )
}

/// Kind of exogenous disturbance in a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialKind {
    Clean,
    HandHits,
    TableHits,
}

impl TrialKind {
    /// Trials cycle clean, hand hits, table hits.
    pub fn for_index(i: usize) -> Self {
        match i % 3 {
            0 => TrialKind::Clean,
            1 => TrialKind::HandHits,
            _ => TrialKind::TableHits,
        }
    }
}

/// Per-trial jitter ranges, each `(min, max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariationRanges {
    pub object_weight: (f64, f64),
    pub contact_time: (f64, f64),
    pub start_move_t: (f64, f64),
    pub impact_amplitude: (f64, f64),
    pub impact_decay: (f64, f64),
    /// Relative jitter of each carrier frequency.
    pub carrier_jitter: f64,
    pub exogenous_count: (usize, usize),
    pub exogenous_amplitude: (f64, f64),
    pub exogenous_decay: (f64, f64),
    pub noise_floor_audio: (f64, f64),
    /// Whether hand hits also perturb the wrench sensor.
    pub hand_hits_perturb_wrench: bool,
    /// Template for everything not jittered.
    pub base: TrialConfig,
}

impl Default for VariationRanges {
    fn default() -> Self {
        Self {
            object_weight: (1.5, 4.0),
            contact_time: (7.0, 11.0),
            start_move_t: (1.5, 3.0),
            // The same object is set down by the same controller every
            // trial, so its impacts repeat closely; hits by the experimenter
            // vary far more.
            impact_amplitude: (0.2, 0.3),
            impact_decay: (35.0, 45.0),
            carrier_jitter: 0.15,
            exogenous_count: (1, 3),
            exogenous_amplitude: (0.12, 0.4),
            exogenous_decay: (30.0, 55.0),
            noise_floor_audio: (0.0015, 0.003),
            hand_hits_perturb_wrench: false,
            base: TrialConfig::default(),
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 >= range.1 {
        range.0
    } else {
        rng.random_range(range.0..=range.1)
    }
}

/// Per-trial configurations for a dataset of `n` trials.
pub fn trial_configs(n: usize, ranges: &VariationRanges, seed: u64) -> Vec<TrialConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let kind = TrialKind::for_index(i);
            let mut cfg = ranges.base.clone();
            cfg.trial_id = format!("trial_{i:03}");
            cfg.seed = rng.random();
            cfg.object_weight = draw(&mut rng, ranges.object_weight);
            cfg.contact_time = draw(&mut rng, ranges.contact_time);
            cfg.motion.start_move_t = draw(&mut rng, ranges.start_move_t);
            cfg.noise_floor_audio = draw(&mut rng, ranges.noise_floor_audio);
            cfg.impact.amplitude = draw(&mut rng, ranges.impact_amplitude);
            cfg.impact.decay_rate = draw(&mut rng, ranges.impact_decay);
            let jitter = ranges.carrier_jitter;
            for f in cfg.impact.carrier_freqs.iter_mut() {
                *f *= 1.0 + draw(&mut rng, (-jitter, jitter));
            }
            cfg.motion.contact_force_step = cfg.object_weight * draw(&mut rng, (0.6, 0.9));

            let (lo, hi) = ranges.exogenous_count;
            let count = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            cfg.exogenous.count = if kind == TrialKind::Clean { 0 } else { count };
            cfg.exogenous.window = (cfg.motion.start_move_t, cfg.duration - 0.5);
            cfg.exogenous.impact.amplitude = draw(&mut rng, ranges.exogenous_amplitude);
            cfg.exogenous.impact.decay_rate = draw(&mut rng, ranges.exogenous_decay);
            // Hand hits ring higher than knocks on the table top.
            let carriers: &[f64] = match kind {
                TrialKind::HandHits => &[1500.0, 3300.0, 6100.0],
                _ => &[700.0, 1900.0, 4200.0],
            };
            cfg.exogenous.impact.carrier_freqs = carriers
                .iter()
                .map(|f| f * (1.0 + draw(&mut rng, (-jitter, jitter))))
                .collect();
            cfg.exogenous.wrench_transient = kind == TrialKind::HandHits && ranges.hand_hits_perturb_wrench;
            cfg
        })
        .collect()
}

/// Generates `n` trials: a third without exogenous sounds, a third with
/// hand hits and a third with table hits.
pub fn generate_dataset(n: usize, ranges: &VariationRanges, seed: u64) -> Result<Vec<MultimodalRecording>> {
    use rayon::prelude::*;
    trial_configs(n, ranges, seed).par_iter().map(generate_trial).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn silent_config_gives_silent_audio() {
        let mut cfg = TrialConfig {
            noise_floor_audio: 0.0,
            ego_noise: 0.0,
            duration: 12.0,
            ..TrialConfig::default()
        };
        cfg.impact.amplitude = 0.0;
        let rec = generate_trial(&cfg).unwrap();
        assert!(rec.audio.channel(0).iter().all(|&x| x == 0.0));
        assert_eq!(rec.audio.len(), 12 * 44_100);
        assert_eq!(rec.wrench.len(), 1200);
    }

    #[test]
    fn burst_rms_matches_envelope_integral() {
        let cfg = TrialConfig::default();
        let rec = generate_trial(&cfg).unwrap();
        let rate = cfg.audio_rate;
        let at = (cfg.contact_time * rate).ceil() as usize;
        let window = (0.05 * rate) as usize;
        let burst = rms(&rec.audio.channel(0)[at..at + window]);
        let quiet = rms(&rec.audio.channel(0)[(0.5 * rate) as usize..(1.5 * rate) as usize]);
        assert!((quiet - cfg.noise_floor_audio).abs() < 0.05 * cfg.noise_floor_audio);
        let expected = (cfg.impact.mean_square(0.05) + cfg.noise_floor_audio.powi(2)).sqrt();
        assert!((burst - expected).abs() < 0.1 * expected, "{burst} vs {expected}");
        assert!(burst / quiet > 20.0);
    }

    #[test]
    fn torque_crosses_threshold_only_after_contact() {
        let cfg = TrialConfig::default();
        let rec = generate_trial(&cfg).unwrap();
        let ty = rec.wrench.channel(THRESHOLD_TORQUE_CHANNEL);
        let first = ty.iter().position(|&v| v < cfg.motion.torque_threshold).unwrap();
        let t = rec.wrench.timestamp(first);
        assert!(t > cfg.contact_time);
        assert!(t < cfg.contact_time + cfg.motion.ramp_duration + 0.05);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let late = TrialConfig {
            contact_time: 25.0,
            ..TrialConfig::default()
        };
        assert!(generate_trial(&late).is_err());
        let mut no_decay = TrialConfig::default();
        no_decay.impact.decay_rate = 0.0;
        assert!(generate_trial(&no_decay).is_err());
    }

    #[test]
    fn exogenous_bursts_leave_wrench_untouched() {
        let quiet = TrialConfig::default();
        let noisy = TrialConfig {
            exogenous: ExogenousConfig {
                count: 3,
                ..ExogenousConfig::default()
            },
            ..quiet.clone()
        };
        let a = generate_trial(&quiet).unwrap();
        let b = generate_trial(&noisy).unwrap();
        assert_eq!(b.exogenous_times.len(), 3);
        for &t in &b.exogenous_times {
            assert!((t - noisy.contact_time).abs() >= noisy.exogenous.contact_guard);
        }
        // Same seed, so the wrench differs only through the RNG stream;
        // the noise-free shape must agree.
        let mut no_noise = noisy.clone();
        no_noise.wrench_noise_sd = 0.0;
        let mut quiet_no_noise = quiet.clone();
        quiet_no_noise.wrench_noise_sd = 0.0;
        assert_eq!(
            generate_trial(&no_noise).unwrap().wrench,
            generate_trial(&quiet_no_noise).unwrap().wrench
        );
        assert_ne!(a.audio, b.audio);
    }

    #[test]
    fn static_trial_has_no_contact() {
        let cfg = TrialConfig {
            placing: false,
            exogenous: ExogenousConfig {
                count: 2,
                ..ExogenousConfig::default()
            },
            ..TrialConfig::default()
        };
        let rec = generate_trial(&cfg).unwrap();
        assert!(rec.contact_times.is_empty());
        let fz = rec.wrench.channel(2);
        assert!(fz.iter().all(|v| (v - cfg.object_weight).abs() < 0.2));
    }

    #[test]
    fn dataset_thirds() {
        let cfgs = trial_configs(60, &VariationRanges::default(), 1);
        assert_eq!(cfgs.iter().filter(|c| c.exogenous.count == 0).count(), 20);
        assert!(cfgs.iter().all(|c| c.validate().is_ok()));
        assert_eq!(cfgs, trial_configs(60, &VariationRanges::default(), 1));
    }
}
