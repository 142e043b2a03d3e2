//! On-disk formats: mono WAV audio, wrench CSV, annotation CSV, feature
//! and labeled-dataset CSVs, and the trial manifest.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! CSV written here reads back to identical values and rewrites to
//! identical bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureRow, FEATURE_NAMES, N_FEATURES};
use crate::signal::{MultimodalRecording, TimeSeries};

pub const AUDIO_FILE: &str = "audio.wav";
pub const WRENCH_FILE: &str = "wrench.csv";
pub const ANNOTATIONS_FILE: &str = "annotations.csv";
pub const FEATURES_FILE: &str = "features.csv";
pub const MANIFEST_FILE: &str = "manifest.csv";

pub const WRENCH_HEADER: [&str; 7] = ["t", "fx", "fy", "fz", "tx", "ty", "tz"];
const ANNOTATION_HEADER: [&str; 3] = ["trial_id", "event_type", "t"];
const MANIFEST_HEADER: [&str; 4] = ["trial_id", "dir", "contacts", "exogenous"];

/// Allowed deviation of any wrench sample interval from the mean interval.
const MAX_JITTER: f64 = 0.01;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(create(path)?))
}

fn csv_reader(path: &Path, header: &[&str]) -> Result<csv::Reader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(BufReader::new(file));
    let found = reader.headers().map_err(|e| Error::format(path, e))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::format(
            path,
            format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(reader)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::format(path, e)
}

fn parse_f64(path: &Path, line: u64, field: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::format(path, format!("line {line}: `{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::format(path, format!("line {line}: non-finite value")));
    }
    Ok(v)
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn finish<W: Write>(path: &Path, w: csv::Writer<W>) -> Result<()> {
    let mut inner = w.into_inner().map_err(|e| Error::format(path, e.to_string()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

/// Writes mono audio as 32-bit float PCM.
pub fn write_wav(path: &Path, audio: &TimeSeries) -> Result<()> {
    if audio.n_channels() != 1 {
        return Err(Error::ChannelCount {
            expected: 1,
            actual: audio.n_channels(),
        });
    }
    let rate = audio.sample_rate();
    if rate.fract() != 0.0 || rate > u32::MAX as f64 {
        return Err(Error::invalid("wav", format!("sample rate {rate} is not an integer")));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::new(create(path)?, spec).map_err(|e| Error::format(path, e))?;
    for &x in audio.channel(0) {
        w.write_sample(x as f32).map_err(|e| Error::format(path, e))?;
    }
    w.finalize().map_err(|e| Error::format(path, e))
}

/// Reads mono 16-bit integer or 32-bit float PCM; integer samples are
/// scaled to [-1, 1). The signal starts at t = 0.
pub fn read_wav(path: &Path) -> Result<TimeSeries> {
    let mut r = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::format(path, other),
    })?;
    let spec = r.spec();
    if spec.channels != 1 {
        return Err(Error::format(path, format!("expected mono audio, found {} channels", spec.channels)));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => r
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32_768.0))
            .collect::<Result<_, _>>(),
        (hound::SampleFormat::Float, 32) => r.samples::<f32>().map(|s| s.map(f64::from)).collect::<Result<_, _>>(),
        (fmt, bits) => {
            return Err(Error::format(path, format!("unsupported sample format {fmt:?} with {bits} bits")));
        }
    }
    .map_err(|e| Error::format(path, e))?;
    TimeSeries::mono(samples, spec.sample_rate as f64, 0.0)
}

pub fn write_wrench_csv(path: &Path, wrench: &TimeSeries) -> Result<()> {
    if wrench.n_channels() != 6 {
        return Err(Error::ChannelCount {
            expected: 6,
            actual: wrench.n_channels(),
        });
    }
    let mut w = csv_writer(path)?;
    w.write_record(WRENCH_HEADER).map_err(|e| csv_err(path, e))?;
    for n in 0..wrench.len() {
        let mut rec = Vec::with_capacity(7);
        rec.push(wrench.timestamp(n).to_string());
        rec.extend(wrench.channels().iter().map(|c| c[n].to_string()));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Reads a wrench CSV, checking that sampling is uniform to within 1 %.
///
/// The rate is the mean rate over the file; a rate within 1 ppm of an
/// integer is snapped to it.
pub fn read_wrench_csv(path: &Path) -> Result<TimeSeries> {
    let mut r = csv_reader(path, &WRENCH_HEADER)?;
    let mut times = Vec::new();
    let mut channels = vec![Vec::new(); 6];
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = line_of(&rec);
        if rec.len() != 7 {
            return Err(Error::format(path, format!("line {line}: expected 7 fields, got {}", rec.len())));
        }
        times.push(parse_f64(path, line, &rec[0])?);
        for (c, field) in channels.iter_mut().zip(rec.iter().skip(1)) {
            c.push(parse_f64(path, line, field)?);
        }
    }
    if times.len() < 2 {
        return Err(Error::format(path, "need at least two wrench samples"));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::format(path, "timestamps do not increase"));
    }
    if let Some(i) = times
        .windows(2)
        .position(|w| ((w[1] - w[0]) - dt).abs() > MAX_JITTER * dt)
    {
        return Err(Error::format(
            path,
            format!("sampling interval at row {} deviates more than 1% from {dt} s", i + 1),
        ));
    }
    let mut rate = 1.0 / dt;
    if (rate - rate.round()).abs() < 1e-6 * rate {
        rate = rate.round();
    }
    TimeSeries::new(channels, rate, times[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    Contact,
    Exogenous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub trial_id: String,
    pub event_type: EventType,
    pub t: f64,
}

pub fn annotations_of(rec: &MultimodalRecording) -> Vec<Annotation> {
    let mut out: Vec<Annotation> = rec
        .contact_times
        .iter()
        .map(|&t| (EventType::Contact, t))
        .chain(rec.exogenous_times.iter().map(|&t| (EventType::Exogenous, t)))
        .map(|(event_type, t)| Annotation {
            trial_id: rec.trial_id.clone(),
            event_type,
            t,
        })
        .collect();
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    out
}

pub fn write_annotations(path: &Path, annotations: &[Annotation]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(ANNOTATION_HEADER).map_err(|e| csv_err(path, e))?;
    for a in annotations {
        let kind = match a.event_type {
            EventType::Contact => "contact",
            EventType::Exogenous => "exogenous",
        };
        w.write_record([a.trial_id.as_str(), kind, &a.t.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

pub fn read_annotations(path: &Path) -> Result<Vec<Annotation>> {
    let mut r = csv_reader(path, &ANNOTATION_HEADER)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = line_of(&rec);
        let event_type = match &rec[1] {
            "contact" => EventType::Contact,
            "exogenous" => EventType::Exogenous,
            other => return Err(Error::format(path, format!("line {line}: unknown event type `{other}`"))),
        };
        out.push(Annotation {
            trial_id: rec[0].to_owned(),
            event_type,
            t: parse_f64(path, line, &rec[2])?,
        });
    }
    Ok(out)
}

fn feature_header() -> Vec<&'static str> {
    std::iter::once("t").chain(FEATURE_NAMES).collect()
}

pub fn write_features_csv(path: &Path, fm: &FeatureMatrix) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(feature_header()).map_err(|e| csv_err(path, e))?;
    for (t, row) in fm.timestamps.iter().zip(&fm.rows) {
        let rec: Vec<String> = std::iter::once(t).chain(row).map(f64::to_string).collect();
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

fn parse_row(path: &Path, rec: &csv::StringRecord, offset: usize) -> Result<FeatureRow> {
    let line = line_of(rec);
    let mut row = [0.0; N_FEATURES];
    for (i, v) in row.iter_mut().enumerate() {
        *v = parse_f64(path, line, &rec[offset + i])?;
    }
    Ok(row)
}

pub fn read_features_csv(path: &Path) -> Result<FeatureMatrix> {
    let mut r = csv_reader(path, &feature_header())?;
    let mut fm = FeatureMatrix::default();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        fm.timestamps.push(parse_f64(path, line_of(&rec), &rec[0])?);
        fm.rows.push(parse_row(path, &rec, 1)?);
    }
    Ok(fm)
}

fn labeled_header() -> Vec<&'static str> {
    FEATURE_NAMES.iter().copied().chain(["label", "trial_id"]).collect()
}

/// Feature columns, `label` (0 = not contact, 1 = contact) and `trial_id`.
pub fn write_labeled_csv(path: &Path, ds: &LabeledDataset) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(labeled_header()).map_err(|e| csv_err(path, e))?;
    for ((row, label), id) in ds.rows.iter().zip(&ds.labels).zip(&ds.trial_ids) {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        rec.push(label.index().to_string());
        rec.push(id.clone());
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

pub fn read_labeled_csv(path: &Path) -> Result<LabeledDataset> {
    let mut r = csv_reader(path, &labeled_header())?;
    let mut ds = LabeledDataset::default();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        ds.rows.push(parse_row(path, &rec, 0)?);
        let label = match &rec[N_FEATURES] {
            "0" => Label::NotContact,
            "1" => Label::Contact,
            other => {
                return Err(Error::format(path, format!("line {}: label `{other}` is not 0 or 1", line_of(&rec))));
            }
        };
        ds.labels.push(label);
        ds.trial_ids.push(rec[N_FEATURES + 1].to_owned());
    }
    Ok(ds)
}

/// Writes a recording as `audio.wav`, `wrench.csv` and `annotations.csv`
/// under `dir`.
pub fn save_recording(dir: &Path, rec: &MultimodalRecording) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_wav(&dir.join(AUDIO_FILE), &rec.audio)?;
    write_wrench_csv(&dir.join(WRENCH_FILE), &rec.wrench)?;
    write_annotations(&dir.join(ANNOTATIONS_FILE), &annotations_of(rec))
}

/// Reads a trial directory written by [`save_recording`] (or prepared by
/// hand in the same layout).
pub fn load_recording(dir: &Path, trial_id: &str) -> Result<MultimodalRecording> {
    let missing: Vec<&str> = [AUDIO_FILE, WRENCH_FILE, ANNOTATIONS_FILE]
        .into_iter()
        .filter(|f| !dir.join(f).is_file())
        .collect();
    if !missing.is_empty() {
        return Err(Error::format(dir, format!("missing {}", missing.join(", "))));
    }
    let audio = read_wav(&dir.join(AUDIO_FILE))?;
    let wrench = read_wrench_csv(&dir.join(WRENCH_FILE))?;
    let annotations = read_annotations(&dir.join(ANNOTATIONS_FILE))?;
    let pick = |kind: EventType| -> Vec<f64> {
        let mut v: Vec<f64> = annotations
            .iter()
            .filter(|a| a.event_type == kind && a.trial_id == trial_id)
            .map(|a| a.t)
            .collect();
        v.sort_by(f64::total_cmp);
        v
    };
    MultimodalRecording::new(trial_id, audio, wrench, pick(EventType::Contact), pick(EventType::Exogenous))
}

/// Contact times of one trial from its annotation file.
pub fn load_contact_times(dir: &Path, trial_id: &str) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = read_annotations(&dir.join(ANNOTATIONS_FILE))?
        .into_iter()
        .filter(|a| a.event_type == EventType::Contact && a.trial_id == trial_id)
        .map(|a| a.t)
        .collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub trial_id: String,
    /// Trial directory relative to the manifest.
    pub dir: String,
    pub contacts: usize,
    pub exogenous: usize,
}

impl ManifestEntry {
    pub fn path(&self, data_dir: &Path) -> PathBuf {
        data_dir.join(&self.dir)
    }
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(MANIFEST_HEADER).map_err(|e| csv_err(path, e))?;
    for e in entries {
        w.write_record([
            e.trial_id.as_str(),
            e.dir.as_str(),
            &e.contacts.to_string(),
            &e.exogenous.to_string(),
        ])
        .map_err(|err| csv_err(path, err))?;
    }
    finish(path, w)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let mut r = csv_reader(path, &MANIFEST_HEADER)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = line_of(&rec);
        let count = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::format(path, format!("line {line}: `{s}` is not a count")))
        };
        out.push(ManifestEntry {
            trial_id: rec[0].to_owned(),
            dir: rec[1].to_owned(),
            contacts: count(&rec[2])?,
            exogenous: count(&rec[3])?,
        });
    }
    Ok(out)
}
