//! File-based commands tying the modules together: synthesize trials,
//! extract features, train, evaluate, detect and inspect.
//!
//! Each command reads its inputs from the locations in [`PipelineConfig`]
//! and writes plain CSV/text outputs; everything is deterministic given the
//! configured seeds.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::dataset::{self, Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::eval::{self, CrossValidation, EvaluationReport, SweepTable};
use crate::features;
use crate::forest::{ForestConfig, RandomForestModel};
use crate::io::{self, ManifestEntry, FEATURES_FILE, MANIFEST_FILE};
use crate::signal::MultimodalRecording;
use crate::stream::{ContactDetector, ContactEvent, StreamingExtractor};
use crate::synth;

pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_TXT: &str = "sweep.txt";
pub const CONFUSION_CSV: &str = "confusion.csv";
pub const REPORT_CSV: &str = "classification_report.csv";
pub const REPORT_TXT: &str = "classification_report.txt";
pub const ROC_CSV: &str = "roc.csv";
pub const IMPORTANCES_CSV: &str = "importances.csv";
pub const CV_CSV: &str = "cv.csv";
pub const SUMMARY_TXT: &str = "summary.txt";

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn manifest_path(cfg: &PipelineConfig) -> PathBuf {
    cfg.paths.data_dir.join(MANIFEST_FILE)
}

/// Generates `cfg.synth.n_trials` trials into the data directory, one
/// subdirectory per trial, and writes the manifest.
pub fn synth(cfg: &PipelineConfig) -> Result<Vec<ManifestEntry>> {
    cfg.validate()?;
    let data_dir = &cfg.paths.data_dir;
    let configs = synth::trial_configs(cfg.synth.n_trials, &cfg.synth.ranges, cfg.synth.seed);
    let entries = configs
        .par_iter()
        .map(|tc| {
            let rec = synth::generate_trial(tc)?;
            io::save_recording(&data_dir.join(&rec.trial_id), &rec)?;
            Ok(ManifestEntry {
                trial_id: rec.trial_id.clone(),
                dir: rec.trial_id.clone(),
                contacts: rec.contact_times.len(),
                exogenous: rec.exogenous_times.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    io::write_manifest(&manifest_path(cfg), &entries)?;
    log::info!("wrote {} trials to {}", entries.len(), data_dir.display());
    Ok(entries)
}

/// Outcome of [`extract`]: row counts of the trials that succeeded and the
/// errors of those that did not.
#[derive(Debug, Default)]
pub struct ExtractSummary {
    pub extracted: Vec<(String, usize)>,
    pub failed: Vec<(String, Error)>,
}

impl ExtractSummary {
    pub fn total_rows(&self) -> usize {
        self.extracted.iter().map(|e| e.1).sum()
    }
}

/// Extracts `features.csv` for every trial in the manifest. A failing trial
/// is reported in the summary and does not stop the others.
pub fn extract(cfg: &PipelineConfig) -> Result<ExtractSummary> {
    cfg.validate()?;
    let entries = io::read_manifest(&manifest_path(cfg))?;
    let results: Vec<(String, Result<usize>)> = entries
        .par_iter()
        .map(|e| {
            let dir = e.path(&cfg.paths.data_dir);
            let run = || -> Result<usize> {
                let rec = io::load_recording(&dir, &e.trial_id)?;
                let fm = features::extract_features(&rec, cfg.audio_frames.0, cfg.wrench_frames.0)?;
                io::write_features_csv(&dir.join(FEATURES_FILE), &fm)?;
                Ok(fm.len())
            };
            (e.trial_id.clone(), run())
        })
        .collect();
    let mut summary = ExtractSummary::default();
    for (id, r) in results {
        match r {
            Ok(n) => {
                log::debug!("{id}: {n} rows");
                summary.extracted.push((id, n));
            }
            Err(err) => {
                log::warn!("{id}: {err}");
                summary.failed.push((id, err));
            }
        }
    }
    log::info!(
        "extracted {} rows from {} trials ({} failed)",
        summary.total_rows(),
        summary.extracted.len(),
        summary.failed.len()
    );
    Ok(summary)
}

/// Labels the extracted features of every manifest trial and concatenates
/// them in manifest order.
pub fn load_labeled(cfg: &PipelineConfig) -> Result<LabeledDataset> {
    let entries = io::read_manifest(&manifest_path(cfg))?;
    let parts = entries
        .par_iter()
        .map(|e| {
            let dir = e.path(&cfg.paths.data_dir);
            let fm = io::read_features_csv(&dir.join(FEATURES_FILE))?;
            let contacts = io::load_contact_times(&dir, &e.trial_id)?;
            dataset::label_frames(&fm, &contacts, cfg.labels.window, &e.trial_id)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledDataset::concat(parts))
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub sweep: SweepTable,
    pub model: RandomForestModel,
    /// Accuracy of the final model on the validation split.
    pub validation_accuracy: f64,
}

/// Splits the labeled data, sweeps the forest size on the validation split,
/// trains the final model on the training split and saves it with the
/// sweep table.
pub fn train(cfg: &PipelineConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let ds = load_labeled(cfg)?;
    let (train, val, _) = dataset::split(&ds, &cfg.split)?;
    log::info!(
        "{} split: train {:?}, validation {:?} (not contact, contact)",
        cfg.split.mode,
        train.class_counts(),
        val.class_counts()
    );
    let sweep = eval::sweep_n_estimators(&train, &val, cfg.sweep.n_min..=cfg.sweep.n_max, &cfg.forest)?;
    let final_cfg = ForestConfig {
        n_estimators: sweep.selected,
        ..cfg.forest.clone()
    };
    let model = crate::forest::train(&train, &final_cfg)?;
    let validation_accuracy = eval::accuracy(&val.labels, &model.predict_batch(&val.rows)?)?;
    model.save(&cfg.paths.model)?;
    let report_dir = &cfg.paths.report_dir;
    write_text(&report_dir.join(SWEEP_CSV), &sweep.to_csv())?;
    write_text(&report_dir.join(SWEEP_TXT), &sweep.to_string())?;
    log::info!("selected n_estimators = {}", sweep.selected);
    Ok(TrainOutcome {
        sweep,
        model,
        validation_accuracy,
    })
}

#[derive(Debug)]
pub struct EvaluateOutcome {
    pub report: EvaluationReport,
    pub cross_validation: CrossValidation,
    pub feature_importances: Vec<f64>,
    pub summary: String,
}

pub fn importances_csv(model: &RandomForestModel) -> String {
    let mut out = String::from("feature,importance\n");
    for (name, v) in model.feature_names.iter().zip(&model.feature_importances) {
        let _ = writeln!(out, "{name},{v}");
    }
    out
}

/// Evaluates the saved model on the test split and runs k-fold cross
/// validation over the whole labeled dataset with the model's forest
/// configuration.
pub fn evaluate(cfg: &PipelineConfig) -> Result<EvaluateOutcome> {
    cfg.validate()?;
    let model = RandomForestModel::load(&cfg.paths.model)?;
    let ds = load_labeled(cfg)?;
    let (_, _, test) = dataset::split(&ds, &cfg.split)?;
    let report = eval::evaluate(&model, &test)?;
    let cv = eval::cross_validate(&ds, &model.config, cfg.cv.k, cfg.cv.seed)?;

    let dir = &cfg.paths.report_dir;
    write_text(&dir.join(CONFUSION_CSV), &report.confusion.to_csv())?;
    write_text(&dir.join(REPORT_CSV), &report.report.to_csv())?;
    write_text(&dir.join(REPORT_TXT), &report.report.to_string())?;
    write_text(&dir.join(ROC_CSV), &report.roc.to_csv())?;
    write_text(&dir.join(IMPORTANCES_CSV), &importances_csv(&model))?;
    write_text(&dir.join(CV_CSV), &cv.to_csv())?;

    let mut summary = String::new();
    let _ = writeln!(summary, "split mode: {}", cfg.split.mode);
    let _ = writeln!(summary, "test rows: {}", test.len());
    let _ = writeln!(summary, "n_estimators: {}", model.config.n_estimators);
    let _ = writeln!(summary, "accuracy: {}", report.accuracy);
    let _ = writeln!(summary, "auc: {}", report.auc);
    let _ = writeln!(summary, "cv folds: {}", cv.fold_accuracies.len());
    let _ = writeln!(summary, "cv mean accuracy: {}", cv.mean);
    let _ = writeln!(summary, "cv std accuracy: {}", cv.std);
    write_text(&dir.join(SUMMARY_TXT), &summary)?;

    Ok(EvaluateOutcome {
        feature_importances: model.feature_importances.clone(),
        report,
        cross_validation: cv,
        summary,
    })
}

/// Per-frame classification record from a detection run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameDecision {
    pub center_time: f64,
    pub probability: f64,
    pub label: Label,
    /// Seconds of stream that had to arrive after the frame center before
    /// its features were complete.
    pub alignment_latency: f64,
    /// Wall-clock seconds spent extracting and classifying the frame.
    pub compute_seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct DetectOutcome {
    pub events: Vec<ContactEvent>,
    pub frames: Vec<FrameDecision>,
}

impl DetectOutcome {
    pub fn events_csv(&self) -> String {
        let mut out = String::from("onset,end,peak_time,peak_probability,n_frames\n");
        for e in &self.events {
            let _ = writeln!(out, "{},{},{},{},{}", e.onset, e.end, e.peak_time, e.peak_probability, e.n_frames);
        }
        out
    }

    pub fn frames_csv(&self) -> String {
        let mut out = String::from("t,probability,label,alignment_latency,compute_seconds\n");
        for f in &self.frames {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                f.center_time,
                f.probability,
                f.label.index(),
                f.alignment_latency,
                f.compute_seconds
            );
        }
        out
    }

    /// `(mean, max)` of alignment latency plus compute time, seconds.
    pub fn latency_stats(&self) -> (f64, f64) {
        if self.frames.is_empty() {
            return (0.0, 0.0);
        }
        let total = |f: &FrameDecision| f.alignment_latency + f.compute_seconds;
        let sum: f64 = self.frames.iter().map(total).sum();
        let max = self.frames.iter().map(total).fold(0.0, f64::max);
        (sum / self.frames.len() as f64, max)
    }
}

/// Replays a recording through the streaming extractor in chunks of
/// `cfg.detect.chunk` seconds and classifies frames as they complete.
pub fn detect_recording(cfg: &PipelineConfig, model: &RandomForestModel, rec: &MultimodalRecording) -> Result<DetectOutcome> {
    cfg.validate()?;
    let (audio, wrench) = (&rec.audio, &rec.wrench);
    let mut ex = StreamingExtractor::new(
        audio.sample_rate(),
        audio.start_time(),
        cfg.audio_frames.0,
        wrench.sample_rate(),
        wrench.start_time(),
        cfg.wrench_frames.0,
    )?;
    let mut detector = ContactDetector::new(model, cfg.detect.merge_gap)?;
    let mut frames = Vec::new();
    let mut classify = |rows: Vec<crate::stream::StreamRow>, started: Instant, frames: &mut Vec<FrameDecision>| -> Result<()> {
        let n = rows.len().max(1) as f64;
        let mut decided = Vec::with_capacity(rows.len());
        for r in &rows {
            decided.push(detector.push(r.center_time, &r.features)?);
        }
        // Chunk work is shared evenly by the frames it completed.
        let per_frame = started.elapsed().as_secs_f64() / n;
        for (r, d) in rows.iter().zip(decided) {
            frames.push(FrameDecision {
                center_time: r.center_time,
                probability: d.probability,
                label: d.label,
                alignment_latency: r.latency(),
                compute_seconds: per_frame,
            });
        }
        Ok(())
    };

    let samples = audio.channel(0);
    let wrench_rows: Vec<[f64; 6]> = (0..wrench.len())
        .map(|n| std::array::from_fn(|c| wrench.channel(c)[n]))
        .collect();
    let t_end = audio.end_time().max(wrench.end_time());
    let (mut a, mut w) = (0usize, 0usize);
    let mut step = 1u64;
    while a < samples.len() || w < wrench_rows.len() {
        let until = step as f64 * cfg.detect.chunk;
        // Samples with timestamps strictly before `until`.
        let upto = |start: f64, rate: f64, len: usize| -> usize {
            (((until - start) * rate).ceil().max(0.0) as usize).min(len)
        };
        let a_end = upto(audio.start_time(), audio.sample_rate(), samples.len()).max(a);
        let w_end = upto(wrench.start_time(), wrench.sample_rate(), wrench_rows.len()).max(w);
        let started = Instant::now();
        let mut rows = ex.push_audio(&samples[a..a_end])?;
        rows.extend(ex.push_wrench(&wrench_rows[w..w_end])?);
        classify(rows, started, &mut frames)?;
        a = a_end;
        w = w_end;
        step += 1;
        if until > t_end + cfg.detect.chunk {
            break;
        }
    }
    let started = Instant::now();
    let rows = ex.finish()?;
    classify(rows, started, &mut frames)?;
    Ok(DetectOutcome {
        events: detector.finish(),
        frames,
    })
}

/// Loads the model and the trial directory `trial_dir` (trial id = the
/// directory name) and runs [`detect_recording`].
pub fn detect(cfg: &PipelineConfig, trial_dir: &Path) -> Result<DetectOutcome> {
    let model = RandomForestModel::load(&cfg.paths.model)?;
    let trial_id = trial_dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::invalid("trial directory", format!("no name in {}", trial_dir.display())))?;
    let rec = io::load_recording(trial_dir, trial_id)?;
    detect_recording(cfg, &model, &rec)
}

/// Human-readable dump of a saved model.
pub fn inspect(model: &RandomForestModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "format: {} v{}", model.format, model.version);
    let _ = writeln!(out, "classes: {}", model.classes.iter().map(|c| c.name()).collect::<Vec<_>>().join(", "));
    let c = &model.config;
    let _ = writeln!(
        out,
        "forest: n_estimators={} max_features={:?} min_samples_split={} max_depth={} bootstrap={} seed={}",
        c.n_estimators,
        c.max_features,
        c.min_samples_split,
        c.max_depth.map_or("none".to_owned(), |d| d.to_string()),
        c.bootstrap,
        c.seed
    );
    let _ = writeln!(out, "feature importances:");
    let mut ranked: Vec<(&String, f64)> = model.feature_names.iter().zip(model.feature_importances.iter().copied()).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (name, v) in ranked {
        let _ = writeln!(out, "  {name:<12} {v:.6}");
    }
    let _ = writeln!(out, "trees:");
    for (i, t) in model.trees.iter().enumerate() {
        let _ = writeln!(out, "  {i:>3}: {} nodes, {} leaves, depth {}", t.nodes.len(), t.n_leaves(), t.depth());
    }
    out
}
