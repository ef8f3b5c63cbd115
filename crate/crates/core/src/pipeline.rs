//! Dataset walk, per-clip labelling, manifest I/O and diagnostic images.
//!
//! A dataset root holds one subdirectory of frames per source video. Every
//! clip goes through the same sequential chain
//!
//! ```text
//! frames -> transform -> flows -> boundaries -> labels, score -> targets
//! ```
//!
//! and clips are spread over a worker pool. Results are merged in
//! `(sourceId, frameOffset)` order, so the manifest does not depend on the
//! number of workers.
//!
//! The manifest is JSON Lines. Each record carries a `kind`: one `header`,
//! then one `entry` per labelled clip, one `failure` per skipped clip and a
//! final `pacingPlan`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::appearance::appearance_labels;
use crate::curriculum::{build_plan, score, CurriculumScore, PacingPlan};
use crate::error::{Error, Result};
use crate::flow::{clip_flows, read_flo, FlowConfig, FlowField};
use crate::frameio::{list_frame_files, load_clip, source_id_of, Clip, SamplerConfig, SamplerMode, TransformRecord};
use crate::motion::{motion_labels, SummarizedBoundary, VectorField};
use crate::partition::PartitionPattern;
use crate::targets::{collapse_reg2d, encode_all, LabelSet, Targets};

pub const MANIFEST_VERSION: &str = "vidstat-manifest/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowSource {
    Estimated,
    Imported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ManifestEntry {
    pub clip_id: String,
    pub source_id: String,
    pub frame_offset: usize,
    pub transform_record: TransformRecord,
    pub label_set: LabelSet,
    pub targets: Targets,
    pub curriculum_score: CurriculumScore,
    pub flow_source: FlowSource,
}

impl ManifestEntry {
    /// Label ranges, score range and agreement of the three encodings.
    pub fn validate(&self) -> Result<()> {
        self.label_set.validate()?;
        let f = self.curriculum_score.f;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::contract(format!("{}: score {f} outside (0, 1]", self.clip_id)));
        }
        let fresh = encode_all(&self.label_set)?;
        if fresh != self.targets {
            return Err(Error::contract(format!("{}: targets disagree with labels", self.clip_id)));
        }
        let collapsed = collapse_reg2d(self.targets.reg2d.values().unwrap_or(&[]))?;
        if Some(collapsed.as_slice()) != self.targets.reg1d.values() {
            return Err(Error::contract(format!("{}: reg2D does not collapse to reg1D", self.clip_id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClipFailure {
    pub clip_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub version: String,
    pub sampler_config: SamplerConfig,
    pub flow_config: FlowConfig,
    pub bin_count: usize,
    pub entries: Vec<ManifestEntry>,
    pub failures: Vec<ClipFailure>,
    pub pacing_plan: PacingPlan,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Header {
    version: String,
    sampler_config: SamplerConfig,
    flow_config: FlowConfig,
    bin_count: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
enum Record {
    Header(Header),
    Entry(Box<ManifestEntry>),
    Failure(ClipFailure),
    PacingPlan(PacingPlan),
}

impl Manifest {
    pub fn write_to(&self, mut out: impl Write) -> std::io::Result<()> {
        let mut line = |r: &Record| -> std::io::Result<()> {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")
        };
        line(&Record::Header(Header {
            version: self.version.clone(),
            sampler_config: self.sampler_config.clone(),
            flow_config: self.flow_config.clone(),
            bin_count: self.bin_count,
        }))?;
        for e in &self.entries {
            line(&Record::Entry(Box::new(e.clone())))?;
        }
        for f in &self.failures {
            line(&Record::Failure(f.clone()))?;
        }
        line(&Record::PacingPlan(self.pacing_plan.clone()))?;
        out.flush()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_from(input: impl BufRead) -> Result<Manifest> {
        let mut header = None;
        let mut entries = Vec::new();
        let mut failures = Vec::new();
        let mut plan = None;
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::contract(format!("manifest line {}: {e}", n + 1)))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(&line)
                .map_err(|e| Error::contract(format!("manifest line {}: {e}", n + 1)))?;
            match (record, header.is_some()) {
                (Record::Header(h), false) => {
                    if h.version != MANIFEST_VERSION {
                        return Err(Error::contract(format!("unsupported manifest version {}", h.version)));
                    }
                    header = Some(h);
                }
                (_, false) | (Record::Header(_), true) => {
                    return Err(Error::contract(format!(
                        "manifest line {}: exactly one header must come first",
                        n + 1
                    )))
                }
                (Record::Entry(e), true) => entries.push(*e),
                (Record::Failure(f), true) => failures.push(f),
                (Record::PacingPlan(p), true) => plan = Some(p),
            }
        }
        let header = header.ok_or_else(|| Error::contract("manifest has no header"))?;
        let pacing_plan = plan.ok_or_else(|| Error::contract("manifest has no pacing plan"))?;
        Ok(Manifest {
            version: header.version,
            sampler_config: header.sampler_config,
            flow_config: header.flow_config,
            bin_count: header.bin_count,
            entries,
            failures,
            pacing_plan,
        })
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Manifest::read_from(BufReader::new(file))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sampler: SamplerConfig,
    pub flow: FlowConfig,
    pub bin_count: usize,
    pub switch_iteration: u64,
    pub workers: usize,
    /// Read `<source>/flow/<frameIndex>.flo` when every pair of a clip has one.
    pub use_flo: bool,
    pub diagnostics_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sampler: SamplerConfig::default(),
            flow: FlowConfig::default(),
            bin_count: crate::appearance::DEFAULT_BIN_COUNT,
            switch_iteration: 0,
            workers: 1,
            use_flo: false,
            diagnostics_dir: None,
        }
    }
}

/// Everything derived from one clip's frames and flows.
#[derive(Debug, Clone)]
pub struct ClipAnalysis {
    pub labels: LabelSet,
    pub score: CurriculumScore,
    pub targets: Targets,
    pub summary: SummarizedBoundary,
}

/// Labels, score and targets of a clip whose flows are already known.
pub fn analyze_clip(
    clip: &Clip,
    flows: &[FlowField],
    patterns: &[PartitionPattern; 3],
    bin_count: usize,
) -> Result<ClipAnalysis> {
    if flows.len() + 1 != clip.len() {
        return Err(Error::contract(format!(
            "{} flows for a clip of {} frames",
            flows.len(),
            clip.len()
        )));
    }
    if let Some(f) = flows
        .iter()
        .find(|f| f.width() != clip.width() || f.height() != clip.height())
    {
        return Err(Error::contract(format!(
            "flow is {}x{}, clip is {}x{}",
            f.width(),
            f.height(),
            clip.width(),
            clip.height()
        )));
    }
    let (motion, summary) = motion_labels(flows, patterns)?;
    let appearance = appearance_labels(clip, patterns, bin_count)?;
    let labels = LabelSet { motion, appearance };
    Ok(ClipAnalysis {
        score: score(&summary, &patterns[0])?,
        targets: encode_all(&labels)?,
        labels,
        summary,
    })
}

struct Job {
    dir: PathBuf,
    source_id: String,
    index: usize,
}

impl Job {
    /// Clip id used when the clip never loaded.
    fn nominal_id(&self, sampler: &SamplerConfig) -> String {
        match sampler.mode {
            SamplerMode::NonOverlapping => format!("{}/{}", self.source_id, self.index * sampler.clip_length),
            SamplerMode::RandomStart => format!("{}/random{}", self.source_id, self.index),
        }
    }
}

fn source_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let path = entry.map_err(|e| Error::io(root, e))?.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

fn plan_jobs(root: &Path, sampler: &SamplerConfig) -> Result<(Vec<Job>, Vec<ClipFailure>)> {
    let mut jobs = Vec::new();
    let mut failures = Vec::new();
    for dir in source_dirs(root)? {
        let source_id = source_id_of(&dir);
        let frames = match list_frame_files(&dir) {
            Ok(f) => f.len(),
            Err(e) => {
                failures.push(ClipFailure {
                    clip_id: format!("{source_id}/0"),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let clips = match sampler.mode {
            SamplerMode::NonOverlapping => frames / sampler.clip_length,
            SamplerMode::RandomStart => 1,
        };
        // A too-short source still gets one attempt so it shows up as a failure.
        for index in 0..clips.max(1) {
            jobs.push(Job {
                dir: dir.clone(),
                source_id: source_id.clone(),
                index,
            });
        }
    }
    Ok((jobs, failures))
}

/// Imported flows for every pair of the clip, or `None` if any file is missing.
fn imported_flows(dir: &Path, clip: &Clip) -> Result<Option<Vec<FlowField>>> {
    let paths: Vec<PathBuf> = (0..clip.len() - 1)
        .map(|k| dir.join("flow").join(format!("{}.flo", clip.frame_offset() + k)))
        .collect();
    if !paths.iter().all(|p| p.is_file()) {
        return Ok(None);
    }
    paths
        .iter()
        .map(|p| read_flo(p)?.transformed(clip.transform()))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn run_job(job: &Job, cfg: &RunConfig, patterns: &[PartitionPattern; 3]) -> Result<ManifestEntry> {
    let clip = load_clip(&job.dir, &cfg.sampler, job.index)?;
    let imported = if cfg.use_flo {
        imported_flows(&job.dir, &clip)?
    } else {
        None
    };
    let (flows, flow_source) = match imported {
        Some(f) => (f, FlowSource::Imported),
        None => (clip_flows(&clip, &cfg.flow)?, FlowSource::Estimated),
    };
    let analysis = analyze_clip(&clip, &flows, patterns, cfg.bin_count)?;
    let entry = ManifestEntry {
        clip_id: clip.clip_id(),
        source_id: clip.source_id().to_string(),
        frame_offset: clip.frame_offset(),
        transform_record: *clip.transform(),
        label_set: analysis.labels,
        targets: analysis.targets,
        curriculum_score: analysis.score,
        flow_source,
    };
    if let Some(dir) = &cfg.diagnostics_dir {
        let out = dir.join(&entry.source_id).join(entry.frame_offset.to_string());
        dump_diagnostics(&entry, &analysis.summary, patterns, &out)?;
    }
    Ok(entry)
}

/// Labels every clip under `root`. Clips that fail are recorded and skipped;
/// the run fails only when no clip succeeds.
pub fn process_dataset(root: &Path, cfg: &RunConfig) -> Result<Manifest> {
    cfg.sampler.validate()?;
    cfg.flow.validate()?;
    if !(1..=256).contains(&cfg.bin_count) {
        return Err(Error::contract(format!("bin count {} outside 1..=256", cfg.bin_count)));
    }
    let (ch, cw) = cfg.sampler.crop_to;
    let patterns = PartitionPattern::build_all(cw, ch)?;
    let (jobs, mut failures) = plan_jobs(root, &cfg.sampler)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::contract(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<ManifestEntry>> =
        pool.install(|| jobs.par_iter().map(|j| run_job(j, cfg, &patterns)).collect());

    let mut entries = Vec::new();
    for (job, result) in jobs.iter().zip(results) {
        match result {
            Ok(e) => entries.push(e),
            Err(e) => failures.push(ClipFailure {
                clip_id: job.nominal_id(&cfg.sampler),
                reason: e.to_string(),
            }),
        }
    }
    if entries.is_empty() {
        return Err(Error::NoClips {
            failed: failures.len(),
        });
    }
    entries.sort_by(|a, b| (&a.source_id, a.frame_offset).cmp(&(&b.source_id, b.frame_offset)));

    let scores: BTreeMap<String, CurriculumScore> = entries
        .iter()
        .map(|e| (e.clip_id.clone(), e.curriculum_score))
        .collect();
    Ok(Manifest {
        version: MANIFEST_VERSION.to_string(),
        sampler_config: cfg.sampler.clone(),
        flow_config: cfg.flow.clone(),
        bin_count: cfg.bin_count,
        pacing_plan: build_plan(&scores, cfg.switch_iteration),
        entries,
        failures,
    })
}

/// Min-max normalized magnitudes as 8-bit gray levels; a constant map is black.
pub fn normalized_magnitude(field: &VectorField) -> Vec<u8> {
    let mag = field.magnitudes();
    let lo = mag.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo || hi.is_nan() {
        return vec![0; mag.len()];
    }
    mag.iter()
        .map(|&m| ((m - lo) / (hi - lo) * 255.0).round() as u8)
        .collect()
}

fn gray_frame(w: usize, h: usize, levels: &[u8]) -> crate::frameio::Frame {
    crate::frameio::Frame::from_fn(w, h, |x, y| {
        let g = levels[y * w + x];
        [g, g, g]
    })
}

/// Writes `mu.png` and `mv.png` (normalized magnitude maps) and
/// `overlay_p{1,2,3}_{u,v}.png`, where the labelled block keeps its gray
/// level with red forced to 255 and every other pixel is dimmed to a quarter.
pub fn dump_diagnostics(
    entry: &ManifestEntry,
    summary: &SummarizedBoundary,
    patterns: &[PartitionPattern; 3],
    out_dir: &Path,
) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let (w, h) = (summary.width(), summary.height());
    for (name, field) in [("u", &summary.mu), ("v", &summary.mv)] {
        let levels = normalized_magnitude(field);
        gray_frame(w, h, &levels).save(&out_dir.join(format!("m{name}.png")))?;
        for (pattern, local) in patterns.iter().zip(&entry.label_set.motion.per_pattern) {
            if pattern.width() != w || pattern.height() != h {
                return Err(Error::contract("pattern and summary sizes differ"));
            }
            let block = if name == "u" { local.p_u } else { local.p_v };
            let overlay = crate::frameio::Frame::from_fn(w, h, |x, y| {
                let g = levels[y * w + x];
                if pattern.block_at(x, y) == block {
                    [255, g, g]
                } else {
                    [g / 4; 3]
                }
            });
            let file = out_dir.join(format!("overlay_p{}_{name}.png", pattern.id().number()));
            overlay.save(&file)?;
        }
    }
    Ok(())
}
