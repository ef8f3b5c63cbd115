use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use vidstat::flow::FlowConfig;
use vidstat::frameio::{CropMode, SamplerConfig, SamplerMode};
use vidstat::pipeline::{process_dataset, RunConfig};

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Nonoverlap,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Crop {
    Random,
    Center,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HxW, got {s:?}"))?;
    let h = h.trim().parse().map_err(|e| format!("height {h:?}: {e}"))?;
    let w = w.trim().parse().map_err(|e| format!("width {w:?}: {e}"))?;
    Ok((h, w))
}

/// Label video clips with spatio-temporal statistics and write a manifest.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Dataset root: one directory of PNG/PPM frames per source video.
    #[arg(long)]
    root: PathBuf,
    #[arg(long, value_enum, default_value = "nonoverlap")]
    mode: Mode,
    #[arg(long, default_value_t = 16)]
    clip_len: usize,
    #[arg(long, value_parser = parse_size, default_value = "128x171")]
    resize: (usize, usize),
    #[arg(long, value_parser = parse_size, default_value = "112x112")]
    crop: (usize, usize),
    #[arg(long, value_enum, default_value = "random")]
    crop_mode: Crop,
    #[arg(long, default_value_t = 0.5)]
    flip_prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Histogram bins per color channel.
    #[arg(long, default_value_t = 16)]
    iou_bins: usize,
    /// Iteration at which the hard half of the clips joins training.
    #[arg(long, default_value_t = 0)]
    switch_iter: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Manifest path (JSON Lines).
    #[arg(long, default_value = "manifest.jsonl")]
    out: PathBuf,
    /// Write magnitude and block-overlay PNGs per clip here.
    #[arg(long, value_name = "DIR")]
    dump_diagnostics: Option<PathBuf>,
    /// Use `<source>/flow/<frameIndex>.flo` instead of estimating flow.
    #[arg(long)]
    use_flo: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = RunConfig {
        sampler: SamplerConfig {
            mode: match args.mode {
                Mode::Nonoverlap => SamplerMode::NonOverlapping,
                Mode::Random => SamplerMode::RandomStart,
            },
            clip_length: args.clip_len,
            resize_to: args.resize,
            crop_to: args.crop,
            crop_mode: match args.crop_mode {
                Crop::Random => CropMode::Random,
                Crop::Center => CropMode::Center,
            },
            horizontal_flip_probability: args.flip_prob,
            seed: args.seed,
        },
        flow: FlowConfig::default(),
        bin_count: args.iou_bins,
        switch_iteration: args.switch_iter,
        workers: args.workers,
        use_flo: args.use_flo,
        diagnostics_dir: args.dump_diagnostics,
    };

    let manifest = match process_dataset(&args.root, &cfg) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    for f in &manifest.failures {
        eprintln!("skipped {}: {}", f.clip_id, f.reason);
    }
    if let Err(e) = manifest.write(&args.out) {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    eprintln!(
        "{} clips labelled, {} skipped, manifest at {}",
        manifest.entries.len(),
        manifest.failures.len(),
        args.out.display()
    );
    ExitCode::SUCCESS
}
