mod common;

use std::fs;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vidstat::appearance::block_ious;
use vidstat::flow::FlowConfig;
use vidstat::frameio::{Clip, CropMode, Frame, SamplerConfig, SamplerMode};
use vidstat::partition::{PartitionPattern, PatternId};
use vidstat::pipeline::{analyze_clip, process_dataset, FlowSource, Manifest, RunConfig};
use vidstat::Error;

fn small_run(size: usize, clip_length: usize, workers: usize) -> RunConfig {
    RunConfig {
        sampler: small_sampler(size, clip_length),
        flow: FlowConfig {
            pyramid_levels: 2,
            ..FlowConfig::default()
        },
        workers,
        ..RunConfig::default()
    }
}

#[test]
fn golden_scene_labels_in_memory() {
    let (frames, flows) = golden_scene();
    let clip = Clip::from_frames(frames, "scene", 0).unwrap();
    let patterns = PartitionPattern::build_all(SCENE, SCENE).unwrap();
    let a = analyze_clip(&clip, &flows, &patterns, 16).unwrap();
    let m = a.labels.motion.per_pattern[0];
    let ap = a.labels.appearance.per_pattern[0];
    assert_eq!((m.p_u, m.o_u, m.p_v), (7, 5, 7), "{m:?}");
    assert_eq!((ap.p_l, ap.c_l), (12, GREEN_OCTANT), "{ap:?}");
    let ious = block_ious(&clip, &patterns[0], 16).unwrap();
    assert!(ious[11] < ious[10], "{ious:?}");
}

#[test]
fn golden_scene_through_the_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let (frames, flows) = golden_scene();
    let src = tmp.path().join("scene");
    write_frames(&src, &frames, "png");
    write_flows(&src, &flows);
    let cfg = RunConfig {
        sampler: SamplerConfig {
            mode: SamplerMode::NonOverlapping,
            clip_length: 3,
            resize_to: (SCENE, SCENE),
            crop_to: (SCENE, SCENE),
            crop_mode: CropMode::Center,
            horizontal_flip_probability: 0.0,
            seed: 0,
        },
        use_flo: true,
        ..RunConfig::default()
    };
    let m = process_dataset(tmp.path(), &cfg).unwrap();
    assert_eq!(m.entries.len(), 1);
    let e = &m.entries[0];
    assert_eq!(e.flow_source, FlowSource::Imported);
    let lm = e.label_set.motion.per_pattern[0];
    let la = e.label_set.appearance.per_pattern[0];
    assert_eq!((lm.p_u, lm.o_u), (7, 5));
    assert_eq!((la.p_l, la.c_l), (12, GREEN_OCTANT));
}

#[test]
fn two_sources_of_32_frames_give_four_entries() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    write_dataset(tmp.path(), 2, 32, 32, 32, &mut rng);
    let m = process_dataset(tmp.path(), &small_run(32, 16, 2)).unwrap();
    let ids: Vec<&str> = m.entries.iter().map(|e| e.clip_id.as_str()).collect();
    assert_eq!(ids, ["video000/0", "video000/16", "video001/0", "video001/16"]);
    assert!(m.failures.is_empty());
    for e in &m.entries {
        e.validate().unwrap();
        assert_eq!(e.flow_source, FlowSource::Estimated);
    }
    let mut planned: Vec<&String> = m.pacing_plan.stage1.iter().chain(&m.pacing_plan.stage2).collect();
    planned.sort();
    assert_eq!(planned, ids.iter().collect::<Vec<_>>());
}

#[test]
fn worker_count_does_not_change_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    write_dataset(tmp.path(), 3, 12, 32, 32, &mut rng);
    let mut cfg = small_run(32, 4, 1);
    cfg.sampler.crop_to = (24, 24);
    cfg.sampler.crop_mode = CropMode::Random;
    cfg.sampler.horizontal_flip_probability = 0.5;
    let one = process_dataset(tmp.path(), &cfg).unwrap();
    cfg.workers = 8;
    let eight = process_dataset(tmp.path(), &cfg).unwrap();
    let (a, b) = (tmp.path().join("a.jsonl"), tmp.path().join("b.jsonl"));
    one.write(&a).unwrap();
    eight.write(&b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn manifest_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    write_dataset(&tmp.path().join("data"), 2, 8, 24, 24, &mut rng);
    let m = process_dataset(&tmp.path().join("data"), &small_run(24, 4, 2)).unwrap();
    let path = tmp.path().join("m.jsonl");
    m.write(&path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].contains("\"kind\":\"header\""));
    assert!(lines[1].contains("\"clipId\""));
    assert!(lines.last().unwrap().contains("\"kind\":\"pacingPlan\""));
    assert_eq!(Manifest::read(&path).unwrap(), m);
}

#[test]
fn failures_are_recorded_and_skipped() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    write_dataset(tmp.path(), 1, 8, 24, 24, &mut rng);
    // too short for a clip
    write_frames(&tmp.path().join("short"), &moving_square_frames(24, 24, 2, &mut rng), "png");
    // undecodable frame
    let bad = tmp.path().join("broken");
    write_frames(&bad, &moving_square_frames(24, 24, 4, &mut rng), "png");
    fs::write(bad.join("00002.png"), b"not a png").unwrap();

    let m = process_dataset(tmp.path(), &small_run(24, 4, 3)).unwrap();
    assert_eq!(m.entries.len(), 2);
    let failed: Vec<&str> = m.failures.iter().map(|f| f.clip_id.as_str()).collect();
    assert_eq!(failed, ["broken/0", "short/0"]);
    assert!(m.failures[0].reason.contains("00002.png"), "{}", m.failures[0].reason);
}

#[test]
fn nothing_processable_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    write_frames(&tmp.path().join("short"), &moving_square_frames(24, 24, 2, &mut rng), "png");
    let err = process_dataset(tmp.path(), &small_run(24, 4, 1)).unwrap_err();
    assert!(matches!(err, Error::NoClips { failed: 1 }), "{err}");
}

#[test]
fn random_mode_takes_one_clip_per_source() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    write_dataset(tmp.path(), 3, 20, 24, 24, &mut rng);
    let mut cfg = small_run(24, 4, 2);
    cfg.sampler.mode = SamplerMode::RandomStart;
    let m = process_dataset(tmp.path(), &cfg).unwrap();
    assert_eq!(m.entries.len(), 3);
    assert_eq!(process_dataset(tmp.path(), &cfg).unwrap(), m);
}

fn read_rgb(path: &std::path::Path) -> Frame {
    Frame::load(path).unwrap()
}

#[test]
fn diagnostics_mark_one_block_per_pattern_and_field() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    // a textured square shifting right over a flat background
    let frames: Vec<Frame> = (0..4)
        .map(|t| {
            Frame::from_fn(32, 32, |x, y| {
                let (x0, y0) = (3 + 2 * t, 18);
                if x >= x0 && x < x0 + 9 && y >= y0 && y < y0 + 9 {
                    [((x * 53 + y * 31) % 200) as u8 + 40, 200, ((x * y) % 256) as u8]
                } else {
                    [90, 90, 90]
                }
            })
        })
        .collect();
    write_frames(&data.join("square"), &frames, "png");
    let dump = tmp.path().join("diag");
    let cfg = RunConfig {
        diagnostics_dir: Some(dump.clone()),
        ..small_run(32, 4, 1)
    };
    let m = process_dataset(&data, &cfg).unwrap();
    let e = &m.entries[0];
    let dir = dump.join("square").join("0");
    for name in ["mu", "mv"] {
        let img = read_rgb(&dir.join(format!("{name}.png")));
        assert_eq!((img.width(), img.height()), (32, 32));
    }
    let patterns = PartitionPattern::build_all(32, 32).unwrap();
    for (pattern, local) in patterns.iter().zip(&e.label_set.motion.per_pattern) {
        for (field, label) in [("u", local.p_u), ("v", local.p_v)] {
            let img = read_rgb(&dir.join(format!("overlay_p{}_{field}.png", pattern.id().number())));
            let mut marked = std::collections::BTreeSet::new();
            let mut sums = vec![0u64; pattern.block_count() as usize];
            for y in 0..32 {
                for x in 0..32 {
                    let p = img.pixel(x, y);
                    let b = pattern.block_at(x, y);
                    if p[0] == 255 {
                        marked.insert(b);
                    }
                    sums[b as usize - 1] += p.iter().map(|&c| c as u64).sum::<u64>();
                }
            }
            assert_eq!(marked.into_iter().collect::<Vec<_>>(), vec![label]);
            if pattern.id() == PatternId::Grid && field == "u" {
                let means: Vec<f64> = sums
                    .iter()
                    .zip(pattern.block_sizes())
                    .map(|(&s, &n)| s as f64 / n as f64)
                    .collect();
                let brightest = means
                    .iter()
                    .enumerate()
                    .fold(0, |best, (i, &m)| if m > means[best] { i } else { best });
                assert_eq!(brightest as u8 + 1, e.label_set.motion.per_pattern[0].p_u);
            }
        }
    }
}

#[test]
fn zero_summary_dumps_black_maps() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    write_frames(&data.join("still"), &vec![Frame::filled(16, 16, [10, 200, 30]); 3], "png");
    let dump = tmp.path().join("diag");
    let cfg = RunConfig {
        diagnostics_dir: Some(dump.clone()),
        ..small_run(16, 3, 1)
    };
    process_dataset(&data, &cfg).unwrap();
    for name in ["mu", "mv"] {
        let img = read_rgb(&dump.join("still").join("0").join(format!("{name}.png")));
        assert!(img.pixels().iter().all(|&c| c == 0));
    }
}

#[test]
fn cli_writes_manifest_and_reports_exit_status() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    write_dataset(&data, 2, 8, 40, 36, &mut rng);
    let out = tmp.path().join("manifest.jsonl");
    let diag = tmp.path().join("diag");
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_vidstat"))
        .args(["--root", data.to_str().unwrap()])
        .args(["--clip-len", "4", "--resize", "36x40", "--crop", "32x32"])
        .args(["--crop-mode", "center", "--flip-prob", "1", "--seed", "3", "--workers", "2"])
        .args(["--iou-bins", "8", "--switch-iter", "500", "--out", out.to_str().unwrap()])
        .args(["--dump-diagnostics", diag.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let m = Manifest::read(&out).unwrap();
    assert_eq!(m.entries.len(), 4);
    assert_eq!(m.bin_count, 8);
    assert_eq!(m.pacing_plan.switch_iteration, 500);
    assert!(m.entries.iter().all(|e| e.transform_record.flipped));
    assert!(diag.join("video001").join("4").join("overlay_p3_v.png").is_file());

    let empty = tmp.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_vidstat"))
        .args(["--root", empty.to_str().unwrap(), "--out", tmp.path().join("x.jsonl").to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}
