//! Scene renderers, synthetic datasets and random generators shared by the
//! integration tests.
#![allow(dead_code)]

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vidstat::flow::{write_flo, FlowField};
use vidstat::frameio::{Clip, CropMode, Frame, SamplerConfig, SamplerMode};
use vidstat::motion::{SummarizedBoundary, VectorField};

pub const SCENE: usize = 112;
pub const BACKGROUND: [u8; 3] = [235, 235, 235];
pub const BLUE: [u8; 3] = [30, 60, 220];
pub const GREEN: [u8; 3] = [40, 200, 40];
pub const GREEN_OCTANT: u8 = 3;

const SUPERSAMPLE: usize = 8;

/// Isosceles triangle, apex angle 90°, base 26 px. The outward normal of
/// the base points left and down on screen (202.5° counterclockwise from +x
/// with y up), the apex up and right.
#[derive(Clone, Copy)]
struct Triangle {
    verts: [(f64, f64); 3],
}

impl Triangle {
    fn at(cx: f64, cy: f64) -> Triangle {
        let a = 202.5f64.to_radians();
        // screen coordinates, y down
        let n = (a.cos(), -a.sin());
        let t = (-n.1, n.0);
        let half_base = 13.0;
        let height = 13.0;
        let base_mid = (cx + n.0 * height / 2.0, cy + n.1 * height / 2.0);
        let apex = (cx - n.0 * height / 2.0, cy - n.1 * height / 2.0);
        Triangle {
            verts: [
                (base_mid.0 + t.0 * half_base, base_mid.1 + t.1 * half_base),
                (base_mid.0 - t.0 * half_base, base_mid.1 - t.1 * half_base),
                apex,
            ],
        }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let s = |(ax, ay): (f64, f64), (bx, by): (f64, f64)| (bx - ax) * (y - ay) - (by - ay) * (x - ax);
        let [a, b, c] = self.verts;
        let (d1, d2, d3) = (s(a, b), s(b, c), s(c, a));
        (d1 >= 0.0 && d2 >= 0.0 && d3 >= 0.0) || (d1 <= 0.0 && d2 <= 0.0 && d3 <= 0.0)
    }
}

fn in_circle(cx: f64, cy: f64, r: f64, x: f64, y: f64) -> bool {
    (x - cx).powi(2) + (y - cy).powi(2) <= r * r
}

/// Fraction of pixel `(x, y)` covered by `inside`.
fn coverage(x: usize, y: usize, inside: impl Fn(f64, f64) -> bool) -> f32 {
    let mut hit = 0;
    for sy in 0..SUPERSAMPLE {
        for sx in 0..SUPERSAMPLE {
            let px = x as f64 + (sx as f64 + 0.5) / SUPERSAMPLE as f64;
            let py = y as f64 + (sy as f64 + 0.5) / SUPERSAMPLE as f64;
            if inside(px, py) {
                hit += 1;
            }
        }
    }
    hit as f32 / (SUPERSAMPLE * SUPERSAMPLE) as f32
}

pub const TRIANGLE_CENTERS: [(f64, f64); 3] = [(98.0, 14.0), (70.0, 42.0), (14.0, 98.0)];
pub const CIRCLE_CENTERS: [(f64, f64); 3] = [(66.0, 70.0), (98.0, 70.0), (98.0, 70.0)];
pub const CIRCLE_RADIUS: f64 = 14.0;

/// Three 112×112 frames: a blue triangle crossing blocks 4 → 7 → 13 with a
/// growing displacement and a green circle moving from blocks 10/11 into
/// block 12, plus the exact area-weighted flow of both objects.
pub fn golden_scene() -> (Vec<Frame>, Vec<FlowField>) {
    let frames = (0..3)
        .map(|t| {
            let tri = Triangle::at(TRIANGLE_CENTERS[t].0, TRIANGLE_CENTERS[t].1);
            let (ccx, ccy) = CIRCLE_CENTERS[t];
            Frame::from_fn(SCENE, SCENE, |x, y| {
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                if tri.contains(px, py) {
                    BLUE
                } else if in_circle(ccx, ccy, CIRCLE_RADIUS, px, py) {
                    GREEN
                } else {
                    BACKGROUND
                }
            })
        })
        .collect();
    let flows = (0..2)
        .map(|t| {
            let tri = Triangle::at(TRIANGLE_CENTERS[t].0, TRIANGLE_CENTERS[t].1);
            let td = (
                (TRIANGLE_CENTERS[t + 1].0 - TRIANGLE_CENTERS[t].0) as f32,
                (TRIANGLE_CENTERS[t + 1].1 - TRIANGLE_CENTERS[t].1) as f32,
            );
            let (ccx, ccy) = CIRCLE_CENTERS[t];
            let cd = (
                (CIRCLE_CENTERS[t + 1].0 - ccx) as f32,
                (CIRCLE_CENTERS[t + 1].1 - ccy) as f32,
            );
            FlowField::from_fn(SCENE, SCENE, |x, y| {
                let ct = coverage(x, y, |px, py| tri.contains(px, py));
                let cc = coverage(x, y, |px, py| in_circle(ccx, ccy, CIRCLE_RADIUS, px, py));
                let cc = cc.min(1.0 - ct);
                (ct * td.0 + cc * cd.0, ct * td.1 + cc * cd.1)
            })
        })
        .collect();
    (frames, flows)
}

pub fn write_frames(dir: &Path, frames: &[Frame], ext: &str) {
    fs::create_dir_all(dir).unwrap();
    for (i, f) in frames.iter().enumerate() {
        f.save(&dir.join(format!("{i:05}.{ext}"))).unwrap();
    }
}

pub fn write_flows(dir: &Path, flows: &[FlowField]) {
    let flow_dir = dir.join("flow");
    fs::create_dir_all(&flow_dir).unwrap();
    for (i, f) in flows.iter().enumerate() {
        write_flo(f, &flow_dir.join(format!("{i}.flo"))).unwrap();
    }
}

/// Smooth background plus a bright square moving with a per-source velocity.
pub fn moving_square_frames(w: usize, h: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<Frame> {
    let side = (w.min(h) / 4).max(3) as i64;
    let (mut x0, mut y0) = (rng.gen_range(0..w as i64 - side), rng.gen_range(0..h as i64 - side));
    let (vx, vy) = (rng.gen_range(-2i64..=2), rng.gen_range(-2i64..=2));
    let tint: [u8; 3] = [rng.gen(), rng.gen(), rng.gen()];
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut frames = Vec::with_capacity(n);
    for _ in 0..n {
        frames.push(Frame::from_fn(w, h, |x, y| {
            let (xi, yi) = (x as i64, y as i64);
            if xi >= x0 && xi < x0 + side && yi >= y0 && yi < y0 + side {
                let s = (((x + 2 * y) % 5) * 20) as u8;
                [255 - s, 240u8.saturating_sub(tint[1] / 4), 40 + s]
            } else {
                let g = 100.0 + 60.0 * ((x as f64 * 0.4 + phase).sin() * (y as f64 * 0.3).cos());
                [
                    (g as u8).wrapping_add(tint[0] / 8),
                    g as u8,
                    (g as u8).wrapping_add(tint[2] / 8),
                ]
            }
        }));
        x0 = (x0 + vx).clamp(0, w as i64 - side);
        y0 = (y0 + vy).clamp(0, h as i64 - side);
    }
    frames
}

/// `sources` directories of `frames` PNG frames each under `root`.
pub fn write_dataset(root: &Path, sources: usize, frames: usize, w: usize, h: usize, rng: &mut ChaCha8Rng) {
    for s in 0..sources {
        let f = moving_square_frames(w, h, frames, rng);
        write_frames(&root.join(format!("video{s:03}")), &f, "png");
    }
}

/// Small, fast sampler for synthetic datasets: no resize change, center
/// crop, no flip.
pub fn small_sampler(size: usize, clip_length: usize) -> SamplerConfig {
    SamplerConfig {
        mode: SamplerMode::NonOverlapping,
        clip_length,
        resize_to: (size, size),
        crop_to: (size, size),
        crop_mode: CropMode::Center,
        horizontal_flip_probability: 0.0,
        seed: 7,
    }
}

pub fn random_frame(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Frame {
    Frame::from_fn(w, h, |_, _| [rng.gen(), rng.gen(), rng.gen()])
}

/// Random clip whose pixels come from a small palette, so blocks have
/// repeated colors and ties stay likely.
pub fn random_clip(w: usize, h: usize, n: usize, rng: &mut ChaCha8Rng) -> Clip {
    let palette: Vec<[u8; 3]> = (0..rng.gen_range(2..8)).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
    let frames = (0..n)
        .map(|_| Frame::from_fn(w, h, |_, _| palette[rng.gen_range(0..palette.len())]))
        .collect();
    Clip::from_frames(frames, "random", 0).unwrap()
}

/// Random flow with values on a `1/denom` grid in `[-range, range]`.
pub fn random_flow(w: usize, h: usize, range: i32, denom: f32, rng: &mut ChaCha8Rng) -> FlowField {
    let lim = (range as f32 * denom) as i32;
    FlowField::from_fn(w, h, |_, _| {
        (
            rng.gen_range(-lim..=lim) as f32 / denom,
            rng.gen_range(-lim..=lim) as f32 / denom,
        )
    })
}

/// Random flow that is piecewise constant over a few rectangles, giving
/// sharp motion boundaries.
pub fn blocky_flow(w: usize, h: usize, denom: f32, rng: &mut ChaCha8Rng) -> FlowField {
    let rects: Vec<(usize, usize, usize, usize, f32, f32)> = (0..rng.gen_range(1..5))
        .map(|_| {
            let x0 = rng.gen_range(0..w);
            let y0 = rng.gen_range(0..h);
            let x1 = rng.gen_range(x0 + 1..=w);
            let y1 = rng.gen_range(y0 + 1..=h);
            let u = rng.gen_range(-64i32..=64) as f32 / denom;
            let v = rng.gen_range(-64i32..=64) as f32 / denom;
            (x0, y0, x1, y1, u, v)
        })
        .collect();
    FlowField::from_fn(w, h, |x, y| {
        let mut uv = (0.0, 0.0);
        for &(x0, y0, x1, y1, u, v) in &rects {
            if x >= x0 && x < x1 && y >= y0 && y < y1 {
                uv = (u, v);
            }
        }
        uv
    })
}

pub fn random_summary(w: usize, h: usize, rng: &mut ChaCha8Rng) -> SummarizedBoundary {
    let field = |rng: &mut ChaCha8Rng| {
        let mut f = VectorField::zeros(w, h);
        let sparse = rng.gen_bool(0.3);
        for i in 0..w * h {
            if !sparse || rng.gen_bool(0.05) {
                f.x[i] = rng.gen_range(-10.0..10.0);
                f.y[i] = rng.gen_range(-10.0..10.0);
            }
        }
        f
    };
    let mu = field(rng);
    let mv = if rng.gen_bool(0.1) { VectorField::zeros(w, h) } else { field(rng) };
    SummarizedBoundary { mu, mv }
}
