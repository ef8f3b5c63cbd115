//! Dense optical flow.
//!
//! The estimator is a coarse-to-fine Horn–Schunck solver: a blurred image
//! pyramid on ITU-R 601 luma, bilinear warping of the second frame by the
//! current estimate, and Jacobi iterations of the linearized
//! brightness-constancy + smoothness energy at every warp. All borders use
//! replicate-edge padding.
//!
//! Precomputed fields can be exchanged in the Middlebury `.flo` format.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frameio::{axis_taps, Clip, Frame, TransformRecord};

/// Per-pixel displacement from one frame to the next, in pixels/frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f32>,
    v: Vec<f32>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, u: Vec<f32>, v: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::contract(format!(
                "flow dimensions must be positive, got {width}x{height}"
            )));
        }
        if u.len() != width * height || v.len() != width * height {
            return Err(Error::contract(format!(
                "flow components hold {}/{} values, expected {}",
                u.len(),
                v.len(),
                width * height
            )));
        }
        Ok(FlowField {
            width,
            height,
            u,
            v,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        FlowField {
            width,
            height,
            u: vec![0.0; width * height],
            v: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> (f32, f32)) -> Self {
        let mut u = Vec::with_capacity(width * height);
        let mut v = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let (a, b) = f(x, y);
                u.push(a);
                v.push(b);
            }
        }
        FlowField {
            width,
            height,
            u,
            v,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f32, f32) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    /// Adds a spatially uniform displacement to every pixel.
    pub fn offset(&self, du: f32, dv: f32) -> FlowField {
        FlowField {
            width: self.width,
            height: self.height,
            u: self.u.iter().map(|x| x + du).collect(),
            v: self.v.iter().map(|x| x + dv).collect(),
        }
    }

    pub fn scaled(&self, s: f32) -> FlowField {
        FlowField {
            width: self.width,
            height: self.height,
            u: self.u.iter().map(|x| x * s).collect(),
            v: self.v.iter().map(|x| x * s).collect(),
        }
    }

    /// The flow of the horizontally mirrored frame pair: columns mirror and
    /// the horizontal component changes sign.
    pub fn flipped_horizontal(&self) -> FlowField {
        FlowField::from_fn(self.width, self.height, |x, y| {
            let (u, v) = self.at(self.width - 1 - x, y);
            (-u, v)
        })
    }

    /// Maps a source-resolution flow through a clip's resize, crop and flip.
    pub fn transformed(&self, record: &TransformRecord) -> Result<FlowField> {
        if self.width != record.source_width || self.height != record.source_height {
            return Err(Error::contract(format!(
                "flow is {}x{}, source frames are {}x{}",
                self.width, self.height, record.source_width, record.source_height
            )));
        }
        let sx = record.resize_width as f32 / self.width as f32;
        let sy = record.resize_height as f32 / self.height as f32;
        let u = Plane::from_vec(self.width, self.height, self.u.clone())
            .resample(record.resize_width, record.resize_height);
        let v = Plane::from_vec(self.width, self.height, self.v.clone())
            .resample(record.resize_width, record.resize_height);
        if record.crop_top + record.crop_height > record.resize_height
            || record.crop_left + record.crop_width > record.resize_width
        {
            return Err(Error::contract("crop window outside resized flow"));
        }
        let resized = FlowField::from_fn(record.crop_width, record.crop_height, |x, y| {
            let i = (y + record.crop_top) * record.resize_width + x + record.crop_left;
            (u.data[i] * sx, v.data[i] * sy)
        });
        Ok(if record.flipped {
            resized.flipped_horizontal()
        } else {
            resized
        })
    }

    /// Median of `|(u, v)|` over all pixels.
    pub fn median_magnitude(&self) -> f32 {
        let mut m: Vec<f32> = self
            .u
            .iter()
            .zip(&self.v)
            .map(|(a, b)| a.hypot(*b))
            .collect();
        median(&mut m)
    }
}

pub(crate) fn median(values: &mut [f32]) -> f32 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f32::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FlowConfig {
    pub pyramid_scale: f64,
    pub pyramid_levels: usize,
    pub smoothness_weight: f64,
    pub iterations_per_level: usize,
    pub warps_per_level: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            pyramid_scale: 0.5,
            pyramid_levels: 4,
            smoothness_weight: 15.0,
            iterations_per_level: 50,
            warps_per_level: 3,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pyramid_scale > 0.0 && self.pyramid_scale < 1.0) {
            return Err(Error::contract(format!(
                "pyramid scale {} outside (0, 1)",
                self.pyramid_scale
            )));
        }
        if self.pyramid_levels == 0 || self.iterations_per_level == 0 || self.warps_per_level == 0 {
            return Err(Error::contract("flow level, iteration and warp counts must be >= 1"));
        }
        if !(self.smoothness_weight > 0.0 && self.smoothness_weight.is_finite()) {
            return Err(Error::contract("smoothness weight must be positive"));
        }
        Ok(())
    }
}

/// Smallest side length a pyramid level may have.
const MIN_LEVEL_SIDE: usize = 4;
/// Smallest accepted input frame side.
const MIN_FRAME_SIDE: usize = 8;

/// Single-channel f32 image with replicate-edge access.
#[derive(Debug, Clone)]
struct Plane {
    w: usize,
    h: usize,
    data: Vec<f32>,
}

impl Plane {
    fn from_vec(w: usize, h: usize, data: Vec<f32>) -> Self {
        Plane { w, h, data }
    }

    fn luma(frame: &Frame) -> Self {
        let data = frame
            .rgb_iter()
            .map(|[r, g, b]| 0.299 * r as f32 + 0.587 * g as f32 + 0.114 * b as f32)
            .collect();
        Plane {
            w: frame.width(),
            h: frame.height(),
            data,
        }
    }

    #[inline]
    fn get(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.w as isize - 1) as usize;
        let y = y.clamp(0, self.h as isize - 1) as usize;
        self.data[y * self.w + x]
    }

    /// Separable [1 4 6 4 1]/16 blur.
    fn blur(&self) -> Plane {
        const K: [f32; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
        let mut tmp = vec![0.0; self.data.len()];
        for y in 0..self.h as isize {
            for x in 0..self.w as isize {
                let mut acc = 0.0;
                for (k, &wk) in K.iter().enumerate() {
                    acc += wk * self.get(x + k as isize - 2, y);
                }
                tmp[y as usize * self.w + x as usize] = acc;
            }
        }
        let horiz = Plane::from_vec(self.w, self.h, tmp);
        let mut out = vec![0.0; self.data.len()];
        for y in 0..self.h as isize {
            for x in 0..self.w as isize {
                let mut acc = 0.0;
                for (k, &wk) in K.iter().enumerate() {
                    acc += wk * horiz.get(x, y + k as isize - 2);
                }
                out[y as usize * self.w + x as usize] = acc;
            }
        }
        Plane::from_vec(self.w, self.h, out)
    }

    fn resample(&self, w: usize, h: usize) -> Plane {
        if w == self.w && h == self.h {
            return self.clone();
        }
        let xs = axis_taps(self.w, w);
        let ys = axis_taps(self.h, h);
        let mut data = Vec::with_capacity(w * h);
        for &(y0, y1, fy) in &ys {
            let fy = fy as f32;
            for &(x0, x1, fx) in &xs {
                let fx = fx as f32;
                let top = self.data[y0 * self.w + x0] * (1.0 - fx) + self.data[y0 * self.w + x1] * fx;
                let bot = self.data[y1 * self.w + x0] * (1.0 - fx) + self.data[y1 * self.w + x1] * fx;
                data.push(top * (1.0 - fy) + bot * fy);
            }
        }
        Plane::from_vec(w, h, data)
    }

    #[inline]
    fn sample(&self, x: f32, y: f32) -> f32 {
        let x = x.clamp(0.0, (self.w - 1) as f32);
        let y = y.clamp(0.0, (self.h - 1) as f32);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.w - 1);
        let y1 = (y0 + 1).min(self.h - 1);
        let fx = x - x0 as f32;
        let fy = y - y0 as f32;
        let top = self.data[y0 * self.w + x0] * (1.0 - fx) + self.data[y0 * self.w + x1] * fx;
        let bot = self.data[y1 * self.w + x0] * (1.0 - fx) + self.data[y1 * self.w + x1] * fx;
        top * (1.0 - fy) + bot * fy
    }

    /// `out(x, y) = self(x + u, y + v)`
    fn warp(&self, u: &[f32], v: &[f32]) -> Plane {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.h {
            for x in 0..self.w {
                let i = y * self.w + x;
                data.push(self.sample(x as f32 + u[i], y as f32 + v[i]));
            }
        }
        Plane::from_vec(self.w, self.h, data)
    }

    fn dx(&self, x: usize, y: usize) -> f32 {
        0.5 * (self.get(x as isize + 1, y as isize) - self.get(x as isize - 1, y as isize))
    }

    fn dy(&self, x: usize, y: usize) -> f32 {
        0.5 * (self.get(x as isize, y as isize + 1) - self.get(x as isize, y as isize - 1))
    }
}

fn level_sizes(width: usize, height: usize, cfg: &FlowConfig) -> Result<Vec<(usize, usize)>> {
    let mut sizes = Vec::with_capacity(cfg.pyramid_levels);
    for level in 0..cfg.pyramid_levels {
        let f = cfg.pyramid_scale.powi(level as i32);
        let w = (width as f64 * f).round() as usize;
        let h = (height as f64 * f).round() as usize;
        if w < MIN_LEVEL_SIDE || h < MIN_LEVEL_SIDE {
            return Err(Error::PyramidUnderflow {
                width,
                height,
                levels: cfg.pyramid_levels,
                scale: cfg.pyramid_scale,
            });
        }
        sizes.push((w, h));
    }
    Ok(sizes)
}

fn build_pyramid(base: Plane, sizes: &[(usize, usize)]) -> Vec<Plane> {
    let mut levels = Vec::with_capacity(sizes.len());
    levels.push(base);
    for &(w, h) in &sizes[1..] {
        let next = levels.last().unwrap().blur().resample(w, h);
        levels.push(next);
    }
    levels
}

/// Jacobi smoothing average with the classic Horn–Schunck weights
/// (1/6 edge neighbours, 1/12 corners).
fn neighbour_mean(field: &[f32], w: usize, h: usize, out: &mut [f32]) {
    let at = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        field[y * w + x]
    };
    for y in 0..h as isize {
        for x in 0..w as isize {
            let edge = at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1);
            let corner = at(x - 1, y - 1) + at(x + 1, y - 1) + at(x - 1, y + 1) + at(x + 1, y + 1);
            out[y as usize * w + x as usize] = edge / 6.0 + corner / 12.0;
        }
    }
}

/// Estimates the flow mapping `frame_a` onto `frame_b`.
pub fn estimate_flow(frame_a: &Frame, frame_b: &Frame, cfg: &FlowConfig) -> Result<FlowField> {
    cfg.validate()?;
    if frame_a.width() != frame_b.width() || frame_a.height() != frame_b.height() {
        return Err(Error::contract(format!(
            "frame sizes differ: {}x{} vs {}x{}",
            frame_a.width(),
            frame_a.height(),
            frame_b.width(),
            frame_b.height()
        )));
    }
    let (width, height) = (frame_a.width(), frame_a.height());
    if width < MIN_FRAME_SIDE || height < MIN_FRAME_SIDE {
        return Err(Error::contract(format!(
            "frames must be at least {MIN_FRAME_SIDE}x{MIN_FRAME_SIDE}, got {width}x{height}"
        )));
    }
    let sizes = level_sizes(width, height, cfg)?;
    let pyr_a = build_pyramid(Plane::luma(frame_a), &sizes);
    let pyr_b = build_pyramid(Plane::luma(frame_b), &sizes);
    let alpha2 = (cfg.smoothness_weight * cfg.smoothness_weight) as f32;

    let (cw, ch) = *sizes.last().unwrap();
    let mut u = vec![0.0f32; cw * ch];
    let mut v = vec![0.0f32; cw * ch];
    let mut prev = (cw, ch);

    for level in (0..sizes.len()).rev() {
        let (w, h) = sizes[level];
        if (w, h) != prev {
            let sx = w as f32 / prev.0 as f32;
            let sy = h as f32 / prev.1 as f32;
            u = Plane::from_vec(prev.0, prev.1, u).resample(w, h).data;
            v = Plane::from_vec(prev.0, prev.1, v).resample(w, h).data;
            u.iter_mut().for_each(|x| *x *= sx);
            v.iter_mut().for_each(|x| *x *= sy);
            prev = (w, h);
        }
        let a = &pyr_a[level];
        let b = &pyr_b[level];
        let n = w * h;
        let mut ix = vec![0.0f32; n];
        let mut iy = vec![0.0f32; n];
        let mut it = vec![0.0f32; n];
        let mut ubar = vec![0.0f32; n];
        let mut vbar = vec![0.0f32; n];

        for _ in 0..cfg.warps_per_level {
            let bw = b.warp(&u, &v);
            for y in 0..h {
                for x in 0..w {
                    let i = y * w + x;
                    ix[i] = 0.5 * (a.dx(x, y) + bw.dx(x, y));
                    iy[i] = 0.5 * (a.dy(x, y) + bw.dy(x, y));
                    it[i] = bw.data[i] - a.data[i];
                }
            }
            let u0 = u.clone();
            let v0 = v.clone();
            for _ in 0..cfg.iterations_per_level {
                neighbour_mean(&u, w, h, &mut ubar);
                neighbour_mean(&v, w, h, &mut vbar);
                for i in 0..n {
                    let residual = ix[i] * (ubar[i] - u0[i]) + iy[i] * (vbar[i] - v0[i]) + it[i];
                    let t = residual / (alpha2 + ix[i] * ix[i] + iy[i] * iy[i]);
                    u[i] = ubar[i] - ix[i] * t;
                    v[i] = vbar[i] - iy[i] * t;
                }
            }
        }
    }

    for x in u.iter_mut().chain(v.iter_mut()) {
        if !x.is_finite() {
            *x = 0.0;
        }
    }
    FlowField::new(width, height, u, v)
}

/// Flow between every pair of consecutive frames; element `i` maps frame
/// `i` onto frame `i + 1`.
pub fn clip_flows(clip: &Clip, cfg: &FlowConfig) -> Result<Vec<FlowField>> {
    clip.frames()
        .windows(2)
        .enumerate()
        .map(|(i, pair)| {
            estimate_flow(&pair[0], &pair[1], cfg).map_err(|e| Error::FramePair {
                index: i,
                source: Box::new(e),
            })
        })
        .collect()
}

const FLO_MAGIC: &[u8; 4] = b"PIEH";

/// Serializes to Middlebury `.flo`: magic, LE i32 width and height, then
/// row-major interleaved LE f32 `(u, v)`.
pub fn encode_flo(field: &FlowField) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + field.u.len() * 8);
    out.extend_from_slice(FLO_MAGIC);
    out.extend_from_slice(&(field.width as i32).to_le_bytes());
    out.extend_from_slice(&(field.height as i32).to_le_bytes());
    for (u, v) in field.u.iter().zip(&field.v) {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_flo(bytes: &[u8]) -> Result<FlowField> {
    let fmt = |offset: usize, message: String| Error::FloFormat { offset, message };
    if bytes.len() < 4 {
        return Err(fmt(bytes.len(), "truncated magic".into()));
    }
    if &bytes[..4] != FLO_MAGIC {
        return Err(fmt(0, format!("bad magic {:?}", String::from_utf8_lossy(&bytes[..4]))));
    }
    if bytes.len() < 12 {
        return Err(fmt(bytes.len(), "truncated header".into()));
    }
    let width = i32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let height = i32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if width <= 0 {
        return Err(fmt(4, format!("invalid width {width}")));
    }
    if height <= 0 {
        return Err(fmt(8, format!("invalid height {height}")));
    }
    let n = width as usize * height as usize;
    let expected = 12 + n * 8;
    if bytes.len() < expected {
        return Err(fmt(
            bytes.len(),
            format!("truncated payload: expected {expected} bytes"),
        ));
    }
    if bytes.len() > expected {
        return Err(fmt(expected, format!("{} trailing bytes", bytes.len() - expected)));
    }
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for px in bytes[12..].chunks_exact(8) {
        u.push(f32::from_le_bytes(px[..4].try_into().unwrap()));
        v.push(f32::from_le_bytes(px[4..].try_into().unwrap()));
    }
    FlowField::new(width as usize, height as usize, u, v)
}

pub fn read_flo(path: &Path) -> Result<FlowField> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_flo(&bytes)
}

pub fn write_flo(field: &FlowField, path: &Path) -> Result<()> {
    fs::write(path, encode_flo(field)).map_err(|e| Error::io(path, e))
}
