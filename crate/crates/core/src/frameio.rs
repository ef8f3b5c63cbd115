//! Frame-sequence clips: decoding, deterministic sampling, and the
//! resize → crop → flip preprocessing shared by every frame of a clip.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator threaded through clip sampling and augmentation.
pub type ClipRng = ChaCha8Rng;

/// An 8-bit RGB image stored row-major as `[r, g, b]` triples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::contract(format!(
                "frame dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height * 3 {
            return Err(Error::contract(format!(
                "pixel buffer holds {} bytes, expected {}",
                pixels.len(),
                width * height * 3
            )));
        }
        Ok(Frame {
            width,
            height,
            pixels,
        })
    }

    /// A frame with every pixel set to `rgb`.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "frame dimensions must be positive");
        let pixels = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Frame {
            width,
            height,
            pixels,
        }
    }

    /// Builds a frame by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "frame dimensions must be positive");
        let mut pixels = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        Frame {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Iterates pixels in row-major order.
    pub fn rgb_iter(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.pixels.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Decodes a PNG or PPM file into 8-bit RGB.
    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Decode {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })?;
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        Frame::new(w as usize, h as usize, rgb.into_raw())
    }

    /// Encodes the frame; the format follows the file extension (`png` or `ppm`).
    pub fn save(&self, path: &Path) -> Result<()> {
        let encode_err = |e: image::ImageError| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Decode {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        };
        let is_ppm = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("ppm"));
        if !is_ppm {
            return image::save_buffer(
                path,
                &self.pixels,
                self.width as u32,
                self.height as u32,
                image::ExtendedColorType::Rgb8,
            )
            .map_err(encode_err);
        }
        // The generic path picks PAM for .ppm; force binary P6.
        use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
        use image::ImageEncoder;
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        PnmEncoder::new(std::io::BufWriter::new(file))
            .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary))
            .write_image(
                &self.pixels,
                self.width as u32,
                self.height as u32,
                image::ExtendedColorType::Rgb8,
            )
            .map_err(encode_err)
    }

    /// Bilinear resize with half-pixel center alignment and edge clamping.
    pub fn resize_bilinear(&self, new_height: usize, new_width: usize) -> Frame {
        assert!(new_width > 0 && new_height > 0, "target size must be positive");
        if new_width == self.width && new_height == self.height {
            return self.clone();
        }
        let xs = axis_taps(self.width, new_width);
        let ys = axis_taps(self.height, new_height);
        let mut out = Vec::with_capacity(new_width * new_height * 3);
        for &(y0, y1, fy) in &ys {
            for &(x0, x1, fx) in &xs {
                let p00 = self.pixel(x0, y0);
                let p01 = self.pixel(x1, y0);
                let p10 = self.pixel(x0, y1);
                let p11 = self.pixel(x1, y1);
                for c in 0..3 {
                    let top = p00[c] as f64 * (1.0 - fx) + p01[c] as f64 * fx;
                    let bottom = p10[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
                    let v = top * (1.0 - fy) + bottom * fy;
                    out.push(v.round().clamp(0.0, 255.0) as u8);
                }
            }
        }
        Frame {
            width: new_width,
            height: new_height,
            pixels: out,
        }
    }

    /// Copies the window with top-left corner `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<Frame> {
        if height == 0 || width == 0 || top + height > self.height || left + width > self.width {
            return Err(Error::contract(format!(
                "crop window {height}x{width}+{top}+{left} outside {}x{} frame",
                self.height, self.width
            )));
        }
        let mut out = Vec::with_capacity(width * height * 3);
        for y in top..top + height {
            let start = (y * self.width + left) * 3;
            out.extend_from_slice(&self.pixels[start..start + width * 3]);
        }
        Ok(Frame {
            width,
            height,
            pixels: out,
        })
    }

    /// Mirrors columns: column `c` moves to `width - 1 - c`.
    pub fn flipped_horizontal(&self) -> Frame {
        let mut out = Vec::with_capacity(self.pixels.len());
        for row in self.pixels.chunks_exact(self.width * 3) {
            for px in row.chunks_exact(3).rev() {
                out.extend_from_slice(px);
            }
        }
        Frame {
            width: self.width,
            height: self.height,
            pixels: out,
        }
    }
}

/// Source taps `(i0, i1, frac)` for each destination index of a resized axis.
pub(crate) fn axis_taps(src_len: usize, dst_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = src_len as f64 / dst_len as f64;
    (0..dst_len)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (src_len - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src_len - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SamplerMode {
    /// Clip `k` covers source frames `[k·len, (k+1)·len)`.
    NonOverlapping,
    /// The start offset is drawn from the clip's seeded generator.
    RandomStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CropMode {
    Random,
    Center,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SamplerConfig {
    pub mode: SamplerMode,
    pub clip_length: usize,
    /// `(height, width)`
    pub resize_to: (usize, usize),
    /// `(height, width)`
    pub crop_to: (usize, usize),
    pub crop_mode: CropMode,
    pub horizontal_flip_probability: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            mode: SamplerMode::NonOverlapping,
            clip_length: 16,
            resize_to: (128, 171),
            crop_to: (112, 112),
            crop_mode: CropMode::Random,
            horizontal_flip_probability: 0.5,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clip_length < 2 {
            return Err(Error::contract(format!(
                "clip length must be at least 2, got {}",
                self.clip_length
            )));
        }
        let (rh, rw) = self.resize_to;
        let (ch, cw) = self.crop_to;
        if rh == 0 || rw == 0 || ch == 0 || cw == 0 {
            return Err(Error::contract("resize and crop sizes must be positive"));
        }
        if ch > rh || cw > rw {
            return Err(Error::contract(format!(
                "crop {ch}x{cw} exceeds resize {rh}x{rw}"
            )));
        }
        if !(0.0..=1.0).contains(&self.horizontal_flip_probability) {
            return Err(Error::contract(format!(
                "flip probability {} outside [0, 1]",
                self.horizontal_flip_probability
            )));
        }
        Ok(())
    }
}

/// Resize, crop and flip parameters applied to every frame of a clip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TransformRecord {
    pub source_height: usize,
    pub source_width: usize,
    pub resize_height: usize,
    pub resize_width: usize,
    pub crop_top: usize,
    pub crop_left: usize,
    pub crop_height: usize,
    pub crop_width: usize,
    pub flipped: bool,
}

impl TransformRecord {
    pub fn identity(height: usize, width: usize) -> Self {
        TransformRecord {
            source_height: height,
            source_width: width,
            resize_height: height,
            resize_width: width,
            crop_top: 0,
            crop_left: 0,
            crop_height: height,
            crop_width: width,
            flipped: false,
        }
    }
}

/// An ordered stack of equally sized frames plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    frames: Vec<Frame>,
    source_id: String,
    frame_offset: usize,
    transform: TransformRecord,
}

impl Clip {
    pub fn new(
        frames: Vec<Frame>,
        source_id: impl Into<String>,
        frame_offset: usize,
        transform: TransformRecord,
    ) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::contract(format!(
                "a clip needs at least 2 frames, got {}",
                frames.len()
            )));
        }
        let (w, h) = (frames[0].width, frames[0].height);
        if let Some(i) = frames.iter().position(|f| f.width != w || f.height != h) {
            return Err(Error::contract(format!(
                "frame {i} is {}x{}, expected {w}x{h}",
                frames[i].width, frames[i].height
            )));
        }
        Ok(Clip {
            frames,
            source_id: source_id.into(),
            frame_offset,
            transform,
        })
    }

    /// A clip with an identity transform record.
    pub fn from_frames(frames: Vec<Frame>, source_id: impl Into<String>, frame_offset: usize) -> Result<Self> {
        let (h, w) = frames
            .first()
            .map(|f| (f.height, f.width))
            .unwrap_or((0, 0));
        Clip::new(frames, source_id, frame_offset, TransformRecord::identity(h, w))
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn frame_offset(&self) -> usize {
        self.frame_offset
    }

    pub fn transform(&self) -> &TransformRecord {
        &self.transform
    }

    /// `<sourceId>/<frameOffset>`
    pub fn clip_id(&self) -> String {
        format!("{}/{}", self.source_id, self.frame_offset)
    }

    /// Mirrors every frame and toggles the recorded flip.
    pub fn flipped_horizontal(&self) -> Clip {
        let mut transform = self.transform;
        transform.flipped = !transform.flipped;
        Clip {
            frames: self.frames.iter().map(Frame::flipped_horizontal).collect(),
            source_id: self.source_id.clone(),
            frame_offset: self.frame_offset,
            transform,
        }
    }
}

/// The generator for clip `index` of `source_id`; independent of the order
/// in which clips are visited.
pub fn clip_rng(seed: u64, source_id: &str, index: usize) -> ClipRng {
    // FNV-1a; stable across platforms and toolchains.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in source_id.bytes().chain((index as u64).to_le_bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(h);
    rng
}

/// Image files (`.png`, `.ppm`) directly inside `dir`, in lexicographic order.
pub fn list_frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file() {
            continue;
        }
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if matches!(ext.as_deref(), Some("png") | Some("ppm")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub(crate) fn source_id_of(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.to_string_lossy().into_owned())
}

/// Loads clip `index` of the frame directory `dir` and applies the sampler's
/// transform.
pub fn load_clip(dir: &Path, sampler: &SamplerConfig, index: usize) -> Result<Clip> {
    sampler.validate()?;
    let source_id = source_id_of(dir);
    let files = list_frame_files(dir)?;
    let len = sampler.clip_length;
    let mut rng = clip_rng(sampler.seed, &source_id, index);

    let start = match sampler.mode {
        SamplerMode::NonOverlapping => index * len,
        SamplerMode::RandomStart => {
            if files.len() < len {
                0
            } else {
                rng.gen_range(0..=files.len() - len)
            }
        }
    };
    if start + len > files.len() {
        return Err(Error::InsufficientFrames {
            source_id,
            start,
            required: len,
            available: files.len(),
        });
    }

    let frames = files[start..start + len]
        .iter()
        .map(|p| Frame::load(p))
        .collect::<Result<Vec<_>>>()?;
    let (w, h) = (frames[0].width, frames[0].height);
    if let Some(i) = frames.iter().position(|f| f.width != w || f.height != h) {
        return Err(Error::Decode {
            path: files[start + i].clone(),
            message: format!("frame is {}x{}, expected {w}x{h}", frames[i].width, frames[i].height),
        });
    }
    let clip = Clip::new(frames, source_id, start, TransformRecord::identity(h, w))?;
    apply_transform(&clip, sampler, &mut rng)
}

/// Bilinear resize to `resizeTo`, then one crop window and one flip decision
/// shared by all frames.
pub fn apply_transform(clip: &Clip, sampler: &SamplerConfig, rng: &mut ClipRng) -> Result<Clip> {
    let (rh, rw) = sampler.resize_to;
    let (ch, cw) = sampler.crop_to;
    if ch > rh || cw > rw {
        return Err(Error::contract(format!(
            "crop {ch}x{cw} exceeds resize {rh}x{rw}"
        )));
    }
    let (top, left) = match sampler.crop_mode {
        CropMode::Random => (rng.gen_range(0..=rh - ch), rng.gen_range(0..=rw - cw)),
        CropMode::Center => ((rh - ch) / 2, (rw - cw) / 2),
    };
    let flipped = rng.gen::<f64>() < sampler.horizontal_flip_probability;

    let frames = clip
        .frames
        .iter()
        .map(|f| {
            let cropped = f.resize_bilinear(rh, rw).crop(top, left, ch, cw)?;
            Ok(if flipped {
                cropped.flipped_horizontal()
            } else {
                cropped
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let record = TransformRecord {
        source_height: clip.transform.source_height,
        source_width: clip.transform.source_width,
        resize_height: rh,
        resize_width: rw,
        crop_top: top,
        crop_left: left,
        crop_height: ch,
        crop_width: cw,
        flipped,
    };
    Clip::new(frames, clip.source_id.clone(), clip.frame_offset, record)
}
