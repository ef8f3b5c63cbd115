//! Appearance statistical labels: temporal color diversity per block and
//! dominant colors.
//!
//! Diversity is the temporal IoU of per-frame, per-channel color histograms,
//! averaged over R, G and B. A low IoU means the block's colors change a lot
//! over the clip.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frameio::Clip;
use crate::motion::argmax;
use crate::partition::PartitionPattern;

pub const DEFAULT_BIN_COUNT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    R = 0,
    G = 1,
    B = 2,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::R, Channel::G, Channel::B];
}

/// Equal-width histogram of one channel over `[0, 255]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorHistogram {
    pub channel: Channel,
    pub bins: Vec<u32>,
}

impl ColorHistogram {
    pub fn new(channel: Channel, bin_count: usize) -> Result<Self> {
        check_bin_count(bin_count)?;
        Ok(ColorHistogram {
            channel,
            bins: vec![0; bin_count],
        })
    }

    pub fn from_pixels<'a>(
        channel: Channel,
        bin_count: usize,
        pixels: impl IntoIterator<Item = &'a [u8; 3]>,
    ) -> Result<Self> {
        let mut h = ColorHistogram::new(channel, bin_count)?;
        for p in pixels {
            h.add(p[channel as usize]);
        }
        Ok(h)
    }

    #[inline]
    pub fn add(&mut self, value: u8) {
        let n = self.bins.len();
        self.bins[value as usize * n / 256] += 1;
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().map(|&c| c as u64).sum()
    }
}

fn check_bin_count(bin_count: usize) -> Result<()> {
    if bin_count == 0 || bin_count > 256 {
        return Err(Error::contract(format!(
            "histogram bin count must be in 1..=256, got {bin_count}"
        )));
    }
    Ok(())
}

/// Mean over channels of `Σ_b min_i V_i[b] / Σ_b max_i V_i[b]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct DiversityScore {
    pub iou: f64,
}

/// Temporal IoU of `frames`, each the pixel set of the same block in one
/// frame.
pub fn temporal_iou(frames: &[Vec<[u8; 3]>], bin_count: usize) -> Result<DiversityScore> {
    check_bin_count(bin_count)?;
    if frames.is_empty() || frames.iter().any(|f| f.is_empty()) {
        return Err(Error::contract("temporal IoU needs non-empty pixel sets"));
    }
    let mut hists = Vec::with_capacity(frames.len());
    for f in frames {
        let per_channel = Channel::ALL
            .iter()
            .map(|&c| ColorHistogram::from_pixels(c, bin_count, f))
            .collect::<Result<Vec<_>>>()?;
        hists.push(per_channel);
    }
    let per_frame: Vec<[&[u32]; 3]> = hists
        .iter()
        .map(|h| [h[0].bins.as_slice(), h[1].bins.as_slice(), h[2].bins.as_slice()])
        .collect();
    Ok(DiversityScore {
        iou: iou_of_histograms(&per_frame, bin_count),
    })
}

/// `hists[i][c]` is the histogram of channel `c` in frame `i`.
fn iou_of_histograms(hists: &[[&[u32]; 3]], bin_count: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..3 {
        let (mut inter, mut union) = (0u64, 0u64);
        for b in 0..bin_count {
            let mut lo = u32::MAX;
            let mut hi = 0;
            for h in hists {
                lo = lo.min(h[c][b]);
                hi = hi.max(h[c][b]);
            }
            inter += lo as u64;
            union += hi as u64;
        }
        total += inter as f64 / union as f64;
    }
    total / 3.0
}

fn check_clip(clip: &Clip, pattern: &PartitionPattern) -> Result<()> {
    if clip.width() != pattern.width() || clip.height() != pattern.height() {
        return Err(Error::contract(format!(
            "clip is {}x{}, pattern {} built for {}x{}",
            clip.width(),
            clip.height(),
            pattern.id().number(),
            pattern.width(),
            pattern.height()
        )));
    }
    Ok(())
}

/// Temporal IoU of every block; entry `b - 1` is block `b`.
pub fn block_ious(clip: &Clip, pattern: &PartitionPattern, bin_count: usize) -> Result<Vec<f64>> {
    check_bin_count(bin_count)?;
    check_clip(clip, pattern)?;
    let blocks = pattern.block_count() as usize;
    // counts[frame][block][channel][bin]
    let stride_c = bin_count;
    let stride_b = 3 * stride_c;
    let stride_f = blocks * stride_b;
    let mut counts = vec![0u32; clip.len() * stride_f];
    for (fi, frame) in clip.frames().iter().enumerate() {
        let base = fi * stride_f;
        for (p, &blk) in frame.rgb_iter().zip(pattern.index_map()) {
            let bb = base + (blk as usize - 1) * stride_b;
            for c in 0..3 {
                counts[bb + c * stride_c + p[c] as usize * bin_count / 256] += 1;
            }
        }
    }
    let mut ious = Vec::with_capacity(blocks);
    for blk in 0..blocks {
        let per_frame: Vec<[&[u32]; 3]> = (0..clip.len())
            .map(|fi| {
                let bb = fi * stride_f + blk * stride_b;
                [
                    &counts[bb..bb + stride_c],
                    &counts[bb + stride_c..bb + 2 * stride_c],
                    &counts[bb + 2 * stride_c..bb + 3 * stride_c],
                ]
            })
            .collect();
        ious.push(iou_of_histograms(&per_frame, bin_count));
    }
    Ok(ious)
}

/// `(p_l, p_s)`: blocks with the smallest and the largest IoU.
pub fn diversity_labels(clip: &Clip, pattern: &PartitionPattern, bin_count: usize) -> Result<(u8, u8)> {
    let ious = block_ious(clip, pattern, bin_count)?;
    let p_l = argmax(ious.iter().map(|&x| -x)) as u8 + 1;
    let p_s = argmax(ious.iter().copied()) as u8 + 1;
    Ok((p_l, p_s))
}

/// RGB octant 1..=8 with each channel split at 128:
/// `1 + 4·[R ≥ 128] + 2·[G ≥ 128] + [B ≥ 128]`.
#[inline]
pub fn color_octant(p: [u8; 3]) -> u8 {
    1 + 4 * (p[0] >> 7) + 2 * (p[1] >> 7) + (p[2] >> 7)
}

/// Most populated octant, lowest on ties.
pub fn dominant_color(pixels: impl IntoIterator<Item = [u8; 3]>) -> Result<u8> {
    let mut counts = [0u64; 8];
    let mut any = false;
    for p in pixels {
        counts[color_octant(p) as usize - 1] += 1;
        any = true;
    }
    if !any {
        return Err(Error::contract("dominant color of an empty pixel set"));
    }
    Ok(argmax(counts.iter().map(|&c| c as f64)) as u8 + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LocalAppearance {
    pub p_l: u8,
    pub c_l: u8,
    pub p_s: u8,
    pub c_s: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AppearanceLabels {
    /// Patterns 1, 2, 3 in order.
    pub per_pattern: [LocalAppearance; 3],
    pub c: u8,
}

/// All 13 appearance labels. Block colors are taken over the block's pixels
/// in every frame of the clip.
pub fn appearance_labels(
    clip: &Clip,
    patterns: &[PartitionPattern; 3],
    bin_count: usize,
) -> Result<AppearanceLabels> {
    let mut per_pattern = [LocalAppearance {
        p_l: 1,
        c_l: 1,
        p_s: 1,
        c_s: 1,
    }; 3];
    let mut clip_counts = [0u64; 8];
    let octants: Vec<Vec<u8>> = clip
        .frames()
        .iter()
        .map(|f| f.rgb_iter().map(color_octant).collect())
        .collect();
    for oct in octants.iter().flatten() {
        clip_counts[*oct as usize - 1] += 1;
    }
    for (slot, pattern) in per_pattern.iter_mut().zip(patterns) {
        let (p_l, p_s) = diversity_labels(clip, pattern, bin_count)?;
        let mut counts = vec![[0u64; 8]; pattern.block_count() as usize];
        for frame in &octants {
            for (&o, &b) in frame.iter().zip(pattern.index_map()) {
                counts[b as usize - 1][o as usize - 1] += 1;
            }
        }
        let dominant = |b: u8| argmax(counts[b as usize - 1].iter().map(|&c| c as f64)) as u8 + 1;
        *slot = LocalAppearance {
            p_l,
            c_l: dominant(p_l),
            p_s,
            c_s: dominant(p_s),
        };
    }
    Ok(AppearanceLabels {
        per_pattern,
        c: argmax(clip_counts.iter().map(|&c| c as f64)) as u8 + 1,
    })
}
