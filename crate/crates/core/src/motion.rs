//! Motion boundaries and the motion statistical labels.
//!
//! A motion boundary is the spatial gradient of each flow component. Summing
//! the boundaries of all `N − 1` flows of a clip gives two vector fields,
//! `M_u` and `M_v`. For each partition pattern the block with the largest
//! mean boundary magnitude is the location label, and the orientation bin
//! with the largest magnitude-weighted vote inside that block is the
//! orientation label. The frame indices with the largest total boundary
//! magnitude form the two global labels.
//!
//! Orientations use eight half-open 45° bins counterclockwise from +x with
//! the y axis pointing up; bin 1 is `[0°, 45°)`. All ties resolve to the
//! lowest block, bin or frame index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::partition::{octant, PartitionPattern};

/// A 2-vector per pixel. `y` follows image rows (pointing down).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub width: usize,
    pub height: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VectorField {
    pub fn zeros(width: usize, height: usize) -> Self {
        VectorField {
            width,
            height,
            x: vec![0.0; width * height],
            y: vec![0.0; width * height],
        }
    }

    fn add_assign(&mut self, other: &VectorField) {
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a += b;
        }
        for (a, b) in self.y.iter_mut().zip(&other.y) {
            *a += b;
        }
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.x.iter().zip(&self.y).map(|(a, b)| a.hypot(*b)).collect()
    }
}

/// Spatial derivatives of one flow field: `m_u = (u_x, u_y)`, `m_v = (v_x, v_y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionBoundary {
    pub mu: VectorField,
    pub mv: VectorField,
}

impl MotionBoundary {
    pub fn width(&self) -> usize {
        self.mu.width
    }

    pub fn height(&self) -> usize {
        self.mu.height
    }
}

/// Element-wise sum of the boundaries of a clip.
#[derive(Debug, Clone, PartialEq)]
pub struct SummarizedBoundary {
    pub mu: VectorField,
    pub mv: VectorField,
}

impl SummarizedBoundary {
    pub fn width(&self) -> usize {
        self.mu.width
    }

    pub fn height(&self) -> usize {
        self.mu.height
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarMap {
    pub magnitude: Vec<f64>,
    /// 1..=8
    pub orientation_bin: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LocalMotion {
    pub p_u: u8,
    pub o_u: u8,
    pub p_v: u8,
    pub o_v: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MotionLabels {
    /// Patterns 1, 2, 3 in order.
    pub per_pattern: [LocalMotion; 3],
    pub i_u: u16,
    pub i_v: u16,
    /// `N − 1`; the class count of the global heads.
    pub flow_count: u16,
}

/// Derivative of one row/column sample: central in the interior, one-sided
/// at the two ends.
#[inline]
fn diff(prev: f64, here: f64, next: f64, at_start: bool, at_end: bool) -> f64 {
    match (at_start, at_end) {
        (true, true) => 0.0,
        (true, false) => next - here,
        (false, true) => here - prev,
        (false, false) => 0.5 * (next - prev),
    }
}

fn gradient(values: &[f32], w: usize, h: usize) -> VectorField {
    let mut gx = Vec::with_capacity(w * h);
    let mut gy = Vec::with_capacity(w * h);
    let at = |x: usize, y: usize| values[y * w + x] as f64;
    for y in 0..h {
        for x in 0..w {
            let here = at(x, y);
            let left = if x > 0 { at(x - 1, y) } else { here };
            let right = if x + 1 < w { at(x + 1, y) } else { here };
            let up = if y > 0 { at(x, y - 1) } else { here };
            let down = if y + 1 < h { at(x, y + 1) } else { here };
            gx.push(diff(left, here, right, x == 0, x + 1 == w));
            gy.push(diff(up, here, down, y == 0, y + 1 == h));
        }
    }
    VectorField {
        width: w,
        height: h,
        x: gx,
        y: gy,
    }
}

pub fn motion_boundary(flow: &FlowField) -> MotionBoundary {
    let (w, h) = (flow.width(), flow.height());
    MotionBoundary {
        mu: gradient(flow.u(), w, h),
        mv: gradient(flow.v(), w, h),
    }
}

pub fn summarize(boundaries: &[MotionBoundary]) -> Result<SummarizedBoundary> {
    let first = boundaries
        .first()
        .ok_or_else(|| Error::contract("cannot summarize an empty boundary list"))?;
    let (w, h) = (first.width(), first.height());
    let mut mu = VectorField::zeros(w, h);
    let mut mv = VectorField::zeros(w, h);
    for (i, b) in boundaries.iter().enumerate() {
        if b.width() != w || b.height() != h {
            return Err(Error::contract(format!(
                "boundary {i} is {}x{}, expected {w}x{h}",
                b.width(),
                b.height()
            )));
        }
        mu.add_assign(&b.mu);
        mv.add_assign(&b.mv);
    }
    Ok(SummarizedBoundary { mu, mv })
}

/// Orientation bin of a vector given in image coordinates (y down).
#[inline]
pub fn orientation_bin(x: f64, y_down: f64) -> u8 {
    octant(x, -y_down) + 1
}

pub fn to_polar(field: &VectorField) -> PolarMap {
    PolarMap {
        magnitude: field.magnitudes(),
        orientation_bin: field
            .x
            .iter()
            .zip(&field.y)
            .map(|(&x, &y)| orientation_bin(x, y))
            .collect(),
    }
}

fn check_dims(what: &str, w: usize, h: usize, pattern: &PartitionPattern) -> Result<()> {
    if w != pattern.width() || h != pattern.height() {
        return Err(Error::contract(format!(
            "{what} is {w}x{h}, pattern {} built for {}x{}",
            pattern.id().number(),
            pattern.width(),
            pattern.height()
        )));
    }
    Ok(())
}

/// Per-block magnitude sums; entry `b - 1` is block `b`.
pub(crate) fn block_sums(magnitude: &[f64], pattern: &PartitionPattern) -> Vec<f64> {
    let mut sums = vec![0.0; pattern.block_count() as usize];
    for (&m, &b) in magnitude.iter().zip(pattern.index_map()) {
        sums[b as usize - 1] += m;
    }
    sums
}

/// First index of the maximum; `NaN`-free input assumed.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Block with the largest mean magnitude (1-based).
pub fn largest_block(magnitude: &[f64], pattern: &PartitionPattern) -> u8 {
    let sums = block_sums(magnitude, pattern);
    let means = sums
        .iter()
        .zip(pattern.block_sizes())
        .map(|(s, &n)| s / n as f64);
    argmax(means) as u8 + 1
}

/// Orientation bin with the largest magnitude sum inside `block`.
pub fn dominant_orientation(polar: &PolarMap, pattern: &PartitionPattern, block: u8) -> u8 {
    let mut hist = [0.0f64; 8];
    for ((&m, &bin), &b) in polar
        .magnitude
        .iter()
        .zip(&polar.orientation_bin)
        .zip(pattern.index_map())
    {
        if b == block {
            hist[bin as usize - 1] += m;
        }
    }
    argmax(hist) as u8 + 1
}

/// Location and orientation labels of `M_u` and `M_v` for one pattern.
pub fn local_motion_labels(summary: &SummarizedBoundary, pattern: &PartitionPattern) -> Result<LocalMotion> {
    check_dims("summary", summary.width(), summary.height(), pattern)?;
    let pu = to_polar(&summary.mu);
    let pv = to_polar(&summary.mv);
    let p_u = largest_block(&pu.magnitude, pattern);
    let p_v = largest_block(&pv.magnitude, pattern);
    Ok(LocalMotion {
        p_u,
        o_u: dominant_orientation(&pu, pattern, p_u),
        p_v,
        o_v: dominant_orientation(&pv, pattern, p_v),
    })
}

/// 1-based indices of the flows with the largest total boundary magnitude
/// for `u` and `v`.
pub fn global_motion_labels(flows: &[FlowField]) -> Result<(u16, u16)> {
    if flows.is_empty() {
        return Err(Error::contract("global motion labels need at least one flow"));
    }
    let (mut su, mut sv) = (Vec::with_capacity(flows.len()), Vec::with_capacity(flows.len()));
    for f in flows {
        let b = motion_boundary(f);
        su.push(b.mu.magnitudes().iter().sum::<f64>());
        sv.push(b.mv.magnitudes().iter().sum::<f64>());
    }
    Ok((argmax(su) as u16 + 1, argmax(sv) as u16 + 1))
}

/// All 14 motion labels of a clip, plus the summarized boundary they were
/// derived from.
pub fn motion_labels(
    flows: &[FlowField],
    patterns: &[PartitionPattern; 3],
) -> Result<(MotionLabels, SummarizedBoundary)> {
    let boundaries: Vec<MotionBoundary> = flows.iter().map(motion_boundary).collect();
    let summary = summarize(&boundaries)?;
    let per_pattern = [
        local_motion_labels(&summary, &patterns[0])?,
        local_motion_labels(&summary, &patterns[1])?,
        local_motion_labels(&summary, &patterns[2])?,
    ];
    let (i_u, i_v) = global_motion_labels(flows)?;
    Ok((
        MotionLabels {
            per_pattern,
            i_u,
            i_v,
            flow_count: flows.len() as u16,
        },
        summary,
    ))
}
