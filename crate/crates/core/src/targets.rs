//! Training-target encodings of a clip's 27 labels and reference losses.
//!
//! Canonical label order:
//!
//! ```text
//! motion (14):     for pattern 1, 2, 3: p_u, o_u, p_v, o_v;   then I_u, I_v
//! appearance (13): for pattern 1, 2, 3: p_l, c_l, p_s, c_s;   then C
//! ```
//!
//! `reg1D` emits these 27 integers as reals. `reg2D` replaces every pattern 1
//! and pattern 3 location with its 2D coordinate pair (35 values: 18 motion,
//! 17 appearance). `classification` emits 0-based class indices with one
//! head per label.

use serde::{Deserialize, Serialize};

use crate::appearance::AppearanceLabels;
use crate::error::{Error, Result};
use crate::motion::MotionLabels;
use crate::partition::{check_block, from_2d_coord, to_2d_coord, PatternId};

pub const MOTION_LABELS: usize = 14;
pub const APPEARANCE_LABELS: usize = 13;
pub const LABEL_COUNT: usize = MOTION_LABELS + APPEARANCE_LABELS;
pub const REG2D_MOTION: usize = 18;
pub const REG2D_APPEARANCE: usize = 17;

const PROB_FLOOR: f64 = 1e-12;
const PROB_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LabelSet {
    pub motion: MotionLabels,
    pub appearance: AppearanceLabels,
}

/// What a label slot holds; decides its class count and 2D expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Location(PatternId),
    Orientation,
    FrameIndex,
    Color,
}

fn slot_layout() -> [Slot; LABEL_COUNT] {
    let mut out = [Slot::Color; LABEL_COUNT];
    let mut i = 0;
    for kind in [Slot::Orientation, Slot::Color] {
        for id in PatternId::ALL {
            for s in [Slot::Location(id), kind, Slot::Location(id), kind] {
                out[i] = s;
                i += 1;
            }
        }
        if kind == Slot::Orientation {
            out[i] = Slot::FrameIndex;
            out[i + 1] = Slot::FrameIndex;
            i += 2;
        } else {
            out[i] = Slot::Color;
            i += 1;
        }
    }
    debug_assert_eq!(i, LABEL_COUNT);
    out
}

fn class_count(slot: Slot, flow_count: u16) -> u16 {
    match slot {
        Slot::Location(id) => id.block_count() as u16,
        Slot::Orientation | Slot::Color => 8,
        Slot::FrameIndex => flow_count,
    }
}

impl LabelSet {
    /// The 27 labels in canonical order.
    pub fn scalars(&self) -> [u16; LABEL_COUNT] {
        let mut out = [0u16; LABEL_COUNT];
        let mut i = 0;
        for lm in &self.motion.per_pattern {
            for x in [lm.p_u, lm.o_u, lm.p_v, lm.o_v] {
                out[i] = x as u16;
                i += 1;
            }
        }
        out[i] = self.motion.i_u;
        out[i + 1] = self.motion.i_v;
        i += 2;
        for la in &self.appearance.per_pattern {
            for x in [la.p_l, la.c_l, la.p_s, la.c_s] {
                out[i] = x as u16;
                i += 1;
            }
        }
        out[i] = self.appearance.c as u16;
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.motion.flow_count == 0 {
            return Err(Error::contract("label set built from zero flows"));
        }
        for (k, (&v, slot)) in self.scalars().iter().zip(slot_layout()).enumerate() {
            let max = class_count(slot, self.motion.flow_count);
            if v == 0 || v > max {
                return Err(Error::contract(format!(
                    "label {k} = {v} outside 1..={max}"
                )));
            }
        }
        Ok(())
    }
}

/// Class count of each of the 27 classification heads.
pub fn head_sizes(flow_count: u16) -> Vec<u16> {
    slot_layout()
        .iter()
        .map(|&s| class_count(s, flow_count))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetFormat {
    #[serde(rename = "reg1D")]
    Reg1D,
    #[serde(rename = "reg2D")]
    Reg2D,
    #[serde(rename = "classification")]
    Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format")]
pub enum TargetVector {
    #[serde(rename = "reg1D")]
    Reg1D { values: Vec<f64> },
    #[serde(rename = "reg2D")]
    Reg2D { values: Vec<f64> },
    #[serde(rename = "classification", rename_all = "camelCase")]
    Classification { classes: Vec<u16>, head_sizes: Vec<u16> },
}

impl TargetVector {
    pub fn format(&self) -> TargetFormat {
        match self {
            TargetVector::Reg1D { .. } => TargetFormat::Reg1D,
            TargetVector::Reg2D { .. } => TargetFormat::Reg2D,
            TargetVector::Classification { .. } => TargetFormat::Classification,
        }
    }

    /// Regression values, or `None` for classification targets.
    pub fn values(&self) -> Option<&[f64]> {
        match self {
            TargetVector::Reg1D { values } | TargetVector::Reg2D { values } => Some(values),
            TargetVector::Classification { .. } => None,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TargetVector::Reg1D { values } | TargetVector::Reg2D { values } => values.len(),
            TargetVector::Classification { classes, .. } => classes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn encode(labels: &LabelSet, format: TargetFormat) -> Result<TargetVector> {
    labels.validate()?;
    let scalars = labels.scalars();
    Ok(match format {
        TargetFormat::Reg1D => TargetVector::Reg1D {
            values: scalars.iter().map(|&v| v as f64).collect(),
        },
        TargetFormat::Reg2D => {
            let mut values = Vec::with_capacity(REG2D_MOTION + REG2D_APPEARANCE);
            for (&v, slot) in scalars.iter().zip(slot_layout()) {
                match slot {
                    Slot::Location(id) if id.has_2d() => {
                        let (a, b) = to_2d_coord(id, v as u8)?;
                        values.push(a as f64);
                        values.push(b as f64);
                    }
                    _ => values.push(v as f64),
                }
            }
            TargetVector::Reg2D { values }
        }
        TargetFormat::Classification => TargetVector::Classification {
            classes: scalars.iter().map(|&v| v - 1).collect(),
            head_sizes: head_sizes(labels.motion.flow_count),
        },
    })
}

/// All three encodings of one label set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Targets {
    pub reg1d: TargetVector,
    pub reg2d: TargetVector,
    pub classification: TargetVector,
}

pub fn encode_all(labels: &LabelSet) -> Result<Targets> {
    Ok(Targets {
        reg1d: encode(labels, TargetFormat::Reg1D)?,
        reg2d: encode(labels, TargetFormat::Reg2D)?,
        classification: encode(labels, TargetFormat::Classification)?,
    })
}

/// Maps a `reg2D` vector back to the 27 `reg1D` values.
pub fn collapse_reg2d(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() != REG2D_MOTION + REG2D_APPEARANCE {
        return Err(Error::contract(format!(
            "reg2D vector has {} values, expected {}",
            values.len(),
            REG2D_MOTION + REG2D_APPEARANCE
        )));
    }
    let as_label = |x: f64| -> Result<u8> {
        if x.fract() != 0.0 || !(1.0..=255.0).contains(&x) {
            return Err(Error::contract(format!("{x} is not a label coordinate")));
        }
        Ok(x as u8)
    };
    let mut out = Vec::with_capacity(LABEL_COUNT);
    let mut it = values.iter().copied();
    for slot in slot_layout() {
        match slot {
            Slot::Location(id) if id.has_2d() => {
                let a = as_label(it.next().unwrap())?;
                let b = as_label(it.next().unwrap())?;
                out.push(from_2d_coord(id, (a, b))? as f64);
            }
            Slot::Location(id) => {
                let v = it.next().unwrap();
                check_block(id, as_label(v)?)?;
                out.push(v);
            }
            _ => out.push(it.next().unwrap()),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LossConfig {
    pub lambda_m: f64,
    pub lambda_a: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            lambda_m: 1.0,
            lambda_a: 0.1,
        }
    }
}

impl LossConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lambda_m >= 0.0 && self.lambda_a >= 0.0) {
            return Err(Error::contract("loss weights must be non-negative"));
        }
        Ok(())
    }
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `λ_m·‖ŷ_m − y_m‖₂ + λ_a·‖ŷ_a − y_a‖₂`
pub fn regression_loss(pred: &TargetVector, target: &TargetVector, cfg: &LossConfig) -> Result<f64> {
    cfg.validate()?;
    let split = match (pred.format(), target.format()) {
        (TargetFormat::Reg1D, TargetFormat::Reg1D) => MOTION_LABELS,
        (TargetFormat::Reg2D, TargetFormat::Reg2D) => REG2D_MOTION,
        (p, t) => {
            return Err(Error::contract(format!(
                "regression loss needs matching regression formats, got {p:?} and {t:?}"
            )))
        }
    };
    let (p, t) = (pred.values().unwrap(), target.values().unwrap());
    let expected = if split == MOTION_LABELS {
        LABEL_COUNT
    } else {
        REG2D_MOTION + REG2D_APPEARANCE
    };
    if p.len() != expected || t.len() != expected {
        return Err(Error::contract(format!(
            "regression vectors have {} and {} values, expected {expected}",
            p.len(),
            t.len()
        )));
    }
    Ok(cfg.lambda_m * l2(&p[..split], &t[..split]) + cfg.lambda_a * l2(&p[split..], &t[split..]))
}

/// `λ_m·Σ_motion −log p(target) + λ_a·Σ_appearance −log p(target)`, with
/// probabilities clamped below at 1e-12.
pub fn classification_loss(pred_probs: &[Vec<f64>], target: &TargetVector, cfg: &LossConfig) -> Result<f64> {
    cfg.validate()?;
    let TargetVector::Classification { classes, head_sizes } = target else {
        return Err(Error::contract("classification loss needs a classification target"));
    };
    if pred_probs.len() != LABEL_COUNT || classes.len() != LABEL_COUNT || head_sizes.len() != LABEL_COUNT {
        return Err(Error::contract(format!(
            "expected {LABEL_COUNT} heads, got {} predictions for {} targets",
            pred_probs.len(),
            classes.len()
        )));
    }
    let (mut motion, mut appearance) = (0.0, 0.0);
    for (head, ((probs, &class), &size)) in pred_probs.iter().zip(classes).zip(head_sizes).enumerate() {
        if probs.len() != size as usize {
            return Err(Error::contract(format!(
                "head {head}: {} probabilities for {size} classes",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::contract(format!("head {head}: negative or non-finite probability")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::contract(format!("head {head}: probabilities sum to {sum}")));
        }
        if class >= size {
            return Err(Error::contract(format!("head {head}: class {class} >= {size}")));
        }
        let nll = -probs[class as usize].max(PROB_FLOOR).ln();
        if head < MOTION_LABELS {
            motion += nll;
        } else {
            appearance += nll;
        }
    }
    Ok(cfg.lambda_m * motion + cfg.lambda_a * appearance)
}
