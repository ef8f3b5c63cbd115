//! Curriculum ordering: a per-clip difficulty score and the single-step
//! pacing split.
//!
//! The score is the larger of the two ratios "magnitude sum of the
//! largest-motion grid block / magnitude sum of the whole field", one for
//! `M_u` and one for `M_v`. High scores mean the motion is concentrated and
//! the clip is easy.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{block_sums, largest_block, SummarizedBoundary, VectorField};
use crate::partition::PartitionPattern;

/// Difficulty score `f`, stored at single precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CurriculumScore {
    pub f: f32,
}

fn concentration(field: &VectorField, pattern: &PartitionPattern) -> f64 {
    let mag = field.magnitudes();
    let sums = block_sums(&mag, pattern);
    let total: f64 = sums.iter().sum();
    if total == 0.0 {
        return 1.0 / pattern.block_count() as f64;
    }
    let block = largest_block(&mag, pattern);
    sums[block as usize - 1] / total
}

/// Scores a clip from its summarized boundary. A component with zero total
/// magnitude contributes `1 / blockCount`.
pub fn score(summary: &SummarizedBoundary, pattern: &PartitionPattern) -> Result<CurriculumScore> {
    if summary.width() != pattern.width() || summary.height() != pattern.height() {
        return Err(Error::contract(format!(
            "summary is {}x{}, pattern built for {}x{}",
            summary.width(),
            summary.height(),
            pattern.width(),
            pattern.height()
        )));
    }
    let ru = concentration(&summary.mu, pattern);
    let rv = concentration(&summary.mv, pattern);
    Ok(CurriculumScore {
        f: ru.max(rv) as f32,
    })
}

/// Two-stage schedule: `S1` is trained alone until iteration `t`, after
/// which `S1 ∪ S2` is used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PacingPlan {
    pub stage1: Vec<String>,
    pub stage2: Vec<String>,
    pub switch_iteration: u64,
}

impl PacingPlan {
    /// `g(i) = S1 + H(i − t)·S2`, with `H(0) = 1`.
    pub fn active(&self, iteration: u64) -> impl Iterator<Item = &str> {
        let late = iteration >= self.switch_iteration;
        self.stage1
            .iter()
            .chain(self.stage2.iter().filter(move |_| late))
            .map(String::as_str)
    }
}

/// Sorts clips easy to hard (score descending, then clip id) and puts the
/// first `⌈n/2⌉` into stage 1.
pub fn build_plan(scores: &BTreeMap<String, CurriculumScore>, switch_iteration: u64) -> PacingPlan {
    let mut order: Vec<(&String, f32)> = scores.iter().map(|(k, s)| (k, s.f)).collect();
    order.sort_by(|a, b| match b.1.total_cmp(&a.1) {
        Ordering::Equal => a.0.cmp(b.0),
        o => o,
    });
    let half = order.len().div_ceil(2);
    let mut ids = order.into_iter().map(|(k, _)| k.clone());
    let stage1 = ids.by_ref().take(half).collect();
    let stage2 = ids.collect();
    PacingPlan {
        stage1,
        stage2,
        switch_iteration,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::PatternId;

    fn grid() -> PartitionPattern {
        PartitionPattern::build(PatternId::Grid, 16, 16).unwrap()
    }

    fn summary(mu: VectorField, mv: VectorField) -> SummarizedBoundary {
        SummarizedBoundary { mu, mv }
    }

    #[test]
    fn concentrated_motion_scores_one() {
        let mut mu = VectorField::zeros(16, 16);
        for y in 4..8 {
            for x in 8..12 {
                mu.x[y * 16 + x] = 2.5;
            }
        }
        let s = score(&summary(mu, VectorField::zeros(16, 16)), &grid()).unwrap();
        assert_eq!(s.f, 1.0);
    }

    #[test]
    fn uniform_motion_scores_one_sixteenth() {
        let mut mu = VectorField::zeros(16, 16);
        mu.y.iter_mut().for_each(|v| *v = 0.7);
        let s = score(&summary(mu.clone(), mu), &grid()).unwrap();
        assert_eq!(s.f, 0.0625);
    }

    #[test]
    fn static_clip_scores_one_sixteenth() {
        let s = score(&summary(VectorField::zeros(16, 16), VectorField::zeros(16, 16)), &grid()).unwrap();
        assert_eq!(s.f, 0.0625);
    }

    #[test]
    fn max_of_components() {
        let mut mu = VectorField::zeros(16, 16);
        mu.x.iter_mut().for_each(|v| *v = 1.0);
        let mut mv = VectorField::zeros(16, 16);
        mv.x[0] = 1.0;
        mv.x[20] = 1.0;
        mv.x[255] = 2.0;
        let s = score(&summary(mu, mv), &grid()).unwrap();
        assert_eq!(s.f, 0.5);
    }

    fn scores(pairs: &[(&str, f32)]) -> BTreeMap<String, CurriculumScore> {
        pairs
            .iter()
            .map(|&(k, f)| (k.to_string(), CurriculumScore { f }))
            .collect()
    }

    #[test]
    fn plan_sorts_and_halves() {
        let plan = build_plan(&scores(&[("a", 0.9), ("b", 0.3), ("c", 0.6)]), 100);
        assert_eq!(plan.stage1, vec!["a", "c"]);
        assert_eq!(plan.stage2, vec!["b"]);
        assert_eq!(plan.switch_iteration, 100);
        assert_eq!(plan.active(99).collect::<Vec<_>>(), vec!["a", "c"]);
        assert_eq!(plan.active(100).collect::<Vec<_>>(), vec!["a", "c", "b"]);
    }

    #[test]
    fn plan_ties_use_clip_id() {
        let plan = build_plan(&scores(&[("d", 0.5), ("b", 0.5), ("a", 0.5), ("c", 0.5)]), 1);
        assert_eq!(plan.stage1, vec!["a", "b"]);
        assert_eq!(plan.stage2, vec!["c", "d"]);
    }

    #[test]
    fn single_clip_plan() {
        let plan = build_plan(&scores(&[("only", 0.2)]), 5);
        assert_eq!(plan.stage1, vec!["only"]);
        assert!(plan.stage2.is_empty());
    }
}
