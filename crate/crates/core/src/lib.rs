//! Spatio-temporal statistical supervision for self-supervised video
//! representation learning.
//!
//! A clip of `N` RGB frames is turned into 27 integer labels:
//!
//! * 14 motion labels: for each of three spatial partitioning patterns, the
//!   block with the largest summarized motion boundary and its dominant
//!   orientation (for both flow components), plus the two frame indices with
//!   the largest motion-boundary magnitude;
//! * 13 appearance labels: for each pattern, the blocks with the largest and
//!   smallest temporal color diversity with their dominant colors, plus the
//!   dominant color of the whole clip.
//!
//! Clips are also scored for curriculum ordering and written, together with
//! regression and classification encodings of their labels, into a
//! line-delimited manifest.
//!
//! Module map:
//!
//! | module        | role                                                    |
//! |---------------|---------------------------------------------------------|
//! | [`frameio`]   | frame decoding, clip sampling, resize/crop/flip         |
//! | [`flow`]      | coarse-to-fine Horn–Schunck flow, `.flo` I/O            |
//! | [`partition`] | the three block layouts                                 |
//! | [`motion`]    | motion boundaries and motion labels                     |
//! | [`appearance`]| temporal color IoU and dominant colors                  |
//! | [`curriculum`]| difficulty score and two-stage pacing                   |
//! | [`targets`]   | 1D/2D/classification encodings and reference losses     |
//! | [`pipeline`]  | dataset walk, manifest, diagnostics                     |

pub mod appearance;
pub mod curriculum;
pub mod error;
pub mod flow;
pub mod frameio;
pub mod motion;
pub mod partition;
pub mod pipeline;
pub mod targets;

pub use error::{Error, Result};
