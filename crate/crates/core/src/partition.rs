//! The three spatial partitioning patterns.
//!
//! * Pattern 1: 4×4 grid, blocks numbered row-major 1 (top-left) to 16.
//! * Pattern 2: 4 nested rectangular rings with boundaries at 1/8, 2/8 and
//!   3/8 of the width and height from each edge; 1 is the outermost ring,
//!   4 the innermost rectangle.
//! * Pattern 3: 8 sectors cut by the two center lines and the two
//!   corner-to-corner diagonals. Sector 1 lies just right of the upper
//!   vertical half-line; numbering proceeds counterclockwise. A pixel whose
//!   center lies on a dividing line belongs to the sector that starts at that
//!   line going counterclockwise.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternId {
    Grid = 1,
    Rings = 2,
    Sectors = 3,
}

impl PatternId {
    pub const ALL: [PatternId; 3] = [PatternId::Grid, PatternId::Rings, PatternId::Sectors];

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(PatternId::Grid),
            2 => Ok(PatternId::Rings),
            3 => Ok(PatternId::Sectors),
            other => Err(Error::contract(format!("unknown partition pattern {other}"))),
        }
    }

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn block_count(self) -> u8 {
        match self {
            PatternId::Grid => 16,
            PatternId::Rings => 4,
            PatternId::Sectors => 8,
        }
    }

    /// Whether location labels of this pattern have a 2D encoding.
    pub fn has_2d(self) -> bool {
        !matches!(self, PatternId::Rings)
    }
}

/// Per-pixel block index map for one pattern at one frame size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPattern {
    id: PatternId,
    width: usize,
    height: usize,
    index_map: Vec<u8>,
    block_sizes: Vec<usize>,
}

impl PartitionPattern {
    pub fn build(id: PatternId, width: usize, height: usize) -> Result<Self> {
        if width < 8 || height < 8 {
            return Err(Error::contract(format!(
                "partition needs at least 8x8 pixels, got {width}x{height}"
            )));
        }
        let mut index_map = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                index_map.push(match id {
                    PatternId::Grid => grid_block(x, y, width, height),
                    PatternId::Rings => ring_block(x, y, width, height),
                    PatternId::Sectors => sector_block(x, y, width, height),
                });
            }
        }
        let mut block_sizes = vec![0usize; id.block_count() as usize];
        for &b in &index_map {
            block_sizes[b as usize - 1] += 1;
        }
        debug_assert!(block_sizes.iter().all(|&n| n > 0));
        Ok(PartitionPattern {
            id,
            width,
            height,
            index_map,
            block_sizes,
        })
    }

    /// All three patterns for one frame size, in pattern order.
    pub fn build_all(width: usize, height: usize) -> Result<[PartitionPattern; 3]> {
        Ok([
            PartitionPattern::build(PatternId::Grid, width, height)?,
            PartitionPattern::build(PatternId::Rings, width, height)?,
            PartitionPattern::build(PatternId::Sectors, width, height)?,
        ])
    }

    pub fn id(&self) -> PatternId {
        self.id
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn block_count(&self) -> u8 {
        self.id.block_count()
    }

    /// 1-based block index of each pixel, row-major.
    pub fn index_map(&self) -> &[u8] {
        &self.index_map
    }

    #[inline]
    pub fn block_at(&self, x: usize, y: usize) -> u8 {
        self.index_map[y * self.width + x]
    }

    /// Pixel count of each block; entry `b - 1` is block `b`.
    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn to_2d(&self, block: u8) -> Result<(u8, u8)> {
        to_2d_coord(self.id, block)
    }
}

fn band(pos: usize, len: usize, bands: usize) -> usize {
    pos * bands / len
}

fn grid_block(x: usize, y: usize, w: usize, h: usize) -> u8 {
    (band(y, h, 4) * 4 + band(x, w, 4) + 1) as u8
}

fn ring_block(x: usize, y: usize, w: usize, h: usize) -> u8 {
    let lx = band(x.min(w - 1 - x), w, 8);
    let ly = band(y.min(h - 1 - y), h, 8);
    (lx.min(ly).min(3) + 1) as u8
}

fn sector_block(x: usize, y: usize, w: usize, h: usize) -> u8 {
    // Doubled pixel-center offsets from the frame center, y pointing up,
    // scaled so the corner diagonals become |a| = |b|.
    let a = (2 * x as i64 + 1 - w as i64) * h as i64;
    let b = (h as i64 - 2 * y as i64 - 1) * w as i64;
    match octant(a, b) {
        0 => 8,
        k => k,
    }
}

/// Half-open 45° sector `[k·45°, (k+1)·45°)` of the vector `(x, y)`,
/// counterclockwise from +x with y up. The zero vector maps to 0.
pub(crate) fn octant<T>(x: T, y: T) -> u8
where
    T: PartialOrd + std::ops::Neg<Output = T> + Copy + Default,
{
    let zero = T::default();
    if y >= zero {
        if x > zero {
            if y < x {
                0
            } else {
                1
            }
        } else if x <= zero && y > zero {
            if y > -x {
                2
            } else {
                3
            }
        } else {
            // y == 0 and x <= 0: the zero vector or the 180° ray
            if x < zero {
                4
            } else {
                0
            }
        }
    } else if x < zero {
        if y > x {
            4
        } else {
            5
        }
    } else if -y > x {
        6
    } else {
        7
    }
}

/// 2D encoding of a location label.
///
/// Pattern 1 maps block `b` to `(⌈b/4⌉, ((b−1) mod 4) + 1)`. Pattern 3 maps
/// sector `b` to `(⌈b/2⌉, ((b−1) mod 2) + 1)`: the counterclockwise pair of
/// sectors it belongs to, and which half of that pair. Pattern 2 has none.
pub fn to_2d_coord(id: PatternId, block: u8) -> Result<(u8, u8)> {
    check_block(id, block)?;
    match id {
        PatternId::Grid => Ok(((block - 1) / 4 + 1, (block - 1) % 4 + 1)),
        PatternId::Sectors => Ok(((block - 1) / 2 + 1, (block - 1) % 2 + 1)),
        PatternId::Rings => Err(Error::contract("pattern 2 has no 2D encoding")),
    }
}

/// Inverse of [`to_2d_coord`].
pub fn from_2d_coord(id: PatternId, coord: (u8, u8)) -> Result<u8> {
    let (r, c) = coord;
    let block = match id {
        PatternId::Grid if (1..=4).contains(&r) && (1..=4).contains(&c) => (r - 1) * 4 + c,
        PatternId::Sectors if (1..=4).contains(&r) && (1..=2).contains(&c) => (r - 1) * 2 + c,
        PatternId::Rings => return Err(Error::contract("pattern 2 has no 2D encoding")),
        _ => {
            return Err(Error::contract(format!(
                "coordinate ({r}, {c}) invalid for pattern {}",
                id.number()
            )))
        }
    };
    Ok(block)
}

pub(crate) fn check_block(id: PatternId, block: u8) -> Result<()> {
    if block == 0 || block > id.block_count() {
        return Err(Error::contract(format!(
            "block {block} invalid for pattern {} (1..={})",
            id.number(),
            id.block_count()
        )));
    }
    Ok(())
}
