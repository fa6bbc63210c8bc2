use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Point, Square, SquareUnion};
use crate::rng::substream;
use crate::{Error, Result};

const QUAD_STREAM: u64 = 0x7175_6164;

/// The six unordered pairs of child quadrants.
const PAIRS: [(u32, u32); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Random dyadic set: each retained square keeps two of its four children.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadtreeSet {
    pub depth: usize,
    pub seed: u64,
    /// `kept[d]`: integer corners `(ix, iy)` of retained level-`d` squares of side `2^{−d}`.
    pub kept: Vec<Vec<(u32, u32)>>,
}

pub fn quadtree_sample(depth: usize, seed: u64) -> Result<QuadtreeSet> {
    if depth > 16 {
        return Err(Error::param("depth", format!("must be at most 16, got {depth}")));
    }
    let mut kept = vec![vec![(0u32, 0u32)]];
    for d in 0..depth {
        let level = &kept[d];
        let mut next = Vec::with_capacity(2 * level.len());
        for (i, &(ix, iy)) in level.iter().enumerate() {
            let mut rng = substream(seed, &[QUAD_STREAM, d as u64, i as u64]);
            let (a, b) = PAIRS[rng.random_range(0..PAIRS.len())];
            for c in [a, b] {
                next.push((2 * ix + (c & 1), 2 * iy + (c >> 1)));
            }
        }
        kept.push(next);
    }
    Ok(QuadtreeSet { depth, seed, kept })
}

impl QuadtreeSet {
    pub fn side(level: usize) -> f64 {
        (0.5f64).powi(level as i32)
    }

    pub fn squares(&self, level: usize) -> Vec<Square> {
        let s = Self::side(level);
        self.kept[level]
            .iter()
            .map(|&(ix, iy)| Square::new(ix as f64 * s, iy as f64 * s, s))
            .collect()
    }

    pub fn area(&self, level: usize) -> f64 {
        self.kept[level].len() as f64 * Self::side(level).powi(2)
    }

    pub fn to_union(&self, level: usize) -> SquareUnion {
        SquareUnion::new(self.squares(level))
    }

    /// Retained level-`level` squares at distance at most `r` from `c`.
    pub fn count_meeting_disc(&self, level: usize, c: Point, r: f64) -> usize {
        let s = Self::side(level);
        self.kept[level]
            .iter()
            .filter(|&&(ix, iy)| {
                let (x0, y0) = (ix as f64 * s, iy as f64 * s);
                let dx = (x0 - c.x).max(0.0).max(c.x - x0 - s);
                let dy = (y0 - c.y).max(0.0).max(c.y - y0 - s);
                dx * dx + dy * dy <= r * r
            })
            .count()
    }

    /// Ratio of the count at level `⌈log₂(1/r)⌉` to `r·2^level`; an
    /// Ahlfors-regularity proxy that should stay bounded above and below.
    pub fn ad_ratio(&self, c: Point, r: f64) -> f64 {
        let level = ((1.0 / r).log2().ceil().max(0.0) as usize).min(self.depth);
        self.count_meeting_disc(level, c, r) as f64 / (r * 2f64.powi(level as i32))
    }
}
