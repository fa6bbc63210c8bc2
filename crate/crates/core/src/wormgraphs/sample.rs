use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{q_int, root, to_f64, child, Generation, MkSequence, PileChooser, SeededPiles, Q};
use crate::geometry::Point;
use crate::{Error, Result};

/// A depth-`K` approximation of one random graph: every generation plus the
/// pile choices that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaSample {
    pub seq: MkSequence,
    pub gens: Vec<Generation>,
    /// `choices[k][s]`: pile chosen for string `s` of generation `k`.
    pub choices: Vec<Vec<u64>>,
    pub seed: u64,
}

/// Builds generations `0..=max_depth` with an arbitrary pile source.
pub fn build_omega(max_depth: usize, seed: u64, chooser: &mut dyn PileChooser) -> Result<OmegaSample> {
    let seq = MkSequence::with_depth(max_depth)?;
    let mut gens = vec![root()];
    let mut choices = Vec::with_capacity(max_depth);
    for _ in 0..max_depth {
        let (next, picked) = child(gens.last().expect("root present"), &seq, chooser)?;
        gens.push(next);
        choices.push(picked);
    }
    Ok(OmegaSample { seq, gens, choices, seed })
}

/// Uniform independent pile choices derived from `seed`.
pub fn sample_omega(max_depth: usize, seed: u64) -> Result<OmegaSample> {
    build_omega(max_depth, seed, &mut SeededPiles::new(seed))
}

impl OmegaSample {
    pub fn depth(&self) -> usize {
        self.gens.len() - 1
    }

    pub fn generation(&self, k: usize) -> Result<&Generation> {
        self.gens.get(k).ok_or(Error::DepthExhausted { gen: k, max_depth: self.depth() })
    }

    /// Fiber midpoint over `x` in the deepest generation, exactly.
    /// On a shared vertical side the left cell is used.
    pub fn eval_f_exact(&self, x: &Q) -> Result<Q> {
        if self.depth() == 0 {
            return Err(Error::param("depth", "eval_f needs depth at least 1"));
        }
        if x.is_negative() || *x > q_int(1) {
            return Err(Error::OutOfDomain(format!("x = {x} outside [0,1]")));
        }
        let g = &self.gens[self.depth()];
        let scaled = x * q_int(g.len() as i64);
        let j = scaled.ceil().to_integer();
        let j = usize::try_from(j).unwrap_or(0).saturating_sub(1).min(g.len() - 1);
        Ok(g.cells[j].fiber_mid(x))
    }

    pub fn eval_f(&self, x: &Q) -> Result<f64> {
        self.eval_f_exact(x).map(|v| to_f64(&v))
    }

    /// Fiber midpoints at `x = j/2^k`, `j = 0..=2^k`. The resulting polyline
    /// is the graph of the piecewise-affine depth-`k` approximant.
    pub fn graph_polyline(&self, k: usize) -> Result<Vec<Point>> {
        let g = self.generation(k)?;
        let mut pts: Vec<Point> = g
            .cells
            .iter()
            .map(|c| Point::new(to_f64(&c.x0), to_f64(&c.fiber_mid(&c.x0))))
            .collect();
        let last = g.cells.last().expect("generations are nonempty");
        pts.push(Point::new(1.0, to_f64(&last.fiber_mid(&last.x1()))));
        Ok(pts)
    }

    /// `max |a_j^k|` over every cell of every generation, exactly.
    pub fn slope_sup_exact(&self) -> Q {
        self.gens
            .iter()
            .flat_map(|g| g.cells.iter())
            .map(|c| c.slope.abs())
            .fold(Q::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn slope_sup(&self) -> f64 {
        to_f64(&self.slope_sup_exact())
    }

    /// First generation whose cells differ from `other`'s.
    pub fn first_difference(&self, other: &OmegaSample) -> Option<usize> {
        self.gens.iter().zip(&other.gens).position(|(a, b)| a.cells != b.cells)
    }

    /// Every invariant of every generation plus exact nesting between
    /// consecutive generations.
    pub fn check(&self) -> std::result::Result<(), String> {
        self.seq.check()?;
        for (k, g) in self.gens.iter().enumerate() {
            g.check(&self.seq).map_err(|e| format!("generation {k}: {e}"))?;
        }
        for (k, w) in self.gens.windows(2).enumerate() {
            for (j, c) in w[1].cells.iter().enumerate() {
                if !w[0].cells[j / 2].contains(c) {
                    return Err(format!("cell {j} of generation {} escapes its parent", k + 1));
                }
            }
        }
        Ok(())
    }
}
