use std::ops::Range;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{q_frac, q_int, q_pow2_inv, ratio_serde, to_f64, MkSequence, Q};
use crate::geometry::{ConvexPolygon, Point};
use crate::rng::substream;
use crate::svg::SvgDoc;
use crate::{Error, Result};

/// Exponent governing how many exceptional cells a generation carries
/// (about `2^{λk}`) and how long strings are (about `2^{(1−λ)k}`).
pub const LAMBDA: f64 = 0.5;

const PILE_STREAM: u64 = 0x7069_6c65;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellFlag {
    Normal,
    Exceptional,
}

/// A cell: vertical left and right sides, bottom edge `y0 + slope·(x − x0)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parallelogram {
    pub gen: usize,
    /// 1-based position within the generation.
    pub index: usize,
    #[serde(with = "ratio_serde")]
    pub x0: Q,
    #[serde(with = "ratio_serde")]
    pub width: Q,
    #[serde(with = "ratio_serde")]
    pub y0: Q,
    #[serde(with = "ratio_serde")]
    pub slope: Q,
    #[serde(with = "ratio_serde")]
    pub height: Q,
    pub flag: CellFlag,
}

impl Parallelogram {
    pub fn x1(&self) -> Q {
        &self.x0 + &self.width
    }

    pub fn bottom_at(&self, x: &Q) -> Q {
        &self.y0 + &self.slope * (x - &self.x0)
    }

    /// Bottom of the right side.
    pub fn right_y0(&self) -> Q {
        &self.y0 + &self.slope * &self.width
    }

    pub fn area(&self) -> Q {
        &self.width * &self.height
    }

    /// Midpoint of the vertical fiber over `x`.
    pub fn fiber_mid(&self, x: &Q) -> Q {
        self.bottom_at(x) + &self.height / q_int(2)
    }

    /// Exact containment. Both cells have vertical sides and straight
    /// top/bottom edges, so comparing at the two ends of `other` suffices.
    pub fn contains(&self, other: &Parallelogram) -> bool {
        if other.x0 < self.x0 || other.x1() > self.x1() {
            return false;
        }
        [other.x0.clone(), other.x1()].iter().all(|x| {
            let lo = self.bottom_at(x);
            let olo = other.bottom_at(x);
            olo >= lo && &olo + &other.height <= lo + &self.height
        })
    }

    /// Corners in counter-clockwise order starting bottom-left.
    pub fn vertices(&self) -> [Point; 4] {
        let x0 = to_f64(&self.x0);
        let x1 = to_f64(&self.x1());
        let b0 = to_f64(&self.y0);
        let b1 = to_f64(&self.right_y0());
        let h = to_f64(&self.height);
        [
            Point::new(x0, b0),
            Point::new(x1, b1),
            Point::new(x1, b1 + h),
            Point::new(x0, b0 + h),
        ]
    }

    pub fn polygon(&self) -> ConvexPolygon {
        ConvexPolygon::new(self.vertices().to_vec())
    }

    /// Pile `p` (1-based) of height `h`, counted from the bottom.
    fn pile(&self, p: u64, h: &Q) -> Parallelogram {
        Parallelogram {
            y0: &self.y0 + h * q_int(p as i64 - 1),
            height: h.clone(),
            ..self.clone()
        }
    }

    fn bisect(&self) -> [Parallelogram; 2] {
        let half = &self.width / q_int(2);
        let gen = self.gen + 1;
        let left = Parallelogram {
            gen,
            index: 2 * self.index - 1,
            width: half.clone(),
            ..self.clone()
        };
        let right = Parallelogram {
            gen,
            index: 2 * self.index,
            x0: &self.x0 + &half,
            y0: &self.y0 + &self.slope * &half,
            width: half,
            ..self.clone()
        };
        [left, right]
    }
}

/// Placement of strings and exceptional cells within one generation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    /// Target string length `max(1, round(2^{(1−λ)k}))`.
    pub target: usize,
    /// Common length of all strings but the last.
    pub string_len: usize,
    pub strings: Vec<Range<usize>>,
    pub exceptional: Vec<usize>,
    /// `string_len − (length of the last string)`.
    pub deficit: i64,
}

/// Deterministic layout of generation `k`: equal strings separated by single
/// exceptional cells, the final string absorbing the remainder. Lengths are
/// chosen to minimise the worst deviation from the target; that deviation is
/// at most 2 for even `k` but can reach a few percent of the target for odd `k`,
/// where no equal-length split of `2^k` fits.
pub fn layout(k: usize) -> Layout {
    let cells = 1usize << k;
    let target = ((2f64).powf((1.0 - LAMBDA) * k as f64).round() as usize).max(1);
    let dev = |a: usize| a.abs_diff(target);
    // (worst deviation, |R − L|, L, q) for q strings of length L then one of length R.
    let mut best: Option<(usize, usize, usize, usize)> = None;
    for len in (target / 2).max(1)..=2 * target {
        let q_mid = (cells - target) / (len + 1) + 1;
        for q in [1, q_mid.saturating_sub(1), q_mid, q_mid + 1] {
            if q == 0 || (q - 1) * (len + 1) >= cells {
                continue;
            }
            let last = cells - (q - 1) * (len + 1);
            let key = (dev(len).max(dev(last)), last.abs_diff(len), len, q);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
    }
    let (_, _, len, q) = best.expect("at least one string always fits");
    let mut strings = Vec::with_capacity(q);
    let mut exceptional = Vec::with_capacity(q - 1);
    let mut start = 0;
    for _ in 0..q - 1 {
        strings.push(start..start + len);
        exceptional.push(start + len);
        start += len + 1;
    }
    strings.push(start..cells);
    Layout {
        target,
        string_len: len,
        deficit: len as i64 - (cells - start) as i64,
        strings,
        exceptional,
    }
}

/// One generation of cells together with its string bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generation {
    pub gen: usize,
    pub cells: Vec<Parallelogram>,
    /// Maximal runs of normal cells, as 0-based half-open index ranges.
    pub strings: Vec<Range<usize>>,
    /// 0-based indices of exceptional cells.
    pub exceptional: Vec<usize>,
    /// How many cells the last string is short of the others.
    pub last_string_deficit: i64,
}

impl Generation {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_width(&self) -> f64 {
        (0.5f64).powi(self.gen as i32)
    }

    pub fn cell_height(&self) -> f64 {
        self.cells.first().map_or(0.0, |c| to_f64(&c.height))
    }

    pub fn total_area(&self) -> Q {
        self.cells.iter().fold(Q::zero(), |acc, c| acc + c.area())
    }

    pub fn polygons(&self) -> Vec<ConvexPolygon> {
        self.cells.iter().map(Parallelogram::polygon).collect()
    }

    /// Polygons of the cells in each string, string by string.
    pub fn string_polygons(&self) -> Vec<Vec<ConvexPolygon>> {
        self.strings
            .iter()
            .map(|r| self.cells[r.clone()].iter().map(Parallelogram::polygon).collect())
            .collect()
    }

    /// Index of the string holding cell `j`, if `j` is normal.
    pub fn string_of(&self, j: usize) -> Option<usize> {
        let s = self.strings.partition_point(|r| r.end <= j);
        self.strings.get(s).filter(|r| r.contains(&j)).map(|_| s)
    }

    /// Checks every structural invariant exactly.
    pub fn check(&self, seq: &MkSequence) -> std::result::Result<(), String> {
        let k = self.gen;
        let n_k = *seq.n.get(k).ok_or("generation deeper than sequence")?;
        if self.cells.len() != 1 << k {
            return Err(format!("expected {} cells, got {}", 1usize << k, self.cells.len()));
        }
        let width = q_pow2_inv(k);
        let height = q_frac(1, n_k);
        let third = q_frac(1, 3);
        let (zero, one) = (Q::zero(), Q::one());
        for (j, c) in self.cells.iter().enumerate() {
            if c.gen != k || c.index != j + 1 {
                return Err(format!("cell {j} carries wrong labels"));
            }
            if c.width != width || c.height != height {
                return Err(format!("cell {j} has wrong dimensions"));
            }
            if c.slope.abs() >= third {
                return Err(format!("cell {j} slope {} not below 1/3", c.slope));
            }
            let top = |y: Q| y + &c.height;
            if c.x0 < zero
                || c.x1() > one
                || c.y0 < zero
                || c.right_y0() < zero
                || top(c.y0.clone()) > one
                || top(c.right_y0()) > one
            {
                return Err(format!("cell {j} leaves the unit square"));
            }
            if let Some(next) = self.cells.get(j + 1) {
                if next.x0 != c.x1() || next.y0 != c.right_y0() {
                    return Err(format!("cells {j} and {} do not share a side", j + 1));
                }
            }
            let expected = if self.exceptional.binary_search(&j).is_ok() {
                CellFlag::Exceptional
            } else {
                CellFlag::Normal
            };
            if c.flag != expected {
                return Err(format!("cell {j} flag disagrees with the exceptional list"));
            }
        }
        if self.cells.first().map(|c| c.x0 != zero).unwrap_or(true)
            || self.cells.last().map(|c| c.x1() != one).unwrap_or(true)
        {
            return Err("cells do not span [0,1]".into());
        }
        if self.cells[0].flag != CellFlag::Normal || self.cells[self.len() - 1].flag != CellFlag::Normal {
            return Err("boundary cell is exceptional".into());
        }
        // Strings must be exactly the maximal normal runs.
        let mut runs = Vec::new();
        let mut start = None;
        for (j, c) in self.cells.iter().enumerate() {
            match (c.flag, start) {
                (CellFlag::Normal, None) => start = Some(j),
                (CellFlag::Exceptional, Some(s)) => {
                    runs.push(s..j);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push(s..self.len());
        }
        if runs != self.strings {
            return Err("strings are not the maximal normal runs".into());
        }
        if self.total_area() != &height * &width * q_int(self.len() as i64) {
            return Err("total area mismatch".into());
        }
        if k >= 4 {
            let lo = 2f64.powf(LAMBDA * k as f64 - 2.0);
            let hi = 2f64.powf(LAMBDA * k as f64 + 2.0);
            let e = self.exceptional.len() as f64;
            if e < lo || e > hi {
                return Err(format!("{e} exceptional cells outside [{lo}, {hi}]"));
            }
            let lo = 2f64.powf((1.0 - LAMBDA) * k as f64 - 2.0);
            let hi = 2f64.powf((1.0 - LAMBDA) * k as f64 + 2.0);
            if let Some(r) = self.strings.iter().find(|r| (r.len() as f64) < lo || r.len() as f64 > hi) {
                return Err(format!("string of length {} outside [{lo}, {hi}]", r.len()));
            }
        }
        Ok(())
    }

    /// Renders the cells; exceptional cells get a contrasting fill.
    pub fn to_svg(&self, size: f64) -> String {
        let pad = 0.02 * size;
        let scale = size - 2.0 * pad;
        let mut doc = SvgDoc::new(size, size);
        doc.rect(pad, pad, scale, scale, "none", "#444444", 1.0);
        for c in &self.cells {
            let pts: Vec<(f64, f64)> = c
                .vertices()
                .iter()
                .map(|p| (pad + p.x * scale, pad + (1.0 - p.y) * scale))
                .collect();
            let fill = match c.flag {
                CellFlag::Normal => "#4682b4",
                CellFlag::Exceptional => "#d2473a",
            };
            doc.polygon(&pts, fill, fill, 0.6);
        }
        doc.finish()
    }
}

/// The single cell `[0,1]²`.
pub fn root() -> Generation {
    Generation {
        gen: 0,
        cells: vec![Parallelogram {
            gen: 0,
            index: 1,
            x0: Q::zero(),
            width: Q::one(),
            y0: Q::zero(),
            slope: Q::zero(),
            height: Q::one(),
            flag: CellFlag::Normal,
        }],
        #[allow(clippy::single_range_in_vec_init)]
        strings: vec![0..1],
        exceptional: Vec::new(),
        last_string_deficit: 0,
    }
}

/// Source of pile indices, one per string per generation.
pub trait PileChooser {
    /// Returns a pile index in `1..=piles` for string `string` of generation `gen`.
    fn choose(&mut self, gen: usize, string: usize, piles: u64) -> Result<u64>;
}

/// Uniform choices from a substream keyed by `(seed, gen, string)`.
#[derive(Clone, Copy, Debug)]
pub struct SeededPiles {
    pub seed: u64,
}

impl SeededPiles {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

impl PileChooser for SeededPiles {
    fn choose(&mut self, gen: usize, string: usize, piles: u64) -> Result<u64> {
        let mut rng = substream(self.seed, &[PILE_STREAM, gen as u64, string as u64]);
        Ok(rng.random_range(1..=piles))
    }
}

/// Always the same pile, clamped to the available range.
#[derive(Clone, Copy, Debug)]
pub struct ConstantPiles(pub u64);

impl PileChooser for ConstantPiles {
    fn choose(&mut self, _: usize, _: usize, piles: u64) -> Result<u64> {
        Ok(self.0.clamp(1, piles))
    }
}

/// Replays a fixed list of choices in call order.
#[derive(Clone, Debug)]
pub struct ScriptedPiles {
    script: std::collections::VecDeque<u64>,
}

impl ScriptedPiles {
    pub fn new(script: impl IntoIterator<Item = u64>) -> Self {
        Self { script: script.into_iter().collect() }
    }
}

impl PileChooser for ScriptedPiles {
    fn choose(&mut self, gen: usize, string: usize, piles: u64) -> Result<u64> {
        let p = self.script.pop_front().ok_or(Error::StreamExhausted { gen, string })?;
        if !(1..=piles).contains(&p) {
            return Err(Error::param("pile", format!("{p} not in 1..={piles}")));
        }
        Ok(p)
    }
}

/// Top pile on even strings, bottom pile on odd ones, so every connector
/// takes the steepest available slope change with alternating sign.
#[derive(Clone, Copy, Debug, Default)]
pub struct AlternatingExtremes;

impl PileChooser for AlternatingExtremes {
    fn choose(&mut self, _: usize, string: usize, piles: u64) -> Result<u64> {
        Ok(if string.is_multiple_of(2) { piles } else { 1 })
    }
}

/// Builds generation `k + 1` from generation `k`; also returns the pile chosen
/// for each string of `g`.
pub fn child(
    g: &Generation,
    seq: &MkSequence,
    chooser: &mut dyn PileChooser,
) -> Result<(Generation, Vec<u64>)> {
    let k = g.gen;
    if k >= seq.max_depth {
        return Err(Error::DepthExhausted { gen: k, max_depth: seq.max_depth });
    }
    let piles = seq.m[k + 1];
    let h = q_frac(1, seq.n[k + 1]);
    let choices = (0..g.strings.len())
        .map(|s| chooser.choose(k, s, piles))
        .collect::<Result<Vec<_>>>()?;
    let pile_of = |j: usize| -> Result<u64> {
        g.string_of(j)
            .map(|s| choices[s])
            .ok_or_else(|| Error::OutOfDomain(format!("cell {j} of generation {k} has no string")))
    };

    let next = layout(k + 1);
    let mut cells = Vec::with_capacity(2 * g.len());
    for (j, cell) in g.cells.iter().enumerate() {
        let selected = match cell.flag {
            CellFlag::Normal => cell.pile(pile_of(j)?, &h),
            CellFlag::Exceptional => {
                let left = pile_of(j - 1)?;
                let right = pile_of(j + 1)?;
                let y_left = &cell.y0 + &h * q_int(left as i64 - 1);
                let y_right = cell.right_y0() + &h * q_int(right as i64 - 1);
                let slope = (&y_right - &y_left) / &cell.width;
                debug_assert_eq!(
                    &slope - &cell.slope,
                    q_int(right as i64 - left as i64) * &h / &cell.width
                );
                Parallelogram { y0: y_left, slope, height: h.clone(), ..cell.clone() }
            }
        };
        cells.extend(selected.bisect());
    }
    for c in &mut cells {
        c.flag = CellFlag::Normal;
    }
    for &j in &next.exceptional {
        cells[j].flag = CellFlag::Exceptional;
    }
    Ok((
        Generation {
            gen: k + 1,
            cells,
            strings: next.strings,
            exceptional: next.exceptional,
            last_string_deficit: next.deficit,
        },
        choices,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wormgraphs::build_sequence;

    #[test]
    fn root_is_unit_square() {
        let r = root();
        assert_eq!(r.len(), 1);
        assert_eq!(r.total_area(), Q::one());
        assert!(r.exceptional.is_empty());
        assert_eq!(r.strings, vec![0..1]);
    }

    #[test]
    fn child_of_root_by_hand() {
        let seq = build_sequence(1).unwrap();
        let (g, choices) = child(&root(), &seq, &mut ScriptedPiles::new([7])).unwrap();
        assert_eq!(choices, vec![7]);
        assert_eq!(g.len(), 2);
        let [a, b] = [&g.cells[0], &g.cells[1]];
        assert_eq!(a.width, q_frac(1, 2));
        assert_eq!(a.height, q_frac(1, 200));
        assert_eq!(a.y0, q_frac(6, 200));
        assert!(a.slope.is_zero() && b.slope.is_zero());
        assert_eq!(a.x1(), q_frac(1, 2));
        assert_eq!(b.x0, q_frac(1, 2));
        assert_eq!(b.y0, a.right_y0());
        g.check(&seq).unwrap();
    }

    #[test]
    fn depth_and_stream_errors() {
        let seq = build_sequence(1).unwrap();
        let (g1, _) = child(&root(), &seq, &mut ConstantPiles(1)).unwrap();
        assert!(matches!(
            child(&g1, &seq, &mut ConstantPiles(1)),
            Err(Error::DepthExhausted { .. })
        ));
        assert!(matches!(
            child(&root(), &seq, &mut ScriptedPiles::new([])),
            Err(Error::StreamExhausted { gen: 0, string: 0 })
        ));
    }

    #[test]
    fn layouts_stay_near_target() {
        for k in 0..=24 {
            let l = layout(k);
            let n = 1usize << k;
            assert_eq!(l.strings.first().unwrap().start, 0);
            assert_eq!(l.strings.last().unwrap().end, n);
            assert_eq!(l.strings.len(), l.exceptional.len() + 1);
            let slack = if k % 2 == 0 { 2 } else { (l.target / 16).max(4) };
            for r in &l.strings {
                assert!(r.len().abs_diff(l.target) <= slack, "k={k} len {} target {}", r.len(), l.target);
            }
            for w in l.strings.windows(2) {
                assert_eq!(w[0].end + 1, w[1].start);
            }
            let last = l.strings.last().unwrap().len() as i64;
            assert_eq!(l.deficit, l.string_len as i64 - last);
        }
        let l = layout(7);
        assert_eq!((l.target, l.string_len, l.strings.last().unwrap().len()), (11, 12, 11));
    }

    #[test]
    fn connector_matches_slope_recursion() {
        let seq = build_sequence(4).unwrap();
        let mut g = root();
        let mut chooser = SeededPiles::new(9);
        for _ in 0..4 {
            let (next, choices) = child(&g, &seq, &mut chooser).unwrap();
            let k = g.gen;
            for &e in &g.exceptional {
                let (l, r) = (g.string_of(e - 1).unwrap(), g.string_of(e + 1).unwrap());
                let expected = &g.cells[e].slope
                    + q_int(choices[r] as i64 - choices[l] as i64) * q_frac(1 << k, seq.n[k + 1]);
                assert_eq!(next.cells[2 * e].slope, expected);
                assert_eq!(next.cells[2 * e + 1].slope, expected);
            }
            next.check(&seq).unwrap();
            g = next;
        }
    }
}
