use serde::{Deserialize, Serialize};

use super::{ConvexPolygon, Isometry, Point};

/// Axis-aligned square `[corner, corner + side]²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub corner: Point,
    pub side: f64,
}

impl Square {
    pub fn new(x: f64, y: f64, side: f64) -> Self {
        Self {
            corner: Point::new(x, y),
            side,
        }
    }

    pub fn max(&self) -> Point {
        Point::new(self.corner.x + self.side, self.corner.y + self.side)
    }
}

/// Closed axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.max.x - self.min.x) * (self.max.y - self.min.y)
    }

    pub fn center(&self) -> Point {
        (self.min + self.max) * 0.5
    }

    pub fn polygon(&self) -> ConvexPolygon {
        ConvexPolygon::rect(self.min, self.max)
    }

    /// Parameter interval `[t0, t1] ⊆ [0, 1]` of `a + t(b − a)` inside the
    /// rectangle (Liang–Barsky).
    pub fn segment_params(&self, a: Point, b: Point) -> Option<(f64, f64)> {
        let d = b - a;
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for (p, q) in [
            (-d.x, a.x - self.min.x),
            (d.x, self.max.x - a.x),
            (-d.y, a.y - self.min.y),
            (d.y, self.max.y - a.y),
        ] {
            if p == 0.0 {
                if q < 0.0 {
                    return None;
                }
            } else {
                let r = q / p;
                if p < 0.0 {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
            }
        }
        (t0 < t1).then_some((t0, t1))
    }
}

/// Union of axis-aligned squares, possibly overlapping.
///
/// The union is decomposed once into interior-disjoint rectangles (vertical
/// slabs with merged y-intervals); all measurements run on that partition so
/// overlaps are never counted twice.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Square>", into = "Vec<Square>")]
pub struct SquareUnion {
    squares: Vec<Square>,
    rects: Vec<Rect>,
}

impl From<Vec<Square>> for SquareUnion {
    fn from(squares: Vec<Square>) -> Self {
        Self::new(squares)
    }
}

impl From<SquareUnion> for Vec<Square> {
    fn from(u: SquareUnion) -> Self {
        u.squares
    }
}

impl SquareUnion {
    /// Squares with non-positive or non-finite sides are dropped.
    pub fn new(squares: Vec<Square>) -> Self {
        let squares: Vec<Square> = squares
            .into_iter()
            .filter(|s| s.side > 0.0 && s.side.is_finite() && s.corner.is_finite())
            .collect();
        let rects = decompose(&squares);
        Self { squares, rects }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn unit_square() -> Self {
        Self::new(vec![Square::new(0.0, 0.0, 1.0)])
    }

    pub fn squares(&self) -> &[Square] {
        &self.squares
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn with_square(&self, sq: Square) -> Self {
        let mut v = self.squares.clone();
        v.push(sq);
        Self::new(v)
    }

    pub fn area(&self) -> f64 {
        self.rects.iter().map(Rect::area).sum()
    }

    pub fn bbox(&self) -> Option<Rect> {
        let first = self.rects.first()?;
        let mut r = *first;
        for q in &self.rects[1..] {
            r.min.x = r.min.x.min(q.min.x);
            r.min.y = r.min.y.min(q.min.y);
            r.max.x = r.max.x.max(q.max.x);
            r.max.y = r.max.y.max(q.max.y);
        }
        Some(r)
    }

    pub fn diameter(&self) -> f64 {
        self.bbox()
            .map(|b| b.min.dist(b.max))
            .unwrap_or(0.0)
    }

    /// A point of the set: the centre of the first rectangle.
    pub fn anchor(&self) -> Option<Point> {
        self.rects.first().map(Rect::center)
    }

    /// Largest distance from `p` to a rectangle corner.
    pub fn radius_about(&self, p: Point) -> f64 {
        self.rects
            .iter()
            .flat_map(|r| [r.min, r.max, Point::new(r.min.x, r.max.y), Point::new(r.max.x, r.min.y)])
            .map(|c| c.dist(p))
            .fold(0.0, f64::max)
    }

    /// Intersects every square with the box `[lo, hi]²`.
    pub fn clipped_to_box(&self, lo: f64, hi: f64) -> Self {
        let mut out = Vec::new();
        for s in &self.squares {
            let x0 = s.corner.x.max(lo);
            let y0 = s.corner.y.max(lo);
            let x1 = (s.corner.x + s.side).min(hi);
            let y1 = (s.corner.y + s.side).min(hi);
            tile_rect(x0, y0, x1, y1, &mut out);
        }
        Self::new(out)
    }

    /// Area of `self ∩ poly`.
    pub fn area_in(&self, poly: &ConvexPolygon) -> f64 {
        if poly.is_empty() {
            return 0.0;
        }
        let (lo, hi) = poly.bbox();
        self.rects
            .iter()
            .filter(|r| r.min.x < hi.x && r.max.x > lo.x && r.min.y < hi.y && r.max.y > lo.y)
            .map(|r| poly.intersect_rect(r.min, r.max).area().min(r.area()))
            .sum()
    }

    /// Length of the segment `ab` lying in the union.
    pub fn length_in(&self, a: Point, b: Point) -> f64 {
        let mut spans: Vec<(f64, f64)> = self
            .rects
            .iter()
            .filter_map(|r| r.segment_params(a, b))
            .collect();
        if spans.is_empty() {
            return 0.0;
        }
        // Segments running along shared rectangle edges hit both neighbours;
        // merging the parameter spans keeps the length single-counted.
        spans.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut total = 0.0;
        let (mut s0, mut s1) = spans[0];
        for &(t0, t1) in &spans[1..] {
            if t0 > s1 {
                total += s1 - s0;
                s0 = t0;
                s1 = t1;
            } else {
                s1 = s1.max(t1);
            }
        }
        total += s1 - s0;
        total * a.dist(b)
    }
}

/// Tiles a rectangle by squares, Euclid style; slivers thinner than
/// `1e-12` of the longer side are dropped.
fn tile_rect(mut x0: f64, mut y0: f64, x1: f64, y1: f64, out: &mut Vec<Square>) {
    if !(x1 > x0 && y1 > y0) {
        return;
    }
    let tiny = 1e-12 * (x1 - x0).max(y1 - y0);
    while x1 - x0 > tiny && y1 - y0 > tiny {
        let (w, h) = (x1 - x0, y1 - y0);
        if w >= h {
            let count = (w / h).floor().max(1.0) as usize;
            for i in 0..count {
                out.push(Square::new(x0 + i as f64 * h, y0, h));
            }
            x0 += count as f64 * h;
        } else {
            let count = (h / w).floor().max(1.0) as usize;
            for i in 0..count {
                out.push(Square::new(x0, y0 + i as f64 * w, w));
            }
            y0 += count as f64 * w;
        }
    }
}

fn decompose(squares: &[Square]) -> Vec<Rect> {
    let mut xs: Vec<f64> = squares
        .iter()
        .flat_map(|s| [s.corner.x, s.corner.x + s.side])
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let mut out: Vec<Rect> = Vec::new();
    // Intervals of the previous slab, for merging identical neighbours.
    let mut prev: Vec<(f64, f64)> = Vec::new();
    let mut prev_start = Vec::<usize>::new();
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let mut iv: Vec<(f64, f64)> = squares
            .iter()
            .filter(|s| s.corner.x <= x0 && s.corner.x + s.side >= x1)
            .map(|s| (s.corner.y, s.corner.y + s.side))
            .collect();
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
        for (a, b) in iv {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        if !merged.is_empty() && merged == prev {
            for &i in &prev_start {
                out[i].max.x = x1;
            }
            continue;
        }
        prev_start.clear();
        for &(a, b) in &merged {
            prev_start.push(out.len());
            out.push(Rect {
                min: Point::new(x0, a),
                max: Point::new(x1, b),
            });
        }
        prev = merged;
    }
    out
}

/// `|T ∩ ι(E)|`, computed as `|ι⁻¹(T) ∩ E|`.
pub fn region_area(t: &ConvexPolygon, e: &SquareUnion, iota: &Isometry) -> f64 {
    if e.is_empty() {
        return 0.0;
    }
    e.area_in(&t.transformed(&iota.inverse()))
}

/// Length of the segment inside `ι(E)`.
pub fn segment_length_in(seg: (Point, Point), e: &SquareUnion, iota: &Isometry) -> f64 {
    if e.is_empty() {
        return 0.0;
    }
    let inv = iota.inverse();
    e.length_in(inv.apply(seg.0), inv.apply(seg.1))
}
