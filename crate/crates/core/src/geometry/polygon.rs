use serde::{Deserialize, Serialize};

use super::{Isometry, Point};

/// Convex polygon with counterclockwise vertices. Flat (zero-area) polygons
/// are allowed and behave as empty sets under area computations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    /// Takes vertices in either orientation; clockwise input is reversed.
    pub fn new(mut vertices: Vec<Point>) -> Self {
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Self { vertices }
    }

    pub fn rect(min: Point, max: Point) -> Self {
        Self {
            vertices: vec![min, Point::new(max.x, min.y), max, Point::new(min.x, max.y)],
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    pub fn transformed(&self, iota: &Isometry) -> Self {
        Self::new(self.vertices.iter().map(|&p| iota.apply(p)).collect())
    }

    /// Sutherland–Hodgman clip of `self` against the convex `clip`.
    pub fn intersection(&self, clip: &ConvexPolygon) -> ConvexPolygon {
        let mut out = self.vertices.clone();
        let n = clip.vertices.len();
        if n < 3 {
            return ConvexPolygon::default();
        }
        for i in 0..n {
            if out.is_empty() {
                break;
            }
            let a = clip.vertices[i];
            let b = clip.vertices[(i + 1) % n];
            let dir = b - a;
            if dir.x == 0.0 && dir.y == 0.0 {
                continue;
            }
            out = clip_half_plane(&out, |p| dir.cross(p - a));
        }
        ConvexPolygon { vertices: out }
    }

    /// Clip against the axis-aligned box `[lo, hi]`.
    pub fn intersect_rect(&self, lo: Point, hi: Point) -> ConvexPolygon {
        let mut out = clip_half_plane(&self.vertices, |p| p.x - lo.x);
        out = clip_half_plane(&out, |p| hi.x - p.x);
        out = clip_half_plane(&out, |p| p.y - lo.y);
        out = clip_half_plane(&out, |p| hi.y - p.y);
        ConvexPolygon { vertices: out }
    }
}

fn signed_area(v: &[Point]) -> f64 {
    if v.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..v.len() {
        s += v[i].cross(v[(i + 1) % v.len()]);
    }
    0.5 * s
}

/// Keeps the part of `poly` where `side(p) >= 0`.
fn clip_half_plane(poly: &[Point], side: impl Fn(Point) -> f64) -> Vec<Point> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let cur = poly[i];
        let nxt = poly[(i + 1) % n];
        let sc = side(cur);
        let sn = side(nxt);
        if sc >= 0.0 {
            out.push(cur);
        }
        if (sc >= 0.0) != (sn >= 0.0) {
            let t = sc / (sc - sn);
            out.push(cur + (nxt - cur) * t);
        }
    }
    out
}

/// Area of `p ∩ q` for convex polygons.
pub fn clip_area(p: &ConvexPolygon, q: &ConvexPolygon) -> f64 {
    if p.is_empty() || q.is_empty() {
        return 0.0;
    }
    let (plo, phi) = p.bbox();
    let (qlo, qhi) = q.bbox();
    if plo.x >= qhi.x || qlo.x >= phi.x || plo.y >= qhi.y || qlo.y >= phi.y {
        return 0.0;
    }
    // Clipping the polygon with fewer vertices keeps the rounding symmetric
    // enough in practice; the result is bounded by both areas regardless.
    let a = if p.vertices.len() <= q.vertices.len() {
        p.intersection(q).area()
    } else {
        q.intersection(p).area()
    };
    a.min(p.area()).min(q.area())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn unit() -> ConvexPolygon {
        ConvexPolygon::rect(Point::new(0.0, 0.0), Point::new(1.0, 1.0))
    }

    #[test]
    fn identical_and_disjoint() {
        assert_abs_diff_eq!(clip_area(&unit(), &unit()), 1.0, epsilon = 1e-15);
        let shifted = ConvexPolygon::rect(Point::new(1.0, 0.0), Point::new(2.0, 1.0));
        assert_eq!(clip_area(&unit(), &shifted), 0.0);
    }

    #[test]
    fn rotated_square_matches_monte_carlo_oracle() {
        use rand::{Rng, SeedableRng};
        let c = Point::new(0.5, 0.5);
        let rot = Isometry::rotation(FRAC_PI_4, c);
        // rot maps x to R(x − c); shift back to the centre.
        let turned = ConvexPolygon::new(
            unit().vertices().iter().map(|&p| rot.apply(p) + c).collect(),
        );

        // Oracle: 10⁷ uniform samples in the unit square, membership by
        // half-plane tests against the rotated square.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 10_000_000;
        let tv = turned.vertices().to_vec();
        let mut hits = 0u64;
        for _ in 0..n {
            let p = Point::new(rng.random(), rng.random());
            let inside = (0..4).all(|i| (tv[(i + 1) % 4] - tv[i]).cross(p - tv[i]) >= 0.0);
            hits += inside as u64;
        }
        let oracle = hits as f64 / n as f64;
        let exact = 2.0 * (2f64.sqrt() - 1.0);
        assert!((oracle - exact).abs() < 1e-3, "oracle {oracle}");
        assert!((clip_area(&unit(), &turned) - oracle).abs() < 1e-3);
        assert_abs_diff_eq!(clip_area(&unit(), &turned), exact, epsilon = 1e-12);
    }

    #[test]
    fn flat_polygon_has_zero_area() {
        let flat = ConvexPolygon::new(vec![
            Point::new(0.0, 0.5),
            Point::new(0.5, 0.5),
            Point::new(1.0, 0.5),
        ]);
        assert_eq!(flat.area(), 0.0);
        assert_eq!(clip_area(&unit(), &flat), 0.0);
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let cw = ConvexPolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
        ]);
        assert_abs_diff_eq!(clip_area(&cw, &unit()), 1.0, epsilon = 1e-15);
    }
}
