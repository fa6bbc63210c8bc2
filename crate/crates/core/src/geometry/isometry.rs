use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrthogonalKind {
    Rotation,
    Reflection,
}

/// A rigid motion `x ↦ O(x − v)`.
///
/// For `Rotation` the linear part is the rotation by `angle`; for `Reflection`
/// it is the same rotation composed with the flip `(x, y) ↦ (x, −y)`, i.e. the
/// reflection across the line at angle `angle / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub kind: OrthogonalKind,
    pub angle: f64,
    pub translation: Point,
}

impl Isometry {
    pub fn identity() -> Self {
        Self::rotation(0.0, Point::ORIGIN)
    }

    pub fn new(kind: OrthogonalKind, angle: f64, translation: Point) -> Self {
        Self {
            kind,
            angle: angle.rem_euclid(TAU),
            translation,
        }
    }

    pub fn rotation(angle: f64, translation: Point) -> Self {
        Self::new(OrthogonalKind::Rotation, angle, translation)
    }

    pub fn reflection(angle: f64, translation: Point) -> Self {
        Self::new(OrthogonalKind::Reflection, angle, translation)
    }

    /// Pure translation `x ↦ x + t` written in the `O(x − v)` form.
    pub fn shift(t: Point) -> Self {
        Self::rotation(0.0, -t)
    }

    /// Row-major linear part.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.angle.sin_cos();
        match self.kind {
            OrthogonalKind::Rotation => [[c, -s], [s, c]],
            OrthogonalKind::Reflection => [[c, s], [s, -c]],
        }
    }

    pub fn determinant(&self) -> f64 {
        let m = self.matrix();
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Applies the linear part only.
    #[inline]
    pub fn linear(&self, p: Point) -> Point {
        let m = self.matrix();
        Point::new(m[0][0] * p.x + m[0][1] * p.y, m[1][0] * p.x + m[1][1] * p.y)
    }

    /// Applies the transpose of the linear part.
    #[inline]
    pub fn linear_transpose(&self, p: Point) -> Point {
        let m = self.matrix();
        Point::new(m[0][0] * p.x + m[1][0] * p.y, m[0][1] * p.x + m[1][1] * p.y)
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        self.linear(p - self.translation)
    }

    /// Image of the origin, `−O v`.
    pub fn offset(&self) -> Point {
        self.apply(Point::ORIGIN)
    }

    /// `y ↦ Oᵀ y + v`, expressed again as `O'(y − v')`.
    pub fn inverse(&self) -> Self {
        let angle = match self.kind {
            OrthogonalKind::Rotation => -self.angle,
            // R(θ)F is symmetric, so it is its own transpose.
            OrthogonalKind::Reflection => self.angle,
        };
        Self::new(self.kind, angle, self.offset())
    }

    /// `sup_{|x| ≤ 1} |self(x) − other(x)|`.
    ///
    /// The difference is `x ↦ A x + b` with `A = O₁ − O₂`. When both linear
    /// parts have the same kind, `A` is a multiple `α` of an orthogonal map
    /// with `α = 2|sin((θ₁ − θ₂)/2)|`, so the supremum is `α + |b|`. For a
    /// rotation against a reflection, `A = 2 u nᵀ` has rank one (singular
    /// values 2 and 0) and the image of the unit disk is the segment
    /// `[−2u, 2u]`, giving `sqrt(4 + 4|u·b| + |b|²)`.
    pub fn distance(&self, other: &Isometry) -> f64 {
        let b = self.offset() - other.offset();
        if self.kind == other.kind {
            let alpha = 2.0 * ((self.angle - other.angle) / 2.0).sin().abs();
            alpha + b.norm()
        } else {
            let m1 = self.matrix();
            let m2 = other.matrix();
            let c0 = Point::new(m1[0][0] - m2[0][0], m1[1][0] - m2[1][0]);
            let c1 = Point::new(m1[0][1] - m2[0][1], m1[1][1] - m2[1][1]);
            let col = if c0.norm() >= c1.norm() { c0 } else { c1 };
            let u = col * (1.0 / col.norm());
            let bb = b.dot(b);
            (4.0 + 4.0 * u.dot(b).abs() + bb).sqrt()
        }
    }
}

impl Default for Isometry {
    fn default() -> Self {
        Self::identity()
    }
}

pub fn iso_apply(iota: &Isometry, p: Point) -> Point {
    iota.apply(p)
}

pub fn iso_distance(a: &Isometry, b: &Isometry) -> f64 {
    a.distance(b)
}
