use std::f64::consts::{SQRT_2, TAU};

use super::{Isometry, OrthogonalKind, Point};
use crate::{Error, Result};

/// Upper bound on `len · δ³` for every net built with `0 < δ ≤ 1`.
///
/// Lattice points within `10 + δ` of the origin at spacing `δ√2` number at
/// most `(2(10 + δ)/(δ√2) + 1)² ≤ 274.1 δ⁻²`, and there are at most
/// `2(2π/δ + 1) ≤ 14.57 δ⁻¹` orthogonal parts.
pub const C_NET: f64 = 4000.0;

/// Radius of the translation ball.
const TRANSLATION_RADIUS: f64 = 10.0;

/// A finite family of isometries `O_i(· − v_ij)` covering every rigid motion
/// whose translation lies in `B(center, 10)`.
///
/// The orthogonal parts are the rotations by `kδ` and the same angles
/// composed with the fixed flip. For each orthogonal part the translations
/// are `v_ij = center − O_iᵀ g_j`, where `g_j` runs over the square lattice
/// `center + δ√2·ℤ²` restricted to `B(0, 10 + δ)`. Each `{v_ij}_j` is a
/// rotated δ-net of `B(center, 10)`, and member `(i, j)` sends `center` to
/// `g_j`. Tying the lattice to the rotation keeps the rotation error from
/// being amplified by `|v|`: any motion with `|v − center| ≤ 10` is within
/// operator distance `(1 + |center|)·δ/2 + δ` of a member.
#[derive(Clone, Debug)]
pub struct IsometryNet {
    pub delta: f64,
    pub center: Point,
    orthogonal: Vec<(OrthogonalKind, f64)>,
    offsets: Vec<Point>,
    spacing: f64,
}

impl IsometryNet {
    pub fn len(&self) -> usize {
        self.orthogonal.len() * self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `len · δ³`, the constant realised by this net.
    pub fn measured_constant(&self) -> f64 {
        self.len() as f64 * self.delta.powi(3)
    }

    pub fn rotation_count(&self) -> usize {
        self.orthogonal.len()
    }

    /// Images of `center` under the members, one per lattice point.
    pub fn offsets(&self) -> &[Point] {
        &self.offsets
    }

    fn member(&self, (kind, angle): (OrthogonalKind, f64), g: Point) -> Isometry {
        let o = Isometry::new(kind, angle, Point::ORIGIN);
        Isometry::new(kind, angle, self.center - o.linear_transpose(g))
    }

    pub fn iter(&self) -> impl Iterator<Item = Isometry> + '_ {
        self.orthogonal
            .iter()
            .flat_map(move |&o| self.offsets.iter().map(move |&g| self.member(o, g)))
    }

    /// Members whose image of `center` lies in `keep`.
    pub fn iter_where<'a>(
        &'a self,
        keep: impl Fn(Point) -> bool + 'a,
    ) -> impl Iterator<Item = Isometry> + 'a {
        let offsets: Vec<Point> = self.offsets.iter().copied().filter(|&g| keep(g)).collect();
        self.orthogonal
            .iter()
            .flat_map(move |&o| offsets.clone().into_iter().map(move |g| self.member(o, g)))
    }

    /// A member close to `iota`: nearest angle of the same kind, nearest
    /// lattice point to `iota(center)`. Returns `None` when `iota(center)`
    /// falls outside the lattice disk.
    pub fn nearest(&self, iota: &Isometry) -> Option<Isometry> {
        let same: Vec<_> = self
            .orthogonal
            .iter()
            .copied()
            .filter(|(k, _)| *k == iota.kind)
            .collect();
        let best = same.iter().copied().min_by(|a, b| {
            angle_gap(a.1, iota.angle).total_cmp(&angle_gap(b.1, iota.angle))
        })?;
        let target = iota.apply(self.center);
        let rel = (target - self.center) * (1.0 / self.spacing);
        let g = self.center + Point::new(rel.x.round(), rel.y.round()) * self.spacing;
        if g.norm() > TRANSLATION_RADIUS + self.delta + 1e-12 {
            return None;
        }
        Some(self.member(best, g))
    }

    /// Whether `iota` is (up to rounding) one of the members.
    pub fn contains(&self, iota: &Isometry) -> bool {
        let g = iota.apply(self.center);
        let rel = (g - self.center) * (1.0 / self.spacing);
        let on_lattice = (rel.x - rel.x.round()).abs() < 1e-9 && (rel.y - rel.y.round()).abs() < 1e-9;
        on_lattice
            && g.norm() <= TRANSLATION_RADIUS + self.delta + 1e-9
            && self
                .orthogonal
                .iter()
                .any(|&(k, a)| k == iota.kind && angle_gap(a, iota.angle) < 1e-12)
    }
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

pub fn build_net(delta: f64, center: Point) -> Result<IsometryNet> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param("delta", format!("must lie in (0, 1], got {delta}")));
    }
    if !center.is_finite() {
        return Err(Error::param("center", "must be finite"));
    }
    let steps = (TAU / delta).ceil() as usize;
    let mut orthogonal = Vec::with_capacity(2 * steps);
    for kind in [OrthogonalKind::Rotation, OrthogonalKind::Reflection] {
        orthogonal.extend((0..steps).map(|k| (kind, k as f64 * delta)));
    }

    let spacing = delta * SQRT_2;
    let radius = TRANSLATION_RADIUS + delta;
    let reach = ((radius + center.norm()) / spacing).ceil() as i64 + 1;
    let mut offsets = Vec::new();
    for i in -reach..=reach {
        for j in -reach..=reach {
            let g = center + Point::new(i as f64, j as f64) * spacing;
            if g.norm() <= radius {
                offsets.push(g);
            }
        }
    }
    Ok(IsometryNet {
        delta,
        center,
        orthogonal,
        offsets,
        spacing,
    })
}
