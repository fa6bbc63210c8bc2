use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::geometry::{
    build_net, clip_area, region_area, ConvexPolygon, Isometry, Point, Square, SquareUnion,
};
use crate::wormgraphs::{to_f64, Generation, MkSequence, OmegaSample};
use crate::{Error, Result};

/// Floating-point view of one generation, indexed for fast area queries.
#[derive(Clone, Debug)]
pub struct GenView {
    pub k: usize,
    width: f64,
    polys: Vec<ConvexPolygon>,
    ylo: Vec<f64>,
    yhi: Vec<f64>,
    area: f64,
}

impl GenView {
    pub fn new(g: &Generation) -> Self {
        let polys = g.polygons();
        let (ylo, yhi) = polys.iter().map(|p| {
            let (lo, hi) = p.bbox();
            (lo.y, hi.y)
        }).unzip();
        Self {
            k: g.gen,
            width: g.cell_width(),
            area: to_f64(&g.total_area()),
            polys,
            ylo,
            yhi,
        }
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    /// `|G_k|`.
    pub fn total_area(&self) -> f64 {
        self.area
    }

    pub fn polygon(&self, j: usize) -> &ConvexPolygon {
        &self.polys[j]
    }

    /// Cells whose x-extent meets `[xlo, xhi]`.
    fn range(&self, xlo: f64, xhi: f64) -> Range<usize> {
        let n = self.polys.len();
        if xhi < 0.0 || xlo > 1.0 {
            return 0..0;
        }
        let a = ((xlo / self.width).floor().max(0.0) as usize).min(n);
        let b = ((xhi / self.width).ceil().max(0.0) as usize).min(n);
        a..b
    }

    /// Calls `f(j, |T_j ∩ ι(E)|)` for every cell with a nonzero overlap
    /// candidate, once per rectangle of the decomposition of `E`.
    fn for_each_overlap(&self, e: &SquareUnion, iota: &Isometry, mut f: impl FnMut(usize, f64)) {
        for r in e.rects() {
            let p = r.polygon().transformed(iota);
            let (lo, hi) = p.bbox();
            for j in self.range(lo.x, hi.x) {
                if self.ylo[j] < hi.y && self.yhi[j] > lo.y {
                    let a = clip_area(&self.polys[j], &p);
                    if a > 0.0 {
                        f(j, a);
                    }
                }
            }
        }
    }

    /// `|G_k ∩ ι(E)|`.
    pub fn covered_area(&self, e: &SquareUnion, iota: &Isometry) -> f64 {
        let mut total = 0.0;
        self.for_each_overlap(e, iota, |_, a| total += a);
        total
    }

    /// Per-cell `|T ∩ ι(E)|`, zero entries included.
    pub fn cell_areas(&self, e: &SquareUnion, iota: &Isometry) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.for_each_overlap(e, iota, |j, a| out[j] += a);
        out
    }

    /// `D_{ι(E)}(G_k)`.
    pub fn density(&self, e: &SquareUnion, iota: &Isometry) -> f64 {
        (self.covered_area(e, iota) / self.area).clamp(0.0, 1.0)
    }

    pub fn sup_density(&self, e: &SquareUnion, delta: f64) -> Result<NetSearch> {
        sup_over_net(e, delta, 0.0, |local, iota| self.density(local, iota))
    }
}

/// `D_{ι(E)}(G_k) = ∑_T |T ∩ ι(E)| / |G_k|`, evaluated cell by cell with
/// [`region_area`]. [`GenView::density`] is the indexed equivalent.
pub fn density(g: &Generation, e: &SquareUnion, iota: &Isometry) -> f64 {
    let area = to_f64(&g.total_area());
    let covered: f64 = g.polygons().iter().map(|t| region_area(t, e, iota)).sum();
    (covered / area).clamp(0.0, 1.0)
}

/// The a-priori bound `|E|/|G_k| ≤ n_k ε`, and its looser form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrivialBound {
    /// `n_k ε`.
    pub tight: f64,
    /// `10000 k² 2^k ε`.
    pub loose: f64,
}

pub fn trivial_density_bound(seq: &MkSequence, k: usize, epsilon: f64) -> Result<TrivialBound> {
    let n_k = *seq.n.get(k).ok_or(Error::DepthExhausted { gen: k, max_depth: seq.max_depth })?;
    Ok(TrivialBound {
        tight: n_k as f64 * epsilon,
        loose: MkSequence::upper_target(k) as f64 * epsilon,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StringStat {
    /// `|S|`.
    pub area: f64,
    /// `|E ∩ S|`.
    pub e_area: f64,
    /// `d_S = |E ∩ S| / |S|`, the mean of `X_S`.
    pub d: f64,
    /// Upper end of the range of `X_S`.
    pub b: f64,
}

/// Per-string statistics of a fixed generation `k − 1` for the refinement to `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StringStats {
    /// The refinement depth `k` (one more than the generation inspected).
    pub k: usize,
    pub card: usize,
    /// Smallest `C` with `m_k/|S| ≤ C k² 2^k card 𝒮` for every string, so that
    /// `b_S = min{1, C |S ∩ E| k² 2^k card 𝒮}` dominates `X_S`.
    pub c_b: f64,
    pub strings: Vec<StringStat>,
    /// `∑ (b_S − a_S)²` with `a_S = 0`.
    pub sum_sq_range: f64,
}

pub fn string_stats(g: &Generation, e: &SquareUnion, seq: &MkSequence) -> Result<StringStats> {
    if g.strings.is_empty() {
        return Err(Error::param("g", "generation has no strings"));
    }
    let k = g.gen + 1;
    let m = *seq.m.get(k).ok_or(Error::DepthExhausted { gen: g.gen, max_depth: seq.max_depth })? as f64;
    let card = g.strings.len();
    let view = GenView::new(g);
    let cells = view.cell_areas(e, &Isometry::identity());
    let cell_area = view.total_area() / view.len() as f64;
    let scale = (k * k) as f64 * 2f64.powi(k as i32) * card as f64;
    let raw: Vec<(f64, f64)> = g
        .strings
        .iter()
        .map(|r| (r.len() as f64 * cell_area, cells[r.clone()].iter().sum::<f64>()))
        .collect();
    let c_b = raw.iter().map(|&(area, _)| m / (area * scale)).fold(0.0, f64::max);
    let strings: Vec<StringStat> = raw
        .into_iter()
        .map(|(area, e_area)| StringStat {
            area,
            e_area,
            d: (e_area / area).clamp(0.0, 1.0),
            b: (c_b * e_area * scale).min(1.0),
        })
        .collect();
    let sum_sq_range = strings.iter().map(|s| s.b * s.b).sum();
    Ok(StringStats { k, card, c_b, strings, sum_sq_range })
}

/// `X_S = |S ∩ G_k ∩ E| / |S ∩ G_k|` for each string `S` of `parent`, where
/// `child` is one refinement of `parent`.
pub fn string_fill(parent: &Generation, child: &Generation, e: &SquareUnion) -> Vec<f64> {
    let view = GenView::new(child);
    let covered = view.cell_areas(e, &Isometry::identity());
    let cell_area = view.total_area() / view.len() as f64;
    parent
        .strings
        .iter()
        .map(|r| {
            let kids = 2 * r.start..2 * r.end;
            (covered[kids.clone()].iter().sum::<f64>() / (kids.len() as f64 * cell_area)).clamp(0.0, 1.0)
        })
        .collect()
}

/// Result of maximising a functional over an isometry net.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSearch {
    pub value: f64,
    pub argmax: Isometry,
    pub delta: f64,
    /// Members actually evaluated after culling.
    pub evaluated: usize,
    /// Net centres used (one unless `E` is spread out).
    pub centers: usize,
    /// `len · δ³` of the nets built.
    pub net_constant: f64,
}

/// Distance from `p` to `[0,1]²`.
fn dist_to_unit_square(p: Point) -> f64 {
    let dx = (-p.x).max(0.0).max(p.x - 1.0);
    let dy = (-p.y).max(0.0).max(p.y - 1.0);
    dx.hypot(dy)
}

/// Maximises `eval(E_local, ι)` over δ-nets of isometries that bring some
/// point of `E` within `reach` of `[0,1]²`.
///
/// Sets of diameter at most 2 use one net centred at a point of `E`. Larger
/// sets get one net per unit dyadic square meeting `E`, each evaluated on the
/// part of `E` within 2.5 of that square's centre, which contains every point
/// an isometry in that net can bring near `[0,1]²`.
pub fn sup_over_net(
    e: &SquareUnion,
    delta: f64,
    reach: f64,
    eval: impl Fn(&SquareUnion, &Isometry) -> f64,
) -> Result<NetSearch> {
    let mut best = NetSearch {
        value: 0.0,
        argmax: Isometry::identity(),
        delta,
        evaluated: 0,
        centers: 0,
        net_constant: 0.0,
    };
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param("delta", format!("must lie in (0, 1], got {delta}")));
    }
    let Some(anchor) = e.anchor() else {
        return Ok(best);
    };
    let pieces: Vec<(Point, SquareUnion, f64)> = if e.diameter() <= 2.0 {
        vec![(anchor, e.clone(), e.radius_about(anchor))]
    } else {
        unit_squares_meeting(e)
            .into_iter()
            .map(|(ix, iy)| {
                let z = Point::new(ix as f64 + 0.5, iy as f64 + 0.5);
                let local: Vec<Square> = e
                    .squares()
                    .iter()
                    .copied()
                    .filter(|s| {
                        s.corner.x < z.x + 2.5 && s.max().x > z.x - 2.5 && s.corner.y < z.y + 2.5 && s.max().y > z.y - 2.5
                    })
                    .collect();
                (z, SquareUnion::new(local), std::f64::consts::FRAC_1_SQRT_2)
            })
            .collect()
    };
    for (z, local, radius) in pieces {
        let net = build_net(delta, z)?;
        best.centers += 1;
        best.net_constant = best.net_constant.max(net.measured_constant());
        let limit = radius + reach + 1e-12;
        for iota in net.iter_where(|g| dist_to_unit_square(g) <= limit) {
            best.evaluated += 1;
            let v = eval(&local, &iota);
            if v > best.value {
                best.value = v;
                best.argmax = iota;
            }
        }
    }
    Ok(best)
}

/// Maximum density of `E` in generation `g` over a δ-net of isometries.
pub fn sup_density_net(g: &Generation, e: &SquareUnion, delta: f64) -> Result<NetSearch> {
    GenView::new(g).sup_density(e, delta)
}

/// Length of the depth-`k` graph polyline inside `ι(E)`.
pub fn intersection_length(w: &OmegaSample, k: usize, e: &SquareUnion, iota: &Isometry) -> Result<f64> {
    Ok(polyline_length_in(&w.graph_polyline(k)?, e, iota))
}

/// Length of a polyline with increasing x-coordinates inside `ι(E)`.
pub(crate) fn polyline_length_in(pts: &[Point], e: &SquareUnion, iota: &Isometry) -> f64 {
    if pts.len() < 2 || e.is_empty() {
        return 0.0;
    }
    let mut segments = BTreeSet::new();
    for r in e.rects() {
        let (lo, hi) = r.polygon().transformed(iota).bbox();
        let first = pts.partition_point(|p| p.x < lo.x).saturating_sub(1);
        for i in first..pts.len() - 1 {
            if pts[i].x > hi.x {
                break;
            }
            let (a, b) = (pts[i], pts[i + 1]);
            if a.y.max(b.y) >= lo.y && a.y.min(b.y) <= hi.y {
                segments.insert(i);
            }
        }
    }
    let inv = iota.inverse();
    segments
        .into_iter()
        .map(|i| e.length_in(inv.apply(pts[i]), inv.apply(pts[i + 1])))
        .sum()
}

fn unit_squares_meeting(e: &SquareUnion) -> BTreeSet<(i64, i64)> {
    let mut out = BTreeSet::new();
    for r in e.rects() {
        let (x0, x1) = (r.min.x.floor() as i64, (r.max.x.ceil() as i64).max(r.min.x.floor() as i64 + 1));
        let (y0, y1) = (r.min.y.floor() as i64, (r.max.y.ceil() as i64).max(r.min.y.floor() as i64 + 1));
        for ix in x0..x1 {
            for iy in y0..y1 {
                out.insert((ix, iy));
            }
        }
    }
    out
}

/// Unit dyadic squares meeting `E`, sorted into mass classes
/// `𝒟_j = {Q : ε2^{−j−1} < |E ∩ Q| ≤ ε2^{−j}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicPartition {
    pub epsilon: f64,
    /// `classes[j]`: lower-left corners of the squares in `𝒟_j`.
    pub classes: BTreeMap<u32, Vec<(i64, i64)>>,
    /// Squares touching `E` with `|E ∩ Q| = 0`.
    pub infinite: Vec<(i64, i64)>,
    /// `|E ∩ Q|` per square.
    pub masses: BTreeMap<(i64, i64), f64>,
}

impl DyadicPartition {
    pub fn count(&self, j: u32) -> usize {
        self.classes.get(&j).map_or(0, Vec::len)
    }
}

pub fn dyadic_partition(e: &SquareUnion, epsilon: f64) -> Result<DyadicPartition> {
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
    }
    let total = e.area();
    if total >= epsilon {
        return Err(Error::param("E", format!("|E| = {total} is not below epsilon = {epsilon}")));
    }
    let mut out = DyadicPartition {
        epsilon,
        classes: BTreeMap::new(),
        infinite: Vec::new(),
        masses: BTreeMap::new(),
    };
    for (ix, iy) in unit_squares_meeting(e) {
        let q = ConvexPolygon::rect(
            Point::new(ix as f64, iy as f64),
            Point::new(ix as f64 + 1.0, iy as f64 + 1.0),
        );
        let mass = e.area_in(&q);
        out.masses.insert((ix, iy), mass);
        if mass <= 0.0 {
            out.infinite.push((ix, iy));
            continue;
        }
        let mut j = (epsilon / mass).log2().floor().max(0.0) as u32;
        // Settle the class boundaries by direct comparison.
        while j > 0 && mass > epsilon * 0.5f64.powi(j as i32) {
            j -= 1;
        }
        while mass <= epsilon * 0.5f64.powi(j as i32 + 1) {
            j += 1;
        }
        out.classes.entry(j).or_default().push((ix, iy));
    }
    for (&j, squares) in &out.classes {
        if squares.len() as f64 >= 2f64.powi(j as i32 + 1) {
            return Err(Error::OutOfDomain(format!(
                "class {j} holds {} squares, violating card 𝒟_j < 2^(j+1)",
                squares.len()
            )));
        }
    }
    Ok(out)
}
