use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::{Error, Result};

/// `N × N` square cells covering `[0,1]²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub resolution: usize,
}

impl Grid {
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::param("grid", format!("resolution must be at least 2, got {resolution}")));
        }
        if resolution > 8192 {
            return Err(Error::param("grid", format!("resolution must be at most 8192, got {resolution}")));
        }
        Ok(Self { resolution })
    }

    pub fn cells(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_width().powi(2)
    }

    /// Row-major index of cell `(ix, iy)`; `iy` counts upward from `y = 0`.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.resolution + ix
    }

    /// Lower-left corner of cell `c`.
    pub fn corner(&self, c: usize) -> Point {
        let w = self.cell_width();
        Point::new((c % self.resolution) as f64 * w, (c / self.resolution) as f64 * w)
    }

    fn locate(&self, v: f64) -> usize {
        ((v * self.resolution as f64).floor().max(0.0) as usize).min(self.resolution - 1)
    }
}

/// Cellwise-constant nonnegative density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub grid: Grid,
    /// Row-major values, see [`Grid::index`].
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.cells()] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.cells()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Self {
        let half = grid.cell_width() / 2.0;
        let values = (0..grid.cells())
            .map(|c| f(grid.corner(c) + Point::new(half, half)))
            .collect();
        Self { grid, values }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.grid.cells() {
            return Err(Error::param("density", "value count does not match the grid"));
        }
        if let Some(v) = self.values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::param("density", format!("value {v} is not a finite nonnegative number")));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v * factor).collect() }
    }
}

/// Lengths of one polyline inside the grid cells it crosses.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveCells {
    /// Strictly increasing cell indices.
    pub cells: Vec<u32>,
    pub lengths: Vec<f64>,
    /// Length inside `[0,1]²`.
    pub total: f64,
}

impl CurveCells {
    pub fn integral(&self, values: &[f64]) -> f64 {
        self.cells.iter().zip(&self.lengths).map(|(&c, &l)| values[c as usize] * l).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.cells.iter().zip(&self.lengths).map(|(&c, &l)| (c as usize, l))
    }
}

/// Splits each segment at the grid lines it crosses and charges each piece to
/// the cell containing its midpoint. Pieces running along a grid line go to
/// the cell above or to the right.
pub fn curve_cells(grid: &Grid, pts: &[Point]) -> CurveCells {
    let n = grid.resolution as f64;
    let mut pieces: Vec<(u32, f64)> = Vec::new();
    let mut ts: Vec<f64> = Vec::new();
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let d = b - a;
        let Some((t0, t1)) = clip_unit(a, d) else { continue };
        ts.clear();
        ts.push(t0);
        ts.push(t1);
        for (p, dp) in [(a.x, d.x), (a.y, d.y)] {
            if dp == 0.0 {
                continue;
            }
            let (u0, u1) = ((p + t0 * dp) * n, (p + t1 * dp) * n);
            let (lo, hi) = (u0.min(u1), u0.max(u1));
            let mut i = lo.floor() + 1.0;
            while i < hi {
                ts.push((i / n - p) / dp);
                i += 1.0;
            }
        }
        ts.sort_by(f64::total_cmp);
        let len = d.norm();
        for pair in ts.windows(2) {
            let (u, v) = (pair[0], pair[1]);
            if v <= u {
                continue;
            }
            let mid = a + d * ((u + v) / 2.0);
            let c = grid.index(grid.locate(mid.x), grid.locate(mid.y));
            pieces.push((c as u32, (v - u) * len));
        }
    }
    pieces.sort_by_key(|&(c, _)| c);
    let mut out = CurveCells::default();
    for (c, l) in pieces {
        if out.cells.last() == Some(&c) {
            *out.lengths.last_mut().expect("parallel vectors") += l;
        } else {
            out.cells.push(c);
            out.lengths.push(l);
        }
        out.total += l;
    }
    out
}

/// Parameter span of `a + t·d`, `t ∈ [0,1]`, inside `[0,1]²`.
fn clip_unit(a: Point, d: Point) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [(-d.x, a.x), (d.x, 1.0 - a.x), (-d.y, a.y), (d.y, 1.0 - a.y)] {
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

/// A finite family of polylines with optional per-curve labels.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveFamily {
    pub curves: Vec<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
}

impl CurveFamily {
    pub fn new(curves: Vec<Vec<Point>>) -> Self {
        Self { curves, labels: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn push(&mut self, curve: Vec<Point>, label: Option<String>) {
        if let Some(l) = label {
            self.labels.resize(self.curves.len(), String::new());
            self.labels.push(l);
        }
        self.curves.push(curve);
    }

    pub fn validate(&self) -> Result<()> {
        if self.curves.is_empty() {
            return Err(Error::param("curves", "family is empty"));
        }
        for (i, c) in self.curves.iter().enumerate() {
            if c.len() < 2 {
                return Err(Error::param("curves", format!("curve {i} has fewer than 2 points")));
            }
            if !c.iter().all(|p| p.is_finite()) {
                return Err(Error::param("curves", format!("curve {i} has a non-finite point")));
            }
        }
        Ok(())
    }

    pub fn cells(&self, grid: &Grid) -> Vec<CurveCells> {
        self.curves.par_iter().map(|c| curve_cells(grid, c)).collect()
    }
}

/// `∫_γ ρ dℋ¹`.
pub fn line_integral(rho: &GridDensity, gamma: &[Point]) -> f64 {
    curve_cells(&rho.grid, gamma).integral(&rho.values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    /// Index of the curve with the smallest line integral.
    pub worst: usize,
    pub worst_integral: f64,
}

pub fn is_admissible(rho: &GridDensity, fam: &CurveFamily, slack: f64) -> Result<Admissibility> {
    if !(slack >= 0.0) {
        return Err(Error::param("slack", format!("must be nonnegative, got {slack}")));
    }
    fam.validate()?;
    let integrals: Vec<f64> = fam.curves.par_iter().map(|c| line_integral(rho, c)).collect();
    let (worst, worst_integral) = integrals
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |b, (i, v)| if v < b.1 { (i, v) } else { b });
    Ok(Admissibility { admissible: worst_integral >= 1.0 - slack, worst, worst_integral })
}

/// `∫ ρ^p dx`.
pub fn energy(rho: &GridDensity, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::param("p", format!("must exceed 1, got {p}")));
    }
    let a = rho.grid.cell_area();
    Ok(rho.values.iter().map(|v| v.powf(p)).sum::<f64>() * a)
}
