use serde::{Deserialize, Serialize};

use super::{CurveFamily, Grid, GridDensity};
use crate::geometry::Point;
use crate::svg::SvgDoc;
use crate::{Error, Result};

/// On-disk description of a modulus problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulusInstance {
    pub grid: usize,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    pub curves: Vec<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
}

impl ModulusInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::param("instance", e.to_string()))
    }

    /// Checks every field and returns the grid and family.
    pub fn validate(&self) -> Result<(Grid, CurveFamily)> {
        let grid = Grid::new(self.grid)?;
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::param("p", format!("must exceed 1, got {}", self.p)));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::param("tol", format!("must lie in (0, 1), got {t}")));
            }
        }
        if !self.labels.is_empty() && self.labels.len() != self.curves.len() {
            return Err(Error::param("labels", "must be empty or one per curve"));
        }
        let fam = CurveFamily { curves: self.curves.clone(), labels: self.labels.clone() };
        fam.validate()?;
        Ok((grid, fam))
    }
}

/// Heatmap of `rho` on `[0,1]²` (y up) with the curves drawn on top. Only
/// nonzero cells are emitted.
pub fn heatmap_svg(rho: &GridDensity, fam: &CurveFamily, size: f64) -> String {
    let n = rho.grid.resolution;
    let w = size / n as f64;
    let max = rho.values.iter().copied().fold(0.0, f64::max);
    let mut doc = SvgDoc::new(size, size);
    doc.rect(0.0, 0.0, size, size, "#ffffff", "#000000", size / 400.0);
    if max > 0.0 {
        for (c, &v) in rho.values.iter().enumerate() {
            if v > 0.0 {
                let (ix, iy) = (c % n, c / n);
                let x = ix as f64 * w;
                let y = size - (iy + 1) as f64 * w;
                doc.rect(x, y, w, w, &shade(v / max), "none", 0.0);
            }
        }
    }
    for c in &fam.curves {
        let pts: Vec<(f64, f64)> = c.iter().map(|p| (p.x * size, size - p.y * size)).collect();
        doc.polyline(&pts, "#1b1b1b", size / 800.0);
    }
    doc.finish()
}

/// White through orange to dark red.
fn shade(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64, s: f64| (a + (b - a) * s).round() as u8;
    let (r, g, b) = if t < 0.5 {
        let s = t * 2.0;
        (lerp(255.0, 253.0, s), lerp(245.0, 141.0, s), lerp(235.0, 60.0, s))
    } else {
        let s = (t - 0.5) * 2.0;
        (lerp(253.0, 127.0, s), lerp(141.0, 0.0, s), lerp(60.0, 0.0, s))
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}
