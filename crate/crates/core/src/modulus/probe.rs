use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    curve_cells, is_admissible, solve_modulus, witness_check, CurveFamily, Grid, GridDensity,
    ModulusResult, WitnessReport,
};
use crate::geometry::{build_net, Isometry, Point, SquareUnion};
use crate::rng::{derive_seed, substream};
use crate::wormgraphs::sample_omega;
use crate::{Error, Result};

const PROBE_STREAM: u64 = 0x7072_6f62;
const ISO_STREAM: u64 = 0x6973_6f6d;
const CENTER: Point = Point::new(0.5, 0.5);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IsoMode {
    /// Graphs as sampled.
    #[default]
    Identity,
    /// A random rotation or reflection, with the graph's midpoint sent near
    /// the centre of the square.
    Random,
    /// Graph `i` takes member `i mod M` of a coarse isometry net
    /// centred on the square. Exploratory.
    Net,
}

impl std::str::FromStr for IsoMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Self::Identity),
            "random" => Ok(Self::Random),
            "net" => Ok(Self::Net),
            _ => Err(Error::param("iso_mode", format!("expected identity, random or net, got `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub p: f64,
    pub graph_count: usize,
    pub depth: usize,
    pub grid: usize,
    pub seed: u64,
    pub iso_mode: IsoMode,
    pub tol: f64,
    /// Also solve on the grid of resolution `2N`.
    pub refine: bool,
    /// Number of curves passed to `witness_check` against the optimal density.
    pub witness_samples: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            p: 4.0,
            graph_count: 64,
            depth: 6,
            grid: 256,
            seed: 0,
            iso_mode: IsoMode::Identity,
            tol: 1e-3,
            refine: true,
            witness_samples: 8,
        }
    }
}

impl ProbeOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::param("p", format!("must exceed 1, got {}", self.p)));
        }
        if self.graph_count == 0 {
            return Err(Error::param("graph_count", "must be at least 1"));
        }
        if !(1..=24).contains(&self.depth) {
            return Err(Error::param("depth", format!("must lie in 1..=24, got {}", self.depth)));
        }
        Grid::new(self.grid)?;
        if self.refine {
            Grid::new(2 * self.grid)?;
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::param("tol", format!("must lie in (0, 1), got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub grid: usize,
    pub value: f64,
    pub dual_bound: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub options: ProbeOptions,
    pub result: ModulusResult,
    pub refinement: Vec<RefinementRow>,
    /// `|v(2N) − v(N)| / v(N)`.
    pub refinement_change: Option<f64>,
    pub outside_theorem_range: bool,
    pub exploratory: bool,
    pub labels: Vec<String>,
    pub witnesses: Vec<WitnessReport>,
}

/// Graph `i` is `sample_omega(depth, derive_seed(seed, [PROBE, i]))`, so the
/// family for `graph_count = m` is a prefix of every larger one.
pub fn probe_family(opts: &ProbeOptions) -> Result<CurveFamily> {
    opts.validate()?;
    let net_members: Vec<Isometry> = if opts.iso_mode == IsoMode::Net {
        build_net(1.0, CENTER)?.iter_where(|g| g.dist(CENTER) <= 0.25).collect()
    } else {
        Vec::new()
    };
    let curves: Vec<(Vec<Point>, String)> = (0..opts.graph_count)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(opts.seed, &[PROBE_STREAM, i as u64]);
            let poly = sample_omega(opts.depth, seed)?.graph_polyline(opts.depth)?;
            let iota = match opts.iso_mode {
                IsoMode::Identity => Isometry::identity(),
                IsoMode::Random => random_isometry(opts.seed, i, &poly),
                IsoMode::Net => net_members[i % net_members.len()],
            };
            let label = format!(
                "seed={seed} iso={:?} angle={:.6} v=({:.6},{:.6})",
                iota.kind, iota.angle, iota.translation.x, iota.translation.y
            );
            Ok((poly.into_iter().map(|q| iota.apply(q)).collect(), label))
        })
        .collect::<Result<_>>()?;
    let mut fam = CurveFamily::default();
    for (c, l) in curves {
        fam.push(c, Some(l));
    }
    Ok(fam)
}

fn random_isometry(seed: u64, i: usize, poly: &[Point]) -> Isometry {
    let mut rng = substream(seed, &[ISO_STREAM, i as u64]);
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let reflect = rng.random_bool(0.5);
    let target = CENTER + Point::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
    let mid = poly[poly.len() / 2];
    let o = if reflect {
        Isometry::reflection(angle, Point::ORIGIN)
    } else {
        Isometry::rotation(angle, Point::ORIGIN)
    };
    // O(mid − v) = target.
    let v = mid - o.linear_transpose(target);
    Isometry::new(o.kind, angle, v)
}

/// Modulus of a family of sampled graphs, with a refinement comparison and
/// witness checks of the optimal density along the first few curves.
pub fn moser_probe(opts: &ProbeOptions) -> Result<ProbeReport> {
    let fam = probe_family(opts)?;
    let grid = Grid::new(opts.grid)?;
    let result = solve_modulus(&fam, &grid, opts.p, opts.tol)?;
    let mut refinement = vec![RefinementRow {
        grid: opts.grid,
        value: result.value,
        dual_bound: result.dual_bound,
        iterations: result.iterations,
    }];
    let mut refinement_change = None;
    if opts.refine {
        let fine = solve_modulus(&fam, &Grid::new(2 * opts.grid)?, opts.p, opts.tol)?;
        refinement_change = Some((fine.value - result.value).abs() / result.value);
        refinement.push(RefinementRow {
            grid: 2 * opts.grid,
            value: fine.value,
            dual_bound: fine.dual_bound,
            iterations: fine.iterations,
        });
    }
    let witnesses = fam
        .curves
        .iter()
        .take(opts.witness_samples)
        .map(|c| witness_check(&result.density, c))
        .collect::<Result<_>>()?;
    Ok(ProbeReport {
        options: *opts,
        outside_theorem_range: opts.p <= 3.0,
        exploratory: opts.iso_mode == IsoMode::Net,
        result,
        refinement,
        refinement_change,
        labels: fam.labels,
        witnesses,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub delta: f64,
    pub p: f64,
    /// `|cover ∩ [0,1]²|`.
    pub cover_area: f64,
    /// `|K̃|`, the area of the rasterised cover.
    pub raster_area: f64,
    /// Energy of `ρ = δ⁻¹·1_{K̃}`.
    pub energy: f64,
    /// `|K̃| − δ^p·energy`, zero up to rounding.
    pub identity_residual: f64,
    pub admissible: bool,
    pub min_integral: f64,
    pub modulus: f64,
    pub modulus_dual_bound: f64,
    /// `δ^p·mod_p / 2`.
    pub lower_bound: f64,
    /// `δ^p·mod_p ≤ |K̃|`.
    pub chain_holds: bool,
}

/// Covering bound: if every curve spends length `δ` in `cover`, then
/// `δ⁻¹·1_{K̃}` is admissible and `|K̃| ≥ δ^p·mod_p`.
///
/// `K̃` is the set of cells overlapping the cover in positive area, together
/// with the cells charged with a piece of some curve lying in the cover, so
/// every curve keeps its full in-cover length under the rasterised density.
pub fn corollary_bound(
    delta: f64,
    p: f64,
    cover: &SquareUnion,
    fam: &CurveFamily,
    grid: &Grid,
    tol: f64,
) -> Result<CorollaryReport> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param("delta", format!("must lie in (0, 1], got {delta}")));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param("p", format!("must exceed 1, got {p}")));
    }
    fam.validate()?;
    let cover = cover.clipped_to_box(0.0, 1.0);
    for (index, c) in fam.curves.iter().enumerate() {
        let length: f64 = c.windows(2).map(|w| cover.length_in(w[0], w[1])).sum();
        if length < delta * (1.0 - 1e-12) {
            return Err(Error::CoverageViolated { index, length, required: delta });
        }
    }

    let n = grid.resolution;
    let nf = n as f64;
    let mut mark = vec![false; grid.cells()];
    for r in cover.rects() {
        let ix0 = (r.min.x * nf).floor().max(0.0) as usize;
        let iy0 = (r.min.y * nf).floor().max(0.0) as usize;
        let ix1 = ((r.max.x * nf).ceil() as usize).min(n);
        let iy1 = ((r.max.y * nf).ceil() as usize).min(n);
        for iy in iy0..iy1 {
            for ix in ix0..ix1 {
                mark[grid.index(ix, iy)] = true;
            }
        }
    }
    for c in &fam.curves {
        for w in c.windows(2) {
            let d = w[1] - w[0];
            for r in cover.rects() {
                if let Some((t0, t1)) = r.segment_params(w[0], w[1]) {
                    let piece = [w[0] + d * t0, w[0] + d * t1];
                    for cell in curve_cells(grid, &piece).cells {
                        mark[cell as usize] = true;
                    }
                }
            }
        }
    }

    let inv = 1.0 / delta;
    let rho = GridDensity {
        grid: *grid,
        values: mark.iter().map(|&m| if m { inv } else { 0.0 }).collect(),
    };
    let raster_area = mark.iter().filter(|&&m| m).count() as f64 * grid.cell_area();
    let energy = super::energy(&rho, p)?;
    let adm = is_admissible(&rho, fam, 1e-9)?;
    let modulus = solve_modulus(fam, grid, p, tol)?;
    let dp = delta.powf(p);
    Ok(CorollaryReport {
        delta,
        p,
        cover_area: cover.area(),
        raster_area,
        energy,
        identity_residual: raster_area - dp * energy,
        admissible: adm.admissible,
        min_integral: adm.worst_integral,
        modulus: modulus.value,
        modulus_dual_bound: modulus.dual_bound,
        lower_bound: dp * modulus.value / 2.0,
        chain_holds: dp * modulus.dual_bound <= raster_area * (1.0 + 1e-9),
    })
}
