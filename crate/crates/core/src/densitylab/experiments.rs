use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::density::{polyline_length_in, sup_over_net, GenView};
use super::{dyadic_partition, r_schedule, DensityParams};
use crate::geometry::{Isometry, OrthogonalKind, Point, SquareUnion};
use crate::rng::{derive_seed, substream};
use crate::wormgraphs::{sample_omega, Generation};
use crate::{Error, Result};

/// Sets are clipped to the box `[E_BOX_LO, E_BOX_HI]²` before any experiment.
pub const E_BOX_LO: f64 = -14.5;
pub const E_BOX_HI: f64 = 15.5;

const TAIL_STREAM: u64 = 0x7461_696c;
const CONT_STREAM: u64 = 0x636f_6e74;

/// Parameters echoed into every report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamsEcho {
    pub epsilon: Option<f64>,
    pub kappa: Option<f64>,
    pub k_eps: Option<usize>,
    pub dyadic_exact: Option<bool>,
    /// Deepest generation examined; suprema over `k` are truncated here.
    pub depth: usize,
    /// Net resolution actually used (the larger of the floor and the
    /// resolution the proof prescribes).
    pub delta: Option<f64>,
    /// Smallest resolution the proof's formula asks for.
    pub delta_proof: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub e_area: f64,
    pub e_diameter: f64,
    pub e_squares: usize,
}

/// Constants measured during a run rather than assumed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasuredConstants {
    /// Largest `|ΔArea| / (2^{−k} ‖ι₁ − ι₂‖)` observed per cell.
    pub c_cont: Option<f64>,
    /// Largest `len · δ³` among the isometry nets built.
    pub c_net: Option<f64>,
    /// The string-range constant of the Hoeffding step.
    pub c_b: Option<f64>,
}

/// One Monte Carlo trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// The trial's statistic (a supremum over the net, and over `k` where relevant).
    pub value: f64,
    /// Generation attaining `value`.
    pub argmax_k: Option<usize>,
    /// Smallest `k > k_ε` with `g_{k−1} < r_{k−1}` and `g_k ≥ r_k`.
    pub first_crossing: Option<usize>,
    pub exceeded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicClassRow {
    pub j: u32,
    pub count: usize,
    /// `2^{j+1}`, a strict upper bound on `count`.
    pub bound: f64,
    pub mass: f64,
}

/// Outcome of a Monte Carlo experiment, together with the bound it is
/// compared against. Comparisons are reported, not asserted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub experiment: String,
    pub trials: usize,
    pub exceed_count: usize,
    /// `exceed_count / trials`.
    pub empirical_rate: f64,
    pub threshold: Option<f64>,
    pub paper_bound: Option<f64>,
    /// A second bound that applies when `E` has diameter at most 2.
    pub secondary_bound: Option<f64>,
    pub max_value: f64,
    pub params: ParamsEcho,
    pub constants: MeasuredConstants,
    /// Threshold `ε^{1/3−κ}/2` for generations up to `k_ε`.
    pub below_keps_threshold: Option<f64>,
    /// Trials whose supremum over `k ≤ k_ε` reached that threshold.
    pub exceed_below_keps: Option<usize>,
    /// Whether `10000 k² 2^k ε < ε^{1/3−κ}/2` holds for every `k ≤ k_ε`.
    pub condkepsilon_holds: Option<bool>,
    /// `(k, trials whose first crossing is at k)`.
    pub crossings: Vec<(usize, usize)>,
    pub dyadic: Vec<DyadicClassRow>,
    /// `(q, quantile)` pairs of the per-trial statistic.
    pub quantiles: Vec<(f64, f64)>,
    pub records: Vec<TrialRecord>,
    pub warnings: Vec<String>,
}

impl TailReport {
    fn new(experiment: &str, params: ParamsEcho, records: Vec<TrialRecord>) -> Self {
        let trials = records.len();
        let exceed_count = records.iter().filter(|r| r.exceeded).count();
        let values: Vec<f64> = records.iter().map(|r| r.value).collect();
        Self {
            experiment: experiment.into(),
            trials,
            exceed_count,
            empirical_rate: exceed_count as f64 / trials.max(1) as f64,
            threshold: None,
            paper_bound: None,
            secondary_bound: None,
            max_value: values.iter().copied().fold(0.0, f64::max),
            params,
            constants: MeasuredConstants::default(),
            below_keps_threshold: None,
            exceed_below_keps: None,
            condkepsilon_holds: None,
            crossings: Vec::new(),
            dyadic: Vec::new(),
            quantiles: quantiles(&values),
            records,
            warnings: Vec::new(),
        }
    }
}

fn quantiles(values: &[f64]) -> Vec<(f64, f64)> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    [0.5, 0.9, 0.99, 1.0]
        .iter()
        .map(|&q| {
            let i = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
            (q, v[i])
        })
        .collect()
}

fn prepare_set(e: &SquareUnion, warnings: &mut Vec<String>) -> SquareUnion {
    let clipped = e.clipped_to_box(E_BOX_LO, E_BOX_HI);
    if clipped.area() < e.area() * (1.0 - 1e-12) {
        warnings.push(format!(
            "E clipped to [{E_BOX_LO}, {E_BOX_HI}]²: area {} -> {}",
            e.area(),
            clipped.area()
        ));
    }
    clipped
}

fn echo(e: &SquareUnion, params: Option<&DensityParams>, depth: usize, opts: &TailOptions) -> ParamsEcho {
    ParamsEcho {
        epsilon: params.map(|p| p.epsilon),
        kappa: params.map(|p| p.kappa),
        k_eps: params.map(|p| p.k_eps),
        dyadic_exact: params.map(|p| p.dyadic_exact),
        depth,
        delta: Some(opts.delta),
        delta_proof: None,
        trials: opts.trials,
        seed: opts.seed,
        e_area: e.area(),
        e_diameter: e.diameter(),
        e_squares: e.squares().len(),
    }
}

/// Settings shared by the tail experiments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailOptions {
    /// Floor on the net resolution.
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    /// Trials of the continuity experiment that calibrates `C_cont`.
    pub continuity_trials: usize,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self { delta: 0.05, trials: 200, seed: 0, continuity_trials: 200 }
    }
}

impl TailOptions {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("trials", "must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::param("delta", format!("must lie in (0, 1], got {}", self.delta)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityOptions {
    pub include_reflections: bool,
}

impl Default for ContinuityOptions {
    fn default() -> Self {
        Self { include_reflections: true }
    }
}

/// Measures the constant in `||T ∩ ι₁(E)| − |T ∩ ι₂(E)|| ≲ 2^{−k}‖ι₁ − ι₂‖`.
///
/// `ι₁` places `E` at a random cell, on even trials with one edge of `E`
/// laid along the cell's bottom edge (the configuration where the bound is
/// tight), on odd trials at a random orientation. `ι₂` perturbs `ι₁` by a
/// step below the cell height. Every twentieth pair is identical and
/// contributes 0.
pub fn continuity_experiment(
    g: &Generation,
    e: &SquareUnion,
    trials: usize,
    seed: u64,
    opts: ContinuityOptions,
) -> Result<TailReport> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let mut warnings = Vec::new();
    let e = prepare_set(e, &mut warnings);
    let view = GenView::new(g);
    let anchor = e.anchor().unwrap_or(Point::ORIGIN);
    let radius = e.radius_about(anchor);
    let height = g.cell_height();
    let width = g.cell_width();
    let records: Vec<TrialRecord> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, &[CONT_STREAM, i as u64]);
            let kind = if opts.include_reflections && rng.random_bool(0.5) {
                OrthogonalKind::Reflection
            } else {
                OrthogonalKind::Rotation
            };
            let cell = view.polygon(rng.random_range(0..view.len()));
            let (lo, hi) = cell.bbox();
            let centre = (lo + hi) * 0.5;
            let (angle, from, to) = if i % 2 == 0 {
                // Lay the bottom edge of E's first rectangle along the cell's
                // bottom edge, through the cell centre.
                let v = cell.vertices();
                let dir = v[1] - v[0];
                let r0 = e.rects().first().copied();
                let from = r0.map_or(anchor, |r| Point::new(r.center().x, r.min.y));
                (dir.y.atan2(dir.x), from, centre)
            } else {
                let r = radius * rng.random::<f64>().sqrt();
                let phi = rng.random_range(0.0..std::f64::consts::TAU);
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                (angle, anchor, centre + Point::new(r * phi.cos(), r * phi.sin()))
            };
            let iota1 = place(kind, angle, from, to);
            let iota2 = if i % 20 == 0 {
                iota1
            } else {
                let step = height * 10f64.powf(rng.random_range(-2.0..0.0));
                let shift = Point::new(rng.random_range(-step..step), rng.random_range(-step..step));
                place(kind, angle + rng.random_range(-step..step), from, to + shift)
            };
            let d = iota1.distance(&iota2);
            let value = if d == 0.0 {
                0.0
            } else {
                let a1 = view.cell_areas(&e, &iota1);
                let a2 = view.cell_areas(&e, &iota2);
                a1.iter().zip(&a2).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / (width * d)
            };
            TrialRecord {
                trial: i,
                seed: derive_seed(seed, &[CONT_STREAM, i as u64]),
                value,
                argmax_k: Some(g.gen),
                first_crossing: None,
                exceeded: false,
            }
        })
        .collect();
    let opts_echo = TailOptions { delta: 1.0, trials, seed, continuity_trials: trials };
    let mut params = echo(&e, None, g.gen, &opts_echo);
    params.delta = None;
    let mut report = TailReport::new("continuity", params, records);
    report.constants.c_cont = Some(report.max_value);
    report.warnings = warnings;
    Ok(report)
}

/// The isometry of the given orthogonal part sending `from` to `to`.
fn place(kind: OrthogonalKind, angle: f64, from: Point, to: Point) -> Isometry {
    let o = Isometry::new(kind, angle, Point::ORIGIN);
    Isometry::new(kind, angle, from - o.linear_transpose(to))
}

/// Samples graphs and records `sup_{k ≤ K} sup_ι D_{ι(E)}(G_k)` per trial,
/// the supremum over `ι` taken over a net.
pub fn density_tail_experiment(
    e: &SquareUnion,
    params: &DensityParams,
    depth: usize,
    opts: &TailOptions,
) -> Result<TailReport> {
    opts.validate()?;
    let mut warnings = Vec::new();
    let e = prepare_set(e, &mut warnings);
    if e.area() > params.epsilon * (1.0 + 1e-12) {
        return Err(Error::param("E", format!("|E| = {} exceeds epsilon = {}", e.area(), params.epsilon)));
    }
    if depth < params.k_eps {
        return Err(Error::param("K", format!("must be at least k_eps = {}, got {depth}", params.k_eps)));
    }
    if e.diameter() > 2.0 {
        warnings.push(format!("diam E = {} exceeds 2", e.diameter()));
    }
    if !params.dyadic_exact {
        warnings.push(format!(
            "ε^(-(2+κ)/3) is not a power of two; k_eps = {} is the ceiling",
            params.k_eps
        ));
    }
    let threshold = params.threshold();
    let schedule = r_schedule(*params, depth)?;

    // Calibrate the continuity constant on one sample.
    let calib = sample_omega(depth, derive_seed(opts.seed, &[TAIL_STREAM, u64::MAX]))?;
    let cont = continuity_experiment(
        &calib.gens[depth.min(6)],
        &e,
        opts.continuity_trials.max(1),
        opts.seed,
        ContinuityOptions::default(),
    )?;
    let c_cont = cont.max_value.max(1e-300);
    let seq = calib.seq.clone();
    let deltas: Vec<(f64, f64)> = (0..=depth)
        .map(|k| {
            let m = (k.max(params.k_eps) - params.k_eps + 1) as f64;
            let proof = threshold / (2.0 * c_cont * seq.n[k] as f64 * m * m);
            (proof, proof.max(opts.delta).min(1.0))
        })
        .collect();
    let delta_proof = deltas.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
    if delta_proof < opts.delta {
        warnings.push(format!(
            "net resolution floored at {} (proof resolution down to {delta_proof:.3e}); suprema are net approximations",
            opts.delta
        ));
    }

    let per_trial: Vec<Result<(TrialRecord, f64, f64)>> = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(opts.seed, &[TAIL_STREAM, t as u64]);
            let w = sample_omega(depth, seed)?;
            let mut g = Vec::with_capacity(depth + 1);
            let mut c_net: f64 = 0.0;
            for k in 0..=depth {
                let s = GenView::new(&w.gens[k]).sup_density(&e, deltas[k].1)?;
                c_net = c_net.max(s.net_constant);
                g.push(s.value);
            }
            let (argmax_k, value) = g
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (k, v)| if v > b.1 { (k, v) } else { b });
            let below = g[..=params.k_eps.min(depth)].iter().copied().fold(0.0, f64::max);
            let first_crossing = (params.k_eps + 1..=depth).find(|&k| {
                g[k - 1] < schedule.r(k - 1).unwrap_or(f64::INFINITY) && g[k] >= schedule.r(k).unwrap_or(f64::INFINITY)
            });
            Ok((
                TrialRecord {
                    trial: t,
                    seed,
                    value,
                    argmax_k: Some(argmax_k),
                    first_crossing,
                    exceeded: value >= threshold,
                },
                below,
                c_net,
            ))
        })
        .collect();
    let mut records = Vec::with_capacity(opts.trials);
    let mut exceed_below = 0;
    let mut c_net: f64 = 0.0;
    for r in per_trial {
        let (rec, below, cn) = r?;
        if below >= threshold / 2.0 {
            exceed_below += 1;
        }
        c_net = c_net.max(cn);
        records.push(rec);
    }

    let mut params_echo = echo(&e, Some(params), depth, opts);
    params_echo.delta_proof = Some(delta_proof);
    let mut report = TailReport::new("density", params_echo, records);
    report.threshold = Some(threshold);
    report.paper_bound = Some(params.epsilon.powi(3));
    report.below_keps_threshold = Some(threshold / 2.0);
    report.exceed_below_keps = Some(exceed_below);
    report.condkepsilon_holds = Some((1..=params.k_eps).all(|k| {
        (10_000.0 * (k * k) as f64 * 2f64.powi(k as i32)) * params.epsilon < threshold / 2.0
    }));
    let mut crossings = std::collections::BTreeMap::new();
    for r in &report.records {
        if let Some(k) = r.first_crossing {
            *crossings.entry(k).or_insert(0) += 1;
        }
    }
    report.crossings = crossings.into_iter().collect();
    report.constants = MeasuredConstants { c_cont: Some(c_cont), c_net: Some(c_net), c_b: None };
    report.warnings = warnings;
    Ok(report)
}

/// Samples graphs and records `sup_ι ℋ¹(G_K ∩ ι(E))` per trial, with the
/// depth-`K` polyline standing in for the limit graph.
pub fn intersection_tail_experiment(
    e: &SquareUnion,
    params: &DensityParams,
    depth: usize,
    opts: &TailOptions,
) -> Result<TailReport> {
    opts.validate()?;
    let mut warnings = Vec::new();
    let e = prepare_set(e, &mut warnings);
    let partition = dyadic_partition(&e, params.epsilon)?;
    let threshold = params.threshold();
    let per_trial: Vec<Result<(TrialRecord, f64)>> = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(opts.seed, &[TAIL_STREAM, t as u64]);
            let w = sample_omega(depth, seed)?;
            let pts = w.graph_polyline(depth)?;
            let s = sup_over_net(&e, opts.delta, 0.0, |local, iota| polyline_length_in(&pts, local, iota))?;
            Ok((
                TrialRecord {
                    trial: t,
                    seed,
                    value: s.value,
                    argmax_k: Some(depth),
                    first_crossing: None,
                    exceeded: s.value > threshold,
                },
                s.net_constant,
            ))
        })
        .collect();
    let mut records = Vec::with_capacity(opts.trials);
    let mut c_net: f64 = 0.0;
    for r in per_trial {
        let (rec, cn) = r?;
        c_net = c_net.max(cn);
        records.push(rec);
    }
    let mut report = TailReport::new("intersection", echo(&e, Some(params), depth, opts), records);
    report.threshold = Some(threshold);
    report.paper_bound = Some(params.epsilon);
    if e.diameter() <= 2.0 {
        report.secondary_bound = Some(params.epsilon.powi(2));
    }
    report.dyadic = partition
        .classes
        .iter()
        .map(|(&j, squares)| DyadicClassRow {
            j,
            count: squares.len(),
            bound: 2f64.powi(j as i32 + 1),
            mass: squares.iter().map(|q| partition.masses[q]).sum(),
        })
        .collect();
    report.constants.c_net = Some(c_net);
    report.warnings = warnings;
    Ok(report)
}
