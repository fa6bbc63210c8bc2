use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use wormmod::densitylab::{
    density_tail_experiment, hoeffding_bound, intersection_tail_experiment, make_params,
    DensityParams, TailOptions, TailReport,
};
use wormmod::geometry::{Square, SquareUnion};
use wormmod::modulus::{
    heatmap_svg, moser_probe, solve_modulus_with, IsoMode, ModulusInstance, ProbeOptions,
    SolverOptions,
};
use wormmod::rng::substream;
use wormmod::wormgraphs::{sample_omega, MAX_DEPTH};
use wormmod::Error;

use crate::config::Settings;
use crate::failure::Failure;
use crate::output::Outputs;

fn invalid(name: &str, reason: impl std::fmt::Display) -> Failure {
    Failure::validation(format!("invalid parameter `{name}`: {reason}"))
}

fn positive(name: &str, v: usize) -> Result<usize, Failure> {
    if v == 0 {
        return Err(invalid(name, "must be at least 1"));
    }
    Ok(v)
}

pub fn gen(s: Settings) -> Result<(), Failure> {
    let seed = s.seed.unwrap_or(0);
    let depth = s.depth.unwrap_or(12);
    let count = positive("count", s.count.unwrap_or(1))?;
    let size = s.svg_size.unwrap_or(800.0);
    if depth > MAX_DEPTH {
        return Err(invalid("depth", format!("must be at most {MAX_DEPTH}, got {depth}")));
    }
    if !(size > 0.0 && size.is_finite()) {
        return Err(invalid("svg_size", "must be positive"));
    }
    let seeds: Vec<u64> = (0..count as u64).map(|i| seed.wrapping_add(i)).collect();

    let mut out = Outputs::create(&s.out_dir())?;
    let samples: Vec<_> = seeds
        .par_iter()
        .map(|&sd| sample_omega(depth, sd))
        .collect::<Result<_, Error>>()?;
    for (sd, w) in seeds.iter().zip(&samples) {
        out.write_json(&format!("omega_{sd}.json"), w)?;
        let svg = w.gens.last().expect("generation 0 is always present").to_svg(size);
        out.write(&format!("omega_{sd}.svg"), svg.as_bytes())?;
    }
    out.finish("gen", s, seeds, "ok", None)
}

struct TailPlan {
    e: SquareUnion,
    params: DensityParams,
    depth: usize,
    opts: TailOptions,
}

/// `default_area` is the area of the default E as a fraction of ε.
fn tail_plan(
    s: &Settings,
    default_depth: impl Fn(&DensityParams) -> usize,
    default_area: f64,
) -> Result<TailPlan, Failure> {
    let epsilon = s.epsilon.unwrap_or(2f64.powi(-12));
    let kappa = s.kappa.unwrap_or(1.0 / 12.0);
    let params = make_params(epsilon, kappa)?;
    let depth = s.depth.unwrap_or_else(|| default_depth(&params));
    if !(1..=MAX_DEPTH).contains(&depth) {
        return Err(invalid("depth", format!("must lie in 1..={MAX_DEPTH}, got {depth}")));
    }
    let mut squares = Vec::with_capacity(s.e.len());
    for (i, sq) in s.e.iter().enumerate() {
        match sq.0[..] {
            [x, y, side] if x.is_finite() && y.is_finite() && side > 0.0 && side.is_finite() => {
                squares.push(Square::new(x, y, side))
            }
            _ => return Err(invalid("e", format!("square {i} must be [x, y, side] with side > 0, got {:?}", sq.0))),
        }
    }
    if squares.is_empty() {
        squares.push(Square::new(0.0, 0.0, (default_area * epsilon).sqrt()));
    }
    let e = SquareUnion::new(squares);
    if e.area() > epsilon * (1.0 + 1e-12) {
        return Err(invalid("e", format!("|E| = {} exceeds epsilon = {epsilon}", e.area())));
    }
    let defaults = TailOptions::default();
    let opts = TailOptions {
        delta: s.delta.unwrap_or(defaults.delta),
        trials: positive("trials", s.trials.unwrap_or(defaults.trials))?,
        seed: s.seed.unwrap_or(0),
        continuity_trials: s.continuity_trials.unwrap_or(defaults.continuity_trials),
    };
    if !(opts.delta > 0.0 && opts.delta <= 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1], got {}", opts.delta)));
    }
    Ok(TailPlan { e, params, depth, opts })
}

fn write_tail(s: Settings, name: &str, report: &TailReport) -> Result<(), Failure> {
    let mut out = Outputs::create(&s.out_dir())?;
    out.write_json(&format!("tail_{name}.json"), report)?;
    out.write_csv(&format!("tail_{name}.csv"), &report.records)?;
    let seed = report.params.seed;
    out.finish(name, s, vec![seed], "ok", Some(report.constants))
}

pub fn density(s: Settings) -> Result<(), Failure> {
    let plan = tail_plan(&s, |p| p.k_eps + 3, 1.0)?;
    if plan.depth < plan.params.k_eps {
        return Err(invalid("depth", format!("must be at least k_eps = {}", plan.params.k_eps)));
    }
    let report = density_tail_experiment(&plan.e, &plan.params, plan.depth, &plan.opts)?;
    write_tail(s, "density", &report)
}

pub fn intersect(s: Settings) -> Result<(), Failure> {
    // Here |E| must stay strictly below ε.
    let plan = tail_plan(&s, |_| 8, 0.5)?;
    let report = intersection_tail_experiment(&plan.e, &plan.params, plan.depth, &plan.opts)?;
    write_tail(s, "intersect", &report)
}

#[derive(Serialize)]
struct Unconverged {
    status: &'static str,
    iterations: usize,
    value: f64,
    dual_bound: f64,
}

pub fn modulus(s: Settings) -> Result<(), Failure> {
    let path = s.instance.clone().ok_or_else(|| invalid("instance", "an instance file is required"))?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::io(format!("reading instance {}: {e}", path.display())))?;
    let mut inst = ModulusInstance::from_json(&text)?;
    if let Some(g) = s.grid {
        inst.grid = g;
    }
    if let Some(p) = s.p {
        inst.p = p;
    }
    if s.tol.is_some() {
        inst.tol = s.tol;
    }
    let (grid, fam) = inst.validate()?;
    let size = s.svg_size.unwrap_or(800.0);
    let opts = SolverOptions { tol: inst.tol.unwrap_or(SolverOptions::default().tol), ..Default::default() };

    let mut out = Outputs::create(&s.out_dir())?;
    match solve_modulus_with(&fam, &grid, inst.p, &opts) {
        Ok(r) => {
            out.write_json("modulus_result.json", &r)?;
            out.write_csv("modulus_trace.csv", &r.trace)?;
            out.write("modulus_heatmap.svg", heatmap_svg(&r.density, &fam, size).as_bytes())?;
            out.finish("modulus", s, vec![], "ok", None)
        }
        Err(Error::NonConvergence { iterations, value, dual_bound }) => {
            let u = Unconverged { status: "not_converged", iterations, value, dual_bound };
            out.write_json("modulus_result.json", &u)?;
            out.finish("modulus", s, vec![], "not_converged", None)?;
            Err(Error::NonConvergence { iterations, value, dual_bound }.into())
        }
        Err(e) => Err(e.into()),
    }
}

pub fn probe(s: Settings) -> Result<(), Failure> {
    let d = ProbeOptions::default();
    let iso_mode: IsoMode = match &s.iso_mode {
        Some(m) => m.parse()?,
        None => d.iso_mode,
    };
    let opts = ProbeOptions {
        p: s.p.unwrap_or(d.p),
        graph_count: s.graphs.unwrap_or(d.graph_count),
        depth: s.depth.unwrap_or(d.depth),
        grid: s.grid.unwrap_or(d.grid),
        seed: s.seed.unwrap_or(d.seed),
        iso_mode,
        tol: s.tol.unwrap_or(d.tol),
        refine: s.refine.unwrap_or(d.refine),
        witness_samples: s.witness_samples.unwrap_or(d.witness_samples),
    };
    opts.validate()?;
    let size = s.svg_size.unwrap_or(800.0);

    let mut out = Outputs::create(&s.out_dir())?;
    let report = moser_probe(&opts)?;
    if report.outside_theorem_range {
        eprintln!("note: p = {} is outside the range p > 3 where positivity is proved", opts.p);
    }
    out.write_json("probe_report.json", &report)?;
    let fam = wormmod::modulus::probe_family(&opts)?;
    out.write("probe_heatmap.svg", heatmap_svg(&report.result.density, &fam, size).as_bytes())?;
    out.finish("probe", s, vec![opts.seed], "ok", None)
}

#[derive(Serialize)]
struct HoeffdingRow {
    n: usize,
    t: f64,
    bound: f64,
    batches: usize,
    empirical: f64,
}

/// Bounds on `P(X̄ − 1/2 ≥ t)` for `n` uniform `[0,1]` variables, with the
/// tail observed over `trials` batches.
pub fn hoeffding(s: Settings) -> Result<(), Failure> {
    let ns = if s.n.is_empty() { vec![50, 100] } else { s.n.clone() };
    let ts = if s.t.is_empty() { vec![0.05, 0.1, 0.2] } else { s.t.clone() };
    let batches = positive("trials", s.trials.unwrap_or(10_000))?;
    let seed = s.seed.unwrap_or(0);
    for &n in &ns {
        positive("n", n)?;
    }
    if let Some(t) = ts.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(invalid("t", format!("must be positive, got {t}")));
    }

    let mut out = Outputs::create(&s.out_dir())?;
    let mut rows = Vec::new();
    for &n in &ns {
        let means: Vec<f64> = (0..batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = substream(seed, &[n as u64, b as u64]);
                (0..n).map(|_| rng.random::<f64>()).sum::<f64>() / n as f64
            })
            .collect();
        for &t in &ts {
            let bound = hoeffding_bound(t, &vec![(0.0, 1.0); n])?;
            let hits = means.iter().filter(|&&m| m - 0.5 >= t).count();
            rows.push(HoeffdingRow { n, t, bound, batches, empirical: hits as f64 / batches as f64 });
        }
    }
    out.write_csv("hoeffding.csv", &rows)?;
    out.finish("hoeffding", s, vec![seed], "ok", None)
}
