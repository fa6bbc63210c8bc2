use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CurveCells, CurveFamily, Grid, GridDensity};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target relative gap `(value − dual_bound) / value`.
    pub tol: f64,
    /// Cap on constraint-generation rounds.
    pub max_iterations: usize,
    /// Right-hand side of the admissibility constraints (1 for the modulus).
    pub threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-3, max_iterations: 100_000, threshold: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: usize,
    pub active: usize,
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusResult {
    /// Energy of `density`, an admissible density; an upper bound on `mod_p`.
    pub value: f64,
    /// Lagrangian dual value of the multipliers; a lower bound on `mod_p`.
    pub dual_bound: f64,
    pub density: GridDensity,
    /// Constraint-generation rounds used.
    pub iterations: usize,
    /// Relative gap achieved.
    pub tolerance: f64,
    pub converged: bool,
    pub p: f64,
    pub threshold: f64,
    /// Smallest line integral of `density` over the family.
    pub min_integral: f64,
    /// Curves that entered the active set, with their final multipliers.
    pub active: Vec<usize>,
    pub multipliers: Vec<f64>,
    /// Set when `p ≤ 3`, outside the range where positivity is proved.
    pub outside_theorem_range: bool,
    pub trace: Vec<TraceRow>,
}

/// Discrete `mod_p` of `fam` on `grid` to relative gap `tol`.
pub fn solve_modulus(fam: &CurveFamily, grid: &Grid, p: f64, tol: f64) -> Result<ModulusResult> {
    solve_modulus_with(fam, grid, p, &SolverOptions { tol, ..SolverOptions::default() })
}

/// Minimises `∑_c a ρ_c^p` subject to `∑_c ℓ_{γc} ρ_c ≥ θ` for every curve.
///
/// Works on the concave dual `g(λ) = θ∑λ_γ − (p−1)∑_c a ρ_c(λ)^p` with
/// `ρ_c(λ) = (s_c/(pa))^{1/(p−1)}`, `s_c = ∑_γ λ_γ ℓ_{γc}`. Each round adds
/// the most violated inactive curve, then maximises `g` exactly along each
/// active coordinate in turn. The primal iterate is `ρ(λ)` rescaled to be
/// admissible for the whole family; its energy and `g(λ)` bracket `mod_p`.
pub fn solve_modulus_with(
    fam: &CurveFamily,
    grid: &Grid,
    p: f64,
    opts: &SolverOptions,
) -> Result<ModulusResult> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param("p", format!("must exceed 1, got {p}")));
    }
    if !(opts.tol > 0.0 && opts.tol < 1.0) {
        return Err(Error::param("tol", format!("must lie in (0, 1), got {}", opts.tol)));
    }
    if !(opts.threshold > 0.0 && opts.threshold.is_finite()) {
        return Err(Error::param("threshold", format!("must be positive, got {}", opts.threshold)));
    }
    fam.validate()?;
    let cells = fam.cells(grid);
    if let Some(i) = cells.iter().position(|c| c.total <= 0.0) {
        return Err(Error::param("curves", format!("curve {i} has no length inside [0,1]²")));
    }

    let mut st = Dual::new(&cells, grid, p, opts.threshold);
    let theta = opts.threshold;
    let mut best_upper = f64::INFINITY;
    let mut best_lower = 0.0f64;
    let mut best_lambda = st.lambda.clone();
    let mut trace = Vec::new();
    let mut round = 0;
    let mut integrals = vec![0.0; cells.len()];
    loop {
        st.refresh();
        integrals.par_iter_mut().zip(&cells).for_each(|(v, c)| *v = c.integral(&st.rho));
        let min = integrals.iter().copied().fold(f64::INFINITY, f64::min);
        let e = st.energy();
        let lower = theta * st.lambda.iter().sum::<f64>() - (p - 1.0) * e;
        best_lower = best_lower.max(lower);
        if min > 0.0 {
            let upper = e * (theta / min).powf(p);
            if upper < best_upper {
                best_upper = upper;
                best_lambda.clone_from(&st.lambda);
            }
        }
        let gap = if best_upper.is_finite() { (best_upper - best_lower) / best_upper } else { f64::INFINITY };
        if round <= 100 || round % 100 == 0 || gap <= opts.tol {
            trace.push(TraceRow { round, active: st.active.len(), lower: best_lower, upper: best_upper, gap });
        }
        if gap <= opts.tol {
            break;
        }
        if round >= opts.max_iterations {
            return Err(Error::NonConvergence { iterations: round, value: best_upper, dual_bound: best_lower });
        }
        round += 1;
        let worst = integrals
            .iter()
            .enumerate()
            .filter(|&(i, &v)| v < theta && !st.is_active[i])
            .fold(None, |b: Option<(usize, f64)>, (i, &v)| match b {
                Some((_, bv)) if bv <= v => b,
                _ => Some((i, v)),
            });
        if let Some((i, _)) = worst {
            st.activate(i);
        }
        for k in 0..st.active.len() {
            st.update(st.active[k]);
        }
    }

    st.lambda = best_lambda;
    st.refresh();
    let min = cells.iter().map(|c| c.integral(&st.rho)).fold(f64::INFINITY, f64::min);
    let scale = theta / min;
    let density = GridDensity { grid: *grid, values: st.rho.iter().map(|v| v * scale).collect() };
    let (active, multipliers) = st.active.iter().map(|&i| (i, st.lambda[i])).unzip();
    Ok(ModulusResult {
        value: best_upper,
        dual_bound: best_lower,
        density,
        iterations: round,
        tolerance: (best_upper - best_lower) / best_upper,
        converged: true,
        p,
        threshold: theta,
        min_integral: min * scale,
        active,
        multipliers,
        outside_theorem_range: p <= 3.0,
        trace,
    })
}

struct Dual<'a> {
    cells: &'a [CurveCells],
    p: f64,
    /// `1/(p−1)`.
    q: f64,
    /// `1/(p a)`.
    coef: f64,
    area: f64,
    theta: f64,
    s: Vec<f64>,
    rho: Vec<f64>,
    lambda: Vec<f64>,
    active: Vec<usize>,
    is_active: Vec<bool>,
    support: Vec<usize>,
    in_support: Vec<bool>,
    scratch: Vec<(f64, f64)>,
}

impl<'a> Dual<'a> {
    fn new(cells: &'a [CurveCells], grid: &Grid, p: f64, theta: f64) -> Self {
        let n = grid.cells();
        let area = grid.cell_area();
        Self {
            cells,
            p,
            q: 1.0 / (p - 1.0),
            coef: 1.0 / (p * area),
            area,
            theta,
            s: vec![0.0; n],
            rho: vec![0.0; n],
            lambda: vec![0.0; cells.len()],
            active: Vec::new(),
            is_active: vec![false; cells.len()],
            support: Vec::new(),
            in_support: vec![false; n],
            scratch: Vec::new(),
        }
    }

    fn rho_of(&self, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else if self.p == 2.0 {
            s * self.coef
        } else {
            (s * self.coef).powf(self.q)
        }
    }

    fn activate(&mut self, i: usize) {
        self.is_active[i] = true;
        self.active.push(i);
        for &c in &self.cells[i].cells {
            let c = c as usize;
            if !self.in_support[c] {
                self.in_support[c] = true;
                self.support.push(c);
            }
        }
    }

    /// Recomputes `s` and `ρ` from the multipliers, discarding drift.
    fn refresh(&mut self) {
        for &c in &self.support {
            self.s[c] = 0.0;
        }
        for &i in &self.active {
            let l = self.lambda[i];
            if l > 0.0 {
                for (c, len) in self.cells[i].iter() {
                    self.s[c] += l * len;
                }
            }
        }
        for k in 0..self.support.len() {
            let c = self.support[k];
            self.rho[c] = self.rho_of(self.s[c]);
        }
    }

    fn energy(&self) -> f64 {
        self.support.iter().map(|&c| self.rho[c].powf(self.p)).sum::<f64>() * self.area
    }

    /// Exact maximisation of the dual along coordinate `i`.
    fn update(&mut self, i: usize) {
        let curve = &self.cells[i];
        let old = self.lambda[i];
        self.scratch.clear();
        for (c, len) in curve.iter() {
            self.scratch.push(((self.s[c] - old * len).max(0.0), len));
        }
        let new = self.solve_coordinate();
        for (k, (c, _)) in curve.iter().enumerate() {
            let (base, len) = self.scratch[k];
            self.s[c] = base + new * len;
            self.rho[c] = self.rho_of(self.s[c]);
        }
        self.lambda[i] = new;
    }

    fn phi(&self, lam: f64) -> f64 {
        self.scratch.iter().map(|&(b, l)| l * self.rho_of(b + lam * l)).sum()
    }

    fn dphi(&self, lam: f64) -> f64 {
        self.scratch
            .iter()
            .map(|&(b, l)| {
                let s = b + lam * l;
                if s <= 0.0 {
                    0.0
                } else {
                    l * l * self.coef * self.q * (s * self.coef).powf(self.q - 1.0)
                }
            })
            .sum()
    }

    /// Smallest `λ ≥ 0` with `φ(λ) ≥ θ`, where `φ` is the line integral of
    /// `ρ` along the current curve as a function of its own multiplier.
    fn solve_coordinate(&self) -> f64 {
        let theta = self.theta;
        if self.phi(0.0) >= theta {
            return 0.0;
        }
        if self.p == 2.0 {
            let (sb, sl) = self.scratch.iter().fold((0.0, 0.0), |(a, b), &(base, l)| (a + l * base, b + l * l));
            return ((theta / self.coef - sb) / sl).max(0.0);
        }
        // φ with all bases dropped is a pure power of λ; its root bounds the true one.
        let k: f64 = self.scratch.iter().map(|&(_, l)| l * (l * self.coef).powf(self.q)).sum();
        let mut hi = (theta / k).powf(self.p - 1.0);
        let mut lo = 0.0;
        let mut x = hi;
        for _ in 0..200 {
            let f = self.phi(x) - theta;
            if f.abs() <= 1e-15 * theta {
                return x;
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            if hi - lo <= 1e-16 * hi {
                break;
            }
            let d = self.dphi(x);
            let newton = x - f / d;
            x = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        hi
    }
}
