//! Discrete p-modulus of finite curve families on a pixel grid over
//! `[0,1]²`, with the level-set witness machinery, the random-graph probe
//! and the covering bound built on top.
//!
//! Densities are constant on grid cells and curves are polylines, so every
//! line integral is an exact finite sum `∑_c ρ_c ℓ_c`, where `ℓ_c` is the
//! length of the curve inside cell `c`. Curve portions outside `[0,1]²`
//! carry no density.

mod grid;
mod io;
mod levels;
mod probe;
mod solver;

pub use grid::{
    curve_cells, energy, is_admissible, line_integral, Admissibility, CurveCells, CurveFamily, Grid,
    GridDensity,
};
pub use io::{heatmap_svg, ModulusInstance};
pub use levels::{level_sets, witness_check, LevelSets, WitnessReport};
pub use probe::{
    corollary_bound, moser_probe, probe_family, CorollaryReport, IsoMode, ProbeOptions, ProbeReport,
    RefinementRow,
};
pub use solver::{solve_modulus, solve_modulus_with, ModulusResult, SolverOptions, TraceRow};
