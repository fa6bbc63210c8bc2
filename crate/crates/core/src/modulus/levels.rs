use serde::{Deserialize, Serialize};

use super::{curve_cells, GridDensity};
use crate::geometry::{polyline_length, Point};
use crate::Result;

/// Dyadic bands of a density: class 0 holds `ρ < 1/2`, class `j ≥ 1` holds
/// `2^{j−2} ≤ ρ < 2^{j−1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSets {
    /// Class of each cell, row-major.
    pub class: Vec<u32>,
    pub j_max: u32,
    /// Cell count per class, indexed by `j`.
    pub counts: Vec<usize>,
}

impl LevelSets {
    pub fn cells(&self, j: u32) -> Vec<usize> {
        self.class.iter().enumerate().filter(|(_, &c)| c == j).map(|(i, _)| i).collect()
    }

    /// Cellwise ceiling `2^{j−1}` on class `j ≥ 1` and `1/2` on class 0.
    pub fn ceiling(&self) -> Vec<f64> {
        self.class.iter().map(|&j| band_ceiling(j)).collect()
    }
}

pub(crate) fn band_ceiling(j: u32) -> f64 {
    if j == 0 {
        0.5
    } else {
        2f64.powi(j as i32 - 1)
    }
}

pub(crate) fn class_of(v: f64) -> u32 {
    if v < 0.5 {
        return 0;
    }
    let mut j = (v.log2().floor() as i64 + 2).max(1);
    // log2 may round across a power of two; settle the band by comparison.
    while j > 1 && v < 2f64.powi(j as i32 - 2) {
        j -= 1;
    }
    while v >= 2f64.powi(j as i32 - 1) {
        j += 1;
    }
    j as u32
}

pub fn level_sets(rho: &GridDensity) -> Result<LevelSets> {
    rho.validate()?;
    let class: Vec<u32> = rho.values.iter().map(|&v| class_of(v)).collect();
    let j_max = class.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0; j_max as usize + 1];
    for &c in &class {
        counts[c as usize] += 1;
    }
    Ok(LevelSets { class, j_max, counts })
}

/// Per-band lengths of a curve and the witness search over them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub integral: f64,
    /// `∫_γ ρ ≥ 1`; when false nothing else is asserted.
    pub admissible: bool,
    pub length: f64,
    /// `ℓ_j`, the length of γ in class `j`; class 0 includes any part of γ
    /// outside `[0,1]²`.
    pub lengths: Vec<f64>,
    /// `ℋ¹(γ)/2 + ½∑_{j≥1} 2^j ℓ_j`, an upper bound for the integral.
    pub chain_upper: f64,
    pub chain_holds: bool,
    /// `∑_{j≥1} 2^j ℓ_j`; at least 1 whenever γ is admissible with length ≤ 1.
    pub weighted_sum: f64,
    /// Smallest `j ≥ 1` with `ℓ_j ≥ 2^{−j}`.
    pub witness: Option<u32>,
    /// `2^{j*} ℓ_{j*}` for the witness, else the largest `2^j ℓ_j`.
    pub witness_value: f64,
    pub note: Option<String>,
}

pub fn witness_check(rho: &GridDensity, gamma: &[Point]) -> Result<WitnessReport> {
    rho.validate()?;
    let cells = curve_cells(&rho.grid, gamma);
    let length = polyline_length(gamma);
    let integral = cells.integral(&rho.values);
    let mut lengths = vec![0.0; 1];
    for (c, l) in cells.iter() {
        let j = class_of(rho.values[c]) as usize;
        if j >= lengths.len() {
            lengths.resize(j + 1, 0.0);
        }
        lengths[j] += l;
    }
    lengths[0] += (length - cells.total).max(0.0);

    let weighted = |j: usize| 2f64.powi(j as i32) * lengths[j];
    let weighted_sum: f64 = (1..lengths.len()).map(weighted).sum();
    let chain_upper = length / 2.0 + weighted_sum / 2.0;
    let bound: f64 = lengths.iter().enumerate().map(|(j, l)| band_ceiling(j as u32) * l).sum();
    let chain_holds = integral <= bound * (1.0 + 1e-12) + 1e-15 && bound <= chain_upper * (1.0 + 1e-12) + 1e-15;

    let admissible = integral >= 1.0;
    let witness = (1..lengths.len()).find(|&j| lengths[j] >= 2f64.powi(-(j as i32)));
    let witness_value = match witness {
        Some(j) => weighted(j),
        None => (1..lengths.len()).map(weighted).fold(0.0, f64::max),
    };
    let note = if !admissible {
        Some(format!("line integral {integral} is below 1"))
    } else if witness.is_none() {
        Some("no band carries length 2^-j".to_string())
    } else {
        None
    };
    Ok(WitnessReport {
        integral,
        admissible,
        length,
        lengths,
        chain_upper,
        chain_holds,
        weighted_sum,
        witness: witness.map(|j| j as u32),
        witness_value,
        note,
    })
}
