use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `ε`, `κ` and the depth `k_ε` below which densities are trivially small.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityParams {
    pub epsilon: f64,
    pub kappa: f64,
    /// `⌈(2 + κ)/3 · log₂(1/ε)⌉`.
    pub k_eps: usize,
    pub lambda: f64,
    /// Whether `ε^{−(2+κ)/3} = 2^{k_ε}` holds (to within `1e−9` in the exponent).
    /// When false, `k_ε` is the ceiling and reports carry a warning.
    pub dyadic_exact: bool,
}

impl DensityParams {
    /// `ε^{1/3 − κ}`, the exceedance threshold.
    pub fn threshold(&self) -> f64 {
        self.epsilon.powf(1.0 / 3.0 - self.kappa)
    }
}

pub fn make_params(epsilon: f64, kappa: f64) -> Result<DensityParams> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param("epsilon", format!("must lie in (0, 1), got {epsilon}")));
    }
    if !(kappa > 0.0 && kappa <= 1.0 / 3.0 + 1e-15) {
        return Err(Error::param("kappa", format!("must lie in (0, 1/3], got {kappa}")));
    }
    let exponent = (2.0 + kappa) / 3.0 * (1.0 / epsilon).log2();
    let nearest = exponent.round();
    let dyadic_exact = (exponent - nearest).abs() < 1e-9;
    let k_eps = if dyadic_exact { nearest } else { exponent.ceil() } as usize;
    Ok(DensityParams { epsilon, kappa, k_eps, lambda: 0.5, dyadic_exact })
}

/// Increasing thresholds `r_k`, `k ≥ k_ε`, all below `ε^{1/3−κ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RSchedule {
    pub params: DensityParams,
    /// `values[i] = r_{k_ε + i}`.
    pub values: Vec<f64>,
}

impl RSchedule {
    /// `r_k`, or `None` outside `k_ε..=k_max`.
    pub fn r(&self, k: usize) -> Option<f64> {
        k.checked_sub(self.params.k_eps).and_then(|i| self.values.get(i).copied())
    }
}

pub fn r_schedule(params: DensityParams, k_max: usize) -> Result<RSchedule> {
    if k_max < params.k_eps {
        return Err(Error::param(
            "k_max",
            format!("must be at least k_eps = {}, got {k_max}", params.k_eps),
        ));
    }
    let t = params.threshold();
    let mut values = Vec::with_capacity(k_max - params.k_eps + 1);
    let mut r = t / 2.0;
    values.push(r);
    for k in params.k_eps + 1..=k_max {
        let m = (k - params.k_eps + 1) as f64;
        r += t / (2.0 * m * m);
        values.push(r);
    }
    Ok(RSchedule { params, values })
}
