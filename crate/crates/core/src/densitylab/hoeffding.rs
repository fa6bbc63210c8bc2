use crate::{Error, Result};

/// `exp(−2n²t² / ∑(bᵢ − aᵢ)²)`: the Hoeffding bound on
/// `P(X̄ − E X̄ ≥ t)` for independent `Xᵢ ∈ [aᵢ, bᵢ]`.
///
/// When every range is degenerate the exponent is undefined and the bound
/// is reported as the uninformative value 1.
pub fn hoeffding_bound(t: f64, ranges: &[(f64, f64)]) -> Result<f64> {
    if ranges.is_empty() {
        return Err(Error::param("ranges", "must be nonempty"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("must be positive, got {t}")));
    }
    if let Some(&(a, b)) = ranges.iter().find(|(a, b)| !(b >= a) || !a.is_finite() || !b.is_finite()) {
        return Err(Error::param("ranges", format!("({a}, {b}) is not an interval")));
    }
    let spread: f64 = ranges.iter().map(|(a, b)| (b - a).powi(2)).sum();
    if spread == 0.0 {
        return Ok(1.0);
    }
    let n = ranges.len() as f64;
    Ok((-2.0 * n * n * t * t / spread).exp().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn substitution_examples() {
        let unit = vec![(0.0, 1.0); 100];
        assert_abs_diff_eq!(hoeffding_bound(0.1, &unit).unwrap(), (-2f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(hoeffding_bound(1.0, &[(0.0, 1.0)]).unwrap(), (-2f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn doubling_ranges_quarters_exponent() {
        let narrow = vec![(0.0, 1.0); 10];
        let wide = vec![(0.0, 2.0); 10];
        let a = hoeffding_bound(0.3, &narrow).unwrap().ln();
        let b = hoeffding_bound(0.3, &wide).unwrap().ln();
        assert_abs_diff_eq!(b, a / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn edge_cases() {
        assert!(hoeffding_bound(0.1, &[]).is_err());
        assert!(hoeffding_bound(0.0, &[(0.0, 1.0)]).is_err());
        assert!(hoeffding_bound(0.1, &[(1.0, 0.0)]).is_err());
        assert_eq!(hoeffding_bound(0.1, &[(0.5, 0.5)]).unwrap(), 1.0);
    }
}
