use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wormmod::densitylab::{
    continuity_experiment, density, dyadic_partition, hoeffding_bound, make_params, r_schedule,
    string_fill, string_stats, sup_density_net, trivial_density_bound, ContinuityOptions,
};
use wormmod::geometry::{Isometry, Point, Square, SquareUnion};
use wormmod::wormgraphs::{child, sample_omega, SeededPiles};

fn squares(v: &[(f64, f64, f64)]) -> SquareUnion {
    SquareUnion::new(v.iter().map(|&(x, y, s)| Square::new(x, y, s)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn density_is_a_monotone_fraction(
        seed in 0u64..1000,
        k in 1usize..5,
        base in prop::collection::vec((-0.2f64..1.0, -0.2f64..1.0, 0.01f64..0.5), 0..4),
        extra in (-0.2f64..1.0, -0.2f64..1.0, 0.01f64..0.5),
        angle in 0.0f64..6.3,
        shift in (-0.3f64..0.3, -0.3f64..0.3),
    ) {
        let w = sample_omega(k, seed).unwrap();
        let g = &w.gens[k];
        let iota = Isometry::rotation(angle, Point::new(shift.0, shift.1));
        let e = squares(&base);
        let d = density(g, &e, &iota);
        let d2 = density(g, &e.with_square(Square::new(extra.0, extra.1, extra.2)), &iota);
        prop_assert!((0.0..=1.0).contains(&d) && (0.0..=1.0).contains(&d2));
        prop_assert!(d2 >= d - 1e-12);
        let eps = e.area().max(1e-300);
        prop_assert!(d <= trivial_density_bound(&w.seq, k, eps).unwrap().tight * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn schedule_partial_sums(log_eps in 6.0f64..30.0, kappa in 0.01f64..0.33, extra in 0usize..40) {
        let params = make_params(2f64.powf(-log_eps), kappa).unwrap();
        let s = r_schedule(params, params.k_eps + extra).unwrap();
        let t = params.threshold();
        for k in params.k_eps..=params.k_eps + extra {
            let sum: f64 = (1..=k - params.k_eps + 1).map(|m| 1.0 / (m * m) as f64).sum();
            let r = s.r(k).unwrap();
            prop_assert!((r - t / 2.0 * sum).abs() <= 1e-12 * t);
            prop_assert!(r < t);
        }
    }

    #[test]
    fn hoeffding_is_a_decreasing_probability(
        t in 0.001f64..2.0,
        dt in 0.001f64..1.0,
        ranges in prop::collection::vec((-1.0f64..1.0, 0.0f64..2.0), 1..50),
    ) {
        let ranges: Vec<(f64, f64)> = ranges.into_iter().map(|(a, w)| (a, a + w)).collect();
        let b1 = hoeffding_bound(t, &ranges).unwrap();
        let b2 = hoeffding_bound(t + dt, &ranges).unwrap();
        prop_assert!(b1 > 0.0 && b1 <= 1.0);
        prop_assert!(b2 <= b1);
    }

    #[test]
    fn dyadic_classes_stay_small(
        sq in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0.0001f64..0.01), 1..30),
    ) {
        let e = squares(&sq);
        let eps = e.area() * 1.5;
        let part = dyadic_partition(&e, eps).unwrap();
        for (&j, members) in &part.classes {
            prop_assert!(members.len() < 1 << (j + 1));
        }
    }
}

#[test]
fn hoeffding_dominates_uniform_mean_tails() {
    let n = 50;
    let batches = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let means: Vec<f64> = (0..batches).map(|_| (0..n).map(|_| rng.random::<f64>()).sum::<f64>() / n as f64).collect();
    for t in [0.05, 0.1, 0.2] {
        let rate = means.iter().filter(|&&m| m - 0.5 >= t).count() as f64 / batches as f64;
        let bound = hoeffding_bound(t, &vec![(0.0, 1.0); n]).unwrap();
        assert!(rate <= bound, "t {t}: {rate} > {bound}");
    }
}

/// Small squares placed inside the parent's cells at varying heights, so a
/// string's fill depends on which pile its children take.
fn pile_sensitive_set(parent: &wormmod::wormgraphs::Generation) -> SquareUnion {
    let h = parent.cell_height();
    let w = parent.cell_width();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut out = Vec::new();
    for poly in parent.polygons() {
        let v = poly.vertices();
        let side = h * rng.random_range(0.2..0.45);
        let x = v[0].x + w * rng.random_range(0.1..0.8);
        // Bottom edge height at x, then a random offset within the fiber.
        let t = (x - v[0].x) / (v[1].x - v[0].x);
        let bottom = v[0].y + t * (v[1].y - v[0].y);
        out.push(Square::new(x, bottom + rng.random_range(0.0..h - side), side.min(w * 0.1)));
    }
    SquareUnion::new(out)
}

#[test]
fn string_fills_are_independent_with_the_right_mean() {
    let w = sample_omega(7, 21).unwrap();
    let parent = &w.gens[6];
    let e = pile_sensitive_set(parent);
    let stats = string_stats(parent, &e, &w.seq).unwrap();
    let draws = 1000;
    let fills: Vec<Vec<f64>> = (0..draws)
        .map(|i| {
            let (kid, _) = child(parent, &w.seq, &mut SeededPiles::new(10_000 + i)).unwrap();
            string_fill(parent, &kid, &e)
        })
        .collect();
    let s = parent.strings.len();
    assert!(s >= 5);
    let mean: Vec<f64> = (0..s).map(|j| fills.iter().map(|f| f[j]).sum::<f64>() / draws as f64).collect();
    let var: Vec<f64> = (0..s)
        .map(|j| fills.iter().map(|f| (f[j] - mean[j]).powi(2)).sum::<f64>() / (draws - 1) as f64)
        .collect();
    for j in 0..s {
        let se = (var[j] / draws as f64).sqrt();
        let d = stats.strings[j].d;
        assert!((mean[j] - d).abs() <= 3.0 * se + 1e-12, "string {j}: mean {} vs d {d} (se {se})", mean[j]);
    }
    let mut pairs = 0;
    let mut small = 0;
    for a in 0..s {
        for b in a + 1..s {
            if var[a] == 0.0 || var[b] == 0.0 {
                continue;
            }
            let cov = fills.iter().map(|f| (f[a] - mean[a]) * (f[b] - mean[b])).sum::<f64>() / (draws - 1) as f64;
            let corr = cov / (var[a] * var[b]).sqrt();
            pairs += 1;
            small += (corr.abs() < 0.1) as usize;
        }
    }
    assert!(pairs > 0);
    assert!(small as f64 >= 0.95 * pairs as f64, "{small}/{pairs} pairs uncorrelated");
}

#[test]
fn net_refinement_is_stable() {
    let e = squares(&[(0.0, 0.0, 0.03), (0.05, 0.0, 0.02)]);
    for trial in 0..50u64 {
        let w = sample_omega(2, trial).unwrap();
        let g = &w.gens[2];
        let c = continuity_experiment(g, &e, 40, trial, ContinuityOptions::default()).unwrap();
        let c_cont = c.constants.c_cont.unwrap();
        let coarse = sup_density_net(g, &e, 0.4).unwrap().value;
        let fine = sup_density_net(g, &e, 0.2).unwrap().value;
        let allowance = c_cont * w.seq.n[2] as f64 * 0.4;
        assert!(fine >= coarse - allowance, "trial {trial}: {coarse} -> {fine}");
    }
}
