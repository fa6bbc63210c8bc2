//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use wormmod::geometry::Point;

/// Length of segment `ab` inside the closed box `[x0,x1]×[y0,y1]`, by
/// parametric clipping against each slab.
fn clip_len(a: Point, b: Point, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for (start, d, min, max) in [(a.x, dx, x0, x1), (a.y, dy, y0, y1)] {
        if d == 0.0 {
            if start < min || start > max {
                return 0.0;
            }
        } else {
            let (t0, t1) = ((min - start) / d, (max - start) / d);
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
    }
    if hi > lo { (hi - lo) * dx.hypot(dy) } else { 0.0 }
}

/// Dense row-major `N²` cell lengths of a polyline, clipping every segment
/// against every cell. Only valid when no segment runs along a grid line.
pub fn brute_lengths(n: usize, curve: &[Point]) -> Vec<f64> {
    let w = 1.0 / n as f64;
    let mut out = vec![0.0; n * n];
    for s in curve.windows(2) {
        for iy in 0..n {
            for ix in 0..n {
                let (x0, y0) = (ix as f64 * w, iy as f64 * w);
                out[iy * n + ix] += clip_len(s[0], s[1], x0, x0 + w, y0, y0 + w);
            }
        }
    }
    out
}

/// Maximises the Lagrangian dual `θ∑λ − (p−1)∑ a ρ(λ)^p` over `λ ≥ 0` by
/// projected gradient ascent with backtracking, from `starts` random points.
/// The best dual value equals the discrete modulus at the optimum.
pub fn dual_oracle(n: usize, lengths: &[Vec<f64>], p: f64, theta: f64, starts: usize, seed: u64) -> f64 {
    let a = 1.0 / (n * n) as f64;
    let q = 1.0 / (p - 1.0);
    let m = lengths.len();
    let rho = |lam: &[f64]| -> Vec<f64> {
        (0..n * n)
            .map(|c| {
                let s: f64 = (0..m).map(|g| lam[g] * lengths[g][c]).sum();
                if s > 0.0 { (s / (p * a)).powf(q) } else { 0.0 }
            })
            .collect()
    };
    let value = |lam: &[f64]| -> f64 {
        let r = rho(lam);
        theta * lam.iter().sum::<f64>() - (p - 1.0) * a * r.iter().map(|v| v.powf(p)).sum::<f64>()
    };
    let grad = |lam: &[f64]| -> Vec<f64> {
        let r = rho(lam);
        (0..m).map(|g| theta - (0..n * n).map(|c| lengths[g][c] * r[c]).sum::<f64>()).collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..starts {
        let mut lam: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..0.1)).collect();
        let mut f = value(&lam);
        let mut step = 1e-3;
        for _ in 0..200_000 {
            let g = grad(&lam);
            let mut moved = false;
            for _ in 0..60 {
                let trial: Vec<f64> = lam.iter().zip(&g).map(|(l, d)| (l + step * d).max(0.0)).collect();
                let ft = value(&trial);
                let change: f64 = trial.iter().zip(&lam).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
                if ft >= f + 1e-4 * change / step {
                    let gain = ft - f;
                    lam = trial;
                    f = ft;
                    step *= 2.0;
                    moved = gain > 1e-16 * f.abs().max(1e-300);
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        best = best.max(f);
    }
    best
}

/// A random polyline with 2 to 4 vertices in `[−0.1, 1.1]²` that has
/// positive length inside the unit square.
pub fn random_curve(rng: &mut impl Rng) -> Vec<Point> {
    loop {
        let k = rng.random_range(2..=4);
        let c: Vec<Point> = (0..k)
            .map(|_| Point::new(rng.random_range(-0.1..1.1), rng.random_range(-0.1..1.1)))
            .collect();
        if brute_lengths(4, &c).iter().sum::<f64>() > 0.05 {
            return c;
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

use wormmod::wormgraphs::{CellFlag, OmegaSample, Q};

fn q(num: u64, den: u64) -> Q {
    Q::new(num.into(), den.into())
}

/// Exact structural audit of a sample, written against the public cell
/// fields only: nesting, shared vertical sides, per-cell and total areas,
/// normal end cells. Returns the first violations found.
pub fn structural_violations(w: &OmegaSample) -> Vec<String> {
    let mut out = Vec::new();
    for (k, g) in w.gens.iter().enumerate() {
        let n_k = w.seq.n[k];
        let cells = &g.cells;
        if cells.len() != 1 << k {
            out.push(format!("gen {k}: {} cells", cells.len()));
        }
        let cell_area = q(1, n_k) / q(1 << k, 1);
        let mut total = q(0, 1);
        for (j, c) in cells.iter().enumerate() {
            let area = &c.width * &c.height;
            if area != cell_area {
                out.push(format!("gen {k} cell {j}: area {area}"));
            }
            total += area;
            if let Some(d) = cells.get(j + 1) {
                let right_x = &c.x0 + &c.width;
                let right_y = &c.y0 + &c.slope * &c.width;
                if right_x != d.x0 || right_y != d.y0 || c.height != d.height {
                    out.push(format!("gen {k}: cells {j},{} do not share a side", j + 1));
                }
            }
        }
        if total != q(1, n_k) {
            out.push(format!("gen {k}: total area {total}"));
        }
        if cells[0].flag != CellFlag::Normal || cells[cells.len() - 1].flag != CellFlag::Normal {
            out.push(format!("gen {k}: end cell is exceptional"));
        }
        if k > 0 {
            for (j, c) in cells.iter().enumerate() {
                let parent = &w.gens[k - 1].cells[j / 2];
                let x1 = &c.x0 + &c.width;
                let px1 = &parent.x0 + &parent.width;
                let mut inside = c.x0 >= parent.x0 && x1 <= px1;
                for x in [&c.x0, &x1] {
                    let lo = &c.y0 + &c.slope * (x - &c.x0);
                    let plo = &parent.y0 + &parent.slope * (x - &parent.x0);
                    inside &= lo >= plo && &lo + &c.height <= &plo + &parent.height;
                }
                if !inside {
                    out.push(format!("gen {k} cell {j} escapes its parent"));
                }
            }
        }
        if out.len() > 5 {
            break;
        }
    }
    out
}
