//! Independent oracles shared by the integration tests. None of them call
//! into the solver code they check.

#![allow(dead_code)]

use alphafair::{generate_random, GeneratorParams, Instance};

/// `g(x) = -f(x)` for one route.
pub fn cost(alpha: f64, w: f64, x: f64) -> f64 {
    if alpha == 1.0 {
        -w * x.ln()
    } else {
        -w * x.powf(1.0 - alpha) / (1.0 - alpha)
    }
}

/// Prox objective `g(x) + (x - v)^2 / (2 lambda)`.
pub fn prox_objective(alpha: f64, w: f64, v: f64, lambda: f64, x: f64) -> f64 {
    cost(alpha, w, x) + (x - v) * (x - v) / (2.0 * lambda)
}

/// Minimiser of the prox objective on `x > 0` by a log-spaced dense scan
/// followed by golden-section search on the bracketing cell.
pub fn prox_oracle(alpha: f64, w: f64, v: f64, lambda: f64) -> f64 {
    let h = |x: f64| prox_objective(alpha, w, v, lambda, x);
    let hi = v.max(0.0) + (lambda * w).max(1.0) + 10.0;
    let n = 4000;
    let lo_exp = -12.0f64;
    let grid: Vec<f64> = (0..=n)
        .map(|i| 10f64.powf(lo_exp + (hi.log10() - lo_exp) * i as f64 / n as f64))
        .collect();
    let (k, _) = grid
        .iter()
        .enumerate()
        .map(|(i, &x)| (i, h(x)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let mut a = if k == 0 { 0.0 } else { grid[k - 1] };
    let mut b = grid[(k + 1).min(n)];
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..300 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if h(c) <= h(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let mid = 0.5 * (a + b);
    if a > 0.0 && h(a) < h(mid) {
        a
    } else {
        mid
    }
}

/// Euclidean projection onto `{x >= 0, sum x <= cap}` by enumerating the
/// set of coordinates pinned at zero and whether the budget is active,
/// keeping the candidate that satisfies every KKT condition.
pub fn projection_oracle(y: &[f64], cap: f64) -> Vec<f64> {
    let n = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << n) {
        // mask bit set = coordinate free
        let free: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        for budget_active in [false, true] {
            let theta = if budget_active {
                if free.is_empty() {
                    continue;
                }
                (free.iter().map(|&i| y[i]).sum::<f64>() - cap) / free.len() as f64
            } else {
                0.0
            };
            if theta < -1e-12 {
                continue;
            }
            let mut x = vec![0.0; n];
            for &i in &free {
                x[i] = y[i] - theta;
            }
            let primal_ok = x.iter().all(|v| *v >= -1e-12) && x.iter().sum::<f64>() <= cap + 1e-9;
            // multiplier of x_i >= 0 for pinned coordinates: theta - y_i >= 0
            let dual_ok = (0..n).filter(|i| mask & (1 << i) == 0).all(|i| theta - y[i] >= -1e-12);
            if primal_ok && dual_ok {
                let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                    best = Some((d, x));
                }
            }
        }
    }
    best.expect("some active set satisfies KKT").1
}

/// Grid maximiser of the utility over the capacity polyhedron for 2 or 3
/// routes. All but the last coordinate walk a grid of `step`; the last one
/// takes the largest feasible value, which is optimal for it since every
/// utility is increasing.
pub fn grid_maximizer(inst: &Instance, step: f64) -> Vec<f64> {
    let n = inst.n_routes();
    assert!((2..=3).contains(&n));
    let caps = inst.capacities();
    let utility = |x: &[f64]| -> f64 {
        x.iter()
            .zip(&inst.routes)
            .map(|(&v, r)| -cost(inst.alpha, r.weight, v))
            .sum()
    };
    let residual = |x: &[f64]| -> f64 {
        let last = &inst.routes[n - 1];
        last.links
            .iter()
            .map(|&j| {
                let used: f64 = inst.routes[..n - 1]
                    .iter()
                    .zip(x)
                    .filter(|(r, _)| r.links.contains(&j))
                    .map(|(_, v)| v)
                    .sum();
                caps[j] - used
            })
            .fold(f64::INFINITY, f64::min)
    };
    let upper: Vec<f64> = inst
        .routes
        .iter()
        .map(|r| r.links.iter().map(|&j| caps[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let steps = |u: f64| (u / step).floor() as usize;
    let mut consider = |head: &[f64]| {
        let last = residual(head);
        if last <= 0.0 {
            return;
        }
        let mut x = head.to_vec();
        x.push(last);
        // head coordinates must also respect links the last route avoids
        let loads = inst.link_loads(&x);
        if loads.iter().zip(&caps).any(|(l, c)| *l > c + 1e-12) {
            return;
        }
        let u = utility(&x);
        if u > best.0 {
            best = (u, x);
        }
    };
    for i in 1..=steps(upper[0]) {
        let x0 = i as f64 * step;
        if n == 2 {
            consider(&[x0]);
        } else {
            for k in 1..=steps(upper[1]) {
                consider(&[x0, k as f64 * step]);
            }
        }
    }
    best.1
}

/// Seeded random instance with the given shape and alpha.
pub fn random_instance(seed: u64, nodes: usize, links: usize, routes: usize, alpha: f64) -> Instance {
    generate_random(&GeneratorParams {
        seed,
        nodes,
        links,
        routes,
        capacity_range: (1.0, 10.0),
        weight_range: (0.5, 2.0),
        alpha,
    })
    .expect("valid generator parameters")
}

/// Random link-to-domain map with every domain `1..=k` used at least once
/// when there are enough links.
pub fn random_domain_map(n_links: usize, k: usize, seed: u64) -> Vec<usize> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut map: Vec<usize> = (0..n_links).map(|_| rng.gen_range(1..=k)).collect();
    for d in 1..=k.min(n_links) {
        map[d - 1] = d;
    }
    map
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
