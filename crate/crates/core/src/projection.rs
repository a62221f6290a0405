//! Euclidean projections onto capacity sets.
//!
//! The per-link set is `S_j = {y >= 0 : sum_{r in R_j} y_r <= C_j}`, a capped
//! simplex, projected exactly by sort-and-threshold in `O(q log q)`. The full
//! polyhedron `{x >= 0, Ax <= C}` is handled by Dykstra's alternating
//! projections over all `S_j` and the nonnegative orthant.
//!
//! Outputs of [`project_capped_simplex`] satisfy the capacity constraint
//! exactly in floating point when summed in slice order, which is what makes
//! the feasible extract feasible without any tolerance.

use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};

/// Capacity set of a single link over its member routes (ascending ids).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSet {
    pub link: usize,
    pub routes: Vec<usize>,
    pub capacity: f64,
}

impl LinkSet {
    pub fn of(instance: &Instance, link: usize) -> Self {
        LinkSet {
            link,
            routes: instance.link_routes().swap_remove(link),
            capacity: instance.links[link].capacity,
        }
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.iter().all(|v| *v >= 0.0) && y.iter().sum::<f64>() <= self.capacity
    }

    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        project_capped_simplex(y, self.capacity, &mut out);
        out
    }
}

/// Writes the projection of `y` onto `{x >= 0, sum x <= capacity}` into `out`.
pub fn project_capped_simplex(y: &[f64], capacity: f64, out: &mut [f64]) {
    debug_assert_eq!(y.len(), out.len());
    for (o, &v) in out.iter_mut().zip(y) {
        *o = v.max(0.0);
    }
    let total: f64 = out.iter().sum();
    if total <= capacity {
        return;
    }
    // Active face: x_r = max(y_r - theta, 0) with sum x = capacity.
    let mut sorted: Vec<f64> = out.to_vec();
    // stable sort keeps equal values in route order
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - capacity) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    for o in out.iter_mut() {
        *o = (*o - theta).max(0.0);
    }
    enforce_budget(out, capacity);
}

/// Shrinks `x` until its in-order sum is at most `capacity`; absorbs the last-ulp
/// rounding of the threshold step.
fn enforce_budget(x: &mut [f64], capacity: f64) {
    let mut total: f64 = x.iter().sum();
    while total > capacity {
        let factor = (capacity / total).min(1.0 - f64::EPSILON);
        for v in x.iter_mut() {
            *v *= factor;
        }
        total = x.iter().sum();
    }
}

/// Per-route minimum of the per-link copies: `z_*r = min_{j in r} z_jr`.
///
/// If every `z_j` lies in `S_j`, the result is feasible.
pub fn feasible_extract(n_routes: usize, link_routes: &[Vec<usize>], z_links: &[Vec<f64>]) -> Allocation {
    let mut z = vec![f64::INFINITY; n_routes];
    for (routes, copies) in link_routes.iter().zip(z_links) {
        for (&r, &v) in routes.iter().zip(copies) {
            z[r] = z[r].min(v);
        }
    }
    for v in &mut z {
        if *v == f64::INFINITY {
            *v = 0.0;
        }
    }
    Allocation(z)
}

/// The capacity polyhedron `{x >= 0, Ax <= C}` prepared for repeated projection.
#[derive(Debug, Clone)]
pub struct Polyhedron {
    n_routes: usize,
    link_routes: Vec<Vec<usize>>,
    capacities: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DykstraReport {
    pub cycles: usize,
    pub residual: f64,
}

impl Polyhedron {
    pub fn new(instance: &Instance) -> Self {
        Polyhedron {
            n_routes: instance.n_routes(),
            link_routes: instance.link_routes(),
            capacities: instance.capacities(),
        }
    }

    pub fn link_routes(&self) -> &[Vec<usize>] {
        &self.link_routes
    }

    /// Dykstra's method cycling over every `S_j` and then the orthant.
    ///
    /// Stops when a full cycle moves neither the iterate nor the correction
    /// terms by more than `tolerance` (Euclidean norm).
    pub fn project(&self, y: &[f64], tolerance: f64, max_cycles: usize) -> Result<(Vec<f64>, DykstraReport)> {
        if !(tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be > 0, got {tolerance}"
            )));
        }
        let mut x = y.to_vec();
        let mut corrections: Vec<Vec<f64>> = self.link_routes.iter().map(|r| vec![0.0; r.len()]).collect();
        let mut orthant_correction = vec![0.0; self.n_routes];
        let max_dim = self.link_routes.iter().map(Vec::len).max().unwrap_or(0);
        let mut shifted = vec![0.0; max_dim];
        let mut projected = vec![0.0; max_dim];
        let mut residual = f64::INFINITY;
        for cycle in 1..=max_cycles {
            let start = x.clone();
            let mut correction_change = 0.0;
            for ((routes, p), &cap) in self.link_routes.iter().zip(&mut corrections).zip(&self.capacities) {
                let q = routes.len();
                for (k, &r) in routes.iter().enumerate() {
                    shifted[k] = x[r] + p[k];
                }
                project_capped_simplex(&shifted[..q], cap, &mut projected[..q]);
                for (k, &r) in routes.iter().enumerate() {
                    let new_p = shifted[k] - projected[k];
                    correction_change += (new_p - p[k]).powi(2);
                    p[k] = new_p;
                    x[r] = projected[k];
                }
            }
            for (xr, p) in x.iter_mut().zip(&mut orthant_correction) {
                let s = *xr + *p;
                let proj = s.max(0.0);
                let new_p = s - proj;
                correction_change += (new_p - *p).powi(2);
                *p = new_p;
                *xr = proj;
            }
            let moved: f64 = x.iter().zip(&start).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            residual = moved.max(correction_change.sqrt());
            if residual <= tolerance {
                return Ok((
                    x,
                    DykstraReport {
                        cycles: cycle,
                        residual,
                    },
                ));
            }
        }
        Err(Error::ProjectionCap {
            iterations: max_cycles,
            residual,
            last_iterate: x,
        })
    }
}

/// Projection onto `{x >= 0, Ax <= C}` to within `tolerance`.
pub fn project_polyhedron(instance: &Instance, y: &[f64], tolerance: f64) -> Result<Vec<f64>> {
    Polyhedron::new(instance)
        .project(y, tolerance, DEFAULT_DYKSTRA_CYCLES)
        .map(|(x, _)| x)
}

pub const DEFAULT_DYKSTRA_CYCLES: usize = 1_000_000;
