//! Alpha-fair utilities and the per-route operators built on them.
//!
//! Route `r` has utility `f_r(x) = w_r x^(1-alpha) / (1-alpha)` (or
//! `w_r log x` when `alpha == 1`); the solvers minimise the convex cost
//! `g_r = -f_r`. This module provides the proximal operator of `lambda g_r`,
//! the strong-convexity and gradient-Lipschitz moduli of `g` on the box
//! `x >= d`, and the reciprocal penalty rule derived from them.

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Newton/bisection steps allowed in the general-alpha prox.
const PROX_MAX_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct FairnessObjective {
    pub alpha: f64,
    pub weights: Vec<f64>,
}

impl FairnessObjective {
    pub fn new(alpha: f64, weights: Vec<f64>) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {alpha}")));
        }
        if let Some(r) = weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "weight of route {r} must be positive, got {}",
                weights[r]
            )));
        }
        Ok(FairnessObjective { alpha, weights })
    }

    pub fn from_instance(instance: &Instance) -> Self {
        FairnessObjective {
            alpha: instance.alpha,
            weights: instance.weights(),
        }
    }

    pub fn n_routes(&self) -> usize {
        self.weights.len()
    }

    /// `f_r(x)`; `-inf` at `x = 0` when `alpha >= 1`.
    pub fn route_utility(&self, r: usize, x: f64) -> f64 {
        let w = self.weights[r];
        if self.alpha == 1.0 {
            w * x.ln()
        } else {
            let e = 1.0 - self.alpha;
            w * x.powf(e) / e
        }
    }

    /// `f(x) = sum_r f_r(x_r)`.
    pub fn utility(&self, x: &[f64]) -> f64 {
        x.iter().enumerate().map(|(r, &xr)| self.route_utility(r, xr)).sum()
    }

    /// Derivative of the cost `g_r = -f_r`, i.e. `-w_r x^-alpha`.
    pub fn cost_derivative(&self, r: usize, x: f64) -> f64 {
        -self.weights[r] * x.powf(-self.alpha)
    }

    /// `prox_{lambda g_r}(v) = argmin_x g_r(x) + (x - v)^2 / (2 lambda)`.
    pub fn prox(&self, r: usize, v: f64, lambda: f64) -> Result<f64> {
        prox_alpha_fair(self.alpha, self.weights[r], v, lambda)
    }
}

/// Proximal operator of `lambda g` for a single alpha-fair cost with weight `w`.
///
/// The minimiser solves `x^alpha (x - v) = lambda w` on `x > max(v, 0)`.
/// `alpha` 0 and 1 have closed forms; otherwise a safeguarded Newton
/// iteration runs on `h(x) = x - v - lambda w x^-alpha`, which is increasing
/// and concave, with bisection whenever a step leaves the bracket.
pub fn prox_alpha_fair(alpha: f64, w: f64, v: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
    }
    let c = lambda * w;
    if alpha == 0.0 {
        return Ok((v + c).max(0.0));
    }
    if alpha == 1.0 {
        let disc = (v * v + 4.0 * c).sqrt();
        // rationalised form avoids cancellation when v is very negative
        return Ok(if v >= 0.0 {
            0.5 * (v + disc)
        } else {
            2.0 * c / (disc - v)
        });
    }
    let h = |x: f64| x - v - c * x.powf(-alpha);
    let mut lo = v.max(0.0);
    let mut hi = (v + c).max(1.0);
    while h(hi) < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::ProxDiverged { v, lambda });
        }
    }
    let mut x = hi;
    for _ in 0..PROX_MAX_STEPS {
        let hx = h(x);
        if hx == 0.0 {
            return Ok(x);
        }
        if hx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = 1.0 + alpha * c * x.powf(-alpha - 1.0);
        let mut next = x - hx / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 2.0 * f64::EPSILON * next || hi - lo <= 2.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::ProxDiverged { v, lambda })
}

/// Moduli of `g` on `K_d = {x >= d, Ax <= C}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Moduli {
    pub sigma: f64,
    pub lipschitz: f64,
    pub bottlenecks: Vec<f64>,
    pub floor: Vec<f64>,
}

/// `w / b^(alpha+1)`, the per-route factor in both moduli.
pub fn curvature_term(alpha: f64, w: f64, b: f64) -> f64 {
    w / b.powf(alpha + 1.0)
}

/// `sigma = alpha min_r w_r / B_r^(alpha+1)` and `L_d = alpha max_r w_r / d_r^(alpha+1)`.
pub fn moduli(instance: &Instance, objective: &FairnessObjective, floor: &[f64]) -> Result<Moduli> {
    Moduli::from_bottlenecks(objective, &instance.bottlenecks(), floor)
}

impl Moduli {
    pub fn from_bottlenecks(objective: &FairnessObjective, bottlenecks: &[f64], floor: &[f64]) -> Result<Self> {
        let alpha = objective.alpha;
        if alpha == 0.0 {
            return Err(Error::Unsupported(
                "alpha = 0 is not strongly convex, moduli are zero".into(),
            ));
        }
        if objective.weights.is_empty() {
            return Err(Error::InvalidArgument("moduli need at least one route".into()));
        }
        if let Some(r) = floor.iter().position(|d| !(*d > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "disagreement point must be positive, route {r} has {}",
                floor[r]
            )));
        }
        let (min_term, max_term) = extreme_terms(alpha, &objective.weights, bottlenecks, floor);
        Ok(Moduli {
            sigma: alpha * min_term,
            lipschitz: alpha * max_term,
            bottlenecks: bottlenecks.to_vec(),
            floor: floor.to_vec(),
        })
    }
}

/// `(min_r w_r / B_r^(alpha+1), max_r w_r / d_r^(alpha+1))`.
pub fn extreme_terms(alpha: f64, weights: &[f64], bottlenecks: &[f64], floor: &[f64]) -> (f64, f64) {
    let min_term = weights
        .iter()
        .zip(bottlenecks)
        .map(|(&w, &b)| curvature_term(alpha, w, b))
        .fold(f64::INFINITY, f64::min);
    let max_term = weights
        .iter()
        .zip(floor)
        .map(|(&w, &d)| curvature_term(alpha, w, d))
        .fold(f64::NEG_INFINITY, f64::max);
    (min_term, max_term)
}

/// `lambda_* = (sigma L)^(-1/2)`; the constraint matrix of `x - z = 0` is the identity.
pub fn optimal_lambda(moduli: &Moduli) -> f64 {
    lambda_from_moduli(moduli.sigma, moduli.lipschitz)
}

pub fn lambda_from_moduli(sigma: f64, lipschitz: f64) -> f64 {
    1.0 / (sigma * lipschitz).sqrt()
}

/// Reciprocal penalty `lambda` and its adaptation schedule.
///
/// While `iteration < tau` the value is recomputed from the latest feasible
/// point; afterwards it is frozen for good.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyState {
    pub lambda: f64,
    pub tau: usize,
    pub frozen: bool,
}

pub const DEFAULT_TAU: usize = 30;

impl PenaltyState {
    pub fn fixed(lambda: f64) -> Self {
        PenaltyState {
            lambda,
            tau: 0,
            frozen: true,
        }
    }

    pub fn adaptive(tau: usize) -> Self {
        PenaltyState {
            lambda: 1.0,
            tau,
            frozen: tau == 0,
        }
    }
}

/// One step of the reciprocal penalty schedule.
///
/// Below `tau`, `lambda = (1/alpha) (min_r w_r/B_r^(alpha+1) * max_r w_r/p_r^(alpha+1))^(-1/2)`,
/// evaluated as `(sigma L)^(-1/2)` with the floor set to `p`. A feasible point
/// with a zero entry leaves the state untouched.
pub fn adapt_penalty(
    state: PenaltyState,
    iteration: usize,
    feasible: &[f64],
    objective: &FairnessObjective,
    bottlenecks: &[f64],
) -> Result<PenaltyState> {
    if state.frozen || iteration >= state.tau {
        return Ok(PenaltyState { frozen: true, ..state });
    }
    if objective.alpha == 0.0 {
        return Err(Error::Unsupported("adaptive penalty requires alpha > 0".into()));
    }
    if feasible.iter().any(|p| !(*p > 0.0)) {
        return Ok(state);
    }
    let m = Moduli::from_bottlenecks(objective, bottlenecks, feasible)?;
    Ok(PenaltyState {
        lambda: optimal_lambda(&m),
        ..state
    })
}
