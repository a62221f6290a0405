//! Dual price baseline: each route best-responds to the sum of its link
//! prices, then prices move multiplicatively with the link's excess load.

use crate::error::{Error, Result};
use crate::fairness::FairnessObjective;
use crate::instance::Instance;

#[derive(Debug, Clone, PartialEq)]
pub struct LagrState {
    pub x: Vec<f64>,
    /// Link prices, kept strictly positive.
    pub u: Vec<f64>,
}

impl LagrState {
    pub fn new(instance: &Instance, initial_price: f64) -> Result<Self> {
        if !(initial_price > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "initial link prices must be positive, got {initial_price}"
            )));
        }
        Ok(LagrState {
            x: vec![0.0; instance.n_routes()],
            u: vec![initial_price; instance.n_links()],
        })
    }
}

/// `argmax_{x >= 0} f_r(x) - x * price`.
pub fn best_response(alpha: f64, w: f64, price: f64) -> Result<f64> {
    if alpha == 0.0 {
        return if price > w {
            Ok(0.0)
        } else {
            Err(Error::Unsupported(format!(
                "linear utility with weight {w} against price {price} has no bounded maximiser"
            )))
        };
    }
    Ok((w / price).powf(1.0 / alpha))
}

/// One LAGR iteration: `x_r = (w_r / sum_{j in r} u_j)^(1/alpha)`, then
/// `u_j -= u_j / (2 C_j) * (C_j - sum_{r in j} x_r)`.
pub fn lagr_step(state: &mut LagrState, instance: &Instance, objective: &FairnessObjective) -> Result<()> {
    for (route, x) in instance.routes.iter().zip(state.x.iter_mut()) {
        let price: f64 = route.links.iter().map(|&j| state.u[j]).sum();
        *x = best_response(objective.alpha, objective.weights[route.id], price)?;
    }
    let loads = instance.link_loads(&state.x);
    for ((u, link), load) in state.u.iter_mut().zip(&instance.links).zip(loads) {
        let c = link.capacity;
        *u -= *u / (2.0 * c) * (c - load);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationarity() {
        assert_eq!(best_response(1.0, 1.0, 2.0).unwrap(), 0.5);
        assert_eq!(best_response(0.0, 1.0, 2.0).unwrap(), 0.0);
        assert!(best_response(0.0, 2.0, 1.0).is_err());
    }

    fn one_link(load_weight: f64) -> (Instance, FairnessObjective) {
        let inst = Instance::from_parts(1.0, &[10.0], &[(&[0], load_weight)]).unwrap();
        let obj = FairnessObjective::from_instance(&inst);
        (inst, obj)
    }

    #[test]
    fn equilibrium_price_is_kept() {
        // x = w / u = 10 = C
        let (inst, obj) = one_link(10.0);
        let mut st = LagrState::new(&inst, 1.0).unwrap();
        lagr_step(&mut st, &inst, &obj).unwrap();
        assert_eq!(st.x, vec![10.0]);
        assert_eq!(st.u, vec![1.0]);
    }

    #[test]
    fn idle_link_halves_price() {
        let (inst, _) = one_link(1.0);
        // a vanishing weight makes the load effectively zero
        let obj = FairnessObjective::new(1.0, vec![1e-300]).unwrap();
        let mut st = LagrState::new(&inst, 1.0).unwrap();
        lagr_step(&mut st, &inst, &obj).unwrap();
        assert_eq!(st.u, vec![0.5]);
    }

    #[test]
    fn prices_stay_positive() {
        let inst = Instance::from_parts(1.0, &[1.0, 0.5], &[(&[0, 1], 5.0), (&[1], 0.1)]).unwrap();
        let obj = FairnessObjective::from_instance(&inst);
        let mut st = LagrState::new(&inst, 1e-3).unwrap();
        for _ in 0..500 {
            lagr_step(&mut st, &inst, &obj).unwrap();
            assert!(st.u.iter().all(|u| *u > 0.0));
        }
    }
}
