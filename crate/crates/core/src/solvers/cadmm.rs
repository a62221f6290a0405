//! Centralized ADMM: `x = prox_{lambda g}(z - v)`, `z = P(x + v)`, `v += x - z`,
//! where `P` is the Euclidean projection onto the whole capacity polyhedron.

use crate::error::Result;
use crate::fairness::{FairnessObjective, PenaltyState};
use crate::instance::{Allocation, Instance};
use crate::projection::{feasible_extract, project_capped_simplex, Polyhedron};

use super::fdadmm::{check_penalty, penalty_step};
use super::Residuals;

#[derive(Debug, Clone, PartialEq)]
pub struct CAdmmState {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    /// Scaled dual `v = lambda u`.
    pub v: Vec<f64>,
    pub z_star: Allocation,
    pub iteration: usize,
    pub penalty: PenaltyState,
}

/// Per-link projections of `z` followed by the per-route minimum, so the
/// reported point is exactly feasible even though `z` is only projected to
/// within the Dykstra tolerance.
pub fn extract_feasible(polyhedron: &Polyhedron, capacities: &[f64], z: &[f64]) -> Allocation {
    let copies: Vec<Vec<f64>> = polyhedron
        .link_routes()
        .iter()
        .zip(capacities)
        .map(|(routes, &c)| {
            let y: Vec<f64> = routes.iter().map(|&r| z[r]).collect();
            let mut out = vec![0.0; y.len()];
            project_capped_simplex(&y, c, &mut out);
            out
        })
        .collect();
    feasible_extract(z.len(), polyhedron.link_routes(), &copies)
}

/// One C-ADMM iteration with a fixed reciprocal penalty.
pub fn cadmm_step(
    state: &mut CAdmmState,
    polyhedron: &Polyhedron,
    objective: &FairnessObjective,
    lambda: f64,
    projection_tol: f64,
    projection_cycles: usize,
) -> Result<Residuals> {
    for r in 0..state.x.len() {
        state.x[r] = objective.prox(r, state.z[r] - state.v[r], lambda)?;
    }
    let shifted: Vec<f64> = state.x.iter().zip(&state.v).map(|(x, v)| x + v).collect();
    let (z, _) = polyhedron.project(&shifted, projection_tol, projection_cycles)?;
    let dual = z.iter().zip(&state.z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    state.z = z;
    let mut primal: f64 = 0.0;
    for ((v, x), z) in state.v.iter_mut().zip(&state.x).zip(&state.z) {
        *v += x - z;
        primal = primal.max((x - z).abs());
    }
    state.iteration += 1;
    Ok(Residuals { primal, dual })
}

#[derive(Debug, Clone)]
pub struct CAdmm {
    polyhedron: Polyhedron,
    capacities: Vec<f64>,
    bottlenecks: Vec<f64>,
    objective: FairnessObjective,
    state: CAdmmState,
    projection_tol: f64,
    projection_cycles: usize,
}

impl CAdmm {
    pub fn new(
        instance: &Instance,
        objective: FairnessObjective,
        penalty: PenaltyState,
        projection_tol: f64,
        projection_cycles: usize,
    ) -> Result<Self> {
        check_penalty(&objective, &penalty)?;
        let polyhedron = Polyhedron::new(instance);
        let capacities = instance.capacities();
        // same equal-split start as the distributed variant
        let split: Vec<Vec<f64>> = polyhedron
            .link_routes()
            .iter()
            .zip(&capacities)
            .map(|(routes, &c)| vec![c / routes.len() as f64; routes.len()])
            .collect();
        let z_star = feasible_extract(instance.n_routes(), polyhedron.link_routes(), &split);
        let state = CAdmmState {
            x: z_star.0.clone(),
            z: z_star.0.clone(),
            v: vec![0.0; instance.n_routes()],
            z_star,
            iteration: 0,
            penalty,
        };
        Ok(CAdmm {
            polyhedron,
            capacities,
            bottlenecks: instance.bottlenecks(),
            objective,
            state,
            projection_tol,
            projection_cycles,
        })
    }

    pub fn state(&self) -> &CAdmmState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut CAdmmState {
        &mut self.state
    }

    pub fn allocation(&self) -> &Allocation {
        &self.state.z_star
    }

    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        self.objective = FairnessObjective::new(self.objective.alpha, weights.to_vec())?;
        Ok(())
    }

    pub fn step(&mut self) -> Result<Residuals> {
        let st = &mut self.state;
        let (penalty, rescale) =
            penalty_step(st.penalty, st.iteration, &st.z_star, &self.objective, &self.bottlenecks)?;
        if let Some(f) = rescale {
            st.v.iter_mut().for_each(|v| *v *= f);
        }
        st.penalty = penalty;
        let res = cadmm_step(
            st,
            &self.polyhedron,
            &self.objective,
            penalty.lambda,
            self.projection_tol,
            self.projection_cycles,
        )?;
        st.z_star = extract_feasible(&self.polyhedron, &self.capacities, &st.z);
        Ok(res)
    }
}
