//! Fast distributed ADMM in consensus form, executed monolithically.
//!
//! Every link `j` keeps a copy `z_j` of the allocation restricted to the
//! routes through it, with scaled dual `u_j`; index 0 holds the route-level
//! variable `z_0` and its dual `u_0`. One round is
//!
//! 1. `z~_r = (sum_{q in I_r} z_qr + z_0r) / (|J_r| + 1)`,
//! 2. per link `u_j += z_j - z~`, `z_j = proj_{S_j}(z~ - u_j)`,
//! 3. `u_0 += z_0 - z~`, `z_0r = prox_{lambda g_r}(z~_r - u_0r)`,
//! 4. `z_*r = min_{j in r} z_jr`, feasible by construction.
//!
//! Reductions follow the domain structure of the partition (links ascending
//! inside a domain, domains ascending) so that the message-passing simulator
//! reproduces this computation bit for bit.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fairness::{adapt_penalty, FairnessObjective, PenaltyState};
use crate::instance::{Allocation, Instance, Partition};
use crate::projection::{feasible_extract, project_capped_simplex};

use super::Residuals;

/// Position of route `r` inside link `link`'s copy vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub link: usize,
    pub pos: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSlots {
    pub domain: usize,
    pub slots: Vec<Slot>,
}

/// Index structures shared by the monolithic solver and the simulator.
#[derive(Debug, Clone)]
pub struct Layout {
    pub n_routes: usize,
    pub capacities: Vec<f64>,
    /// `R_j`, ascending route ids.
    pub link_routes: Vec<Vec<usize>>,
    /// `|J_r|`.
    pub route_degree: Vec<usize>,
    /// Copies of each route grouped by domain (ascending), links ascending within a group.
    pub route_groups: Vec<Vec<DomainSlots>>,
    pub bottlenecks: Vec<f64>,
    pub partition: Partition,
}

impl Layout {
    pub fn new(instance: &Instance, partition: &Partition) -> Self {
        let link_routes = instance.link_routes();
        let mut route_groups: Vec<Vec<DomainSlots>> = vec![Vec::new(); instance.n_routes()];
        let mut pos_of: Vec<Vec<Slot>> = vec![Vec::new(); instance.n_routes()];
        for (link, routes) in link_routes.iter().enumerate() {
            for (pos, &r) in routes.iter().enumerate() {
                pos_of[r].push(Slot { link, pos });
            }
        }
        for (r, slots) in pos_of.into_iter().enumerate() {
            // slots are already in ascending link order
            for &p in &partition.domains_of(r)[1..] {
                let in_domain: Vec<Slot> = slots
                    .iter()
                    .copied()
                    .filter(|s| partition.domain_of_link(s.link) == p)
                    .collect();
                route_groups[r].push(DomainSlots {
                    domain: p,
                    slots: in_domain,
                });
            }
        }
        Layout {
            n_routes: instance.n_routes(),
            capacities: instance.capacities(),
            route_degree: instance.route_links().iter().map(Vec::len).collect(),
            link_routes,
            route_groups,
            bottlenecks: instance.bottlenecks(),
            partition: partition.clone(),
        }
    }
}

/// Consensus average of domain partial sums and the route-level copy.
pub fn consensus_value(partials: impl IntoIterator<Item = f64>, z0: f64, degree: usize) -> f64 {
    let mut total = 0.0;
    for p in partials {
        total += p;
    }
    (total + z0) / (degree + 1) as f64
}

/// Sum of copies in slice order, starting from zero.
pub fn partial_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0;
    for v in values {
        s += v;
    }
    s
}

/// Dual step and projection for one link: `u_j += z_j - z~`, `z_j = P_j(z~ - u_j)`.
pub fn link_update(
    routes: &[usize],
    capacity: f64,
    z: &mut [f64],
    u: &mut [f64],
    z_tilde: impl Fn(usize) -> f64,
    scratch: &mut Vec<f64>,
) {
    scratch.clear();
    for ((&r, zr), ur) in routes.iter().zip(z.iter()).zip(u.iter_mut()) {
        let t = z_tilde(r);
        *ur += *zr - t;
        scratch.push(t - *ur);
    }
    project_capped_simplex(scratch, capacity, z);
}

/// Dual step and prox for the route-level copy.
pub fn route_update(
    objective: &FairnessObjective,
    r: usize,
    z_tilde: f64,
    z0: &mut f64,
    u0: &mut f64,
    lambda: f64,
) -> Result<()> {
    *u0 += *z0 - z_tilde;
    *z0 = objective.prox(r, z_tilde - *u0, lambda)?;
    Ok(())
}

/// Penalty step shared with the simulator: returns the new state and the
/// factor applied to every scaled dual so the unscaled multipliers persist.
pub fn penalty_step(
    penalty: PenaltyState,
    iteration: usize,
    feasible: &[f64],
    objective: &FairnessObjective,
    bottlenecks: &[f64],
) -> Result<(PenaltyState, Option<f64>)> {
    if penalty.frozen {
        return Ok((penalty, None));
    }
    let next = adapt_penalty(penalty, iteration, feasible, objective, bottlenecks)?;
    let rescale = (next.lambda != penalty.lambda).then(|| next.lambda / penalty.lambda);
    Ok((next, rescale))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdState {
    pub z0: Vec<f64>,
    pub u0: Vec<f64>,
    pub z_tilde: Vec<f64>,
    pub z_links: Vec<Vec<f64>>,
    pub u_links: Vec<Vec<f64>>,
    pub z_star: Allocation,
    pub iteration: usize,
    pub penalty: PenaltyState,
}

impl FdState {
    /// Equal split of every link's capacity, route copies at the per-route
    /// minimum, all duals zero.
    pub fn initial(layout: &Layout, penalty: PenaltyState) -> Self {
        let z_links: Vec<Vec<f64>> = layout
            .link_routes
            .iter()
            .zip(&layout.capacities)
            .map(|(routes, &c)| vec![c / routes.len() as f64; routes.len()])
            .collect();
        let u_links = z_links.iter().map(|z| vec![0.0; z.len()]).collect();
        let z_star = feasible_extract(layout.n_routes, &layout.link_routes, &z_links);
        FdState {
            z0: z_star.0.clone(),
            u0: vec![0.0; layout.n_routes],
            z_tilde: z_star.0.clone(),
            z_links,
            u_links,
            z_star,
            iteration: 0,
            penalty,
        }
    }

    /// `sum_{j in r} u_jr + u_0r` per route; zero when started from zero duals.
    pub fn dual_sums(&self, layout: &Layout) -> Vec<f64> {
        let mut sums = self.u0.clone();
        for (routes, u) in layout.link_routes.iter().zip(&self.u_links) {
            for (&r, &v) in routes.iter().zip(u) {
                sums[r] += v;
            }
        }
        sums
    }
}

pub fn check_penalty(objective: &FairnessObjective, penalty: &PenaltyState) -> Result<()> {
    if !penalty.frozen && objective.alpha == 0.0 {
        return Err(Error::Unsupported(
            "adaptive penalty is undefined for alpha = 0, pass an explicit lambda".into(),
        ));
    }
    if !(penalty.lambda > 0.0 && penalty.lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be > 0, got {}",
            penalty.lambda
        )));
    }
    Ok(())
}

/// Monolithic FD-ADMM driver.
#[derive(Debug, Clone)]
pub struct FdAdmm {
    layout: Layout,
    objective: FairnessObjective,
    state: FdState,
    parallel: bool,
}

impl FdAdmm {
    pub fn new(
        instance: &Instance,
        partition: &Partition,
        objective: FairnessObjective,
        penalty: PenaltyState,
    ) -> Result<Self> {
        check_penalty(&objective, &penalty)?;
        let layout = Layout::new(instance, partition);
        let state = FdState::initial(&layout, penalty);
        Ok(FdAdmm {
            layout,
            objective,
            state,
            parallel: false,
        })
    }

    /// Runs link updates on the rayon pool; results are identical either way.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn state(&self) -> &FdState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut FdState {
        &mut self.state
    }

    pub fn objective(&self) -> &FairnessObjective {
        &self.objective
    }

    pub fn allocation(&self) -> &Allocation {
        &self.state.z_star
    }

    /// Swaps route weights, keeping the iterates warm.
    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        self.objective = FairnessObjective::new(self.objective.alpha, weights.to_vec())?;
        Ok(())
    }

    /// One synchronous round over all domains.
    pub fn round(&mut self) -> Result<Residuals> {
        let layout = &self.layout;
        let st = &mut self.state;

        let (penalty, rescale) = penalty_step(
            st.penalty,
            st.iteration,
            &st.z_star,
            &self.objective,
            &layout.bottlenecks,
        )?;
        if let Some(f) = rescale {
            for u in st.u_links.iter_mut().flatten().chain(st.u0.iter_mut()) {
                *u *= f;
            }
        }
        st.penalty = penalty;
        let lambda = penalty.lambda;

        let previous = std::mem::take(&mut st.z_tilde);
        let z_links = &st.z_links;
        st.z_tilde = (0..layout.n_routes)
            .map(|r| {
                let partials = layout.route_groups[r]
                    .iter()
                    .map(|g| partial_sum(g.slots.iter().map(|s| z_links[s.link][s.pos])));
                consensus_value(partials, st.z0[r], layout.route_degree[r])
            })
            .collect();

        let z_tilde = &st.z_tilde;
        if self.parallel {
            st.z_links
                .par_iter_mut()
                .zip(st.u_links.par_iter_mut())
                .zip(layout.link_routes.par_iter())
                .zip(layout.capacities.par_iter())
                .for_each_init(Vec::new, |scratch, (((z, u), routes), &cap)| {
                    link_update(routes, cap, z, u, |r| z_tilde[r], scratch);
                });
        } else {
            let mut scratch = Vec::new();
            for (((z, u), routes), &cap) in st
                .z_links
                .iter_mut()
                .zip(st.u_links.iter_mut())
                .zip(&layout.link_routes)
                .zip(&layout.capacities)
            {
                link_update(routes, cap, z, u, |r| z_tilde[r], &mut scratch);
            }
        }

        for r in 0..layout.n_routes {
            route_update(&self.objective, r, st.z_tilde[r], &mut st.z0[r], &mut st.u0[r], lambda)?;
        }

        st.z_star = feasible_extract(layout.n_routes, &layout.link_routes, &st.z_links);
        st.iteration += 1;

        // consensus accuracy over every copy, the route-level one included
        let mut primal: f64 = st
            .z0
            .iter()
            .zip(&st.z_tilde)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        for (routes, z) in layout.link_routes.iter().zip(&st.z_links) {
            for (&r, &v) in routes.iter().zip(z) {
                primal = primal.max((v - st.z_tilde[r]).abs());
            }
        }
        let dual = st
            .z_tilde
            .iter()
            .zip(&previous)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok(Residuals { primal, dual })
    }
}
