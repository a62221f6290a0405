//! In-process simulation of the distributed control plane.
//!
//! Each [`ControllerNode`] owns the links of one domain and only knows the
//! routes crossing them. Rounds are synchronous: every node receives the
//! previous round's [`RouteMessage`]s, enforces the feasible minimum,
//! recomputes the consensus values, updates its link copies and its replica
//! of the route-level variable, and sends one message per shared route to
//! each peer domain on that route. Delivery is reliable and in order.
//!
//! The reciprocal penalty schedule needs two global scalars (a min and a max
//! over routes); nodes contribute their local extremes and the simulation
//! combines them before the update phase. These scalars are not counted as
//! route traffic.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fairness::{curvature_term, lambda_from_moduli, prox_alpha_fair, FairnessObjective, PenaltyState};
use crate::instance::{Allocation, Instance, Partition};
use crate::projection::feasible_extract;
use crate::solvers::fdadmm::{check_penalty, consensus_value, link_update, partial_sum, FdState, Layout};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteMessage {
    pub route: usize,
    pub from: usize,
    pub to: usize,
    /// `z_pr = sum_{j in J_r ∩ J_p} z_jr`.
    pub z: f64,
    /// `z_*pr = min_{j in J_r ∩ J_p} z_jr`.
    pub z_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MessageLogEntry {
    pub round: usize,
    pub route: usize,
    pub from: usize,
    pub to: usize,
    pub z: f64,
    pub z_star: f64,
}

#[derive(Debug, Clone)]
struct OwnedLink {
    id: usize,
    capacity: f64,
    /// Indices into the node's route table, ascending global route id.
    local_routes: Vec<usize>,
    z: Vec<f64>,
    u: Vec<f64>,
}

#[derive(Debug, Clone)]
struct KnownRoute {
    id: usize,
    weight: f64,
    bottleneck: f64,
    degree: usize,
    /// `I_r` without index 0.
    domains: Vec<usize>,
    /// `(owned link index, position)` in ascending link id.
    slots: Vec<(usize, usize)>,
    z0: f64,
    u0: f64,
    z_tilde: f64,
    z_star: f64,
    partials: Vec<f64>,
}

/// One domain controller.
#[derive(Debug, Clone)]
pub struct ControllerNode {
    domain: usize,
    alpha: f64,
    links: Vec<OwnedLink>,
    routes: Vec<KnownRoute>,
    route_index: BTreeMap<usize, usize>,
    inbox: Vec<RouteMessage>,
}

impl ControllerNode {
    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn owned_links(&self) -> Vec<usize> {
        self.links.iter().map(|l| l.id).collect()
    }

    pub fn known_routes(&self) -> Vec<usize> {
        self.routes.iter().map(|r| r.id).collect()
    }

    /// Every route id this node's state refers to, including those inside link copies.
    pub fn referenced_routes(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .links
            .iter()
            .flat_map(|l| l.local_routes.iter().map(|&k| self.routes[k].id))
            .chain(self.routes.iter().map(|r| r.id))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn weight(&self, route: usize) -> Option<f64> {
        self.route_index.get(&route).map(|&k| self.routes[k].weight)
    }

    fn own_summary(&self, k: usize) -> (f64, f64) {
        let route = &self.routes[k];
        let z = partial_sum(route.slots.iter().map(|&(l, pos)| self.links[l].z[pos]));
        let z_star = route
            .slots
            .iter()
            .map(|&(l, pos)| self.links[l].z[pos])
            .fold(f64::INFINITY, f64::min);
        (z, z_star)
    }

    /// Receive and enforce: gathers every peer's partial sum and feasible
    /// value for each known route.
    fn receive(&mut self, round: usize) -> Result<()> {
        let mut by_key: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
        for m in self.inbox.drain(..) {
            by_key.insert((m.route, m.from), (m.z, m.z_star));
        }
        for k in 0..self.routes.len() {
            let (own_z, own_star) = self.own_summary(k);
            let route = &self.routes[k];
            let mut partials = Vec::with_capacity(route.domains.len());
            let mut z_star = f64::INFINITY;
            for &q in &route.domains {
                let (z, s) = if q == self.domain {
                    (own_z, own_star)
                } else {
                    *by_key.get(&(route.id, q)).ok_or(Error::Protocol {
                        round,
                        route: route.id,
                        from: q,
                        to: self.domain,
                    })?
                };
                partials.push(z);
                z_star = z_star.min(s);
            }
            let route = &mut self.routes[k];
            route.partials = partials;
            route.z_star = z_star;
        }
        Ok(())
    }

    /// Local `(min_r w_r / B_r^(a+1), max_r w_r / z*_r^(a+1), some z*_r <= 0)`.
    fn penalty_terms(&self) -> (f64, f64, bool) {
        let mut min_term = f64::INFINITY;
        let mut max_term = f64::NEG_INFINITY;
        let mut degenerate = false;
        for r in &self.routes {
            min_term = min_term.min(curvature_term(self.alpha, r.weight, r.bottleneck));
            max_term = max_term.max(curvature_term(self.alpha, r.weight, r.z_star));
            degenerate |= !(r.z_star > 0.0);
        }
        (min_term, max_term, degenerate)
    }

    fn rescale_duals(&mut self, factor: f64) {
        for link in &mut self.links {
            link.u.iter_mut().for_each(|u| *u *= factor);
        }
        for r in &mut self.routes {
            r.u0 *= factor;
        }
    }

    fn update(&mut self, lambda: f64) -> Result<()> {
        for r in &mut self.routes {
            r.z_tilde = consensus_value(r.partials.iter().copied(), r.z0, r.degree);
        }
        let routes = &self.routes;
        let mut scratch = Vec::new();
        for link in &mut self.links {
            link_update(
                &link.local_routes,
                link.capacity,
                &mut link.z,
                &mut link.u,
                |k| routes[k].z_tilde,
                &mut scratch,
            );
        }
        for r in &mut self.routes {
            r.u0 += r.z0 - r.z_tilde;
            r.z0 = prox_alpha_fair(self.alpha, r.weight, r.z_tilde - r.u0, lambda)?;
        }
        Ok(())
    }

    fn send(&self) -> Vec<RouteMessage> {
        let mut out = Vec::new();
        for k in 0..self.routes.len() {
            let (z, z_star) = self.own_summary(k);
            let route = &self.routes[k];
            for &q in route.domains.iter().filter(|&&q| q != self.domain) {
                out.push(RouteMessage {
                    route: route.id,
                    from: self.domain,
                    to: q,
                    z,
                    z_star,
                });
            }
        }
        out
    }
}

/// Per-round float counts per ordered domain pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OverheadMeter {
    n_domains: usize,
    /// `rounds[k][from - 1][to - 1]`.
    rounds: Vec<Vec<Vec<u64>>>,
}

impl OverheadMeter {
    pub fn new(n_domains: usize) -> Self {
        OverheadMeter {
            n_domains,
            rounds: Vec::new(),
        }
    }

    fn record(&mut self, messages: &[RouteMessage]) {
        let mut counts = vec![vec![0u64; self.n_domains]; self.n_domains];
        for m in messages {
            counts[m.from - 1][m.to - 1] += 2;
        }
        self.rounds.push(counts);
    }

    pub fn rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn round(&self, k: usize) -> &[Vec<u64>] {
        &self.rounds[k]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverheadReport {
    pub rounds: usize,
    /// Totals over all rounds, `[from - 1][to - 1]`.
    pub per_pair: Vec<Vec<u64>>,
    /// Totals sent by each domain over all rounds.
    pub per_domain: Vec<u64>,
    pub total: u64,
    /// `2 sum_{q != p} |R_p ∩ R_q|` for each domain.
    pub predicted_per_round: Vec<u64>,
    /// Every round matched the prediction exactly.
    pub matches_prediction: bool,
}

pub fn measure_overhead(meter: &OverheadMeter, partition: &Partition) -> OverheadReport {
    let n = meter.n_domains;
    let predicted: Vec<u64> = (1..=n).map(|p| partition.consensus_floats_from(p)).collect();
    let mut per_pair = vec![vec![0u64; n]; n];
    let mut matches = true;
    for round in &meter.rounds {
        for (p, row) in round.iter().enumerate() {
            let sent: u64 = row.iter().sum();
            matches &= sent == predicted[p];
            for (q, &c) in row.iter().enumerate() {
                per_pair[p][q] += c;
            }
        }
    }
    let per_domain: Vec<u64> = per_pair.iter().map(|row| row.iter().sum()).collect();
    OverheadReport {
        rounds: meter.rounds.len(),
        total: per_domain.iter().sum(),
        per_pair,
        per_domain,
        predicted_per_round: predicted,
        matches_prediction: matches,
    }
}

/// A synchronous multi-controller run.
#[derive(Debug, Clone)]
pub struct Simulation {
    nodes: Vec<ControllerNode>,
    layout: Layout,
    penalty: PenaltyState,
    iteration: usize,
    in_flight: Vec<RouteMessage>,
    meter: OverheadMeter,
    log: Option<Vec<MessageLogEntry>>,
    parallel: bool,
}

impl Simulation {
    pub fn new(
        instance: &Instance,
        partition: &Partition,
        objective: &FairnessObjective,
        penalty: PenaltyState,
    ) -> Result<Self> {
        let layout = Layout::new(instance, partition);
        let state = FdState::initial(&layout, penalty);
        Simulation::from_state(instance, partition, objective, &state)
    }

    /// Splits a global FD-ADMM state across controllers. The first inboxes are
    /// seeded from the state's link copies, as if sent before round 0.
    pub fn from_state(
        instance: &Instance,
        partition: &Partition,
        objective: &FairnessObjective,
        state: &FdState,
    ) -> Result<Self> {
        check_penalty(objective, &state.penalty)?;
        let layout = Layout::new(instance, partition);
        let mut nodes = Vec::with_capacity(partition.n_domains());
        for p in 1..=partition.n_domains() {
            let known = partition.routes_of(p);
            let route_index: BTreeMap<usize, usize> = known.iter().enumerate().map(|(k, &r)| (r, k)).collect();
            let owned = partition.links_of(p);
            let links: Vec<OwnedLink> = owned
                .iter()
                .map(|&j| OwnedLink {
                    id: j,
                    capacity: layout.capacities[j],
                    local_routes: layout.link_routes[j].iter().map(|r| route_index[r]).collect(),
                    z: state.z_links[j].clone(),
                    u: state.u_links[j].clone(),
                })
                .collect();
            let routes: Vec<KnownRoute> = known
                .iter()
                .map(|&r| {
                    let group = layout.route_groups[r]
                        .iter()
                        .find(|g| g.domain == p)
                        .expect("route crosses its domain");
                    let slots = group
                        .slots
                        .iter()
                        .map(|s| (owned.binary_search(&s.link).expect("owned link"), s.pos))
                        .collect();
                    KnownRoute {
                        id: r,
                        weight: objective.weights[r],
                        bottleneck: layout.bottlenecks[r],
                        degree: layout.route_degree[r],
                        domains: partition.domains_of(r)[1..].to_vec(),
                        slots,
                        z0: state.z0[r],
                        u0: state.u0[r],
                        z_tilde: state.z_tilde[r],
                        z_star: state.z_star[r],
                        partials: Vec::new(),
                    }
                })
                .collect();
            nodes.push(ControllerNode {
                domain: p,
                alpha: objective.alpha,
                links,
                routes,
                route_index,
                inbox: Vec::new(),
            });
        }
        let in_flight = nodes.iter().flat_map(ControllerNode::send).collect();
        Ok(Simulation {
            nodes,
            penalty: state.penalty,
            iteration: state.iteration,
            in_flight,
            meter: OverheadMeter::new(partition.n_domains()),
            log: None,
            parallel: false,
            layout,
        })
    }

    pub fn with_message_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn nodes(&self) -> &[ControllerNode] {
        &self.nodes
    }

    pub fn meter(&self) -> &OverheadMeter {
        &self.meter
    }

    pub fn penalty(&self) -> PenaltyState {
        self.penalty
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Messages sent in the last round, awaiting delivery.
    pub fn in_flight(&self) -> &[RouteMessage] {
        &self.in_flight
    }

    pub fn in_flight_mut(&mut self) -> &mut Vec<RouteMessage> {
        &mut self.in_flight
    }

    pub fn message_log(&self) -> Option<&[MessageLogEntry]> {
        self.log.as_deref()
    }

    pub fn write_message_log<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for entry in self.log.iter().flatten() {
            w.serialize(entry)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Replaces route weights in every controller that knows the route; iterates stay warm.
    pub fn inject_weight_update(&mut self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.layout.n_routes {
            return Err(Error::InvalidArgument(format!(
                "expected {} weights, got {}",
                self.layout.n_routes,
                weights.len()
            )));
        }
        if let Some(r) = weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "weight of route {r} must be positive, got {}",
                weights[r]
            )));
        }
        for node in &mut self.nodes {
            for r in &mut node.routes {
                r.weight = weights[r.id];
            }
        }
        Ok(())
    }

    pub fn run_round(&mut self) -> Result<()> {
        let round = self.iteration;
        for node in &mut self.nodes {
            node.inbox.clear();
        }
        for m in self.in_flight.drain(..) {
            self.nodes[m.to - 1].inbox.push(m);
        }
        if self.parallel {
            self.nodes.par_iter_mut().try_for_each(|n| n.receive(round))?;
        } else {
            self.nodes.iter_mut().try_for_each(|n| n.receive(round))?;
        }

        if !self.penalty.frozen {
            if self.iteration >= self.penalty.tau {
                self.penalty.frozen = true;
            } else {
                let (mut min_term, mut max_term, mut degenerate) = (f64::INFINITY, f64::NEG_INFINITY, false);
                for node in &self.nodes {
                    let (lo, hi, d) = node.penalty_terms();
                    min_term = min_term.min(lo);
                    max_term = max_term.max(hi);
                    degenerate |= d;
                }
                if !degenerate {
                    let alpha = self.nodes.first().map_or(1.0, |n| n.alpha);
                    let lambda = lambda_from_moduli(alpha * min_term, alpha * max_term);
                    if lambda != self.penalty.lambda {
                        let factor = lambda / self.penalty.lambda;
                        self.nodes.iter_mut().for_each(|n| n.rescale_duals(factor));
                    }
                    self.penalty.lambda = lambda;
                }
            }
        }

        let lambda = self.penalty.lambda;
        if self.parallel {
            self.nodes.par_iter_mut().try_for_each(|n| n.update(lambda))?;
        } else {
            self.nodes.iter_mut().try_for_each(|n| n.update(lambda))?;
        }
        let sent: Vec<RouteMessage> = self.nodes.iter().flat_map(ControllerNode::send).collect();
        self.meter.record(&sent);
        if let Some(log) = &mut self.log {
            log.extend(sent.iter().map(|m| MessageLogEntry {
                round,
                route: m.route,
                from: m.from,
                to: m.to,
                z: m.z,
                z_star: m.z_star,
            }));
        }
        self.in_flight = sent;
        self.iteration += 1;
        Ok(())
    }

    /// Reassembles the global iterate from the controllers' local slices.
    ///
    /// Route-level values come from the lowest-numbered replica; `z_star` is
    /// the per-route minimum over all link copies.
    pub fn global_state(&self) -> FdState {
        let n_routes = self.layout.n_routes;
        let mut z_links = vec![Vec::new(); self.layout.link_routes.len()];
        let mut u_links = vec![Vec::new(); self.layout.link_routes.len()];
        let mut z0 = vec![f64::NAN; n_routes];
        let mut u0 = vec![f64::NAN; n_routes];
        let mut z_tilde = vec![f64::NAN; n_routes];
        let mut filled = vec![false; n_routes];
        for node in &self.nodes {
            for link in &node.links {
                z_links[link.id] = link.z.clone();
                u_links[link.id] = link.u.clone();
            }
            for r in &node.routes {
                if !std::mem::replace(&mut filled[r.id], true) {
                    z0[r.id] = r.z0;
                    u0[r.id] = r.u0;
                    z_tilde[r.id] = r.z_tilde;
                }
            }
        }
        let z_star: Allocation = feasible_extract(n_routes, &self.layout.link_routes, &z_links);
        FdState {
            z0,
            u0,
            z_tilde,
            z_links,
            u_links,
            z_star,
            iteration: self.iteration,
            penalty: self.penalty,
        }
    }

    /// All replicas of the route-level variables agree bit for bit.
    pub fn replicas_agree(&self) -> bool {
        let mut first: BTreeMap<usize, (u64, u64, u64)> = BTreeMap::new();
        for node in &self.nodes {
            for r in &node.routes {
                let key = (r.z0.to_bits(), r.u0.to_bits(), r.z_tilde.to_bits());
                if *first.entry(r.id).or_insert(key) != key {
                    return false;
                }
            }
        }
        true
    }
}

/// Messages the monolithic solver state implies for the next round, in the
/// same order the simulator emits them.
pub fn implied_messages(layout: &Layout, state: &FdState) -> Vec<RouteMessage> {
    let partition = &layout.partition;
    let mut out = Vec::new();
    for p in 1..=partition.n_domains() {
        for &r in partition.routes_of(p) {
            let group = layout.route_groups[r]
                .iter()
                .find(|g| g.domain == p)
                .expect("route crosses its domain");
            let values = group.slots.iter().map(|s| state.z_links[s.link][s.pos]);
            let z = partial_sum(values.clone());
            let z_star = values.fold(f64::INFINITY, f64::min);
            for &q in partition.domains_of(r)[1..].iter().filter(|&&q| q != p) {
                out.push(RouteMessage {
                    route: r,
                    from: p,
                    to: q,
                    z,
                    z_star,
                });
            }
        }
    }
    out
}
