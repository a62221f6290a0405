//! Network and request model.
//!
//! An [`Instance`] is a set of capacitated links, a set of single-path routes
//! (each a subset of the links) with positive weights, and the fairness
//! parameter `alpha`. A [`Partition`] assigns every link to one of `P`
//! control domains numbered from 1; domain index 0 is reserved for the
//! route-level variable that every route carries.
//!
//! Link and route ids are dense: the `i`-th entry of `links` has id `i`, and
//! likewise for `routes`. Files are JSON documents with exactly the fields
//! `alpha`, `links: [{id, capacity}]` and `routes: [{id, weight, links}]`.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    pub id: usize,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Route {
    pub id: usize,
    #[serde(default = "default_weight")]
    pub weight: f64,
    /// Traversed links, in path order.
    pub links: Vec<usize>,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub alpha: f64,
    pub links: Vec<Link>,
    pub routes: Vec<Route>,
}

/// A broken invariant, naming the offending entity.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Alpha(f64),
    LinkId { position: usize, id: usize },
    LinkCapacity { link: usize, capacity: f64 },
    RouteId { position: usize, id: usize },
    RouteEmpty { route: usize },
    RouteUnknownLink { route: usize, link: usize },
    RouteDuplicateLink { route: usize, link: usize },
    RouteWeight { route: usize, weight: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Alpha(a) => write!(f, "alpha must be finite and >= 0, got {a}"),
            Violation::LinkId { position, id } => {
                write!(f, "link at position {position} has id {id}, ids must be dense")
            }
            Violation::LinkCapacity { link, capacity } => {
                write!(f, "link {link} has non-positive capacity {capacity}")
            }
            Violation::RouteId { position, id } => {
                write!(f, "route at position {position} has id {id}, ids must be dense")
            }
            Violation::RouteEmpty { route } => write!(f, "route {route} traverses no link"),
            Violation::RouteUnknownLink { route, link } => {
                write!(f, "route {route} references unknown link {link}")
            }
            Violation::RouteDuplicateLink { route, link } => {
                write!(f, "route {route} lists link {link} more than once")
            }
            Violation::RouteWeight { route, weight } => {
                write!(f, "route {route} has non-positive weight {weight}")
            }
        }
    }
}

impl Instance {
    /// Builds an instance and rejects it unless every invariant holds.
    pub fn new(alpha: f64, links: Vec<Link>, routes: Vec<Route>) -> Result<Self> {
        let inst = Instance { alpha, links, routes };
        inst.check()?;
        Ok(inst)
    }

    /// Convenience constructor from bare capacities and `(links, weight)` pairs.
    pub fn from_parts(alpha: f64, capacities: &[f64], routes: &[(&[usize], f64)]) -> Result<Self> {
        let links = capacities
            .iter()
            .enumerate()
            .map(|(id, &capacity)| Link { id, capacity })
            .collect();
        let routes = routes
            .iter()
            .enumerate()
            .map(|(id, (links, weight))| Route {
                id,
                weight: *weight,
                links: links.to_vec(),
            })
            .collect();
        Instance::new(alpha, links, routes)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            out.push(Violation::Alpha(self.alpha));
        }
        for (position, link) in self.links.iter().enumerate() {
            if link.id != position {
                out.push(Violation::LinkId { position, id: link.id });
            }
            if !(link.capacity > 0.0 && link.capacity.is_finite()) {
                out.push(Violation::LinkCapacity {
                    link: link.id,
                    capacity: link.capacity,
                });
            }
        }
        let n_links = self.links.len();
        for (position, route) in self.routes.iter().enumerate() {
            if route.id != position {
                out.push(Violation::RouteId { position, id: route.id });
            }
            if route.links.is_empty() {
                out.push(Violation::RouteEmpty { route: route.id });
            }
            let mut seen = vec![false; n_links];
            for &link in &route.links {
                if link >= n_links {
                    out.push(Violation::RouteUnknownLink { route: route.id, link });
                } else if std::mem::replace(&mut seen[link], true) {
                    out.push(Violation::RouteDuplicateLink { route: route.id, link });
                }
            }
            if !(route.weight > 0.0 && route.weight.is_finite()) {
                out.push(Violation::RouteWeight {
                    route: route.id,
                    weight: route.weight,
                });
            }
        }
        out
    }

    pub fn check(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn n_routes(&self) -> usize {
        self.routes.len()
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.capacity).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.routes.iter().map(|r| r.weight).collect()
    }

    /// Replaces every route weight. Weights must be positive.
    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.routes.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} weights, got {}",
                self.routes.len(),
                weights.len()
            )));
        }
        if let Some(r) = weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::Validation(vec![Violation::RouteWeight {
                route: r,
                weight: weights[r],
            }]));
        }
        for (route, &w) in self.routes.iter_mut().zip(weights) {
            route.weight = w;
        }
        Ok(())
    }

    /// `R_j` for every link: member routes in ascending route id.
    pub fn link_routes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.links.len()];
        for route in &self.routes {
            for &j in &route.links {
                out[j].push(route.id);
            }
        }
        out
    }

    /// `J_r` for every route: traversed links in ascending link id.
    pub fn route_links(&self) -> Vec<Vec<usize>> {
        self.routes
            .iter()
            .map(|r| {
                let mut l = r.links.clone();
                l.sort_unstable();
                l
            })
            .collect()
    }

    /// `B_r = min_{j in r} C_j`.
    pub fn bottlenecks(&self) -> Vec<f64> {
        self.routes
            .iter()
            .map(|r| {
                r.links
                    .iter()
                    .map(|&j| self.links[j].capacity)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// Average number of routes per link.
    pub fn mean_link_load(&self) -> f64 {
        if self.links.is_empty() {
            return 0.0;
        }
        let total: usize = self.routes.iter().map(|r| r.links.len()).sum();
        total as f64 / self.links.len() as f64
    }

    /// Per-link load `sum_{r in j} x_r`, summed in ascending route id.
    pub fn link_loads(&self, x: &[f64]) -> Vec<f64> {
        let mut loads = vec![0.0; self.links.len()];
        // routes are visited in ascending id, so each link accumulates in that order
        for (route, &xr) in self.routes.iter().zip(x) {
            for &j in &route.links {
                loads[j] += xr;
            }
        }
        loads
    }

    /// Links whose load exceeds `C_j (1 + eps)`.
    pub fn violated_links(&self, x: &[f64], eps: f64) -> Vec<usize> {
        self.link_loads(x)
            .iter()
            .zip(&self.links)
            .filter(|(load, link)| **load > link.capacity * (1.0 + eps))
            .map(|(_, link)| link.id)
            .collect()
    }

    /// Percentage of links whose capacity is exceeded by more than a relative `1e-9`.
    pub fn violation_percentage(&self, x: &[f64]) -> f64 {
        if self.links.is_empty() {
            return 0.0;
        }
        100.0 * self.violated_links(x, VIOLATION_EPS).len() as f64 / self.links.len() as f64
    }

    /// Exact feasibility: `x >= 0` and every link load (ascending route order) is `<= C_j`.
    pub fn is_feasible(&self, x: &[f64]) -> bool {
        x.len() == self.routes.len() && x.iter().all(|v| *v >= 0.0) && self.violated_links(x, 0.0).is_empty()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Instance = serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "instance".into(),
            context: e.to_string(),
        })?;
        inst.check()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

pub const VIOLATION_EPS: f64 = 1e-9;

/// Bandwidth per route, indexed by route id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(pub Vec<f64>);

impl Allocation {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn is_feasible(&self, instance: &Instance) -> bool {
        instance.is_feasible(&self.0)
    }
}

impl std::ops::Deref for Allocation {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Assignment of links to domains `1..=P` with the derived coverings.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    domain_of_link: Vec<usize>,
    n_domains: usize,
    /// `J_p`, index `p - 1`.
    links_of_domain: Vec<Vec<usize>>,
    /// `R_p`, index `p - 1`.
    routes_of_domain: Vec<Vec<usize>>,
    /// `I_r`, ascending, always starting with 0.
    domains_of_route: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assignment {
    pub link_id: usize,
    pub domain: usize,
}

impl Partition {
    /// Builds the partition from a per-link domain map (`domain_of_link[j]`).
    pub fn new(instance: &Instance, domain_of_link: &[usize]) -> Result<Self> {
        if domain_of_link.len() != instance.n_links() {
            if domain_of_link.len() < instance.n_links() {
                return Err(Error::MissingAssignment {
                    link: domain_of_link.len(),
                });
            }
            return Err(Error::PartitionSize {
                expected: instance.n_links(),
                got: domain_of_link.len(),
            });
        }
        if let Some(link) = domain_of_link.iter().position(|&d| d == 0) {
            return Err(Error::InvalidDomain { link, domain: 0 });
        }
        let n_domains = domain_of_link.iter().copied().max().unwrap_or(0);
        let mut links_of_domain = vec![Vec::new(); n_domains];
        for (j, &p) in domain_of_link.iter().enumerate() {
            links_of_domain[p - 1].push(j);
        }
        let mut routes_of_domain = vec![Vec::new(); n_domains];
        let mut domains_of_route = Vec::with_capacity(instance.n_routes());
        for route in &instance.routes {
            let mut doms: Vec<usize> = route.links.iter().map(|&j| domain_of_link[j]).collect();
            doms.sort_unstable();
            doms.dedup();
            for &p in &doms {
                routes_of_domain[p - 1].push(route.id);
            }
            doms.insert(0, 0);
            domains_of_route.push(doms);
        }
        Ok(Partition {
            domain_of_link: domain_of_link.to_vec(),
            n_domains,
            links_of_domain,
            routes_of_domain,
            domains_of_route,
        })
    }

    /// Builds the partition from explicit `(link, domain)` assignments.
    pub fn from_assignments(instance: &Instance, assignments: &[Assignment]) -> Result<Self> {
        let mut map = vec![usize::MAX; instance.n_links()];
        for a in assignments {
            if a.link_id >= instance.n_links() {
                return Err(Error::InvalidArgument(format!(
                    "assignment for unknown link {}",
                    a.link_id
                )));
            }
            if a.domain == 0 {
                return Err(Error::InvalidDomain {
                    link: a.link_id,
                    domain: 0,
                });
            }
            map[a.link_id] = a.domain;
        }
        if let Some(link) = map.iter().position(|&d| d == usize::MAX) {
            return Err(Error::MissingAssignment { link });
        }
        Partition::new(instance, &map)
    }

    /// Every link in domain 1.
    pub fn single(instance: &Instance) -> Self {
        Partition::new(instance, &vec![1; instance.n_links()]).expect("single domain is valid")
    }

    /// Greedy `k`-way split that balances the number of route crossings per domain.
    ///
    /// Links are taken by decreasing `|R_j|` (ties by id) and each is placed in
    /// the currently lightest domain (ties by lowest index). Domains that end up
    /// empty are dropped by renumbering.
    pub fn balanced(instance: &Instance, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("number of domains must be >= 1".into()));
        }
        let link_routes = instance.link_routes();
        let mut order: Vec<usize> = (0..instance.n_links()).collect();
        order.sort_by(|&a, &b| link_routes[b].len().cmp(&link_routes[a].len()).then(a.cmp(&b)));
        let mut weight = vec![0usize; k];
        let mut count = vec![0usize; k];
        let mut map = vec![0; instance.n_links()];
        for j in order {
            let p = (0..k).min_by_key(|&p| (weight[p], count[p], p)).expect("k >= 1");
            weight[p] += link_routes[j].len();
            count[p] += 1;
            map[j] = p + 1;
        }
        // compact domain numbers so they are 1..=P without gaps
        let mut used: Vec<usize> = map.clone();
        used.sort_unstable();
        used.dedup();
        for d in &mut map {
            *d = used.binary_search(d).expect("present") + 1;
        }
        Partition::new(instance, &map)
    }

    pub fn n_domains(&self) -> usize {
        self.n_domains
    }

    pub fn domain_of_link(&self, j: usize) -> usize {
        self.domain_of_link[j]
    }

    pub fn domain_map(&self) -> &[usize] {
        &self.domain_of_link
    }

    /// `J_p` for `p` in `1..=P`.
    pub fn links_of(&self, p: usize) -> &[usize] {
        &self.links_of_domain[p - 1]
    }

    /// `R_p` for `p` in `1..=P`.
    pub fn routes_of(&self, p: usize) -> &[usize] {
        &self.routes_of_domain[p - 1]
    }

    /// `I_r`, including index 0.
    pub fn domains_of(&self, r: usize) -> &[usize] {
        &self.domains_of_route[r]
    }

    /// `|R_p ∩ R_q|` for all domain pairs, indexed from 0 (`[p - 1][q - 1]`).
    pub fn shared_routes(&self) -> Vec<Vec<usize>> {
        let mut shared = vec![vec![0; self.n_domains]; self.n_domains];
        for doms in &self.domains_of_route {
            for &p in &doms[1..] {
                for &q in &doms[1..] {
                    shared[p - 1][q - 1] += 1;
                }
            }
        }
        shared
    }

    /// Floats domain `p` sends per consensus round: `2 sum_{q != p} |R_p ∩ R_q|`.
    pub fn consensus_floats_from(&self, p: usize) -> u64 {
        let shared = self.shared_routes();
        2 * (0..self.n_domains)
            .filter(|&q| q != p - 1)
            .map(|q| shared[p - 1][q] as u64)
            .sum::<u64>()
    }

    pub fn consensus_floats_per_round(&self) -> u64 {
        (1..=self.n_domains).map(|p| self.consensus_floats_from(p)).sum()
    }

    /// Floats per round of a distributed dual-price method: every domain
    /// sends each peer the prices of its links used by that peer's routes.
    pub fn price_floats_per_round(&self, instance: &Instance) -> u64 {
        let route_links = instance.route_links();
        let mut total = 0u64;
        for q in 1..=self.n_domains {
            let mut used = vec![false; instance.n_links()];
            for &r in self.routes_of(q) {
                for &j in &route_links[r] {
                    used[j] = true;
                }
            }
            for p in (1..=self.n_domains).filter(|&p| p != q) {
                total += self.links_of(p).iter().filter(|&&j| used[j]).count() as u64;
            }
        }
        total
    }

    pub fn assignments(&self) -> Vec<Assignment> {
        self.domain_of_link
            .iter()
            .enumerate()
            .map(|(link_id, &domain)| Assignment { link_id, domain })
            .collect()
    }

    pub fn load(instance: &Instance, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let assignments: Vec<Assignment> = serde_json::from_str(&text).map_err(|e| Error::Parse {
            what: "partition".into(),
            context: e.to_string(),
        })?;
        Partition::from_assignments(instance, &assignments)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut s = serde_json::to_string_pretty(&self.assignments()).expect("serializes");
        s.push('\n');
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

/// Parameters of the synthetic topology and request generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub seed: u64,
    pub nodes: usize,
    pub links: usize,
    pub routes: usize,
    pub capacity_range: (f64, f64),
    pub weight_range: (f64, f64),
    pub alpha: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            seed: 0,
            nodes: 20,
            links: 40,
            routes: 50,
            capacity_range: (1.0, 10.0),
            weight_range: (1.0, 1.0),
            alpha: 1.0,
        }
    }
}

const ROUTE_ATTEMPTS: usize = 100;

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Random connected graph (random spanning tree plus extra edges) with
/// uniform capacities, and routes that are BFS shortest paths between
/// random distinct endpoints. Deterministic for fixed parameters.
pub fn generate_random(params: &GeneratorParams) -> Result<Instance> {
    let GeneratorParams {
        seed,
        nodes,
        links,
        routes,
        capacity_range,
        weight_range,
        alpha,
    } = *params;
    let positive_range = |(lo, hi): (f64, f64)| lo > 0.0 && lo <= hi && hi.is_finite();
    if !positive_range(capacity_range) {
        return Err(Error::Generation(format!("bad capacity range {capacity_range:?}")));
    }
    if !positive_range(weight_range) {
        return Err(Error::Generation(format!("bad weight range {weight_range:?}")));
    }
    let max_edges = nodes * nodes.saturating_sub(1) / 2;
    if nodes == 0 || links + 1 < nodes || links > max_edges {
        return Err(Error::Generation(format!(
            "cannot build a connected simple graph with {nodes} nodes and {links} links"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut perm: Vec<usize> = (0..nodes).collect();
    perm.shuffle(&mut rng);
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(links);
    let mut present = vec![false; nodes * nodes];
    let mut add = |a: usize, b: usize, edges: &mut Vec<(usize, usize)>| {
        let (a, b) = (a.min(b), a.max(b));
        if a == b || present[a * nodes + b] {
            return false;
        }
        present[a * nodes + b] = true;
        edges.push((a, b));
        true
    };
    for i in 1..nodes {
        let parent = perm[rng.gen_range(0..i)];
        add(perm[i], parent, &mut edges);
    }
    while edges.len() < links {
        let a = rng.gen_range(0..nodes);
        let b = rng.gen_range(0..nodes);
        add(a, b, &mut edges);
    }

    let link_list: Vec<Link> = (0..links)
        .map(|id| Link {
            id,
            capacity: uniform(&mut rng, capacity_range),
        })
        .collect();

    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
    for (e, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, e));
        adj[b].push((a, e));
    }
    for list in &mut adj {
        list.sort_unstable();
    }

    let mut route_list = Vec::with_capacity(routes);
    for id in 0..routes {
        let mut path = None;
        for _ in 0..ROUTE_ATTEMPTS {
            if nodes < 2 {
                break;
            }
            let src = rng.gen_range(0..nodes);
            let dst = rng.gen_range(0..nodes);
            if src == dst {
                continue;
            }
            if let Some(p) = shortest_path(&adj, src, dst) {
                path = Some(p);
                break;
            }
        }
        let links =
            path.ok_or_else(|| Error::Generation(format!("no reachable source/destination pair for route {id}")))?;
        route_list.push(Route {
            id,
            weight: uniform(&mut rng, weight_range),
            links,
        });
    }
    Instance::new(alpha, link_list, route_list)
}

/// Hop-count shortest path as a list of edge ids; neighbours are explored in
/// ascending node order so the result is deterministic.
fn shortest_path(adj: &[Vec<(usize, usize)>], src: usize, dst: usize) -> Option<Vec<usize>> {
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; adj.len()];
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([src]);
    seen[src] = true;
    while let Some(v) = queue.pop_front() {
        if v == dst {
            break;
        }
        for &(w, e) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                prev[w] = Some((v, e));
                queue.push_back(w);
            }
        }
    }
    if !seen[dst] {
        return None;
    }
    let mut path = Vec::new();
    let mut v = dst;
    while let Some((u, e)) = prev[v] {
        path.push(e);
        v = u;
    }
    path.reverse();
    Some(path)
}
