//! Alpha-fair bandwidth allocation over multi-domain networks.
//!
//! The crate solves
//!
//! ```text
//! maximize  sum_r f_r(x_r)   subject to   sum_{r through j} x_r <= C_j,  x >= 0
//! ```
//!
//! with `f_r(x) = w_r x^(1-alpha) / (1-alpha)` (or `w_r log x` at
//! `alpha = 1`), using a consensus ADMM that splits the problem per link and
//! per route so that each control domain only touches its own links and the
//! routes crossing them. Every iterate yields an exactly feasible allocation.
//!
//! Modules:
//!
//! * [`instance`]: links, routes, partitions into domains, JSON files and a
//!   random topology generator.
//! * [`fairness`]: utilities, proximal operators, curvature moduli and the
//!   reciprocal penalty schedule.
//! * [`projection`]: per-link capped-simplex projection and Dykstra's
//!   projection onto the full capacity polyhedron.
//! * [`solvers`]: the distributed solver, a centralized ADMM and a dual
//!   price baseline behind one driver.
//! * [`sim`]: message-passing simulation of domain controllers with traffic
//!   metering.
//! * [`experiments`]: dynamic weight scenarios, penalty sweeps and load curves.
//!
//! ```
//! use alphafair::{solve, Instance, Partition, SolverConfig};
//!
//! // one link of capacity 4 shared by routes of weight 1 and 3
//! let inst = Instance::from_parts(1.0, &[4.0], &[(&[0], 1.0), (&[0], 3.0)]).unwrap();
//! let sol = solve(&inst, &Partition::single(&inst), &SolverConfig::default()).unwrap();
//! assert!((sol.allocation[1] - 3.0).abs() < 1e-5);
//! assert!(inst.is_feasible(&sol.allocation));
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod fairness;
pub mod instance;
pub mod projection;
pub mod sim;
pub mod solvers;
pub mod trace;

pub use error::{Error, Result};
pub use fairness::{adapt_penalty, moduli, prox_alpha_fair, FairnessObjective, Moduli, PenaltyState};
pub use instance::{generate_random, Allocation, GeneratorParams, Instance, Link, Partition, Route, Violation};
pub use projection::{project_capped_simplex, project_polyhedron, Polyhedron};
pub use sim::{measure_overhead, ControllerNode, OverheadMeter, RouteMessage, Simulation};
pub use solvers::{reference_solution, solve, Algorithm, Engine, PenaltyRule, Solution, SolverConfig};
pub use trace::{Trace, TraceRecord};
