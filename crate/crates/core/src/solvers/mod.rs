//! Iterative solvers and the common driver.
//!
//! [`solve`] runs one of the three algorithms until both residuals fall
//! below their tolerances, the iteration cap is hit or the time budget runs
//! out, recording a [`Trace`] row per iteration.

pub mod barrier;
pub mod cadmm;
pub mod fdadmm;
pub mod lagr;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::fairness::{FairnessObjective, PenaltyState, DEFAULT_TAU};
use crate::instance::{Allocation, Instance, Partition};
use crate::projection::DEFAULT_DYKSTRA_CYCLES;
use crate::trace::{Trace, TraceRecord};

pub use barrier::barrier_optimum;
pub use cadmm::{cadmm_step, CAdmm, CAdmmState};
pub use fdadmm::{FdAdmm, FdState, Layout};
pub use lagr::{lagr_step, LagrState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    CAdmm,
    FdAdmm,
    Lagr,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::CAdmm => "c-admm",
            Algorithm::FdAdmm => "fd-admm",
            Algorithm::Lagr => "lagr",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c-admm" => Ok(Algorithm::CAdmm),
            "fd-admm" => Ok(Algorithm::FdAdmm),
            "lagr" => Ok(Algorithm::Lagr),
            other => Err(Error::InvalidArgument(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// How the reciprocal penalty `lambda` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyRule {
    Fixed(f64),
    Adaptive { tau: usize },
}

impl Default for PenaltyRule {
    fn default() -> Self {
        PenaltyRule::Adaptive { tau: DEFAULT_TAU }
    }
}

impl PenaltyRule {
    pub fn initial_state(self) -> PenaltyState {
        match self {
            PenaltyRule::Fixed(l) => PenaltyState::fixed(l),
            PenaltyRule::Adaptive { tau } => PenaltyState::adaptive(tau),
        }
    }
}

/// Consensus disagreement and successive-iterate variation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub penalty: PenaltyRule,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub max_iters: usize,
    pub time_budget: Option<Duration>,
    /// Dykstra tolerance for the centralized projection.
    pub projection_tol: f64,
    pub projection_cycles: usize,
    pub lagr_initial_price: f64,
    pub parallel: bool,
    /// Fill the `wall_time` column; off keeps traces byte-reproducible.
    pub record_time: bool,
    /// Reference allocation for the gap column.
    pub reference: Option<Allocation>,
    pub label: String,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            algorithm: Algorithm::FdAdmm,
            penalty: PenaltyRule::default(),
            tol_primal: 1e-6,
            tol_dual: 1e-6,
            max_iters: 100_000,
            time_budget: None,
            projection_tol: 1e-10,
            projection_cycles: DEFAULT_DYKSTRA_CYCLES,
            lagr_initial_price: 1.0,
            parallel: false,
            record_time: false,
            reference: None,
            label: "static".into(),
        }
    }
}

/// A running solver of any of the three kinds.
#[derive(Debug, Clone)]
pub enum Engine {
    CAdmm(CAdmm),
    FdAdmm(FdAdmm),
    Lagr {
        instance: Instance,
        objective: FairnessObjective,
        state: LagrState,
    },
}

impl Engine {
    pub fn new(instance: &Instance, partition: &Partition, config: &SolverConfig) -> Result<Self> {
        let objective = FairnessObjective::from_instance(instance);
        let penalty = config.penalty.initial_state();
        Ok(match config.algorithm {
            Algorithm::CAdmm => Engine::CAdmm(CAdmm::new(
                instance,
                objective,
                penalty,
                config.projection_tol,
                config.projection_cycles,
            )?),
            Algorithm::FdAdmm => {
                Engine::FdAdmm(FdAdmm::new(instance, partition, objective, penalty)?.with_parallel(config.parallel))
            }
            Algorithm::Lagr => {
                if objective.alpha == 0.0 {
                    return Err(Error::Unsupported("LAGR requires alpha > 0".into()));
                }
                Engine::Lagr {
                    state: LagrState::new(instance, config.lagr_initial_price)?,
                    instance: instance.clone(),
                    objective,
                }
            }
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            Engine::CAdmm(_) => Algorithm::CAdmm,
            Engine::FdAdmm(_) => Algorithm::FdAdmm,
            Engine::Lagr { .. } => Algorithm::Lagr,
        }
    }

    pub fn step(&mut self) -> Result<Residuals> {
        match self {
            Engine::CAdmm(c) => c.step(),
            Engine::FdAdmm(f) => f.round(),
            Engine::Lagr {
                instance,
                objective,
                state,
            } => {
                let previous = state.x.clone();
                lagr_step(state, instance, objective)?;
                let primal = instance
                    .link_loads(&state.x)
                    .iter()
                    .zip(&instance.links)
                    .map(|(load, l)| (load - l.capacity).max(0.0))
                    .fold(0.0, f64::max);
                let dual = state
                    .x
                    .iter()
                    .zip(&previous)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                Ok(Residuals { primal, dual })
            }
        }
    }

    /// The point the algorithm would deliver now.
    pub fn allocation(&self) -> &[f64] {
        match self {
            Engine::CAdmm(c) => c.allocation(),
            Engine::FdAdmm(f) => f.allocation(),
            Engine::Lagr { state, .. } => &state.x,
        }
    }

    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        match self {
            Engine::CAdmm(c) => c.set_weights(weights),
            Engine::FdAdmm(f) => f.set_weights(weights),
            Engine::Lagr {
                instance, objective, ..
            } => {
                instance.set_weights(weights)?;
                *objective = FairnessObjective::from_instance(instance);
                Ok(())
            }
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            Engine::CAdmm(c) => Some(c.state().penalty.lambda),
            Engine::FdAdmm(f) => Some(f.state().penalty.lambda),
            Engine::Lagr { .. } => None,
        }
    }
}

/// Floats exchanged between domains per iteration when run distributed.
pub fn floats_per_iteration(algorithm: Algorithm, instance: &Instance, partition: &Partition) -> u64 {
    match algorithm {
        Algorithm::CAdmm => 0,
        Algorithm::FdAdmm => partition.consensus_floats_per_round(),
        Algorithm::Lagr => partition.price_floats_per_round(instance),
    }
}

/// `|f(x) - f(x_ref)| / max(1, |f(x_ref)|)`.
pub fn relative_gap(objective: &FairnessObjective, x: &[f64], reference_utility: f64) -> f64 {
    let f = objective.utility(x);
    if f == reference_utility {
        return 0.0;
    }
    (f - reference_utility).abs() / reference_utility.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Final feasible extract for ADMM variants; last iterate for LAGR.
    pub allocation: Allocation,
    /// Highest-utility feasible point seen, if any.
    pub best_feasible: Option<Allocation>,
    pub converged: bool,
    pub iterations: usize,
    pub residuals: Residuals,
    pub lambda: Option<f64>,
    pub trace: Trace,
}

pub fn solve(instance: &Instance, partition: &Partition, config: &SolverConfig) -> Result<Solution> {
    let mut engine = Engine::new(instance, partition, config)?;
    let objective = FairnessObjective::from_instance(instance);
    let reference_utility = config.reference.as_ref().map(|r| objective.utility(r));
    let floats = floats_per_iteration(config.algorithm, instance, partition);
    let start = Instant::now();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let consider = |x: &[f64], best: &mut Option<(f64, Vec<f64>)>| {
        if instance.is_feasible(x) {
            let f = objective.utility(x);
            if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
                *best = Some((f, x.to_vec()));
            }
        }
    };
    if engine.algorithm() != Algorithm::Lagr {
        consider(engine.allocation(), &mut best);
    }

    let mut trace = Trace::default();
    let mut converged = false;
    let mut residuals = Residuals {
        primal: f64::INFINITY,
        dual: f64::INFINITY,
    };
    let mut iterations = 0;
    while iterations < config.max_iters {
        if let Some(budget) = config.time_budget {
            if start.elapsed() >= budget {
                break;
            }
        }
        residuals = engine.step()?;
        iterations += 1;
        let x = engine.allocation();
        consider(x, &mut best);
        trace.push(TraceRecord {
            run: config.label.clone(),
            iteration: iterations,
            event: 0,
            algorithm: config.algorithm.name().into(),
            objective: objective.utility(x),
            gap: reference_utility.map(|f| relative_gap(&objective, x, f)),
            primal: residuals.primal,
            dual: residuals.dual,
            violation_pct: instance.violation_percentage(x),
            message_floats: floats,
            wall_time: if config.record_time {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            },
        });
        if residuals.primal <= config.tol_primal && residuals.dual <= config.tol_dual {
            converged = true;
            break;
        }
    }
    Ok(Solution {
        allocation: Allocation(engine.allocation().to_vec()),
        best_feasible: best.map(|(_, x)| Allocation(x)),
        converged,
        iterations,
        residuals,
        lambda: engine.lambda(),
        trace,
    })
}

/// Configuration of the ground-truth run: single-domain FD-ADMM to `1e-6` residuals.
pub fn reference_config(instance: &Instance) -> SolverConfig {
    SolverConfig {
        algorithm: Algorithm::FdAdmm,
        penalty: if instance.alpha > 0.0 {
            PenaltyRule::Adaptive { tau: DEFAULT_TAU }
        } else {
            PenaltyRule::Fixed(1.0)
        },
        tol_primal: 1e-6,
        tol_dual: 1e-6,
        max_iters: 1_000_000,
        label: "reference".into(),
        ..SolverConfig::default()
    }
}

/// Ground-truth allocation used for optimality gaps.
pub fn reference_solution(instance: &Instance) -> Result<Allocation> {
    let sol = solve(instance, &Partition::single(instance), &reference_config(instance))?;
    if !sol.converged {
        return Err(Error::NotConverged {
            iterations: sol.iterations,
            primal: sol.residuals.primal,
            dual: sol.residuals.dual,
        });
    }
    Ok(sol.allocation)
}
