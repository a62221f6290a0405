//! Experiment drivers behind the `fairalloc` subcommands: dynamic weight
//! scenarios, penalty sweeps and load curves.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fairness::FairnessObjective;
use crate::instance::{generate_random, Allocation, GeneratorParams, Instance, Partition};
use crate::solvers::{
    barrier_optimum, floats_per_iteration, reference_solution, relative_gap, solve, Algorithm, Engine, PenaltyRule,
    SolverConfig,
};
use crate::trace::{Trace, TraceRecord};

pub const DEFAULT_EVENTS: usize = 20;
pub const DEFAULT_ITERS_PER_EVENT: usize = 10;
pub const DEFAULT_AMPLITUDES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 1.0];

/// Seeded 200-route instance on a 106-node, 474-link topology (the size of
/// a national carrier core) with unit weights and capacities in `[1, 10]`;
/// the default for the dynamic and sweep experiments when no instance file
/// is given.
pub fn standard_instance(seed: u64) -> Result<Instance> {
    generate_random(&GeneratorParams {
        seed,
        nodes: 106,
        links: 474,
        routes: 200,
        ..GeneratorParams::default()
    })
}

/// A base instance whose weights drift from event to event.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub base: Instance,
    pub amplitude: f64,
    pub events: usize,
    pub iters_per_event: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn new(base: Instance, amplitude: f64, events: usize, iters_per_event: usize, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&amplitude) {
            return Err(Error::InvalidArgument(format!(
                "amplitude must lie in [0, 1], got {amplitude}"
            )));
        }
        Ok(Scenario {
            base,
            amplitude,
            events,
            iters_per_event,
            seed,
        })
    }

    /// Weights for each event. Event `t` draws `w_r` uniformly from
    /// `[(1-a) w_r, (1+a) w_r]` around the weights of event `t-1`, starting
    /// from the base weights. The same seed gives the same uniform draws for
    /// every amplitude.
    pub fn weight_sequence(&self) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let a = self.amplitude;
        let mut w = self.base.weights();
        let mut out = Vec::with_capacity(self.events);
        for _ in 0..self.events {
            for wr in &mut w {
                let u: f64 = rng.gen();
                *wr *= 1.0 - a + 2.0 * a * u;
            }
            // a = 1 can reach zero, which no utility accepts
            for wr in &mut w {
                if !(*wr > 0.0) {
                    *wr = f64::MIN_POSITIVE;
                }
            }
            out.push(w.clone());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub amplitude: f64,
    pub algorithm: String,
    pub event: usize,
    /// Gap after the first warm iteration of the event.
    pub first_gap: f64,
    /// Gap after one iteration started cold on the same weights.
    pub cold_first_gap: f64,
    pub last_gap: f64,
    pub mean_gap: f64,
    pub mean_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicSummary {
    pub amplitude: f64,
    pub algorithm: String,
    /// Average over every iteration of every event.
    pub mean_gap: f64,
    pub mean_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicResult {
    pub trace: Trace,
    pub events: Vec<EventRecord>,
    pub summaries: Vec<DynamicSummary>,
}

/// How each event's optimum is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceMethod {
    /// Single-domain FD-ADMM to `1e-6` residuals; fails if that takes more
    /// than a million rounds, which happens once weights spread over
    /// several orders of magnitude.
    FdAdmm,
    /// Centralized log-barrier Newton method.
    #[default]
    Barrier,
}

impl ReferenceMethod {
    pub fn optimum(self, instance: &Instance) -> Result<Allocation> {
        match self {
            ReferenceMethod::FdAdmm => reference_solution(instance),
            ReferenceMethod::Barrier => barrier_optimum(instance),
        }
    }
}

impl std::str::FromStr for ReferenceMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fd-admm" => Ok(ReferenceMethod::FdAdmm),
            "barrier" => Ok(ReferenceMethod::Barrier),
            other => Err(Error::InvalidArgument(format!(
                "unknown reference method `{other}`, expected fd-admm or barrier"
            ))),
        }
    }
}

/// State of each algorithm when the first event arrives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Warmup {
    /// Event 0 starts from the solver's initial point.
    Cold,
    /// Iterate on the base weights until the solver's stopping rule holds or
    /// `max_iters` is reached, as a network already in operation would.
    Settle { max_iters: usize },
}

impl Default for Warmup {
    fn default() -> Self {
        Warmup::Settle { max_iters: 100_000 }
    }
}

/// Settings shared by every run of a dynamic experiment.
#[derive(Debug, Clone)]
pub struct DynamicConfig {
    pub algorithms: Vec<Algorithm>,
    /// Solver template; algorithm and label are overridden per run.
    pub solver: SolverConfig,
    pub reference: ReferenceMethod,
    pub warmup: Warmup,
}

impl Default for DynamicConfig {
    fn default() -> Self {
        DynamicConfig {
            algorithms: vec![Algorithm::FdAdmm, Algorithm::Lagr],
            solver: SolverConfig::default(),
            reference: ReferenceMethod::default(),
            warmup: Warmup::default(),
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Runs `iters_per_event` warm-started iterations of each algorithm per
/// event and scores every iterate against that event's reference optimum.
/// Iteration numbers in the trace count event iterations only.
pub fn run_scenario(scenario: &Scenario, partition: &Partition, config: &DynamicConfig) -> Result<DynamicResult> {
    let engines = settle(&scenario.base, partition, config)?;
    run_scenario_from(scenario, partition, config, engines)
}

/// One engine per configured algorithm, prepared according to `config.warmup`.
pub fn settle(base: &Instance, partition: &Partition, config: &DynamicConfig) -> Result<Vec<Engine>> {
    config
        .algorithms
        .iter()
        .map(|&algorithm| {
            let solver = SolverConfig {
                algorithm,
                ..config.solver.clone()
            };
            let mut engine = Engine::new(base, partition, &solver)?;
            if let Warmup::Settle { max_iters } = config.warmup {
                for _ in 0..max_iters {
                    let res = engine.step()?;
                    if res.primal <= solver.tol_primal && res.dual <= solver.tol_dual {
                        break;
                    }
                }
            }
            Ok(engine)
        })
        .collect()
}

/// Like [`run_scenario`], continuing from engines returned by [`settle`].
pub fn run_scenario_from(
    scenario: &Scenario,
    partition: &Partition,
    config: &DynamicConfig,
    engines: Vec<Engine>,
) -> Result<DynamicResult> {
    let weights = scenario.weight_sequence();
    let mut instances = Vec::with_capacity(weights.len());
    for w in &weights {
        let mut inst = scenario.base.clone();
        inst.set_weights(w)?;
        instances.push(inst);
    }
    let references = instances
        .par_iter()
        .map(|inst| {
            let x = config.reference.optimum(inst)?;
            Ok(FairnessObjective::from_instance(inst).utility(&x))
        })
        .collect::<Result<Vec<f64>>>()?;

    let run = format!("a={}", scenario.amplitude);
    let mut trace = Trace::default();
    let mut events = Vec::new();
    let mut summaries = Vec::new();
    for (&algorithm, mut engine) in config.algorithms.iter().zip(engines) {
        let solver = SolverConfig {
            algorithm,
            label: run.clone(),
            ..config.solver.clone()
        };
        let floats = floats_per_iteration(algorithm, &scenario.base, partition);
        let mut iteration = 0;
        let (mut all_gaps, mut all_violations) = (Vec::new(), Vec::new());
        for (t, inst) in instances.iter().enumerate() {
            let objective = FairnessObjective::from_instance(inst);
            engine.set_weights(&weights[t])?;
            let mut cold = Engine::new(inst, partition, &solver)?;
            cold.step()?;
            let cold_first_gap = relative_gap(&objective, cold.allocation(), references[t]);

            let (mut gaps, mut violations) = (Vec::new(), Vec::new());
            for _ in 0..scenario.iters_per_event {
                let res = engine.step()?;
                iteration += 1;
                let x = engine.allocation();
                let gap = relative_gap(&objective, x, references[t]);
                let violation = inst.violation_percentage(x);
                gaps.push(gap);
                violations.push(violation);
                trace.push(TraceRecord {
                    run: run.clone(),
                    iteration,
                    event: t,
                    algorithm: algorithm.name().into(),
                    objective: objective.utility(x),
                    gap: Some(gap),
                    primal: res.primal,
                    dual: res.dual,
                    violation_pct: violation,
                    message_floats: floats,
                    wall_time: 0.0,
                });
            }
            events.push(EventRecord {
                amplitude: scenario.amplitude,
                algorithm: algorithm.name().into(),
                event: t,
                first_gap: gaps.first().copied().unwrap_or(f64::NAN),
                cold_first_gap,
                last_gap: gaps.last().copied().unwrap_or(f64::NAN),
                mean_gap: mean(&gaps),
                mean_violation: mean(&violations),
            });
            all_gaps.extend(gaps);
            all_violations.extend(violations);
        }
        summaries.push(DynamicSummary {
            amplitude: scenario.amplitude,
            algorithm: algorithm.name().into(),
            mean_gap: mean(&all_gaps),
            mean_violation: mean(&all_violations),
        });
    }
    Ok(DynamicResult {
        trace,
        events,
        summaries,
    })
}

/// One scenario per amplitude, sharing the base instance and seed.
pub fn run_dynamic(
    base: &Instance,
    partition: &Partition,
    amplitudes: &[f64],
    events: usize,
    iters_per_event: usize,
    seed: u64,
    config: &DynamicConfig,
) -> Result<DynamicResult> {
    let scenarios = amplitudes
        .iter()
        .map(|&a| Scenario::new(base.clone(), a, events, iters_per_event, seed))
        .collect::<Result<Vec<_>>>()?;
    let engines = settle(base, partition, config)?;
    let results = scenarios
        .par_iter()
        .map(|s| run_scenario_from(s, partition, config, engines.clone()))
        .collect::<Result<Vec<_>>>()?;
    let mut out = DynamicResult {
        trace: Trace::default(),
        events: Vec::new(),
        summaries: Vec::new(),
    };
    for r in results {
        out.trace.extend(r.trace);
        out.events.extend(r.events);
        out.summaries.extend(r.summaries);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub adaptive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// The reciprocal-penalty run; `lambda` is its frozen value.
    pub adaptive: SweepRow,
}

impl SweepResult {
    /// Grid row with the fewest iterations among converged ones.
    pub fn best(&self) -> Option<&SweepRow> {
        self.rows.iter().filter(|r| r.converged).min_by_key(|r| r.iterations)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(out, self.rows.iter().chain(std::iter::once(&self.adaptive)))
    }
}

fn write_rows<W: Write, T: Serialize>(out: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `lambda_center * 10^k` for `k = -3..=3`.
pub fn default_lambda_grid(lambda_center: f64) -> Vec<f64> {
    (-3..=3).map(|k| lambda_center * 10f64.powi(k)).collect()
}

/// Iterations to convergence of FD-ADMM for each fixed `lambda`, plus the
/// adaptive run. With no grid, the grid is centred on the adaptive run's
/// frozen value.
pub fn sweep_lambda(
    instance: &Instance,
    partition: &Partition,
    grid: Option<&[f64]>,
    tau: usize,
    template: &SolverConfig,
) -> Result<SweepResult> {
    if grid.is_some_and(|g| g.is_empty()) {
        return Err(Error::InvalidArgument("lambda grid is empty".into()));
    }
    let base = SolverConfig {
        algorithm: Algorithm::FdAdmm,
        ..template.clone()
    };
    let adaptive_sol = solve(
        instance,
        partition,
        &SolverConfig {
            penalty: PenaltyRule::Adaptive { tau },
            ..base.clone()
        },
    )?;
    let adaptive = SweepRow {
        lambda: adaptive_sol.lambda.unwrap_or(f64::NAN),
        iterations: adaptive_sol.iterations,
        converged: adaptive_sol.converged,
        adaptive: true,
    };
    let grid = match grid {
        Some(g) => g.to_vec(),
        None => default_lambda_grid(adaptive.lambda),
    };
    let rows = grid
        .par_iter()
        .map(|&lambda| {
            let sol = solve(
                instance,
                partition,
                &SolverConfig {
                    penalty: PenaltyRule::Fixed(lambda),
                    ..base.clone()
                },
            )?;
            Ok(SweepRow {
                lambda,
                iterations: sol.iterations,
                converged: sol.converged,
                adaptive: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows, adaptive })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadRow {
    pub mean_load: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// FD-ADMM iterations to convergence against the mean `|R_j|` of each instance.
pub fn loadcurve(instances: &[Instance], config: &SolverConfig) -> Result<Vec<LoadRow>> {
    instances
        .par_iter()
        .map(|inst| {
            let sol = solve(
                inst,
                &Partition::single(inst),
                &SolverConfig {
                    algorithm: Algorithm::FdAdmm,
                    ..config.clone()
                },
            )?;
            Ok(LoadRow {
                mean_load: inst.mean_link_load(),
                iterations: sol.iterations,
                converged: sol.converged,
            })
        })
        .collect()
}

pub fn write_load_rows<W: Write>(out: W, rows: &[LoadRow]) -> Result<()> {
    write_rows(out, rows)
}

pub fn write_summaries<W: Write>(out: W, rows: &[DynamicSummary]) -> Result<()> {
    write_rows(out, rows)
}

pub fn write_events<W: Write>(out: W, rows: &[EventRecord]) -> Result<()> {
    write_rows(out, rows)
}
