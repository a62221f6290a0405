use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use alphafair::experiments::{
    loadcurve, run_dynamic, standard_instance, sweep_lambda, write_events, write_load_rows, write_summaries,
    DynamicConfig, ReferenceMethod, Warmup, DEFAULT_AMPLITUDES, DEFAULT_EVENTS, DEFAULT_ITERS_PER_EVENT,
};
use alphafair::fairness::DEFAULT_TAU;
use alphafair::solvers::relative_gap;
use alphafair::{
    generate_random, reference_solution, solve, Algorithm, Error, FairnessObjective, GeneratorParams, Instance,
    Partition, PenaltyRule, Result, SolverConfig,
};

#[derive(Parser)]
#[command(name = "fairalloc", version, about = "Alpha-fair bandwidth allocation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    Gen(GenArgs),
    /// Solve one instance and report the gap to the reference optimum.
    Solve(SolveArgs),
    /// Drift route weights over a sequence of events and track each algorithm.
    Dynamic(DynamicArgs),
    /// Iterations to convergence over a grid of fixed penalties.
    SweepLambda(SweepArgs),
    /// Iterations to convergence against mean link load.
    Loadcurve(LoadArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    nodes: usize,
    #[arg(long, default_value_t = 40)]
    links: usize,
    #[arg(long, default_value_t = 50)]
    routes: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    cap_min: f64,
    #[arg(long, default_value_t = 10.0)]
    cap_max: f64,
    #[arg(long, default_value_t = 1.0)]
    weight_min: f64,
    #[arg(long, default_value_t = 1.0)]
    weight_max: f64,
    /// Also write a balanced partition of the links into this many domains.
    #[arg(long, requires = "partition_out")]
    domains: Option<usize>,
    #[arg(long)]
    partition_out: Option<PathBuf>,
    /// Instance file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProblemArgs {
    /// Instance file. Experiments fall back to a seeded 200-route instance.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Link-to-domain assignment file.
    #[arg(long, conflicts_with = "domains")]
    partition: Option<PathBuf>,
    /// Balanced partition into this many domains.
    #[arg(long)]
    domains: Option<usize>,
    /// Overrides the instance's alpha.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SolverArgs {
    /// A positive value or `adaptive`.
    #[arg(long, default_value = "adaptive", value_parser = parse_lambda)]
    lambda: LambdaArg,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    adapt_tau: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol_primal: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol_dual: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    /// Wall-clock budget in seconds; 5 when given without a value.
    #[arg(long, num_args = 0..=1, default_missing_value = "5")]
    time_budget: Option<f64>,
    /// Run link updates on all cores.
    #[arg(long)]
    parallel: bool,
    /// Fill the wall_time trace column.
    #[arg(long)]
    record_time: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "fd-admm")]
    algorithm: Algorithm,
    /// Trace file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the final allocation as JSON.
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Args)]
struct DynamicArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',', default_value = "fd-admm,lagr")]
    algorithm: Vec<Algorithm>,
    /// Comma-separated amplitudes in [0, 1].
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_AMPLITUDES)]
    amplitude: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_EVENTS)]
    events: usize,
    #[arg(long, default_value_t = DEFAULT_ITERS_PER_EVENT)]
    iters_per_event: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optimum used for the gap column: `barrier` or `fd-admm`.
    #[arg(long, default_value = "barrier")]
    reference: ReferenceMethod,
    /// Start event 0 from each solver's initial point instead of a settled state.
    #[arg(long)]
    cold_start: bool,
    /// Per-amplitude mean gap and violation.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Per-event statistics, including the cold-start comparison.
    #[arg(long)]
    events_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Comma-separated fixed penalties; defaults to the adaptive value times 10^k, k = -3..3.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LoadArgs {
    /// Instance files, one row each.
    #[arg(long)]
    instance: Vec<PathBuf>,
    /// Without instance files, generate one instance per route count.
    #[arg(long, value_delimiter = ',', default_value = "50,100,150,200,250")]
    routes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    nodes: usize,
    #[arg(long, default_value_t = 40)]
    links: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy)]
enum LambdaArg {
    Adaptive,
    Fixed(f64),
}

fn parse_lambda(s: &str) -> std::result::Result<LambdaArg, String> {
    if s == "adaptive" {
        return Ok(LambdaArg::Adaptive);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(LambdaArg::Fixed(v)),
        _ => Err(format!("expected a positive number or `adaptive`, got `{s}`")),
    }
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            penalty: match self.lambda {
                LambdaArg::Adaptive => PenaltyRule::Adaptive { tau: self.adapt_tau },
                LambdaArg::Fixed(v) => PenaltyRule::Fixed(v),
            },
            tol_primal: self.tol_primal,
            tol_dual: self.tol_dual,
            max_iters: self.max_iters,
            time_budget: self.time_budget.map(Duration::from_secs_f64),
            parallel: self.parallel,
            record_time: self.record_time,
            ..SolverConfig::default()
        }
    }
}

impl ProblemArgs {
    fn load(&self, fallback: bool) -> Result<(Instance, Partition)> {
        let mut instance = match &self.instance {
            Some(path) => Instance::load(path)?,
            None if fallback => standard_instance(self.seed)?,
            None => return Err(Error::InvalidArgument("--instance is required".into())),
        };
        if let Some(alpha) = self.alpha {
            instance.alpha = alpha;
            instance.check()?;
        }
        let partition = match (&self.partition, self.domains) {
            (Some(path), _) => Partition::load(&instance, path)?,
            (None, Some(k)) => Partition::balanced(&instance, k)?,
            (None, None) => Partition::single(&instance),
        };
        Ok((instance, partition))
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_error(p, e))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn io_error(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_error(path, e))?);
    f(&mut w)?;
    w.flush().map_err(|e| io_error(path, e))
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let instance = generate_random(&GeneratorParams {
        seed: args.seed,
        nodes: args.nodes,
        links: args.links,
        routes: args.routes,
        capacity_range: (args.cap_min, args.cap_max),
        weight_range: (args.weight_min, args.weight_max),
        alpha: args.alpha,
    })?;
    match &args.out {
        Some(p) => instance.save(p)?,
        None => print!("{}", instance.to_json()),
    }
    if let (Some(k), Some(p)) = (args.domains, &args.partition_out) {
        Partition::balanced(&instance, k)?.save(p)?;
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let (instance, partition) = args.problem.load(false)?;
    let mut config = SolverConfig {
        algorithm: args.algorithm,
        ..args.solver.config()
    };
    // reject bad configurations before paying for the reference run
    alphafair::Engine::new(&instance, &partition, &config)?;
    let reference = reference_solution(&instance)?;
    config.reference = Some(reference.clone());
    let sol = solve(&instance, &partition, &config)?;
    sol.trace.write_csv(output(&args.out)?)?;
    if let Some(path) = &args.solution {
        let text = serde_json::to_string_pretty(&sol.allocation).expect("allocation serializes");
        std::fs::write(path, text + "\n").map_err(|e| io_error(path, e))?;
    }

    let objective = FairnessObjective::from_instance(&instance);
    let f_ref = objective.utility(&reference);
    eprintln!(
        "algorithm={} iterations={} converged={} objective={:.12e} gap={:.6e} violation_pct={}",
        args.algorithm,
        sol.iterations,
        sol.converged,
        objective.utility(&sol.allocation),
        relative_gap(&objective, &sol.allocation, f_ref),
        instance.violation_percentage(&sol.allocation),
    );
    match &sol.best_feasible {
        Some(best) => eprintln!("best_feasible_gap={:.6e}", relative_gap(&objective, best, f_ref)),
        None => eprintln!("best_feasible_gap=none"),
    }
    Ok(())
}

fn cmd_dynamic(args: DynamicArgs) -> Result<()> {
    let (instance, partition) = args.problem.load(true)?;
    let config = DynamicConfig {
        algorithms: args.algorithm.clone(),
        solver: args.solver.config(),
        reference: args.reference,
        warmup: if args.cold_start {
            Warmup::Cold
        } else {
            Warmup::default()
        },
    };
    let result = run_dynamic(
        &instance,
        &partition,
        &args.amplitude,
        args.events,
        args.iters_per_event,
        args.problem.seed,
        &config,
    )?;
    result.trace.write_csv(output(&args.out)?)?;
    if let Some(path) = &args.summary {
        write_file(path, |w| write_summaries(w, &result.summaries))?;
    }
    if let Some(path) = &args.events_out {
        write_file(path, |w| write_events(w, &result.events))?;
    }
    for s in &result.summaries {
        eprintln!(
            "amplitude={} algorithm={} mean_gap={:.6e} mean_violation_pct={:.6}",
            s.amplitude, s.algorithm, s.mean_gap, s.mean_violation
        );
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let (instance, partition) = args.problem.load(true)?;
    let result = sweep_lambda(
        &instance,
        &partition,
        args.grid.as_deref(),
        args.solver.adapt_tau,
        &args.solver.config(),
    )?;
    result.write_csv(output(&args.out)?)?;
    Ok(())
}

fn cmd_loadcurve(args: LoadArgs) -> Result<()> {
    let instances = if args.instance.is_empty() {
        args.routes
            .iter()
            .map(|&routes| {
                generate_random(&GeneratorParams {
                    seed: args.seed,
                    nodes: args.nodes,
                    links: args.links,
                    routes,
                    ..GeneratorParams::default()
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        args.instance.iter().map(Instance::load).collect::<Result<Vec<_>>>()?
    };
    let rows = loadcurve(&instances, &args.solver.config())?;
    write_load_rows(output(&args.out)?, &rows)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotConverged { .. }
        | Error::ProxDiverged { .. }
        | Error::ProjectionCap { .. }
        | Error::Protocol { .. } => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Dynamic(a) => cmd_dynamic(a),
        Command::SweepLambda(a) => cmd_sweep(a),
        Command::Loadcurve(a) => cmd_loadcurve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
