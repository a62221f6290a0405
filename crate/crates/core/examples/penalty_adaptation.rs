use alphafair::experiments::sweep_lambda;
use alphafair::{
    adapt_penalty, generate_random, moduli, FairnessObjective, GeneratorParams, Partition, PenaltyState, SolverConfig,
};

fn main() -> alphafair::Result<()> {
    let inst = generate_random(&GeneratorParams {
        seed: 3,
        nodes: 12,
        links: 24,
        routes: 40,
        ..GeneratorParams::default()
    })?;
    let obj = FairnessObjective::from_instance(&inst);
    let floor = vec![0.1; inst.n_routes()];
    let m = moduli(&inst, &obj, &floor)?;
    println!("sigma={:.4e} L={:.4e}", m.sigma, m.lipschitz);

    let state = adapt_penalty(PenaltyState::adaptive(30), 0, &floor, &obj, &inst.bottlenecks())?;
    println!("lambda from floor 0.1: {:.6}", state.lambda);

    let part = Partition::balanced(&inst, 2)?;
    let sweep = sweep_lambda(&inst, &part, None, 30, &SolverConfig::default())?;
    for row in &sweep.rows {
        println!(
            "lambda={:10.4e} iterations={:6} converged={}",
            row.lambda, row.iterations, row.converged
        );
    }
    println!(
        "adaptive: {} iterations at lambda={:.4e}",
        sweep.adaptive.iterations, sweep.adaptive.lambda
    );
    Ok(())
}
