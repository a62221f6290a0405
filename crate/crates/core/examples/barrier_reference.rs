use alphafair::solvers::barrier_optimum;
use alphafair::{generate_random, reference_solution, FairnessObjective, GeneratorParams};

// Compares the interior-point optimum with the ADMM reference.
fn main() -> alphafair::Result<()> {
    let inst = generate_random(&GeneratorParams {
        seed: 2,
        nodes: 10,
        links: 20,
        routes: 25,
        weight_range: (0.5, 2.0),
        ..GeneratorParams::default()
    })?;
    let obj = FairnessObjective::from_instance(&inst);
    let a = barrier_optimum(&inst)?;
    let b = reference_solution(&inst)?;
    let diff = a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    println!("barrier utility {:.10}", obj.utility(&a));
    println!("admm    utility {:.10}", obj.utility(&b));
    println!("max |difference| {diff:.2e}");
    Ok(())
}
