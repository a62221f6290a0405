use alphafair::experiments::{run_dynamic, DynamicConfig};
use alphafair::{generate_random, GeneratorParams, Partition};

// Weights drift every 10 iterations; the distributed solver keeps every
// reported allocation feasible while the price baseline overshoots.
fn main() -> alphafair::Result<()> {
    let inst = generate_random(&GeneratorParams {
        seed: 11,
        nodes: 20,
        links: 50,
        routes: 60,
        ..GeneratorParams::default()
    })?;
    let part = Partition::balanced(&inst, 3)?;
    let result = run_dynamic(&inst, &part, &[0.05, 0.5], 10, 10, 1, &DynamicConfig::default())?;
    for s in &result.summaries {
        println!(
            "a={:<5} {:8} mean gap {:.3e}  mean violation {:.2}%",
            s.amplitude, s.algorithm, s.mean_gap, s.mean_violation
        );
    }
    Ok(())
}
