use alphafair::{solve, Algorithm, Instance, Partition, SolverConfig};

// One link of capacity 6 shared by three routes with weights 1, 2, 3.
// Proportional fairness splits the capacity in proportion to the weights.
fn main() -> alphafair::Result<()> {
    let inst = Instance::from_parts(1.0, &[6.0], &[(&[0], 1.0), (&[0], 2.0), (&[0], 3.0)])?;
    let part = Partition::single(&inst);
    for algorithm in [Algorithm::FdAdmm, Algorithm::CAdmm, Algorithm::Lagr] {
        let config = SolverConfig {
            algorithm,
            ..SolverConfig::default()
        };
        let sol = solve(&inst, &part, &config)?;
        println!(
            "{algorithm:8} iterations={:6} x={:?}",
            sol.iterations,
            sol.allocation.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>()
        );
    }
    Ok(())
}
