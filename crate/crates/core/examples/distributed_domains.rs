use alphafair::solvers::FdAdmm;
use alphafair::{
    generate_random, measure_overhead, FairnessObjective, GeneratorParams, Partition, PenaltyState, Simulation,
};

// Runs the controllers of three domains with explicit message passing and
// checks them against the monolithic solver after every round.
fn main() -> alphafair::Result<()> {
    let inst = generate_random(&GeneratorParams {
        seed: 7,
        nodes: 15,
        links: 30,
        routes: 50,
        ..GeneratorParams::default()
    })?;
    let part = Partition::balanced(&inst, 3)?;
    let obj = FairnessObjective::from_instance(&inst);
    let penalty = PenaltyState::adaptive(30);

    let mut sim = Simulation::new(&inst, &part, &obj, penalty)?;
    let mut mono = FdAdmm::new(&inst, &part, obj, penalty)?;
    for _ in 0..50 {
        sim.run_round()?;
        mono.round()?;
        assert_eq!(&sim.global_state(), mono.state());
    }
    for node in sim.nodes() {
        println!(
            "domain {}: {} links, {} routes known",
            node.domain(),
            node.owned_links().len(),
            node.known_routes().len()
        );
    }
    let report = measure_overhead(sim.meter(), &part);
    println!(
        "floats sent per domain over {} rounds: {:?}",
        report.rounds, report.per_domain
    );
    println!("predicted per round: {:?}", report.predicted_per_round);
    println!("matches prediction: {}", report.matches_prediction);
    println!("lambda after adaptation: {:.6}", sim.penalty().lambda);
    Ok(())
}
