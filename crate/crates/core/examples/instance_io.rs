use alphafair::{generate_random, GeneratorParams, Instance, Partition};

fn main() -> alphafair::Result<()> {
    let inst = generate_random(&GeneratorParams {
        seed: 5,
        nodes: 8,
        links: 12,
        routes: 10,
        weight_range: (1.0, 4.0),
        ..GeneratorParams::default()
    })?;
    let dir = std::env::temp_dir();
    let inst_path = dir.join("alphafair_instance.json");
    let part_path = dir.join("alphafair_partition.json");
    inst.save(&inst_path)?;
    let part = Partition::balanced(&inst, 2)?;
    part.save(&part_path)?;

    let back = Instance::load(&inst_path)?;
    let part_back = Partition::load(&back, &part_path)?;
    assert_eq!(back, inst);
    println!(
        "{} links, {} routes, mean link load {:.2}",
        back.n_links(),
        back.n_routes(),
        back.mean_link_load()
    );
    for p in 1..=part_back.n_domains() {
        println!("domain {p}: links {:?}", part_back.links_of(p));
    }
    println!("shared routes per domain pair: {:?}", part_back.shared_routes());

    let bad = r#"{"alpha": 1.0, "links": [{"id": 0, "capacity": -1.0}], "routes": []}"#;
    match Instance::from_json(bad) {
        Ok(_) => println!("unexpected: accepted"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
