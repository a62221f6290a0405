use alphafair::{project_capped_simplex, project_polyhedron, prox_alpha_fair, Instance};

fn main() -> alphafair::Result<()> {
    println!("prox of lambda * (-w log x) at v:");
    for v in [-2.0, 0.0, 1.0, 5.0] {
        let x = prox_alpha_fair(1.0, 2.0, v, 0.5)?;
        println!("  v={v:5} -> {x:.9}");
    }
    for alpha in [0.5, 2.0, 3.0] {
        println!(
            "alpha={alpha}: prox(v=1, w=1, lambda=1) = {:.9}",
            prox_alpha_fair(alpha, 1.0, 1.0, 1.0)?
        );
    }

    let mut out = [0.0; 2];
    project_capped_simplex(&[3.0, 1.0], 2.0, &mut out);
    println!("project (3, 1) onto sum <= 2: {out:?}");

    // two links in a line, one long route and two short ones
    let inst = Instance::from_parts(1.0, &[1.0, 1.0], &[(&[0, 1], 1.0), (&[0], 1.0), (&[1], 1.0)])?;
    let x = project_polyhedron(&inst, &[2.0, 0.5, 0.5], 1e-12)?;
    println!(
        "Dykstra projection of (2, 0.5, 0.5): {x:.6?}, loads {:.6?}",
        inst.link_loads(&x)
    );
    Ok(())
}
