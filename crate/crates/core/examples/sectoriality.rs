//! Resolvent probe `(|λ| + 1)‖(λ + ω + A)⁻¹ f‖` along the rays `arg λ = ±3π/4`.

use std::f64::consts::FRAC_PI_4;

use surfstokes::build_torus_of_revolution;
use surfstokes::stokes::{assemble_operator, divfree_basis, random_unit_vector, resolvent_probe};

fn main() -> surfstokes::Result<()> {
    let chart = build_torus_of_revolution(2.0, 1.0, 16, 16)?;
    let op = assemble_operator(&chart, 1.0, &divfree_basis(&chart, 1e-10)?)?;
    let f = random_unit_vector(op.dim(), 3);
    let table = resolvent_probe(&op, 0.1, FRAC_PI_4, &[1.0, 10.0, 100.0, 1000.0], &f)?;
    println!("{:>8} {:>4} {:>10} {:>10}", "|λ|", "ray", "q", "q_norm");
    for r in &table.rows {
        println!("{:>8} {:>4} {:>10.5} {:>10.5}", r.magnitude, r.ray, r.q, r.q_norm);
    }
    println!("max q {:.5}, variation {:.3}", table.max_q(), table.q_variation());
    Ok(())
}
