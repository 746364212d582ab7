//! Korn constant on the complement of the Killing fields.

use surfstokes::korn::korn_constant;
use surfstokes::stokes::{divfree_basis, killing_fields_in, KERNEL_RELATIVE};
use surfstokes::{build_flat_torus, build_torus_of_revolution};

fn main() -> surfstokes::Result<()> {
    let flat = build_flat_torus(2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI, 16, 16)?;
    let torus = build_torus_of_revolution(2.0, 1.0, 16, 16)?;
    for (name, chart) in [("flat torus (exact 2)", flat), ("torus of revolution", torus)] {
        let basis = divfree_basis(&chart, 1e-10)?;
        let kb = killing_fields_in(&chart, &basis, KERNEL_RELATIVE)?;
        println!("{name}: C = {:.10}", korn_constant(&chart, &kb, &basis)?);
    }
    Ok(())
}
