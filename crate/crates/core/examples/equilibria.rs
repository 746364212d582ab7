//! Killing fields (equilibria) and the projection `P_E`.

use surfstokes::fieldcalc::l2_norm;
use surfstokes::random::SmoothFieldSampler;
use surfstokes::stokes::{killing_fields, project_onto_equilibria, KERNEL_RELATIVE};
use surfstokes::{build_flat_torus, build_torus_of_revolution};

fn main() -> surfstokes::Result<()> {
    let flat = build_flat_torus(2.0 * std::f64::consts::PI, 3.0, 16, 16)?;
    let torus = build_torus_of_revolution(2.0, 1.0, 16, 16)?;
    for (name, chart) in [("flat torus", flat), ("torus of revolution", torus)] {
        let kb = killing_fields(&chart, KERNEL_RELATIVE)?;
        let u = SmoothFieldSampler::new(2).divfree_field(&chart);
        let pu = project_onto_equilibria(&u, &kb)?;
        println!(
            "{name}: dim E = {}, gap ratio {:.1e}, ‖P_E u‖/‖u‖ = {:.4}",
            kb.dim(),
            kb.split().gap_ratio,
            l2_norm(&chart, &pu)? / l2_norm(&chart, &u)?
        );
    }
    Ok(())
}
