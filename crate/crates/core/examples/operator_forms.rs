//! The divergence form `−2μ P div D u` against the Bochner form `−μ P(Δu + K u)`.

use surfstokes::build_torus_of_revolution;
use surfstokes::fieldcalc::l2_norm;
use surfstokes::random::SmoothFieldSampler;
use surfstokes::stokes::StokesOperator;

fn main() -> surfstokes::Result<()> {
    let chart = build_torus_of_revolution(2.0, 1.0, 64, 64)?;
    let op = StokesOperator::new(&chart, 1.0)?;
    let mut rng = SmoothFieldSampler::new(5);
    for i in 0..3 {
        let u = rng.divfree_field(&chart);
        let diff = &op.apply_div_form(&u)? - &op.apply_bochner_form(&u)?;
        println!("field {i}: relative difference {:.3e}", l2_norm(&chart, &diff)? / l2_norm(&chart, &u)?);
    }
    Ok(())
}
