//! Leray projection of a random field and pressure recovery.

use surfstokes::build_torus_of_revolution;
use surfstokes::fieldcalc::l2_norm;
use surfstokes::helmholtz::{recover_pressure, HelmholtzSolver};
use surfstokes::random::SmoothFieldSampler;

fn main() -> surfstokes::Result<()> {
    let chart = build_torus_of_revolution(2.0, 1.0, 32, 32)?;
    let solver = HelmholtzSolver::new(&chart, 1e-10)?;
    let v = SmoothFieldSampler::new(1).vector_field(&chart);
    let p = solver.project(&v)?;
    println!("‖v‖            {:.6}", l2_norm(&chart, &v)?);
    println!("‖Pv‖           {:.6}", l2_norm(&chart, &p.field)?);
    println!("div residual   {:.3e}", solver.divergence_residual(&p.field)?);
    let pressure = recover_pressure(&chart, &p.field, 1.0)?;
    println!("pressure range {:.6}", pressure.fold(f64::MIN, |m, x| m.max(*x)) - pressure.fold(f64::MAX, |m, x| m.min(*x)));
    Ok(())
}
