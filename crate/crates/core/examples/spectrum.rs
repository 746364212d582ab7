//! Assembled Stokes matrix and its lowest eigenvalues.

use surfstokes::build_torus_of_revolution;
use surfstokes::stokes::{assemble_operator, divfree_basis, spectrum};

fn main() -> surfstokes::Result<()> {
    let chart = build_torus_of_revolution(2.0, 1.0, 24, 24)?;
    let basis = divfree_basis(&chart, 1e-10)?;
    let op = assemble_operator(&chart, 1.0, &basis)?;
    let sp = spectrum(&op)?;
    println!("dimension {}, asymmetry {:.1e}", op.dim(), op.asymmetry());
    println!("s(-A) = {:.3e}, kernel {}, gap {:.6}", sp.spectral_bound(), sp.kernel_dim(), sp.gap());
    for (i, x) in sp.eigenvalues.iter().take(8).enumerate() {
        println!("λ_{i} = {x:.10}");
    }
    Ok(())
}
