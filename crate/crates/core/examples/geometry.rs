//! Curvature of a torus of revolution and the Gauss–Bonnet check.

use surfstokes::build_torus_of_revolution;
use surfstokes::geometry::{gaussian_curvature, integrate_scalar};

fn main() -> surfstokes::Result<()> {
    let chart = build_torus_of_revolution(2.0, 1.0, 32, 32)?;
    let k = gaussian_curvature(&chart);
    println!("area            {:.12}", chart.area());
    println!("∫K dA           {:.3e}", integrate_scalar(&chart, &k)?);
    println!("K outer equator {:.12} (1/3)", k[[0, 0]]);
    println!("K inner equator {:.12} (-1)", k[[16, 0]]);
    Ok(())
}
