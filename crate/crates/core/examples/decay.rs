//! Linear Stokes decay of a single Fourier mode with both backends.

use std::f64::consts::PI;

use surfstokes::dynamics::{simulate, Backend, SimConfig, SurfaceSpec};
use surfstokes::VectorField;

fn main() -> surfstokes::Result<()> {
    for backend in [Backend::Galerkin, Backend::MatrixFree] {
        let cfg = SimConfig {
            surface: SurfaceSpec::FlatTorus { l1: 2.0 * PI, l2: 2.0 * PI },
            n_theta: 16,
            n_phi: 16,
            dt: 1e-3,
            nonlinear: false,
            backend,
            sample_every: 250,
            ..SimConfig::default()
        };
        let chart = cfg.chart()?;
        let u0 = VectorField::from_fn(&chart, |t, _| (0.0, t.sin()));
        let traj = simulate(&cfg, &u0)?;
        let e0 = traj.states[0].energy;
        println!("{backend:?}");
        for s in &traj.states {
            println!("  t = {:.2}  E/E0 = {:.10}  exact {:.10}", s.t, s.energy / e0, (-2.0 * s.t).exp());
        }
    }
    Ok(())
}
