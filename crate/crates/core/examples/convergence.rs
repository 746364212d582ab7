//! Nonlinear flow on a torus of revolution approaching `P_E u0`.

use surfstokes::dynamics::{decay_rate_fit, GalerkinModel, SimConfig, Simulator};
use surfstokes::fieldcalc::l2_norm;
use surfstokes::random::SmoothFieldSampler;
use surfstokes::stokes::project_onto_equilibria;

fn main() -> surfstokes::Result<()> {
    let cfg = SimConfig { n_theta: 16, n_phi: 16, dt: 0.02, t_end: 30.0, sample_every: 25, ..SimConfig::default() };
    let chart = cfg.chart()?;
    let model = GalerkinModel::new(&chart, cfg.mu_s)?;
    let kb = model.killing_basis(&chart)?;
    let u0 = SmoothFieldSampler::new(7).divfree_field(&chart);
    let u0 = u0.scale(0.5 / l2_norm(&chart, &u0)?);
    let target = project_onto_equilibria(&u0, &kb)?;
    let traj = Simulator::new(&chart, cfg, kb.clone(), Some(&model), &u0)?.run();
    if let Some(e) = &traj.error {
        eprintln!("stopped early: {e}");
    }
    for s in traj.states.iter().step_by(4) {
        println!("t = {:5.1}  E = {:.6e}  ‖u − P_E u0‖ = {:.3e}", s.t, s.energy, l2_norm(&chart, &(&s.u - &target))?);
    }
    let fit = decay_rate_fit(&chart, &traj, &kb)?;
    println!("α_fit = {:.6}, spectral gap = {:.6}", fit.alpha, model.spectrum.gap());
    println!("Killing-moment drift {:.2e}", traj.max_moment_drift);
    Ok(())
}
