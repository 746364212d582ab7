//! Time integration of `ρ(∂_t u + P ∇_u u) + A u = 0` on the divergence-free
//! subspace, with energy, dissipation, and Killing-moment diagnostics.
//!
//! Two backends share the IMEX schemes. `MatrixFree` solves the implicit
//! Stokes step by conjugate gradients with matrix-free operator applications
//! and re-projects every step. `Galerkin` works in the eigenbasis of the
//! assembled operator, where the implicit step is diagonal and every iterate
//! lies in the divergence-free subspace by construction.

use faer::Mat;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::fieldcalc::{
    advect_unchecked, deformation_unchecked, l2_inner_unchecked, tensor_inner_unchecked,
};
use crate::geometry::{build_flat_torus, build_torus_of_revolution, SurfaceChart};
use crate::helmholtz::{HelmholtzSolver, DEFAULT_TOL};
use crate::stokes::{
    assemble_operator, divfree_basis, killing_fields_in, project_onto_equilibria, spectrum, KillingBasis,
    OperatorMatrix, Spectrum, StokesOperator,
};

/// Divergence residual tolerated after each step.
pub const STEP_DIV_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceSpec {
    FlatTorus { l1: f64, l2: f64 },
    TorusOfRevolution { big_r: f64, small_r: f64 },
}

impl SurfaceSpec {
    pub fn build(&self, n_theta: usize, n_phi: usize) -> Result<SurfaceChart> {
        match *self {
            SurfaceSpec::FlatTorus { l1, l2 } => build_flat_torus(l1, l2, n_theta, n_phi),
            SurfaceSpec::TorusOfRevolution { big_r, small_r } => {
                build_torus_of_revolution(big_r, small_r, n_theta, n_phi)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Backward Euler on `A`, forward Euler on `F`.
    Imex1,
    /// Crank–Nicolson on `A`, second-order Adams–Bashforth on `F`.
    Imex2,
}

impl Integrator {
    pub fn order(self) -> u32 {
        match self {
            Integrator::Imex1 => 1,
            Integrator::Imex2 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    MatrixFree,
    Galerkin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub surface: SurfaceSpec,
    pub n_theta: usize,
    pub n_phi: usize,
    pub mu_s: f64,
    pub rho: f64,
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub dealias: bool,
    pub seed: u64,
    /// Include the advection term; `false` gives the linear Stokes flow.
    pub nonlinear: bool,
    pub backend: Backend,
    /// Record a state every this many steps.
    pub sample_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            surface: SurfaceSpec::TorusOfRevolution { big_r: 2.0, small_r: 1.0 },
            n_theta: 32,
            n_phi: 32,
            mu_s: 1.0,
            rho: 1.0,
            dt: 1e-2,
            t_end: 1.0,
            integrator: Integrator::Imex2,
            dealias: true,
            seed: 0,
            nonlinear: true,
            backend: Backend::Galerkin,
            sample_every: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [("mu_s", self.mu_s), ("rho", self.rho), ("dt", self.dt), ("t_end", self.t_end)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidArgument("sample_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn chart(&self) -> Result<SurfaceChart> {
        self.surface.build(self.n_theta, self.n_phi)
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Snapshot of the flow.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub u: VectorField,
    /// `½ρ‖u‖²`
    pub energy: f64,
    /// `2μ_s ∫|D_Σ u|²`
    pub dissipation: f64,
    /// `(u|z_j)_Σ`
    pub killing_moments: Vec<f64>,
    pub div_residual: f64,
}

/// Sampled run together with the per-step diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<SimState>,
    /// `E(t) − E(0) + ∫₀ᵗ dissipation` (trapezoidal in time), per sample.
    pub energy_residual: Vec<f64>,
    /// Largest single-step increase of the energy.
    pub max_energy_growth: f64,
    /// Largest `|(u(t)|z_j) − (u0|z_j)|` over all steps and `j`.
    pub max_moment_drift: f64,
    /// Error that stopped the run early, if any.
    pub error: Option<String>,
}

impl Trajectory {
    pub fn last(&self) -> &SimState {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn max_energy_residual(&self) -> f64 {
        self.energy_residual.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `F(u) = −P_H(∇_u u)`
pub fn nonlinearity(chart: &SurfaceChart, u: &VectorField) -> Result<VectorField> {
    let op = StokesOperator::new(chart, 1.0)?;
    op.check_divergence_free(u)?;
    Ok(op.projector().project(&advect_unchecked(chart, u, u))?.field.scale(-1.0))
}

/// `0.5 · min spacing / max |u|`
pub fn dt_max(chart: &SurfaceChart, u: &VectorField) -> f64 {
    let g = chart.metric();
    let speed_sq = &g[0][0] * &u.comps[0] * &u.comps[0]
        + &(&g[0][1] * &u.comps[0] * &u.comps[1] * 2.0)
        + &g[1][1] * &u.comps[1] * &u.comps[1];
    let vmax = speed_sq.fold(0.0f64, |m, x| m.max(*x)).sqrt();
    if vmax == 0.0 {
        f64::INFINITY
    } else {
        0.5 * chart.min_spacing() / vmax
    }
}

/// Assembled operator in its eigenbasis, shared by Galerkin runs.
#[derive(Debug, Clone)]
pub struct GalerkinModel {
    pub op: OperatorMatrix,
    pub spectrum: Spectrum,
    /// Eigenfields as columns (component-major).
    phi: Mat<f64>,
    /// `W · phi`
    wphi: Mat<f64>,
}

impl GalerkinModel {
    pub fn new(chart: &SurfaceChart, mu_s: f64) -> Result<Self> {
        let basis = divfree_basis(chart, 1e-10)?;
        let op = assemble_operator(chart, mu_s, &basis)?;
        let spectrum = spectrum(&op)?;
        let phi = basis.columns() * &spectrum.eigenvectors;
        let wphi = basis.weighted() * &spectrum.eigenvectors;
        Ok(Self { op, spectrum, phi, wphi })
    }

    pub fn dim(&self) -> usize {
        self.spectrum.eigenvalues.len()
    }

    /// Orthonormal Killing basis from the kernel eigenvectors.
    pub fn killing_basis(&self, chart: &SurfaceChart) -> Result<KillingBasis> {
        KillingBasis::from_fields(chart, self.spectrum.kernel_fields(&self.op))
    }

    /// `(u|φ_a)_Σ`
    pub fn coefficients(&self, u: &VectorField) -> Vec<f64> {
        let v = u.to_vec();
        (0..self.dim())
            .map(|a| self.wphi.col_as_slice(a).iter().zip(&v).map(|(x, y)| x * y).sum())
            .collect()
    }

    pub fn synthesize(&self, shape: (usize, usize), c: &[f64]) -> VectorField {
        let mut out = vec![0.0; self.phi.nrows()];
        for (a, &ca) in c.iter().enumerate() {
            for (o, x) in out.iter_mut().zip(self.phi.col_as_slice(a)) {
                *o += ca * x;
            }
        }
        VectorField::from_slice(shape, &out)
    }
}

enum Engine<'a> {
    MatrixFree(StokesOperator<'a>),
    Galerkin { model: &'a GalerkinModel, coeffs: Vec<f64>, f_prev: Option<Vec<f64>> },
}

/// Stepper for one configuration.
pub struct Simulator<'a> {
    chart: &'a SurfaceChart,
    config: SimConfig,
    kb: KillingBasis,
    projector: HelmholtzSolver<'a>,
    engine: Engine<'a>,
    f_prev: Option<VectorField>,
    state: SimState,
    initial_moments: Vec<f64>,
}

impl<'a> Simulator<'a> {
    /// Prepares a run from `u0`, projected onto the divergence-free subspace.
    ///
    /// `model` is required for the Galerkin backend and ignored otherwise.
    pub fn new(
        chart: &'a SurfaceChart,
        config: SimConfig,
        kb: KillingBasis,
        model: Option<&'a GalerkinModel>,
        u0: &VectorField,
    ) -> Result<Self> {
        config.validate()?;
        chart.check_shape(u0.dim())?;
        if chart.grid_sizes() != (config.n_theta, config.n_phi) {
            return Err(Error::InvalidArgument("chart grid differs from the configuration".into()));
        }
        let projector = HelmholtzSolver::new(chart, DEFAULT_TOL)?;
        let (engine, u) = match config.backend {
            Backend::MatrixFree => {
                let u = projector.project(u0)?.field;
                (Engine::MatrixFree(StokesOperator::new(chart, config.mu_s)?), u)
            }
            Backend::Galerkin => {
                let model = model.ok_or_else(|| {
                    Error::InvalidArgument("the Galerkin backend needs an assembled model".into())
                })?;
                if (model.op.mu_s() - config.mu_s).abs() > 0.0 {
                    return Err(Error::InvalidArgument("model viscosity differs from the configuration".into()));
                }
                let coeffs = model.coefficients(u0);
                let u = model.synthesize(u0.dim(), &coeffs);
                (Engine::Galerkin { model, coeffs, f_prev: None }, u)
            }
        };
        let limit = dt_max(chart, &u);
        if config.dt > limit {
            return Err(Error::TimeStepTooLarge { dt: config.dt, dt_max: limit });
        }
        let mut sim = Self {
            chart,
            config,
            kb,
            projector,
            engine,
            f_prev: None,
            state: SimState {
                t: 0.0,
                u: u.clone(),
                energy: 0.0,
                dissipation: 0.0,
                killing_moments: Vec::new(),
                div_residual: 0.0,
            },
            initial_moments: Vec::new(),
        };
        sim.state = sim.diagnose(0.0, u)?;
        sim.initial_moments = sim.state.killing_moments.clone();
        Ok(sim)
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn killing_basis(&self) -> &KillingBasis {
        &self.kb
    }

    fn diagnose(&self, t: f64, u: VectorField) -> Result<SimState> {
        let d = deformation_unchecked(self.chart, &u);
        Ok(SimState {
            t,
            energy: 0.5 * self.config.rho * l2_inner_unchecked(self.chart, &u, &u),
            dissipation: 2.0 * self.config.mu_s * tensor_inner_unchecked(self.chart, &d, &d),
            killing_moments: self.kb.moments(&u)?,
            div_residual: self.projector.divergence_residual(&u)?,
            u,
        })
    }

    /// `−∇_u u`, optionally dealiased; zero for linear runs.
    fn advection(&self, u: &VectorField) -> Option<VectorField> {
        if !self.config.nonlinear {
            return None;
        }
        let s = self.chart.spectral();
        let a = if self.config.dealias {
            let ud = u.map(|c| s.dealias(c));
            advect_unchecked(self.chart, &ud, &ud).map(|c| s.dealias(c))
        } else {
            advect_unchecked(self.chart, u, u)
        };
        Some(a.scale(-1.0))
    }

    /// Advances one step of size `dt`.
    pub fn step(&mut self) -> Result<&SimState> {
        let dt = self.config.dt;
        let t = self.state.t;
        let fail = |reason: String| Error::StepFailed { t, reason };
        let nu = 1.0 / self.config.rho;
        let adv = self.advection(&self.state.u);
        let u_new = match &mut self.engine {
            Engine::Galerkin { model, coeffs, f_prev } => {
                let f_now = match &adv {
                    Some(a) => model.coefficients(a),
                    None => vec![0.0; coeffs.len()],
                };
                let f_mix: Vec<f64> = match (self.config.integrator, f_prev.as_ref()) {
                    (Integrator::Imex2, Some(fp)) => {
                        f_now.iter().zip(fp).map(|(a, b)| 1.5 * a - 0.5 * b).collect()
                    }
                    _ => f_now.clone(),
                };
                let theta = if self.config.integrator == Integrator::Imex1 { 1.0 } else { 0.5 };
                for (a, c) in coeffs.iter_mut().enumerate() {
                    let lam = nu * model.spectrum.eigenvalues[a];
                    *c = ((1.0 - (1.0 - theta) * dt * lam) * *c + dt * f_mix[a]) / (1.0 + theta * dt * lam);
                }
                *f_prev = Some(f_now);
                model.synthesize(self.state.u.dim(), coeffs)
            }
            Engine::MatrixFree(op) => {
                let u = &self.state.u;
                let f_now = match &adv {
                    Some(a) => self.projector.project(a).map_err(|e| fail(e.to_string()))?.field,
                    None => VectorField::zeros(u.dim()),
                };
                let f_mix = match (self.config.integrator, self.f_prev.as_ref()) {
                    (Integrator::Imex2, Some(fp)) => f_now.scale(1.5) - fp.scale(0.5),
                    _ => f_now.clone(),
                };
                let theta = if self.config.integrator == Integrator::Imex1 { 1.0 } else { 0.5 };
                let mut rhs = u + &f_mix.scale(dt);
                if theta < 1.0 {
                    let au = op.apply_bochner_form(u).map_err(|e| fail(e.to_string()))?;
                    rhs.axpy(-(1.0 - theta) * dt * nu, &au);
                }
                let x = implicit_solve(self.chart, op, theta * dt * nu, &rhs, u)
                    .map_err(|e| fail(e.to_string()))?;
                self.f_prev = Some(f_now);
                self.projector.project(&x).map_err(|e| fail(e.to_string()))?.field
            }
        };
        if !u_new.is_finite() {
            return Err(fail("non-finite velocity".into()));
        }
        let next = self.diagnose(t + dt, u_new)?;
        if next.div_residual > STEP_DIV_LIMIT {
            return Err(fail(format!("divergence residual {:e} after step", next.div_residual)));
        }
        self.state = next;
        Ok(&self.state)
    }

    /// Runs to `t_end`, sampling every `sample_every` steps.
    pub fn run(mut self) -> Trajectory {
        let e0 = self.state.energy;
        let mut traj = Trajectory {
            states: vec![self.state.clone()],
            energy_residual: vec![0.0],
            max_energy_growth: 0.0,
            max_moment_drift: 0.0,
            error: None,
        };
        let mut dissipated = 0.0;
        let steps = self.config.steps();
        for n in 1..=steps {
            let (e_prev, d_prev) = (self.state.energy, self.state.dissipation);
            if let Err(e) = self.step() {
                traj.error = Some(e.to_string());
                break;
            }
            let s = &self.state;
            dissipated += 0.5 * self.config.dt * (d_prev + s.dissipation);
            traj.max_energy_growth = traj.max_energy_growth.max(s.energy - e_prev);
            for (m, m0) in s.killing_moments.iter().zip(&self.initial_moments) {
                traj.max_moment_drift = traj.max_moment_drift.max((m - m0).abs());
            }
            if n % self.config.sample_every == 0 || n == steps {
                traj.states.push(s.clone());
                traj.energy_residual.push(s.energy - e0 + dissipated);
            }
        }
        traj
    }
}

/// Solves `(I + c A) x = rhs` on divergence-free fields by conjugate
/// gradients in the L² inner product, starting from `guess`.
fn implicit_solve(
    chart: &SurfaceChart,
    op: &StokesOperator<'_>,
    c: f64,
    rhs: &VectorField,
    guess: &VectorField,
) -> Result<VectorField> {
    let apply = |v: &VectorField| -> Result<VectorField> {
        let av = op.apply_bochner_form(v)?;
        Ok(v + &av.scale(c))
    };
    let dot = |a: &VectorField, b: &VectorField| l2_inner_unchecked(chart, a, b);
    let scale = dot(rhs, rhs).sqrt().max(f64::MIN_POSITIVE);
    let mut x = guess.clone();
    let mut r = rhs - &apply(&x)?;
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let max_iter = 4 * chart.node_count();
    let mut it = 0;
    while rr.sqrt() > 1e-12 * scale {
        if it >= max_iter {
            return Err(Error::NoConvergence { solver: "implicit Stokes CG", iterations: it, residual: rr.sqrt() });
        }
        let ap = apply(&p)?;
        let alpha = rr / dot(&p, &ap);
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let rr_new = dot(&r, &r);
        p = &r + &p.scale(rr_new / rr);
        rr = rr_new;
        it += 1;
    }
    Ok(x)
}

/// Builds the chart, Killing basis, and (if needed) the Galerkin model, then runs.
pub fn simulate(config: &SimConfig, u0: &VectorField) -> Result<Trajectory> {
    let chart = config.chart()?;
    match config.backend {
        Backend::Galerkin => {
            let model = GalerkinModel::new(&chart, config.mu_s)?;
            let kb = model.killing_basis(&chart)?;
            Ok(Simulator::new(&chart, config.clone(), kb, Some(&model), u0)?.run())
        }
        Backend::MatrixFree => {
            let basis = divfree_basis(&chart, 1e-10)?;
            let kb = killing_fields_in(&chart, &basis, crate::stokes::KERNEL_RELATIVE)?;
            Ok(Simulator::new(&chart, config.clone(), kb, None, u0)?.run())
        }
    }
}

/// Exponential decay fit of `‖u(t) − P_E u(t)‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub alpha: f64,
    /// Root-mean-square residual of the log-linear fit.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares slope of `log ‖u − P_E u‖` over the second half of the samples.
pub fn decay_rate_fit(chart: &SurfaceChart, trajectory: &Trajectory, kb: &KillingBasis) -> Result<DecayFit> {
    let states = &trajectory.states;
    let first = states.first().ok_or_else(|| Error::DecayFit("empty trajectory".into()))?;
    let norm = |u: &VectorField| -> Result<f64> {
        let v = u - &project_onto_equilibria(u, kb)?;
        Ok(l2_inner_unchecked(chart, &v, &v).max(0.0).sqrt())
    };
    let u0_norm = l2_inner_unchecked(chart, &first.u, &first.u).max(0.0).sqrt();
    let signal0 = norm(&first.u)?;
    if !(signal0 > 1e-10 * u0_norm) {
        return Err(Error::DecayFit(format!(
            "initial signal {signal0:e} is below 1e-10 of ‖u0‖ = {u0_norm:e}"
        )));
    }
    let mut pts = Vec::new();
    for s in &states[states.len() / 2..] {
        let y = norm(&s.u)?;
        if y > 1e-12 * signal0 {
            pts.push((s.t, y.ln()));
        }
    }
    if pts.len() < 10 {
        return Err(Error::DecayFit(format!("only {} usable samples in the tail window", pts.len())));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::DecayFit(format!("signal is not decaying (slope {slope:e})")));
    }
    let residual =
        (pts.iter().map(|p| (p.1 - ym - slope * (p.0 - tm)).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit { alpha: -slope, residual, points: pts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldcalc::l2_norm;
    use crate::random::SmoothFieldSampler;
    use std::f64::consts::PI;

    fn flat_config() -> SimConfig {
        SimConfig {
            surface: SurfaceSpec::FlatTorus { l1: 2.0 * PI, l2: 2.0 * PI },
            n_theta: 16,
            n_phi: 16,
            ..SimConfig::default()
        }
    }

    #[test]
    fn nonlinearity_examples() {
        let flat = flat_config().chart().unwrap();
        let u = VectorField::from_fn(&flat, |t, _| (0.0, t.sin()));
        assert!(nonlinearity(&flat, &u).unwrap().max_abs() <= 1e-12);
        let c = build_torus_of_revolution(2.0, 1.0, 32, 32).unwrap();
        let z = VectorField::from_fn(&c, |_, _| (0.0, 1.0));
        assert!(l2_norm(&c, &nonlinearity(&c, &z).unwrap()).unwrap() <= 1e-8);
        let mut rng = SmoothFieldSampler::new(5);
        for _ in 0..5 {
            let u = rng.divfree_field(&c);
            let f = nonlinearity(&c, &u).unwrap();
            let scale = l2_norm(&c, &f).unwrap() * l2_norm(&c, &u).unwrap();
            assert!(l2_inner_unchecked(&c, &f, &u).abs() <= 1e-8 * scale);
        }
        let bad = VectorField::from_fn(&c, |_, _| (1.0, 0.0));
        assert!(nonlinearity(&c, &bad).is_err());
    }

    #[test]
    fn single_mode_decay_both_backends() {
        for backend in [Backend::MatrixFree, Backend::Galerkin] {
            let cfg = SimConfig { dt: 1e-2, t_end: 0.5, backend, ..flat_config() };
            let chart = cfg.chart().unwrap();
            let u0 = VectorField::from_fn(&chart, |t, _| (0.0, t.sin()));
            let traj = simulate(&cfg, &u0).unwrap();
            assert!(traj.error.is_none(), "{:?}", traj.error);
            let last = traj.last();
            let ratio = l2_norm(&chart, &last.u).unwrap() / l2_norm(&chart, &u0).unwrap();
            assert!((ratio - (-0.5f64).exp()).abs() <= 1e-4, "{backend:?} {ratio}");
            assert!(traj.max_energy_growth <= 0.0);
        }
    }

    #[test]
    fn killing_field_is_fixed_point() {
        let cfg = SimConfig { n_theta: 16, n_phi: 16, dt: 0.05, t_end: 0.5, ..SimConfig::default() };
        let chart = cfg.chart().unwrap();
        let z = VectorField::from_fn(&chart, |_, _| (0.0, 0.3));
        let traj = simulate(&cfg, &z).unwrap();
        let drift = l2_norm(&chart, &(&traj.last().u - &z)).unwrap();
        assert!(drift <= 1e-8 * l2_norm(&chart, &z).unwrap(), "{drift:e}");
        let kb = KillingBasis::from_fields(&chart, vec![z.scale(1.0 / l2_norm(&chart, &z).unwrap())]).unwrap();
        assert!(matches!(decay_rate_fit(&chart, &traj, &kb), Err(Error::DecayFit(_))));
    }

    #[test]
    fn rejects_large_time_step() {
        let cfg = SimConfig { dt: 10.0, t_end: 10.0, ..flat_config() };
        let chart = cfg.chart().unwrap();
        let u0 = VectorField::from_fn(&chart, |t, _| (0.0, t.sin()));
        assert!(matches!(simulate(&cfg, &u0), Err(Error::TimeStepTooLarge { .. })));
    }
}
