use std::fmt;
use std::path::Path;
use std::time::Instant;

use super::csv::emit_csv;
use crate::dynamics::{decay_rate_fit, GalerkinModel, SimConfig, Simulator, SurfaceSpec, Trajectory};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::fieldcalc::{deformation_norm_sq, grad_scalar, h1_norm, l2_inner, l2_norm};
use crate::geometry::{gaussian_curvature, integrate_scalar, SurfaceChart};
use crate::helmholtz::HelmholtzSolver;
use crate::korn::{korn_intermediate_check, korn_problem, random_complement_field};
use crate::random::SmoothFieldSampler;
use crate::stokes::{
    assemble_operator, divfree_basis, killing_fields_in, project_onto_equilibria, random_unit_vector, resolvent_probe,
    spectrum, KillingBasis, StokesOperator, KERNEL_GAP, KERNEL_RELATIVE, MAX_KILLING_DIM,
};

pub const SCENARIOS: [&str; 8] =
    ["identities", "helmholtz", "equilibria", "spectrum", "sectoriality", "korn", "decay", "convergence"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    AtMost,
    AtLeast,
    Equal,
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
            Comparison::Equal => "==",
        })
    }
}

/// One checked quantity of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub name: String,
    pub measured: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub pass: bool,
}

impl Criterion {
    pub fn new(name: impl Into<String>, measured: f64, comparison: Comparison, threshold: f64) -> Self {
        let pass = match comparison {
            Comparison::AtMost => measured <= threshold,
            Comparison::AtLeast => measured >= threshold,
            Comparison::Equal => measured == threshold,
        };
        Self { name: name.into(), measured, comparison, threshold, pass }
    }

    pub fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Comparison::AtMost, threshold)
    }

    pub fn at_least(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Comparison::AtLeast, threshold)
    }

    pub fn equal(name: impl Into<String>, measured: f64, expected: f64) -> Self {
        Self::new(name, measured, Comparison::Equal, expected)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub scenario: String,
    pub surface: String,
    pub grid: (usize, usize),
    pub criteria: Vec<Criterion>,
    pub wall_time: f64,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }

    /// Writes the report text, one line per criterion.
    pub fn write_summary(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }
}

impl fmt::Display for ScenarioReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario {} on {}, grid {}x{}", self.scenario, self.surface, self.grid.0, self.grid.1)?;
        for c in &self.criteria {
            let tag = if c.pass { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {}: {:.6e} {} {:.6e}", c.name, c.measured, c.comparison, c.threshold)?;
        }
        writeln!(f, "{} in {:.2} s", if self.passed() { "passed" } else { "failed" }, self.wall_time)
    }
}

fn describe(surface: &SurfaceSpec) -> String {
    match surface {
        SurfaceSpec::FlatTorus { l1, l2 } => format!("flat torus L1={l1} L2={l2}"),
        SurfaceSpec::TorusOfRevolution { big_r, small_r } => format!("torus of revolution R={big_r} r={small_r}"),
    }
}

/// Dimension of the Killing algebra the surface is known to carry.
fn expected_killing_dim(surface: &SurfaceSpec) -> usize {
    match surface {
        SurfaceSpec::FlatTorus { .. } => 2,
        SurfaceSpec::TorusOfRevolution { .. } => 1,
    }
}

/// Runs scenario `name`, writing its CSV files and `summary.txt` into `out`.
pub fn run_scenario(name: &str, config: &SimConfig, out: &Path) -> Result<ScenarioReport> {
    if !SCENARIOS.contains(&name) {
        return Err(Error::InvalidArgument(format!("unknown scenario '{name}'; known: {}", SCENARIOS.join(", "))));
    }
    config.validate()?;
    std::fs::create_dir_all(out)?;
    let start = Instant::now();
    let chart = config.chart()?;
    let criteria = match name {
        "identities" => identities(&chart, config, out)?,
        "helmholtz" => helmholtz(&chart, config, out)?,
        "equilibria" => equilibria(&chart, config, out)?,
        "spectrum" => spectrum_scenario(&chart, config, out)?,
        "sectoriality" => sectoriality(&chart, config, out)?,
        "korn" => korn(&chart, config, out)?,
        "decay" => decay(&chart, config, out)?,
        _ => convergence(&chart, config, out)?,
    };
    let report = ScenarioReport {
        scenario: name.to_string(),
        surface: describe(&config.surface),
        grid: chart.grid_sizes(),
        criteria,
        wall_time: start.elapsed().as_secs_f64(),
    };
    report.write_summary(out.join("summary.txt"))?;
    Ok(report)
}

fn identities(chart: &SurfaceChart, config: &SimConfig, out: &Path) -> Result<Vec<Criterion>> {
    let op = StokesOperator::new(chart, config.mu_s)?;
    let mut rng = SmoothFieldSampler::new(config.seed);
    let mut rows = Vec::new();
    for i in 0..20 {
        let u = rng.divfree_field(chart);
        let diff = &op.apply_div_form(&u)? - &op.apply_bochner_form(&u)?;
        rows.push(vec![i as f64, l2_norm(chart, &diff)? / l2_norm(chart, &u)?]);
    }
    emit_csv(out.join("operator_forms.csv"), &["sample", "relative_difference"], &rows)?;
    let k = gaussian_curvature(chart);
    let exact = match config.surface {
        SurfaceSpec::FlatTorus { .. } => chart.sample(|_, _| 0.0),
        SurfaceSpec::TorusOfRevolution { big_r, small_r } => {
            chart.sample(|t, _| t.cos() / (small_r * (big_r + small_r * t.cos())))
        }
    };
    let (nt, _) = chart.grid_sizes();
    let curve: Vec<Vec<f64>> = (0..nt).map(|i| vec![chart.coords(i, 0).0, k[[i, 0]], exact[[i, 0]]]).collect();
    emit_csv(out.join("curvature.csv"), &["theta", "k_numeric", "k_exact"], &curve)?;
    let k_err = (&k - &exact).fold(0.0f64, |m, x| m.max(x.abs()));
    let korn1 = korn_intermediate_check(chart, 10, config.seed)?;
    Ok(vec![
        Criterion::at_most("operator-form identity ‖A_div u − A_boch u‖/‖u‖", rows.iter().map(|r| r[1]).fold(0.0, f64::max), 1e-6),
        Criterion::at_most("Gauss–Bonnet defect |∫K dA|", integrate_scalar(chart, &k)?.abs(), 1e-10),
        Criterion::at_most("max |K − K_exact|", k_err, 1e-8),
        Criterion::at_most("curvature identity |2‖Du‖² − ‖∇u‖² + ∫K|u|²|/‖u‖²_H1", korn1.max_curvature_residual, 1e-8),
    ])
}

fn helmholtz(chart: &SurfaceChart, config: &SimConfig, out: &Path) -> Result<Vec<Criterion>> {
    let h = HelmholtzSolver::new(chart, 1e-10)?;
    let mut rng = SmoothFieldSampler::new(config.seed);
    let mut rows = Vec::new();
    for i in 0..5 {
        let (u, v) = (rng.vector_field(chart), rng.vector_field(chart));
        let (nu, nv) = (l2_norm(chart, &u)?, l2_norm(chart, &v)?);
        let pu = h.project(&u)?.field;
        let pv = h.project(&v)?.field;
        let idem = l2_norm(chart, &(&h.project(&pu)?.field - &pu))? / nu;
        let adj = (l2_inner(chart, &pu, &v)? - l2_inner(chart, &u, &pv)?).abs() / (nu * nv);
        let g = grad_scalar(chart, &rng.scalar_field(chart))?;
        let annih = l2_norm(chart, &h.project(&g)?.field)? / l2_norm(chart, &g)?;
        let div = h.divergence_residual(&pu)? / nu;
        rows.push(vec![i as f64, idem, adj, annih, div]);
    }
    emit_csv(
        out.join("helmholtz.csv"),
        &["sample", "idempotence", "self_adjointness", "gradient_annihilation", "div_residual"],
        &rows,
    )?;
    let worst = |c: usize| rows.iter().map(|r| r[c]).fold(0.0, f64::max);
    Ok(vec![
        Criterion::at_most("idempotence ‖P(Pu) − Pu‖/‖u‖", worst(1), 1e-8),
        Criterion::at_most("self-adjointness |(Pu|v) − (u|Pv)|/(‖u‖‖v‖)", worst(2), 1e-8),
        Criterion::at_most("gradient annihilation ‖P∇ψ‖/‖∇ψ‖", worst(3), 1e-8),
        Criterion::at_most("divergence residual of Pu", worst(4), 1e-8),
    ])
}

fn equilibria(chart: &SurfaceChart, config: &SimConfig, out: &Path) -> Result<Vec<Criterion>> {
    let basis = divfree_basis(chart, 1e-10)?;
    let kb = killing_fields_in(chart, &basis, KERNEL_RELATIVE)?;
    let op = assemble_operator(chart, config.mu_s, &basis)?;
    let sp = spectrum(&op)?;
    let rows: Vec<Vec<f64>> = kb.residuals().iter().enumerate().map(|(i, r)| vec![i as f64, *r]).collect();
    emit_csv(out.join("killing.csv"), &["index", "deformation_residual"], &rows)?;
    let expected = expected_killing_dim(&config.surface) as f64;
    Ok(vec![
        Criterion::equal("dim E", kb.dim() as f64, expected),
        Criterion::equal("dim N(A)", sp.kernel_dim() as f64, expected),
        Criterion::at_least("kernel gap ratio", kb.split().gap_ratio.min(sp.kernel.gap_ratio), KERNEL_GAP),
        Criterion::at_most("dim E", kb.dim() as f64, MAX_KILLING_DIM as f64),
    ])
}

/// `μ |k|²` over the grid's divergence-free Fourier modes, plus the two
/// constant fields, ascending.
fn flat_eigenvalues(l1: f64, l2: f64, mu_s: f64, n_theta: usize, n_phi: usize) -> Vec<f64> {
    let band = |n: usize| -((n / 2) as i64 - 1)..(n / 2) as i64;
    let mut v = vec![0.0, 0.0];
    for a in band(n_theta) {
        for b in band(n_phi) {
            if (a, b) != (0, 0) {
                let (ka, kb) = (2.0 * std::f64::consts::PI * a as f64 / l1, 2.0 * std::f64::consts::PI * b as f64 / l2);
                v.push(mu_s * (ka * ka + kb * kb));
            }
        }
    }
    v.sort_by(f64::total_cmp);
    v
}

fn spectrum_scenario(chart: &SurfaceChart, config: &SimConfig, out: &Path) -> Result<Vec<Criterion>> {
    let op = assemble_operator(chart, config.mu_s, &divfree_basis(chart, 1e-10)?)?;
    let sp = spectrum(&op)?;
    let rows: Vec<Vec<f64>> = sp.eigenvalues.iter().enumerate().map(|(i, x)| vec![i as f64, *x]).collect();
    emit_csv(out.join("eigenvalues.csv"), &["index", "eigenvalue"], &rows)?;
    let lmax = sp.lambda_max();
    let mut crit = vec![
        Criterion::at_most("asymmetry ‖M − Mᵀ‖/‖M‖", op.asymmetry(), 1e-8),
        Criterion::at_most("|s(−A)|/λ_max", sp.spectral_bound().abs() / lmax, 1e-8),
        Criterion::at_least("first nonzero eigenvalue", sp.gap(), 0.0),
    ];
    if let SurfaceSpec::FlatTorus { l1, l2 } = config.surface {
        let (nt, np) = chart.grid_sizes();
        let oracle = flat_eigenvalues(l1, l2, config.mu_s, nt, np);
        let err = sp.eigenvalues.iter().zip(&oracle).take(12).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        crit.push(Criterion::at_most("first 12 eigenvalues vs μ|k|²", err, 1e-8));
    }
    Ok(crit)
}

fn sectoriality(chart: &SurfaceChart, config: &SimConfig, out: &Path) -> Result<Vec<Criterion>> {
    let op = assemble_operator(chart, config.mu_s, &divfree_basis(chart, 1e-10)?)?;
    let sp = spectrum(&op)?;
    let omega = 0.1;
    let f = random_unit_vector(op.dim(), config.seed);
    let table = resolvent_probe(&op, omega, std::f64::consts::FRAC_PI_4, &[1.0, 10.0, 100.0, 1000.0], &f)?;
    let proj: Vec<f64> = (0..op.dim())
        .map(|a| sp.eigenvectors.col_as_slice(a).iter().zip(&f).map(|(x, y)| x * y).sum())
        .collect();
    let mut rows = Vec::new();
    let mut oracle_err = 0.0f64;
    let mut residual = 0.0f64;
    for r in &table.rows {
        let x2: f64 = proj
            .iter()
            .zip(&sp.eigenvalues)
            .map(|(p, mu)| p * p / ((r.lambda_re + omega + mu).powi(2) + r.lambda_im.powi(2)))
            .sum();
        let q_oracle = (r.magnitude + 1.0) * x2.sqrt();
        oracle_err = oracle_err.max((r.q - q_oracle).abs() / q_oracle);
        residual = residual.max(r.residual);
        rows.push(vec![
            r.magnitude,
            f64::from(r.ray),
            r.lambda_re,
            r.lambda_im,
            r.x_norm,
            r.q,
            q_oracle,
            r.q_norm,
            r.residual,
        ]);
    }
    emit_csv(
        out.join("resolvent.csv"),
        &["magnitude", "ray", "lambda_re", "lambda_im", "x_norm", "q", "q_oracle", "q_norm", "residual"],
        &rows,
    )?;
    Ok(vec![
        Criterion::at_most("q vs eigen-decomposition oracle", oracle_err, 1e-8),
        Criterion::at_most("solve residual", residual, 1e-10),
        Criterion::at_most("q variation (max − min)/min", table.q_variation(), 0.2),
    ])
}

fn refined_size(n: usize) -> usize {
    (3 * n / 2 + 1) / 2 * 2
}

fn korn(chart: &SurfaceChart, config: &SimConfig, out: &Path) -> Result<Vec<Criterion>> {
    let mut rows = Vec::new();
    let mut constants = Vec::new();
    let mut sampled = Vec::new();
    let (nt, np) = chart.grid_sizes();
    for (n_theta, n_phi) in [(nt, np), (refined_size(nt), refined_size(np))] {
        let c = config.surface.build(n_theta, n_phi)?;
        let basis = divfree_basis(&c, 1e-10)?;
        let kb = killing_fields_in(&c, &basis, KERNEL_RELATIVE)?;
        let problem = korn_problem(&c, &basis, kb.fields())?;
        if sampled.is_empty() {
            let mut rng = SmoothFieldSampler::new(config.seed);
            for i in 0..100 {
                let v = random_complement_field(&mut rng, &c, &kb)?;
                let ratio = h1_norm(&c, &v)? / deformation_norm_sq(&c, &v)?.sqrt();
                sampled.push(vec![i as f64, ratio]);
            }
        }
        rows.push(vec![n_theta as f64, n_phi as f64, problem.constant, problem.lambda_min, problem.complement_dim as f64]);
        constants.push(problem.constant);
    }
    emit_csv(out.join("korn.csv"), &["n_theta", "n_phi", "constant", "lambda_min", "complement_dim"], &rows)?;
    emit_csv(out.join("korn_samples.csv"), &["sample", "h1_over_deformation"], &sampled)?;
    let worst = sampled.iter().map(|r| r[1]).fold(0.0, f64::max);
    let mut crit = vec![
        Criterion::at_most("refinement drift |C(N') − C(N)|/C(N')", (constants[1] - constants[0]).abs() / constants[1], 0.02),
        Criterion::at_most("sampled ‖v‖_H1/‖Dv‖ over 1.01 C", worst / (1.01 * constants[0]), 1.0),
    ];
    if let SurfaceSpec::FlatTorus { l1, l2 } = config.surface {
        let kappa = 2.0 * std::f64::consts::PI / l1.max(l2);
        let exact = (2.0 * (1.0 + kappa * kappa) / (kappa * kappa)).sqrt();
        crit.push(Criterion::at_most("|C − C_Fourier|/C_Fourier", (constants[0] - exact).abs() / exact, 0.01));
    }
    Ok(crit)
}

struct Flow {
    model: GalerkinModel,
    kb: KillingBasis,
}

fn flow(chart: &SurfaceChart, config: &SimConfig) -> Result<Flow> {
    let model = GalerkinModel::new(chart, config.mu_s)?;
    let kb = model.killing_basis(chart)?;
    Ok(Flow { model, kb })
}

/// Run length `12 ρ/gap`, with at least 1200 steps and the configured `dt` as an upper bound.
fn long_run(config: &SimConfig, gap: f64, nonlinear: bool) -> SimConfig {
    let t_end = 12.0 * config.rho / gap;
    let steps = ((t_end / config.dt).ceil() as usize).max(1200);
    SimConfig { t_end, dt: t_end / steps as f64, nonlinear, sample_every: (steps / 400).max(1), ..config.clone() }
}

fn distance_rows(chart: &SurfaceChart, traj: &Trajectory, kb: &KillingBasis) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (s, res) in traj.states.iter().zip(&traj.energy_residual) {
        let d = &s.u - &project_onto_equilibria(&s.u, kb)?;
        let mut row = vec![s.t, s.energy, s.dissipation, *res, l2_norm(chart, &d)?.ln()];
        row.extend(&s.killing_moments);
        rows.push(row);
    }
    Ok(rows)
}

fn write_trajectory(path: &Path, rows: &[Vec<f64>], moments: usize) -> Result<()> {
    let mut header: Vec<String> =
        ["t", "energy", "dissipation", "energy_residual", "log_distance"].iter().map(|s| s.to_string()).collect();
    header.extend((0..moments).map(|j| format!("moment_{j}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    emit_csv(path, &header, rows)
}

fn initial_field(chart: &SurfaceChart, seed: u64, norm: f64) -> Result<VectorField> {
    let u = SmoothFieldSampler::new(seed).divfree_field(chart);
    Ok(u.scale(norm / l2_norm(chart, &u)?))
}

fn run_flow(chart: &SurfaceChart, cfg: SimConfig, f: &Flow, u0: &VectorField) -> Result<Trajectory> {
    let traj = Simulator::new(chart, cfg, f.kb.clone(), Some(&f.model), u0)?.run();
    match &traj.error {
        Some(e) => Err(Error::StepFailed { t: traj.last().t, reason: e.clone() }),
        None => Ok(traj),
    }
}

fn decay(chart: &SurfaceChart, config: &SimConfig, out: &Path) -> Result<Vec<Criterion>> {
    let f = flow(chart, config)?;
    let gap = f.model.spectrum.gap() / config.rho;
    let cfg = long_run(config, f.model.spectrum.gap(), false);
    let u0 = initial_field(chart, config.seed, 1.0)?;
    let sim = Simulator::new(chart, cfg, f.kb.clone(), Some(&f.model), &u0)?;
    let e0 = sim.state().energy;
    let traj = sim.run();
    if let Some(e) = &traj.error {
        return Err(Error::StepFailed { t: traj.last().t, reason: e.clone() });
    }
    write_trajectory(&out.join("decay.csv"), &distance_rows(chart, &traj, &f.kb)?, f.kb.dim())?;
    let fit = decay_rate_fit(chart, &traj, &f.kb)?;
    Ok(vec![
        Criterion::at_most("|α_fit − gap|/gap", (fit.alpha - gap).abs() / gap, 0.05),
        Criterion::at_most("max per-step energy growth / E(0)", traj.max_energy_growth / e0, 1e-10),
    ])
}

fn convergence(chart: &SurfaceChart, config: &SimConfig, out: &Path) -> Result<Vec<Criterion>> {
    let f = flow(chart, config)?;
    let gap = f.model.spectrum.gap() / config.rho;
    let cfg = long_run(config, f.model.spectrum.gap(), true);
    let u0 = initial_field(chart, config.seed, 1e-3)?;
    let u0_norm = l2_norm(chart, &u0)?;
    let e0 = 0.5 * config.rho * u0_norm * u0_norm;
    let traj = run_flow(chart, cfg, &f, &u0)?;
    let rows = distance_rows(chart, &traj, &f.kb)?;
    write_trajectory(&out.join("trajectory.csv"), &rows, f.kb.dim())?;
    let fit = decay_rate_fit(chart, &traj, &f.kb)?;
    let monotone = rows.windows(2).filter(|w| w[1][4] > w[0][4] + 1e-12).count();
    let target = project_onto_equilibria(&traj.states[0].u, &f.kb)?;
    let d0 = l2_norm(chart, &(&traj.states[0].u - &target))?;
    let t_check = 10.0 / fit.alpha;
    let reached = match traj.states.iter().find(|s| s.t >= t_check - 1e-12) {
        Some(s) => l2_norm(chart, &(&s.u - &target))? / d0,
        None => f64::INFINITY,
    };
    Ok(vec![
        Criterion::at_most("|α_fit − gap|/gap", (fit.alpha - gap).abs() / gap, 0.05),
        Criterion::at_most("‖u(10/α) − P_E u0‖/‖u0 − P_E u0‖", reached, 1e-3),
        Criterion::at_most("Killing-moment drift / ‖u0‖", traj.max_moment_drift / u0_norm, 1e-6),
        Criterion::at_most("max per-step energy growth / E(0)", traj.max_energy_growth / e0, 1e-10),
        Criterion::equal("increases of log-distance", monotone as f64, 0.0),
    ])
}
