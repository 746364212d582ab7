use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dynamics::{Backend, Integrator, SimConfig, SurfaceSpec};
use crate::error::{Error, Result};

/// Parsed configuration file: simulation parameters plus run selection.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub scenario: Option<String>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { sim: SimConfig::default(), scenario: None, out_dir: None }
    }
}

/// Reads a `key = value` file. See [`parse_config_str`].
pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    parse_config_str(&std::fs::read_to_string(path)?)
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

fn number<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(line, format!("{key}: cannot parse '{value}' as a number")))
}

fn positive(line: usize, key: &str, value: &str) -> Result<f64> {
    let v: f64 = number(line, key, value)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(bad(line, format!("{key} must be positive")));
    }
    Ok(v)
}

/// Parses line-oriented `key = value` text.
///
/// Blank lines and lines starting with `#` are skipped. Keys: `surface`
/// (`flat_torus` | `torus_of_revolution`), `L1`, `L2`, `R`, `r`, `n_theta`,
/// `n_phi`, `mu_s`, `rho`, `dt`, `t_end`, `integrator` (`imex1` | `imex2`),
/// `dealias`, `seed`, `scenario`, `out_dir`, `backend` (`galerkin` |
/// `matrix_free`). Missing keys keep [`SimConfig::default`]; the flat torus
/// defaults to `L1 = L2 = 2π`, the torus of revolution to `R = 2, r = 1`.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut surface = "torus_of_revolution".to_string();
    let mut surface_line = 0;
    let (mut l1, mut l2, mut big_r, mut small_r) = (2.0 * PI, 2.0 * PI, 2.0, 1.0);
    let mut r_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| bad(line, format!("expected 'key = value', got '{trimmed}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let s = &mut cfg.sim;
        match key {
            "surface" => {
                if value != "flat_torus" && value != "torus_of_revolution" {
                    return Err(bad(line, format!("unknown surface '{value}'")));
                }
                surface = value.to_string();
                surface_line = line;
            }
            "L1" => l1 = positive(line, key, value)?,
            "L2" => l2 = positive(line, key, value)?,
            "R" => {
                big_r = positive(line, key, value)?;
                r_line = line;
            }
            "r" => {
                small_r = positive(line, key, value)?;
                r_line = r_line.max(line);
            }
            "n_theta" => s.n_theta = number(line, key, value)?,
            "n_phi" => s.n_phi = number(line, key, value)?,
            "mu_s" => s.mu_s = positive(line, key, value)?,
            "rho" => s.rho = positive(line, key, value)?,
            "dt" => s.dt = positive(line, key, value)?,
            "t_end" => s.t_end = positive(line, key, value)?,
            "integrator" => {
                s.integrator = match value {
                    "imex1" => Integrator::Imex1,
                    "imex2" => Integrator::Imex2,
                    _ => return Err(bad(line, format!("unknown integrator '{value}'"))),
                }
            }
            "backend" => {
                s.backend = match value {
                    "galerkin" => Backend::Galerkin,
                    "matrix_free" => Backend::MatrixFree,
                    _ => return Err(bad(line, format!("unknown backend '{value}'"))),
                }
            }
            "dealias" => {
                s.dealias = value.parse().map_err(|_| bad(line, format!("dealias must be true or false, got '{value}'")))?
            }
            "seed" => s.seed = number(line, key, value)?,
            "scenario" => cfg.scenario = Some(value.to_string()),
            "out_dir" => cfg.out_dir = Some(PathBuf::from(value)),
            _ => return Err(bad(line, format!("unknown key '{key}'"))),
        }
    }
    cfg.sim.surface = if surface == "flat_torus" {
        SurfaceSpec::FlatTorus { l1, l2 }
    } else {
        if small_r >= big_r {
            return Err(bad(r_line.max(surface_line), format!("r = {small_r} must be smaller than R = {big_r}")));
        }
        SurfaceSpec::TorusOfRevolution { big_r, small_r }
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_with_defaults() {
        let c = parse_config_str("surface = torus_of_revolution\nR = 2\nr = 1\nn_theta = 64").unwrap();
        assert_eq!(c.sim.surface, SurfaceSpec::TorusOfRevolution { big_r: 2.0, small_r: 1.0 });
        assert_eq!(c.sim.n_theta, 64);
        assert_eq!(c.sim.n_phi, SimConfig::default().n_phi);
        assert_eq!(c.scenario, None);
    }

    #[test]
    fn negative_radius_is_named() {
        let e = parse_config_str("# comment\nR = -1").unwrap_err();
        match e {
            Error::Config { line, message } => {
                assert_eq!(line, 2);
                assert_eq!(message, "R must be positive");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn scenario_and_errors() {
        let c = parse_config_str("scenario = spectrum\nsurface = flat_torus\nL1 = 3").unwrap();
        assert_eq!(c.scenario.as_deref(), Some("spectrum"));
        assert_eq!(c.sim.surface, SurfaceSpec::FlatTorus { l1: 3.0, l2: 2.0 * PI });
        for (text, line) in [("n_theta = 8\nfoo = 1", 2), ("dt 0.1", 1), ("dt = x", 1), ("integrator = rk4", 1)] {
            assert!(matches!(parse_config_str(text), Err(Error::Config { line: l, .. }) if l == line), "{text}");
        }
    }
}
