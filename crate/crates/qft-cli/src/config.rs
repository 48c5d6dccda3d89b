//! Scenario files (TOML).
//!
//! ```toml
//! name = "minkowski"
//! seed = 7
//! output_dir = "out"
//! checks = ["kahler", "table1"]     # validate only; empty = every suite
//!
//! [geometry]
//! modes = 3
//! length = 6.283185307179586
//! scale = [1.0, 0.1]                # a(t) = 1 + 0.1 t
//! lapse = 1.0
//! shift = 0.0
//! mass = 1.0
//! derivatives = "analytic"          # or "finite-difference"
//!
//! [truncation]
//! n_max = 4
//! degree = 3
//!
//! [evolution]
//! t0 = 0.0
//! t1 = 1.0
//! dt = 0.001
//! scheme = "cayley"                 # or "rk4"
//! rk4_budget = 1e-6
//! initial = "random"                # "vacuum", "random" or "basis"
//! occupation = [0, 1, 0]            # with initial = "basis"
//!
//! [kahler]                          # optional override of the structure for validate
//! a = [[0.0]]
//! delta = [[1.0]]
//!
//! [sweep]
//! mass = [1.0, 2.0]
//! n_max = [2, 3]
//! dt = [0.01, 0.005]
//! ```

use fieldquant::evolution::{Derivatives, FoliationCurve, Scheme};
use fieldquant::RMat;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub checks: Vec<String>,
    pub geometry: Geometry,
    #[serde(default)]
    pub truncation: Truncation,
    pub evolution: Option<EvolutionConfig>,
    pub kahler: Option<KahlerOverride>,
    pub sweep: Option<SweepGrid>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub modes: usize,
    #[serde(default = "two_pi")]
    pub length: f64,
    #[serde(default = "unit_scale")]
    pub scale: Vec<f64>,
    #[serde(default = "one")]
    pub lapse: f64,
    #[serde(default)]
    pub shift: f64,
    pub mass: f64,
    #[serde(default)]
    pub derivatives: DerivativeMode,
}

fn two_pi() -> f64 {
    2.0 * std::f64::consts::PI
}

fn unit_scale() -> Vec<f64> {
    vec![1.0]
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMode {
    #[default]
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_degree")]
    pub degree: usize,
}

fn default_n_max() -> usize {
    4
}

fn default_degree() -> usize {
    3
}

impl Default for Truncation {
    fn default() -> Self {
        Self { n_max: default_n_max(), degree: default_degree() }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    #[default]
    Cayley,
    Rk4,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    Vacuum,
    #[default]
    Random,
    Basis,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    #[serde(default)]
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    #[serde(default)]
    pub scheme: SchemeName,
    #[serde(default = "default_budget")]
    pub rk4_budget: f64,
    #[serde(default)]
    pub initial: InitialState,
    pub occupation: Option<Vec<u8>>,
}

fn default_budget() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KahlerOverride {
    pub a: Option<Vec<Vec<f64>>>,
    pub delta: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub mass: Option<Vec<f64>>,
    pub n_max: Option<Vec<usize>>,
    pub dt: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("invalid value for `{key}`: {msg}"))
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let cfg = Self::parse(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), ConfigError> {
        let g = &self.geometry;
        if g.modes == 0 {
            return Err(bad("geometry.modes", "must be at least 1"));
        }
        if let Err(e) = fieldquant::modespace::build_circle(g.modes, g.length.abs().max(1e-300), 1.0) {
            return Err(bad("geometry.modes", e));
        }
        if !(g.length > 0.0) {
            return Err(bad("geometry.length", "must be positive"));
        }
        if !(g.lapse > 0.0) {
            return Err(bad("geometry.lapse", "must be positive"));
        }
        if !(g.mass > 0.0) {
            return Err(bad("geometry.mass", "must be positive"));
        }
        if g.scale.is_empty() || !(g.scale[0] > 0.0) {
            return Err(bad("geometry.scale", "needs a positive constant coefficient"));
        }
        if self.truncation.n_max == 0 {
            return Err(bad("truncation.n_max", "must be at least 1"));
        }
        if self.truncation.degree > fieldquant::transforms::STATE_DEGREE_LIMIT {
            return Err(bad("truncation.degree", format!("at most {}", fieldquant::transforms::STATE_DEGREE_LIMIT)));
        }
        for name in &self.checks {
            if !crate::suites::SUITES.contains(&name.as_str()) {
                return Err(bad("checks", format!("unknown suite `{name}` (known: {})", crate::suites::SUITES.join(", "))));
            }
        }
        if let Some(ev) = &self.evolution {
            if !(ev.dt > 0.0) {
                return Err(bad("evolution.dt", "must be positive"));
            }
            if ev.t1 < ev.t0 {
                return Err(bad("evolution.t1", "must not precede t0"));
            }
            if !(ev.rk4_budget > 0.0) {
                return Err(bad("evolution.rk4_budget", "must be positive"));
            }
            match (&ev.initial, &ev.occupation) {
                (InitialState::Basis, None) => return Err(bad("evolution.occupation", "required with initial = \"basis\"")),
                (InitialState::Basis, Some(occ)) => {
                    if occ.len() != g.modes {
                        return Err(bad("evolution.occupation", format!("expected {} entries", g.modes)));
                    }
                    if occ.iter().map(|&k| k as usize).sum::<usize>() > self.truncation.n_max {
                        return Err(bad("evolution.occupation", "total occupation exceeds truncation.n_max"));
                    }
                }
                _ => {}
            }
        }
        if let Some(k) = &self.kahler {
            let n = k.delta.len();
            if k.delta.iter().any(|r| r.len() != n) {
                return Err(bad("kahler.delta", "must be square"));
            }
            if let Some(a) = &k.a {
                if a.len() != n || a.iter().any(|r| r.len() != n) {
                    return Err(bad("kahler.a", "must match the shape of kahler.delta"));
                }
            }
        }
        if let Some(s) = &self.sweep {
            if s.mass.iter().flatten().any(|m| !(*m > 0.0)) {
                return Err(bad("sweep.mass", "entries must be positive"));
            }
            if s.n_max.iter().flatten().any(|n| *n == 0) {
                return Err(bad("sweep.n_max", "entries must be at least 1"));
            }
            if s.dt.iter().flatten().any(|d| !(*d > 0.0)) {
                return Err(bad("sweep.dt", "entries must be positive"));
            }
        }
        Ok(())
    }

    pub fn foliation(&self) -> FoliationCurve {
        let g = &self.geometry;
        FoliationCurve {
            m: g.modes,
            length: g.length,
            lapse: g.lapse,
            shift: g.shift,
            mass: g.mass,
            scale: g.scale.clone(),
            derivatives: match g.derivatives {
                DerivativeMode::Analytic => Derivatives::Analytic,
                DerivativeMode::FiniteDifference => Derivatives::FiniteDifference,
            },
        }
    }

    pub fn evolution_or_err(&self) -> Result<&EvolutionConfig, ConfigError> {
        self.evolution.as_ref().ok_or_else(|| ConfigError("missing table `[evolution]`".into()))
    }

    pub fn kahler_matrices(&self) -> Option<(RMat, RMat)> {
        let k = self.kahler.as_ref()?;
        let n = k.delta.len();
        let delta = RMat::from_fn(n, n, |i, j| k.delta[i][j]);
        let a = match &k.a {
            Some(a) => RMat::from_fn(n, n, |i, j| a[i][j]),
            None => RMat::zeros(n, n),
        };
        Some((a, delta))
    }
}

impl EvolutionConfig {
    pub fn scheme(&self) -> Scheme {
        match self.scheme {
            SchemeName::Cayley => Scheme::Cayley,
            SchemeName::Rk4 => Scheme::Rk4,
        }
    }
}
