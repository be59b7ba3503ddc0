//! Run configuration: a TOML file with `[domain]`, `[materials]`, `[problem]`,
//! `[solver]` and `[output]` sections. Every key has a default.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use cylcurl::analysis::{EpsOptions, GroundStateOptions, SobolevOptions, SweepOptions};
use cylcurl::nehari::{FiberOptions, SphereOptions};
use cylcurl::{MaterialField, MeridianGrid, Shape};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub materials: MaterialsConfig,
    pub problem: ProblemConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Rectangle,
    Annulus,
    Ball,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainConfig {
    pub shape: ShapeKind,
    pub r_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub n_r: usize,
    pub n_z: usize,
    /// Annulus: nodes with `r > r_inner`.
    pub r_inner: Option<f64>,
    /// Ball: centre on the axis and radius.
    pub z_center: Option<f64>,
    pub radius: Option<f64>,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            shape: ShapeKind::Rectangle,
            r_max: 1.0,
            z_min: 0.0,
            z_max: 1.0,
            n_r: 32,
            n_z: 32,
            r_inner: None,
            z_center: None,
            radius: None,
        }
    }
}

/// A coefficient given as a constant or as a CSV file of `r,z,value` rows, one per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Constant(f64),
    Csv(PathBuf),
}

impl Default for Coefficient {
    fn default() -> Self {
        Coefficient::Constant(1.0)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialsConfig {
    pub a_mu: Coefficient,
    pub b_mu: Coefficient,
    pub a_v: Coefficient,
    pub a_gamma: Coefficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlavorKind {
    Isotropic,
    Anisotropic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub p: f64,
    pub lambda: f64,
    /// λ-grid for `sweep`; 20 points in the first window when empty.
    pub lambdas: Vec<f64>,
    pub flavor: FlavorKind,
    /// Number of eigenpairs reported by `eigs` and used by the counts.
    pub k: usize,
    /// Window index for `eps-nu`.
    pub nu: usize,
    /// Scales for `bubble`.
    pub eps: Vec<f64>,
    /// Bubble centre on the axis; the middle of `[z_min, z_max]` when absent.
    pub z0: Option<f64>,
    /// λ-sequence for `continuity`, compared with the ground state at `lambda`.
    pub sequence: Vec<f64>,
    /// 1-based eigenvector indices used as starts by `multiplicity`.
    pub bound_starts: Vec<usize>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            p: 6.0,
            lambda: 0.0,
            lambdas: Vec::new(),
            flavor: FlavorKind::Isotropic,
            k: 6,
            nu: 1,
            eps: vec![1.0, 0.5, 0.25],
            z0: None,
            sequence: Vec::new(),
            bound_starts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub starts: usize,
    pub axis_bumps: usize,
    pub eigenpairs: usize,
    pub seed: u64,
    pub jitter: f64,
    pub escape_trials: usize,
    pub fiber_tol: f64,
    pub sobolev_tol: f64,
    pub residual_target: f64,
    pub eps_width: f64,
    pub eps_max_probes: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 5000,
            starts: 3,
            axis_bumps: 5,
            eigenpairs: 8,
            seed: 0,
            jitter: 1e-3,
            escape_trials: 2,
            fiber_tol: 1e-12,
            sobolev_tol: 1e-9,
            residual_target: 1e-6,
            eps_width: 1e-2,
            eps_max_probes: 40,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Any of `"csv"`, `"json"`.
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec!["csv".into(), "json".into()],
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.materials.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        for f in &self.output.formats {
            if f != "csv" && f != "json" {
                return bad(format!("output.formats: unknown format {f:?}; use \"csv\" or \"json\""));
            }
        }
        if self.solver.tol.is_nan() || self.solver.tol <= 0.0 {
            return bad(format!("solver.tol = {} must be positive", self.solver.tol));
        }
        if self.problem.k == 0 {
            return bad("problem.k must be at least 1".into());
        }
        if self.problem.nu == 0 {
            return bad("problem.nu is 1-based and must be at least 1".into());
        }
        match self.domain.shape {
            ShapeKind::Annulus if self.domain.r_inner.is_none() => {
                bad("domain.shape = \"annulus\" needs domain.r_inner".into())
            }
            ShapeKind::Ball if self.domain.radius.is_none() => {
                bad("domain.shape = \"ball\" needs domain.radius (and optionally domain.z_center)".into())
            }
            _ => Ok(()),
        }
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }

    pub fn grid(&self) -> Result<MeridianGrid, CliError> {
        let d = &self.domain;
        let shape = match d.shape {
            ShapeKind::Rectangle => Shape::Rectangle,
            ShapeKind::Annulus => Shape::Annulus {
                r_inner: d.r_inner.unwrap_or(0.0),
            },
            ShapeKind::Ball => Shape::Ball {
                z_center: d.z_center.unwrap_or(0.5 * (d.z_min + d.z_max)),
                radius: d.radius.unwrap_or(0.0),
            },
        };
        Ok(MeridianGrid::build(d.r_max, d.z_min, d.z_max, d.n_r, d.n_z, shape)?)
    }

    pub fn materials(&self, grid: &MeridianGrid) -> Result<MaterialField, CliError> {
        let m = &self.materials;
        let field = MaterialField {
            a_mu: sample(grid, &m.a_mu, "a_mu")?,
            b_mu: sample(grid, &m.b_mu, "b_mu")?,
            a_v: sample(grid, &m.a_v, "a_v")?,
            a_gamma: sample(grid, &m.a_gamma, "a_gamma")?,
        };
        field.validate(grid)?;
        Ok(field)
    }

    pub fn sphere(&self) -> SphereOptions {
        let s = &self.solver;
        SphereOptions {
            tol: s.tol,
            max_iter: s.max_iter,
            jitter: s.jitter,
            seed: s.seed,
            fiber: FiberOptions {
                tol: s.fiber_tol,
                ..FiberOptions::default()
            },
            escape_trials: s.escape_trials,
            ..SphereOptions::default()
        }
    }

    pub fn ground(&self) -> GroundStateOptions {
        GroundStateOptions {
            sphere: self.sphere(),
            starts: self.solver.starts,
            eigenpairs: self.solver.eigenpairs,
            axis_bumps: self.solver.axis_bumps,
            residual_target: Some(self.solver.residual_target),
        }
    }

    pub fn sobolev(&self) -> SobolevOptions {
        SobolevOptions {
            tol: self.solver.sobolev_tol,
            starts: self.solver.starts,
            axis_bumps: self.solver.axis_bumps,
            ..SobolevOptions::default()
        }
    }

    pub fn sweep(&self, s_h: f64) -> SweepOptions {
        SweepOptions {
            ground: self.ground(),
            s_h: Some(s_h),
            ..SweepOptions::default()
        }
    }

    pub fn eps(&self, s_h: f64) -> EpsOptions {
        EpsOptions {
            ground: self.ground(),
            s_h: Some(s_h),
            width: self.solver.eps_width,
            max_probes: self.solver.eps_max_probes,
        }
    }
}

impl MaterialsConfig {
    fn resolve_paths(&mut self, base: &Path) {
        for c in [&mut self.a_mu, &mut self.b_mu, &mut self.a_v, &mut self.a_gamma] {
            if let Coefficient::Csv(p) = c {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
    }
}

#[derive(Deserialize)]
struct NodeValue {
    r: f64,
    z: f64,
    value: f64,
}

fn sample(grid: &MeridianGrid, c: &Coefficient, name: &str) -> Result<Vec<f64>, CliError> {
    match c {
        Coefficient::Constant(v) => Ok(vec![*v; grid.num_nodes()]),
        Coefficient::Csv(path) => {
            let err = |m: String| CliError::Config(format!("materials.{name} ({}): {m}", path.display()));
            let mut reader = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
            let mut values: HashMap<usize, f64> = HashMap::new();
            for row in reader.deserialize::<NodeValue>() {
                let row = row.map_err(|e| err(e.to_string()))?;
                let i = (row.r / grid.h_r).round();
                let j = ((row.z - grid.z_min) / grid.h_z).round();
                let on_node = (row.r - i * grid.h_r).abs() <= 1e-9 * grid.r_max
                    && (row.z - grid.z_min - j * grid.h_z).abs() <= 1e-9 * (grid.z_max - grid.z_min);
                if i < 0.0 || j < 0.0 || i > grid.n_r as f64 || j > grid.n_z as f64 || !on_node {
                    return Err(err(format!("row (r = {}, z = {}) is not a grid node", row.r, row.z)));
                }
                values.insert(grid.node(i as usize, j as usize), row.value);
            }
            (0..grid.num_nodes())
                .map(|n| {
                    values.get(&n).copied().ok_or_else(|| {
                        let (i, j) = grid.node_ij(n);
                        err(format!("no value for node r = {}, z = {}", grid.r(i), grid.z(j)))
                    })
                })
                .collect()
        }
    }
}
