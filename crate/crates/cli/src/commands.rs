//! One function per subcommand.

use cylcurl::analysis::*;
use cylcurl::spectral::eigenpairs_for;
use cylcurl::{eigenpairs, DiscreteForms, MaterialField, MeridianGrid, SpectralSplit};
use serde::Serialize;

use crate::config::{FlavorKind, RunConfig};
use crate::output::{self, num, opt};
use crate::{CliError, Command};

type Res<T> = Result<T, CliError>;

struct Setup {
    grid: MeridianGrid,
    forms: DiscreteForms,
    /// `λ` of the run: the configured value, or `−1` for the anisotropic problem.
    lambda: f64,
}

fn setup(cfg: &RunConfig) -> Res<Setup> {
    let grid = cfg.grid()?;
    let materials = cfg.materials(&grid)?;
    let forms = DiscreteForms::assemble(&grid, &materials, cfg.problem.p)?;
    let lambda = match cfg.problem.flavor {
        FlavorKind::Isotropic => cfg.problem.lambda,
        FlavorKind::Anisotropic => -1.0,
    };
    Ok(Setup { grid, forms, lambda })
}

pub fn run(command: Command, cfg: &RunConfig, emit_grid: bool) -> Res<()> {
    if cfg.problem.flavor == FlavorKind::Isotropic && cfg.problem.lambda > 0.0 && needs_window(command) {
        return Err(CliError::Config(format!(
            "problem.lambda = {} lies in no window; admissible values are lambda <= 0, with windows (-lambda_nu, -lambda_(nu-1)]",
            cfg.problem.lambda
        )));
    }
    let s = setup(cfg)?;
    if emit_grid {
        output::grid_mask(cfg, &s.grid)?;
    }
    match command {
        Command::Eigs => eigs(cfg, &s),
        Command::Ground => ground(cfg, &s),
        Command::Sweep => sweep(cfg, &s),
        Command::Bounds => bounds(cfg, &s),
        Command::EpsNu => eps_nu(cfg, &s),
        Command::Multiplicity => multiplicity(cfg, &s),
        Command::Bubble => bubble_cmd(cfg, &s),
        Command::AnisoCheck => aniso_check(cfg, &s),
        Command::Continuity => continuity(cfg, &s),
    }
}

fn needs_window(c: Command) -> bool {
    matches!(
        c,
        Command::Ground | Command::Bounds | Command::Multiplicity | Command::Continuity
    )
}

fn sobolev(cfg: &RunConfig, forms: &DiscreteForms) -> Res<SobolevEstimate> {
    Ok(compute_s(forms, forms.p, &cfg.sobolev())?)
}

#[derive(Serialize)]
struct EigsOut {
    eigenvalues: Vec<f64>,
    clusters: Vec<usize>,
    mu_omega: f64,
    unknowns: usize,
}

fn eigs(cfg: &RunConfig, s: &Setup) -> Res<()> {
    let spec = eigenpairs(&s.forms, cfg.problem.k)?;
    let rows: Vec<Vec<String>> = spec
        .eigenvalues
        .iter()
        .zip(&spec.clusters)
        .enumerate()
        .map(|(k, (l, c))| vec![(k + 1).to_string(), num(*l), c.to_string()])
        .collect();
    output::csv(cfg, "eigs.csv", &["index", "eigenvalue", "cluster"], &rows)?;
    output::json(
        cfg,
        Command::Eigs,
        &EigsOut {
            eigenvalues: spec.eigenvalues.clone(),
            clusters: spec.clusters.clone(),
            mu_omega: s.forms.mu_omega,
            unknowns: s.forms.dim(),
        },
    )
}

fn ground(cfg: &RunConfig, s: &Setup) -> Res<()> {
    let spec = eigenpairs_for(&s.forms, cfg.solver.eigenpairs, s.lambda)?;
    let g = ground_state_with(&s.forms, &spec, s.lambda, &cfg.ground(), None)?;
    output::field(cfg, "ground_field.csv", &s.grid, &g.field)?;
    output::json(cfg, Command::Ground, &g)
}

fn default_lambdas(lambda_1: f64) -> Vec<f64> {
    (1..=20).map(|k| -lambda_1 + lambda_1 * (k as f64 / 20.0).powi(3)).collect()
}

fn sweep(cfg: &RunConfig, s: &Setup) -> Res<()> {
    let lambdas = if cfg.problem.lambdas.is_empty() {
        default_lambdas(eigenpairs(&s.forms, 1)?.eigenvalues[0])
    } else {
        cfg.problem.lambdas.clone()
    };
    let s_h = sobolev(cfg, &s.forms)?.value;
    let r = lambda_sweep(&s.forms, &lambdas, &cfg.sweep(s_h))?;
    let rows: Vec<Vec<String>> = r
        .points
        .iter()
        .map(|p| {
            vec![
                num(p.lambda),
                p.nu.to_string(),
                opt(p.energy),
                num(p.upper),
                num(p.lower),
                opt(p.residual),
                p.attained.to_string(),
            ]
        })
        .collect();
    output::csv(
        cfg,
        "sweep.csv",
        &["lambda", "nu", "energy", "upper", "lower", "residual", "attained"],
        &rows,
    )?;
    output::json(cfg, Command::Sweep, &r)
}

#[derive(Serialize)]
struct BoundsOut {
    sobolev: SobolevEstimate,
    bounds: EnergyBounds,
}

fn bounds(cfg: &RunConfig, s: &Setup) -> Res<()> {
    let spec = eigenpairs_for(&s.forms, cfg.solver.eigenpairs, s.lambda)?;
    let sob = sobolev(cfg, &s.forms)?;
    let b = energy_bounds(&spec, sob.value, s.forms.p, s.forms.mu_omega, s.lambda)?;
    output::json(cfg, Command::Bounds, &BoundsOut { sobolev: sob, bounds: b })
}

fn eps_nu(cfg: &RunConfig, s: &Setup) -> Res<()> {
    let s_h = sobolev(cfg, &s.forms)?.value;
    let r = estimate_eps_nu(&s.forms, cfg.problem.nu, &cfg.eps(s_h))?;
    let rows: Vec<Vec<String>> = r
        .probes
        .iter()
        .map(|p| vec![num(p.eps), num(p.lambda), opt(p.energy), format!("{:?}", p.verdict)])
        .collect();
    output::csv(cfg, "eps_nu.csv", &["eps", "lambda", "energy", "verdict"], &rows)?;
    output::json(cfg, Command::EpsNu, &r)
}

/// Eigenpairs enlarged until `f` no longer reports a shallow spectrum.
fn deep_enough<T>(
    forms: &DiscreteForms,
    start: usize,
    lambda: f64,
    f: impl Fn(&SpectralSplit) -> cylcurl::Result<T>,
) -> Res<(SpectralSplit, T)> {
    let mut k = start.max(1).min(forms.dim());
    loop {
        let spec = eigenpairs_for(forms, k, lambda)?;
        match f(&spec) {
            Ok(v) => return Ok((spec, v)),
            Err(cylcurl::Error::InsufficientSpectrum(_)) if spec.len() < forms.dim() => {
                k = (2 * spec.len()).min(forms.dim());
            }
            Err(e) => return Err(e.into()),
        }
    }
}

#[derive(Serialize)]
struct BoundOut {
    start_index: usize,
    energy: f64,
    residual: f64,
}

#[derive(Serialize)]
struct MultiplicityOut {
    s_h: f64,
    m_tilde: MTilde,
    bound_states: Vec<BoundOut>,
}

fn multiplicity(cfg: &RunConfig, s: &Setup) -> Res<()> {
    let s_h = sobolev(cfg, &s.forms)?.value;
    let p = s.forms.p;
    let mu = s.forms.mu_omega;
    let start = cfg.problem.k.max(cfg.solver.eigenpairs);
    let (spec, m) = deep_enough(&s.forms, start, s.lambda, |sp| count_m_tilde(sp, s_h, p, mu, s.lambda))?;
    let starts: Vec<usize> = if !cfg.problem.bound_starts.is_empty() {
        cfg.problem.bound_starts.clone()
    } else if !m.indices.is_empty() {
        m.indices.clone()
    } else {
        vec![spec.nu.unwrap_or(1)]
    };
    let found = bound_states(&s.forms, &spec, s.lambda, Some(&starts), None, &cfg.sphere())?;
    let rows: Vec<Vec<String>> = found
        .iter()
        .enumerate()
        .map(|(k, b)| vec![(k + 1).to_string(), starts[b.start_index].to_string(), num(b.energy), num(b.residual)])
        .collect();
    output::csv(cfg, "bound_states.csv", &["index", "start", "energy", "residual"], &rows)?;
    let out = MultiplicityOut {
        s_h,
        m_tilde: m,
        bound_states: found
            .iter()
            .map(|b| BoundOut {
                start_index: starts[b.start_index],
                energy: b.energy,
                residual: b.residual,
            })
            .collect(),
    };
    output::json(cfg, Command::Multiplicity, &out)
}

fn bubble_cmd(cfg: &RunConfig, s: &Setup) -> Res<()> {
    let g = &s.grid;
    let z0 = cfg.problem.z0.unwrap_or(0.5 * (g.z_min + g.z_max));
    let radius = 0.9 * g.r_max.min(z0 - g.z_min).min(g.z_max - z0);
    if radius.is_nan() || radius <= 0.0 {
        return Err(CliError::Config(format!(
            "problem.z0 = {z0} leaves no room for a profile inside [{}, {}]",
            g.z_min, g.z_max
        )));
    }
    let phi = g.sample_interior(|r, z| {
        let t = (r * r + (z - z0) * (z - z0)) / (radius * radius);
        if t < 1.0 {
            r * (1.0 - t).powi(3)
        } else {
            0.0
        }
    });
    let psi = g.sample_interior(|r, z| r * (g.r_max - r) * (z - g.z_min) * (g.z_max - z));
    let reports: Vec<BubbleReport> = cfg
        .problem
        .eps
        .iter()
        .map(|&e| bubble(&s.forms, &phi, e, z0, std::slice::from_ref(&psi)))
        .collect::<cylcurl::Result<_>>()?;
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|b| {
            vec![
                num(b.eps),
                num(b.l6),
                num(b.l6_base),
                num(b.a_norm),
                num(b.a_norm_base),
                num(b.j0),
                num(b.test_inner[0]),
            ]
        })
        .collect();
    output::csv(
        cfg,
        "bubble.csv",
        &["eps", "l6", "l6_base", "a_norm", "a_norm_base", "j0", "test_inner"],
        &rows,
    )?;
    output::json(cfg, Command::Bubble, &reports)
}

#[derive(Serialize)]
struct AnisoOut {
    isotropic_s_h: f64,
    bounds: AnisoBounds,
}

fn aniso_check(cfg: &RunConfig, s: &Setup) -> Res<()> {
    let p = s.forms.p;
    let iso = DiscreteForms::assemble(&s.grid, &MaterialField::isotropic(&s.grid), p)?;
    let s_h = sobolev(cfg, &iso)?.value;
    let materials = cfg.materials(&s.grid)?;
    let c = AnisoConstants::from_materials(&s.grid, &materials);
    let start = cfg.problem.k.max(cfg.solver.eigenpairs);
    let (_, b) = deep_enough(&s.forms, start, -1.0, |sp| aniso_bounds(sp, &c, s_h, p, s.forms.mu_omega))?;
    output::json(
        cfg,
        Command::AnisoCheck,
        &AnisoOut {
            isotropic_s_h: s_h,
            bounds: b,
        },
    )
}

fn continuity(cfg: &RunConfig, s: &Setup) -> Res<()> {
    let mu0 = s.lambda;
    let seq = if cfg.problem.sequence.is_empty() {
        let spec = eigenpairs_for(&s.forms, cfg.solver.eigenpairs, mu0)?;
        let (lo, hi) = spec.window().expect("split");
        let d = 0.1 * (hi - lo);
        let dir = if mu0 - 0.5 * d > lo { -1.0 } else { 1.0 };
        (1..=4).map(|k| mu0 + dir * d / f64::from(1u32 << k)).collect()
    } else {
        cfg.problem.sequence.clone()
    };
    let r = continuity_of_ground_states(&s.forms, mu0, &seq, &cfg.ground())?;
    let rows: Vec<Vec<String>> = r
        .entries
        .iter()
        .map(|e| {
            vec![
                num(e.lambda),
                opt(e.energy),
                opt(e.delta_c),
                opt(e.distance),
                opt(e.lipschitz_bound),
                e.within_bound.map(|b| b.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    output::csv(
        cfg,
        "continuity.csv",
        &["lambda", "energy", "delta_c", "distance", "lipschitz_bound", "within_bound"],
        &rows,
    )?;
    output::json(cfg, Command::Continuity, &r)
}
