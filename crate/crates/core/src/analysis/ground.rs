//! Ground states, λ-sweeps, the threshold `ε_ν`, continuity along λ-sequences
//! and multi-start bound states.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::DiscreteForms;
use crate::functional::{make_backend, residual, CurlCurlBackend, Flavor};
use crate::nehari::{
    multistart_bound_states, sphere_descend, sphere_minimize, BoundState, Minimizer, SphereOptions,
};
use crate::spectral::{eigenpairs_for, SpectralSplit};

use super::sobolev::{compute_s, critical_gap, SobolevOptions};
use super::starts::axis_bumps;

#[derive(Debug, Clone)]
pub struct GroundStateOptions {
    pub sphere: SphereOptions,
    /// Eigenvector directions `e_ν, e_{ν+1}, …` used as starts.
    pub starts: usize,
    /// Initial number of eigenpairs (enlarged when the split needs more).
    pub eigenpairs: usize,
    /// Number of concentrated starts along the axis.
    pub axis_bumps: usize,
    /// Keep descending at a tighter tolerance while `‖J'(φ)‖_{M⁻¹}` exceeds this.
    pub residual_target: Option<f64>,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            sphere: SphereOptions::default(),
            starts: 3,
            eigenpairs: 8,
            axis_bumps: 5,
            residual_target: Some(1e-6),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundStateResult {
    #[serde(skip)]
    pub field: Vec<f64>,
    pub energy: f64,
    pub lambda: f64,
    pub p: f64,
    pub nu: usize,
    /// `‖J'(φ)‖_{M⁻¹}`.
    pub residual: f64,
    /// Sphere-gradient norm at the minimizer.
    pub grad_norm: f64,
    pub iterations: usize,
    pub start_index: usize,
    /// Not written to output files.
    #[serde(skip)]
    pub wall_time_s: f64,
    /// `(Σ w |φ|^p)^{1/p}`.
    pub lp_norm: f64,
    /// `‖φ‖_A`.
    pub a_norm: f64,
    /// `φᵀMφ`.
    pub mass: f64,
    /// `(½ − 1/p)(λ + λ_ν)^{p/(p−2)} μ(Ω)`.
    pub upper: f64,
    pub within_upper: bool,
}

/// Ground state of `J_λ` on the symmetric space.
pub fn ground_state(forms: &DiscreteForms, lambda: f64, opts: &GroundStateOptions) -> Result<GroundStateResult> {
    let spec = eigenpairs_for(forms, opts.eigenpairs, lambda)?;
    ground_state_with(forms, &spec, lambda, opts, None)
}

/// Ground state using a precomputed spectrum and an optional warm start.
pub fn ground_state_with(
    forms: &DiscreteForms,
    spectrum: &SpectralSplit,
    lambda: f64,
    opts: &GroundStateOptions,
    warm: Option<&[f64]>,
) -> Result<GroundStateResult> {
    let clock = Instant::now();
    let backend = make_backend(forms, spectrum, lambda, Flavor::Full)?;
    let nu = backend.split.nu.expect("split");
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(w) = warm {
        starts.push(w.to_vec());
    }
    let k_max = spectrum.len().min(nu - 1 + opts.starts.max(1));
    for k in (nu - 1)..k_max {
        starts.push(spectrum.eigenvectors[k].clone());
    }
    starts.extend(axis_bumps(forms, opts.axis_bumps));
    let mut m = sphere_minimize(&backend, &starts, &opts.sphere)?;
    if let Some(target) = opts.residual_target {
        let mut tight = SphereOptions {
            jitter: 0.0,
            escape_trials: 0,
            ..opts.sphere.clone()
        };
        for _ in 0..3 {
            if residual(&backend, &m.point.point) <= target {
                break;
            }
            tight.tol *= 0.1;
            match sphere_descend(&backend, &m.point.direction, &tight) {
                Ok(next) if next.energy() <= m.energy() + tight.tol * m.energy().abs().max(1.0) => {
                    let (iterations, start) = (m.iterations + next.iterations, m.start_index);
                    m = next;
                    m.iterations = iterations;
                    m.start_index = start;
                }
                _ => break,
            }
        }
    }
    Ok(summarize(&backend, &m, clock.elapsed().as_secs_f64()))
}

fn summarize(backend: &CurlCurlBackend<'_>, m: &Minimizer, wall: f64) -> GroundStateResult {
    let forms = backend.forms;
    let phi = &m.point.point;
    let p = forms.p;
    let lambda_nu = backend.split.lambda_nu().expect("split");
    let upper = (0.5 - 1.0 / p) * (backend.lambda + lambda_nu).powf(p / (p - 2.0)) * forms.mu_omega;
    let energy = m.point.energy;
    GroundStateResult {
        field: phi.clone(),
        energy,
        lambda: backend.lambda,
        p,
        nu: backend.split.nu.expect("split"),
        residual: residual(backend, phi),
        grad_norm: m.grad_norm,
        iterations: m.iterations,
        start_index: m.start_index,
        wall_time_s: wall,
        lp_norm: forms.power_sum(phi).powf(1.0 / p),
        a_norm: forms.curl_energy(phi).sqrt(),
        mass: forms.mass_energy(phi),
        upper,
        within_upper: energy <= upper + 1e-8 * upper.max(1.0),
    }
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub ground: GroundStateOptions,
    /// Precomputed `S_h`; computed when absent.
    pub s_h: Option<f64>,
    /// Slack of the monotonicity check.
    pub monotone_slack: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            ground: GroundStateOptions::default(),
            s_h: None,
            monotone_slack: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub nu: usize,
    pub energy: Option<f64>,
    pub attained: bool,
    pub upper: f64,
    pub lower: f64,
    pub residual: Option<f64>,
    pub mass: Option<f64>,
    pub error: Option<String>,
    #[serde(skip)]
    pub field: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowReport {
    pub nu: usize,
    pub points: usize,
    /// Largest `c(λ_i) − c(λ_{i+1})` over consecutive attained points, λ ascending.
    pub max_decrease: f64,
    pub non_decreasing: bool,
    pub strictly_increasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzCheck {
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub delta_c: f64,
    /// `L̂ |λ_b − λ_a|` with `L̂ = ½ max φᵀMφ`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub p: f64,
    pub s_h: f64,
    pub gap: f64,
    pub points: Vec<SweepPoint>,
    pub windows: Vec<WindowReport>,
    pub lipschitz: Vec<LipschitzCheck>,
    /// Crude `ε̂_ν` per window, available when `λ = 0` is on the grid.
    pub eps_nu: Vec<(usize, Option<f64>)>,
    pub eigenvalues: Vec<f64>,
}

/// `c_λ` over a grid of `λ ≤ 0` (processed in ascending order, warm-started within a window).
pub fn lambda_sweep(forms: &DiscreteForms, lambdas: &[f64], opts: &SweepOptions) -> Result<SweepResult> {
    if lambdas.is_empty() {
        return Err(Error::Config("empty lambda grid".into()));
    }
    if let Some(l) = lambdas.iter().find(|l| **l > 0.0 || !l.is_finite()) {
        return Err(Error::Config(format!("lambda grid value {l} is not <= 0")));
    }
    let p = forms.p;
    let mut grid = lambdas.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let spec = eigenpairs_for(forms, opts.ground.eigenpairs, grid[0])?;
    let s_h = match opts.s_h {
        Some(s) => s,
        None => compute_s(forms, p, &SobolevOptions::default())?.value,
    };
    let lower = (0.5 - 1.0 / p) * s_h.powf(p / (p - 2.0));
    let tol = opts.ground.sphere.tol;

    let mut points: Vec<SweepPoint> = Vec::with_capacity(grid.len());
    let mut warm: Option<(usize, Vec<f64>)> = None;
    for &lambda in &grid {
        let split = spec.split(lambda)?;
        let nu = split.nu.expect("split");
        let lambda_nu = split.lambda_nu().expect("split");
        let upper = (0.5 - 1.0 / p) * (lambda + lambda_nu).powf(p / (p - 2.0)) * forms.mu_omega;
        let w = warm.as_ref().filter(|(n, _)| *n == nu).map(|(_, f)| f.as_slice());
        let point = match ground_state_with(forms, &split, lambda, &opts.ground, w) {
            Ok(g) => {
                warm = Some((nu, g.field.clone()));
                SweepPoint {
                    lambda,
                    nu,
                    energy: Some(g.energy),
                    attained: true,
                    upper,
                    lower,
                    residual: Some(g.residual),
                    mass: Some(g.mass),
                    error: None,
                    field: Some(g.field),
                }
            }
            Err(e) => SweepPoint {
                lambda,
                nu,
                energy: None,
                attained: false,
                upper,
                lower,
                residual: None,
                mass: None,
                error: Some(e.to_string()),
                field: None,
            },
        };
        points.push(point);
    }

    let mut windows = Vec::new();
    let mut lipschitz = Vec::new();
    let mut nus: Vec<usize> = points.iter().map(|p| p.nu).collect();
    nus.dedup();
    for nu in nus {
        let inwin: Vec<&SweepPoint> = points.iter().filter(|p| p.nu == nu && p.attained).collect();
        let mut max_decrease = f64::NEG_INFINITY;
        let mut strict = true;
        for pair in inwin.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (ca, cb) = (a.energy.unwrap(), b.energy.unwrap());
            max_decrease = max_decrease.max(ca - cb);
            if cb <= ca {
                strict = false;
            }
            let l_hat = 0.5 * a.mass.unwrap().max(b.mass.unwrap());
            let bound = l_hat * (b.lambda - a.lambda);
            lipschitz.push(LipschitzCheck {
                lambda_a: a.lambda,
                lambda_b: b.lambda,
                delta_c: (cb - ca).abs(),
                bound,
                holds: (cb - ca).abs() <= bound + opts.monotone_slack,
            });
        }
        if inwin.len() < 2 {
            max_decrease = 0.0;
        }
        windows.push(WindowReport {
            nu,
            points: inwin.len(),
            max_decrease,
            non_decreasing: max_decrease <= opts.monotone_slack,
            strictly_increasing: strict && inwin.len() >= 2,
        });
    }

    let c0 = points
        .iter()
        .find(|p| p.lambda == 0.0 && p.attained)
        .and_then(|p| p.energy);
    let eps_nu = windows
        .iter()
        .map(|w| {
            let est = c0.and_then(|c0| {
                let margin = 3.0 * tol * c0.abs().max(1.0);
                let lnu = spec.eigenvalues[w.nu - 1];
                points
                    .iter()
                    .filter(|p| p.nu == w.nu && p.energy.is_some_and(|c| c < c0 - margin))
                    .map(|p| p.lambda + lnu)
                    .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e))))
            });
            (w.nu, est)
        })
        .collect();

    Ok(SweepResult {
        p,
        s_h,
        gap: critical_gap(s_h, p, forms.mu_omega),
        points,
        windows,
        lipschitz,
        eps_nu,
        eigenvalues: spec.eigenvalues.clone(),
    })
}

#[derive(Debug, Clone)]
pub struct EpsOptions {
    pub ground: GroundStateOptions,
    pub s_h: Option<f64>,
    /// Stop when the bracket is narrower than `width · λ_ν`.
    pub width: f64,
    pub max_probes: usize,
}

impl Default for EpsOptions {
    fn default() -> Self {
        Self {
            ground: GroundStateOptions::default(),
            s_h: None,
            width: 1e-2,
            max_probes: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// `c < c₀` by more than three solver tolerances.
    Below,
    NotBelow,
    /// `|c − c₀|` within the noise margin; treated as not below.
    Ambiguous,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsProbe {
    pub eps: f64,
    pub lambda: f64,
    pub energy: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsNuResult {
    pub nu: usize,
    pub lambda_nu: f64,
    pub c0: f64,
    pub s_h: f64,
    /// `S_h μ(Ω)^{(2−p)/p}`.
    pub guaranteed: f64,
    /// Largest `ε` certified by a probe (the lower end of the bracket).
    pub eps_hat: f64,
    pub bracket: (f64, f64),
    /// Some comparison fell inside the noise margin.
    pub widened: bool,
    /// The whole window `(−λ_ν, −λ_{ν−1}]` satisfied `c < c₀`.
    pub window_exhausted: bool,
    pub probes: Vec<EpsProbe>,
}

/// Bisection for `ε_ν = sup{ε : c_{−λ_ν+ε} < c₀}` inside the window of `ν`.
///
/// The guaranteed width `S_h μ(Ω)^{(2−p)/p}` is probed first.
pub fn estimate_eps_nu(forms: &DiscreteForms, nu: usize, opts: &EpsOptions) -> Result<EpsNuResult> {
    if nu == 0 {
        return Err(Error::Config("nu is 1-based".into()));
    }
    let p = forms.p;
    if nu > forms.dim() {
        return Err(Error::InsufficientSpectrum(format!(
            "nu = {nu} exceeds the {} unknowns",
            forms.dim()
        )));
    }
    let spec = crate::spectral::eigenpairs(forms, opts.ground.eigenpairs.max(nu).min(forms.dim()))?;
    let lambda_nu = spec.eigenvalues[nu - 1];
    let top = if nu == 1 { lambda_nu } else { lambda_nu - spec.eigenvalues[nu - 2] };
    if !(top > 0.0) {
        return Err(Error::Config(format!(
            "window of nu = {nu} is empty (degenerate eigenvalue)"
        )));
    }
    let s_h = match opts.s_h {
        Some(s) => s,
        None => compute_s(forms, p, &SobolevOptions::default())?.value,
    };
    let guaranteed = critical_gap(s_h, p, forms.mu_omega);
    let g0 = ground_state_with(forms, &spec.split(0.0)?, 0.0, &opts.ground, None)?;
    let c0 = g0.energy;
    let margin = 3.0 * opts.ground.sphere.tol * c0.abs().max(1.0);

    let mut probes = Vec::new();
    let mut widened = false;
    let mut warm: Option<Vec<f64>> = None;
    let mut probe = |eps: f64, warm: &mut Option<Vec<f64>>| -> Verdict {
        let lambda = -lambda_nu + eps;
        let res = spec
            .split(lambda)
            .and_then(|s| ground_state_with(forms, &s, lambda, &opts.ground, warm.as_deref()));
        let (energy, verdict) = match res {
            Ok(g) => {
                let v = if g.energy < c0 - margin {
                    Verdict::Below
                } else if g.energy < c0 + margin {
                    Verdict::Ambiguous
                } else {
                    Verdict::NotBelow
                };
                if g.nu == nu {
                    *warm = Some(g.field);
                }
                (Some(g.energy), v)
            }
            Err(_) => (None, Verdict::Failed),
        };
        probes.push(EpsProbe {
            eps,
            lambda,
            energy,
            verdict,
        });
        verdict
    };

    let (mut lo, mut hi) = (0.0, top);
    let mut window_exhausted = false;
    if nu > 1
        && probe(top, &mut warm) == Verdict::Below {
            window_exhausted = true;
            lo = top;
        }
    if !window_exhausted && guaranteed < top && probe(guaranteed, &mut warm) == Verdict::Below {
        lo = guaranteed;
    }
    let mut count = 0;
    while !window_exhausted && hi - lo > opts.width * lambda_nu && count < opts.max_probes {
        count += 1;
        let mid = 0.5 * (lo + hi);
        match probe(mid, &mut warm) {
            Verdict::Below => lo = mid,
            Verdict::Ambiguous => {
                widened = true;
                hi = mid;
            }
            _ => hi = mid,
        }
    }
    Ok(EpsNuResult {
        nu,
        lambda_nu,
        c0,
        s_h,
        guaranteed,
        eps_hat: lo,
        bracket: (lo, hi),
        widened,
        window_exhausted,
        probes,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityEntry {
    pub lambda: f64,
    pub energy: Option<f64>,
    pub delta_c: Option<f64>,
    /// `min(‖E − E₀‖_M, ‖E + E₀‖_M)`.
    pub distance: Option<f64>,
    pub lipschitz_bound: Option<f64>,
    pub within_bound: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityReport {
    pub lambda0: f64,
    pub energy0: f64,
    pub nu: usize,
    pub entries: Vec<ContinuityEntry>,
}

/// Ground states along `μ_n` compared with the one at `μ₀`; all values must share a window.
pub fn continuity_of_ground_states(
    forms: &DiscreteForms,
    mu0: f64,
    sequence: &[f64],
    opts: &GroundStateOptions,
) -> Result<ContinuityReport> {
    let lowest = sequence.iter().copied().fold(mu0, f64::min);
    let spec = eigenpairs_for(forms, opts.eigenpairs, lowest)?;
    let s0 = spec.split(mu0)?;
    let nu = s0.nu.expect("split");
    let (lo, hi) = s0.window().expect("split");
    for &m in sequence {
        if !(m > lo && m <= hi) {
            let own = spec.split(m)?;
            let (l, u) = own.window().expect("split");
            return Err(Error::OutsideWindow {
                lambda: m,
                nu: own.nu.expect("split"),
                lower: l,
                upper: u,
            });
        }
    }
    let g0 = ground_state_with(forms, &s0, mu0, opts, None)?;
    let entries = sequence
        .iter()
        .map(|&m| {
            let res = spec
                .split(m)
                .and_then(|s| ground_state_with(forms, &s, m, opts, Some(&g0.field)));
            match res {
                Ok(g) => {
                    let minus: Vec<f64> = g.field.iter().zip(&g0.field).map(|(a, b)| a - b).collect();
                    let plus: Vec<f64> = g.field.iter().zip(&g0.field).map(|(a, b)| a + b).collect();
                    let d = forms.mass_energy(&minus).sqrt().min(forms.mass_energy(&plus).sqrt());
                    let dc = (g.energy - g0.energy).abs();
                    let bound = 0.5 * g.mass.max(g0.mass) * (m - mu0).abs();
                    let slack = 10.0 * opts.sphere.tol * g0.energy.abs().max(1.0);
                    ContinuityEntry {
                        lambda: m,
                        energy: Some(g.energy),
                        delta_c: Some(dc),
                        distance: Some(d),
                        lipschitz_bound: Some(bound),
                        within_bound: Some(dc <= bound + slack),
                    }
                }
                Err(_) => ContinuityEntry {
                    lambda: m,
                    energy: None,
                    delta_c: None,
                    distance: None,
                    lipschitz_bound: None,
                    within_bound: None,
                },
            }
        })
        .collect();
    Ok(ContinuityReport {
        lambda0: mu0,
        energy0: g0.energy,
        nu,
        entries,
    })
}

/// Multi-start bound states of `J_λ` from the given directions (default: the
/// eigenvectors counted by `m̃(λ)`, else `e_ν`), capped at `β₀` when given.
pub fn bound_states(
    forms: &DiscreteForms,
    spectrum: &SpectralSplit,
    lambda: f64,
    starts: Option<&[usize]>,
    cap: Option<f64>,
    opts: &SphereOptions,
) -> Result<Vec<BoundState>> {
    let backend = make_backend(forms, spectrum, lambda, Flavor::Full)?;
    let nu = backend.split.nu.expect("split");
    let idx: Vec<usize> = match starts {
        Some(s) if !s.is_empty() => s.to_vec(),
        _ => vec![nu],
    };
    let dirs: Vec<Vec<f64>> = idx
        .iter()
        .filter(|&&k| k >= 1 && k <= spectrum.len())
        .map(|&k| spectrum.eigenvectors[k - 1].clone())
        .collect();
    if dirs.is_empty() {
        return Err(Error::Config("no usable start directions".into()));
    }
    Ok(multistart_bound_states(&backend, &dirs, 1e-3, cap, opts))
}
