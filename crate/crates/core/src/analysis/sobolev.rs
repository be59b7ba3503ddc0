//! The discrete Sobolev-type constant `S_h` and the energy bounds built from it.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{check_exponent_closed, DiscreteForms};
use crate::linalg::{axpy, dot, scaled};
use crate::spectral::{eigenpairs, nu_index, SpectralSplit};

use super::starts::axis_bumps;

#[derive(Debug, Clone)]
pub struct SobolevOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Number of lowest eigenvectors used as starts.
    pub starts: usize,
    /// Number of concentrated starts along the axis.
    pub axis_bumps: usize,
}

impl Default for SobolevOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 20000,
            starts: 3,
            axis_bumps: 5,
        }
    }
}

/// `S_h = min ‖φ‖²_A / N(φ)^{2/p}` with `N(φ) = Σ 2π r h_r h_z a_Γ^p |φ|^p`.
#[derive(Debug, Clone, Serialize)]
pub struct SobolevEstimate {
    pub value: f64,
    pub p: f64,
    #[serde(skip)]
    pub field: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub start_index: usize,
    pub converged: bool,
}

/// `S_h` from the lowest eigenvector directions and the axis bumps.
pub fn compute_s(forms: &DiscreteForms, p: f64, opts: &SobolevOptions) -> Result<SobolevEstimate> {
    let k = opts.starts.max(1).min(forms.dim());
    let mut starts = eigenpairs(forms, k)?.eigenvectors;
    starts.extend(axis_bumps(forms, opts.axis_bumps));
    compute_s_from(forms, p, &starts, opts)
}

/// `S_h` by Riemannian descent on the `A`-unit sphere from each start; keeps the smallest value.
pub fn compute_s_from(
    forms: &DiscreteForms,
    p: f64,
    starts: &[Vec<f64>],
    opts: &SobolevOptions,
) -> Result<SobolevEstimate> {
    check_exponent_closed(p)?;
    if starts.is_empty() {
        return Err(Error::Config("compute_s needs at least one start".into()));
    }
    let runs: Vec<Result<SobolevEstimate>> = starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            descend(forms, p, s, opts).map(|mut e| {
                e.start_index = i;
                e
            })
        })
        .collect();
    let mut best: Option<SobolevEstimate> = None;
    let mut first_err = None;
    for r in runs {
        match r {
            Ok(e) => {
                let better = best.as_ref().is_none_or(|b| {
                    (e.converged && !b.converged) || (e.converged == b.converged && e.value < b.value)
                });
                if better {
                    best = Some(e);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some(b) if b.converged => Ok(b),
        Some(b) => Err(Error::Numeric(format!(
            "S_h descent did not converge (best value {:.10e}, gradient {:.3e})",
            b.value, b.grad_norm
        ))),
        None => Err(first_err.unwrap()),
    }
}

/// Objective `f(u) = −(2/p) ln N(u)` on `‖u‖_A = 1`; `S = exp f`.
fn objective(forms: &DiscreteForms, p: f64, u: &[f64]) -> f64 {
    -(2.0 / p) * forms.power_sum_with(u, p).ln()
}

fn tangent_gradient(forms: &DiscreteForms, p: f64, u: &[f64]) -> Result<Vec<f64>> {
    let n = forms.power_sum_with(u, p);
    let cov: Vec<f64> = (0..u.len())
        .map(|k| {
            let g = forms.materials.a_gamma[forms.grid.unknown_node(k)];
            -2.0 * forms.cell[k] * g.powf(p) * u[k].abs().powf(p - 2.0) * u[k] / n
        })
        .collect();
    let mut r = forms.solve_stiffness(&cov)?;
    let ru = dot(&cov, u);
    axpy(-ru, u, &mut r);
    Ok(r)
}

fn normalize(forms: &DiscreteForms, v: &[f64]) -> Option<Vec<f64>> {
    let n = forms.curl_energy(v).sqrt();
    (n > 0.0 && n.is_finite()).then(|| scaled(1.0 / n, v))
}

fn descend(forms: &DiscreteForms, p: f64, start: &[f64], opts: &SobolevOptions) -> Result<SobolevEstimate> {
    let mut u = normalize(forms, start).ok_or_else(|| Error::Config("zero start for S_h".into()))?;
    let mut f = objective(forms, p, &u);
    let mut g = tangent_gradient(forms, p, &u)?;
    let mut gn = forms.curl_energy(&g).sqrt();
    let mut alpha = if gn > 0.0 { 0.1 / gn } else { 0.0 };
    let mut it = 0;
    let mut converged = false;
    while it < opts.max_iter {
        if gn <= opts.tol {
            converged = true;
            break;
        }
        it += 1;
        alpha = alpha.min(0.5 / gn);
        let allowance = 10.0 * f64::EPSILON * f.abs().max(1.0);
        let mut next = None;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
            if let Some(un) = normalize(forms, &trial) {
                let fn_ = objective(forms, p, &un);
                if fn_ <= f - 1e-4 * alpha * gn * gn + allowance {
                    next = Some((un, fn_));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((un, fn_)) = next else {
            converged = gn <= 1e2 * opts.tol;
            break;
        };
        let gnew = tangent_gradient(forms, p, &un)?;
        let s: Vec<f64> = un.iter().zip(&u).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = forms.curl_inner(&s, &y);
        let ss = forms.curl_energy(&s);
        alpha = if sy > 0.0 { ss / sy } else { 2.0 * alpha };
        u = un;
        f = fn_;
        g = gnew;
        gn = forms.curl_energy(&g).sqrt();
    }
    if !converged && gn <= opts.tol {
        converged = true;
    }
    Ok(SobolevEstimate {
        value: f.exp(),
        p,
        field: u,
        iterations: it,
        grad_norm: gn,
        start_index: 0,
        converged,
    })
}

/// `S μ(Ω)^{(2−p)/p}`.
pub fn critical_gap(s: f64, p: f64, mu_omega: f64) -> f64 {
    s * mu_omega.powf((2.0 - p) / p)
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyBounds {
    pub lambda: f64,
    pub p: f64,
    pub nu: usize,
    pub lambda_nu: f64,
    /// `(−λ_ν, −λ_{ν−1}]`.
    pub window: (f64, f64),
    pub s: f64,
    pub mu_omega: f64,
    /// `(½ − 1/p)(λ + λ_ν)^{p/(p−2)} μ(Ω)`.
    pub upper: f64,
    /// `(½ − 1/p) S^{p/(p−2)}`.
    pub lower: f64,
    pub beta0: f64,
    /// `S μ(Ω)^{(2−p)/p}`.
    pub gap: f64,
    /// `λ + λ_ν < S μ(Ω)^{(2−p)/p}`.
    pub below_gap: bool,
    /// `S μ(Ω)^{(2−p)/p} ≤ λ_ν`.
    pub gap_below_lambda_nu: bool,
}

/// Bounds of the ground-state level in the window of `λ`.
///
/// If `split` was made at a different `λ` and this `λ` is outside its window,
/// the error names the window `λ` belongs to.
pub fn energy_bounds(
    split: &SpectralSplit,
    s: f64,
    p: f64,
    mu_omega: f64,
    lambda: f64,
) -> Result<EnergyBounds> {
    if lambda > 0.0 || !lambda.is_finite() {
        return Err(Error::Config(format!(
            "lambda = {lambda} lies in no window; admissible values are lambda <= 0"
        )));
    }
    let own = nu_index(&split.eigenvalues, lambda)?;
    if let Some((lo, hi)) = split.window() {
        if !(lambda > lo && lambda <= hi) {
            let lower = -split.eigenvalues[own - 1];
            let upper = if own == 1 { 0.0 } else { -split.eigenvalues[own - 2] };
            return Err(Error::OutsideWindow {
                lambda,
                nu: own,
                lower,
                upper,
            });
        }
    }
    let nu = own;
    let lambda_nu = split.eigenvalues[nu - 1];
    let window = (
        -lambda_nu,
        if nu == 1 { 0.0 } else { -split.eigenvalues[nu - 2] },
    );
    let e = p / (p - 2.0);
    let c = 0.5 - 1.0 / p;
    let upper = c * (lambda + lambda_nu).powf(e) * mu_omega;
    let lower = c * s.powf(e);
    let gap = critical_gap(s, p, mu_omega);
    Ok(EnergyBounds {
        lambda,
        p,
        nu,
        lambda_nu,
        window,
        s,
        mu_omega,
        upper,
        lower,
        beta0: lower,
        gap,
        below_gap: lambda + lambda_nu < gap,
        gap_below_lambda_nu: gap <= lambda_nu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::MeridianGrid;

    #[test]
    fn bound_formulas() {
        let spec = SpectralSplit::from_values(vec![2.0, 5.0]);
        let b = energy_bounds(&spec, 1.0, 6.0, std::f64::consts::PI, -1.0).unwrap();
        assert!((b.upper - std::f64::consts::PI / 3.0).abs() < 1e-14);
        assert!((b.lower - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(b.beta0, b.lower);
        let near = energy_bounds(&spec, 1.0, 6.0, 1.0, -2.0 + 1e-9).unwrap();
        assert!(near.upper < 1e-12);
    }

    #[test]
    fn window_errors() {
        let spec = SpectralSplit::from_values(vec![2.0, 5.0]);
        assert!(matches!(energy_bounds(&spec, 1.0, 4.0, 1.0, 0.5), Err(Error::Config(_))));
        let split = spec.split(-1.0).unwrap();
        match energy_bounds(&split, 1.0, 4.0, 1.0, -3.0) {
            Err(Error::OutsideWindow { nu, .. }) => assert_eq!(nu, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn quadratic_exponent_gives_first_eigenvalue() {
        let g = MeridianGrid::rectangle(1.0, 0.0, 1.0, 10, 10).unwrap();
        let f = DiscreteForms::isotropic(&g, 4.0).unwrap();
        let l1 = eigenpairs(&f, 1).unwrap().eigenvalues[0];
        let s = compute_s(&f, 2.0, &SobolevOptions::default()).unwrap();
        assert!((s.value - l1).abs() <= 1e-8 * l1);
    }
}
