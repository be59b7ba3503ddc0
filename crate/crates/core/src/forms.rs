//! Discrete curl energy, weighted mass and nodal `L^p` quadrature on a meridian grid.
//!
//! For an azimuthal field `E = φ(r, z) e_θ` the curl has components
//! `-∂_z φ` (radial) and `(1/r) ∂_r (r φ)` (axial). Both are differenced on
//! the edges of the tensor grid:
//!
//! * radial edges carry `(r_{i+1} φ_{i+1,j} - r_i φ_{i,j}) / (r_{i+1/2} h_r)`,
//!   weighted by `2π b⁻¹ r_{i+1/2} h_r h_z`;
//! * axial edges carry `(φ_{i,j+1} - φ_{i,j}) / h_z`, weighted by
//!   `2π a⁻¹ r_i h_r h_z`.
//!
//! The stiffness matrix is the sum of the squared edge differences, so it is
//! symmetric and positive definite on the unknowns by construction. The mass
//! and the `p`-term use nodal (lumped) quadrature with cell measure
//! `2π r_i h_r h_z`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grid::{MaterialField, MeridianGrid};
use crate::linalg::{dot, BandCholesky, SparseSym};

/// One edge difference `d = cb·φ[b] − ca·φ[a]` with quadrature weight.
#[derive(Debug, Clone, Copy)]
struct Edge {
    a: usize,
    b: usize,
    ca: f64,
    cb: f64,
    weight: f64,
}

#[derive(Debug)]
pub struct DiscreteForms {
    pub grid: MeridianGrid,
    pub materials: MaterialField,
    pub p: f64,
    /// Curl-energy form `A`.
    pub stiffness: SparseSym,
    /// Diagonal of the `V`-weighted mass form `M`.
    pub mass: Vec<f64>,
    /// Nodal `p`-quadrature weights `2π r h_r h_z a_Γ^p`.
    pub weights: Vec<f64>,
    /// Geometric cell measure `2π r h_r h_z` per unknown.
    pub cell: Vec<f64>,
    /// Lebesgue measure of Ω.
    pub mu_omega: f64,
    edges: Vec<Edge>,
    factor: OnceLock<std::result::Result<BandCholesky, String>>,
}

fn check_exponent(p: f64, lo_inclusive: bool) -> Result<()> {
    let lo_ok = if lo_inclusive { p >= 2.0 } else { p > 2.0 };
    if lo_ok && p <= 6.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "exponent p = {p} outside {}2, 6]",
            if lo_inclusive { "[" } else { "(" }
        )))
    }
}

pub(crate) fn check_exponent_closed(p: f64) -> Result<()> {
    check_exponent(p, true)
}

fn check_finite(phi: &[f64], n: usize) -> Result<()> {
    if phi.len() != n {
        return Err(Error::Config(format!(
            "field has {} entries, expected {n} unknowns",
            phi.len()
        )));
    }
    if let Some(k) = phi.iter().position(|v| !v.is_finite()) {
        return Err(Error::Config(format!("non-finite field entry at unknown {k}")));
    }
    Ok(())
}

impl DiscreteForms {
    pub fn assemble(grid: &MeridianGrid, materials: &MaterialField, p: f64) -> Result<Self> {
        check_exponent(p, false)?;
        materials.validate(grid)?;
        let (h_r, h_z) = (grid.h_r, grid.h_z);
        let mut edges = Vec::new();

        for j in 0..=grid.n_z {
            for i in 0..grid.n_r {
                let (a, b) = (grid.node(i, j), grid.node(i + 1, j));
                if !grid.is_interior(a) && !grid.is_interior(b) {
                    continue;
                }
                let r_half = (i as f64 + 0.5) * h_r;
                let binv = 0.5 * (1.0 / materials.b_mu[a] + 1.0 / materials.b_mu[b]);
                edges.push(Edge {
                    a,
                    b,
                    ca: grid.r(i) / (r_half * h_r),
                    cb: grid.r(i + 1) / (r_half * h_r),
                    weight: 2.0 * PI * binv * r_half * h_r * h_z,
                });
            }
        }
        for i in 1..=grid.n_r {
            for j in 0..grid.n_z {
                let (a, b) = (grid.node(i, j), grid.node(i, j + 1));
                if !grid.is_interior(a) && !grid.is_interior(b) {
                    continue;
                }
                let ainv = 0.5 * (1.0 / materials.a_mu[a] + 1.0 / materials.a_mu[b]);
                edges.push(Edge {
                    a,
                    b,
                    ca: 1.0 / h_z,
                    cb: 1.0 / h_z,
                    weight: 2.0 * PI * ainv * grid.r(i) * h_r * h_z,
                });
            }
        }

        let mut triplets = Vec::with_capacity(4 * edges.len());
        for e in &edges {
            let ua = grid.unknown_of(e.a);
            let ub = grid.unknown_of(e.b);
            if let Some(x) = ua {
                triplets.push((x, x, e.weight * e.ca * e.ca));
            }
            if let Some(y) = ub {
                triplets.push((y, y, e.weight * e.cb * e.cb));
            }
            if let (Some(x), Some(y)) = (ua, ub) {
                let off = -e.weight * e.ca * e.cb;
                triplets.push((x, y, off));
                triplets.push((y, x, off));
            }
        }
        let n = grid.num_unknowns();
        let stiffness = SparseSym::from_triplets(n, &triplets);

        let mut mass = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        let mut cell = Vec::with_capacity(n);
        for k in 0..n {
            let node = grid.unknown_node(k);
            let (r, _) = grid.unknown_coords(k);
            let c = 2.0 * PI * r * h_r * h_z;
            cell.push(c);
            mass.push(c * materials.a_v[node]);
            weights.push(c * materials.a_gamma[node].powf(p));
        }
        let mu_omega = cell.iter().sum();

        Ok(Self {
            grid: grid.clone(),
            materials: materials.clone(),
            p,
            stiffness,
            mass,
            weights,
            cell,
            mu_omega,
            edges,
            factor: OnceLock::new(),
        })
    }

    /// Isotropic forms (all coefficients one).
    pub fn isotropic(grid: &MeridianGrid, p: f64) -> Result<Self> {
        Self::assemble(grid, &MaterialField::isotropic(grid), p)
    }

    pub fn dim(&self) -> usize {
        self.grid.num_unknowns()
    }

    /// Same grid and materials with another exponent.
    pub fn with_exponent(&self, p: f64) -> Result<Self> {
        Self::assemble(&self.grid, &self.materials, p)
    }

    /// `φᵀ A φ`
    pub fn curl_energy(&self, phi: &[f64]) -> f64 {
        self.stiffness.quad(phi)
    }

    /// `φᵀ M φ`
    pub fn mass_energy(&self, phi: &[f64]) -> f64 {
        phi.iter().zip(&self.mass).map(|(v, m)| m * v * v).sum()
    }

    pub fn mass_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).zip(&self.mass).map(|((a, b), m)| m * a * b).sum()
    }

    pub fn mass_apply(&self, phi: &[f64]) -> Vec<f64> {
        phi.iter().zip(&self.mass).map(|(v, m)| m * v).collect()
    }

    /// `Σ w_i |φ_i|^p` with the assembled exponent.
    pub fn power_sum(&self, phi: &[f64]) -> f64 {
        let p = self.p;
        phi.iter().zip(&self.weights).map(|(v, w)| w * v.abs().powf(p)).sum()
    }

    /// `Σ 2π r h_r h_z a_Γ^q |φ|^q` for any exponent `q`.
    pub fn power_sum_with(&self, phi: &[f64], q: f64) -> f64 {
        (0..phi.len())
            .map(|k| {
                let g = self.materials.a_gamma[self.grid.unknown_node(k)];
                self.cell[k] * g.powf(q) * phi[k].abs().powf(q)
            })
            .sum()
    }

    /// Material-free `L^q` norm `(Σ 2π r h_r h_z |φ|^q)^{1/q}`.
    pub fn lq_norm(&self, phi: &[f64], q: f64) -> f64 {
        phi.iter()
            .zip(&self.cell)
            .map(|(v, c)| c * v.abs().powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }

    /// `J_λ(φ) = ½ φᵀAφ + (λ/2) φᵀMφ − (1/p) Σ w |φ|^p`.
    pub fn energy(&self, lambda: f64, phi: &[f64]) -> Result<f64> {
        check_finite(phi, self.dim())?;
        Ok(self.energy_unchecked(lambda, phi))
    }

    pub(crate) fn energy_unchecked(&self, lambda: f64, phi: &[f64]) -> f64 {
        0.5 * self.curl_energy(phi) + 0.5 * lambda * self.mass_energy(phi)
            - self.power_sum(phi) / self.p
    }

    /// `Aφ + λMφ − (w |φ|^{p−2} φ)`, the Euclidean representation of `J_λ'(φ)`.
    pub fn energy_gradient(&self, lambda: f64, phi: &[f64]) -> Result<Vec<f64>> {
        check_finite(phi, self.dim())?;
        Ok(self.energy_gradient_unchecked(lambda, phi))
    }

    pub(crate) fn energy_gradient_unchecked(&self, lambda: f64, phi: &[f64]) -> Vec<f64> {
        let mut g = self.stiffness.mul(phi);
        for k in 0..g.len() {
            let v = phi[k];
            g[k] += lambda * self.mass[k] * v - self.weights[k] * v.abs().powf(self.p - 2.0) * v;
        }
        g
    }

    /// Second derivative applied to a direction: `Ah + λMh − (p−1) w |φ|^{p−2} h`.
    pub fn energy_hessian_apply(&self, lambda: f64, phi: &[f64], h: &[f64]) -> Vec<f64> {
        let mut out = self.stiffness.mul(h);
        for k in 0..out.len() {
            out[k] += lambda * self.mass[k] * h[k]
                - (self.p - 1.0) * self.weights[k] * phi[k].abs().powf(self.p - 2.0) * h[k];
        }
        out
    }

    /// Applies the edge stencil to a full nodal field, boundary values
    /// included, and returns the rows of the unknowns.
    pub fn stencil_apply_full(&self, full: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for e in &self.edges {
            let d = e.cb * full[e.b] - e.ca * full[e.a];
            if let Some(x) = self.grid.unknown_of(e.a) {
                out[x] -= e.weight * e.ca * d;
            }
            if let Some(y) = self.grid.unknown_of(e.b) {
                out[y] += e.weight * e.cb * d;
            }
        }
        out
    }

    /// `sqrt(rᵀ M⁻¹ r)`, the discrete `L²` norm of a nodal residual.
    pub fn dual_mass_norm(&self, r: &[f64]) -> f64 {
        r.iter().zip(&self.mass).map(|(v, m)| v * v / m).sum::<f64>().sqrt()
    }

    /// Cached Cholesky factor of `A`.
    pub fn stiffness_factor(&self) -> Result<&BandCholesky> {
        self.factor
            .get_or_init(|| BandCholesky::factor(&self.stiffness).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::Numeric(e.clone()))
    }

    /// Solves `A x = b`.
    pub fn solve_stiffness(&self, b: &[f64]) -> Result<Vec<f64>> {
        Ok(self.stiffness_factor()?.solve(b))
    }

    /// `uᵀ A v`
    pub fn curl_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(u, &self.stiffness.mul(v))
    }
}
