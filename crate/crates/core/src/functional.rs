//! Curl-curl backends: `J_λ` on the symmetric space, the compactly perturbed
//! `J₀`, and the anisotropic functional with the eigenvalue-one threshold.

use crate::error::{Error, Result};
use crate::forms::DiscreteForms;
use crate::linalg::{axpy, dot};
use crate::nehari::FunctionalBackend;
use crate::spectral::SpectralSplit;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    /// `J_λ` with the spectral splitting at `λ`.
    Full,
    /// `J₀` with `X̃ = {0}`; independent of `λ`.
    CompactlyPerturbed,
}

/// `J(φ) = ½‖φ⁺‖²_A − I(φ)` with `I(φ) = −½Σλ_k c_k² − (λ/2)φᵀMφ + (1/p)Σw|φ|^p`,
/// `c_k = e_kᵀMφ` over the nonpositive eigenvectors.
#[derive(Debug)]
pub struct CurlCurlBackend<'a> {
    pub forms: &'a DiscreteForms,
    pub split: SpectralSplit,
    pub lambda: f64,
    pub flavor: Flavor,
    tilde: Vec<Vec<f64>>,
    tilde_values: Vec<f64>,
    lambda_eff: f64,
}

/// Builds the isotropic backend; `split` may be unsplit or split at another `λ`.
pub fn make_backend<'a>(
    forms: &'a DiscreteForms,
    split: &SpectralSplit,
    lambda: f64,
    flavor: Flavor,
) -> Result<CurlCurlBackend<'a>> {
    if lambda > 0.0 {
        return Err(Error::Config(format!(
            "lambda = {lambda} > 0 is not supported by the curl-curl backend"
        )));
    }
    let split = if split.lambda == Some(lambda) {
        split.clone()
    } else {
        split.split(lambda)?
    };
    Ok(build(forms, split, lambda, flavor))
}

/// Anisotropic backend: `Q(v) = vᵀA_μv − vᵀM_Vv`, nonpositive part spanned by eigenvectors with `λ_k ≤ 1`.
pub fn make_aniso_backend<'a>(
    forms: &'a DiscreteForms,
    spectrum: &SpectralSplit,
    flavor: Flavor,
) -> Result<CurlCurlBackend<'a>> {
    make_backend(forms, spectrum, -1.0, flavor)
}

fn build(forms: &DiscreteForms, split: SpectralSplit, lambda: f64, flavor: Flavor) -> CurlCurlBackend<'_> {
    let (tilde, tilde_values, lambda_eff) = match flavor {
        Flavor::Full => (
            split.tilde_basis().to_vec(),
            split.eigenvalues[..split.tilde_dim()].to_vec(),
            lambda,
        ),
        Flavor::CompactlyPerturbed => (Vec::new(), Vec::new(), 0.0),
    };
    CurlCurlBackend {
        forms,
        split,
        lambda,
        flavor,
        tilde,
        tilde_values,
        lambda_eff,
    }
}

impl CurlCurlBackend<'_> {
    /// The `λ` entering the quadratic part (`0` for the compactly perturbed flavor).
    pub fn effective_lambda(&self) -> f64 {
        self.lambda_eff
    }

    fn tilde_coeffs(&self, u: &[f64]) -> Vec<f64> {
        self.tilde.iter().map(|e| self.forms.mass_inner(e, u)).collect()
    }

    /// `‖Aφ + λMφ − w|φ|^{p−2}φ‖_{M⁻¹}`.
    pub fn residual(&self, phi: &[f64]) -> f64 {
        residual(self, phi)
    }
}

impl FunctionalBackend for CurlCurlBackend<'_> {
    fn dim(&self) -> usize {
        self.forms.dim()
    }

    fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.forms.curl_inner(u, v)
    }

    fn riesz(&self, g: &[f64]) -> Vec<f64> {
        self.forms
            .solve_stiffness(g)
            .expect("stiffness form is positive definite")
    }

    fn tilde_basis(&self) -> &[Vec<f64>] {
        &self.tilde
    }

    fn project_plus(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for (e, c) in self.tilde.iter().zip(self.tilde_coeffs(v)) {
            axpy(-c, e, &mut out);
        }
        out
    }

    fn value(&self, u: &[f64]) -> f64 {
        self.forms.energy_unchecked(self.lambda_eff, u)
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        self.forms.energy_gradient_unchecked(self.lambda_eff, u)
    }

    fn hessian_apply(&self, u: &[f64], h: &[f64]) -> Vec<f64> {
        self.forms.energy_hessian_apply(self.lambda_eff, u, h)
    }

    fn nonlinear_value(&self, u: &[f64]) -> f64 {
        let c = self.tilde_coeffs(u);
        let tilde: f64 = c.iter().zip(&self.tilde_values).map(|(c, l)| l * c * c).sum();
        -0.5 * tilde - 0.5 * self.lambda_eff * self.forms.mass_energy(u)
            + self.forms.power_sum(u) / self.forms.p
    }

    fn nonlinear_gradient(&self, u: &[f64]) -> Vec<f64> {
        let p = self.forms.p;
        let mut g: Vec<f64> = (0..u.len())
            .map(|k| {
                let m = self.forms.mass[k];
                -self.lambda_eff * m * u[k] + self.forms.weights[k] * u[k].abs().powf(p - 2.0) * u[k]
            })
            .collect();
        for ((e, c), l) in self.tilde.iter().zip(self.tilde_coeffs(u)).zip(&self.tilde_values) {
            let me = self.forms.mass_apply(e);
            axpy(-l * c, &me, &mut g);
        }
        g
    }

    fn l2_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.forms.mass_inner(u, v)
    }
}

/// Discrete Euler-Lagrange residual in the `M⁻¹`-weighted norm.
pub fn residual(backend: &CurlCurlBackend<'_>, phi: &[f64]) -> f64 {
    let g = backend.gradient(phi);
    backend.forms.dual_mass_norm(&g)
}

/// Residual of the linear part `Aφ + λMφ` alone.
pub fn linear_residual(backend: &CurlCurlBackend<'_>, phi: &[f64]) -> f64 {
    let mut g = backend.forms.stiffness.mul(phi);
    axpy(backend.effective_lambda(), &backend.forms.mass_apply(phi), &mut g);
    backend.forms.dual_mass_norm(&g)
}

/// `|Σw|φ₀+ψ|^p − Σw|ψ|^p − Σw|φ₀|^p|`.
pub fn brezis_lieb_defect(forms: &DiscreteForms, phi0: &[f64], psi: &[f64]) -> f64 {
    let sum: Vec<f64> = phi0.iter().zip(psi).map(|(a, b)| a + b).collect();
    (forms.power_sum(&sum) - forms.power_sum(psi) - forms.power_sum(phi0)).abs()
}

/// `‖u⁺‖²` in the backend's inner product.
pub fn plus_norm_sq(backend: &CurlCurlBackend<'_>, u: &[f64]) -> f64 {
    let up = backend.project_plus(u);
    dot(&up, &backend.forms.stiffness.mul(&up))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{MaterialField, MeridianGrid};
    use crate::spectral::eigenpairs;

    fn setup(n: usize) -> DiscreteForms {
        let g = MeridianGrid::rectangle(1.0, 0.0, 1.0, n, n).unwrap();
        DiscreteForms::isotropic(&g, 6.0).unwrap()
    }

    fn sample(n: usize) -> Vec<f64> {
        (0..n).map(|k| ((k * 37 % 11) as f64 - 5.0) * 0.07).collect()
    }

    #[test]
    fn zero_lambda_is_pure_power() {
        let f = setup(8);
        let spec = eigenpairs(&f, 4).unwrap();
        let b = make_backend(&f, &spec, 0.0, Flavor::Full).unwrap();
        assert!(b.tilde_basis().is_empty());
        let u = sample(f.dim());
        assert!((b.nonlinear_value(&u) - f.power_sum(&u) / 6.0).abs() < 1e-15);
    }

    #[test]
    fn decomposition_identity() {
        let f = setup(8);
        let spec = eigenpairs(&f, 6).unwrap();
        let lambda = -0.5 * (spec.eigenvalues[1] + spec.eigenvalues[2]);
        let b = make_backend(&f, &spec, lambda, Flavor::Full).unwrap();
        assert_eq!(b.tilde_basis().len(), 2);
        let u = sample(f.dim());
        let lhs = 0.5 * plus_norm_sq(&b, &u) - b.nonlinear_value(&u);
        let rhs = f.energy(lambda, &u).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn positive_lambda_rejected() {
        let f = setup(6);
        let spec = eigenpairs(&f, 2).unwrap();
        assert!(matches!(
            make_backend(&f, &spec, 0.1, Flavor::Full),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn linear_residual_of_first_eigenvector() {
        let f = setup(8);
        let spec = eigenpairs(&f, 3).unwrap();
        let b = make_backend(&f, &spec, -spec.eigenvalues[0], Flavor::Full).unwrap();
        let e = crate::linalg::scaled(3.7, &spec.eigenvectors[0]);
        assert!(linear_residual(&b, &e) < 1e-9);
    }

    #[test]
    fn gamma_scales_power_term() {
        let g = MeridianGrid::rectangle(1.0, 0.0, 1.0, 6, 6).unwrap();
        let unit = DiscreteForms::isotropic(&g, 6.0).unwrap();
        let m = MaterialField::constant(&g, 1.0, 1.0, 1.0, 2.0);
        let two = DiscreteForms::assemble(&g, &m, 6.0).unwrap();
        let u = sample(unit.dim());
        assert!((two.power_sum(&u) - 64.0 * unit.power_sum(&u)).abs() < 1e-12 * two.power_sum(&u));
    }
}
