//! Lowest eigenpairs of the pencil `(A, M)` and the spectral splitting at a given `λ`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forms::DiscreteForms;
use crate::linalg::{dot, BandCholesky};

/// Problems up to this size go through the dense solver.
pub const DENSE_LIMIT: usize = 300;
/// Relative gap below which neighbouring eigenvalues share a cluster.
pub const CLUSTER_TOL: f64 = 1e-6;

const SUBSPACE_TOL: f64 = 1e-10;
const SUBSPACE_MAX_ITER: usize = 2000;
const START_SEED: u64 = 0x5eed_cafe;

#[derive(Debug, Clone)]
pub struct SpectralSplit {
    /// Ascending generalized eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// `M`-orthonormal eigenvectors, sign fixed by the largest entry.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Cluster id per eigenvalue (0-based, ascending).
    pub clusters: Vec<usize>,
    /// The `λ` of the split, if one was made.
    pub lambda: Option<f64>,
    /// `ν = min{k : λ_k + λ > 0}` (1-based), if split.
    pub nu: Option<usize>,
    tilde_dim: usize,
}

impl SpectralSplit {
    /// Eigenvalue list without vectors, for spectrum arithmetic.
    pub fn from_values(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let clusters = clusters(&eigenvalues, CLUSTER_TOL);
        Self {
            eigenvalues,
            eigenvectors: Vec::new(),
            clusters,
            lambda: None,
            nu: None,
            tilde_dim: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvectors spanning the nonpositive part of `Q`.
    pub fn tilde_basis(&self) -> &[Vec<f64>] {
        &self.eigenvectors[..self.tilde_dim.min(self.eigenvectors.len())]
    }

    pub fn tilde_dim(&self) -> usize {
        self.tilde_dim
    }

    /// Size of the cluster containing index `k` (0-based).
    pub fn multiplicity(&self, k: usize) -> usize {
        let id = self.clusters[k];
        self.clusters.iter().filter(|c| **c == id).count()
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.last().map_or(0, |c| c + 1)
    }

    /// `λ_ν` for the current split.
    pub fn lambda_nu(&self) -> Option<f64> {
        self.nu.map(|nu| self.eigenvalues[nu - 1])
    }

    /// Splits at `λ`; ties `λ_k + λ = 0` go to the nonpositive part.
    pub fn split(&self, lambda: f64) -> Result<SpectralSplit> {
        if !lambda.is_finite() {
            return Err(Error::Config(format!("lambda = {lambda} is not finite")));
        }
        if lambda > 0.0 {
            return Err(Error::Config(format!(
                "lambda = {lambda} > 0 is outside the supported regime lambda <= 0"
            )));
        }
        let nu = nu_index(&self.eigenvalues, lambda)?;
        Ok(SpectralSplit {
            lambda: Some(lambda),
            nu: Some(nu),
            tilde_dim: nu - 1,
            ..self.clone()
        })
    }

    /// Window `(−λ_ν, −λ_{ν−1}]` containing the split's `λ` (upper end 0 for ν = 1 is open to +∞).
    pub fn window(&self) -> Option<(f64, f64)> {
        let nu = self.nu?;
        let lower = -self.eigenvalues[nu - 1];
        let upper = if nu == 1 { 0.0 } else { -self.eigenvalues[nu - 2] };
        Some((lower, upper))
    }
}

/// `ν = min{k : λ_k + λ > 0}` over the computed list.
pub fn nu_index(eigenvalues: &[f64], lambda: f64) -> Result<usize> {
    match eigenvalues.iter().position(|l| l + lambda > 0.0) {
        Some(k) => Ok(k + 1),
        None => Err(Error::InsufficientSpectrum(format!(
            "all {} computed eigenvalues satisfy lambda_k + lambda <= 0 at lambda = {lambda}",
            eigenvalues.len()
        ))),
    }
}

/// `Q(v) = vᵀAv + λ vᵀMv`.
pub fn q_form(forms: &DiscreteForms, lambda: f64, v: &[f64]) -> f64 {
    forms.curl_energy(v) + lambda * forms.mass_energy(v)
}

/// Groups an ascending list into clusters by relative gap.
pub fn clusters(eigenvalues: &[f64], tol: f64) -> Vec<usize> {
    let mut ids = Vec::with_capacity(eigenvalues.len());
    let mut id = 0;
    for (k, &l) in eigenvalues.iter().enumerate() {
        if k > 0 {
            let prev = eigenvalues[k - 1];
            if (l - prev) > tol * l.abs().max(prev.abs()) {
                id += 1;
            }
        }
        ids.push(id);
    }
    ids
}

/// The `k` lowest eigenpairs of `Aφ = λMφ`.
pub fn eigenpairs(forms: &DiscreteForms, k: usize) -> Result<SpectralSplit> {
    let n = forms.dim();
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "requested {k} eigenpairs, must be between 1 and {n}"
        )));
    }
    let block = k + (k / 2).max(8);
    let (values, mut vectors) = if n <= DENSE_LIMIT || 2 * block >= n {
        dense_eigenpairs(forms, k)?
    } else {
        subspace_eigenpairs(forms, k, block)?
    };
    for v in &mut vectors {
        fix_sign(v);
    }
    let clusters = clusters(&values, CLUSTER_TOL);
    Ok(SpectralSplit {
        eigenvalues: values,
        eigenvectors: vectors,
        clusters,
        lambda: None,
        nu: None,
        tilde_dim: 0,
    })
}

/// `k` eigenpairs plus the split at `λ`, enlarging `k` until the split exists.
pub fn eigenpairs_for(forms: &DiscreteForms, k: usize, lambda: f64) -> Result<SpectralSplit> {
    let n = forms.dim();
    let mut k = k.max(1).min(n);
    loop {
        let spec = eigenpairs(forms, k)?;
        match spec.split(lambda) {
            Err(Error::InsufficientSpectrum(_)) if k < n => k = (2 * k).min(n),
            other => return other,
        }
    }
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0_f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn dense_eigenpairs(forms: &DiscreteForms, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = forms.dim();
    let s: Vec<f64> = forms.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut b = forms.stiffness.to_dense();
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] *= s[i] * s[j];
        }
    }
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let l = eig.eigenvalues[idx];
        if !(l > 0.0) {
            return Err(Error::Numeric(format!("nonpositive eigenvalue {l:e}")));
        }
        values.push(l);
        let col = eig.eigenvectors.column(idx);
        let v: Vec<f64> = (0..n).map(|i| col[i] * s[i]).collect();
        let norm = forms.mass_energy(&v).sqrt();
        vectors.push(v.into_iter().map(|x| x / norm).collect());
    }
    Ok((values, vectors))
}

/// Shift-invert block subspace iteration at shift zero with Rayleigh-Ritz.
fn subspace_eigenpairs(
    forms: &DiscreteForms,
    k: usize,
    block: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = forms.dim();
    let chol: &BandCholesky = forms.stiffness_factor()?;
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut x: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect())
        .collect();

    let mut values: Vec<f64>;
    for _ in 0..SUBSPACE_MAX_ITER {
        let y: Vec<Vec<f64>> = x
            .par_iter()
            .map(|v| chol.solve(&forms.mass_apply(v)))
            .collect();
        let ay: Vec<Vec<f64>> = y.par_iter().map(|v| forms.stiffness.mul(v)).collect();
        let my: Vec<Vec<f64>> = y.iter().map(|v| forms.mass_apply(v)).collect();
        let (theta, coeffs) = rayleigh_ritz(&y, &ay, &my)?;
        x = combine(&y, &coeffs);
        let ax = combine(&ay, &coeffs);
        values = theta;

        let converged = (0..k).all(|j| {
            let mx = forms.mass_apply(&x[j]);
            let r: Vec<f64> = ax[j]
                .iter()
                .zip(&mx)
                .map(|(a, m)| a - values[j] * m)
                .collect();
            let rn = forms.dual_mass_norm(&r);
            let scale = values[j].abs() * forms.mass_energy(&x[j]).sqrt();
            rn <= SUBSPACE_TOL * scale
        });
        if converged {
            values.truncate(k);
            x.truncate(k);
            return Ok((values, x));
        }
    }
    Err(Error::Numeric(format!(
        "subspace iteration did not converge for {k} eigenpairs"
    )))
}

fn combine(basis: &[Vec<f64>], coeffs: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let n = basis[0].len();
    (0..coeffs.ncols())
        .into_par_iter()
        .map(|j| {
            let mut v = vec![0.0; n];
            for (i, b) in basis.iter().enumerate() {
                crate::linalg::axpy(coeffs[(i, j)], b, &mut v);
            }
            v
        })
        .collect()
}

/// Solves the projected pencil; returns ascending Ritz values and `M`-orthonormal coefficients.
fn rayleigh_ritz(
    y: &[Vec<f64>],
    ay: &[Vec<f64>],
    my: &[Vec<f64>],
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let b = y.len();
    let ar = DMatrix::from_fn(b, b, |i, j| 0.5 * (dot(&y[i], &ay[j]) + dot(&y[j], &ay[i])));
    let mr = DMatrix::from_fn(b, b, |i, j| 0.5 * (dot(&y[i], &my[j]) + dot(&y[j], &my[i])));
    let chol = mr
        .cholesky()
        .ok_or_else(|| Error::Numeric("projected mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular projected mass factor".into()))?;
    let c = &linv * &ar * linv.transpose();
    let c = 0.5 * (&c + c.transpose());
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by(|&x, &z| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[z]));
    let theta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let w = DMatrix::from_fn(b, b, |i, j| eig.eigenvectors[(i, order[j])]);
    let coeffs = linv.transpose() * w;
    Ok((theta, coeffs))
}

/// Largest `|e_kᵀ M e_l − δ_kl|` and `|e_kᵀ A e_l − λ_k δ_kl| / λ_k` over the computed pairs.
pub fn orthonormality_defect(forms: &DiscreteForms, spec: &SpectralSplit) -> (f64, f64) {
    let k = spec.len();
    let av: Vec<Vec<f64>> = spec.eigenvectors.iter().map(|v| forms.stiffness.mul(v)).collect();
    let mut m_def = 0.0_f64;
    let mut a_def = 0.0_f64;
    for i in 0..k {
        for j in 0..k {
            let delta = if i == j { 1.0 } else { 0.0 };
            let m = forms.mass_inner(&spec.eigenvectors[i], &spec.eigenvectors[j]);
            m_def = m_def.max((m - delta).abs());
            let a = dot(&spec.eigenvectors[i], &av[j]);
            let scale = spec.eigenvalues[i].max(spec.eigenvalues[j]);
            a_def = a_def.max((a - delta * spec.eigenvalues[i]).abs() / scale);
        }
    }
    (m_def, a_def)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::MeridianGrid;

    fn cylinder(n: usize) -> DiscreteForms {
        let g = MeridianGrid::rectangle(1.0, 0.0, 1.0, n, n).unwrap();
        DiscreteForms::isotropic(&g, 6.0).unwrap()
    }

    #[test]
    fn clustering_by_relative_gap() {
        assert_eq!(clusters(&[1.0, 1.0 + 1e-9, 2.0, 3.0], 1e-6), vec![0, 0, 1, 2]);
    }

    #[test]
    fn split_at_zero_and_at_first_eigenvalue() {
        let f = cylinder(10);
        let spec = eigenpairs(&f, 4).unwrap();
        let s0 = spec.split(0.0).unwrap();
        assert_eq!(s0.nu, Some(1));
        assert!(s0.tilde_basis().is_empty());
        let s1 = spec.split(-spec.eigenvalues[0]).unwrap();
        assert_eq!(s1.tilde_dim(), 1);
        assert_eq!(s1.nu, Some(2));
        let mid = -0.5 * (spec.eigenvalues[0] + spec.eigenvalues[1]);
        assert_eq!(spec.split(mid).unwrap().tilde_dim(), 1);
        assert!(spec.split(0.5).is_err());
        assert!(matches!(
            spec.split(-spec.eigenvalues[3] - 1.0),
            Err(Error::InsufficientSpectrum(_))
        ));
    }

    #[test]
    fn dense_and_subspace_paths_agree() {
        let f = cylinder(24);
        let (dv, dvec) = dense_eigenpairs(&f, 5).unwrap();
        let (sv, svec) = subspace_eigenpairs(&f, 5, 13).unwrap();
        for k in 0..5 {
            assert!((dv[k] - sv[k]).abs() <= 1e-9 * dv[k], "{k}: {} vs {}", dv[k], sv[k]);
            let overlap = f.mass_inner(&dvec[k], &svec[k]).abs();
            assert!((overlap - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let f = cylinder(12);
        let spec = eigenpairs(&f, 6).unwrap();
        let (m, a) = orthonormality_defect(&f, &spec);
        assert!(m < 1e-10 && a < 1e-10, "{m} {a}");
        assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
}
