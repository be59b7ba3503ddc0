//! Concentrating rescalings about an axis point.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::DiscreteForms;

#[derive(Debug, Clone, Serialize)]
pub struct BubbleReport {
    pub eps: f64,
    pub z0: f64,
    #[serde(skip)]
    pub field: Vec<f64>,
    /// `|φ_ε|₆` with geometric cell weights.
    pub l6: f64,
    pub l6_base: f64,
    /// `‖φ_ε‖_A`.
    pub a_norm: f64,
    pub a_norm_base: f64,
    /// `J₀(φ_ε)` with the forms' exponent.
    pub j0: f64,
    pub j0_base: f64,
    /// `⟨φ_ε, ψ⟩_M` for each test field.
    pub test_inner: Vec<f64>,
}

/// `φ_ε(r, z) = ε^{−1/2} φ(r/ε, (z − z0)/ε + z0)` by bilinear interpolation.
pub fn bubble(
    forms: &DiscreteForms,
    phi: &[f64],
    eps: f64,
    z0: f64,
    tests: &[Vec<f64>],
) -> Result<BubbleReport> {
    let grid = &forms.grid;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Config(format!("bubble scale eps = {eps} must lie in (0, 1]")));
    }
    if !(z0 >= grid.z_min && z0 <= grid.z_max) {
        return Err(Error::Config(format!(
            "center z0 = {z0} is outside [{}, {}]",
            grid.z_min, grid.z_max
        )));
    }
    if phi.len() != forms.dim() || tests.iter().any(|t| t.len() != forms.dim()) {
        return Err(Error::Config("field length does not match the grid".into()));
    }
    let full = grid.scatter(phi);
    let scale = eps.powf(-0.5);
    let mut out_full = vec![0.0; grid.num_nodes()];
    let mut peak = 0.0_f64;
    let mut leak = 0.0_f64;
    for i in 0..=grid.n_r {
        for j in 0..=grid.n_z {
            let node = grid.node(i, j);
            let (r, z) = (grid.r(i), grid.z(j));
            let v = scale * grid.interpolate(&full, r / eps, (z - z0) / eps + z0);
            if grid.is_interior(node) {
                peak = peak.max(v.abs());
            } else {
                leak = leak.max(v.abs());
            }
            out_full[node] = v;
        }
    }
    if leak > 1e-12 * peak.max(f64::MIN_POSITIVE) {
        return Err(Error::Config(format!(
            "rescaled support leaves the domain (boundary value {leak:.3e}); the domain must be star-shaped about (0, {z0})"
        )));
    }
    let field = grid.gather(&out_full);
    let test_inner = tests.iter().map(|t| forms.mass_inner(&field, t)).collect();
    Ok(BubbleReport {
        eps,
        z0,
        l6: forms.lq_norm(&field, 6.0),
        l6_base: forms.lq_norm(phi, 6.0),
        a_norm: forms.curl_energy(&field).sqrt(),
        a_norm_base: forms.curl_energy(phi).sqrt(),
        j0: forms.energy_unchecked(0.0, &field),
        j0_base: forms.energy_unchecked(0.0, phi),
        test_inner,
        field,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::MeridianGrid;

    #[test]
    fn unit_scale_is_identity() {
        let g = MeridianGrid::rectangle(1.0, 0.0, 1.0, 16, 16).unwrap();
        let f = DiscreteForms::isotropic(&g, 6.0).unwrap();
        let phi = g.sample_interior(|r, z| r * (1.0 - r) * z * (1.0 - z));
        let b = bubble(&f, &phi, 1.0, 0.5, std::slice::from_ref(&phi)).unwrap();
        assert_eq!(b.field, phi);
        assert_eq!(b.l6, b.l6_base);
        assert_eq!(b.j0, b.j0_base);
    }

    #[test]
    fn bad_scale_rejected() {
        let g = MeridianGrid::rectangle(1.0, 0.0, 1.0, 8, 8).unwrap();
        let f = DiscreteForms::isotropic(&g, 6.0).unwrap();
        let phi = vec![1.0; f.dim()];
        assert!(bubble(&f, &phi, 1.5, 0.5, &[]).is_err());
        assert!(bubble(&f, &phi, 0.0, 0.5, &[]).is_err());
    }
}
