//! Spectral counts `m̃(λ)` and the anisotropic existence condition.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{MaterialField, MeridianGrid};
use crate::spectral::SpectralSplit;

use super::sobolev::critical_gap;

#[derive(Debug, Clone, Serialize)]
pub struct MTilde {
    pub count: usize,
    /// 1-based indices `k` satisfying the window condition.
    pub indices: Vec<usize>,
    /// Cluster size of each contributing index.
    pub multiplicities: Vec<usize>,
    /// `S μ(Ω)^{(2−p)/p}`.
    pub gap: f64,
}

fn collect(split: &SpectralSplit, gap: f64, keep: impl Fn(f64) -> bool) -> MTilde {
    let indices: Vec<usize> = split
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, l)| keep(**l))
        .map(|(k, _)| k + 1)
        .collect();
    let multiplicities = indices.iter().map(|k| split.multiplicity(k - 1)).collect();
    MTilde {
        count: indices.len(),
        indices,
        multiplicities,
        gap,
    }
}

/// `#{k : −λ_k < λ < −λ_k + S μ(Ω)^{(2−p)/p}}`, counted with multiplicity.
pub fn count_m_tilde(split: &SpectralSplit, s: f64, p: f64, mu_omega: f64, lambda: f64) -> Result<MTilde> {
    let gap = critical_gap(s, p, mu_omega);
    let last = *split
        .eigenvalues
        .last()
        .ok_or_else(|| Error::InsufficientSpectrum("empty spectrum".into()))?;
    if last < gap - lambda {
        return Err(Error::InsufficientSpectrum(format!(
            "largest computed eigenvalue {last} is below -lambda + S mu^((2-p)/p) = {}",
            gap - lambda
        )));
    }
    Ok(collect(split, gap, |l| -l < lambda && lambda < -l + gap))
}

/// `μ_∞, V_∞, Γ_∞, Γ₀` from the coefficient samples at the unknowns.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnisoConstants {
    pub mu_inf: f64,
    pub v_inf: f64,
    pub gamma_inf: f64,
    pub gamma_0: f64,
}

impl AnisoConstants {
    pub fn from_materials(grid: &MeridianGrid, m: &MaterialField) -> Self {
        let mut c = Self {
            mu_inf: 0.0,
            v_inf: 0.0,
            gamma_inf: 0.0,
            gamma_0: f64::INFINITY,
        };
        for k in 0..grid.num_unknowns() {
            let n = grid.unknown_node(k);
            c.mu_inf = c.mu_inf.max(m.a_mu[n]).max(m.b_mu[n]);
            c.v_inf = c.v_inf.max(m.a_v[n]);
            c.gamma_inf = c.gamma_inf.max(m.a_gamma[n]);
            c.gamma_0 = c.gamma_0.min(m.a_gamma[n]);
        }
        c
    }

    pub fn unit() -> Self {
        Self {
            mu_inf: 1.0,
            v_inf: 1.0,
            gamma_inf: 1.0,
            gamma_0: 1.0,
        }
    }
}

/// `#{k : 0 < (λ_k − 1) V_∞ μ_∞ (Γ_∞/Γ₀)^{e} < S μ(Ω)^{(2−p)/p}}` with `e = 2/p`
/// as printed, or `e = 2` for the `(1/p)`-normalized power term.
pub fn count_m_tilde_aniso(
    spectrum: &SpectralSplit,
    c: &AnisoConstants,
    s: f64,
    p: f64,
    mu_omega: f64,
    gamma_exponent: f64,
) -> Result<MTilde> {
    let gap = critical_gap(s, p, mu_omega);
    let factor = c.v_inf * c.mu_inf * (c.gamma_inf / c.gamma_0).powf(gamma_exponent);
    let last = *spectrum
        .eigenvalues
        .last()
        .ok_or_else(|| Error::InsufficientSpectrum("empty spectrum".into()))?;
    if (last - 1.0) * factor < gap {
        return Err(Error::InsufficientSpectrum(format!(
            "largest computed eigenvalue {last} does not exhaust the anisotropic window"
        )));
    }
    Ok(collect(spectrum, gap, |l| {
        let x = (l - 1.0) * factor;
        0.0 < x && x < gap
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct AnisoLevel {
    pub k: usize,
    pub lambda_k: f64,
    /// Upper bound on `c` from `e_k`.
    pub c_upper: f64,
}

/// Level bounds of the anisotropic problem, in the printed normalization
/// (`∫|ΓE|^p` with factors `(pΓ)^{−2/(p−2)}`) and in the `(1/p)`-normalized
/// form used by the solvers (`(1/p)∫Γ^p|E|^p`, factors `Γ^{−2p/(p−2)}`).
#[derive(Debug, Clone, Serialize)]
pub struct AnisoBounds {
    pub constants: AnisoConstants,
    pub s: f64,
    pub p: f64,
    pub mu_omega: f64,
    pub d_lower_printed: f64,
    pub beta0_printed: f64,
    pub levels_printed: Vec<AnisoLevel>,
    pub m_tilde_printed: MTilde,
    pub d_lower: f64,
    pub levels: Vec<AnisoLevel>,
    pub m_tilde: MTilde,
    /// Some level bound lies strictly below `d` in the solver normalization.
    pub condition_holds: bool,
}

pub fn aniso_bounds(
    spectrum: &SpectralSplit,
    c: &AnisoConstants,
    s: f64,
    p: f64,
    mu_omega: f64,
) -> Result<AnisoBounds> {
    let e = p / (p - 2.0);
    let half = 0.5 - 1.0 / p;
    let d_lower_printed =
        half * s.powf(e) * c.mu_inf.powf(-e) * (p * c.gamma_inf).powf(-2.0 / (p - 2.0));
    let d_lower = half * (s / c.mu_inf).powf(e) * c.gamma_inf.powf(-2.0 * p / (p - 2.0));
    let mut levels_printed = Vec::new();
    let mut levels = Vec::new();
    for (k, &l) in spectrum.eigenvalues.iter().enumerate() {
        if l <= 1.0 {
            continue;
        }
        let base = ((l - 1.0) * c.v_inf).powf(e) * mu_omega;
        levels_printed.push(AnisoLevel {
            k: k + 1,
            lambda_k: l,
            c_upper: half * base * (p * c.gamma_0).powf(-2.0 / (p - 2.0)),
        });
        levels.push(AnisoLevel {
            k: k + 1,
            lambda_k: l,
            c_upper: half * base * c.gamma_0.powf(-2.0 * p / (p - 2.0)),
        });
    }
    let m_tilde_printed = count_m_tilde_aniso(spectrum, c, s, p, mu_omega, 2.0 / p)?;
    let m_tilde = count_m_tilde_aniso(spectrum, c, s, p, mu_omega, 2.0)?;
    let condition_holds = levels.iter().any(|l| l.c_upper < d_lower);
    Ok(AnisoBounds {
        constants: *c,
        s,
        p,
        mu_omega,
        d_lower_printed,
        beta0_printed: d_lower_printed,
        levels_printed,
        m_tilde_printed,
        d_lower,
        levels,
        m_tilde,
        condition_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_lambda_counts_nothing_when_gap_is_below_spectrum() {
        let split = SpectralSplit::from_values(vec![10.0, 20.0, 30.0]);
        let m = count_m_tilde(&split, 9.0, 2.0, 1.0, 0.0).unwrap();
        assert_eq!(m.count, 0);
    }

    #[test]
    fn half_gap_above_first_eigenvalue() {
        let split = SpectralSplit::from_values(vec![10.0, 10.0, 30.0, 40.0]);
        let s = 4.0;
        let m = count_m_tilde(&split, s, 4.0, 1.0, -10.0 + 2.0).unwrap();
        assert_eq!(m.indices, vec![1, 2]);
        assert_eq!(m.multiplicities, vec![2, 2]);
    }

    #[test]
    fn shallow_spectrum_is_reported() {
        let split = SpectralSplit::from_values(vec![1.0, 2.0]);
        assert!(count_m_tilde(&split, 5.0, 4.0, 1.0, -1.5).is_err());
    }

    #[test]
    fn unit_constants_match_isotropic_threshold() {
        let split = SpectralSplit::from_values(vec![0.5, 1.2, 1.9, 3.5, 9.0]);
        let a = count_m_tilde_aniso(&split, &AnisoConstants::unit(), 1.0, 2.0, 1.0, 1.0).unwrap();
        let iso = count_m_tilde(&split, 1.0, 2.0, 1.0, -1.0).unwrap();
        assert_eq!(a.indices, vec![2, 3]);
        assert_eq!(a.indices, iso.indices);
    }
}
