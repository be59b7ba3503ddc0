//! Start directions shared by the `S_h` search and the ground-state search.

use crate::forms::DiscreteForms;

/// Narrow bumps `r·exp(−(r² + (z − z_c)²)/σ²)` centred on the axis, `σ ∈ {h, 2h}` with
/// `h = max(h_r, h_z)`; `count` centres per width.
///
/// At `p = 6` the discrete minimizers concentrate next to the axis on the
/// grid scale; smooth eigenvector starts do not reach those basins.
pub fn axis_bumps(forms: &DiscreteForms, count: usize) -> Vec<Vec<f64>> {
    let g = &forms.grid;
    let h = g.h_r.max(g.h_z);
    [h, 2.0 * h]
        .into_iter()
        .flat_map(|sigma| (1..=count).map(move |k| (sigma, k)))
        .filter_map(|(sigma, k)| {
            let j = ((g.n_z * k) as f64 / (count + 1) as f64).round() as usize;
            let zc = g.z(j);
            let v = g.sample_interior(|r, z| r * (-(r * r + (z - zc) * (z - zc)) / (sigma * sigma)).exp());
            let norm: f64 = v.iter().map(|x| x * x).sum();
            (norm > 1e-300).then_some(v)
        })
        .collect()
}
