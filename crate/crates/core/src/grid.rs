//! Meridian (r, z) cross-section of a rotationally invariant domain.
//!
//! Nodes sit at `r_i = i h_r` and `z_j = z_min + j h_z` for `i = 0..=n_r`,
//! `j = 0..=n_z`, stored row-major in `(i, j)` (the `z` index runs fastest).
//! The axis column `i = 0`, the outer boundary and every node rejected by the
//! shape predicate carry a homogeneous Dirichlet condition; the remaining
//! nodes are the unknowns.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Smallest admissible coefficient value.
pub const COEFFICIENT_FLOOR: f64 = 1e-8;

/// Region of the meridian half-plane occupied by the domain.
#[derive(Clone)]
pub enum Shape {
    Rectangle,
    /// Keeps nodes with `r > r_inner`.
    Annulus { r_inner: f64 },
    /// Keeps nodes with `r² + (z - z_center)² < radius²` (a ball centred on the axis).
    Ball { z_center: f64, radius: f64 },
    Predicate(Arc<dyn Fn(f64, f64) -> bool + Send + Sync>),
}

impl Shape {
    pub fn contains(&self, r: f64, z: f64) -> bool {
        match self {
            Shape::Rectangle => true,
            Shape::Annulus { r_inner } => r > *r_inner,
            Shape::Ball { z_center, radius } => {
                r * r + (z - z_center) * (z - z_center) < radius * radius
            }
            Shape::Predicate(f) => f(r, z),
        }
    }
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Rectangle => write!(f, "Rectangle"),
            Shape::Annulus { r_inner } => write!(f, "Annulus {{ r_inner: {r_inner} }}"),
            Shape::Ball { z_center, radius } => {
                write!(f, "Ball {{ z_center: {z_center}, radius: {radius} }}")
            }
            Shape::Predicate(_) => write!(f, "Predicate(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeridianGrid {
    pub r_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub n_r: usize,
    pub n_z: usize,
    pub h_r: f64,
    pub h_z: f64,
    pub shape: Shape,
    interior_mask: Vec<bool>,
    unknowns: Vec<usize>,
    unknown_of: Vec<Option<usize>>,
}

impl MeridianGrid {
    pub fn build(
        r_max: f64,
        z_min: f64,
        z_max: f64,
        n_r: usize,
        n_z: usize,
        shape: Shape,
    ) -> Result<Self> {
        if n_r < 4 || n_z < 4 {
            return Err(Error::Config(format!(
                "grid needs at least 4 intervals per direction, got n_r = {n_r}, n_z = {n_z}"
            )));
        }
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::Config(format!("r_max must be positive, got {r_max}")));
        }
        if !(z_max > z_min) || !z_min.is_finite() || !z_max.is_finite() {
            return Err(Error::Config(format!(
                "need z_max > z_min, got z_min = {z_min}, z_max = {z_max}"
            )));
        }
        let h_r = r_max / n_r as f64;
        let h_z = (z_max - z_min) / n_z as f64;
        let num_nodes = (n_r + 1) * (n_z + 1);
        let mut interior_mask = vec![false; num_nodes];
        let mut unknowns = Vec::new();
        let mut unknown_of = vec![None; num_nodes];
        for i in 0..=n_r {
            for j in 0..=n_z {
                let node = i * (n_z + 1) + j;
                let on_boundary = i == 0 || i == n_r || j == 0 || j == n_z;
                let r = i as f64 * h_r;
                let z = z_min + j as f64 * h_z;
                if !on_boundary && shape.contains(r, z) {
                    interior_mask[node] = true;
                    unknown_of[node] = Some(unknowns.len());
                    unknowns.push(node);
                }
            }
        }
        if unknowns.is_empty() {
            return Err(Error::Config(
                "the shape leaves no interior nodes on this grid".into(),
            ));
        }
        Ok(Self {
            r_max,
            z_min,
            z_max,
            n_r,
            n_z,
            h_r,
            h_z,
            shape,
            interior_mask,
            unknowns,
            unknown_of,
        })
    }

    pub fn rectangle(r_max: f64, z_min: f64, z_max: f64, n_r: usize, n_z: usize) -> Result<Self> {
        Self::build(r_max, z_min, z_max, n_r, n_z, Shape::Rectangle)
    }

    /// Same grid with every length multiplied by `c` (axis point `r = 0, z = 0` fixed).
    pub fn dilated(&self, c: f64) -> Result<Self> {
        let shape = match &self.shape {
            Shape::Rectangle => Shape::Rectangle,
            Shape::Annulus { r_inner } => Shape::Annulus {
                r_inner: c * r_inner,
            },
            Shape::Ball { z_center, radius } => Shape::Ball {
                z_center: c * z_center,
                radius: c * radius,
            },
            Shape::Predicate(f) => {
                let f = f.clone();
                Shape::Predicate(Arc::new(move |r, z| f(r / c, z / c)))
            }
        };
        Self::build(
            c * self.r_max,
            c * self.z_min,
            c * self.z_max,
            self.n_r,
            self.n_z,
            shape,
        )
    }

    pub fn num_nodes(&self) -> usize {
        (self.n_r + 1) * (self.n_z + 1)
    }

    pub fn num_unknowns(&self) -> usize {
        self.unknowns.len()
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        i * (self.n_z + 1) + j
    }

    /// `(i, j)` of a node index.
    pub fn node_ij(&self, node: usize) -> (usize, usize) {
        (node / (self.n_z + 1), node % (self.n_z + 1))
    }

    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.h_r
    }

    pub fn z(&self, j: usize) -> f64 {
        self.z_min + j as f64 * self.h_z
    }

    pub fn is_interior(&self, node: usize) -> bool {
        self.interior_mask[node]
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior_mask
    }

    pub fn unknown_of(&self, node: usize) -> Option<usize> {
        self.unknown_of[node]
    }

    /// Node index of unknown `k`.
    pub fn unknown_node(&self, k: usize) -> usize {
        self.unknowns[k]
    }

    /// `(r, z)` of unknown `k`.
    pub fn unknown_coords(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.node_ij(self.unknowns[k]);
        (self.r(i), self.z(j))
    }

    /// Extends an interior vector by zero to all nodes.
    pub fn scatter(&self, interior: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.num_nodes()];
        for (k, &node) in self.unknowns.iter().enumerate() {
            full[node] = interior[k];
        }
        full
    }

    pub fn gather(&self, full: &[f64]) -> Vec<f64> {
        self.unknowns.iter().map(|&node| full[node]).collect()
    }

    /// Samples `f(r, z)` at every node.
    pub fn sample_nodes(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_nodes());
        for i in 0..=self.n_r {
            for j in 0..=self.n_z {
                out.push(f(self.r(i), self.z(j)));
            }
        }
        out
    }

    /// Samples `f(r, z)` at the unknowns only.
    pub fn sample_interior(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.num_unknowns())
            .map(|k| {
                let (r, z) = self.unknown_coords(k);
                f(r, z)
            })
            .collect()
    }

    /// Bilinear interpolation of a full nodal field, zero outside the rectangle.
    pub fn interpolate(&self, full: &[f64], r: f64, z: f64) -> f64 {
        let x = r / self.h_r;
        let y = (z - self.z_min) / self.h_z;
        if !(x >= 0.0 && y >= 0.0 && x <= self.n_r as f64 && y <= self.n_z as f64) {
            return 0.0;
        }
        let snap = |v: f64| {
            let rv = v.round();
            if (v - rv).abs() < 1e-9 {
                rv
            } else {
                v
            }
        };
        let (x, y) = (snap(x), snap(y));
        let i0 = (x.floor() as usize).min(self.n_r - 1);
        let j0 = (y.floor() as usize).min(self.n_z - 1);
        let fx = x - i0 as f64;
        let fy = y - j0 as f64;
        let v00 = full[self.node(i0, j0)];
        let v10 = full[self.node(i0 + 1, j0)];
        let v01 = full[self.node(i0, j0 + 1)];
        let v11 = full[self.node(i0 + 1, j0 + 1)];
        (1.0 - fx) * (1.0 - fy) * v00 + fx * (1.0 - fy) * v10 + (1.0 - fx) * fy * v01 + fx * fy * v11
    }
}

/// Per-node coefficient samples of the uniaxial permeability `diag(a, a, b)`,
/// the permittivity term `V` and the nonlinearity matrix `Γ`.
///
/// Only the in-plane coefficients of `V` and `Γ` enter, since an azimuthal
/// field has no axial component.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialField {
    pub a_mu: Vec<f64>,
    pub b_mu: Vec<f64>,
    pub a_v: Vec<f64>,
    pub a_gamma: Vec<f64>,
}

impl MaterialField {
    pub fn isotropic(grid: &MeridianGrid) -> Self {
        Self::constant(grid, 1.0, 1.0, 1.0, 1.0)
    }

    pub fn constant(grid: &MeridianGrid, a_mu: f64, b_mu: f64, a_v: f64, a_gamma: f64) -> Self {
        let n = grid.num_nodes();
        Self {
            a_mu: vec![a_mu; n],
            b_mu: vec![b_mu; n],
            a_v: vec![a_v; n],
            a_gamma: vec![a_gamma; n],
        }
    }

    pub fn from_fn(
        grid: &MeridianGrid,
        f: impl Fn(f64, f64) -> (f64, f64, f64, f64),
    ) -> Self {
        let mut m = Self {
            a_mu: Vec::new(),
            b_mu: Vec::new(),
            a_v: Vec::new(),
            a_gamma: Vec::new(),
        };
        for i in 0..=grid.n_r {
            for j in 0..=grid.n_z {
                let (a, b, v, g) = f(grid.r(i), grid.z(j));
                m.a_mu.push(a);
                m.b_mu.push(b);
                m.a_v.push(v);
                m.a_gamma.push(g);
            }
        }
        m
    }

    pub fn is_isotropic(&self) -> bool {
        [&self.a_mu, &self.b_mu, &self.a_v, &self.a_gamma]
            .iter()
            .all(|c| c.iter().all(|&v| v == 1.0))
    }

    pub fn validate(&self, grid: &MeridianGrid) -> Result<()> {
        let n = grid.num_nodes();
        for (name, coef) in [
            ("a_mu", &self.a_mu),
            ("b_mu", &self.b_mu),
            ("a_v", &self.a_v),
            ("a_gamma", &self.a_gamma),
        ] {
            if coef.len() != n {
                return Err(Error::Config(format!(
                    "{name} has {} samples, grid has {n} nodes",
                    coef.len()
                )));
            }
            if let Some((node, v)) = coef
                .iter()
                .enumerate()
                .find(|(_, v)| !(**v >= COEFFICIENT_FLOOR) || !v.is_finite())
            {
                let (i, j) = grid.node_ij(node);
                return Err(Error::Config(format!(
                    "{name} = {v} at node ({i}, {j}) is below the floor {COEFFICIENT_FLOOR:e}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_rectangle_has_nine_unknowns() {
        let g = MeridianGrid::rectangle(1.0, 0.0, 1.0, 4, 4).unwrap();
        assert_eq!(g.num_unknowns(), 9);
        let mut rs: Vec<f64> = (0..9).map(|k| g.unknown_coords(k).0).collect();
        rs.dedup();
        assert_eq!(rs, vec![0.25, 0.5, 0.75]);
        let zs: Vec<f64> = (0..3).map(|k| g.unknown_coords(k).1).collect();
        assert_eq!(zs, vec![0.25, 0.5, 0.75]);
    }

    #[test]
    fn fine_rectangle_counts() {
        let g = MeridianGrid::rectangle(1.0, 0.0, 1.0, 128, 128).unwrap();
        assert_eq!(g.num_unknowns(), 127 * 127);
        assert_eq!(g.h_r, 1.0 / 128.0);
        assert_eq!(g.h_z, 1.0 / 128.0);
    }

    #[test]
    fn annulus_keeps_only_outer_nodes() {
        let g = MeridianGrid::build(2.0, 0.0, 1.0, 8, 4, Shape::Annulus { r_inner: 1.0 }).unwrap();
        assert_eq!(g.num_unknowns(), 9);
        for k in 0..g.num_unknowns() {
            assert!(g.unknown_coords(k).0 > 1.0);
        }
    }

    #[test]
    fn axis_and_boundary_are_dirichlet() {
        let g = MeridianGrid::rectangle(1.0, -1.0, 1.0, 6, 8).unwrap();
        for j in 0..=g.n_z {
            assert!(!g.is_interior(g.node(0, j)));
            assert!(!g.is_interior(g.node(g.n_r, j)));
        }
        for k in 0..g.num_unknowns() {
            assert!(g.unknown_coords(k).0 > 0.0);
        }
    }

    #[test]
    fn configuration_errors() {
        assert!(MeridianGrid::rectangle(1.0, 0.0, 1.0, 3, 8).is_err());
        assert!(MeridianGrid::rectangle(0.0, 0.0, 1.0, 8, 8).is_err());
        assert!(MeridianGrid::rectangle(1.0, 1.0, 1.0, 8, 8).is_err());
        let empty = MeridianGrid::build(1.0, 0.0, 1.0, 8, 8, Shape::Annulus { r_inner: 5.0 });
        assert!(matches!(empty, Err(Error::Config(_))));
    }

    #[test]
    fn coefficient_floor_is_enforced() {
        let g = MeridianGrid::rectangle(1.0, 0.0, 1.0, 4, 4).unwrap();
        let mut m = MaterialField::isotropic(&g);
        assert!(m.validate(&g).is_ok());
        m.b_mu[7] = 1e-9;
        assert!(m.validate(&g).is_err());
    }

    #[test]
    fn interpolation_reproduces_bilinear_fields() {
        let g = MeridianGrid::rectangle(1.0, 0.0, 2.0, 8, 8).unwrap();
        let full = g.sample_nodes(|r, z| 1.0 + 2.0 * r - z + 0.5 * r * z);
        let v = g.interpolate(&full, 0.33, 1.27);
        assert!((v - (1.0 + 0.66 - 1.27 + 0.5 * 0.33 * 1.27)).abs() < 1e-13);
        assert_eq!(g.interpolate(&full, 1.5, 1.0), 0.0);
    }
}
