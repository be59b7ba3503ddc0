//! Fiber maximization and sphere descent for functionals `J(u) = ½‖u⁺‖² − I(u)`
//! over a splitting `X = X⁺ ⊕ X̃` with `dim X̃ < ∞`.
//!
//! For a unit direction `u ∈ X⁺` the fiber `ℝ⁺u ⊕ X̃` carries a unique
//! maximum `n(u)` of `J`, and `Φ = J∘n` is minimized over the unit sphere of
//! `X⁺`. The Riemannian gradient of `Φ` at `u` is `t·(J'(n(u))|_{T_uS})`
//! where `t = ‖n(u)⁺‖`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, scaled};

/// A smooth functional with a finite-dimensional nonpositive part.
///
/// Gradients are covectors (`g[i] = ∂J/∂u_i`); `riesz` maps a covector to its
/// representative in the inner product that defines `‖·‖` on `X⁺`.
pub trait FunctionalBackend: Sync {
    fn dim(&self) -> usize;
    fn inner(&self, u: &[f64], v: &[f64]) -> f64;
    fn riesz(&self, g: &[f64]) -> Vec<f64>;
    /// Basis of `X̃`, orthogonal in `inner` to `X⁺`.
    fn tilde_basis(&self) -> &[Vec<f64>];
    /// Orthogonal projection onto `X⁺`.
    fn project_plus(&self, v: &[f64]) -> Vec<f64>;
    fn value(&self, u: &[f64]) -> f64;
    fn gradient(&self, u: &[f64]) -> Vec<f64>;
    /// `J''(u) h` as a covector.
    fn hessian_apply(&self, u: &[f64], h: &[f64]) -> Vec<f64>;
    fn nonlinear_value(&self, u: &[f64]) -> f64;
    fn nonlinear_gradient(&self, u: &[f64]) -> Vec<f64>;
    /// Inner product used to compare solutions.
    fn l2_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.inner(u, v)
    }
    fn is_even(&self) -> bool {
        true
    }
}

/// A point `n(u) = t u + Σ c̃_k ẽ_k` on the Nehari-Pankov manifold.
#[derive(Debug, Clone)]
pub struct NehariPoint {
    pub direction: Vec<f64>,
    pub t: f64,
    /// Coefficients over `tilde_basis()` of the backend.
    pub tilde_coeffs: Vec<f64>,
    pub point: Vec<f64>,
    pub energy: f64,
    /// Norm of `J'(n(u))` restricted to `span{u} ⊕ X̃`.
    pub fiber_residual: f64,
    pub newton_steps: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct FiberOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FiberOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Starting fiber coordinates `(t, c̃)` over the backend's tilde basis.
#[derive(Debug, Clone)]
pub struct FiberInit {
    pub t: f64,
    pub tilde_coeffs: Vec<f64>,
}

struct Fiber<'a, B: FunctionalBackend + ?Sized> {
    backend: &'a B,
    u: &'a [f64],
    /// Tilde basis normalized in `inner`.
    q: Vec<Vec<f64>>,
    /// `‖ẽ_k‖` for converting coefficients.
    qnorm: Vec<f64>,
}

impl<'a, B: FunctionalBackend + ?Sized> Fiber<'a, B> {
    fn new(backend: &'a B, u: &'a [f64]) -> Self {
        let mut q = Vec::new();
        let mut qnorm = Vec::new();
        for e in backend.tilde_basis() {
            let n = backend.inner(e, e).sqrt();
            q.push(scaled(1.0 / n, e));
            qnorm.push(n);
        }
        Self {
            backend,
            u,
            q,
            qnorm,
        }
    }

    fn m(&self) -> usize {
        self.q.len()
    }

    fn point(&self, x: &[f64]) -> Vec<f64> {
        let mut p = scaled(x[0].exp(), self.u);
        for (k, qk) in self.q.iter().enumerate() {
            axpy(x[k + 1], qk, &mut p);
        }
        p
    }

    /// Value, gradient in `(s, c)`, and the unscaled fiber gradient `(J'(P)u, J'(P)q_k)`.
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>, Vec<f64>) {
        let p = self.point(x);
        let f = self.backend.value(&p);
        let g = self.backend.gradient(&p);
        let mut raw = Vec::with_capacity(self.m() + 1);
        raw.push(dot(&g, self.u));
        for qk in &self.q {
            raw.push(dot(&g, qk));
        }
        let mut grad = raw.clone();
        grad[0] *= x[0].exp();
        (f, grad, raw, p)
    }

    fn hessian(&self, x: &[f64], p: &[f64], grad: &[f64]) -> DMatrix<f64> {
        let m = self.m();
        let t = x[0].exp();
        let dirs: Vec<&[f64]> = std::iter::once(self.u)
            .chain(self.q.iter().map(|v| v.as_slice()))
            .collect();
        let hd: Vec<Vec<f64>> = dirs.iter().map(|d| self.backend.hessian_apply(p, d)).collect();
        let mut h = DMatrix::zeros(m + 1, m + 1);
        for i in 0..=m {
            for j in i..=m {
                let mut v = 0.5 * (dot(&hd[i], dirs[j]) + dot(&hd[j], dirs[i]));
                if i == 0 {
                    v *= t;
                }
                if j == 0 {
                    v *= t;
                }
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        h[(0, 0)] += grad[0];
        h
    }

    /// `J'(tu)(u)` along the bare ray.
    fn ray_slope(&self, t: f64) -> f64 {
        let p = scaled(t, self.u);
        dot(&self.backend.gradient(&p), self.u)
    }

    fn ray_root(&self) -> Result<f64> {
        let mut lo;
        let mut hi;
        let mut t = 1.0;
        if self.ray_slope(t) < 0.0 {
            hi = t;
            loop {
                t *= 0.5;
                if t < 1e-150 {
                    return Err(Error::DegenerateDirection(
                        "ray slope stays negative as t -> 0".into(),
                    ));
                }
                if self.ray_slope(t) > 0.0 {
                    lo = t;
                    break;
                }
                hi = t;
            }
        } else {
            lo = t;
            loop {
                t *= 2.0;
                if t > 1e150 {
                    return Err(Error::DegenerateDirection(
                        "ray slope stays positive as t -> infinity".into(),
                    ));
                }
                if self.ray_slope(t) < 0.0 {
                    hi = t;
                    break;
                }
                lo = t;
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.ray_slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Maximizes `J` over `ℝ⁺u ⊕ X̃` for a unit `u ∈ X⁺`.
pub fn fiber_maximize<B: FunctionalBackend + ?Sized>(
    backend: &B,
    u: &[f64],
    init: Option<&FiberInit>,
    opts: &FiberOptions,
) -> Result<NehariPoint> {
    let fib = Fiber::new(backend, u);
    let m = fib.m();
    let mut x = match init {
        Some(i) if i.t > 0.0 && i.tilde_coeffs.len() == m => {
            let mut x = vec![i.t.ln()];
            x.extend(i.tilde_coeffs.iter().zip(&fib.qnorm).map(|(c, n)| c * n));
            x
        }
        _ => {
            let mut x = vec![fib.ray_root()?.ln()];
            x.extend(std::iter::repeat_n(0.0, m));
            x
        }
    };

    let (mut f, mut grad, mut raw, mut p) = fib.eval(&x);
    let mut steps = 0;
    loop {
        let res = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = backend.inner(&p, &p).sqrt().max(1.0);
        if res <= opts.tol * scale && f.is_finite() {
            break;
        }
        if steps >= opts.max_iter || !f.is_finite() {
            return Err(Error::DegenerateDirection(format!(
                "fiber iteration stalled after {steps} steps (residual {res:.3e})"
            )));
        }
        steps += 1;
        let h = fib.hessian(&x, &p, &grad);
        let neg = -&h;
        let gvec = DVector::from_column_slice(&grad);
        let mut dir: Vec<f64> = match neg.clone().cholesky() {
            Some(ch) => ch.solve(&gvec).iter().copied().collect(),
            None => {
                // Ascent along |H|⁻¹ g, with |H| built from the absolute eigenvalues.
                let eig = neg.symmetric_eigen();
                let top = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                let floor = 1e-8 * top.max(1e-300);
                let coeffs = eig.eigenvectors.transpose() * &gvec;
                let scaled_coeffs = DVector::from_iterator(
                    m + 1,
                    coeffs
                        .iter()
                        .zip(eig.eigenvalues.iter())
                        .map(|(c, l)| c / l.abs().max(floor)),
                );
                (eig.eigenvectors * scaled_coeffs).iter().copied().collect()
            }
        };
        let cap = dir[0].abs();
        if cap > 1.0 {
            dir.iter_mut().for_each(|d| *d /= cap);
        }

        let slack = 1e-13 * f.abs().max(1.0);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
            let (ft, gt, rt, pt) = fib.eval(&trial);
            if ft.is_finite() && ft >= f - slack {
                x = trial;
                f = ft;
                grad = gt;
                raw = rt;
                p = pt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            let res = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
            if res <= 1e3 * opts.tol * backend.inner(&p, &p).sqrt().max(1.0) {
                break;
            }
            return Err(Error::DegenerateDirection(format!(
                "fiber line search failed (residual {res:.3e})"
            )));
        }
    }

    let t = x[0].exp();
    if !(t > 0.0 && f > 0.0) {
        return Err(Error::DegenerateDirection(format!(
            "fiber maximum has t = {t:e}, J = {f:e}"
        )));
    }
    let residual = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(NehariPoint {
        direction: u.to_vec(),
        t,
        tilde_coeffs: x[1..].iter().zip(&fib.qnorm).map(|(c, n)| c / n).collect(),
        point: p,
        energy: f,
        fiber_residual: residual,
        newton_steps: steps,
    })
}

/// Riemannian gradient of `Φ = J∘n` at `u` (tangent, in `inner`).
pub fn sphere_gradient<B: FunctionalBackend + ?Sized>(backend: &B, np: &NehariPoint) -> Vec<f64> {
    let g = backend.gradient(&np.point);
    let r = backend.project_plus(&backend.riesz(&g));
    let ru = backend.inner(&r, &np.direction);
    let mut out = r;
    axpy(-ru, &np.direction, &mut out);
    out.iter_mut().for_each(|v| *v *= np.t);
    out
}

/// `sqrt(g · riesz(g))` for `g = J'(E)`.
pub fn full_residual<B: FunctionalBackend + ?Sized>(backend: &B, e: &[f64]) -> f64 {
    let g = backend.gradient(e);
    dot(&g, &backend.riesz(&g)).max(0.0).sqrt()
}

/// Projects to `X⁺` and normalizes; `None` for vectors with no `X⁺` part.
pub fn sphere_direction<B: FunctionalBackend + ?Sized>(backend: &B, v: &[f64]) -> Option<Vec<f64>> {
    let w = backend.project_plus(v);
    let n = backend.inner(&w, &w).sqrt();
    if n > 0.0 && n.is_finite() {
        Some(scaled(1.0 / n, &w))
    } else {
        None
    }
}

#[derive(Debug, Clone)]
pub struct SphereOptions {
    /// Stop when `‖∇Φ‖ ≤ tol·max(1, |Φ|)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative size of the seeded random perturbation added to each start.
    pub jitter: f64,
    pub seed: u64,
    pub fiber: FiberOptions,
    /// Random restarts around each converged point, to leave saddles of `Φ`.
    pub escape_trials: usize,
    /// Size of the restart perturbation relative to the unit direction.
    pub escape_radius: f64,
}

impl Default for SphereOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 5000,
            jitter: 1e-3,
            seed: 0,
            fiber: FiberOptions::default(),
            escape_trials: 2,
            escape_radius: 0.05,
        }
    }
}

/// Result of a sphere descent.
#[derive(Debug, Clone)]
pub struct Minimizer {
    pub point: NehariPoint,
    /// `‖∇Φ(u)‖` at the returned direction.
    pub grad_norm: f64,
    /// `sqrt(J'(E) · riesz(J'(E)))`.
    pub full_residual: f64,
    pub iterations: usize,
    pub start_index: usize,
    pub converged: bool,
}

impl Minimizer {
    pub fn energy(&self) -> f64 {
        self.point.energy
    }
}

/// Descends `Φ` on the sphere of `X⁺` from one start direction.
pub fn sphere_descend<B: FunctionalBackend + ?Sized>(
    backend: &B,
    start: &[f64],
    opts: &SphereOptions,
) -> Result<Minimizer> {
    let mut u = sphere_direction(backend, start)
        .ok_or_else(|| Error::Config("start direction has no component in X+".into()))?;
    let mut np = fiber_maximize(backend, &u, None, &opts.fiber)?;
    let mut grad = sphere_gradient(backend, &np);
    let mut gnorm = backend.inner(&grad, &grad).sqrt();
    let mut alpha = if gnorm > 0.0 { 0.1 / gnorm } else { 0.0 };
    let mut iterations = 0;

    let finish = |np: NehariPoint, gnorm: f64, iterations: usize, converged: bool| Minimizer {
        full_residual: full_residual(backend, &np.point),
        point: np,
        grad_norm: gnorm,
        iterations,
        start_index: 0,
        converged,
    };

    loop {
        let phi = np.energy;
        if gnorm <= opts.tol * phi.abs().max(1.0) {
            return Ok(finish(np, gnorm, iterations, true));
        }
        if iterations >= opts.max_iter {
            let best = finish(np, gnorm, iterations, false);
            return Err(Error::NotConverged {
                iterations,
                grad_norm: gnorm,
                best: Box::new(best),
            });
        }
        iterations += 1;

        alpha = alpha.min(0.5 / gnorm);
        let allowance = 10.0 * f64::EPSILON * phi.abs();
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(&grad).map(|(a, g)| a - alpha * g).collect();
            if let Some(un) = sphere_direction(backend, &trial) {
                let init = FiberInit {
                    t: np.t,
                    tilde_coeffs: np.tilde_coeffs.clone(),
                };
                let cand = fiber_maximize(backend, &un, Some(&init), &opts.fiber)
                    .or_else(|_| fiber_maximize(backend, &un, None, &opts.fiber));
                if let Ok(cand) = cand {
                    if cand.energy <= phi - 1e-4 * alpha * gnorm * gnorm + allowance {
                        accepted = Some((un, cand));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        let Some((un, cand)) = accepted else {
            // No decrease is measurable at working precision.
            let converged = gnorm <= 1e2 * opts.tol * phi.abs().max(1.0);
            if converged {
                return Ok(finish(np, gnorm, iterations, true));
            }
            let best = finish(np, gnorm, iterations, false);
            return Err(Error::NotConverged {
                iterations,
                grad_norm: gnorm,
                best: Box::new(best),
            });
        };
        let gnew = sphere_gradient(backend, &cand);
        let s: Vec<f64> = un.iter().zip(&u).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = backend.inner(&s, &y);
        let ss = backend.inner(&s, &s);
        u = un;
        np = cand;
        grad = gnew;
        gnorm = backend.inner(&grad, &grad).sqrt();
        alpha = if sy > 0.0 { ss / sy } else { 2.0 * alpha };
    }
}

/// Seeded perturbation of a start direction.
fn jittered<B: FunctionalBackend + ?Sized>(
    backend: &B,
    start: &[f64],
    jitter: f64,
    seed: u64,
) -> Vec<f64> {
    if jitter == 0.0 {
        return start.to_vec();
    }
    let Some(base) = sphere_direction(backend, start) else {
        return start.to_vec();
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..backend.dim()).map(|_| rng.gen::<f64>() - 0.5).collect();
    match sphere_direction(backend, &noise) {
        Some(n) => base.iter().zip(&n).map(|(b, e)| b + jitter * e).collect(),
        None => base,
    }
}

fn start_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(index as u64 + 1)
}

/// Multi-start descent; returns the lowest-energy converged run (ties broken by start index).
pub fn sphere_minimize<B: FunctionalBackend + ?Sized>(
    backend: &B,
    starts: &[Vec<f64>],
    opts: &SphereOptions,
) -> Result<Minimizer> {
    if starts.is_empty() {
        return Err(Error::Config("sphere_minimize needs at least one start".into()));
    }
    let runs: Vec<Result<Minimizer>> = starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let seed = start_seed(opts.seed, i);
            let s = jittered(backend, s, opts.jitter, seed);
            sphere_descend(backend, &s, opts).map(|m| {
                let mut m = escape(backend, m, opts, seed);
                m.start_index = i;
                m
            })
        })
        .collect();

    let mut best: Option<Minimizer> = None;
    let mut best_failed: Option<Minimizer> = None;
    let mut first_err = None;
    for (i, r) in runs.into_iter().enumerate() {
        match r {
            Ok(m) => {
                if best.as_ref().is_none_or(|b| m.energy() < b.energy()) {
                    best = Some(m);
                }
            }
            Err(Error::NotConverged { best: mut b, .. }) => {
                b.start_index = i;
                if best_failed.as_ref().is_none_or(|x| b.energy() < x.energy()) {
                    best_failed = Some(*b);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some(b) = best {
        return Ok(b);
    }
    if let Some(b) = best_failed {
        return Err(Error::NotConverged {
            iterations: b.iterations,
            grad_norm: b.grad_norm,
            best: Box::new(b),
        });
    }
    Err(first_err.unwrap_or_else(|| Error::Numeric("no start produced a result".into())))
}

/// Restarts from perturbations of a converged direction and keeps any lower level.
fn escape<B: FunctionalBackend + ?Sized>(
    backend: &B,
    mut m: Minimizer,
    opts: &SphereOptions,
    seed: u64,
) -> Minimizer {
    for trial in 0..opts.escape_trials {
        let moved = jittered(
            backend,
            &m.point.direction,
            opts.escape_radius,
            seed ^ (0xa5a5_0000 + trial as u64),
        );
        if let Ok(next) = sphere_descend(backend, &moved, opts) {
            let drop = m.energy() - next.energy();
            if drop > 1e-9 * m.energy().abs().max(1.0) {
                let iterations = m.iterations + next.iterations;
                m = next;
                m.iterations = iterations;
            }
        }
    }
    m
}

/// `J(E) − J(tE + ṽ) + J'(E)(((t² − 1)/2)E + tṽ)`.
pub fn fiber_slack<B: FunctionalBackend + ?Sized>(backend: &B, e: &[f64], t: f64, v: &[f64]) -> f64 {
    let mut moved = scaled(t, e);
    axpy(1.0, v, &mut moved);
    let g = backend.gradient(e);
    let mut dir = scaled(0.5 * (t * t - 1.0), e);
    axpy(t, v, &mut dir);
    backend.value(e) - backend.value(&moved) + dot(&g, &dir)
}

/// A critical point found by multi-start descent.
#[derive(Debug, Clone)]
pub struct BoundState {
    pub field: Vec<f64>,
    pub energy: f64,
    pub residual: f64,
    pub start_index: usize,
}

/// Descends from `±` each start, keeps converged points below `cap`, and
/// removes duplicates (identifying `E` with `−E`).
pub fn multistart_bound_states<B: FunctionalBackend + ?Sized>(
    backend: &B,
    starts: &[Vec<f64>],
    dedup_tol: f64,
    cap: Option<f64>,
    opts: &SphereOptions,
) -> Vec<BoundState> {
    let signed: Vec<(usize, Vec<f64>)> = starts
        .iter()
        .enumerate()
        .flat_map(|(i, s)| [(i, s.clone()), (i, scaled(-1.0, s))])
        .collect();
    let quiet = SphereOptions {
        jitter: 0.0,
        escape_trials: 0,
        ..opts.clone()
    };
    let found: Vec<Option<BoundState>> = signed
        .par_iter()
        .map(|(i, s)| {
            let m = sphere_descend(backend, s, &quiet).ok()?;
            Some(BoundState {
                field: m.point.point,
                energy: m.point.energy,
                residual: m.full_residual,
                start_index: *i,
            })
        })
        .collect();
    let mut states: Vec<BoundState> = found
        .into_iter()
        .flatten()
        .filter(|s| cap.is_none_or(|c| s.energy < c))
        .collect();
    states.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.start_index.cmp(&b.start_index)));

    let norm = |v: &[f64]| backend.l2_inner(v, v).max(0.0).sqrt();
    let mut out: Vec<BoundState> = Vec::new();
    for s in states {
        let ns = norm(&s.field);
        let dup = out.iter().any(|o| {
            let minus: Vec<f64> = s.field.iter().zip(&o.field).map(|(a, b)| a - b).collect();
            let plus: Vec<f64> = s.field.iter().zip(&o.field).map(|(a, b)| a + b).collect();
            let d = norm(&minus).min(norm(&plus));
            d <= dedup_tol * ns.max(norm(&o.field))
        });
        if !dup {
            out.push(s);
        }
    }
    out
}

/// Directions drawn uniformly from a seeded generator, projected to `X⁺`.
pub fn random_starts<B: FunctionalBackend + ?Sized>(backend: &B, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<f64> = (0..backend.dim()).map(|_| rng.gen::<f64>() - 0.5).collect();
        if let Some(u) = sphere_direction(backend, &v) {
            out.push(u);
        }
    }
    out
}

/// A two-dimensional backend with a known answer.
pub mod toy {
    use super::*;

    /// `X = ℝ²`, `X⁺ = span e₁`, `X̃ = span e₂`, `J(u) = ½u₁² − ½u₂² − ¼|u|⁴`.
    ///
    /// The ground level is `1/4`, attained at `±e₁`.
    #[derive(Debug, Clone)]
    pub struct Quartic {
        pub tilde: Vec<Vec<f64>>,
    }

    impl Default for Quartic {
        fn default() -> Self {
            Self::new()
        }
    }

    impl Quartic {
        pub fn new() -> Self {
            Self {
                tilde: vec![vec![0.0, 1.0]],
            }
        }
    }

    impl FunctionalBackend for Quartic {
        fn dim(&self) -> usize {
            2
        }
        fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
            dot(u, v)
        }
        fn riesz(&self, g: &[f64]) -> Vec<f64> {
            g.to_vec()
        }
        fn tilde_basis(&self) -> &[Vec<f64>] {
            &self.tilde
        }
        fn project_plus(&self, v: &[f64]) -> Vec<f64> {
            vec![v[0], 0.0]
        }
        fn value(&self, u: &[f64]) -> f64 {
            0.5 * u[0] * u[0] - self.nonlinear_value(u)
        }
        fn gradient(&self, u: &[f64]) -> Vec<f64> {
            let n = self.nonlinear_gradient(u);
            vec![u[0] - n[0], -n[1]]
        }
        fn hessian_apply(&self, u: &[f64], h: &[f64]) -> Vec<f64> {
            let r2 = dot(u, u);
            let uh = dot(u, h);
            vec![
                h[0] - (h[0] * r2 + 2.0 * u[0] * uh),
                -h[1] - (h[1] * r2 + 2.0 * u[1] * uh),
            ]
        }
        fn nonlinear_value(&self, u: &[f64]) -> f64 {
            0.5 * u[1] * u[1] + 0.25 * dot(u, u).powi(2)
        }
        fn nonlinear_gradient(&self, u: &[f64]) -> Vec<f64> {
            let r2 = dot(u, u);
            vec![r2 * u[0], u[1] + r2 * u[1]]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::toy::Quartic;
    use super::*;

    #[test]
    fn toy_fiber_maximum() {
        let b = Quartic::new();
        let np = fiber_maximize(&b, &[1.0, 0.0], None, &FiberOptions::default()).unwrap();
        assert!((np.t - 1.0).abs() < 1e-12);
        assert!(np.tilde_coeffs[0].abs() < 1e-12);
        assert!((np.energy - 0.25).abs() < 1e-14);
    }

    #[test]
    fn toy_fiber_from_bad_init() {
        let b = Quartic::new();
        let init = FiberInit {
            t: 2.5,
            tilde_coeffs: vec![-2.0],
        };
        let np = fiber_maximize(&b, &[1.0, 0.0], Some(&init), &FiberOptions::default()).unwrap();
        assert!((np.t - 1.0).abs() < 1e-10 && np.tilde_coeffs[0].abs() < 1e-10);
    }

    #[test]
    fn toy_sphere_minimum() {
        let b = Quartic::new();
        let m = sphere_minimize(&b, &[vec![-1.0, 0.3]], &SphereOptions::default()).unwrap();
        assert!((m.energy() - 0.25).abs() < 1e-10);
        assert!((m.point.point[0].abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn slack_identity_case() {
        let b = Quartic::new();
        let e = [1.0, 0.0];
        assert_eq!(fiber_slack(&b, &e, 1.0, &[0.0, 0.0]), 0.0);
        assert!(fiber_slack(&b, &e, 0.0, &[0.0, 0.0]) > 0.0);
    }

    #[test]
    fn duplicates_collapse() {
        let b = Quartic::new();
        let starts = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0]];
        let found = multistart_bound_states(&b, &starts, 1e-3, None, &SphereOptions::default());
        assert_eq!(found.len(), 1);
        assert!((found[0].energy - 0.25).abs() < 1e-10);
    }
}
