use cylcurl::analysis::*;
use cylcurl::spectral::eigenpairs_for;
use cylcurl::{eigenpairs, DiscreteForms, MaterialField, MeridianGrid, SpectralSplit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cylinder(n: usize, p: f64) -> DiscreteForms {
    let g = MeridianGrid::rectangle(1.0, 0.0, 1.0, n, n).unwrap();
    DiscreteForms::isotropic(&g, p).unwrap()
}

#[test]
fn first_window_sandwich() {
    for p in [4.0, 6.0] {
        let f = cylinder(16, p);
        let s = compute_s(&f, p, &SobolevOptions::default()).unwrap();
        let spec = eigenpairs(&f, 8).unwrap();
        let l1 = spec.eigenvalues[0];
        let opts = GroundStateOptions::default();
        let c0 = ground_state(&f, 0.0, &opts).unwrap();
        let lower = (0.5 - 1.0 / p) * s.value.powf(p / (p - 2.0));
        assert!(c0.energy >= lower - 1e-6, "p={p}: c0 {} < {lower}", c0.energy);
        for frac in [0.9, 0.5, 0.1, 0.0] {
            let lambda = -frac * l1;
            let g = ground_state(&f, lambda, &opts).unwrap();
            let b = energy_bounds(&spec.split(lambda).unwrap(), s.value, p, f.mu_omega, lambda).unwrap();
            assert!(g.energy <= b.upper + 1e-6, "p={p} λ={lambda}: {} > {}", g.energy, b.upper);
            assert!(g.residual < 1e-6, "p={p} λ={lambda}: residual {}", g.residual);
        }
    }
}

#[test]
fn quadratic_sobolev_constant_is_first_eigenvalue() {
    let f = cylinder(16, 6.0);
    let l1 = eigenpairs(&f, 1).unwrap().eigenvalues[0];
    let s = compute_s(&f, 2.0, &SobolevOptions::default()).unwrap();
    assert!((s.value - l1).abs() <= 1e-8 * l1);
}

#[test]
fn sweep_is_monotone_and_vanishes_at_the_window_edge() {
    let f = cylinder(12, 4.0);
    let l1 = eigenpairs(&f, 1).unwrap().eigenvalues[0];
    let lambdas: Vec<f64> = (1..=20).map(|k| -l1 + l1 * (k as f64 / 20.0).powi(3)).collect();
    let r = lambda_sweep(&f, &lambdas, &SweepOptions::default()).unwrap();
    assert_eq!(r.windows.len(), 1);
    let w = &r.windows[0];
    assert!(w.non_decreasing && w.strictly_increasing, "{w:?}");
    assert!(r.points.iter().all(|p| p.attained));
    assert!(r.lipschitz.iter().all(|c| c.holds));
    assert!(r.points.iter().any(|p| p.upper < 1e-2));
    for p in &r.points {
        assert!(p.energy.unwrap() <= p.upper + 1e-6);
        if p.upper < 1e-2 {
            assert!(p.energy.unwrap() < 1e-2);
        }
    }
}

#[test]
fn eps_estimate_covers_the_guaranteed_width() {
    let f = cylinder(12, 6.0);
    let opts = EpsOptions::default();
    let r = estimate_eps_nu(&f, 1, &opts).unwrap();
    let tol = opts.ground.sphere.tol;
    assert!(r.eps_hat >= r.guaranteed - tol, "{} < {}", r.eps_hat, r.guaranteed);
    let lambda = -r.lambda_nu + 0.5 * r.eps_hat;
    let g = ground_state(&f, lambda, &opts.ground).unwrap();
    assert!(g.energy < r.c0 - 3.0 * tol * r.c0.max(1.0));
}

fn brute_count(values: &[f64], s: f64, p: f64, mu: f64, lambda: f64) -> usize {
    let gap = s * mu.powf((2.0 - p) / p);
    values.iter().filter(|l| -**l < lambda && lambda < -**l + gap).count()
}

#[test]
fn counts_agree_with_a_brute_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..500 {
        let mut v: Vec<f64> = (0..12).map(|_| rng.gen_range(0.5..60.0)).collect();
        if rng.gen_bool(0.3) {
            v[3] = v[2];
        }
        v.push(500.0);
        let split = SpectralSplit::from_values(v.clone());
        let s = rng.gen_range(1.0..30.0);
        let p = rng.gen_range(2.5..6.0);
        let mu = rng.gen_range(0.5..5.0);
        let lambda = -rng.gen_range(0.0..60.0);
        let m = count_m_tilde(&split, s, p, mu, lambda).unwrap();
        assert_eq!(m.count, brute_count(&v, s, p, mu, lambda));

        let c = AnisoConstants {
            mu_inf: rng.gen_range(1.0..2.0),
            v_inf: rng.gen_range(1.0..2.0),
            gamma_inf: rng.gen_range(1.0..2.0),
            gamma_0: rng.gen_range(0.5..1.0),
        };
        for e in [2.0 / p, 2.0] {
            let factor = c.v_inf * c.mu_inf * (c.gamma_inf / c.gamma_0).powf(e);
            let gap = s * mu.powf((2.0 - p) / p);
            let brute = v.iter().filter(|l| {
                let x = (**l - 1.0) * factor;
                x > 0.0 && x < gap
            });
            let a = count_m_tilde_aniso(&split, &c, s, p, mu, e).unwrap();
            assert_eq!(a.count, brute.count());
        }
    }
}

#[test]
fn bound_states_contain_a_pair_when_the_ground_state_converges() {
    let f = cylinder(10, 4.0);
    let spec = eigenpairs_for(&f, 8, -30.0).unwrap();
    let g = ground_state_with(&f, &spec, -30.0, &GroundStateOptions::default(), None).unwrap();
    assert!(g.residual < 1e-6);
    let found = bound_states(&f, &spec, -30.0, Some(&[1, 2, 3]), None, &Default::default()).unwrap();
    assert!(!found.is_empty());
}

fn profile(r: f64, z: f64) -> f64 {
    let s = (r * r + (z - 0.5) * (z - 0.5)) / 0.16;
    if s < 1.0 {
        r * (1.0 - s).powi(3)
    } else {
        0.0
    }
}

#[test]
fn bubbles_keep_the_critical_norm_and_vanish_weakly() {
    let eps = [1.0, 0.5, 0.25];
    let mut devs = Vec::new();
    for n in [32, 64, 128] {
        let f = cylinder(n, 6.0);
        let phi = f.grid.sample_interior(profile);
        let psi = f.grid.sample_interior(|r, z| r * (1.0 - r) * z * (1.0 - z));
        let reps: Vec<BubbleReport> = eps
            .iter()
            .map(|&e| bubble(&f, &phi, e, 0.5, std::slice::from_ref(&psi)).unwrap())
            .collect();
        devs.push(reps.iter().map(|b| (b.l6 - b.l6_base).abs() / b.l6_base).collect::<Vec<_>>());
        if n == 128 {
            for (k, b) in reps.iter().enumerate() {
                assert!(devs.last().unwrap()[k] < 0.05);
                if k > 0 {
                    assert!(reps[k - 1].test_inner[0] >= 2.0 * b.test_inner[0]);
                }
            }
        }
    }
    for k in 1..eps.len() {
        assert!(devs[1][k] < devs[0][k] && devs[2][k] < devs[1][k], "eps={}: {devs:?}", eps[k]);
    }
}

#[test]
fn ground_states_move_continuously_in_lambda() {
    let f = cylinder(10, 4.0);
    let l1 = eigenpairs(&f, 1).unwrap().eigenvalues[0];
    let mu0 = -0.5 * l1;
    let seq: Vec<f64> = (1..=4).map(|k| mu0 + 0.1 * l1 / (1 << k) as f64).collect();
    let r = continuity_of_ground_states(&f, mu0, &seq, &GroundStateOptions::default()).unwrap();
    let d: Vec<f64> = r.entries.iter().map(|e| e.distance.unwrap()).collect();
    assert!(r.entries.iter().all(|e| e.within_bound == Some(true)));
    assert!(d.windows(2).all(|w| w[1] <= w[0] + 1e-8), "{d:?}");
}

#[test]
fn uniform_nonlinearity_makes_both_anisotropic_counts_agree() {
    let g = MeridianGrid::rectangle(1.0, 0.0, 1.0, 10, 10).unwrap();
    let m = MaterialField::constant(&g, 1.0, 1.0, 30.0, 1.0);
    let f = DiscreteForms::assemble(&g, &m, 6.0).unwrap();
    let c = AnisoConstants::from_materials(&g, &m);
    assert_eq!(c.v_inf, 30.0);
    let spec = eigenpairs(&f, 40).unwrap();
    let s = compute_s(&f, 6.0, &SobolevOptions::default()).unwrap().value;
    let b = aniso_bounds(&spec, &c, s, 6.0, f.mu_omega).unwrap();
    assert_eq!(b.m_tilde.count, b.m_tilde_printed.count);
    let d = (0.5 - 1.0 / 6.0) * s.powf(1.5);
    assert!((b.d_lower - d).abs() < 1e-12 * d);
}
