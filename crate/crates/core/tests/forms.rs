use cylcurl::{eigenpairs, DiscreteForms, MaterialField, MeridianGrid};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn cylinder(n: usize, p: f64) -> DiscreteForms {
    let g = MeridianGrid::rectangle(1.0, 0.0, 1.0, n, n).unwrap();
    DiscreteForms::isotropic(&g, p).unwrap()
}

/// Max pointwise error of the stencil divided by the cell measure against `Lφ`.
fn stencil_error(
    n: usize,
    r_min: f64,
    phi: impl Fn(f64, f64) -> f64,
    lphi: impl Fn(f64, f64) -> f64,
) -> f64 {
    let f = cylinder(n, 4.0);
    let g = &f.grid;
    let full = g.sample_nodes(&phi);
    let out = f.stencil_apply_full(&full);
    (0..f.dim())
        .filter(|&k| g.unknown_coords(k).0 >= r_min)
        .map(|k| {
            let (r, z) = g.unknown_coords(k);
            let cell = 2.0 * PI * r * g.h_r * g.h_z;
            (out[k] / cell - lphi(r, z)).abs()
        })
        .fold(0.0, f64::max)
}

fn slope(hs: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[test]
fn stencil_is_second_order_on_smooth_fields() {
    // L φ = −∂_r((1/r)∂_r(rφ)) − ∂_zz φ
    // The radial flux of r²(1 − r) picks up h²/(4 r_{i−½} r_{i+½}), which is O(1)
    // on the first column, so the second field is checked away from the axis.
    type Field = Box<dyn Fn(f64, f64) -> f64>;
    let cases: [(f64, Field, Field); 2] = [
        (
            0.0,
            Box::new(|r, z| r * (PI * z).sin()),
            Box::new(|r, z| PI * PI * r * (PI * z).sin()),
        ),
        (
            0.25,
            Box::new(|r, z| r * (1.0 - r) * (PI * z).sin()),
            Box::new(|r, z| (3.0 + PI * PI * r * (1.0 - r)) * (PI * z).sin()),
        ),
    ];
    let ns = [16, 32, 64, 128];
    let hs: Vec<f64> = ns.iter().map(|n| 1.0 / *n as f64).collect();
    for (r_min, phi, lphi) in &cases {
        let errs: Vec<f64> = ns.iter().map(|&n| stencil_error(n, *r_min, phi, lphi)).collect();
        let s = slope(&hs, &errs);
        assert!((s - 2.0).abs() <= 0.2, "slope {s}, errors {errs:?}");
    }
}

fn random_field(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn gradient_and_hessian_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in [3.0, 4.0, 6.0] {
        let f = cylinder(4, p);
        for lambda in [0.0, -3.0, -40.0] {
            for _ in 0..10 {
                let phi = random_field(f.dim(), &mut rng);
                let dir = random_field(f.dim(), &mut rng);
                let g = f.energy_gradient(lambda, &phi).unwrap();
                let h = 1e-5;
                let plus: Vec<f64> = phi.iter().zip(&dir).map(|(a, b)| a + h * b).collect();
                let minus: Vec<f64> = phi.iter().zip(&dir).map(|(a, b)| a - h * b).collect();
                let fd = (f.energy(lambda, &plus).unwrap() - f.energy(lambda, &minus).unwrap()) / (2.0 * h);
                let an: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "p={p} {fd} vs {an}");

                let hv = f.energy_hessian_apply(lambda, &phi, &dir);
                let gp = f.energy_gradient(lambda, &plus).unwrap();
                let gm = f.energy_gradient(lambda, &minus).unwrap();
                let scale = hv.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
                for k in 0..f.dim() {
                    let fd = (gp[k] - gm[k]) / (2.0 * h);
                    assert!((fd - hv[k]).abs() <= 1e-5 * scale, "p={p} k={k}");
                }
            }
        }
    }
}

#[test]
fn dilation_scales_eigenvalues_by_inverse_square() {
    let g = MeridianGrid::rectangle(1.0, 0.0, 1.5, 12, 18).unwrap();
    let f = DiscreteForms::isotropic(&g, 4.0).unwrap();
    let base = eigenpairs(&f, 5).unwrap().eigenvalues;
    for c in [0.5, 2.0, 3.0] {
        let gc = g.dilated(c).unwrap();
        let fc = DiscreteForms::isotropic(&gc, 4.0).unwrap();
        let ev = eigenpairs(&fc, 5).unwrap().eigenvalues;
        for (a, b) in base.iter().zip(&ev) {
            assert!((b * c * c - a).abs() <= 1e-9 * a, "c={c}: {b} vs {a}");
        }
        assert!((fc.mu_omega - c.powi(3) * f.mu_omega).abs() <= 1e-12 * fc.mu_omega);
    }
}

#[test]
fn measure_converges_to_the_cylinder_volume() {
    let errs: Vec<f64> = [16, 32, 64].iter().map(|&n| (cylinder(n, 6.0).mu_omega - PI).abs()).collect();
    assert!(errs[1] < errs[0] && errs[2] < errs[1]);
    assert!(errs[2] < 0.1);
}

#[test]
fn variable_coefficients_keep_the_form_symmetric() {
    let g = MeridianGrid::rectangle(1.0, -0.5, 0.5, 10, 10).unwrap();
    let m = MaterialField::from_fn(&g, |r, z| (1.0 + r * r + z, 2.0 - r, 1.0 + z * z, 1.0 + 0.5 * r));
    let f = DiscreteForms::assemble(&g, &m, 4.0).unwrap();
    assert_eq!(f.stiffness.asymmetry(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn stiffness_and_mass_are_positive(seed in any::<u64>()) {
        let f = cylinder(6, 6.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_field(f.dim(), &mut rng);
        prop_assert!(f.curl_energy(&phi) > 0.0);
        prop_assert!(f.mass_energy(&phi) > 0.0);
        prop_assert!(f.power_sum(&phi) > 0.0);
    }

    #[test]
    fn forms_are_exactly_symmetric(n_r in 4usize..12, n_z in 4usize..12, p in 2.1f64..6.0) {
        let g = MeridianGrid::rectangle(1.0, 0.0, 1.0, n_r, n_z).unwrap();
        let f = DiscreteForms::isotropic(&g, p).unwrap();
        prop_assert_eq!(f.stiffness.asymmetry(), 0.0);
    }

    #[test]
    fn energy_is_even(seed in any::<u64>(), lambda in -50.0f64..0.0) {
        let f = cylinder(5, 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_field(f.dim(), &mut rng);
        let neg: Vec<f64> = phi.iter().map(|v| -v).collect();
        prop_assert_eq!(f.energy(lambda, &phi).unwrap(), f.energy(lambda, &neg).unwrap());
    }
}
