//! Property tests for the probe and continuity invariants.

use proptest::prelude::*;

use plaplab::continuity::{inverse_modulus, Modulus};
use plaplab::grid::{gradient_field, Grid2D, ScalarField};
use plaplab::probe::{
    best_tau, dyadic_profile, fit_exponent, oscillation, probe_at, FitMode, OscMode,
};

fn smooth_field(n: usize, a: f64, b: f64, c: f64) -> ScalarField {
    let g = Grid2D::covering(n, n, -1.0, 1.0, -1.0, 1.0).unwrap();
    ScalarField::from_fn(g, |p| a * (2.0 * p[0]).sin() + b * p[1] * p[1] + c * p[0] * p[1])
}

fn center(u: &ScalarField) -> plaplab::probe::ProbePoint {
    let du = gradient_field(u);
    let m = (u.grid.nx - 1) / 2;
    probe_at(&du, m, m, 1e-9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mean_tau_translation_equivariant(
        a in -2.0f64..2.0, b in -2.0f64..2.0, shift in -50.0f64..50.0
    ) {
        let u = smooth_field(33, a, b, 0.3);
        let v = ScalarField::new(u.grid, u.values.iter().map(|x| x + shift).collect()).unwrap();
        let pt = center(&u);
        let tu = best_tau(&u, &pt, 0.5, 2.0).unwrap();
        let tv = best_tau(&v, &pt, 0.5, 2.0).unwrap();
        prop_assert!((tv - tu - shift).abs() <= 1e-10 * (1.0 + shift.abs()));
    }

    #[test]
    fn sup_oscillation_monotone(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
        let u = smooth_field(33, a, b, c);
        let pt = center(&u);
        let radii = [0.3, 0.5, 0.7, 0.9];
        let mut prev = -1.0;
        for &r in &radii {
            let s = oscillation(&u, &pt, r, OscMode::Sup).unwrap();
            prop_assert!(s >= prev - 1e-15);
            prev = s;
        }
    }

    #[test]
    fn modulus_roundtrip(eps in 0.05f64..1.0, scale in 0.1f64..10.0, t in 1e-8f64..0.9) {
        let m = Modulus::scaled(scale, Modulus::holder(eps).unwrap()).unwrap();
        let s = m.eval(t).unwrap();
        let back = inverse_modulus(&m, s).unwrap();
        prop_assert!(!back.saturated);
        prop_assert!((back.t - t).abs() <= 1e-10 * t);
    }

    #[test]
    fn fitted_slope_invariant_under_amplitude(scale in 0.01f64..100.0) {
        let g = Grid2D::covering(129, 129, -1.0, 1.0, -1.0, 1.0).unwrap();
        let u = ScalarField::from_fn(g, |p| p[0].hypot(p[1]).powf(1.5));
        let v = ScalarField::new(g, u.values.iter().map(|x| x * scale).collect()).unwrap();
        let pu = dyadic_profile(&u, &center(&u), 0.5, 4, 2.0).unwrap();
        let pv = dyadic_profile(&v, &center(&v), 0.5, 4, 2.0).unwrap();
        let fu = fit_exponent(&pu, FitMode::Sup, 0.5, 0.05).unwrap();
        let fv = fit_exponent(&pv, FitMode::Sup, 0.5, 0.05).unwrap();
        prop_assert!((fu.alpha_hat - fv.alpha_hat).abs() < 1e-9);
    }

    #[test]
    fn field_file_roundtrip(seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let nx = rng.gen_range(3..12);
        let ny = rng.gen_range(3..12);
        let g = Grid2D::new(nx, ny, rng.gen_range(0.01..2.0), rng.gen_range(0.01..2.0),
                            rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)).unwrap();
        let values: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1e6..1e6)).collect();
        let u = ScalarField::new(g, values).unwrap();
        let mut buf = Vec::new();
        u.write_to(&mut buf).unwrap();
        let v = ScalarField::read_from(buf.as_slice()).unwrap();
        prop_assert_eq!(u.values, v.values);
    }
}
