mod common;

use common::{companion_roots, match_error, random_quartic};
use nalgebra::Complex;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ris_ee::pa_opt::{ferrari_roots, quartic_problem};

fn to_nalgebra(z: num_complex::Complex64) -> Complex<f64> {
    Complex::new(z.re, z.im)
}

#[test]
fn agrees_with_companion_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let (l, _) = random_quartic(&mut rng, [0, 2, 4][i % 3]);
        let ours: Vec<_> = quartic_problem(l)
            .unwrap()
            .roots
            .into_iter()
            .map(to_nalgebra)
            .collect();
        let err = match_error(&ours, &companion_roots(l)).expect("four roots");
        worst = worst.max(err);
    }
    assert!(worst < 1e-8, "max root error {worst:e}");
}

#[test]
fn recovers_planted_roots() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let (l, planted) = random_quartic(&mut rng, 4);
        let got: Vec<_> = ferrari_roots(l)
            .unwrap()
            .into_iter()
            .map(|x| Complex::new(x, 0.0))
            .collect();
        let err = match_error(&got, &planted).expect("four real roots");
        assert!(err < 1e-8, "{err:e} for {l:?}");
    }
}

#[test]
fn real_root_count_follows_construction() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for real in [0, 2, 4] {
        for _ in 0..100 {
            let (l, _) = random_quartic(&mut rng, real);
            assert_eq!(ferrari_roots(l).unwrap().len(), real, "{l:?}");
        }
    }
}

proptest! {
    #[test]
    fn every_real_root_has_small_residual(
        l0 in prop_oneof![-5.0..-0.1f64, 0.1..5.0f64],
        l1 in -5.0..5.0f64, l2 in -5.0..5.0f64, l3 in -5.0..5.0f64, l4 in -5.0..5.0f64,
    ) {
        let l = [l0, l1, l2, l3, l4];
        for r in ferrari_roots(l).unwrap() {
            let value = l.iter().fold(0.0, |acc, c| acc * r + c);
            let scale = l.iter().fold(0.0, |acc, c: &f64| acc * r.abs() + c.abs());
            prop_assert!(value.abs() <= 1e-8 * scale, "p({r}) = {value}");
        }
    }

    #[test]
    fn scaling_coefficients_keeps_roots(k in prop_oneof![-1e3..-1e-3f64, 1e-3..1e3f64]) {
        let l = [1.0, 0.0, -5.0, 0.0, 4.0];
        let scaled = l.map(|c| c * k);
        let a = ferrari_roots(l).unwrap();
        let b = ferrari_roots(scaled).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }
}
