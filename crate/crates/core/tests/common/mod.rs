#![allow(dead_code)]

use nalgebra::{Complex, Matrix4};
use rand::Rng;

/// Roots of `l[0] x⁴ + … + l[4]` as eigenvalues of the companion matrix.
#[rustfmt::skip]
pub fn companion_roots(l: [f64; 5]) -> Vec<Complex<f64>> {
    let a = l[0];
    let m = Matrix4::new(
        -l[1] / a, -l[2] / a, -l[3] / a, -l[4] / a,
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 1.0, 0.0,
    );
    m.complex_eigenvalues().iter().copied().collect()
}

/// Coefficients of `lead · Π (x - r)`, highest degree first.
pub fn expand(lead: f64, roots: &[Complex<f64>; 4]) -> [f64; 5] {
    let mut c = vec![Complex::new(lead, 0.0)];
    for r in roots {
        let mut next = vec![Complex::new(0.0, 0.0); c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i] += ci;
            next[i + 1] -= ci * r;
        }
        c = next;
    }
    [c[0].re, c[1].re, c[2].re, c[3].re, c[4].re]
}

/// A quartic whose roots lie in the box `[-3, 3]²` and are pairwise at least
/// 0.2 apart. `real_roots` is 0, 2 or 4.
pub fn random_quartic<R: Rng>(rng: &mut R, real_roots: usize) -> ([f64; 5], [Complex<f64>; 4]) {
    loop {
        let mut roots = Vec::new();
        for _ in 0..real_roots {
            roots.push(Complex::new(rng.gen_range(-3.0..3.0), 0.0));
        }
        while roots.len() < 4 {
            let z = Complex::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.2..3.0));
            roots.push(z);
            roots.push(z.conj());
        }
        let separated = (0..4).all(|i| (0..i).all(|j| (roots[i] - roots[j]).norm() >= 0.2));
        if separated {
            let lead = rng.gen_range(0.5..2.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let r = [roots[0], roots[1], roots[2], roots[3]];
            return (expand(lead, &r), r);
        }
    }
}

/// Largest distance from each root in `got` to its nearest unused root in
/// `want`. `None` when the counts differ.
pub fn match_error(got: &[Complex<f64>], want: &[Complex<f64>]) -> Option<f64> {
    if got.len() != want.len() {
        return None;
    }
    let mut used = vec![false; want.len()];
    let mut worst: f64 = 0.0;
    for g in got {
        let (j, d) = want
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, w)| (j, (g - w).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        used[j] = true;
        worst = worst.max(d);
    }
    Some(worst)
}

/// Number of sign changes of the discrete slope, ignoring flat steps.
pub fn slope_sign_changes(values: &[f64]) -> usize {
    let mut changes = 0;
    let mut prev = 0.0f64;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d == 0.0 {
            continue;
        }
        if prev != 0.0 && d.signum() != prev.signum() {
            changes += 1;
        }
        prev = d;
    }
    changes
}
