//! Small dense helpers over complex slices.
//!
//! Inner products follow `⟨a, b⟩ = bᴴa` (linear in the first argument).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `⟨a, b⟩ = Σ a_n conj(b_n)`.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// Real part of `⟨a, b⟩`, i.e. the real inner product of the stacked
/// (re, im) representations.
pub fn re_dot(a: &[C64], b: &[C64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub fn norm_sq(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn l1_norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm()).sum()
}

pub fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[C64], b: &[C64]) -> Vec<C64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[C64], s: f64) -> Vec<C64> {
    a.iter().map(|x| x * s).collect()
}

/// `y ← y + s·x`
pub fn axpy(s: C64, x: &[C64], y: &mut [C64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// `a·x + b·y`, the over-relaxation combination used by the FISTA loops.
pub fn lincomb(a: f64, x: &[C64], b: f64, y: &[C64]) -> Vec<C64> {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(xi, yi)| xi * a + yi * b).collect()
}

/// Largest eigenvalue of a Hermitian positive semidefinite operator by power
/// iteration from a seeded random start. Returns the final Rayleigh quotient.
pub fn power_iteration<F>(op: F, dim: usize, iterations: usize, seed: u64) -> f64
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);

    let mut estimate = 0.0;
    for _ in 0..iterations {
        let w = op(&v);
        estimate = re_dot(&w, &v);
        let n = norm(&w);
        if n == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|x| x / n).collect();
    }
    estimate
}
