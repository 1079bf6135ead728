//! Weighted proximal mapping checks against brute-force primal solvers.

use cqnpm::linalg::{self, C64};
use cqnpm::metric::{sr1_update, Rank1Metric, Rank1Sign};
use cqnpm::transforms::TvVariant;
use cqnpm::wpm::{self, WpmProblem, WpmSettings};
use cqnpm::{Sr1Params, WaveletSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)).collect()
}

/// SR1 metric from a random diagonal-dominant quadratic, rank-1 term kept.
fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> Rank1Metric {
    loop {
        let s = random_vec(rng, n);
        let diag: Vec<f64> = (0..n).map(|_| 0.5 + 3.0 * rng.random::<f64>()).collect();
        let m: Vec<C64> = s.iter().zip(&diag).map(|(si, d)| si * d).collect();
        let metric = sr1_update(&s, &m, &Sr1Params::default()).unwrap();
        if metric.sign() != Rank1Sign::None {
            return metric;
        }
    }
}

/// Proximal gradient on `‖x − v‖²_B + 2λ̄‖x‖₁` with step `1/(2λ_max(B))`.
fn brute_force_l1(v: &[C64], metric: &Rank1Metric, lambda_bar: f64, iterations: usize) -> Vec<C64> {
    let step = 1.0 / (2.0 * metric.max_eigenvalue());
    let mut x = v.to_vec();
    for _ in 0..iterations {
        let g = metric.apply(&linalg::sub(&x, v)).unwrap();
        let y = linalg::lincomb(1.0, &x, -2.0 * step, &g);
        x = wpm::soft_threshold_all(&y, 2.0 * lambda_bar * step);
    }
    x
}

#[test]
fn rank1_root_matches_brute_force_in_four_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let metric = random_metric(&mut rng, 4);
        let v = random_vec(&mut rng, 4);
        let lambda_bar = 0.05 + 0.5 * rng.random::<f64>();
        let got = wpm::solve_rank1_root(&v, &metric, lambda_bar).unwrap();
        let expect = brute_force_l1(&v, &metric, lambda_bar, 200_000);
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).norm() <= 1e-6, "{got:?} vs {expect:?}");
        }
    }
}

fn problem(rng: &mut ChaCha8Rng, alpha: f64, variant: TvVariant, metric: Rank1Metric) -> WpmProblem {
    WpmProblem {
        v: random_vec(rng, 64),
        metric,
        lambda_bar: 0.05 + 0.2 * rng.random::<f64>(),
        alpha,
        tv_variant: variant,
        wavelet: WaveletSpec::deepest(8, 8, 3),
        rows: 8,
        cols: 8,
    }
}

#[test]
fn dual_fista_does_not_increase_the_primal_objective_over_v() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (i, alpha) in [0.0, 0.25, 0.5, 1.0].into_iter().enumerate() {
        let variant = if i % 2 == 0 { TvVariant::Iso } else { TvVariant::L1 };
        let metric = random_metric(&mut rng, 64);
        let p = problem(&mut rng, alpha, variant, metric);
        let out = wpm::solve_dual_fista(&p, &WpmSettings::new(500, 1e-10)).unwrap();
        assert!(p.objective(&out.x).unwrap() <= p.objective(&p.v).unwrap());
    }
}

#[test]
fn prox_is_nonexpansive_in_the_metric_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for trial in 0..10 {
        let alpha = [0.0, 0.5, 1.0][trial % 3];
        let identity = trial % 2 == 0;
        let metric = if identity { Rank1Metric::scaled_identity(64, 1.0) } else { random_metric(&mut rng, 64) };
        let a = problem(&mut rng, alpha, TvVariant::Iso, metric.clone());
        let b = WpmProblem { v: random_vec(&mut rng, 64), ..a.clone() };
        let settings = WpmSettings::new(3000, 1e-13);
        let pa = wpm::solve_dual_fista(&a, &settings).unwrap().x;
        let pb = wpm::solve_dual_fista(&b, &settings).unwrap().x;
        let lhs = metric.norm_sq(&linalg::sub(&pa, &pb)).unwrap().sqrt();
        let rhs = metric.norm_sq(&linalg::sub(&a.v, &b.v)).unwrap().sqrt();
        let slack = if identity { 1e-12 } else { 1e-8 };
        assert!(lhs <= rhs + slack, "{lhs} > {rhs}");
    }
}

#[test]
fn plain_dual_gradient_steps_decrease_the_dual_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let metric = random_metric(&mut rng, 64);
    let p = problem(&mut rng, 0.5, TvVariant::Iso, metric);
    let lc = wpm::dual_lipschitz(&p).unwrap();
    let dual = |t: &cqnpm::DualTriple| p.metric.norm_sq(&wpm::w_of(&p, t).unwrap()).unwrap();
    let mut triple = p.zero_triple();
    let mut last = dual(&triple);
    for _ in 0..200 {
        let g = wpm::dual_gradient(&p, &triple).unwrap();
        let mut next = triple.lincomb(1.0, &g, -1.0 / lc);
        next.z = cqnpm::transforms::project_unit_disks(&next.z);
        next.pair = next.pair.map(|pair| cqnpm::transforms::project_pair(&pair, p.tv_variant).unwrap());
        let value = dual(&next);
        assert!(value <= last + 1e-12 * last.abs());
        last = value;
        triple = next;
    }
}
