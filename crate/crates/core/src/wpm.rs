//! Weighted proximal mappings
//!
//! ```text
//! argmin_x ‖x − v‖²_B + 2λ̄ [ α‖Tx‖₁ + (1 − α) TV(x) ]
//! ```
//!
//! for the diagonal ± rank-1 metrics produced by [`crate::metric`].
//!
//! Two routes are provided. [`solve_dual_fista`] works for any `α ∈ [0, 1]`:
//! writing both regularizers as support functions of the unit-disk sets turns
//! the problem into `min ‖w(z, P, Q)‖²_B` over the dual triple, with the
//! primal solution `x = w(z*, P*, Q*)`. [`solve_rank1_root`] handles a plain
//! `ℓ₁` term (the synthesis formulation) by reducing the weighted prox to a
//! scaled soft threshold shifted by `ũβ*`, where `β*` is the root of a
//! two-real-dimensional equation.

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, C64};
use crate::metric::{Rank1Metric, Rank1Sign};
use crate::transforms::{self, DualPair, DualTriple, Haar2d, TvVariant, WaveletSpec};

/// `‖T‖` of the orthonormal Haar transform.
const WAVELET_NORM_SQ: f64 = 1.0;
/// `‖ℒ‖²` of the finite-difference pair operator.
pub const DIFF_NORM_SQ: f64 = 8.0;

#[derive(Debug, Clone)]
pub struct WpmProblem {
    /// Point being mapped, `x_k − a_k B⁻¹∇f(x_k)` inside the outer loop.
    pub v: Vec<C64>,
    pub metric: Rank1Metric,
    pub lambda_bar: f64,
    pub alpha: f64,
    pub tv_variant: TvVariant,
    pub wavelet: WaveletSpec,
    pub rows: usize,
    pub cols: usize,
}

impl WpmProblem {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(invalid("image dims must be positive"));
        }
        let n = self.rows * self.cols;
        if self.v.len() != n || self.metric.dim() != n {
            return Err(invalid(format!(
                "v has length {}, metric dim {}, image {}x{}",
                self.v.len(),
                self.metric.dim(),
                self.rows,
                self.cols
            )));
        }
        if !(self.lambda_bar >= 0.0) {
            return Err(invalid(format!("lambda_bar must be nonnegative, got {}", self.lambda_bar)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.uses_wavelet() {
            self.wavelet.validate(self.rows, self.cols)?;
        }
        Ok(())
    }

    fn uses_wavelet(&self) -> bool {
        self.alpha != 0.0
    }

    fn uses_tv(&self) -> bool {
        self.alpha != 1.0
    }

    /// A zero dual triple shaped for this problem.
    pub fn zero_triple(&self) -> DualTriple {
        let nz = if self.uses_wavelet() { self.rows * self.cols } else { 0 };
        DualTriple::zeros(nz, self.rows, self.cols, self.uses_tv())
    }

    fn check_triple(&self, triple: &DualTriple) -> Result<()> {
        let nz = if self.uses_wavelet() { self.rows * self.cols } else { 0 };
        if triple.z.len() != nz {
            return Err(invalid(format!("dual z has length {}, expected {nz}", triple.z.len())));
        }
        match (&triple.pair, self.uses_tv()) {
            (Some(pair), true) if pair.image_dims() == (self.rows, self.cols) => Ok(()),
            (None, false) => Ok(()),
            _ => Err(invalid("dual pair does not match the problem's TV weight or dims")),
        }
    }

    /// Primal objective `‖x − v‖²_B + 2λ̄[α‖Tx‖₁ + (1−α)TV(x)]`.
    pub fn objective(&self, x: &[C64]) -> Result<f64> {
        self.validate()?;
        let d = linalg::sub(x, &self.v);
        let mut reg = 0.0;
        if self.uses_wavelet() {
            let t = Haar2d::new(self.rows, self.cols, &self.wavelet)?.forward(x);
            reg += self.alpha * linalg::l1_norm(&t);
        }
        if self.uses_tv() {
            reg += (1.0 - self.alpha) * transforms::tv_raw(x, self.rows, self.cols, self.tv_variant);
        }
        Ok(self.metric.norm_sq(&d)? + 2.0 * self.lambda_bar * reg)
    }
}

#[derive(Debug, Clone, Default)]
pub struct WpmSettings {
    pub max_iter: usize,
    pub tol: f64,
    pub warm_start: Option<DualTriple>,
}

impl WpmSettings {
    pub fn new(max_iter: usize, tol: f64) -> Self {
        Self { max_iter, tol, warm_start: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(invalid("inner max_iter must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid(format!("inner tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Shared precomputation for repeated `w` evaluations.
struct DualOps<'a> {
    problem: &'a WpmProblem,
    haar: Option<Haar2d>,
}

impl<'a> DualOps<'a> {
    fn new(problem: &'a WpmProblem) -> Result<Self> {
        problem.validate()?;
        let haar = if problem.uses_wavelet() {
            Some(Haar2d::new(problem.rows, problem.cols, &problem.wavelet)?)
        } else {
            None
        };
        Ok(Self { problem, haar })
    }

    fn w(&self, triple: &DualTriple) -> Result<Vec<C64>> {
        let p = self.problem;
        let mut c = vec![linalg::ZERO; p.v.len()];
        if let Some(haar) = &self.haar {
            linalg::axpy(C64::new(p.alpha, 0.0), &haar.adjoint(&triple.z), &mut c);
        }
        if let Some(pair) = triple.pair.as_ref().filter(|_| p.uses_tv()) {
            linalg::axpy(C64::new(1.0 - p.alpha, 0.0), &transforms::diff_adjoint_raw(pair), &mut c);
        }
        let mut w = p.v.clone();
        linalg::axpy(C64::new(-p.lambda_bar, 0.0), &p.metric.apply_inverse(&c)?, &mut w);
        Ok(w)
    }

    /// `(T w, ℒᵀ w)` restricted to the active blocks.
    fn analyze(&self, w: &[C64]) -> (Vec<C64>, Option<DualPair>) {
        let p = self.problem;
        let z = self.haar.as_ref().map(|h| h.forward(w)).unwrap_or_default();
        let pair = p.uses_tv().then(|| transforms::diff_raw(w, p.rows, p.cols));
        (z, pair)
    }
}

/// `w(z, P, Q) = v − λ̄B⁻¹(αTᴴz + (1−α)ℒ(P, Q))`
pub fn w_of(problem: &WpmProblem, triple: &DualTriple) -> Result<Vec<C64>> {
    problem.check_triple(triple)?;
    DualOps::new(problem)?.w(triple)
}

/// Gradient of `‖w(z, P, Q)‖²_B`: `−2λ̄ [αTw ; (1−α)ℒᵀw]`.
///
/// The gradient is with respect to the real and imaginary parts of the dual
/// variables, i.e. the directional derivative along `d` is `Re⟨grad, d⟩`.
pub fn dual_gradient(problem: &WpmProblem, triple: &DualTriple) -> Result<DualTriple> {
    problem.check_triple(triple)?;
    let ops = DualOps::new(problem)?;
    let w = ops.w(triple)?;
    let (tw, lw) = ops.analyze(&w);
    let lb = problem.lambda_bar;
    Ok(DualTriple {
        z: linalg::scale(&tw, -2.0 * lb * problem.alpha),
        pair: lw.map(|pair| pair.scaled(-2.0 * lb * (1.0 - problem.alpha))),
    })
}

/// Lipschitz constant of [`dual_gradient`]:
/// `2λ̄²(α²‖T‖² + 8(1−α)²) / λ_min(B)`.
pub fn dual_lipschitz(problem: &WpmProblem) -> Result<f64> {
    let sigma_min = problem.metric.min_eigenvalue()?;
    let a = problem.alpha;
    let lb = problem.lambda_bar;
    Ok(2.0 * lb * lb * (a * a * WAVELET_NORM_SQ + DIFF_NORM_SQ * (1.0 - a) * (1.0 - a)) / sigma_min)
}

/// FISTA momentum update `t ↦ (1 + √(1 + 4t²)) / 2`.
pub fn next_momentum(t: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0
}

#[derive(Debug, Clone)]
pub struct DualSolution {
    pub x: Vec<C64>,
    /// Final dual iterate, suitable as the next warm start.
    pub triple: DualTriple,
    pub iterations: usize,
}

/// Projected FISTA on the dual of the weighted proximal problem.
pub fn solve_dual_fista(problem: &WpmProblem, settings: &WpmSettings) -> Result<DualSolution> {
    settings.validate()?;
    let ops = DualOps::new(problem)?;
    let mut prev = match &settings.warm_start {
        Some(t) => {
            problem.check_triple(t)?;
            t.clone()
        }
        None => problem.zero_triple(),
    };
    if problem.lambda_bar == 0.0 {
        return Ok(DualSolution { x: problem.v.clone(), triple: prev, iterations: 0 });
    }

    let lc = dual_lipschitz(problem)?;
    let z_step = 2.0 * problem.lambda_bar * problem.alpha / lc;
    let pair_step = 2.0 * problem.lambda_bar * (1.0 - problem.alpha) / lc;

    let mut bar = prev.clone();
    let mut t = 1.0;
    let mut iterations = 0;
    for _ in 0..settings.max_iter {
        iterations += 1;
        let w = ops.w(&bar)?;
        let (tw, lw) = ops.analyze(&w);

        let z = if problem.uses_wavelet() {
            let mut z = bar.z.clone();
            linalg::axpy(C64::new(z_step, 0.0), &tw, &mut z);
            transforms::project_unit_disks(&z)
        } else {
            Vec::new()
        };
        let pair = match (bar.pair.as_ref(), lw) {
            (Some(b), Some(g)) => {
                Some(transforms::project_pair_unchecked(&b.add_scaled(pair_step, &g), problem.tv_variant))
            }
            _ => None,
        };
        let next = DualTriple { z, pair };

        let change = next.diff_norm(&prev);
        if change <= settings.tol {
            prev = next;
            break;
        }
        let t_next = next_momentum(t);
        bar = next.lincomb((t_next + t - 1.0) / t_next, &prev, -(t - 1.0) / t_next);
        prev = next;
        t = t_next;
    }

    let x = ops.w(&prev)?;
    Ok(DualSolution { x, triple: prev, iterations })
}

/// Componentwise complex soft threshold `x_n ↦ (x_n/|x_n|)·max(|x_n| − θ_n, 0)`.
pub fn prox_l1_diag(x: &[C64], thresholds: &[f64]) -> Result<Vec<C64>> {
    if x.len() != thresholds.len() {
        return Err(invalid(format!("{} thresholds for {} entries", thresholds.len(), x.len())));
    }
    if let Some(bad) = thresholds.iter().find(|t| !(**t >= 0.0)) {
        return Err(invalid(format!("thresholds must be nonnegative, got {bad}")));
    }
    Ok(x.iter().zip(thresholds).map(|(v, &t)| soft_threshold(*v, t)).collect())
}

pub fn soft_threshold(v: C64, threshold: f64) -> C64 {
    let m = v.norm();
    if m <= threshold {
        linalg::ZERO
    } else {
        v * ((m - threshold) / m)
    }
}

pub fn soft_threshold_all(x: &[C64], threshold: f64) -> Vec<C64> {
    x.iter().map(|v| soft_threshold(*v, threshold)).collect()
}

const ROOT_TOL: f64 = 1e-10;
const ROOT_MAX_ITER: usize = 200;

#[derive(Debug, Clone)]
pub struct Rank1Prox {
    pub x: Vec<C64>,
    pub beta: C64,
    pub iterations: usize,
}

/// `argmin_u λ̄‖u‖₁ + ½‖u − x‖²_B` for `B = τI ± ũũᴴ`.
pub fn solve_rank1_root(x: &[C64], metric: &Rank1Metric, lambda_bar: f64) -> Result<Vec<C64>> {
    Ok(solve_rank1_root_detailed(x, metric, lambda_bar)?.x)
}

/// [`solve_rank1_root`] also reporting the root `β*` and the iteration count.
pub fn solve_rank1_root_detailed(x: &[C64], metric: &Rank1Metric, lambda_bar: f64) -> Result<Rank1Prox> {
    if x.len() != metric.dim() {
        return Err(invalid(format!("x has length {}, metric dim {}", x.len(), metric.dim())));
    }
    if !(lambda_bar >= 0.0) {
        return Err(invalid(format!("lambda_bar must be nonnegative, got {lambda_bar}")));
    }
    metric.min_eigenvalue()?;
    let tau = metric.tau();
    let threshold = lambda_bar / tau;
    let u = metric.u();
    if metric.sign() == Rank1Sign::None || linalg::norm_sq(u) == 0.0 {
        return Ok(Rank1Prox { x: soft_threshold_all(x, threshold), beta: linalg::ZERO, iterations: 0 });
    }
    let shift = -metric.sign().as_f64() / tau;

    let prox_at = |beta: C64| -> Vec<C64> {
        let mut y = x.to_vec();
        linalg::axpy(beta * shift, u, &mut y);
        soft_threshold_all(&y, threshold)
    };
    // 𝕁(β) = ũᴴ(x − p(β)) + β
    let residual = |beta: C64| -> C64 { linalg::dot(&linalg::sub(x, &prox_at(beta)), u) + beta };

    let tol = ROOT_TOL * (linalg::norm(u) * linalg::norm(x)).max(1.0);
    let (beta, iterations) = broyden_2d(residual, tol, ROOT_MAX_ITER)?;
    Ok(Rank1Prox { x: prox_at(beta), beta, iterations })
}

type Mat2 = [[f64; 2]; 2];

fn fd_jacobian(f: &impl Fn(C64) -> C64, at: C64, fx: C64) -> Mat2 {
    let h = 1e-7 * (1.0 + at.norm());
    let dr = (f(at + C64::new(h, 0.0)) - fx) / h;
    let di = (f(at + C64::new(0.0, h)) - fx) / h;
    [[dr.re, di.re], [dr.im, di.im]]
}

fn solve2(j: &Mat2, r: C64) -> Option<C64> {
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det.abs() < 1e-300 || !det.is_finite() {
        return None;
    }
    Some(C64::new(
        (j[1][1] * r.re - j[0][1] * r.im) / det,
        (-j[1][0] * r.re + j[0][0] * r.im) / det,
    ))
}

/// Damped Broyden iteration on `(Re β, Im β)` starting from `β = 0`.
fn broyden_2d(f: impl Fn(C64) -> C64, tol: f64, max_iter: usize) -> Result<(C64, usize)> {
    let mut beta = linalg::ZERO;
    let mut r = f(beta);
    if r.norm() <= tol {
        return Ok((beta, 0));
    }
    let mut jac = fd_jacobian(&f, beta, r);
    let mut best = r.norm();

    for iter in 1..=max_iter {
        let mut fresh = false;
        let (step, r_new) = loop {
            let accepted = solve2(&jac, -r).and_then(|dir| {
                let mut damping = 1.0;
                for _ in 0..40 {
                    let trial = dir * damping;
                    let rt = f(beta + trial);
                    if rt.norm() < (1.0 - 1e-4 * damping) * r.norm() {
                        return Some((trial, rt));
                    }
                    damping *= 0.5;
                }
                None
            });
            match accepted {
                Some(found) => break found,
                None if !fresh => {
                    jac = fd_jacobian(&f, beta, r);
                    fresh = true;
                }
                None => {
                    return Err(Error::NoConvergence { iterations: iter, residual: best });
                }
            }
        };

        // rank-1 secant correction J += (Δr − JΔβ)Δβᵀ / |Δβ|²
        let dr = r_new - r;
        let pred = C64::new(
            jac[0][0] * step.re + jac[0][1] * step.im,
            jac[1][0] * step.re + jac[1][1] * step.im,
        );
        let corr = (dr - pred) / step.norm_sqr();
        jac[0][0] += corr.re * step.re;
        jac[0][1] += corr.re * step.im;
        jac[1][0] += corr.im * step.re;
        jac[1][1] += corr.im * step.im;

        beta += step;
        r = r_new;
        best = best.min(r.norm());
        if r.norm() <= tol {
            return Ok((beta, iter));
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: best })
}
