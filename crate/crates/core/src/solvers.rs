//! Outer reconstruction loops.
//!
//! - [`run_cqnpm`]: quasi-Newton proximal iterations with the SR1 metric and
//!   a weighted proximal step, no momentum.
//! - [`run_apm`]: FISTA with a fixed `1/L` step.
//! - [`run_partial_smoothing`]: either loop applied after moving a smoothed
//!   wavelet term into the differentiable part, leaving TV as the only
//!   nonsmooth term.
//!
//! All loops start from `x₁ = Aᴴy` and record the unsmoothed objective every
//! iteration, including iteration 0.

use std::time::Instant;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, C64};
use crate::metric::{sr1_update, Rank1Metric, Sr1Params};
use crate::operators::{ComplexImage, ForwardModel, KSpaceData};
use crate::transforms::{self, DualTriple, Haar2d, TvVariant, WaveletSpec};
use crate::wpm::{self, WpmProblem, WpmSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Cqnpm,
    Apm,
    SCqnpm,
    SApm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Cqnpm, Method::Apm, Method::SCqnpm, Method::SApm];

    pub fn name(self) -> &'static str {
        match self {
            Self::Cqnpm => "cqnpm",
            Self::Apm => "apm",
            Self::SCqnpm => "s_cqnpm",
            Self::SApm => "s_apm",
        }
    }

    pub fn is_smoothed(self) -> bool {
        matches!(self, Self::SCqnpm | Self::SApm)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    /// Optimize over the image, regularize `‖Tx‖₁`.
    Analysis,
    /// Optimize over wavelet coefficients `x̄` with forward map `ATᴴ`.
    Synthesis,
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Analysis => "analysis",
            Self::Synthesis => "synthesis",
        })
    }
}

impl std::str::FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analysis" => Ok(Self::Analysis),
            "synthesis" => Ok(Self::Synthesis),
            other => Err(invalid(format!("unknown formulation '{other}'"))),
        }
    }
}

/// Armijo-type backtracking for the smoothed accelerated method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backtracking {
    /// Step shrink factor.
    pub rho: f64,
    /// Weight on the quadratic upper-bound term.
    pub c: f64,
    pub max_halvings: usize,
}

impl Default for Backtracking {
    fn default() -> Self {
        Self { rho: 0.5, c: 1.0, max_halvings: 60 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub formulation: Formulation,
    pub lambda: f64,
    pub alpha: f64,
    pub eta: f64,
    pub sr1: Sr1Params,
    /// Outer step `a_k`.
    pub step: f64,
    pub outer_iters: usize,
    pub wpm_max_iter: usize,
    pub wpm_tol: f64,
    pub tv_variant: TvVariant,
    pub wavelet: WaveletSpec,
    pub backtracking: Backtracking,
    /// Keep `B = Ξ·I` at every iteration instead of updating it.
    pub fixed_metric: bool,
    /// Power iterations used to estimate `‖AᴴA‖`.
    pub power_iters: usize,
}

impl SolverConfig {
    pub fn new(method: Method, wavelet: WaveletSpec) -> Self {
        Self {
            method,
            formulation: Formulation::Analysis,
            lambda: 5e-4,
            alpha: 1.0,
            eta: 1e-5,
            sr1: Sr1Params::default(),
            step: 1.0,
            outer_iters: 20,
            wpm_max_iter: 20,
            wpm_tol: 1e-6,
            tv_variant: TvVariant::Iso,
            wavelet,
            backtracking: Backtracking::default(),
            fixed_metric: false,
            power_iters: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(invalid(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.formulation == Formulation::Synthesis && self.alpha != 1.0 {
            return Err(invalid("the synthesis formulation requires alpha = 1"));
        }
        if self.formulation == Formulation::Synthesis && self.method.is_smoothed() {
            return Err(invalid("partial smoothing is defined for the analysis formulation only"));
        }
        if self.method.is_smoothed() && !(self.eta > 0.0) {
            return Err(invalid(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.step > 0.0) {
            return Err(invalid(format!("step a_k must be positive, got {}", self.step)));
        }
        if self.outer_iters == 0 {
            return Err(invalid("outer_iters must be positive"));
        }
        if !(self.backtracking.rho > 0.0 && self.backtracking.rho < 1.0) || !(self.backtracking.c > 0.0) {
            return Err(invalid("backtracking needs 0 < rho < 1 and c > 0"));
        }
        self.sr1.validate()?;
        WpmSettings::new(self.wpm_max_iter, self.wpm_tol).validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub time_s: f64,
    /// Unsmoothed objective.
    pub cost: f64,
    pub psnr: f64,
    pub inner_iters: usize,
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub image: ComplexImage,
    pub records: Vec<IterationRecord>,
}

/// `½‖Ax − y‖² + λ[α‖Tx‖₁ + (1−α)TV(x)]`
pub fn cost(
    model: &ForwardModel,
    img: &ComplexImage,
    data: &KSpaceData,
    lambda: f64,
    alpha: f64,
    tv_variant: TvVariant,
    wavelet: &WaveletSpec,
) -> Result<f64> {
    let (rows, cols) = model.dims();
    if img.dims() != (rows, cols) || data.samples.len() != model.n_samples() {
        return Err(invalid("cost inputs do not match the forward model"));
    }
    let haar = Haar2d::new(rows, cols, wavelet)?;
    Ok(objective(model, &haar, img.as_slice(), &data.samples, lambda, alpha, tv_variant))
}

fn objective(
    model: &ForwardModel,
    haar: &Haar2d,
    x: &[C64],
    y: &[C64],
    lambda: f64,
    alpha: f64,
    tv_variant: TvVariant,
) -> f64 {
    let (rows, cols) = model.dims();
    let fid = 0.5 * linalg::norm_sq(&linalg::sub(&model.apply(x), y));
    let mut reg = 0.0;
    if alpha != 0.0 {
        reg += alpha * linalg::l1_norm(&haar.forward(x));
    }
    if alpha != 1.0 {
        reg += (1.0 - alpha) * transforms::tv_raw(x, rows, cols, tv_variant);
    }
    fid + lambda * reg
}

/// Peak value of reconstructed magnitudes.
const PSNR_PEAK: f64 = 1.0;
/// Reported in place of +∞ for an exact match.
pub const PSNR_CAP: f64 = 300.0;

/// PSNR in dB computed on magnitudes with unit peak.
pub fn psnr(reference: &ComplexImage, estimate: &ComplexImage) -> Result<f64> {
    if reference.dims() != estimate.dims() {
        return Err(invalid(format!(
            "psnr dims differ: {:?} vs {:?}",
            reference.dims(),
            estimate.dims()
        )));
    }
    Ok(psnr_raw(reference.as_slice(), estimate.as_slice()))
}

fn psnr_raw(reference: &[C64], estimate: &[C64]) -> f64 {
    let err: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(r, e)| (e.norm() - r.norm()).powi(2))
        .sum();
    if err == 0.0 {
        return PSNR_CAP;
    }
    (10.0 * (PSNR_PEAK * PSNR_PEAK * reference.len() as f64 / err).log10()).min(PSNR_CAP)
}

/// Which smooth function the loop differentiates.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Smooth {
    /// `½‖Ax − y‖²` over the image.
    Fidelity,
    /// `½‖ATᴴx̄ − y‖²` over wavelet coefficients.
    SynthesisFidelity,
    /// `½‖Ax − y‖² + λα·S^η(Tx)` over the image.
    Smoothed { weight: f64, eta: f64 },
}

/// Shared state of a single solve.
struct Context<'a> {
    model: &'a ForwardModel,
    y: &'a [C64],
    reference: Option<&'a ComplexImage>,
    config: &'a SolverConfig,
    haar: Haar2d,
    smooth: Smooth,
    rows: usize,
    cols: usize,
    /// `(λ_h, α_h)` of the nonsmooth part handled by the proximal step.
    prox_lambda: f64,
    prox_alpha: f64,
    start: Instant,
}

impl<'a> Context<'a> {
    fn new(
        model: &'a ForwardModel,
        data: &'a KSpaceData,
        config: &'a SolverConfig,
        reference: Option<&'a ComplexImage>,
    ) -> Result<Self> {
        config.validate()?;
        let (rows, cols) = model.dims();
        if data.samples.len() != model.n_samples() {
            return Err(invalid(format!(
                "data has {} samples, model expects {}",
                data.samples.len(),
                model.n_samples()
            )));
        }
        if let Some(r) = reference {
            if r.dims() != (rows, cols) {
                return Err(invalid("reference image dims do not match the model"));
            }
        }
        let haar = Haar2d::new(rows, cols, &config.wavelet)?;
        let (smooth, prox_lambda, prox_alpha) = if config.method.is_smoothed() {
            (
                Smooth::Smoothed { weight: config.lambda * config.alpha, eta: config.eta },
                config.lambda * (1.0 - config.alpha),
                0.0,
            )
        } else if config.formulation == Formulation::Synthesis {
            (Smooth::SynthesisFidelity, config.lambda, 1.0)
        } else {
            (Smooth::Fidelity, config.lambda, config.alpha)
        };
        Ok(Self {
            model,
            y: &data.samples,
            reference,
            config,
            haar,
            smooth,
            rows,
            cols,
            prox_lambda,
            prox_alpha,
            start: Instant::now(),
        })
    }

    fn synthesis(&self) -> bool {
        self.smooth == Smooth::SynthesisFidelity
    }

    fn initial_point(&self) -> Vec<C64> {
        let back = self.model.apply_adjoint(self.y);
        if self.synthesis() {
            self.haar.forward(&back)
        } else {
            back
        }
    }

    fn image(&self, var: &[C64]) -> Vec<C64> {
        if self.synthesis() {
            self.haar.adjoint(var)
        } else {
            var.to_vec()
        }
    }

    /// Smooth value and gradient in the optimization variable's domain.
    fn smooth_grad(&self, var: &[C64]) -> (f64, Vec<C64>) {
        match self.smooth {
            Smooth::Fidelity => self.model.fidelity(var, self.y),
            Smooth::SynthesisFidelity => {
                let (f, g) = self.model.fidelity(&self.haar.adjoint(var), self.y);
                (f, self.haar.forward(&g))
            }
            Smooth::Smoothed { weight, eta } => {
                let (f, mut g) = self.model.fidelity(var, self.y);
                if weight == 0.0 {
                    return (f, g);
                }
                let (s, sg) = transforms::smoothed_l1(&self.haar.forward(var), eta)
                    .expect("eta validated positive");
                linalg::axpy(C64::new(weight, 0.0), &self.haar.adjoint(&sg), &mut g);
                (f + weight * s, g)
            }
        }
    }

    fn smooth_value(&self, var: &[C64]) -> f64 {
        match self.smooth {
            Smooth::Smoothed { weight, eta } if weight != 0.0 => {
                let fid = 0.5 * linalg::norm_sq(&linalg::sub(&self.model.apply(var), self.y));
                let (s, _) = transforms::smoothed_l1(&self.haar.forward(var), eta).expect("eta validated positive");
                fid + weight * s
            }
            _ => self.smooth_grad(var).0,
        }
    }

    fn record(&self, iter: usize, var: &[C64], inner_iters: usize) -> IterationRecord {
        let img = self.image(var);
        let cost = objective(
            self.model,
            &self.haar,
            &img,
            self.y,
            self.config.lambda,
            self.config.alpha,
            self.config.tv_variant,
        );
        let psnr = self.reference.map_or(f64::NAN, |r| psnr_raw(r.as_slice(), &img));
        IterationRecord { iter, time_s: self.start.elapsed().as_secs_f64(), cost, psnr, inner_iters }
    }

    fn finish(&self, var: &[C64], records: Vec<IterationRecord>) -> Result<SolveOutput> {
        Ok(SolveOutput { image: ComplexImage::new(self.rows, self.cols, self.image(var))?, records })
    }

    /// Weighted proximal step of the nonsmooth part with scale `a`:
    /// `argmin_x ½‖x − v‖²_B + a·λ_h h(x)`.
    fn prox(
        &self,
        v: Vec<C64>,
        metric: &Rank1Metric,
        a: f64,
        warm: &mut Option<DualTriple>,
    ) -> Result<(Vec<C64>, usize)> {
        let lambda_bar = a * self.prox_lambda;
        if self.synthesis() {
            let out = wpm::solve_rank1_root_detailed(&v, metric, lambda_bar)?;
            return Ok((out.x, out.iterations));
        }
        let problem = WpmProblem {
            v,
            metric: metric.clone(),
            lambda_bar,
            alpha: self.prox_alpha,
            tv_variant: self.config.tv_variant,
            wavelet: self.config.wavelet,
            rows: self.rows,
            cols: self.cols,
        };
        let settings = WpmSettings {
            max_iter: self.config.wpm_max_iter,
            tol: self.config.wpm_tol,
            warm_start: warm.take(),
        };
        let out = wpm::solve_dual_fista(&problem, &settings)?;
        *warm = Some(out.triple);
        Ok((out.x, out.iterations))
    }

    fn lipschitz(&self) -> f64 {
        self.model.gram_norm(self.config.power_iters) * 1.01
    }
}

/// Complex quasi-Newton proximal method.
pub fn run_cqnpm(
    model: &ForwardModel,
    data: &KSpaceData,
    config: &SolverConfig,
    reference: Option<&ComplexImage>,
) -> Result<SolveOutput> {
    if config.method != Method::Cqnpm {
        return Err(invalid(format!("run_cqnpm called with method {}", config.method)));
    }
    quasi_newton_loop(&Context::new(model, data, config, reference)?)
}

fn quasi_newton_loop(ctx: &Context) -> Result<SolveOutput> {
    let config = ctx.config;
    let n = ctx.rows * ctx.cols;
    let mut x = ctx.initial_point();
    let mut records = vec![ctx.record(0, &x, 0)];

    let mut metric = Rank1Metric::scaled_identity(n, config.sr1.xi);
    let mut previous: Option<(Vec<C64>, Vec<C64>)> = None;
    let mut warm = None;

    for k in 1..=config.outer_iters {
        let (_, grad) = ctx.smooth_grad(&x);
        if let (Some((x_prev, g_prev)), false) = (&previous, config.fixed_metric) {
            metric = sr1_update(&linalg::sub(&x, x_prev), &linalg::sub(&grad, g_prev), &config.sr1)?;
        }
        let mut v = x.clone();
        linalg::axpy(C64::new(-config.step, 0.0), &metric.apply_inverse(&grad)?, &mut v);
        let (next, inner) = ctx.prox(v, &metric, config.step, &mut warm)?;
        previous = Some((std::mem::replace(&mut x, next), grad));
        records.push(ctx.record(k, &x, inner));
    }
    ctx.finish(&x, records)
}

/// Accelerated proximal gradient (FISTA) with a fixed `1/L` step.
pub fn run_apm(
    model: &ForwardModel,
    data: &KSpaceData,
    config: &SolverConfig,
    reference: Option<&ComplexImage>,
) -> Result<SolveOutput> {
    if config.method != Method::Apm {
        return Err(invalid(format!("run_apm called with method {}", config.method)));
    }
    let ctx = Context::new(model, data, config, reference)?;
    let step = 1.0 / ctx.lipschitz();
    accelerated_loop(&ctx, step, false)
}

fn accelerated_loop(ctx: &Context, initial_step: f64, backtrack: bool) -> Result<SolveOutput> {
    let config = ctx.config;
    let n = ctx.rows * ctx.cols;
    let identity = Rank1Metric::scaled_identity(n, 1.0);
    let mut x = ctx.initial_point();
    let mut records = vec![ctx.record(0, &x, 0)];
    let mut extrapolated = x.clone();
    let mut t = 1.0;
    let mut step = initial_step;
    let mut warm = None;

    for k in 1..=config.outer_iters {
        let (f_y, grad) = ctx.smooth_grad(&extrapolated);
        let mut halvings = 0;
        let (next, inner) = loop {
            let mut v = extrapolated.clone();
            linalg::axpy(C64::new(-step, 0.0), &grad, &mut v);
            let mut trial_warm = warm.clone();
            let (candidate, inner) = ctx.prox(v, &identity, step, &mut trial_warm)?;
            if !backtrack || sufficient_decrease(ctx, f_y, &grad, &extrapolated, &candidate, step) {
                warm = trial_warm;
                break (candidate, inner);
            }
            halvings += 1;
            if halvings > config.backtracking.max_halvings {
                return Err(Error::StepFailure { halvings: config.backtracking.max_halvings });
            }
            step *= config.backtracking.rho;
        };
        let t_next = wpm::next_momentum(t);
        extrapolated = linalg::lincomb(1.0 + (t - 1.0) / t_next, &next, -(t - 1.0) / t_next, &x);
        x = next;
        t = t_next;
        records.push(ctx.record(k, &x, inner));
    }
    ctx.finish(&x, records)
}

fn sufficient_decrease(ctx: &Context, f_y: f64, grad: &[C64], y: &[C64], candidate: &[C64], step: f64) -> bool {
    let d = linalg::sub(candidate, y);
    let bound = f_y + linalg::re_dot(grad, &d) + ctx.config.backtracking.c / (2.0 * step) * linalg::norm_sq(&d);
    ctx.smooth_value(candidate) <= bound
}

/// S-CQNPM or S-APM: the wavelet term is replaced by `λα·S^η(‖Tx‖₁)` inside the
/// smooth part and only `λ(1−α)TV` is handled by the proximal step.
pub fn run_partial_smoothing(
    model: &ForwardModel,
    data: &KSpaceData,
    config: &SolverConfig,
    reference: Option<&ComplexImage>,
) -> Result<SolveOutput> {
    let ctx = Context::new(model, data, config, reference)?;
    match config.method {
        Method::SCqnpm => quasi_newton_loop(&ctx),
        Method::SApm => {
            let step = 1.0 / ctx.model.gram_norm(config.power_iters);
            accelerated_loop(&ctx, step, true)
        }
        other => Err(invalid(format!("run_partial_smoothing called with method {other}"))),
    }
}

/// Dispatch on `config.method`.
pub fn solve(
    model: &ForwardModel,
    data: &KSpaceData,
    config: &SolverConfig,
    reference: Option<&ComplexImage>,
) -> Result<SolveOutput> {
    match config.method {
        Method::Cqnpm => run_cqnpm(model, data, config, reference),
        Method::Apm => run_apm(model, data, config, reference),
        Method::SCqnpm | Method::SApm => run_partial_smoothing(model, data, config, reference),
    }
}

/// Value and gradient of the smooth part used by the partially smoothed
/// methods, `½‖Ax − y‖² + weight·S^η(Tx)`.
pub fn smoothed_objective(
    model: &ForwardModel,
    data: &KSpaceData,
    wavelet: &WaveletSpec,
    weight: f64,
    eta: f64,
    img: &ComplexImage,
) -> Result<(f64, ComplexImage)> {
    let (rows, cols) = model.dims();
    if img.dims() != (rows, cols) || data.samples.len() != model.n_samples() {
        return Err(invalid("smoothed objective inputs do not match the forward model"));
    }
    let haar = Haar2d::new(rows, cols, wavelet)?;
    let (f, mut g) = model.fidelity(img.as_slice(), &data.samples);
    let (s, sg) = transforms::smoothed_l1(&haar.forward(img.as_slice()), eta)?;
    linalg::axpy(C64::new(weight, 0.0), &haar.adjoint(&sg), &mut g);
    Ok((f + weight * s, ComplexImage::new(rows, cols, g)?))
}
