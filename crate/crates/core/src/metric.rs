//! Complex SR1 Hessian approximation `B = τI + sign·ũũᴴ`.
//!
//! The update keeps only the latest (step, gradient-change) pair. With
//! `τ = γ‖m‖²/Re⟨s,m⟩` and `γ > 1` the rank-1 correction is always negative
//! and `B` stays positive definite with `λ_min(B) = τ − ‖ũ‖²`.

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, C64};

/// Sign of the rank-1 correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank1Sign {
    Plus,
    Minus,
    None,
}

impl Rank1Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
            Self::None => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sr1Params {
    pub gamma: f64,
    /// Fallback scale for the first iteration and the curvature-failure branch.
    pub xi: f64,
    /// Relative threshold below which the rank-1 term is dropped.
    pub delta: f64,
}

impl Default for Sr1Params {
    fn default() -> Self {
        Self { gamma: 1.7, xi: 1.0, delta: 1e-8 }
    }
}

impl Sr1Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) {
            return Err(invalid(format!("SR1 gamma must exceed 1, got {}", self.gamma)));
        }
        if !(self.xi > 0.0) {
            return Err(invalid(format!("SR1 fallback scale must be positive, got {}", self.xi)));
        }
        if !(self.delta >= 0.0) {
            return Err(invalid(format!("SR1 delta must be nonnegative, got {}", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Metric {
    tau: f64,
    sign: Rank1Sign,
    u: Vec<C64>,
}

impl Rank1Metric {
    /// `scale · I`
    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        assert!(scale > 0.0, "metric scale must be positive");
        Self { tau: scale, sign: Rank1Sign::None, u: vec![linalg::ZERO; dim] }
    }

    /// `τI + sign·uuᴴ`, checked for positive definiteness.
    pub fn new(tau: f64, sign: Rank1Sign, u: Vec<C64>) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(invalid(format!("metric tau must be positive, got {tau}")));
        }
        let metric = match sign {
            Rank1Sign::None => Self::scaled_identity(u.len(), tau),
            _ => Self { tau, sign, u },
        };
        metric.min_eigenvalue()?;
        Ok(metric)
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sign(&self) -> Rank1Sign {
        self.sign
    }

    pub fn u(&self) -> &[C64] {
        &self.u
    }

    /// The same metric with `u` replaced by `f(u)`; used to carry a metric
    /// through a unitary change of variables.
    pub fn map_u(&self, f: impl FnOnce(&[C64]) -> Vec<C64>) -> Self {
        let u = f(&self.u);
        assert_eq!(u.len(), self.u.len(), "map_u must preserve dimension");
        Self { tau: self.tau, sign: self.sign, u }
    }

    fn check_dim(&self, v: &[C64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(invalid(format!("vector of length {} for a metric of dim {}", v.len(), self.dim())));
        }
        Ok(())
    }

    /// `Bv = τv + sign·ũ(ũᴴv)`
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        self.check_dim(v)?;
        let mut out = linalg::scale(v, self.tau);
        if self.sign != Rank1Sign::None {
            let proj = linalg::dot(v, &self.u);
            linalg::axpy(proj * self.sign.as_f64(), &self.u, &mut out);
        }
        Ok(out)
    }

    /// `B⁻¹v` by Sherman–Morrison.
    pub fn apply_inverse(&self, v: &[C64]) -> Result<Vec<C64>> {
        self.check_dim(v)?;
        let mut out = linalg::scale(v, 1.0 / self.tau);
        if self.sign != Rank1Sign::None {
            self.min_eigenvalue()?;
            let s = self.sign.as_f64();
            let u_sq = linalg::norm_sq(&self.u);
            let denom = self.tau * self.tau * (1.0 + s * u_sq / self.tau);
            let proj = linalg::dot(v, &self.u);
            linalg::axpy(-proj * (s / denom), &self.u, &mut out);
        }
        Ok(out)
    }

    /// `‖v‖²_B = Re⟨Bv, v⟩`
    pub fn norm_sq(&self, v: &[C64]) -> Result<f64> {
        Ok(linalg::re_dot(&self.apply(v)?, v))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        match self.sign {
            Rank1Sign::None | Rank1Sign::Plus => Ok(self.tau),
            Rank1Sign::Minus => {
                let u_norm_sq = linalg::norm_sq(&self.u);
                let lam = self.tau - u_norm_sq;
                if lam > 0.0 {
                    Ok(lam)
                } else {
                    Err(Error::NotPositiveDefinite { tau: self.tau, u_norm_sq })
                }
            }
        }
    }

    pub fn max_eigenvalue(&self) -> f64 {
        match self.sign {
            Rank1Sign::Plus => self.tau + linalg::norm_sq(&self.u),
            _ => self.tau,
        }
    }
}

/// One complex SR1 update from the step `s = x_k − x_{k−1}` and the gradient
/// change `m = ∇f(x_k) − ∇f(x_{k−1})`.
pub fn sr1_update(s: &[C64], m: &[C64], params: &Sr1Params) -> Result<Rank1Metric> {
    params.validate()?;
    if s.len() != m.len() {
        return Err(invalid(format!("SR1 pair lengths differ: {} vs {}", s.len(), m.len())));
    }
    let fallback = Rank1Metric::scaled_identity(s.len(), params.xi);

    let curvature = linalg::re_dot(s, m);
    let m_sq = linalg::norm_sq(m);
    // τ < 0 (or undefined) branch
    if !(curvature > 0.0) || !(m_sq > 0.0) {
        return Ok(fallback);
    }
    let tau = params.gamma * m_sq / curvature;
    if !tau.is_finite() {
        return Ok(fallback);
    }

    let mut u = m.to_vec();
    linalg::axpy(C64::new(-tau, 0.0), s, &mut u);
    let us = linalg::dot(&u, s);
    if us.norm() <= params.delta * linalg::norm(s) * linalg::norm(&u) || us.re == 0.0 {
        return Ok(Rank1Metric::scaled_identity(s.len(), tau));
    }

    let sign = if us.re > 0.0 { Rank1Sign::Plus } else { Rank1Sign::Minus };
    let u_tilde = linalg::scale(&u, 1.0 / us.re.abs().sqrt());
    Ok(Rank1Metric { tau, sign, u: u_tilde })
}
