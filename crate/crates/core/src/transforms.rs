//! Sparsifying transforms and the dual machinery of the TV/wavelet regularizer.
//!
//! The finite-difference pair follows the convention
//! `P_{i,j} = X_{i,j} − X_{i+1,j}` (shape `(I−1)×J`) and
//! `Q_{i,j} = X_{i,j} − X_{i,j+1}` (shape `I×(J−1)`); [`finite_diff_adjoint`]
//! is its exact adjoint with zero boundary terms.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{invalid, Result};
use crate::linalg::{self, C64, ZERO};
use crate::operators::ComplexImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TvVariant {
    /// Isotropic TV; dual set with joint disk constraints on interior pairs.
    Iso,
    /// Anisotropic TV; dual set with independent disk constraints.
    L1,
}

impl std::str::FromStr for TvVariant {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iso" => Ok(Self::Iso),
            "l1" => Ok(Self::L1),
            other => Err(invalid(format!("unknown TV variant '{other}' (expected iso or l1)"))),
        }
    }
}

impl std::fmt::Display for TvVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Iso => "iso",
            Self::L1 => "l1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WaveletFamily {
    #[default]
    Haar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WaveletSpec {
    pub family: WaveletFamily,
    pub levels: usize,
}

impl WaveletSpec {
    pub fn haar(levels: usize) -> Self {
        Self { family: WaveletFamily::Haar, levels }
    }

    /// Deepest Haar decomposition allowed for an `rows × cols` image, capped
    /// at `cap` levels.
    pub fn deepest(rows: usize, cols: usize, cap: usize) -> Self {
        let mut levels = 0;
        while levels < cap && rows.is_multiple_of(1 << (levels + 1)) && cols.is_multiple_of(1 << (levels + 1)) {
            levels += 1;
        }
        Self::haar(levels.max(1))
    }

    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        if self.levels == 0 {
            return Err(invalid("wavelet levels must be positive"));
        }
        let block = 1usize
            .checked_shl(self.levels as u32)
            .filter(|b| *b <= rows.min(cols))
            .ok_or_else(|| invalid(format!("{} levels is too deep for {rows}x{cols}", self.levels)))?;
        if !rows.is_multiple_of(block) || !cols.is_multiple_of(block) {
            return Err(invalid(format!(
                "{rows}x{cols} is not divisible by 2^{} for the requested wavelet levels",
                self.levels
            )));
        }
        Ok(())
    }
}

/// Multi-level separable orthonormal Haar transform in Mallat layout.
#[derive(Debug, Clone, Copy)]
pub struct Haar2d {
    rows: usize,
    cols: usize,
    levels: usize,
}

impl Haar2d {
    pub fn new(rows: usize, cols: usize, spec: &WaveletSpec) -> Result<Self> {
        spec.validate(rows, cols)?;
        Ok(Self { rows, cols, levels: spec.levels })
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.len(), "wavelet input length");
        let mut out = x.to_vec();
        let mut scratch = vec![ZERO; self.rows.max(self.cols)];
        for level in 0..self.levels {
            let (h, w) = (self.rows >> level, self.cols >> level);
            for r in 0..h {
                let row = &mut out[r * self.cols..r * self.cols + w];
                analyze(row, &mut scratch[..w]);
            }
            for c in 0..w {
                analyze_strided(&mut out, c, self.cols, h, &mut scratch[..h]);
            }
        }
        out
    }

    /// Adjoint, which is also the inverse.
    pub fn adjoint(&self, t: &[C64]) -> Vec<C64> {
        assert_eq!(t.len(), self.len(), "wavelet coefficient length");
        let mut out = t.to_vec();
        let mut scratch = vec![ZERO; self.rows.max(self.cols)];
        for level in (0..self.levels).rev() {
            let (h, w) = (self.rows >> level, self.cols >> level);
            for c in 0..w {
                synthesize_strided(&mut out, c, self.cols, h, &mut scratch[..h]);
            }
            for r in 0..h {
                let row = &mut out[r * self.cols..r * self.cols + w];
                synthesize(row, &mut scratch[..w]);
            }
        }
        out
    }
}

fn analyze(x: &mut [C64], scratch: &mut [C64]) {
    let half = x.len() / 2;
    for k in 0..half {
        let (a, b) = (x[2 * k], x[2 * k + 1]);
        scratch[k] = (a + b) * FRAC_1_SQRT_2;
        scratch[half + k] = (a - b) * FRAC_1_SQRT_2;
    }
    x.copy_from_slice(scratch);
}

fn synthesize(x: &mut [C64], scratch: &mut [C64]) {
    let half = x.len() / 2;
    for k in 0..half {
        let (a, d) = (x[k], x[half + k]);
        scratch[2 * k] = (a + d) * FRAC_1_SQRT_2;
        scratch[2 * k + 1] = (a - d) * FRAC_1_SQRT_2;
    }
    x.copy_from_slice(scratch);
}

fn analyze_strided(data: &mut [C64], col: usize, stride: usize, len: usize, scratch: &mut [C64]) {
    let mut column: Vec<C64> = (0..len).map(|r| data[r * stride + col]).collect();
    analyze(&mut column, scratch);
    for (r, v) in column.into_iter().enumerate() {
        data[r * stride + col] = v;
    }
}

fn synthesize_strided(data: &mut [C64], col: usize, stride: usize, len: usize, scratch: &mut [C64]) {
    let mut column: Vec<C64> = (0..len).map(|r| data[r * stride + col]).collect();
    synthesize(&mut column, scratch);
    for (r, v) in column.into_iter().enumerate() {
        data[r * stride + col] = v;
    }
}

pub fn wavelet_forward(img: &ComplexImage, spec: &WaveletSpec) -> Result<Vec<C64>> {
    Ok(Haar2d::new(img.rows(), img.cols(), spec)?.forward(img.as_slice()))
}

pub fn wavelet_adjoint(
    coeffs: &[C64],
    rows: usize,
    cols: usize,
    spec: &WaveletSpec,
) -> Result<ComplexImage> {
    if coeffs.len() != rows * cols {
        return Err(invalid(format!(
            "{} wavelet coefficients for a {rows}x{cols} image",
            coeffs.len()
        )));
    }
    let data = Haar2d::new(rows, cols, spec)?.adjoint(coeffs);
    ComplexImage::new(rows, cols, data)
}

/// Discrete TV with zero Neumann boundary conditions on raw row-major data.
pub fn tv_raw(x: &[C64], rows: usize, cols: usize, variant: TvVariant) -> f64 {
    debug_assert_eq!(x.len(), rows * cols);
    let at = |r: usize, c: usize| x[r * cols + c];
    let mut total = 0.0;
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols.saturating_sub(1) {
            let dv = at(r, c) - at(r + 1, c);
            let dh = at(r, c) - at(r, c + 1);
            total += match variant {
                TvVariant::Iso => (dv.norm_sqr() + dh.norm_sqr()).sqrt(),
                TvVariant::L1 => dv.norm() + dh.norm(),
            };
        }
    }
    if cols >= 1 {
        let c = cols - 1;
        for r in 0..rows.saturating_sub(1) {
            total += (at(r, c) - at(r + 1, c)).norm();
        }
    }
    if rows >= 1 {
        let r = rows - 1;
        for c in 0..cols.saturating_sub(1) {
            total += (at(r, c) - at(r, c + 1)).norm();
        }
    }
    total
}

pub fn tv_value(img: &ComplexImage, variant: TvVariant) -> f64 {
    tv_raw(img.as_slice(), img.rows(), img.cols(), variant)
}

/// Vertical and horizontal difference grids for an `rows × cols` image.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPair {
    rows: usize,
    cols: usize,
    /// `(rows − 1) × cols`, row-major.
    pub p: Vec<C64>,
    /// `rows × (cols − 1)`, row-major.
    pub q: Vec<C64>,
}

impl DualPair {
    pub fn new(rows: usize, cols: usize, p: Vec<C64>, q: Vec<C64>) -> Result<Self> {
        let pair = Self { rows, cols, p, q };
        pair.check()?;
        Ok(pair)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            p: vec![ZERO; rows.saturating_sub(1) * cols],
            q: vec![ZERO; rows * cols.saturating_sub(1)],
        }
    }

    pub fn image_dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn check(&self) -> Result<()> {
        let (rows, cols) = (self.rows, self.cols);
        if rows == 0 || cols == 0 {
            return Err(invalid("dual pair image dims must be positive"));
        }
        if self.p.len() != (rows - 1) * cols || self.q.len() != rows * (cols - 1) {
            return Err(invalid(format!(
                "dual pair blocks ({}, {}) do not match a {rows}x{cols} image",
                self.p.len(),
                self.q.len()
            )));
        }
        Ok(())
    }

    pub fn norm_sq(&self) -> f64 {
        linalg::norm_sq(&self.p) + linalg::norm_sq(&self.q)
    }

    pub fn diff_norm_sq(&self, other: &Self) -> f64 {
        linalg::norm_sq(&linalg::sub(&self.p, &other.p)) + linalg::norm_sq(&linalg::sub(&self.q, &other.q))
    }

    /// `a·self + b·other`
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            p: linalg::lincomb(a, &self.p, b, &other.p),
            q: linalg::lincomb(a, &self.q, b, &other.q),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, p: linalg::scale(&self.p, s), q: linalg::scale(&self.q, s) }
    }

    /// `self + s·other`
    pub fn add_scaled(&self, s: f64, other: &Self) -> Self {
        self.lincomb(1.0, other, s)
    }

    /// Real inner product `Re⟨self, other⟩` over both blocks.
    pub fn re_dot(&self, other: &Self) -> f64 {
        linalg::re_dot(&self.p, &other.p) + linalg::re_dot(&self.q, &other.q)
    }
}

/// Forward differences of raw image data (the adjoint of [`diff_adjoint_raw`]).
pub fn diff_raw(x: &[C64], rows: usize, cols: usize) -> DualPair {
    debug_assert_eq!(x.len(), rows * cols);
    let mut pair = DualPair::zeros(rows, cols);
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols {
            pair.p[r * cols + c] = x[r * cols + c] - x[(r + 1) * cols + c];
        }
    }
    let qc = cols.saturating_sub(1);
    for r in 0..rows {
        for c in 0..qc {
            pair.q[r * qc + c] = x[r * cols + c] - x[r * cols + c + 1];
        }
    }
    pair
}

/// `(P, Q) ↦ P_{i,j} + Q_{i,j} − P_{i−1,j} − Q_{i,j−1}` with out-of-range terms zero.
pub fn diff_adjoint_raw(pair: &DualPair) -> Vec<C64> {
    let (rows, cols) = pair.image_dims();
    let qc = cols.saturating_sub(1);
    let mut out = vec![ZERO; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let mut v = ZERO;
            if r + 1 < rows {
                v += pair.p[r * cols + c];
            }
            if r >= 1 {
                v -= pair.p[(r - 1) * cols + c];
            }
            if c + 1 < cols {
                v += pair.q[r * qc + c];
            }
            if c >= 1 {
                v -= pair.q[r * qc + c - 1];
            }
            out[r * cols + c] = v;
        }
    }
    out
}

/// Finite differences `(P, Q)` of an image. A 1×1 image yields empty grids.
pub fn finite_diff(img: &ComplexImage) -> DualPair {
    diff_raw(img.as_slice(), img.rows(), img.cols())
}

/// Adjoint of [`finite_diff`].
pub fn finite_diff_adjoint(pair: &DualPair) -> Result<ComplexImage> {
    pair.check()?;
    let (rows, cols) = pair.image_dims();
    ComplexImage::new(rows, cols, diff_adjoint_raw(pair))
}

fn disk(z: C64) -> C64 {
    let m = z.norm();
    if m > 1.0 {
        z / m
    } else {
        z
    }
}

/// Componentwise projection onto the complex unit disk.
pub fn project_unit_disks(z: &[C64]) -> Vec<C64> {
    z.iter().map(|&v| disk(v)).collect()
}

/// Projection onto the dual feasible set of the chosen TV variant.
pub fn project_pair(pair: &DualPair, variant: TvVariant) -> Result<DualPair> {
    pair.check()?;
    Ok(project_pair_unchecked(pair, variant))
}

pub(crate) fn project_pair_unchecked(pair: &DualPair, variant: TvVariant) -> DualPair {
    let (rows, cols) = pair.image_dims();
    match variant {
        TvVariant::L1 => DualPair {
            rows,
            cols,
            p: project_unit_disks(&pair.p),
            q: project_unit_disks(&pair.q),
        },
        TvVariant::Iso => {
            let mut out = pair.clone();
            let qc = cols - 1;
            for r in 0..rows - 1 {
                for c in 0..qc {
                    let (pi, qi) = (r * cols + c, r * qc + c);
                    let scale = (pair.p[pi].norm_sqr() + pair.q[qi].norm_sqr()).sqrt().max(1.0);
                    out.p[pi] = pair.p[pi] / scale;
                    out.q[qi] = pair.q[qi] / scale;
                }
                // last column of P
                let pi = r * cols + cols - 1;
                out.p[pi] = disk(pair.p[pi]);
            }
            // last row of Q
            for c in 0..qc {
                let qi = (rows - 1) * qc + c;
                out.q[qi] = disk(pair.q[qi]);
            }
            out
        }
    }
}

/// Dual variables of the combined wavelet + TV regularizer.
///
/// `z` is empty when the wavelet weight is zero; `pair` is `None` when the TV
/// weight is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DualTriple {
    pub z: Vec<C64>,
    pub pair: Option<DualPair>,
}

impl DualTriple {
    pub fn zeros(n_coeffs: usize, rows: usize, cols: usize, with_pair: bool) -> Self {
        Self {
            z: vec![ZERO; n_coeffs],
            pair: with_pair.then(|| DualPair::zeros(rows, cols)),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        linalg::norm_sq(&self.z) + self.pair.as_ref().map_or(0.0, DualPair::norm_sq)
    }

    pub fn diff_norm(&self, other: &Self) -> f64 {
        let dz = linalg::norm_sq(&linalg::sub(&self.z, &other.z));
        let dp = match (&self.pair, &other.pair) {
            (Some(a), Some(b)) => a.diff_norm_sq(b),
            _ => 0.0,
        };
        (dz + dp).sqrt()
    }

    /// `a·self + b·other`
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Self {
        Self {
            z: linalg::lincomb(a, &self.z, b, &other.z),
            pair: match (&self.pair, &other.pair) {
                (Some(x), Some(y)) => Some(x.lincomb(a, y, b)),
                _ => None,
            },
        }
    }
}

/// `S^η(t) = Σ √(|t_n|² + η)` and its gradient `t_n / √(|t_n|² + η)`.
pub fn smoothed_l1(coeffs: &[C64], eta: f64) -> Result<(f64, Vec<C64>)> {
    if !(eta > 0.0) {
        return Err(invalid(format!("smoothing parameter must be positive, got {eta}")));
    }
    let mut value = 0.0;
    let grad = coeffs
        .iter()
        .map(|t| {
            let root = (t.norm_sqr() + eta).sqrt();
            value += root;
            t / root
        })
        .collect();
    Ok((value, grad))
}
