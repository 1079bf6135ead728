//! Multi-coil non-Cartesian MRI forward model.
//!
//! `A = [A_1; …; A_L]` with `A_l = F S_l`, where `S_l` is a pointwise coil
//! sensitivity and `F` an exact (slow) non-uniform DFT evaluated at the
//! trajectory points. There is no separate sampling mask: the trajectory lists
//! exactly the acquired samples.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::linalg::{self, C64, ZERO};

/// Row-major complex image.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexImage {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!("image dims must be positive, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "image data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "image dims must be positive");
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(rows > 0 && cols > 0, "image dims must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.data)
    }

    pub fn max_magnitude(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

/// Ordered k-space sample locations in radians per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<[f64; 2]>,
}

/// Coordinates may touch +π (the spiral's last sample) up to rounding.
const COORD_SLACK: f64 = 1e-12;

impl Trajectory {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("trajectory must contain at least one point"));
        }
        for (m, p) in points.iter().enumerate() {
            for &k in p {
                if !(-PI - COORD_SLACK..=PI + COORD_SLACK).contains(&k) {
                    return Err(invalid(format!("trajectory point {m} = {p:?} outside [-pi, pi]")));
                }
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Equispaced-angle radial spokes through the k-space origin.
///
/// Spoke `s` has angle `s·π/n_spokes`; along a spoke the radii are
/// `−π + 2π·t/n_readout` for `t = 0..n_readout`.
pub fn make_radial_trajectory(n_spokes: usize, n_readout: usize) -> Result<Trajectory> {
    if n_spokes == 0 || n_readout < 2 {
        return Err(invalid(format!(
            "radial trajectory needs n_spokes >= 1 and n_readout >= 2, got ({n_spokes}, {n_readout})"
        )));
    }
    let mut points = Vec::with_capacity(n_spokes * n_readout);
    for s in 0..n_spokes {
        let theta = s as f64 * PI / n_spokes as f64;
        let (sin, cos) = theta.sin_cos();
        for t in 0..n_readout {
            let r = -PI + 2.0 * PI * t as f64 / n_readout as f64;
            points.push([r * cos, r * sin]);
        }
    }
    Trajectory::new(points)
}

/// Number of turns of each Archimedean spiral interleave.
pub const SPIRAL_TURNS: f64 = 8.0;

/// Rotated Archimedean spiral interleaves reaching radius π at the last sample.
pub fn make_spiral_trajectory(n_interleaves: usize, n_readout: usize) -> Result<Trajectory> {
    if n_interleaves == 0 || n_readout < 2 {
        return Err(invalid(format!(
            "spiral trajectory needs n_interleaves >= 1 and n_readout >= 2, got ({n_interleaves}, {n_readout})"
        )));
    }
    let last = (n_readout - 1) as f64;
    let mut points = Vec::with_capacity(n_interleaves * n_readout);
    for m in 0..n_interleaves {
        let offset = 2.0 * PI * m as f64 / n_interleaves as f64;
        for t in 0..n_readout {
            let frac = t as f64 / last;
            let r = PI * frac;
            let phi = 2.0 * PI * SPIRAL_TURNS * frac + offset;
            let (sin, cos) = phi.sin_cos();
            points.push([r * cos, r * sin]);
        }
    }
    Trajectory::new(points)
}

/// Exact non-uniform DFT with precomputed separable phase tables.
///
/// `sample_m = (1/√(IJ)) Σ_{r,c} x[r,c]·exp(−i(k_x·c + k_y·r))`.
#[derive(Debug, Clone)]
pub struct Nudft {
    rows: usize,
    cols: usize,
    n_points: usize,
    // exp(-i k_x c), n_points x cols
    col_phase: Vec<C64>,
    // exp(-i k_y r), n_points x rows
    row_phase: Vec<C64>,
    scale: f64,
}

impl Nudft {
    pub fn new(traj: &Trajectory, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid(format!("image dims must be positive, got {rows}x{cols}")));
        }
        let n_points = traj.len();
        let mut col_phase = Vec::with_capacity(n_points * cols);
        let mut row_phase = Vec::with_capacity(n_points * rows);
        for &[kx, ky] in traj.points() {
            col_phase.extend((0..cols).map(|c| C64::from_polar(1.0, -kx * c as f64)));
            row_phase.extend((0..rows).map(|r| C64::from_polar(1.0, -ky * r as f64)));
        }
        Ok(Self {
            rows,
            cols,
            n_points,
            col_phase,
            row_phase,
            scale: 1.0 / ((rows * cols) as f64).sqrt(),
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn forward(&self, img: &[C64]) -> Vec<C64> {
        assert_eq!(img.len(), self.rows * self.cols, "nudft input length");
        let (rows, cols) = (self.rows, self.cols);
        (0..self.n_points)
            .into_par_iter()
            .map(|m| {
                let cp = &self.col_phase[m * cols..(m + 1) * cols];
                let rp = &self.row_phase[m * rows..(m + 1) * rows];
                let mut acc = ZERO;
                for (r, row) in img.chunks_exact(cols).enumerate() {
                    let inner: C64 = row.iter().zip(cp).map(|(x, e)| x * e).sum();
                    acc += rp[r] * inner;
                }
                acc * self.scale
            })
            .collect()
    }

    pub fn adjoint(&self, samples: &[C64]) -> Vec<C64> {
        assert_eq!(samples.len(), self.n_points, "nudft adjoint input length");
        let (rows, cols) = (self.rows, self.cols);
        let mut out = vec![ZERO; rows * cols];
        out.par_chunks_exact_mut(cols).enumerate().for_each(|(r, row)| {
            for (m, s) in samples.iter().enumerate() {
                let weight = s * self.row_phase[m * rows + r].conj();
                let cp = &self.col_phase[m * cols..(m + 1) * cols];
                for (o, e) in row.iter_mut().zip(cp) {
                    *o += weight * e.conj();
                }
            }
            row.iter_mut().for_each(|o| *o *= self.scale);
        });
        out
    }
}

pub fn nudft_forward(img: &ComplexImage, traj: &Trajectory) -> Vec<C64> {
    Nudft::new(traj, img.rows, img.cols)
        .expect("ComplexImage dims are positive")
        .forward(img.as_slice())
}

pub fn nudft_adjoint(
    samples: &[C64],
    traj: &Trajectory,
    rows: usize,
    cols: usize,
) -> Result<ComplexImage> {
    if samples.len() != traj.len() {
        return Err(invalid(format!(
            "{} samples for a trajectory of {} points",
            samples.len(),
            traj.len()
        )));
    }
    let data = Nudft::new(traj, rows, cols)?.adjoint(samples);
    ComplexImage::new(rows, cols, data)
}

/// Per-coil sensitivity grids with `Σ_l |S_l|² ≤ 1` pointwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMaps {
    rows: usize,
    cols: usize,
    maps: Vec<Vec<C64>>,
}

impl SensitivityMaps {
    pub fn new(rows: usize, cols: usize, maps: Vec<Vec<C64>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("sensitivity dims must be positive"));
        }
        if maps.is_empty() {
            return Err(invalid("at least one coil map is required"));
        }
        if let Some(bad) = maps.iter().position(|m| m.len() != rows * cols) {
            return Err(invalid(format!("coil map {bad} does not match {rows}x{cols}")));
        }
        for p in 0..rows * cols {
            let energy: f64 = maps.iter().map(|m| m[p].norm_sqr()).sum();
            if energy > 1.0 + 1e-12 {
                return Err(invalid(format!("coil energy {energy} exceeds 1 at pixel {p}")));
            }
        }
        Ok(Self { rows, cols, maps })
    }

    /// A single coil with unit sensitivity everywhere.
    pub fn uniform(rows: usize, cols: usize) -> Self {
        Self { rows, cols, maps: vec![vec![C64::new(1.0, 0.0); rows * cols]] }
    }

    pub fn n_coils(&self) -> usize {
        self.maps.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn coil(&self, l: usize) -> &[C64] {
        &self.maps[l]
    }
}

/// Measured k-space samples, coil-major blocks of `points_per_coil`.
#[derive(Debug, Clone, PartialEq)]
pub struct KSpaceData {
    pub samples: Vec<C64>,
    pub points_per_coil: usize,
}

impl KSpaceData {
    pub fn coil_block(&self, l: usize) -> &[C64] {
        &self.samples[l * self.points_per_coil..(l + 1) * self.points_per_coil]
    }

    pub fn n_coils(&self) -> usize {
        self.samples.len() / self.points_per_coil
    }
}

#[derive(Debug, Clone)]
pub struct ForwardModel {
    trajectory: Trajectory,
    maps: SensitivityMaps,
    nudft: Nudft,
}

impl ForwardModel {
    pub fn new(trajectory: Trajectory, maps: SensitivityMaps) -> Result<Self> {
        let (rows, cols) = maps.dims();
        let nudft = Nudft::new(&trajectory, rows, cols)?;
        Ok(Self { trajectory, maps, nudft })
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn maps(&self) -> &SensitivityMaps {
        &self.maps
    }

    pub fn dims(&self) -> (usize, usize) {
        self.maps.dims()
    }

    /// Image length `N = I·J`.
    pub fn n_pixels(&self) -> usize {
        self.maps.rows * self.maps.cols
    }

    /// Data length `M·L`.
    pub fn n_samples(&self) -> usize {
        self.trajectory.len() * self.maps.n_coils()
    }

    /// `Ax` on a raw pixel vector.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.n_pixels(), "forward model input length");
        let mut out = Vec::with_capacity(self.n_samples());
        let mut weighted = vec![ZERO; x.len()];
        for l in 0..self.maps.n_coils() {
            for ((w, xi), s) in weighted.iter_mut().zip(x).zip(self.maps.coil(l)) {
                *w = s * xi;
            }
            out.extend(self.nudft.forward(&weighted));
        }
        out
    }

    /// `Aᴴy` on a raw data vector.
    pub fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
        assert_eq!(y.len(), self.n_samples(), "adjoint input length");
        let m = self.trajectory.len();
        let mut out = vec![ZERO; self.n_pixels()];
        for (l, block) in y.chunks_exact(m).enumerate() {
            let back = self.nudft.adjoint(block);
            for ((o, b), s) in out.iter_mut().zip(&back).zip(self.maps.coil(l)) {
                *o += s.conj() * b;
            }
        }
        out
    }

    /// `AᴴAx`
    pub fn gram(&self, x: &[C64]) -> Vec<C64> {
        self.apply_adjoint(&self.apply(x))
    }

    /// `½‖Ax − y‖²` and its gradient `Aᴴ(Ax − y)` on raw vectors.
    pub fn fidelity(&self, x: &[C64], y: &[C64]) -> (f64, Vec<C64>) {
        let residual = linalg::sub(&self.apply(x), y);
        let value = 0.5 * linalg::norm_sq(&residual);
        (value, self.apply_adjoint(&residual))
    }

    /// Largest eigenvalue of `AᴴA` by power iteration.
    pub fn gram_norm(&self, iterations: usize) -> f64 {
        linalg::power_iteration(|v| self.gram(v), self.n_pixels(), iterations, 0x5eed)
    }

    fn check_image(&self, img: &ComplexImage) -> Result<()> {
        if img.dims() != self.dims() {
            return Err(invalid(format!(
                "image is {:?} but the model expects {:?}",
                img.dims(),
                self.dims()
            )));
        }
        Ok(())
    }

    fn check_data(&self, data: &KSpaceData) -> Result<()> {
        if data.samples.len() != self.n_samples() || data.points_per_coil != self.trajectory.len() {
            return Err(invalid(format!(
                "k-space data has {} samples ({} per coil), model expects {} ({} per coil)",
                data.samples.len(),
                data.points_per_coil,
                self.n_samples(),
                self.trajectory.len()
            )));
        }
        Ok(())
    }
}

pub fn forward(model: &ForwardModel, img: &ComplexImage) -> Result<KSpaceData> {
    model.check_image(img)?;
    Ok(KSpaceData {
        samples: model.apply(img.as_slice()),
        points_per_coil: model.trajectory.len(),
    })
}

pub fn adjoint(model: &ForwardModel, data: &KSpaceData) -> Result<ComplexImage> {
    model.check_data(data)?;
    let (rows, cols) = model.dims();
    ComplexImage::new(rows, cols, model.apply_adjoint(&data.samples))
}

/// Data fidelity `½‖Ax − y‖²` and its gradient `Aᴴ(Ax − y)`.
///
/// The gradient is the real gradient with respect to the stacked real and
/// imaginary parts, so the directional derivative along `d` is `Re⟨grad, d⟩`.
pub fn fidelity_grad(
    model: &ForwardModel,
    img: &ComplexImage,
    data: &KSpaceData,
) -> Result<(f64, ComplexImage)> {
    model.check_image(img)?;
    model.check_data(data)?;
    let (value, grad) = model.fidelity(img.as_slice(), &data.samples);
    let (rows, cols) = model.dims();
    Ok((value, ComplexImage::new(rows, cols, grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
        (0..n).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
    }

    fn random_maps(rng: &mut ChaCha8Rng, rows: usize, cols: usize, coils: usize) -> SensitivityMaps {
        let raw: Vec<Vec<C64>> = (0..coils).map(|_| random_vec(rng, rows * cols)).collect();
        let mut maps = raw.clone();
        for p in 0..rows * cols {
            let e: f64 = raw.iter().map(|m| m[p].norm_sqr()).sum::<f64>().sqrt();
            for m in maps.iter_mut() {
                m[p] /= e;
            }
        }
        SensitivityMaps::new(rows, cols, maps).unwrap()
    }

    #[test]
    fn radial_single_spoke() {
        let t = make_radial_trajectory(1, 2).unwrap();
        let p = t.points();
        assert_eq!(p.len(), 2);
        assert!((p[0][0] + PI).abs() < 1e-15 && p[0][1].abs() < 1e-15);
        assert!(p[1][0].abs() < 1e-15 && p[1][1].abs() < 1e-15);
    }

    #[test]
    fn radial_two_spokes_four_readouts() {
        let t = make_radial_trajectory(2, 4).unwrap();
        let radii = [-PI, -PI / 2.0, 0.0, PI / 2.0];
        assert_eq!(t.len(), 8);
        for (i, r) in radii.iter().enumerate() {
            // spoke 0 lies on the k_x axis, spoke 1 on the k_y axis
            let a = t.points()[i];
            let b = t.points()[4 + i];
            assert!((a[0] - r).abs() < 1e-14 && a[1].abs() < 1e-14);
            assert!(b[0].abs() < 1e-14 && (b[1] - r).abs() < 1e-14);
        }
    }

    #[test]
    fn radial_paper_size() {
        let t = make_radial_trajectory(96, 512).unwrap();
        assert_eq!(t.len(), 49152);
        assert!(t.points().iter().all(|p| p[0].hypot(p[1]) <= PI + 1e-12));
    }

    #[test]
    fn spiral_endpoints() {
        let t = make_spiral_trajectory(1, 2).unwrap();
        assert_eq!(t.points()[0], [0.0, 0.0]);
        assert!((t.points()[1][0] - PI).abs() < 1e-12);
        assert!(t.points()[1][1].abs() < 1e-12);

        let t = make_spiral_trajectory(32, 1688).unwrap();
        assert_eq!(t.len(), 54016);
        let max = t.points().iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
        assert!((max - PI).abs() < 1e-12);
        for m in 0..32 {
            assert_eq!(t.points()[m * 1688], [0.0, 0.0]);
        }
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(make_radial_trajectory(0, 4).is_err());
        assert!(make_radial_trajectory(3, 1).is_err());
        assert!(make_spiral_trajectory(0, 4).is_err());
        assert!(make_spiral_trajectory(2, 0).is_err());
    }

    #[test]
    fn nudft_delta_and_two_pixel_cases() {
        let traj = make_radial_trajectory(3, 5).unwrap();
        let mut img = ComplexImage::zeros(4, 3);
        img.set(0, 0, c(1.0, 0.0));
        for s in nudft_forward(&img, &traj) {
            assert!((s - c(1.0 / 12f64.sqrt(), 0.0)).norm() < 1e-14);
        }

        // 2x1 image (a, b) sampled at (k_x, k_y) = (0, π)
        let (a, b) = (c(0.3, -1.0), c(2.0, 0.5));
        let img = ComplexImage::new(2, 1, vec![a, b]).unwrap();
        let traj = Trajectory::new(vec![[0.0, PI]]).unwrap();
        let s = nudft_forward(&img, &traj)[0];
        assert!((s - (a - b) / 2f64.sqrt()).norm() < 1e-14);

        let zero = ComplexImage::zeros(4, 4);
        assert!(nudft_forward(&zero, &traj).iter().all(|s| *s == ZERO));
    }

    #[test]
    fn nudft_adjoint_cases() {
        let traj = Trajectory::new(vec![[0.0, 0.0]]).unwrap();
        let img = nudft_adjoint(&[c(1.0, 0.0)], &traj, 3, 5).unwrap();
        for p in img.as_slice() {
            assert!((p - c(1.0 / 15f64.sqrt(), 0.0)).norm() < 1e-14);
        }
        let zero = nudft_adjoint(&[ZERO], &traj, 3, 5).unwrap();
        assert!(zero.as_slice().iter().all(|p| *p == ZERO));
        assert!(nudft_adjoint(&[ZERO, ZERO], &traj, 3, 5).is_err());
    }

    #[test]
    fn nudft_adjoint_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let traj = make_spiral_trajectory(3, 17).unwrap();
        let op = Nudft::new(&traj, 6, 5).unwrap();
        for _ in 0..20 {
            let x = random_vec(&mut rng, 30);
            let s = random_vec(&mut rng, traj.len());
            let lhs = dot(&op.forward(&x), &s);
            let rhs = dot(&x, &op.adjoint(&s));
            assert!((lhs - rhs).norm() <= 1e-10 * norm(&x) * norm(&s));
        }
    }

    #[test]
    fn forward_unit_coil_matches_nudft() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let traj = make_radial_trajectory(4, 8).unwrap();
        let model = ForwardModel::new(traj.clone(), SensitivityMaps::uniform(8, 8)).unwrap();
        let img = ComplexImage::new(8, 8, random_vec(&mut rng, 64)).unwrap();
        let data = forward(&model, &img).unwrap();
        assert_eq!(data.samples, nudft_forward(&img, &traj));
    }

    #[test]
    fn forward_zero_coil_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let traj = make_radial_trajectory(2, 6).unwrap();
        let maps = SensitivityMaps::new(
            4,
            4,
            vec![vec![c(0.6, 0.0); 16], vec![ZERO; 16]],
        )
        .unwrap();
        let model = ForwardModel::new(traj, maps).unwrap();
        let img = ComplexImage::new(4, 4, random_vec(&mut rng, 16)).unwrap();
        let data = forward(&model, &img).unwrap();
        assert_eq!(data.n_coils(), 2);
        assert!(data.coil_block(1).iter().all(|s| *s == ZERO));
        assert!(data.coil_block(0).iter().any(|s| s.norm() > 0.0));

        let zero = forward(&model, &ComplexImage::zeros(4, 4)).unwrap();
        assert!(zero.samples.iter().all(|s| *s == ZERO));
        assert!(forward(&model, &ComplexImage::zeros(4, 5)).is_err());
    }

    #[test]
    fn coil_adjoint_identity_and_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let traj = make_radial_trajectory(3, 8).unwrap();
        let maps = random_maps(&mut rng, 6, 6, 3);
        let model = ForwardModel::new(traj, maps).unwrap();
        for _ in 0..100 {
            let x = random_vec(&mut rng, 36);
            let s = random_vec(&mut rng, model.n_samples());
            let lhs = dot(&model.apply(&x), &s);
            let rhs = dot(&x, &model.apply_adjoint(&s));
            assert!((lhs - rhs).norm() <= 1e-10 * norm(&x) * norm(&s));
        }
        let zero = KSpaceData { samples: vec![ZERO; model.n_samples()], points_per_coil: 24 };
        assert!(adjoint(&model, &zero).unwrap().as_slice().iter().all(|p| *p == ZERO));
        let short = KSpaceData { samples: vec![ZERO; 5], points_per_coil: 5 };
        assert!(adjoint(&model, &short).is_err());

        let traj = Trajectory::new(vec![[0.0, 0.0]]).unwrap();
        let unit = ForwardModel::new(traj, SensitivityMaps::uniform(2, 2)).unwrap();
        let back = adjoint(&unit, &KSpaceData { samples: vec![c(1.0, 0.0)], points_per_coil: 1 }).unwrap();
        assert!(back.as_slice().iter().all(|p| (p - c(0.5, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn gram_quadratic_form_is_real() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = ForwardModel::new(make_spiral_trajectory(2, 20).unwrap(), random_maps(&mut rng, 5, 5, 2))
            .unwrap();
        for _ in 0..10 {
            let s = random_vec(&mut rng, 25);
            let q = dot(&s, &model.gram(&s));
            assert!(q.im.abs() <= 1e-12 * q.re.abs().max(1.0));
        }
    }

    #[test]
    fn fidelity_special_points_and_directional_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let model = ForwardModel::new(make_radial_trajectory(4, 10).unwrap(), random_maps(&mut rng, 6, 6, 2))
            .unwrap();
        let truth = ComplexImage::new(6, 6, random_vec(&mut rng, 36)).unwrap();
        let data = forward(&model, &truth).unwrap();

        let (v, g) = fidelity_grad(&model, &truth, &data).unwrap();
        assert!(v < 1e-25 && g.norm() < 1e-12);

        let (v0, g0) = fidelity_grad(&model, &ComplexImage::zeros(6, 6), &data).unwrap();
        assert!((v0 - 0.5 * linalg::norm_sq(&data.samples)).abs() < 1e-12);
        let neg_aty = adjoint(&model, &data).unwrap();
        for (a, b) in g0.as_slice().iter().zip(neg_aty.as_slice()) {
            assert!((a + b).norm() < 1e-12);
        }

        // central differences over the 2N real coordinates
        let x = ComplexImage::new(6, 6, random_vec(&mut rng, 36)).unwrap();
        let d = random_vec(&mut rng, 36);
        let (_, g) = fidelity_grad(&model, &x, &data).unwrap();
        let h = 1e-6;
        let shifted = |t: f64| {
            let xs: Vec<C64> = x.as_slice().iter().zip(&d).map(|(a, b)| a + b * t).collect();
            model.fidelity(&xs, &data.samples).0
        };
        let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
        let analytic = linalg::re_dot(g.as_slice(), &d);
        assert!((fd - analytic).abs() <= 1e-5 * analytic.abs());
    }

    #[test]
    fn sensitivity_energy_validated() {
        assert!(SensitivityMaps::new(1, 2, vec![vec![c(1.0, 0.0), c(1.0, 1e-3)]]).is_err());
        assert!(SensitivityMaps::new(1, 2, vec![vec![c(1.0, 0.0)]]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn nudft_is_linear(seed in 0u64..1000, alpha_re in -2.0..2.0f64, beta_im in -2.0..2.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let traj = make_radial_trajectory(2, 7).unwrap();
            let op = Nudft::new(&traj, 4, 3).unwrap();
            let x = random_vec(&mut rng, 12);
            let z = random_vec(&mut rng, 12);
            let (a, b) = (c(alpha_re, 0.5), c(-0.25, beta_im));
            let combo: Vec<C64> = x.iter().zip(&z).map(|(p, q)| a * p + b * q).collect();
            let lhs = op.forward(&combo);
            let (fx, fz) = (op.forward(&x), op.forward(&z));
            for ((l, p), q) in lhs.iter().zip(&fx).zip(&fz) {
                proptest::prop_assert!((l - (a * p + b * q)).norm() < 1e-12);
            }
        }
    }
}
