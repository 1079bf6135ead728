//! Synthetic ground truth and coil sensitivities.

use cqnpm::{ComplexImage, SensitivityMaps, C64};

use crate::BenchError;

/// `(intensity, semi-axis a, semi-axis b, center x, center y, rotation in degrees)`
/// for the modified Shepp–Logan head, in normalized `[-1, 1]²` coordinates.
const SHEPP_LOGAN: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

/// Normalized coordinate of pixel index `i`; the center pixel `size/2` maps to 0.
fn coord(i: usize, size: usize) -> f64 {
    (i as f64 - (size / 2) as f64) / (size / 2) as f64
}

/// Smooth phase with `|φ| ≤ π/2` on the grid and `φ = 0` at the center pixel.
fn phase(u: f64, v: f64) -> f64 {
    std::f64::consts::FRAC_PI_2 * (0.45 * u - 0.3 * v + 0.25 * u * v)
}

/// Shepp–Logan magnitude times a low-order polynomial phase, peak magnitude 1.
pub fn make_phantom(size: usize) -> Result<ComplexImage, BenchError> {
    if size < 8 || !size.is_power_of_two() {
        return Err(BenchError::Config(format!("phantom size must be a power of two >= 8, got {size}")));
    }
    let magnitude = |u: f64, v: f64| {
        SHEPP_LOGAN.iter().fold(0.0, |acc, &(rho, a, b, x0, y0, deg)| {
            let (s, c) = deg.to_radians().sin_cos();
            let (dx, dy) = (u - x0, v - y0);
            let xr = dx * c + dy * s;
            let yr = -dx * s + dy * c;
            if (xr / a).powi(2) + (yr / b).powi(2) <= 1.0 {
                acc + rho
            } else {
                acc
            }
        })
    };
    // rows run top to bottom, so flip the vertical axis
    let img = ComplexImage::from_fn(size, size, |r, c| {
        let (u, v) = (coord(c, size), -coord(r, size));
        C64::from_polar(magnitude(u, v).max(0.0), phase(u, v))
    });
    let peak = img.max_magnitude();
    let data = img.into_vec().into_iter().map(|p| p / peak).collect();
    Ok(ComplexImage::new(size, size, data)?)
}

/// Width of each Gaussian coil profile in normalized units.
const COIL_WIDTH: f64 = 0.9;

/// `n_coils` Gaussian receive profiles centred on the boundary circle at
/// equispaced angles, each with a gentle linear phase, jointly normalized to
/// unit sum-of-squares at every pixel.
pub fn make_sensitivities(size: usize, n_coils: usize) -> Result<SensitivityMaps, BenchError> {
    if n_coils == 0 {
        return Err(BenchError::Config("coil count must be positive".into()));
    }
    if size == 0 {
        return Err(BenchError::Config("image size must be positive".into()));
    }
    let half = (size / 2).max(1) as f64;
    let raw: Vec<Vec<C64>> = (0..n_coils)
        .map(|l| {
            let theta = 2.0 * std::f64::consts::PI * l as f64 / n_coils as f64;
            let (cy, cx) = theta.sin_cos();
            (0..size * size)
                .map(|p| {
                    let u = (p % size) as f64 / half - 1.0;
                    let v = 1.0 - (p / size) as f64 / half;
                    let d2 = (u - cx).powi(2) + (v - cy).powi(2);
                    let w = (-d2 / (2.0 * COIL_WIDTH * COIL_WIDTH)).exp();
                    C64::from_polar(w, theta + 0.3 * (u * cx + v * cy))
                })
                .collect()
        })
        .collect();
    let mut maps = raw.clone();
    for p in 0..size * size {
        let energy: f64 = raw.iter().map(|m| m[p].norm_sqr()).sum::<f64>().sqrt();
        if energy > 0.0 {
            for m in maps.iter_mut() {
                m[p] /= energy;
            }
        }
    }
    Ok(SensitivityMaps::new(size, size, maps)?)
}
