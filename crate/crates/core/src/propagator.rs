//! Free Schrödinger flow `S(t)` for `iu_t − Δu = 0`, its kernel, and the
//! vector field `L_k = x_k − 2it∂_k`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::Field;
use crate::grid::Grid;

/// Sign `σ` such that `S(t)` multiplies `f̂(ξ)` by `exp(iσ|ξ|²t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropagatorConvention {
    pub multiplier_sign: i8,
}

impl PropagatorConvention {
    /// Value fixed by [`calibrate_sign`] against the kernel quadrature.
    pub const FROZEN: PropagatorConvention = PropagatorConvention { multiplier_sign: 1 };
}

/// Largest quadrature refinement `kernel_convolve` accepts.
pub const MAX_KERNEL_OVERSAMPLING: usize = 64;

fn multiplier(sign: f64, t: f64, xi: [f64; 2]) -> Complex64 {
    Complex64::from_polar(1.0, sign * (xi[0] * xi[0] + xi[1] * xi[1]) * t)
}

fn apply_with_sign(sign: f64, t: f64, f: &Field) -> Field {
    if t == 0.0 {
        return f.clone();
    }
    f.map_spectrum(|xi, c| c * multiplier(sign, t, xi))
}

/// `S(t)f`. Any real `t`; unitary on every grid.
pub fn apply(t: f64, f: &Field) -> Field {
    apply_with_sign(PropagatorConvention::FROZEN.multiplier_sign as f64, t, f)
}

/// Kernel `E(t,x) = (−4πit)^{−n/2} exp(−i|x|²/4t)` on the principal branch.
pub fn kernel(t: f64, dim: usize, r2: f64) -> Complex64 {
    let base = Complex64::new(0.0, -4.0 * PI * t);
    let prefactor = match dim {
        1 => base.sqrt().inv(),
        _ => base.inv(),
    };
    prefactor * Complex64::from_polar(1.0, -r2 / (4.0 * t))
}

fn kernel_oversampling(grid: &Grid, t: f64) -> Result<usize> {
    // fine-lattice Nyquist must exceed the kernel's local frequency |x−y|/2|t|
    // (|x−y| ≤ L) plus the data bandwidth
    let l = grid.box_length();
    let needed = 1.0 + l * l / (2.0 * PI * grid.points_per_dim() as f64 * t.abs());
    let r = (needed.ceil() as usize).next_power_of_two();
    if r > MAX_KERNEL_OVERSAMPLING {
        return Err(LabError::param(
            "t",
            format!("|t| = {} needs {r}x kernel oversampling (max {MAX_KERNEL_OVERSAMPLING})", t.abs()),
        ));
    }
    Ok(r)
}

/// Trigonometric interpolant of `f` on a lattice `factor` times finer.
pub fn spectral_refine(f: &Field, factor: usize) -> Result<Field> {
    let coarse = *f.grid();
    let fine = coarse.refined(factor)?;
    let n = coarse.points_per_dim();
    let nf = fine.points_per_dim();
    let map = |m: usize| -> usize {
        let k = coarse.signed_mode(m);
        if k >= 0 {
            k as usize
        } else {
            (nf as i64 + k) as usize
        }
    };
    let mut spec = vec![Complex64::new(0.0, 0.0); fine.len()];
    for (idx, c) in f.spectrum().iter().enumerate() {
        let [i, j] = coarse.unflatten(idx);
        let target = match coarse.dim() {
            1 => map(i),
            _ => map(i) * nf + map(j),
        };
        spec[target] = *c;
    }
    debug_assert_eq!(n * factor, nf);
    Field::from_spectrum(fine, spec)
}

/// Direct quadrature of `E(t) * f` over the box (no periodic images).
///
/// Only meant as an oracle at low resolution. The data is spectrally
/// interpolated onto a finer lattice first so that the chirped kernel is
/// resolved.
pub fn kernel_convolve(t: f64, f: &Field) -> Result<Field> {
    if t == 0.0 || !t.is_finite() {
        return Err(LabError::param("t", "kernel is singular at t = 0"));
    }
    let grid = *f.grid();
    let r = kernel_oversampling(&grid, t)?;
    let fine_field = spectral_refine(f, r)?;
    let fine = *fine_field.grid();
    let hf = fine.cell_volume();
    let dim = grid.dim();
    let samples: Vec<([f64; 2], Complex64)> = (0..fine.len())
        .map(|idx| (fine.point(idx), fine_field.values()[idx]))
        .filter(|(_, v)| *v != Complex64::new(0.0, 0.0))
        .collect();
    let prefactor = kernel(t, dim, 0.0);
    let inv4t = 1.0 / (4.0 * t);
    let values = (0..grid.len())
        .map(|idx| {
            let x = grid.point(idx);
            let acc: Complex64 = samples
                .iter()
                .map(|(y, v)| {
                    let r2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
                    v * Complex64::from_polar(1.0, -r2 * inv4t)
                })
                .sum();
            prefactor * acc * hf
        })
        .collect();
    Field::from_values(grid, values)
}

/// Picks the multiplier sign that agrees with the kernel on `f`; returns the
/// sign together with both relative L² discrepancies `(matching, other)`.
pub fn calibrate_sign(t: f64, f: &Field) -> Result<(PropagatorConvention, f64, f64)> {
    let reference = kernel_convolve(t, f)?;
    let plus = apply_with_sign(1.0, t, f).relative_l2_distance(&reference)?;
    let minus = apply_with_sign(-1.0, t, f).relative_l2_distance(&reference)?;
    Ok(if plus <= minus {
        (PropagatorConvention { multiplier_sign: 1 }, plus, minus)
    } else {
        (PropagatorConvention { multiplier_sign: -1 }, minus, plus)
    })
}

/// `L_k(t) f = x_k f − 2it ∂_k f`, derivative taken spectrally, `x_k` box-centred.
pub fn l_operator(t: f64, f: &Field, axis: usize) -> Result<Field> {
    if axis >= f.grid().dim() {
        return Err(LabError::param(
            "axis",
            format!("axis {axis} out of range for a {}-D grid", f.grid().dim()),
        ));
    }
    // −2it·(iξ_k) = 2tξ_k
    let derivative_part = f.map_spectrum(|xi, c| c * (2.0 * t * xi[axis]));
    let position_part = f.map_values(|x, v| v * x[axis]);
    position_part.add(&derivative_part)
}

/// `L^α u` for a multi-index `α` (applied right to left, axes commute).
pub fn l_power(t: f64, f: &Field, alpha: &[usize]) -> Result<Field> {
    let mut out = f.clone();
    for (axis, &power) in alpha.iter().enumerate() {
        for _ in 0..power {
            out = l_operator(t, &out, axis)?;
        }
    }
    Ok(out)
}
