//! Continuum-normalized discrete Fourier transform on a [`Grid`].
//!
//! Forward: `f̂(ξ_k) = h^n Σ_j f(x_j) e^{-i x_j·ξ_k}`, a Riemann sum for
//! `∫ f(x) e^{-ix·ξ} dx`. Inverse: `f(x_j) = L^{-n} Σ_k f̂(ξ_k) e^{i x_j·ξ_k}`.
//! With this pair Parseval reads `h^n Σ|f|² = L^{-n} Σ|f̂|²`. Because the box
//! starts at `-L/2`, the kernel picks up a factor `(-1)^k` per axis relative
//! to the plain FFT.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::grid::Grid;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

fn transform_in_place(grid: &Grid, data: &mut [Complex64], direction: FftDirection) {
    let n = grid.points_per_dim();
    let fft = plan(n, direction);
    match grid.dim() {
        1 => fft.process(data),
        _ => {
            // rows are contiguous
            fft.process(data);
            let mut column = vec![Complex64::new(0.0, 0.0); n];
            for c in 0..n {
                for r in 0..n {
                    column[r] = data[r * n + c];
                }
                fft.process(&mut column);
                for r in 0..n {
                    data[r * n + c] = column[r];
                }
            }
        }
    }
}

fn parity_sign(grid: &Grid, idx: usize) -> f64 {
    let [i, j] = grid.unflatten(idx);
    if (i + j) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn forward(grid: &Grid, values: &[Complex64]) -> Vec<Complex64> {
    let mut data = values.to_vec();
    transform_in_place(grid, &mut data, FftDirection::Forward);
    let scale = grid.cell_volume();
    for (idx, c) in data.iter_mut().enumerate() {
        *c *= scale * parity_sign(grid, idx);
    }
    data
}

pub fn inverse(grid: &Grid, spectrum: &[Complex64]) -> Vec<Complex64> {
    let scale = grid.box_length().powi(grid.dim() as i32).recip();
    let mut data: Vec<Complex64> = spectrum
        .iter()
        .enumerate()
        .map(|(idx, c)| c * (scale * parity_sign(grid, idx)))
        .collect();
    transform_in_place(grid, &mut data, FftDirection::Inverse);
    data
}
