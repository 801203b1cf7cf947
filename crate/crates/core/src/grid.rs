//! Uniform periodic lattice standing in for R^n.
//!
//! Sample `i` along an axis sits at `x_i = -L/2 + i·h` with `h = L/N`, so the
//! box is centred on the origin. Spectral arrays use the natural FFT order:
//! index `m` carries the signed mode `k = m` for `m < N/2` and `k = m - N`
//! otherwise, with wavenumber `ξ_k = 2πk/L`. Multi-dimensional arrays are
//! row-major with the last axis contiguous.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    dim: usize,
    points_per_dim: usize,
    box_length: f64,
}

impl Grid {
    pub fn new(dim: usize, points_per_dim: usize, box_length: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(LabError::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if !points_per_dim.is_power_of_two() {
            return Err(LabError::InvalidGrid(
                "points_per_dim must be a power of two".into(),
            ));
        }
        if points_per_dim < MIN_POINTS {
            return Err(LabError::InvalidGrid(format!(
                "points_per_dim must be at least {MIN_POINTS}, got {points_per_dim}"
            )));
        }
        if !(box_length > 0.0 && box_length.is_finite()) {
            return Err(LabError::InvalidGrid(format!(
                "box_length must be positive and finite, got {box_length}"
            )));
        }
        Ok(Grid {
            dim,
            points_per_dim,
            box_length,
        })
    }

    /// Re-checks the invariants, for grids that arrived through deserialization.
    pub fn validated(self) -> Result<Self> {
        Grid::new(self.dim, self.points_per_dim, self.box_length)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.points_per_dim as f64
    }

    /// Quadrature weight of one lattice cell, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Total number of samples, `N^dim`.
    pub fn len(&self) -> usize {
        self.points_per_dim.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.box_length + i as f64 * self.spacing()
    }

    pub fn signed_mode(&self, m: usize) -> i64 {
        let n = self.points_per_dim as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    pub fn wavenumber(&self, m: usize) -> f64 {
        self.frequency_step() * self.signed_mode(m) as f64
    }

    /// Lattice spacing in frequency, `2π/L`.
    pub fn frequency_step(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Modulus of the single unpaired mode `k = -N/2`.
    pub fn nyquist(&self) -> f64 {
        PI * self.points_per_dim as f64 / self.box_length
    }

    /// Modes with `|k| < N/4` on every axis survive the half-Nyquist rule;
    /// this returns that bound on `|ξ|` per axis (exclusive).
    pub fn dealias_cutoff(&self) -> f64 {
        0.5 * self.nyquist()
    }

    pub fn is_dealiased_mode(&self, m: usize) -> bool {
        let quarter = (self.points_per_dim / 4) as i64;
        self.signed_mode(m).abs() < quarter
    }

    /// Ordered frequency set `ξ_k`, `k = -N/2 .. N/2-1` (ascending).
    pub fn frequencies(&self) -> Vec<f64> {
        let half = (self.points_per_dim / 2) as i64;
        (-half..half)
            .map(|k| k as f64 * self.frequency_step())
            .collect()
    }

    /// Axis indices of a flat sample index.
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.points_per_dim, idx % self.points_per_dim],
        }
    }

    /// Physical coordinates of a flat sample index (unused axis is 0).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.unflatten(idx);
        match self.dim {
            1 => [self.coordinate(i), 0.0],
            _ => [self.coordinate(i), self.coordinate(j)],
        }
    }

    /// Wave vector of a flat spectral index (unused axis is 0).
    pub fn wave_vector(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.unflatten(idx);
        match self.dim {
            1 => [self.wavenumber(i), 0.0],
            _ => [self.wavenumber(i), self.wavenumber(j)],
        }
    }

    pub fn is_dealiased(&self, idx: usize) -> bool {
        let [i, j] = self.unflatten(idx);
        match self.dim {
            1 => self.is_dealiased_mode(i),
            _ => self.is_dealiased_mode(i) && self.is_dealiased_mode(j),
        }
    }

    /// `|ξ|²` for every spectral index, in storage order.
    pub fn wave_modulus_sq(&self) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let [a, b] = self.wave_vector(idx);
                a * a + b * b
            })
            .collect()
    }

    /// Same lattice with the box scaled by `factor` (N unchanged).
    pub fn dilated(&self, factor: f64) -> Result<Grid> {
        Grid::new(self.dim, self.points_per_dim, self.box_length * factor)
    }

    /// Same box with `factor` times as many points per axis.
    pub fn refined(&self, factor: usize) -> Result<Grid> {
        Grid::new(self.dim, self.points_per_dim * factor, self.box_length)
    }
}

pub fn make_grid(dim: usize, points_per_dim: usize, box_length: f64) -> Result<Grid> {
    Grid::new(dim, points_per_dim, box_length)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_box_has_integer_frequencies() {
        let g = make_grid(1, 16, 2.0 * PI).unwrap();
        assert!((g.spacing() - 2.0 * PI / 16.0).abs() < 1e-15);
        let freqs = g.frequencies();
        assert_eq!(freqs.len(), 16);
        for (k, xi) in (-8..8).zip(&freqs) {
            assert!((xi - k as f64).abs() < 1e-12, "{k} {xi}");
        }
    }

    #[test]
    fn two_dim_size() {
        let g = make_grid(2, 32, 40.0).unwrap();
        assert_eq!(g.len(), 1024);
        assert_eq!(g.unflatten(33), [1, 1]);
    }

    #[test]
    fn rejects_bad_shapes() {
        let err = make_grid(1, 17, 10.0).unwrap_err();
        assert!(err.to_string().contains("points_per_dim must be a power of two"));
        assert!(make_grid(3, 16, 1.0).is_err());
        assert!(make_grid(1, 8, 1.0).is_err());
        assert!(make_grid(1, 16, 0.0).is_err());
        assert!(make_grid(1, 16, -2.0).is_err());
    }

    #[test]
    fn spacing_times_points_is_box() {
        for &(n, l) in &[(16usize, 3.3), (1024, 40.0), (256, 60.0)] {
            let g = make_grid(1, n, l).unwrap();
            assert!((g.spacing() * n as f64 - l).abs() <= 1e-14 * l);
        }
    }

    #[test]
    fn frequency_set_symmetric_but_for_nyquist() {
        let g = make_grid(1, 64, 10.0).unwrap();
        let f = g.frequencies();
        assert!((f[0] + g.nyquist()).abs() < 1e-12);
        for i in 1..32 {
            assert!((f[32 + i] + f[32 - i]).abs() < 1e-12);
        }
        // FFT order agrees with the sorted set
        let mut by_mode: Vec<f64> = (0..64).map(|m| g.wavenumber(m)).collect();
        by_mode.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(by_mode, f);
    }

    #[test]
    fn dealias_mask_keeps_quarter_band() {
        let g = make_grid(1, 16, 2.0 * PI).unwrap();
        let kept: Vec<i64> = (0..16)
            .filter(|&m| g.is_dealiased_mode(m))
            .map(|m| g.signed_mode(m))
            .collect();
        assert_eq!(kept, vec![0, 1, 2, 3, -3, -2, -1]);
    }
}
