use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::fft;
use crate::grid::Grid;

/// Complex samples on a [`Grid`], with the spectral view computed on first use.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        let zeros = vec![Complex64::new(0.0, 0.0); grid.len()];
        let spectrum = OnceLock::from(zeros.clone());
        Field {
            grid,
            values: zeros,
            spectrum,
        }
    }

    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::param(
                "values",
                format!("expected {} samples, got {}", grid.len(), values.len()),
            ));
        }
        if !values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(LabError::NonFinite);
        }
        Ok(Field {
            grid,
            values,
            spectrum: OnceLock::new(),
        })
    }

    pub fn from_spectrum(grid: Grid, spectrum: Vec<Complex64>) -> Result<Self> {
        if spectrum.len() != grid.len() {
            return Err(LabError::param(
                "spectrum",
                format!("expected {} modes, got {}", grid.len(), spectrum.len()),
            ));
        }
        if !spectrum.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(LabError::NonFinite);
        }
        let values = fft::inverse(&grid, &spectrum);
        Ok(Field {
            grid,
            values,
            spectrum: OnceLock::from(spectrum),
        })
    }

    /// Samples `f` at every lattice point (coordinates padded to two axes).
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> Complex64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Field::from_values(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Continuum-normalized Fourier coefficients in FFT order.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum
            .get_or_init(|| fft::forward(&self.grid, &self.values))
    }

    pub fn ensure_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(LabError::GridMismatch)
        }
    }

    /// Multiplies the spectrum by `m(ξ)`, evaluated at each wave vector.
    pub fn map_spectrum(&self, m: impl Fn([f64; 2], Complex64) -> Complex64) -> Field {
        let spec = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(idx, c)| m(self.grid.wave_vector(idx), *c))
            .collect();
        Field::from_spectrum_unchecked(self.grid, spec)
    }

    pub(crate) fn from_spectrum_unchecked(grid: Grid, spectrum: Vec<Complex64>) -> Field {
        let values = fft::inverse(&grid, &spectrum);
        Field {
            grid,
            values,
            spectrum: OnceLock::from(spectrum),
        }
    }

    pub(crate) fn from_values_unchecked(grid: Grid, values: Vec<Complex64>) -> Field {
        Field {
            grid,
            values,
            spectrum: OnceLock::new(),
        }
    }

    pub fn map_values(&self, f: impl Fn([f64; 2], Complex64) -> Complex64) -> Field {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, v)| f(self.grid.point(idx), *v))
            .collect();
        Field::from_values_unchecked(self.grid, values)
    }

    pub fn conj(&self) -> Field {
        Field::from_values_unchecked(self.grid, self.values.iter().map(|v| v.conj()).collect())
    }

    pub fn scale(&self, a: Complex64) -> Field {
        Field::from_values_unchecked(self.grid, self.values.iter().map(|v| v * a).collect())
    }

    pub fn scale_real(&self, a: f64) -> Field {
        self.scale(Complex64::new(a, 0.0))
    }

    fn zip_with(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Field> {
        self.ensure_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Ok(Field::from_values_unchecked(self.grid, values))
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product of physical samples (no dealiasing).
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    /// `self + a·other`
    pub fn axpy(&self, a: Complex64, other: &Field) -> Result<Field> {
        self.zip_with(other, |x, y| x + a * y)
    }

    /// Zeroes every mode at or above half-Nyquist on any axis.
    pub fn dealiased(&self) -> Field {
        let grid = self.grid;
        let spec = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                if grid.is_dealiased(idx) {
                    *c
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Field::from_spectrum_unchecked(grid, spec)
    }

    /// Fraction of spectral energy outside the dealiased band.
    pub fn energy_above_cutoff(&self) -> f64 {
        let mut total = 0.0;
        let mut above = 0.0;
        for (idx, c) in self.spectrum().iter().enumerate() {
            let e = c.norm_sqr();
            total += e;
            if !self.grid.is_dealiased(idx) {
                above += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            above / total
        }
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm(self, p)
    }

    /// `‖f‖₂` from the spectral side of Parseval.
    pub fn spectral_l2_norm(&self) -> f64 {
        let scale = self.grid.box_length().powi(self.grid.dim() as i32);
        (self.spectrum().iter().map(|c| c.norm_sqr()).sum::<f64>() / scale).sqrt()
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Squared-mass fraction in the shell `max_k |x_k| > fraction·L`.
    pub fn edge_mass_fraction(&self, fraction: f64) -> f64 {
        let limit = fraction * self.grid.box_length();
        let mut total = 0.0;
        let mut edge = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            let e = v.norm_sqr();
            total += e;
            let [a, b] = self.grid.point(idx);
            if a.abs() > limit || b.abs() > limit {
                edge += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            edge / total
        }
    }

    /// Relative L² distance `‖self − other‖₂ / ‖other‖₂` (absolute if `other` is zero).
    pub fn relative_l2_distance(&self, other: &Field) -> Result<f64> {
        let diff = self.sub(other)?.lp_norm(2.0)?;
        let base = other.lp_norm(2.0)?;
        Ok(if base == 0.0 { diff } else { diff / base })
    }
}

/// Riemann-sum `L^p` norm; `p = ∞` is the max modulus.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(LabError::param("p", format!("need 1 ≤ p ≤ ∞, got {p}")));
    }
    if p.is_infinite() {
        return Ok(f.max_modulus());
    }
    let h = f.grid.cell_volume();
    let sum: f64 = if p == 2.0 {
        f.values.iter().map(|v| v.norm_sqr()).sum()
    } else if p == 1.0 {
        f.values.iter().map(|v| v.norm()).sum()
    } else {
        f.values.iter().map(|v| v.norm().powf(p)).sum()
    };
    Ok((sum * h).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: Grid) -> Field {
        Field::from_fn(grid, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0)).unwrap()
    }

    #[test]
    fn zero_field_norms_vanish() {
        let g = Grid::new(1, 64, 10.0).unwrap();
        let z = Field::zeros(g);
        for p in [1.0, 1.5, 2.0, f64::INFINITY] {
            assert_eq!(z.lp_norm(p).unwrap(), 0.0);
        }
    }

    #[test]
    fn gaussian_l2_norm_matches_integral() {
        let g = Grid::new(1, 1024, 40.0).unwrap();
        let f = gaussian(g);
        let expected = (std::f64::consts::PI / 2.0).powf(0.25);
        assert!((f.lp_norm(2.0).unwrap() - expected).abs() < 1e-8);
        assert!((f.spectral_l2_norm() - expected).abs() < 1e-8);
    }

    #[test]
    fn dilation_preserves_l1_on_matched_grid() {
        let g = Grid::new(1, 1024, 40.0).unwrap();
        let g2 = g.dilated(0.5).unwrap();
        let lambda = 2.0;
        let f = gaussian(g);
        let f2 = Field::from_fn(g2, |x| Complex64::new(lambda * (-(lambda * x[0]).powi(2)).exp(), 0.0)).unwrap();
        assert!((f.lp_norm(1.0).unwrap() - f2.lp_norm(1.0).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn rejects_p_below_one_and_nan() {
        let f = Field::zeros(Grid::new(1, 16, 1.0).unwrap());
        assert!(f.lp_norm(0.5).is_err());
        assert!(f.lp_norm(f64::NAN).is_err());
    }

    #[test]
    fn rejects_non_finite_samples() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); 16];
        v[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(Field::from_values(g, v), Err(LabError::NonFinite)));
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = Field::zeros(Grid::new(1, 16, 1.0).unwrap());
        let b = Field::zeros(Grid::new(1, 32, 1.0).unwrap());
        assert!(matches!(a.add(&b), Err(LabError::GridMismatch)));
    }
}
