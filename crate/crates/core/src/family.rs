//! Analytic and seeded test data.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::besov::profile;
use crate::error::{LabError, Result};
use crate::field::Field;
use crate::grid::Grid;

/// Spectral energy allowed at or above the dealiasing cutoff.
pub const BAND_LIMIT_TOLERANCE: f64 = 1e-10;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFamily {
    /// `a·exp(-|x-c|²/w²)`
    Gaussian {
        #[serde(default)]
        center: Vec<f64>,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Gaussian times `exp(i ξ₀·x)`.
    ModulatedGaussian {
        #[serde(default)]
        center: Vec<f64>,
        width: f64,
        modulation: Vec<f64>,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Spectral view `a·1{2^{j-1} ≤ |ξ| ≤ 2^j}`.
    AnnulusIndicator {
        j: i32,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Complex normal coefficients on `low ≤ |ξ| ≤ high`, optionally windowed by
    /// `exp(-|x|²/envelope²)`, rescaled to the requested L² norm.
    RandomBandLimited {
        seed: u64,
        low: f64,
        high: f64,
        #[serde(default)]
        envelope: Option<f64>,
        #[serde(default = "one")]
        l2_norm: f64,
    },
    /// Spectral view `a·φ(2^{-j}ξ)`, a single Littlewood–Paley annulus.
    DyadicBump {
        j: i32,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

impl TestFamily {
    pub fn gaussian(width: f64) -> Self {
        TestFamily::Gaussian {
            center: Vec::new(),
            width,
            amplitude: 1.0,
        }
    }

    pub fn modulated_gaussian(width: f64, modulation: f64, amplitude: f64) -> Self {
        TestFamily::ModulatedGaussian {
            center: Vec::new(),
            width,
            modulation: vec![modulation],
            amplitude,
        }
    }

    pub fn random_band_limited(seed: u64, low: f64, high: f64, envelope: Option<f64>) -> Self {
        TestFamily::RandomBandLimited {
            seed,
            low,
            high,
            envelope,
            l2_norm: 1.0,
        }
    }

    pub fn with_amplitude(&self, a: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            TestFamily::Gaussian { amplitude, .. }
            | TestFamily::ModulatedGaussian { amplitude, .. }
            | TestFamily::AnnulusIndicator { amplitude, .. }
            | TestFamily::DyadicBump { amplitude, .. } => *amplitude = a,
            TestFamily::RandomBandLimited { l2_norm, .. } => *l2_norm = a,
        }
        out
    }
}

fn vector_param(name: &str, v: &[f64], grid: &Grid) -> Result<[f64; 2]> {
    match v.len() {
        0 => Ok([0.0, 0.0]),
        n if n == grid.dim() => Ok([v[0], if n == 2 { v[1] } else { 0.0 }]),
        n => Err(LabError::param(
            name,
            format!("expected {} components, got {n}", grid.dim()),
        )),
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(LabError::param(name, format!("must be positive, got {v}")))
    }
}

fn radial_spectrum(grid: &Grid, amplitude: f64, weight: impl Fn(f64) -> f64) -> Vec<Complex64> {
    (0..grid.len())
        .map(|idx| {
            let [a, b] = grid.wave_vector(idx);
            Complex64::new(amplitude * weight((a * a + b * b).sqrt()), 0.0)
        })
        .collect()
}

pub fn make_field(family: &TestFamily, grid: &Grid) -> Result<Field> {
    let grid = *grid;
    let field = match family {
        TestFamily::Gaussian {
            center,
            width,
            amplitude,
        } => {
            positive("width", *width)?;
            let c = vector_param("center", center, &grid)?;
            let (w2, a) = (width * width, *amplitude);
            Field::from_fn(grid, move |x| {
                let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
                Complex64::new(a * (-r2 / w2).exp(), 0.0)
            })?
        }
        TestFamily::ModulatedGaussian {
            center,
            width,
            modulation,
            amplitude,
        } => {
            positive("width", *width)?;
            let c = vector_param("center", center, &grid)?;
            let k = vector_param("modulation", modulation, &grid)?;
            let (w2, a) = (width * width, *amplitude);
            Field::from_fn(grid, move |x| {
                let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
                Complex64::from_polar(a * (-r2 / w2).exp(), k[0] * x[0] + k[1] * x[1])
            })?
        }
        TestFamily::AnnulusIndicator { j, amplitude } => {
            let (lo, hi) = (2f64.powi(j - 1), 2f64.powi(*j));
            if hi >= grid.dealias_cutoff() {
                return Err(LabError::OutOfBand(format!(
                    "annulus 2^{j} reaches the cutoff {:.4}",
                    grid.dealias_cutoff()
                )));
            }
            let spec = radial_spectrum(&grid, *amplitude, |r| {
                if r >= lo && r <= hi {
                    1.0
                } else {
                    0.0
                }
            });
            Field::from_spectrum(grid, spec)?
        }
        TestFamily::DyadicBump { j, amplitude } => {
            if 2f64.powi(j + 1) >= grid.dealias_cutoff() {
                return Err(LabError::OutOfBand(format!(
                    "dyadic bump 2^{} reaches the cutoff {:.4}",
                    j + 1,
                    grid.dealias_cutoff()
                )));
            }
            let scale = 2f64.powi(-j);
            let spec = radial_spectrum(&grid, *amplitude, |r| profile::phi(scale * r));
            Field::from_spectrum(grid, spec)?
        }
        TestFamily::RandomBandLimited {
            seed,
            low,
            high,
            envelope,
            l2_norm,
        } => {
            if !(*low >= 0.0 && high > low) {
                return Err(LabError::param("high", format!("need 0 ≤ low < high, got [{low}, {high}]")));
            }
            if *high >= grid.dealias_cutoff() {
                return Err(LabError::OutOfBand(format!(
                    "band top {high} reaches the cutoff {:.4}",
                    grid.dealias_cutoff()
                )));
            }
            if *l2_norm < 0.0 {
                return Err(LabError::param("l2_norm", "must be non-negative"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let spec: Vec<Complex64> = (0..grid.len())
                .map(|idx| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    let [a, b] = grid.wave_vector(idx);
                    let r = (a * a + b * b).sqrt();
                    if r >= *low && r <= *high {
                        Complex64::new(re, im)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect();
            let mut f = Field::from_spectrum(grid, spec)?;
            if let Some(w) = envelope {
                positive("envelope", *w)?;
                let w2 = w * w;
                f = f.map_values(|x, v| v * (-(x[0] * x[0] + x[1] * x[1]) / w2).exp());
            }
            let norm = f.lp_norm(2.0)?;
            if norm > 0.0 {
                f = f.scale_real(l2_norm / norm);
            }
            f
        }
    };
    let leak = field.energy_above_cutoff();
    if leak > BAND_LIMIT_TOLERANCE {
        return Err(LabError::OutOfBand(format!(
            "{leak:.3e} of the spectral energy sits above the dealiasing cutoff"
        )));
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_samples_are_direct_evaluations() {
        let g = Grid::new(1, 1024, 40.0).unwrap();
        let f = make_field(&TestFamily::gaussian(1.0), &g).unwrap();
        for i in [0, 100, 512, 700] {
            let x = g.coordinate(i);
            assert!((f.values()[i].re - (-x * x).exp()).abs() < 1e-15);
            assert_eq!(f.values()[i].im, 0.0);
        }
    }

    #[test]
    fn annulus_indicator_has_sharp_support() {
        let g = Grid::new(1, 256, 40.0).unwrap();
        let f = make_field(&TestFamily::AnnulusIndicator { j: 3, amplitude: 1.0 }, &g).unwrap();
        let spec = fft_again(&f);
        for (m, c) in spec.iter().enumerate() {
            let r = g.wavenumber(m).abs();
            let inside = (4.0..=8.0).contains(&r);
            let expect = if inside { 1.0 } else { 0.0 };
            assert!((c.re - expect).abs() < 1e-10 && c.im.abs() < 1e-10, "mode {m}");
        }
    }

    fn fft_again(f: &Field) -> Vec<Complex64> {
        // recompute from physical samples instead of trusting the cached view
        let raw = Field::from_values(*f.grid(), f.values().to_vec()).unwrap();
        raw.spectrum().to_vec()
    }

    #[test]
    fn random_band_limited_is_reproducible() {
        let g = Grid::new(1, 512, 40.0).unwrap();
        let fam = TestFamily::random_band_limited(7, 0.5, 6.0, Some(4.0));
        let a = make_field(&fam, &g).unwrap();
        let b = make_field(&fam, &g).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
        assert!((a.lp_norm(2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_band_families() {
        let g = Grid::new(1, 64, 10.0).unwrap();
        // cutoff = π·64/10/2 ≈ 10.05
        assert!(matches!(
            make_field(&TestFamily::AnnulusIndicator { j: 4, amplitude: 1.0 }, &g),
            Err(LabError::OutOfBand(_))
        ));
        // a narrow Gaussian leaks above the cutoff
        assert!(matches!(
            make_field(&TestFamily::gaussian(0.1), &g),
            Err(LabError::OutOfBand(_))
        ));
        assert!(make_field(&TestFamily::random_band_limited(1, 0.0, 11.0, None), &g).is_err());
    }

    #[test]
    fn parses_from_json() {
        let fam: TestFamily =
            serde_json::from_str(r#"{"kind":"modulated_gaussian","width":3.0,"modulation":[4.0],"amplitude":0.4}"#)
                .unwrap();
        assert_eq!(fam, TestFamily::modulated_gaussian(3.0, 4.0, 0.4));
        assert!(serde_json::from_str::<TestFamily>(r#"{"kind":"gaussian","width":1.0,"bogus":1}"#).is_err());
    }
}
