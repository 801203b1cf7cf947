//! Littlewood–Paley blocks and homogeneous Besov norms on a [`Grid`].

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::io::fmt_f64;

/// Spectral mass allowed outside the resolved dyadic band.
pub const TAIL_LIMIT: f64 = 1e-6;

pub mod profile {
    /// Degree-9 smoothstep: 0 and 1 at the ends with four vanishing derivatives.
    pub fn smoothstep9(x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let x2 = x * x;
        x2 * x2 * x * (126.0 - 420.0 * x + 540.0 * x2 - 315.0 * x2 * x + 70.0 * x2 * x2)
    }

    /// Radial cutoff: 1 on `r ≤ 1/2`, 0 on `r ≥ 1`.
    pub fn psi(r: f64) -> f64 {
        1.0 - smoothstep9(2.0 * r - 1.0)
    }

    /// Annulus profile `ψ(r/2) − ψ(r)`, supported in `1/2 ≤ r ≤ 2`.
    pub fn phi(r: f64) -> f64 {
        psi(0.5 * r) - psi(r)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionProfile {
    #[default]
    Smoothstep9,
}

/// Annulus multipliers `φ(2^{-j}ξ)` for every resolvable `j`, precomputed in
/// storage order.
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    grid: Grid,
    profile: TransitionProfile,
    j_min: i32,
    j_max: i32,
    weights: Vec<Vec<f64>>,
}

pub fn make_partition(grid: &Grid, profile: TransitionProfile) -> Result<DyadicPartition> {
    let j_min = grid.frequency_step().log2().ceil() as i32 + 1;
    let j_max = grid.nyquist().log2().floor() as i32 - 1;
    if j_max - j_min + 1 < 3 {
        return Err(LabError::InvalidGrid(format!(
            "only {} dyadic blocks resolvable, need at least 3",
            (j_max - j_min + 1).max(0)
        )));
    }
    let radii: Vec<f64> = grid.wave_modulus_sq().into_iter().map(f64::sqrt).collect();
    let weights = (j_min..=j_max)
        .map(|j| {
            let scale = 2f64.powi(-j);
            radii.iter().map(|r| profile::phi(scale * r)).collect()
        })
        .collect();
    Ok(DyadicPartition {
        grid: *grid,
        profile,
        j_min,
        j_max,
        weights,
    })
}

impl DyadicPartition {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn profile(&self) -> TransitionProfile {
        self.profile
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn block_indices(&self) -> std::ops::RangeInclusive<i32> {
        self.j_min..=self.j_max
    }

    /// `|ξ|` range on which the blocks sum to exactly one.
    pub fn certified_range(&self) -> (f64, f64) {
        (2f64.powi(self.j_min), 2f64.powi(self.j_max))
    }

    /// `φ(2^{-j}ξ)` at every spectral index.
    pub fn weights(&self, j: i32) -> Result<&[f64]> {
        if j < self.j_min || j > self.j_max {
            return Err(LabError::param(
                "j",
                format!("block {j} outside [{}, {}]", self.j_min, self.j_max),
            ));
        }
        Ok(&self.weights[(j - self.j_min) as usize])
    }

    /// `Σ_j φ(2^{-j}ξ)` at every spectral index.
    pub fn coverage(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.grid.len()];
        for w in &self.weights {
            for (t, x) in total.iter_mut().zip(w) {
                *t += x;
            }
        }
        total
    }

    /// Fraction of `‖f̂‖²` the partition does not reproduce.
    pub fn tail_fraction(&self, f: &Field) -> Result<f64> {
        self.check_grid(f)?;
        let coverage = self.coverage();
        let (mut total, mut missed) = (0.0, 0.0);
        for (c, w) in f.spectrum().iter().zip(&coverage) {
            let e = c.norm_sqr();
            total += e;
            missed += e * (1.0 - w).powi(2);
        }
        Ok(if total == 0.0 { 0.0 } else { missed / total })
    }

    fn check_grid(&self, f: &Field) -> Result<()> {
        if *f.grid() == self.grid {
            Ok(())
        } else {
            Err(LabError::GridMismatch)
        }
    }
}

/// `P_j f`: spectral view multiplied by `φ(2^{-j}ξ)`.
pub fn project(j: i32, f: &Field, part: &DyadicPartition) -> Result<Field> {
    part.check_grid(f)?;
    let w = part.weights(j)?;
    let spec = f.spectrum().iter().zip(w).map(|(c, x)| c * x).collect();
    Ok(Field::from_spectrum_unchecked(part.grid, spec))
}

/// Third Besov index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Summability {
    /// `Ḃ^s_{p,1}`
    One,
    /// `Ḃ^s_{p,p}`
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub q: Summability,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, q: Summability) -> Result<Self> {
        BesovParams { s, p, q }.validated()
    }

    /// Critical space `Ḃ^{n(1−1/p)}_{p,1}` used by the contraction argument.
    pub fn critical(dim: usize, p: f64) -> Result<Self> {
        BesovParams::new(dim as f64 * (1.0 - 1.0 / p), p, Summability::One)
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.p > 1.0 && self.p <= 2.0) {
            return Err(LabError::param("p", format!("need 1 < p ≤ 2, got {}", self.p)));
        }
        if !self.s.is_finite() {
            return Err(LabError::param("s", "must be finite"));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTerm {
    pub j: i32,
    /// `2^{js}`
    pub weight: f64,
    /// `‖P_j f‖_p`
    pub block_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesovNorm {
    pub value: f64,
    pub tail_fraction: f64,
    pub blocks: Vec<BlockTerm>,
}

impl BesovNorm {
    pub fn reliable(&self) -> bool {
        self.tail_fraction <= TAIL_LIMIT
    }

    /// The value, or [`LabError::UnreliableNorm`] when the tail is too large.
    pub fn checked(&self) -> Result<f64> {
        if self.reliable() {
            Ok(self.value)
        } else {
            Err(LabError::UnreliableNorm {
                tail: self.tail_fraction,
                limit: TAIL_LIMIT,
            })
        }
    }

    /// Rows `j,weight,block_norm`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "j,weight,block_norm")?;
        for b in &self.blocks {
            writeln!(w, "{},{},{}", b.j, fmt_f64(b.weight), fmt_f64(b.block_norm))?;
        }
        Ok(())
    }
}

pub fn besov_norm(f: &Field, params: &BesovParams, part: &DyadicPartition) -> Result<BesovNorm> {
    let params = params.validated()?;
    let tail_fraction = part.tail_fraction(f)?;
    let mut blocks = Vec::with_capacity(part.weights.len());
    for j in part.block_indices() {
        let block = project(j, f, part)?;
        blocks.push(BlockTerm {
            j,
            weight: 2f64.powf(j as f64 * params.s),
            block_norm: block.lp_norm(params.p)?,
        });
    }
    let value = match params.q {
        Summability::One => blocks.iter().map(|b| b.weight * b.block_norm).sum(),
        Summability::P => blocks
            .iter()
            .map(|b| (b.weight * b.block_norm).powf(params.p))
            .sum::<f64>()
            .powf(1.0 / params.p),
    };
    Ok(BesovNorm {
        value,
        tail_fraction,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{make_field, TestFamily};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn packet_grid() -> Grid {
        Grid::new(1, 1024, 80.0).unwrap()
    }

    fn packet(amplitude: f64) -> Field {
        make_field(&TestFamily::modulated_gaussian(3.0, 4.0, amplitude), &packet_grid()).unwrap()
    }

    #[test]
    fn profile_endpoints() {
        assert_eq!(profile::psi(0.4), 1.0);
        assert_eq!(profile::psi(0.5), 1.0);
        assert_eq!(profile::psi(1.1), 0.0);
        assert_eq!(profile::psi(1.0), 0.0);
        assert_eq!(profile::phi(0.4), 0.0);
        assert_eq!(profile::phi(2.5), 0.0);
        let mut prev = 1.0;
        for i in 0..=200 {
            let v = profile::psi(i as f64 / 200.0 * 1.2);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn block_range_from_lattice() {
        let part = make_partition(&Grid::new(1, 1024, 40.0).unwrap(), TransitionProfile::default()).unwrap();
        // 2π/40 ≈ 0.157 → ⌈−2.67⌉ + 1; π·1024/40 ≈ 80.4 → ⌊6.33⌋ − 1
        assert_eq!((part.j_min(), part.j_max()), (-1, 5));
        let part = make_partition(&packet_grid(), TransitionProfile::default()).unwrap();
        assert_eq!((part.j_min(), part.j_max()), (-2, 4));
        assert!(make_partition(&Grid::new(1, 16, 6.0).unwrap(), TransitionProfile::default()).is_err());
    }

    #[test]
    fn partition_of_unity_on_certified_range() {
        for grid in [packet_grid(), Grid::new(2, 64, 20.0).unwrap()] {
            let part = make_partition(&grid, TransitionProfile::default()).unwrap();
            let (lo, hi) = part.certified_range();
            let cov = part.coverage();
            let mut checked = 0;
            for (r2, c) in grid.wave_modulus_sq().iter().zip(&cov) {
                let r = r2.sqrt();
                if r >= lo && r <= hi {
                    assert!((c - 1.0).abs() < 1e-10, "|ξ|={r} sum={c}");
                    checked += 1;
                }
            }
            assert!(checked > 10);
        }
    }

    #[test]
    fn disjoint_annulus_projects_to_zero() {
        let grid = Grid::new(1, 1024, 40.0).unwrap();
        let part = make_partition(&grid, TransitionProfile::default()).unwrap();
        let f = make_field(&TestFamily::AnnulusIndicator { j: 2, amplitude: 1.0 }, &grid).unwrap();
        for m in part.block_indices().filter(|m| (m - 2).abs() >= 2) {
            assert!(project(m, &f, &part).unwrap().max_modulus() < 1e-14, "block {m}");
        }
        assert!(project(part.j_max() + 1, &f, &part).is_err());
    }

    #[test]
    fn blocks_resum_to_band_limited_field() {
        let f = packet(1.0);
        let part = make_partition(f.grid(), TransitionProfile::default()).unwrap();
        let mut sum = Field::zeros(*f.grid());
        for j in part.block_indices() {
            let b = project(j, &f, &part).unwrap();
            assert!(project(j, &b, &part).unwrap().lp_norm(2.0).unwrap() <= b.lp_norm(2.0).unwrap());
            sum = sum.add(&b).unwrap();
        }
        assert!(sum.sub(&f).unwrap().lp_norm(2.0).unwrap() < 1e-8);
    }

    #[test]
    fn centred_gaussian_is_flagged_unreliable() {
        let grid = Grid::new(1, 1024, 40.0).unwrap();
        let part = make_partition(&grid, TransitionProfile::default()).unwrap();
        let f = make_field(&TestFamily::gaussian(1.0), &grid).unwrap();
        let norm = besov_norm(&f, &BesovParams::critical(1, 1.5).unwrap(), &part).unwrap();
        assert!(!norm.reliable());
        assert!(matches!(norm.checked(), Err(LabError::UnreliableNorm { .. })));
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let part = make_partition(&packet_grid(), TransitionProfile::default()).unwrap();
        let norm = besov_norm(&Field::zeros(packet_grid()), &BesovParams::critical(1, 1.5).unwrap(), &part).unwrap();
        assert_eq!(norm.checked().unwrap(), 0.0);
    }

    #[test]
    fn l2_equivalence_constant() {
        // s = 0, q = p = 2: Σ φ_j² ∈ [1/2, 1] on the certified band
        let part = make_partition(&packet_grid(), TransitionProfile::default()).unwrap();
        let params = BesovParams::new(0.0, 2.0, Summability::P).unwrap();
        for (w, k) in [(3.0, 4.0), (2.0, 6.0), (6.0, 8.0)] {
            let f = make_field(&TestFamily::modulated_gaussian(w, k, 1.0), &packet_grid()).unwrap();
            let norm = besov_norm(&f, &params, &part).unwrap();
            let ratio = norm.checked().unwrap() / f.lp_norm(2.0).unwrap();
            assert!((0.5f64.sqrt()..=1.0).contains(&ratio), "{ratio}");
        }
    }

    #[test]
    fn dilation_covariance() {
        let lambda = 2.0;
        let s = 0.5;
        let p = 1.5;
        let params = BesovParams::new(s, p, Summability::One).unwrap();
        let base = packet(1.0);
        let fine = packet_grid().dilated(1.0 / lambda).unwrap();
        let dilated = Field::from_fn(fine, |x| {
            let y = lambda * x[0];
            Complex64::from_polar((-(y * y) / 9.0).exp(), 4.0 * y)
        })
        .unwrap();
        let a = besov_norm(&base, &params, &make_partition(base.grid(), TransitionProfile::default()).unwrap())
            .unwrap()
            .checked()
            .unwrap();
        let b = besov_norm(&dilated, &params, &make_partition(&fine, TransitionProfile::default()).unwrap())
            .unwrap()
            .checked()
            .unwrap();
        let expected = lambda.powf(s - 1.0 / p);
        assert!((b / a / expected - 1.0).abs() < 0.02, "{}", b / a);
    }

    fn naive_inverse(grid: &Grid, spec: &[Complex64]) -> Vec<Complex64> {
        let l = grid.box_length();
        (0..grid.len())
            .map(|i| {
                let x = grid.coordinate(i);
                spec.iter()
                    .enumerate()
                    .map(|(m, c)| c * Complex64::from_polar(1.0, x * grid.wavenumber(m)))
                    .sum::<Complex64>()
                    / l
            })
            .collect()
    }

    fn naive_lp(grid: &Grid, v: &[Complex64], p: f64) -> f64 {
        (v.iter().map(|z| z.norm().powf(p)).sum::<f64>() * grid.spacing()).powf(1.0 / p)
    }

    #[test]
    fn dyadic_bump_against_direct_block_sum() {
        let grid = Grid::new(1, 256, 40.0).unwrap();
        let part = make_partition(&grid, TransitionProfile::default()).unwrap();
        let j0 = 2;
        let f = make_field(&TestFamily::DyadicBump { j: j0, amplitude: 1.0 }, &grid).unwrap();
        let (p, s) = (1.5, 0.5);
        // independent summation over the blocks touching supp φ(2^{-j0}·)
        let block = |j: i32| -> f64 {
            let spec: Vec<Complex64> = (0..grid.len())
                .map(|m| {
                    let r = grid.wavenumber(m).abs();
                    let w = profile::phi(r / 2f64.powi(j)) * profile::phi(r / 2f64.powi(j0));
                    Complex64::new(w, 0.0)
                })
                .collect();
            naive_lp(&grid, &naive_inverse(&grid, &spec), p)
        };
        let terms: Vec<(i32, f64)> = (j0 - 1..=j0 + 1).map(|j| (j, block(j))).collect();
        for scale in [1.0, 2.0] {
            let params = BesovParams::new(scale * s, p, Summability::One).unwrap();
            let norm = besov_norm(&f, &params, &part).unwrap();
            let oracle: f64 = terms.iter().map(|(j, b)| 2f64.powf(*j as f64 * scale * s) * b).sum();
            assert!((norm.value - oracle).abs() < 1e-10 * oracle, "{} vs {oracle}", norm.value);
            let fp = f.lp_norm(p).unwrap();
            let (lo, hi) = (2f64.powf((j0 - 1) as f64 * scale * s), 2f64.powf((j0 + 1) as f64 * scale * s));
            assert!(norm.value >= lo * fp && norm.value <= 3.0 * hi * fp);
        }
    }

    #[test]
    fn csv_rows() {
        let part = make_partition(&packet_grid(), TransitionProfile::default()).unwrap();
        let norm = besov_norm(&packet(1.0), &BesovParams::critical(1, 1.5).unwrap(), &part).unwrap();
        let mut out = Vec::new();
        norm.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1 + 7);
        assert!(text.starts_with("j,weight,block_norm\n-2,"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn homogeneous_and_subadditive(seed_a in 0u64..1000, seed_b in 0u64..1000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let grid = packet_grid();
            let part = make_partition(&grid, TransitionProfile::default()).unwrap();
            let params = BesovParams::critical(1, 1.5).unwrap();
            let a = make_field(&TestFamily::random_band_limited(seed_a, 1.0, 12.0, Some(6.0)), &grid).unwrap();
            let b = make_field(&TestFamily::random_band_limited(seed_b, 0.5, 8.0, Some(4.0)), &grid).unwrap();
            let na = besov_norm(&a, &params, &part).unwrap().value;
            let nb = besov_norm(&b, &params, &part).unwrap().value;
            prop_assert!(na > 0.0);
            let alpha = Complex64::new(re, im);
            let scaled = besov_norm(&a.scale(alpha), &params, &part).unwrap().value;
            prop_assert!((scaled - alpha.norm() * na).abs() <= 1e-10 * (alpha.norm() * na).max(1e-300));
            let sum = besov_norm(&a.add(&b).unwrap(), &params, &part).unwrap().value;
            prop_assert!(sum <= na + nb + 1e-12);
        }
    }
}
