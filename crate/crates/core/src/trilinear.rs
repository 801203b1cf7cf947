//! The trilinear form `T(v1,v2,v3)(τ) = S(−τ)[S(−τ)v1 · S(τ)v2 · S(τ)v3]`,
//! spectrally and through its collapsed kernel, plus frequency-localized inputs.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::io::fmt_f64;
use crate::propagator;

/// Constant of the collapsed kernel, `C` in `v0 = C τ^{-1} ∬ ...` (1D).
///
/// Three kernel prefactors and the `w`-integral give `4πτ / (16π²τ²)`.
/// [`calibrate_oracle_constant`] re-measures it against [`eval`].
pub const ORACLE_CONSTANT: f64 = 1.0 / (4.0 * PI);

/// Relative spectral energy allowed outside a tagged annulus.
const TAG_LEAK: f64 = 1e-20;

#[derive(Debug, Clone)]
pub struct TrilinearInputs {
    pub tau: f64,
    pub v1: Field,
    pub v2: Field,
    pub v3: Field,
    tags: Option<(i32, i32)>,
}

impl TrilinearInputs {
    pub fn new(tau: f64, v1: Field, v2: Field, v3: Field) -> Result<Self> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(LabError::param("tau", format!("need τ ≥ 0, got {tau}")));
        }
        v1.ensure_same_grid(&v2)?;
        v1.ensure_same_grid(&v3)?;
        Ok(TrilinearInputs {
            tau,
            v1,
            v2,
            v3,
            tags: None,
        })
    }

    /// Declares `v̂2` supported in `2^{j−2} ≤ |ξ| ≤ 2^{j+2}` and `v̂3` likewise
    /// for `k`; both are checked.
    pub fn with_tags(mut self, j: i32, k: i32) -> Result<Self> {
        check_annulus(&self.v2, j, "v2")?;
        check_annulus(&self.v3, k, "v3")?;
        self.tags = Some((j, k));
        Ok(self)
    }

    pub fn tags(&self) -> Option<(i32, i32)> {
        self.tags
    }

    pub fn grid(&self) -> &Grid {
        self.v1.grid()
    }
}

fn check_annulus(f: &Field, j: i32, slot: &str) -> Result<()> {
    let (lo, hi) = (2f64.powi(j - 2), 2f64.powi(j + 2));
    let grid = f.grid();
    let (mut total, mut outside) = (0.0, 0.0);
    for (idx, c) in f.spectrum().iter().enumerate() {
        let [a, b] = grid.wave_vector(idx);
        let r = (a * a + b * b).sqrt();
        let e = c.norm_sqr();
        total += e;
        if r < lo * (1.0 - 1e-12) || r > hi * (1.0 + 1e-12) {
            outside += e;
        }
    }
    if total > 0.0 && outside > TAG_LEAK * total {
        return Err(LabError::param(
            slot,
            format!("{:.3e} of the spectrum lies outside the 2^{j} annulus", outside / total),
        ));
    }
    Ok(())
}

/// The three propagated factors `S(−τ)v1`, `S(τ)v2`, `S(τ)v3`, each dealiased.
pub fn propagated_factors(inp: &TrilinearInputs) -> [Field; 3] {
    let t = inp.tau;
    [
        propagator::apply(-t, &inp.v1).dealiased(),
        propagator::apply(t, &inp.v2).dealiased(),
        propagator::apply(t, &inp.v3).dealiased(),
    ]
}

/// Dealiased product `u1·u2·u3` of the propagated factors.
pub fn propagated_product(inp: &TrilinearInputs) -> Field {
    let [u1, u2, u3] = propagated_factors(inp);
    product3(&u1, &u2, &u3).dealiased()
}

pub(crate) fn product3(a: &Field, b: &Field, c: &Field) -> Field {
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .zip(c.values())
        .map(|((x, y), z)| x * y * z)
        .collect();
    Field::from_values_unchecked(*a.grid(), values)
}

/// `S(−τ)[S(−τ)v1 · S(τ)v2 · S(τ)v3]` with the half-Nyquist rule on every
/// factor and on the product, so the discrete product is alias-free.
pub fn eval(inp: &TrilinearInputs) -> Field {
    propagator::apply(-inp.tau, &propagated_product(inp))
}

/// Direct double quadrature of the collapsed kernel representation (1D):
/// `v0(α) = C τ^{-1} e^{iα²/4τ} ∬ e^{i(x²−y²−z²)/4τ} v1(x) v2(y) v3(z) dx dy`
/// with `z = α + x − y`, using [`ORACLE_CONSTANT`].
pub fn eval_kernel_oracle(inp: &TrilinearInputs) -> Result<Field> {
    Ok(kernel_sum(inp)?.scale_real(ORACLE_CONSTANT))
}

/// Ratio `⟨eval, raw⟩ / ⟨raw, raw⟩` where `raw` is the oracle with `C = 1`.
pub fn calibrate_oracle_constant(inp: &TrilinearInputs) -> Result<f64> {
    let raw = kernel_sum(inp)?;
    let spectral = eval(inp);
    let num: Complex64 = raw
        .values()
        .iter()
        .zip(spectral.values())
        .map(|(r, e)| r.conj() * e)
        .sum();
    let den: f64 = raw.values().iter().map(|r| r.norm_sqr()).sum();
    if den == 0.0 {
        return Err(LabError::param("v", "oracle output vanishes; nothing to calibrate"));
    }
    Ok(num.re / den)
}

/// Index range `[lo, hi]` holding every sample above `1e−14·max`.
fn support(values: &[Complex64]) -> Option<(usize, usize)> {
    let max = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return None;
    }
    let keep = |v: &Complex64| v.norm() > 1e-14 * max;
    let lo = values.iter().position(keep)?;
    let hi = values.iter().rposition(keep)?;
    Some((lo, hi))
}

fn kernel_sum(inp: &TrilinearInputs) -> Result<Field> {
    let grid = *inp.grid();
    if grid.dim() != 1 {
        return Err(LabError::param("dim", "the kernel oracle is one-dimensional"));
    }
    let tau = inp.tau;
    if tau <= 0.0 {
        return Err(LabError::param("tau", "the kernel oracle needs τ > 0"));
    }
    // same resolution requirement as the linear kernel: phase slopes ≤ L/2τ
    let l = grid.box_length();
    let n = grid.points_per_dim();
    let needed = 1.0 + l * l / (2.0 * PI * n as f64 * tau);
    let r = (needed.ceil() as usize).next_power_of_two();
    if r > propagator::MAX_KERNEL_OVERSAMPLING {
        return Err(LabError::param("tau", format!("τ = {tau} needs {r}x oversampling")));
    }
    let fine = grid.refined(r)?;
    let hf = fine.spacing();
    let inv4t = 1.0 / (4.0 * tau);
    let chirp = |sign: f64, f: &Field| -> Result<Vec<Complex64>> {
        let refined = propagator::spectral_refine(f, r)?;
        Ok(refined
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = fine.coordinate(i);
                v * Complex64::from_polar(1.0, sign * x * x * inv4t)
            })
            .collect())
    };
    let a = chirp(1.0, &inp.v1)?;
    let b = chirp(-1.0, &inp.v2)?;
    let c = chirp(-1.0, &inp.v3)?;
    let (Some(sa), Some(sb), Some(sc)) = (support(&a), support(&b), support(&c)) else {
        return Ok(Field::zeros(grid));
    };
    let nf = fine.points_per_dim() as i64;
    let scale = hf * hf / tau;
    let values: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let alpha = grid.coordinate(i);
            let base = (i * r) as i64;
            let mut acc = Complex64::new(0.0, 0.0);
            #[allow(clippy::needless_range_loop)]
            for xa in sa.0..=sa.1 {
                // z index = base + xa − yb must land in the support of v3
                let shift = base + xa as i64;
                let y_lo = (shift - sc.1 as i64).max(sb.0 as i64).max(shift - nf + 1);
                let y_hi = (shift - sc.0 as i64).min(sb.1 as i64).min(shift);
                if y_lo > y_hi {
                    continue;
                }
                let mut inner = Complex64::new(0.0, 0.0);
                for yb in y_lo..=y_hi {
                    inner += b[yb as usize] * c[(shift - yb) as usize];
                }
                acc += a[xa] * inner;
            }
            acc * scale * Complex64::from_polar(1.0, alpha * alpha * inv4t)
        })
        .collect();
    Field::from_values(grid, values)
}

/// Seeded focus point within `L/16` of the origin, shared by every packet of
/// one input set so their product is coherent.
pub fn packet_focus(grid: &Grid, seed: u64) -> [f64; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = grid.box_length() / 16.0;
    let mut x0 = [0.0; 2];
    for c in x0.iter_mut().take(grid.dim()) {
        *c = rng.gen_range(-spread..spread);
    }
    x0
}

fn packet_phases(seed: u64) -> [f64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    [0; 3].map(|_| rng.gen_range(0.0..2.0 * PI))
}

/// Unit-L² field with spectral modulus `1{lo ≤ |ξ| ≤ hi}`, focused at `x0`.
pub fn coherent_packet(grid: &Grid, lo: f64, hi: f64, x0: [f64; 2], phase: f64) -> Result<Field> {
    if hi >= grid.dealias_cutoff() {
        return Err(LabError::OutOfBand(format!(
            "packet edge {hi} reaches the cutoff {:.4}",
            grid.dealias_cutoff()
        )));
    }
    let spec = (0..grid.len())
        .map(|idx| {
            let [a, b] = grid.wave_vector(idx);
            let r = (a * a + b * b).sqrt();
            if r >= lo && r <= hi {
                Complex64::from_polar(1.0, phase - a * x0[0] - b * x0[1])
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let f = Field::from_spectrum(*grid, spec)?;
    let norm = f.lp_norm(2.0)?;
    if norm == 0.0 {
        return Err(LabError::param("grid", format!("no lattice modes in [{lo}, {hi}]")));
    }
    Ok(f.scale_real(1.0 / norm))
}

/// Annulus data at scales `2^j`, `2^k`: unit-L² fields whose spectral modulus is
/// the indicator of `2^{j−1} ≤ |ξ| ≤ 2^j`, focused at a common seeded point
/// with independent seeded global phases.
pub fn localized_pair(j: i32, k: i32, grid: &Grid, seed: u64) -> Result<(Field, Field)> {
    let x0 = packet_focus(grid, seed);
    let [_, g2, g3] = packet_phases(seed);
    let v2 = coherent_packet(grid, 2f64.powi(j - 1), 2f64.powi(j), x0, g2)?;
    let v3 = coherent_packet(grid, 2f64.powi(k - 1), 2f64.powi(k), x0, g3)?;
    Ok((v2, v3))
}

/// Inputs whose propagated factors at time `τ` are the packets themselves:
/// `v1 = S(τ)·ball(|ξ| ≤ 2^{ball})`, `(v2, v3) = S(−τ)·localized_pair(j, k)`.
pub fn focused_inputs(tau: f64, j: i32, k: i32, ball: i32, grid: &Grid, seed: u64) -> Result<TrilinearInputs> {
    let (p2, p3) = localized_pair(j, k, grid, seed)?;
    let [g1, _, _] = packet_phases(seed);
    let p1 = coherent_packet(grid, 0.0, 2f64.powi(ball), packet_focus(grid, seed), g1)?;
    TrilinearInputs::new(
        tau,
        propagator::apply(tau, &p1),
        propagator::apply(-tau, &p2),
        propagator::apply(-tau, &p3),
    )?
    .with_tags(j, k)
}

/// One row of a trilinear sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub j: i32,
    pub k: i32,
    pub p: f64,
    pub norm: f64,
    pub bound: f64,
    pub ratio: f64,
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(w, "tau,j,k,p,norm,bound,ratio")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.tau),
            r.j,
            r.k,
            fmt_f64(r.p),
            fmt_f64(r.norm),
            fmt_f64(r.bound),
            fmt_f64(r.ratio)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{make_field, TestFamily};

    fn gaussian(grid: &Grid, width: f64, center: f64) -> Field {
        make_field(
            &TestFamily::Gaussian {
                center: vec![center],
                width,
                amplitude: 1.0,
            },
            grid,
        )
        .unwrap()
    }

    #[test]
    fn zero_time_is_pointwise_product() {
        let g = Grid::new(1, 256, 40.0).unwrap();
        let (a, b, c) = (gaussian(&g, 2.0, 0.0), gaussian(&g, 3.0, 1.0), gaussian(&g, 2.5, -1.0));
        let out = eval(&TrilinearInputs::new(0.0, a.clone(), b.clone(), c.clone()).unwrap());
        let direct = product3(&a, &b, &c);
        assert!(out.sub(&direct).unwrap().max_modulus() < 1e-12);
    }

    #[test]
    fn linear_in_second_slot() {
        let g = Grid::new(1, 256, 40.0).unwrap();
        let v1 = gaussian(&g, 2.0, 0.0);
        let v2 = gaussian(&g, 3.0, 1.0);
        let w2 = make_field(&TestFamily::modulated_gaussian(2.0, 1.0, 1.0), &g).unwrap();
        let v3 = gaussian(&g, 2.5, -1.0);
        let (al, be) = (Complex64::new(0.5, 2.0), Complex64::new(-1.5, 0.25));
        let mix = v2.scale(al).add(&w2.scale(be)).unwrap();
        let lhs = eval(&TrilinearInputs::new(0.7, v1.clone(), mix, v3.clone()).unwrap());
        let a = eval(&TrilinearInputs::new(0.7, v1.clone(), v2, v3.clone()).unwrap());
        let b = eval(&TrilinearInputs::new(0.7, v1, w2, v3).unwrap());
        let rhs = a.scale(al).add(&b.scale(be)).unwrap();
        assert!(lhs.sub(&rhs).unwrap().max_modulus() < 1e-12 * rhs.max_modulus());
    }

    #[test]
    fn norm_identity_and_holder_chain() {
        let g = Grid::new(1, 512, 60.0).unwrap();
        let inp = TrilinearInputs::new(
            1.3,
            gaussian(&g, 2.0, 0.0),
            gaussian(&g, 1.5, 2.0),
            make_field(&TestFamily::modulated_gaussian(2.0, 2.0, 1.0), &g).unwrap(),
        )
        .unwrap();
        let out = eval(&inp);
        let prod = propagated_product(&inp);
        let (a, b) = (out.lp_norm(2.0).unwrap(), prod.lp_norm(2.0).unwrap());
        assert!((a - b).abs() < 1e-12 * b);
        let [u1, u2, u3] = propagated_factors(&inp);
        let holder = u1.lp_norm(2.0).unwrap() * u2.max_modulus() * u3.max_modulus();
        assert!(a <= holder * (1.0 + 1e-10));
    }

    #[test]
    fn oracle_rejects_bad_inputs() {
        let g = Grid::new(1, 64, 20.0).unwrap();
        let f = gaussian(&g, 2.0, 0.0);
        assert!(eval_kernel_oracle(&TrilinearInputs::new(0.0, f.clone(), f.clone(), f.clone()).unwrap()).is_err());
        let g2 = Grid::new(2, 16, 20.0).unwrap();
        let h = Field::zeros(g2);
        assert!(eval_kernel_oracle(&TrilinearInputs::new(1.0, h.clone(), h.clone(), h).unwrap()).is_err());
        assert!(TrilinearInputs::new(-1.0, f.clone(), f.clone(), f.clone()).is_err());
        assert!(TrilinearInputs::new(1.0, f.clone(), f, Field::zeros(g2)).is_err());
    }

    #[test]
    fn oracle_agrees_with_spectral_eval() {
        let g = Grid::new(1, 128, 60.0).unwrap();
        let inp = TrilinearInputs::new(
            0.5,
            gaussian(&g, 2.5, 0.0),
            gaussian(&g, 2.5, 1.0),
            gaussian(&g, 2.5, -1.0),
        )
        .unwrap();
        let oracle = eval_kernel_oracle(&inp).unwrap();
        let spectral = eval(&inp);
        let err = oracle.relative_l2_distance(&spectral).unwrap();
        assert!(err < 1e-3, "{err}");
        let c = calibrate_oracle_constant(&inp).unwrap();
        assert!((c * 4.0 * PI - 1.0).abs() < 1e-3, "{c}");
    }

    #[test]
    fn oracle_symmetric_in_last_two_slots() {
        let g = Grid::new(1, 128, 60.0).unwrap();
        let (a, b, c) = (gaussian(&g, 2.5, 0.0), gaussian(&g, 2.5, 1.0), gaussian(&g, 3.0, -2.0));
        let x = eval_kernel_oracle(&TrilinearInputs::new(1.0, a.clone(), b.clone(), c.clone()).unwrap()).unwrap();
        let y = eval_kernel_oracle(&TrilinearInputs::new(1.0, a, c, b).unwrap()).unwrap();
        assert!(x.sub(&y).unwrap().max_modulus() < 1e-12 * x.max_modulus());
    }

    #[test]
    fn localized_pair_is_tagged_and_normalized() {
        let g = Grid::new(1, 2048, 8.0 * PI).unwrap();
        let (v2, v3) = localized_pair(3, 5, &g, 11).unwrap();
        assert!((v2.lp_norm(2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((v3.lp_norm(2.0).unwrap() - 1.0).abs() < 1e-12);
        let inp = TrilinearInputs::new(0.5, v2.clone(), v2.clone(), v3.clone()).unwrap();
        assert!(inp.clone().with_tags(3, 5).is_ok());
        assert!(inp.with_tags(5, 3).is_err());
        assert!(localized_pair(9, 2, &g, 1).is_err());
    }

    #[test]
    fn packet_l1_to_l2_ratio_grows_like_half_power() {
        let g = Grid::new(1, 2048, 8.0 * PI).unwrap();
        let (xs, ys): (Vec<f64>, Vec<f64>) = (2..=6)
            .map(|j| {
                let (v, _) = localized_pair(j, 2, &g, 5).unwrap();
                let l1: f64 = v.spectrum().iter().map(|c| c.norm()).sum();
                let l2: f64 = v.spectrum().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                (j as f64, (l1 / l2).log2())
            })
            .unzip();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((slope - 0.5).abs() < 0.1, "{slope}");
    }

    #[test]
    fn focused_inputs_refocus_at_tau() {
        let g = Grid::new(1, 2048, 8.0 * PI).unwrap();
        let inp = focused_inputs(1.0, 3, 4, 5, &g, 2).unwrap();
        let [_, u2, _] = propagated_factors(&inp);
        let (p2, _) = localized_pair(3, 4, &g, 2).unwrap();
        assert!(u2.relative_l2_distance(&p2).unwrap() < 1e-12);
    }

    #[test]
    fn sweep_csv_header() {
        let rows = vec![SweepRow {
            tau: 1.0,
            j: 2,
            k: 3,
            p: 1.5,
            norm: 0.25,
            bound: 0.5,
            ratio: 0.5,
        }];
        let mut out = Vec::new();
        write_sweep_csv(&rows, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next(), Some("tau,j,k,p,norm,bound,ratio"));
        assert_eq!(text.lines().count(), 2);
    }
}
