use rayon::prelude::*;

use super::fit::{linear_fit, plane_fit, spread, LinearFit};
use super::report::{Comparison, EstimateReport, Table};
use super::{sweep_spec, EstimateId, LabConfig};
use crate::error::Result;
use crate::family::{make_field, TestFamily};
use crate::field::Field;
use crate::trilinear::{self, TrilinearInputs};

const EDGE: f64 = 0.4;

/// Largest edge mass among the inputs, the propagated factors and the output.
fn wraparound(inp: &TrilinearInputs, out: &Field) -> f64 {
    let factors = trilinear::propagated_factors(inp);
    [&inp.v1, &inp.v2, &inp.v3, &factors[0], &factors[1], &factors[2], out]
        .iter()
        .map(|f| f.edge_mass_fraction(EDGE))
        .fold(0.0, f64::max)
}

fn product_norm(inp: &TrilinearInputs, p: f64) -> Result<f64> {
    Ok(inp.v1.lp_norm(p)? * inp.v2.lp_norm(p)? * inp.v3.lp_norm(p)?)
}

fn valid_fraction(report: &mut EstimateReport, valid: usize, total: usize, cfg: &LabConfig) {
    let fraction = if total == 0 { 0.0 } else { valid as f64 / total as f64 };
    report.criterion("valid_fraction", fraction, Comparison::AtLeast, cfg.min_valid_fraction);
}

/// `(τ, j, k, seed)` over `taus × indices²`; seeds depend on `(j, k)` only,
/// so every τ sees the same packets.
fn index_sweep(taus: &[f64], indices: &[i32], seed: u64) -> Vec<(f64, i32, i32, u64)> {
    let mut out = Vec::with_capacity(taus.len() * indices.len() * indices.len());
    for &tau in taus {
        for (a, &j) in indices.iter().enumerate() {
            for (b, &k) in indices.iter().enumerate() {
                out.push((tau, j, k, seed.wrapping_add((a * indices.len() + b) as u64)));
            }
        }
    }
    out
}

/// Decay of `‖T(v1,v2,v3)(τ)‖₁` in τ for Gaussian inputs.
pub fn check_decay(cfg: &LabConfig) -> Result<EstimateReport> {
    let c = &cfg.lemma21;
    let mut report = EstimateReport::new(EstimateId::TrilinearDecay, sweep_spec(c), cfg.max_fit_rms);
    report.environment.grids.push(c.grid);
    let v: Vec<Field> = c
        .widths
        .iter()
        .map(|w| make_field(&TestFamily::gaussian(*w), &c.grid))
        .collect::<Result<_>>()?;
    let inputs_l1 = v[0].lp_norm(1.0)? * v[1].lp_norm(1.0)? * v[2].lp_norm(1.0)?;
    let rows: Vec<(f64, f64, f64)> = c
        .taus
        .par_iter()
        .map(|&tau| {
            let inp = TrilinearInputs::new(tau, v[0].clone(), v[1].clone(), v[2].clone())?;
            let out = trilinear::eval(&inp);
            Ok((tau, out.lp_norm(1.0)?, wraparound(&inp, &out)))
        })
        .collect::<Result<_>>()?;
    report.table = Table::new(&["tau", "l1_norm", "ratio", "wraparound"]);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (tau, norm, wrap) in rows {
        let ratio = tau * norm / inputs_l1;
        report.table.push(vec![tau, norm, ratio, wrap]);
        if wrap > cfg.wraparound_limit {
            report.exclude(format!("tau={tau}"), format!("wraparound mass {wrap:.3e}"));
            continue;
        }
        report.measured_ratios.push(ratio);
        xs.push(tau.ln());
        ys.push(norm.ln());
    }
    valid_fraction(&mut report, xs.len(), c.taus.len(), cfg);
    if xs.len() >= 2 {
        report.fit("tau_decay", linear_fit(&xs, &ys)?, c.slope_target, c.slope_tolerance);
    }
    Ok(report.finish())
}

/// Growth of `‖T‖₂ / ∏‖v_i‖₂` in the annulus indices `j`, `k` of `v2`, `v3`.
pub fn check_growth(cfg: &LabConfig) -> Result<EstimateReport> {
    let c = &cfg.lemma22;
    let mut report = EstimateReport::new(EstimateId::TrilinearGrowth, sweep_spec(c), cfg.max_fit_rms);
    report.environment.grids.push(c.grid);
    let points = index_sweep(&c.taus, &c.indices, cfg.seed);
    report.environment.seeds = points.iter().take(c.indices.len().pow(2)).map(|p| p.3).collect();
    let rows: Vec<(f64, i32, i32, f64, f64, f64)> = points
        .par_iter()
        .map(|&(tau, j, k, seed)| {
            let inp = trilinear::focused_inputs(tau, j, k, c.ball, &c.grid, seed)?;
            let out = trilinear::eval(&inp);
            let norm = out.lp_norm(2.0)?;
            Ok((tau, j, k, norm, norm / product_norm(&inp, 2.0)?, wraparound(&inp, &out)))
        })
        .collect::<Result<_>>()?;
    report.table = Table::new(&["tau", "j", "k", "l2_norm", "ratio", "wraparound"]);
    let ln2 = std::f64::consts::LN_2;
    let mut valid = 0;
    for &tau in &c.taus {
        let (mut a, mut b, mut y) = (Vec::new(), Vec::new(), Vec::new());
        for &(t, j, k, norm, ratio, wrap) in rows.iter().filter(|r| r.0 == tau) {
            report.table.push(vec![t, j as f64, k as f64, norm, ratio, wrap]);
            if wrap > cfg.wraparound_limit {
                report.exclude(format!("tau={t},j={j},k={k}"), format!("wraparound mass {wrap:.3e}"));
                continue;
            }
            report.measured_ratios.push(ratio);
            a.push(j as f64 * ln2);
            b.push(k as f64 * ln2);
            y.push(ratio.ln());
        }
        valid += y.len();
        if y.len() >= 3 {
            let plane = plane_fit(&a, &b, &y)?;
            for (name, slope) in [("j", plane.slope_a), ("k", plane.slope_b)] {
                let fit = LinearFit {
                    slope,
                    intercept: plane.intercept,
                    rms_residual: plane.rms_residual,
                };
                report.fit(&format!("{name}_growth(tau={tau})"), fit, c.slope_target, c.slope_tolerance);
            }
        }
    }
    valid_fraction(&mut report, valid, points.len(), cfg);
    Ok(report.finish())
}

/// Spread of `‖T‖_p / (τ^{−(2/p−1)} 2^{(1−1/p)(j+k)} ∏‖v_i‖_p)` over the sweep.
pub fn check_interpolation(cfg: &LabConfig) -> Result<EstimateReport> {
    let c = &cfg.lemma23;
    let mut report = EstimateReport::new(EstimateId::TrilinearInterpolation, sweep_spec(c), cfg.max_fit_rms);
    report.environment.grids.push(c.grid);
    let points = index_sweep(&c.taus, &c.indices, cfg.seed);
    report.environment.seeds = points.iter().take(c.indices.len().pow(2)).map(|p| p.3).collect();
    let rows: Vec<(f64, Vec<trilinear::SweepRow>)> = points
        .par_iter()
        .map(|&(tau, j, k, seed)| {
            let inp = trilinear::focused_inputs(tau, j, k, c.ball, &c.grid, seed)?;
            let out = trilinear::eval(&inp);
            let per_p = c
                .ps
                .iter()
                .map(|&p| {
                    let norm = out.lp_norm(p)?;
                    let bound = tau.powf(-(2.0 / p - 1.0))
                        * 2f64.powf((1.0 - 1.0 / p) * (j + k) as f64)
                        * product_norm(&inp, p)?;
                    Ok(trilinear::SweepRow { tau, j, k, p, norm, bound, ratio: norm / bound })
                })
                .collect::<Result<_>>()?;
            Ok((wraparound(&inp, &out), per_p))
        })
        .collect::<Result<_>>()?;
    report.table = Table::new(&["tau", "j", "k", "p", "norm", "bound", "ratio", "wraparound"]);
    let mut valid = 0;
    for (wrap, per_p) in &rows {
        for row in per_p {
            report.table.push(vec![row.tau, row.j as f64, row.k as f64, row.p, row.norm, row.bound, row.ratio, *wrap]);
            if *wrap > cfg.wraparound_limit {
                report.exclude(
                    format!("tau={},j={},k={},p={}", row.tau, row.j, row.k, row.p),
                    format!("wraparound mass {wrap:.3e}"),
                );
                continue;
            }
            valid += 1;
            report.measured_ratios.push(row.ratio);
        }
    }
    valid_fraction(&mut report, valid, points.len() * c.ps.len(), cfg);
    report.criterion("ratio_spread", spread(&report.measured_ratios), Comparison::Below, c.max_spread);
    Ok(report.finish())
}
