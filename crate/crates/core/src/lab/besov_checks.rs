use num_complex::Complex64;
use rayon::prelude::*;

use super::fit::spread;
use super::report::{Comparison, EstimateReport, Table};
use super::{draw_packet, sweep_spec, EstimateId, LabConfig};
use crate::besov::{besov_norm, make_partition, BesovParams, TransitionProfile};
use crate::error::{LabError, Result};
use crate::family::{make_field, TestFamily};
use crate::picard::{self, HorizonRule, ModeNorm, SolveDiagnostics, SolverConfig};

/// `τ^θ‖F(τ; w)‖_B / ‖w‖_B³` over τ and random modulated Gaussians `w`.
pub fn check_nonlinear_bound(cfg: &LabConfig) -> Result<EstimateReport> {
    let c = &cfg.eq_c13;
    let mut report = EstimateReport::new(EstimateId::NonlinearBound, sweep_spec(c), cfg.max_fit_rms);
    report.environment.grids.push(c.grid);
    let params = BesovParams::critical(c.grid.dim(), c.p)?;
    let part = make_partition(&c.grid, TransitionProfile::default())?;
    let theta = c.grid.dim() as f64 * (2.0 / c.p - 1.0);
    let seeds: Vec<u64> = (0..cfg.samples).map(|i| cfg.sample_seed(i)).collect();
    report.environment.seeds = seeds.clone();
    // (seed, w norm, w tail, [(tau, F norm, F tail)])
    type Sample = (u64, f64, f64, Vec<(f64, f64, f64)>);
    let samples: Vec<Sample> = seeds
        .par_iter()
        .map(|&seed| {
            let w = make_field(&draw_packet(&c.data, seed), &c.grid)?;
            let wn = besov_norm(&w, &params, &part)?;
            let per_tau = c
                .taus
                .iter()
                .map(|&tau| {
                    let f = picard::nonlinear_density(tau, &w, 1.0)?;
                    let fnorm = besov_norm(&f, &params, &part)?;
                    Ok((tau, fnorm.value, fnorm.tail_fraction))
                })
                .collect::<Result<_>>()?;
            Ok((seed, wn.value, wn.tail_fraction, per_tau))
        })
        .collect::<Result<_>>()?;
    report.table = Table::new(&["seed", "tau", "w_norm", "f_norm", "ratio", "tail_fraction"]);
    let limit = crate::besov::TAIL_LIMIT;
    let mut valid = 0;
    for (seed, wn, wtail, per_tau) in &samples {
        for &(tau, fnorm, ftail) in per_tau {
            let ratio = tau.powf(theta) * fnorm / wn.powi(3);
            let tail = wtail.max(ftail);
            report.table.push(vec![*seed as f64, tau, *wn, fnorm, ratio, tail]);
            if tail > limit {
                report.exclude(format!("seed={seed},tau={tau}"), format!("Besov tail fraction {tail:.3e}"));
                continue;
            }
            valid += 1;
            report.measured_ratios.push(ratio);
        }
    }
    let total = samples.len() * c.taus.len();
    report.criterion("valid_fraction", valid as f64 / total as f64, Comparison::AtLeast, cfg.min_valid_fraction);
    report.criterion("ratio_spread", spread(&report.measured_ratios), Comparison::Below, c.max_spread);
    Ok(report.finish())
}

/// Diagnostics of a solve, including those carried by a failed one.
fn diagnostics_of(res: Result<(picard::TimeSlab, SolveDiagnostics)>) -> Result<(Option<picard::TimeSlab>, SolveDiagnostics)> {
    match res {
        Ok((slab, diag)) => Ok((Some(slab), diag)),
        Err(LabError::NonContraction { diagnostics, .. }) | Err(LabError::AprioriBound { diagnostics, .. }) => {
            Ok((None, *diagnostics))
        }
        Err(e) => Err(e),
    }
}

/// Besov-mode solve under the auto horizon: contraction ratios, residual and
/// the a-priori bound.
pub fn check_contraction(cfg: &LabConfig) -> Result<EstimateReport> {
    let c = &cfg.contraction_c14_c16;
    let mut report = EstimateReport::new(EstimateId::Contraction, sweep_spec(c), cfg.max_fit_rms);
    report.environment.grids.push(c.grid);
    let u0 = make_field(&TestFamily::modulated_gaussian(c.width, c.modulation, c.amplitude), &c.grid)?;
    let mut scfg = SolverConfig::besov(c.p, c.sign)?.with_nodes_per_unit(c.nodes_per_unit);
    scfg.tol = c.tol;
    let (_, diag) = diagnostics_of(picard::solve(&u0, &scfg))?;
    report.table = Table::new(&["iteration", "distance", "contraction_ratio"]);
    for (i, d) in diag.iterate_distances.iter().enumerate() {
        let ratio = if i == 0 { 0.0 } else { diag.contraction_ratios[i - 1] };
        report.table.push(vec![(i + 1) as f64, *d, ratio]);
    }
    report.measured_ratios = diag.contraction_ratios.clone();
    let max_ratio = if diag.contraction_ratios.is_empty() { f64::NAN } else { diag.max_contraction_ratio() };
    report.criterion("max_contraction_ratio", max_ratio, Comparison::AtMost, c.max_ratio);
    report.criterion("converged", if diag.converged { 1.0 } else { 0.0 }, Comparison::AtLeast, 1.0);
    report.criterion("final_residual", diag.final_residual, Comparison::Below, c.max_residual);
    report.criterion("apriori_ratio", diag.apriori_ratio, Comparison::AtMost, c.max_apriori_ratio);
    Ok(report.finish())
}

/// `sup_τ‖v1 − v2‖ / ‖u01 − u02‖`, with `0/0` read as 0.
pub fn stability_quotient(numerator: f64, denominator: f64) -> f64 {
    if numerator == 0.0 && denominator == 0.0 {
        0.0
    } else {
        numerator / denominator
    }
}

/// Lipschitz quotient of data-to-solution over random perturbation pairs.
/// Both solves share the horizon chosen for the first datum.
pub fn check_stability(cfg: &LabConfig) -> Result<EstimateReport> {
    let c = &cfg.stability_c19;
    let mut report = EstimateReport::new(EstimateId::Stability, sweep_spec(c), cfg.max_fit_rms);
    report.environment.grids.push(c.grid);
    let base = SolverConfig::besov(c.p, c.sign)?.with_nodes_per_unit(c.nodes_per_unit);
    let norm = ModeNorm::new(&base, &c.grid)?;
    let n = cfg.samples;
    let pairs: Vec<(u64, u64)> = (0..n).map(|i| (cfg.sample_seed(i), cfg.sample_seed(n + i))).collect();
    report.environment.seeds = pairs.iter().flat_map(|(a, b)| [*a, *b]).collect();
    // (data seed, horizon, data distance, sup distance) or an exclusion reason
    type Row = std::result::Result<(u64, f64, f64, f64), (u64, String)>;
    let rows: Vec<Row> = pairs
        .par_iter()
        .map(|&(seed, dir_seed)| {
            let u01 = make_field(&draw_packet(&c.data, seed), &c.grid)?;
            let dir = make_field(&draw_packet(&c.data, dir_seed).with_amplitude(1.0), &c.grid)?;
            let eps = c.perturbation * norm.state(&u01)? / norm.increment(&dir)?;
            let u02 = u01.axpy(Complex64::new(eps, 0.0), &dir)?;
            let data_distance = norm.increment(&u01.sub(&u02)?)?;
            let first = match picard::solve(&u01, &base) {
                Ok(r) => r,
                Err(e) if e.is_numerical() => return Ok(Err((seed, e.to_string()))),
                Err(e) => return Err(e),
            };
            let fixed = base.clone().with_horizon(HorizonRule::Fixed(first.0.horizon));
            let second = match picard::solve(&u02, &fixed) {
                Ok(r) => r,
                Err(e) if e.is_numerical() => return Ok(Err((seed, e.to_string()))),
                Err(e) => return Err(e),
            };
            let sup = first
                .0
                .states
                .iter()
                .zip(&second.0.states)
                .map(|(a, b)| norm.increment(&a.sub(b)?))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(data_distance, f64::max);
            Ok(Ok((seed, first.0.horizon, data_distance, sup)))
        })
        .collect::<Result<_>>()?;
    report.table = Table::new(&["seed", "horizon", "data_distance", "solution_distance", "quotient"]);
    for row in rows {
        match row {
            Ok((seed, horizon, dd, sup)) => {
                let q = stability_quotient(sup, dd);
                report.table.push(vec![seed as f64, horizon, dd, sup, q]);
                report.measured_ratios.push(q);
            }
            Err((seed, reason)) => report.exclude(format!("seed={seed}"), reason),
        }
    }
    let valid = report.measured_ratios.len();
    report.criterion("valid_fraction", valid as f64 / n as f64, Comparison::AtLeast, cfg.min_valid_fraction);
    let worst = report.measured_ratios.iter().copied().fold(0.0, f64::max);
    report.criterion("max_quotient", worst, Comparison::AtMost, c.max_quotient);
    Ok(report.finish())
}
