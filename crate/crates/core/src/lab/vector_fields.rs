use rayon::prelude::*;

use super::fit::{linear_fit, spread};
use super::report::{Comparison, EstimateReport, Table};
use super::{sweep_spec, EstimateId, LabConfig};
use crate::error::Result;
use crate::family::{make_field, TestFamily};
use crate::field::Field;
use crate::propagator;

/// `‖(1 + |ξ|²)^{s/2} û‖₂`
pub fn sobolev_norm(f: &Field, s: f64) -> f64 {
    f.map_spectrum(|xi, c| c * (1.0 + xi[0] * xi[0] + xi[1] * xi[1]).powf(0.5 * s))
        .spectral_l2_norm()
}

fn x_power(f: &Field, power: usize) -> Field {
    f.map_values(|x, v| v * x[0].powi(power as i32))
}

/// `L(t)S(t)u0 = S(t)(x u0)` and `‖L^α(t)u(t)‖₂ = ‖x^α u0‖₂` on Gaussian data.
pub fn check_conjugation(cfg: &LabConfig) -> Result<EstimateReport> {
    let c = &cfg.conjugation_a9;
    let mut report = EstimateReport::new(EstimateId::Conjugation, sweep_spec(c), cfg.max_fit_rms);
    report.environment.grids.push(c.grid);
    let u0 = make_field(&TestFamily::gaussian(c.width), &c.grid)?;
    let xu0 = x_power(&u0, 1);
    // (t, residual, [(α, ‖L^α u(t)‖₂, ‖x^α u0‖₂)])
    type Row = (f64, f64, Vec<(usize, f64, f64)>);
    let rows: Vec<Row> = c
        .times
        .par_iter()
        .map(|&t| {
            let u = propagator::apply(t, &u0);
            let lhs = propagator::l_operator(t, &u, 0)?;
            let rhs = propagator::apply(t, &xu0);
            let residual = lhs.relative_l2_distance(&rhs)?;
            let norms = c
                .powers
                .iter()
                .map(|&a| {
                    let moved = propagator::l_power(t, &u, &[a])?.lp_norm(2.0)?;
                    Ok((a, moved, x_power(&u0, a).lp_norm(2.0)?))
                })
                .collect::<Result<_>>()?;
            Ok((t, residual, norms))
        })
        .collect::<Result<_>>()?;
    report.table = Table::new(&["t", "residual", "alpha", "l_alpha_norm", "x_alpha_norm", "drift"]);
    let (mut worst_residual, mut worst_drift) = (0.0f64, 0.0f64);
    for (t, residual, norms) in rows {
        worst_residual = worst_residual.max(residual);
        report.measured_ratios.push(residual);
        for (a, moved, initial) in norms {
            let drift = (moved / initial - 1.0).abs();
            worst_drift = worst_drift.max(drift);
            report.table.push(vec![t, residual, a as f64, moved, initial, drift]);
        }
    }
    report.criterion("max_residual", worst_residual, Comparison::Below, c.max_residual);
    report.criterion("max_norm_drift", worst_drift, Comparison::AtMost, c.max_drift);
    Ok(report.finish())
}

/// Free Gaussian: `‖u(t)‖_∞(1+t)^{n/2} / (Σ_{|α|≤s}‖L^α u‖₂ + ‖u‖_{H^s})` and
/// the decay slope of `‖u(t)‖_∞` against `1 + t`, with `s` the least integer
/// above `n/2`.
pub fn check_global_sobolev(cfg: &LabConfig) -> Result<EstimateReport> {
    let c = &cfg.global_sobolev_a13;
    let mut report = EstimateReport::new(EstimateId::GlobalSobolev, sweep_spec(c), cfg.max_fit_rms);
    report.environment.grids.push(c.grid);
    let n = c.grid.dim();
    let s = n / 2 + 1;
    let u0 = make_field(&TestFamily::gaussian(c.width), &c.grid)?;
    let rows: Vec<(f64, f64, f64, f64)> = c
        .times
        .par_iter()
        .map(|&t| {
            let u = propagator::apply(t, &u0);
            let mut weighted = 0.0;
            for a in 0..=s {
                weighted += propagator::l_power(t, &u, &[a])?.lp_norm(2.0)?;
            }
            let denominator = weighted + sobolev_norm(&u, s as f64);
            Ok((t, u.max_modulus(), denominator, u.edge_mass_fraction(0.4)))
        })
        .collect::<Result<_>>()?;
    report.table = Table::new(&["t", "sup_norm", "vector_field_norm", "ratio", "edge_mass"]);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (t, sup, denominator, edge) in rows {
        let ratio = sup * (1.0 + t).powf(0.5 * n as f64) / denominator;
        report.table.push(vec![t, sup, denominator, ratio, edge]);
        if edge > c.box_escape_limit {
            report.exclude(format!("t={t}"), format!("edge mass {edge:.3e}"));
            continue;
        }
        report.measured_ratios.push(ratio);
        xs.push((1.0 + t).ln());
        ys.push(sup.ln());
    }
    let valid = xs.len() as f64 / c.times.len() as f64;
    report.criterion("valid_fraction", valid, Comparison::AtLeast, cfg.min_valid_fraction);
    report.criterion("ratio_spread", spread(&report.measured_ratios), Comparison::Below, c.max_spread);
    if xs.len() >= 2 {
        report.fit("sup_decay", linear_fit(&xs, &ys)?, c.slope_target, c.slope_tolerance);
    }
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn sobolev_norm_of_gaussian() {
        // e^{-x²}: ‖u‖₂² = √(π/2), ‖u'‖₂² = √(π/2)
        let g = Grid::new(1, 1024, 40.0).unwrap();
        let u = make_field(&TestFamily::gaussian(1.0), &g).unwrap();
        let expected = (2.0 * (std::f64::consts::PI / 2.0).sqrt()).sqrt();
        assert!((sobolev_norm(&u, 1.0) - expected).abs() < 1e-12);
        assert!((sobolev_norm(&u, 0.0) - u.lp_norm(2.0).unwrap()).abs() < 1e-12);
    }
}
