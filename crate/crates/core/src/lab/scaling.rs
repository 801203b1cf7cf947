use super::report::{Comparison, EstimateReport, Table};
use super::{sweep_spec, EstimateId, LabConfig};
use crate::error::{LabError, Result};
use crate::family::{make_field, TestFamily};
use crate::picard::{self, HorizonRule, SolverConfig};

/// `u_λ(t, x) = λu(λ²t, λx)`: exact norm scaling of the data and covariance
/// of the discrete solution on a box shrunk by `λ`.
pub fn check_scaling(cfg: &LabConfig) -> Result<EstimateReport> {
    let c = &cfg.scaling_rem16;
    let lambda = c.lambda;
    let mut report = EstimateReport::new(EstimateId::Scaling, sweep_spec(c), cfg.max_fit_rms);
    let small = c.grid.dilated(1.0 / lambda)?;
    report.environment.grids = vec![c.grid, small];
    // λe^{−λ²x²/w²} sampled on the shrunk box is λ times the base samples
    let u0 = make_field(&TestFamily::gaussian(c.width).with_amplitude(c.amplitude), &c.grid)?;
    let u0_lambda = make_field(
        &TestFamily::gaussian(c.width / lambda).with_amplitude(lambda * c.amplitude),
        &small,
    )?;

    report.table = Table::new(&["p", "scaled_norm", "predicted_norm", "relative_error", "solution_error"]);
    for &p in &c.norm_ps {
        let scaled = u0_lambda.lp_norm(p)?;
        let predicted = lambda.powf(1.0 - 1.0 / p) * u0.lp_norm(p)?;
        let err = (scaled / predicted - 1.0).abs();
        let tolerance = if p == 1.0 { c.l1_tolerance } else { c.lp_tolerance };
        report.table.push(vec![p, scaled, predicted, err, f64::NAN]);
        report.measured_ratios.push(scaled / predicted);
        report.criterion(&format!("norm_scaling(p={p})"), err, Comparison::AtMost, tolerance);
    }

    let base_cfg = SolverConfig::lp_1d(c.p, c.sign)?
        .with_horizon(HorizonRule::Fixed(c.horizon))
        .with_nodes_per_unit(c.nodes_per_unit);
    let small_cfg = base_cfg.clone().with_horizon(HorizonRule::Fixed(c.horizon / (lambda * lambda)));
    let (base, _) = picard::solve(&u0, &base_cfg)?;
    let (dilated, _) = picard::solve(&u0_lambda, &small_cfg)?;
    if base.nodes.len() != dilated.nodes.len() {
        return Err(LabError::param(
            "scaling_rem16.horizon",
            format!("node counts differ ({} vs {})", base.nodes.len(), dilated.nodes.len()),
        ));
    }
    let mut worst: f64 = 0.0;
    for (u, u_lambda) in base.transported().iter().zip(dilated.transported()) {
        let (mut diff, mut norm) = (0.0, 0.0);
        for (a, b) in u.values().iter().zip(u_lambda.values()) {
            diff += (a * lambda - b).norm_sqr();
            norm += b.norm_sqr();
        }
        worst = worst.max((diff / norm).sqrt());
    }
    report.table.push(vec![c.p, f64::NAN, f64::NAN, f64::NAN, worst]);
    report.criterion("solution_covariance", worst, Comparison::Below, c.max_covariance_error);
    Ok(report.finish())
}
