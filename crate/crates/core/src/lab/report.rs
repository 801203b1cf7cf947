use std::io::Write;

use serde::{Deserialize, Deserializer, Serialize};

use super::fit::LinearFit;
use super::EstimateId;
use crate::error::Result;
use crate::grid::Grid;
use crate::io::fmt_f64;

// Non-finite floats are written as `null`; read them back as NaN so a
// persisted report always reloads.
fn nullable<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn nullable_vec<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    Ok(Vec::<Option<f64>>::deserialize(d)?
        .into_iter()
        .map(|v| v.unwrap_or(f64::NAN))
        .collect())
}

fn nullable_rows<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<f64>>, D::Error> {
    Ok(Vec::<Vec<Option<f64>>>::deserialize(d)?
        .into_iter()
        .map(|row| row.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `value ≤ threshold`
    AtMost,
    /// `value < threshold`
    Below,
    /// `value ≥ threshold`
    AtLeast,
}

impl Comparison {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::AtMost => value <= threshold,
            Comparison::Below => value < threshold,
            Comparison::AtLeast => value >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    #[serde(deserialize_with = "nullable")]
    pub value: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedExponent {
    pub name: String,
    #[serde(deserialize_with = "nullable")]
    pub slope: f64,
    #[serde(deserialize_with = "nullable")]
    pub intercept: f64,
    #[serde(deserialize_with = "nullable")]
    pub rms_residual: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub point: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Environment {
    pub grids: Vec<Grid>,
    pub seeds: Vec<u64>,
}

/// Plot-ready sweep table.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    #[serde(deserialize_with = "nullable_rows")]
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate_id: EstimateId,
    pub sweep_spec: serde_json::Value,
    #[serde(deserialize_with = "nullable_vec")]
    pub measured_ratios: Vec<f64>,
    pub fitted_exponents: Vec<FittedExponent>,
    /// Fits with a larger log-log RMS residual cannot pass.
    pub max_fit_rms: f64,
    pub criteria: Vec<Criterion>,
    pub verdict: Verdict,
    pub environment: Environment,
    pub table: Table,
    pub excluded: Vec<Exclusion>,
}

impl EstimateReport {
    pub fn new(estimate_id: EstimateId, sweep_spec: serde_json::Value, max_fit_rms: f64) -> Self {
        EstimateReport {
            estimate_id,
            sweep_spec,
            measured_ratios: Vec::new(),
            fitted_exponents: Vec::new(),
            max_fit_rms,
            criteria: Vec::new(),
            verdict: Verdict::Fail,
            environment: Environment::default(),
            table: Table::default(),
            excluded: Vec::new(),
        }
    }

    pub fn criterion(&mut self, name: &str, value: f64, comparison: Comparison, threshold: f64) {
        self.criteria.push(Criterion {
            name: name.to_string(),
            value,
            threshold,
            comparison,
            passed: comparison.holds(value, threshold),
        });
    }

    pub fn fit(&mut self, name: &str, fit: LinearFit, target: f64, tolerance: f64) {
        self.fitted_exponents.push(FittedExponent {
            name: name.to_string(),
            slope: fit.slope,
            intercept: fit.intercept,
            rms_residual: fit.rms_residual,
            target,
            tolerance,
            passed: fit_passes(fit.slope, fit.rms_residual, target, tolerance, self.max_fit_rms),
        });
    }

    pub fn exclude(&mut self, point: String, reason: String) {
        self.excluded.push(Exclusion { point, reason });
    }

    pub fn finish(mut self) -> Self {
        self.verdict = self.recompute_verdict();
        self
    }

    /// The verdict implied by the stored criteria and fits alone.
    pub fn recompute_verdict(&self) -> Verdict {
        let criteria_ok = !self.criteria.is_empty()
            && self
                .criteria
                .iter()
                .all(|c| c.comparison.holds(c.value, c.threshold));
        let fits_ok = self
            .fitted_exponents
            .iter()
            .all(|f| fit_passes(f.slope, f.rms_residual, f.target, f.tolerance, self.max_fit_rms));
        if criteria_ok && fits_ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// One-line summary: id, verdict and the failing items if any.
    pub fn summary_line(&self) -> String {
        let mut failing: Vec<String> = self
            .criteria
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} = {:.4e} vs {:.4e}", c.name, c.value, c.threshold))
            .collect();
        failing.extend(
            self.fitted_exponents
                .iter()
                .filter(|f| !f.passed)
                .map(|f| format!("{} slope {:.4} (rms {:.3})", f.name, f.slope, f.rms_residual)),
        );
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        if failing.is_empty() {
            format!("{:<20} {verdict}", self.estimate_id.as_str())
        } else {
            format!("{:<20} {verdict}  {}", self.estimate_id.as_str(), failing.join("; "))
        }
    }
}

fn fit_passes(slope: f64, rms: f64, target: f64, tolerance: f64, max_rms: f64) -> bool {
    (slope - target).abs() <= tolerance && rms <= max_rms
}
