//! Verification harness: each estimate becomes a sweep of measured ratios,
//! exponent fits and threshold criteria, collected in an [`EstimateReport`].

pub mod config;
pub mod fit;
pub mod report;

mod besov_checks;
mod one_d;
mod scaling;
mod trilinear_checks;
mod vector_fields;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::family::TestFamily;
use crate::io;

pub use config::LabConfig;
pub use report::{Comparison, EstimateReport, Verdict};

pub use besov_checks::{check_contraction, check_nonlinear_bound, check_stability, stability_quotient};
pub use one_d::{check_strichartz, check_weighted_integral, check_weighted_l1};
pub use scaling::check_scaling;
pub use trilinear_checks::{check_decay, check_growth, check_interpolation};
pub use vector_fields::{check_conjugation, check_global_sobolev};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimateId {
    #[serde(rename = "lemma21")]
    TrilinearDecay,
    #[serde(rename = "lemma22")]
    TrilinearGrowth,
    #[serde(rename = "lemma23")]
    TrilinearInterpolation,
    #[serde(rename = "eq_c13")]
    NonlinearBound,
    #[serde(rename = "contraction_c14_c16")]
    Contraction,
    #[serde(rename = "stability_c19")]
    Stability,
    #[serde(rename = "lemma41")]
    WeightedL1,
    #[serde(rename = "lemma42_strichartz")]
    Strichartz,
    #[serde(rename = "lemma43_a80")]
    WeightedIntegral,
    #[serde(rename = "global_sobolev_a13")]
    GlobalSobolev,
    #[serde(rename = "scaling_rem16")]
    Scaling,
    #[serde(rename = "conjugation_a9")]
    Conjugation,
}

impl EstimateId {
    pub const ALL: [EstimateId; 12] = [
        EstimateId::TrilinearDecay,
        EstimateId::TrilinearGrowth,
        EstimateId::TrilinearInterpolation,
        EstimateId::NonlinearBound,
        EstimateId::Contraction,
        EstimateId::Stability,
        EstimateId::WeightedL1,
        EstimateId::Strichartz,
        EstimateId::WeightedIntegral,
        EstimateId::GlobalSobolev,
        EstimateId::Scaling,
        EstimateId::Conjugation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimateId::TrilinearDecay => "lemma21",
            EstimateId::TrilinearGrowth => "lemma22",
            EstimateId::TrilinearInterpolation => "lemma23",
            EstimateId::NonlinearBound => "eq_c13",
            EstimateId::Contraction => "contraction_c14_c16",
            EstimateId::Stability => "stability_c19",
            EstimateId::WeightedL1 => "lemma41",
            EstimateId::Strichartz => "lemma42_strichartz",
            EstimateId::WeightedIntegral => "lemma43_a80",
            EstimateId::GlobalSobolev => "global_sobolev_a13",
            EstimateId::Scaling => "scaling_rem16",
            EstimateId::Conjugation => "conjugation_a9",
        }
    }

    pub fn valid_ids() -> String {
        EstimateId::ALL.map(|id| id.as_str()).join(", ")
    }
}

impl fmt::Display for EstimateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimateId {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        EstimateId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                LabError::param(
                    "estimate_id",
                    format!("unknown estimate `{s}`; valid ids: {}", EstimateId::valid_ids()),
                )
            })
    }
}

/// Parses a comma-separated id list, keeping the order given and dropping repeats.
pub fn parse_ids(list: &str) -> Result<Vec<EstimateId>> {
    let mut out = Vec::new();
    for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let id: EstimateId = part.parse()?;
        if !out.contains(&id) {
            out.push(id);
        }
    }
    if out.is_empty() {
        return Err(LabError::param(
            "estimate_id",
            format!("empty selection; valid ids: {}", EstimateId::valid_ids()),
        ));
    }
    Ok(out)
}

pub fn run_check(id: EstimateId, cfg: &LabConfig) -> Result<EstimateReport> {
    match id {
        EstimateId::TrilinearDecay => check_decay(cfg),
        EstimateId::TrilinearGrowth => check_growth(cfg),
        EstimateId::TrilinearInterpolation => check_interpolation(cfg),
        EstimateId::NonlinearBound => check_nonlinear_bound(cfg),
        EstimateId::Contraction => check_contraction(cfg),
        EstimateId::Stability => check_stability(cfg),
        EstimateId::WeightedL1 => check_weighted_l1(cfg),
        EstimateId::Strichartz => check_strichartz(cfg),
        EstimateId::WeightedIntegral => check_weighted_integral(cfg),
        EstimateId::GlobalSobolev => check_global_sobolev(cfg),
        EstimateId::Scaling => check_scaling(cfg),
        EstimateId::Conjugation => check_conjugation(cfg),
    }
}

/// Runs the selected checks in parallel; reports come back in selection order.
pub fn run_checks(ids: &[EstimateId], cfg: &LabConfig) -> Result<Vec<EstimateReport>> {
    let cfg = cfg.clone().validated()?;
    ids.par_iter().map(|id| run_check(*id, &cfg)).collect()
}

pub fn check_trilinear_estimates(cfg: &LabConfig) -> Result<Vec<EstimateReport>> {
    run_checks(
        &[EstimateId::TrilinearDecay, EstimateId::TrilinearGrowth, EstimateId::TrilinearInterpolation],
        cfg,
    )
}

pub fn check_besov_contraction(cfg: &LabConfig) -> Result<Vec<EstimateReport>> {
    run_checks(
        &[EstimateId::NonlinearBound, EstimateId::Contraction, EstimateId::Stability],
        cfg,
    )
}

pub fn check_one_d_theorem(cfg: &LabConfig) -> Result<Vec<EstimateReport>> {
    run_checks(
        &[EstimateId::WeightedL1, EstimateId::Strichartz, EstimateId::WeightedIntegral],
        cfg,
    )
}

pub fn check_vector_fields(cfg: &LabConfig) -> Result<Vec<EstimateReport>> {
    run_checks(&[EstimateId::Conjugation, EstimateId::GlobalSobolev], cfg)
}

pub fn check_scaling_covariance(cfg: &LabConfig) -> Result<EstimateReport> {
    let cfg = cfg.clone().validated()?;
    check_scaling(&cfg)
}

/// Writes `<id>.json` (full report) and `<id>.csv` (sweep table) under `dir`.
pub fn persist_report(dir: &Path, report: &EstimateReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    let id = report.estimate_id.as_str();
    fs::write(dir.join(format!("{id}.json")), io::to_json_string(report)?)?;
    report.table.write_csv(fs::File::create(dir.join(format!("{id}.csv")))?)?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<EstimateReport> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Verdict table, one line per report.
pub fn summary_table(reports: &[EstimateReport]) -> String {
    let mut out = format!("{:<20} verdict\n", "estimate_id");
    for r in reports {
        out.push_str(&r.summary_line());
        out.push('\n');
    }
    out
}

/// Seeded modulated Gaussian with parameters drawn from `draw`.
pub(crate) fn draw_packet(draw: &config::PacketDraw, seed: u64) -> TestFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick = |r: config::Range| {
        if r.max > r.min {
            rng.gen_range(r.min..=r.max)
        } else {
            r.min
        }
    };
    let width = pick(draw.width);
    let modulation = pick(draw.modulation);
    let amplitude = pick(draw.amplitude);
    TestFamily::modulated_gaussian(width, modulation, amplitude)
}

pub(crate) fn sweep_spec<T: Serialize>(section: &T) -> serde_json::Value {
    serde_json::to_value(section).expect("config sections serialize")
}
