//! Experiment file: one JSON document with `run`, `solver`, `verify` and
//! `sweep` blocks. Every block is optional and strict about its keys.

use std::fs;
use std::path::{Path, PathBuf};

use nls_lab::lab::{self, EstimateId, LabConfig};
use nls_lab::picard::{HorizonRule, ProbeGrid, SolverConfig};
use nls_lab::{Grid, LabError, TestFamily};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunBlock,
    pub solver: SolverBlock,
    pub verify: VerifyBlock,
    pub sweep: SweepBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunBlock {
    /// Root for run directories; `--out` and `NLS_LAB_OUT` take precedence in that order.
    pub out_dir: Option<PathBuf>,
    /// Replaces `verify.lab.seed` when set.
    pub seed: Option<u64>,
    /// Grid of the `solve` and `sweep` initial data.
    pub grid: Grid,
}

impl Default for RunBlock {
    fn default() -> Self {
        RunBlock {
            out_dir: None,
            seed: None,
            grid: Grid::new(1, 1024, 80.0).expect("default grid"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Besov,
    #[serde(rename = "lp_1d")]
    Lp1d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverBlock {
    pub mode: ModeName,
    pub p: f64,
    pub sign: i8,
    pub tol: f64,
    pub max_iter: usize,
    pub nodes_per_unit: usize,
    pub horizon: HorizonRule,
    pub probe: ProbeGrid,
    pub initial: TestFamily,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            mode: ModeName::Besov,
            p: 1.5,
            sign: 1,
            tol: 1e-10,
            max_iter: 60,
            nodes_per_unit: 200,
            horizon: HorizonRule::Auto,
            probe: ProbeGrid::default(),
            initial: TestFamily::modulated_gaussian(3.0, 4.0, 0.4),
        }
    }
}

impl SolverBlock {
    pub fn solver_config(&self) -> nls_lab::Result<SolverConfig> {
        let base = match self.mode {
            ModeName::Besov => SolverConfig::besov(self.p, self.sign)?,
            ModeName::Lp1d => SolverConfig::lp_1d(self.p, self.sign)?,
        };
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            probe: self.probe,
            ..base
        }
        .with_horizon(self.horizon)
        .with_nodes_per_unit(self.nodes_per_unit)
        .validated(1)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyBlock {
    /// Estimate ids to run; all of them when empty.
    pub estimates: Vec<String>,
    pub lab: LabConfig,
}

/// Cartesian sweep. Empty solver lists fall back to the `solver` block value;
/// checks run once per seed (the run seed when `seeds` is empty).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    pub amplitudes: Vec<f64>,
    pub ps: Vec<f64>,
    pub nodes_per_unit: Vec<usize>,
    pub estimates: Vec<String>,
    pub seeds: Vec<u64>,
}

fn keyed(block: &str, e: LabError) -> Failure {
    match e {
        LabError::InvalidParameter { name, reason } => Failure::Config(format!("{block}.{name}: {reason}")),
        LabError::InvalidGrid(reason) => Failure::Config(format!("{block}: invalid grid: {reason}")),
        e => Failure::from(e),
    }
}

pub fn parse_estimates(list: &[String], key: &str) -> Result<Vec<EstimateId>, Failure> {
    if list.is_empty() {
        return Ok(EstimateId::ALL.to_vec());
    }
    lab::parse_ids(&list.join(",")).map_err(|e| match e {
        LabError::InvalidParameter { reason, .. } => Failure::Config(format!("{key}: {reason}")),
        e => Failure::from(e),
    })
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, Failure> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                Failure::Config(format!("config: {}", e.inner()))
            } else {
                Failure::Config(format!("config key `{path}`: {}", e.inner()))
            }
        })
    }

    /// Lab settings with the run seed applied.
    pub fn lab(&self) -> LabConfig {
        let mut lab = self.verify.lab.clone();
        if let Some(seed) = self.run.seed {
            lab.seed = seed;
        }
        lab
    }

    /// Full structural validation; nothing is computed before this passes.
    pub fn validate(&self) -> Result<(), Failure> {
        self.run.grid.validated().map_err(|e| keyed("run.grid", e))?;
        self.solver.solver_config().map_err(|e| keyed("solver", e))?;
        self.lab().validated().map_err(|e| keyed("verify.lab", e))?;
        parse_estimates(&self.verify.estimates, "verify.estimates")?;
        parse_estimates(&self.sweep.estimates, "sweep.estimates")?;
        for (i, &a) in self.sweep.amplitudes.iter().enumerate() {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Failure::Config(format!("sweep.amplitudes[{i}]: must be finite and non-negative, got {a}")));
            }
        }
        for &p in &self.sweep.ps {
            let block = SolverBlock { p, ..self.solver.clone() };
            block.solver_config().map_err(|e| keyed("sweep.ps", e))?;
        }
        if self.sweep.nodes_per_unit.contains(&0) {
            return Err(Failure::Config("sweep.nodes_per_unit: entries must be at least 1".into()));
        }
        Ok(())
    }
}
