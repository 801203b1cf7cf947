//! Fixed-point solver for the interaction representation `v(t) = S(−t)u(t)`
//! of `iu_t − Δu = σ|u|²u`:
//!
//! `v(τ) = u0 + ∫_0^τ F(s; v) ds`, `F(τ; w) = −iσ S(−τ)[S(−τ)w̄ · (S(τ)w)²]`.

pub mod quadrature;
pub mod splitstep;

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::besov::{self, BesovParams, DyadicPartition, TransitionProfile};
use crate::error::{LabError, Result};
use crate::field::Field;
use crate::io::{self, fmt_f64};
use crate::propagator;
use crate::trilinear::{self, TrilinearInputs};

pub use splitstep::{checked_splitstep, reference_splitstep, SplitStepCheck};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    /// Critical Besov space `Ḃ^{n(1−1/p)}_{p,1}`.
    Besov(BesovParams),
    /// `L^p(R)`, one dimension only.
    #[serde(rename = "lp_1d")]
    Lp1d { p: f64 },
}

impl SolverMode {
    pub fn p(&self) -> f64 {
        match self {
            SolverMode::Besov(b) => b.p,
            SolverMode::Lp1d { p } => *p,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SolverMode::Besov(_) => "besov",
            SolverMode::Lp1d { .. } => "lp_1d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonRule {
    Auto,
    Fixed(f64),
}

/// Log-spaced probe times for the effective constant of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        ProbeGrid {
            min: 1e-3,
            max: 4.0,
            count: 40,
        }
    }
}

impl ProbeGrid {
    pub fn times(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let (a, b) = (self.min.ln(), self.max.ln());
        (0..self.count)
            .map(|i| (a + (b - a) * i as f64 / (self.count - 1) as f64).exp())
            .collect()
    }
}

fn default_probe() -> ProbeGrid {
    ProbeGrid::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// `+1` focusing, `−1` defocusing.
    pub sign: i8,
    pub mode: SolverMode,
    /// Absolute stopping tolerance on the sup-in-time iterate distance.
    pub tol: f64,
    pub max_iter: usize,
    pub nodes_per_unit: usize,
    pub horizon_rule: HorizonRule,
    #[serde(default = "default_probe")]
    pub probe: ProbeGrid,
}

impl SolverConfig {
    pub fn besov(p: f64, sign: i8) -> Result<Self> {
        SolverConfig {
            sign,
            mode: SolverMode::Besov(BesovParams::critical(1, p)?),
            tol: 1e-10,
            max_iter: 60,
            nodes_per_unit: 200,
            horizon_rule: HorizonRule::Auto,
            probe: ProbeGrid::default(),
        }
        .validated(1)
    }

    pub fn lp_1d(p: f64, sign: i8) -> Result<Self> {
        SolverConfig {
            sign,
            mode: SolverMode::Lp1d { p },
            tol: 1e-10,
            max_iter: 60,
            nodes_per_unit: 200,
            horizon_rule: HorizonRule::Auto,
            probe: ProbeGrid::default(),
        }
        .validated(1)
    }

    pub fn with_horizon(mut self, rule: HorizonRule) -> Self {
        self.horizon_rule = rule;
        self
    }

    pub fn with_nodes_per_unit(mut self, n: usize) -> Self {
        self.nodes_per_unit = n;
        self
    }

    /// Checks the invariants for data living in `dim` dimensions.
    pub fn validated(self, dim: usize) -> Result<Self> {
        if self.sign != 1 && self.sign != -1 {
            return Err(LabError::param("sign", format!("must be +1 or -1, got {}", self.sign)));
        }
        let n = dim as f64;
        match self.mode {
            SolverMode::Besov(b) => {
                b.validated()?;
                let lower = 2.0 * n / (n + 1.0);
                if !(b.p > lower && b.p < 2.0) {
                    return Err(LabError::param("p", format!("besov mode needs {lower} < p < 2, got {}", b.p)));
                }
                let s = n * (1.0 - 1.0 / b.p);
                if (b.s - s).abs() > 1e-12 {
                    return Err(LabError::param("s", format!("besov mode needs s = n(1−1/p) = {s}, got {}", b.s)));
                }
            }
            SolverMode::Lp1d { p } => {
                if dim != 1 {
                    return Err(LabError::param("mode", "lp_1d needs a one-dimensional grid"));
                }
                if !(p > 1.0 && p < 2.0) {
                    return Err(LabError::param("p", format!("lp_1d mode needs 1 < p < 2, got {p}")));
                }
            }
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(LabError::param("tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(LabError::param("max_iter", "must be at least 1"));
        }
        if self.nodes_per_unit == 0 {
            return Err(LabError::param("nodes_per_unit", "must be at least 1"));
        }
        if let HorizonRule::Fixed(t) = self.horizon_rule {
            if !(t > 0.0 && t.is_finite()) {
                return Err(LabError::param("horizon_rule", format!("fixed horizon must be positive, got {t}")));
            }
        }
        let probe = self.probe;
        if !(probe.min > 0.0 && probe.max >= probe.min && probe.count > 0 && probe.max.is_finite()) {
            return Err(LabError::param("probe", "need 0 < min ≤ max and count ≥ 1"));
        }
        Ok(self)
    }

    /// Exponent of the singular weight: `n(2/p−1)` or `2/p−1`.
    pub fn theta(&self, dim: usize) -> f64 {
        match self.mode {
            SolverMode::Besov(b) => dim as f64 * (2.0 / b.p - 1.0),
            SolverMode::Lp1d { p } => 2.0 / p - 1.0,
        }
    }

    pub fn sign_f64(&self) -> f64 {
        self.sign as f64
    }
}

/// The norm the iteration is measured in.
#[derive(Debug, Clone)]
pub enum ModeNorm {
    Besov { params: BesovParams, partition: DyadicPartition },
    Lp { p: f64 },
}

impl ModeNorm {
    pub fn new(cfg: &SolverConfig, grid: &crate::grid::Grid) -> Result<Self> {
        Ok(match cfg.mode {
            SolverMode::Besov(params) => ModeNorm::Besov {
                params,
                partition: besov::make_partition(grid, TransitionProfile::default())?,
            },
            SolverMode::Lp1d { p } => ModeNorm::Lp { p },
        })
    }

    /// Norm of a state; unreliable Besov tails are errors.
    pub fn state(&self, f: &Field) -> Result<f64> {
        match self {
            ModeNorm::Besov { params, partition } => besov::besov_norm(f, params, partition)?.checked(),
            ModeNorm::Lp { p } => f.lp_norm(*p),
        }
    }

    /// Norm of a difference or increment; the tail is not checked because
    /// differences near the rounding floor have no meaningful spectrum shape.
    pub fn increment(&self, f: &Field) -> Result<f64> {
        match self {
            ModeNorm::Besov { params, partition } => Ok(besov::besov_norm(f, params, partition)?.value),
            ModeNorm::Lp { p } => f.lp_norm(*p),
        }
    }
}

/// Node states of a candidate `v` on `(0, T]`.
#[derive(Debug, Clone)]
pub struct TimeSlab {
    pub horizon: f64,
    pub theta: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<[f64; 2]>,
    pub initial: Field,
    pub states: Vec<Field>,
}

impl TimeSlab {
    /// Slab on graded nodes with every state equal to `u0`.
    pub fn constant(u0: &Field, horizon: f64, theta: f64, nodes_per_unit: usize) -> Result<Self> {
        let count = quadrature::node_count(horizon, nodes_per_unit);
        let nodes = quadrature::graded_nodes(horizon, count, theta)?;
        let weights = quadrature::interval_weights(&nodes, theta)?;
        Ok(TimeSlab {
            horizon,
            theta,
            states: vec![u0.clone(); nodes.len()],
            nodes,
            weights,
            initial: u0.clone(),
        })
    }

    pub fn with_states(&self, states: Vec<Field>) -> TimeSlab {
        TimeSlab {
            horizon: self.horizon,
            theta: self.theta,
            nodes: self.nodes.clone(),
            weights: self.weights.clone(),
            initial: self.initial.clone(),
            states,
        }
    }

    pub fn last(&self) -> &Field {
        self.states.last().expect("slab has at least one node")
    }

    /// `u(τ_m) = S(τ_m) v(τ_m)`.
    pub fn transported(&self) -> Vec<Field> {
        self.nodes
            .iter()
            .zip(&self.states)
            .map(|(t, v)| propagator::apply(*t, v))
            .collect()
    }
}

/// `F(τ; w) = −iσ S(−τ)[S(−τ)w̄ · (S(τ)w)²]`, dealiased.
pub fn nonlinear_density(tau: f64, w: &Field, sign: f64) -> Result<Field> {
    let inp = TrilinearInputs::new(tau, w.conj(), w.clone(), w.clone())?;
    Ok(trilinear::eval(&inp).scale(Complex64::new(0.0, -sign)))
}

fn densities(slab: &TimeSlab, sign: f64) -> Result<Vec<Field>> {
    slab.nodes
        .par_iter()
        .zip(slab.states.par_iter())
        .map(|(t, w)| nonlinear_density(*t, w, sign))
        .collect()
}

fn integrate(slab: &TimeSlab, u0: &Field, dens: &[Field]) -> Result<Vec<Field>> {
    u0.ensure_same_grid(&slab.initial)?;
    let zero = Field::zeros(*u0.grid());
    let ints = quadrature::cumulative(&slab.weights, dens, zero, |acc, w, f| {
        acc.axpy(Complex64::new(w, 0.0), f).expect("densities share the slab grid")
    });
    ints.iter().map(|i| u0.add(i)).collect()
}

/// `(Mw)(τ_m) = u0 + Σ weights·F(node; w)`.
pub fn picard_map(slab: &TimeSlab, u0: &Field, cfg: &SolverConfig) -> Result<TimeSlab> {
    Ok(map_with_densities(slab, u0, cfg)?.0)
}

fn map_with_densities(slab: &TimeSlab, u0: &Field, cfg: &SolverConfig) -> Result<(TimeSlab, Vec<Field>)> {
    let dens = densities(slab, cfg.sign_f64())?;
    let states = integrate(slab, u0, &dens)?;
    Ok((slab.with_states(states), dens))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonChoice {
    pub horizon: f64,
    /// Measured `max_τ τ^θ‖F(τ; u0)‖ / ‖u0‖³`.
    pub effective_constant: f64,
    pub initial_norm: f64,
}

/// `T = [2Ĉ (2‖u0‖)² / (1−θ)]^{−1/(1−θ)}`, which makes the measured analogue
/// of the contraction chain give a factor 1/2.
pub fn horizon_from_constant(c_hat: f64, norm: f64, theta: f64) -> f64 {
    if norm == 0.0 || c_hat == 0.0 {
        return 1.0;
    }
    let e = 1.0 - theta;
    (2.0 * c_hat * (2.0 * norm).powi(2) / e).powf(-1.0 / e)
}

pub fn choose_horizon(u0: &Field, cfg: &SolverConfig) -> Result<HorizonChoice> {
    let cfg = cfg.clone().validated(u0.grid().dim())?;
    let norm_kind = ModeNorm::new(&cfg, u0.grid())?;
    let norm = norm_kind.state(u0)?;
    if norm == 0.0 {
        return Ok(HorizonChoice {
            horizon: 1.0,
            effective_constant: 0.0,
            initial_norm: 0.0,
        });
    }
    let theta = cfg.theta(u0.grid().dim());
    let ratios: Vec<f64> = cfg
        .probe
        .times()
        .par_iter()
        .map(|&t| {
            let f = nonlinear_density(t, u0, cfg.sign_f64())?;
            Ok(t.powf(theta) * norm_kind.increment(&f)? / norm.powi(3))
        })
        .collect::<Result<_>>()?;
    let c_hat = ratios.into_iter().fold(0.0, f64::max);
    Ok(HorizonChoice {
        horizon: horizon_from_constant(c_hat, norm, theta),
        effective_constant: c_hat,
        initial_norm: norm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub tau: f64,
    pub norm: f64,
    /// Ratio of the last two per-node iterate differences.
    pub contraction_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub mode: String,
    pub sign: i8,
    pub p: f64,
    pub theta: f64,
    pub horizon_rule: HorizonRule,
    pub chosen_t: f64,
    pub effective_constant: Option<f64>,
    pub node_count: usize,
    pub iterations: usize,
    pub converged: bool,
    pub iterate_distances: Vec<f64>,
    pub contraction_ratios: Vec<f64>,
    /// `sup_m ‖v(τ_m) − (Mv)(τ_m)‖` after the last iterate.
    pub final_residual: f64,
    pub initial_norm: f64,
    /// `sup_m ‖v(τ_m)‖ / ‖u0‖`.
    pub apriori_ratio: f64,
    pub norm_history: Vec<NodeRecord>,
    /// `(∫_0^T τ^{θp′}‖F(τ)‖_p^{p′} dτ)^{1/p′}` (lp_1d mode).
    pub weighted_integral: Option<f64>,
}

impl SolveDiagnostics {
    pub fn max_contraction_ratio(&self) -> f64 {
        self.contraction_ratios.iter().copied().fold(0.0, f64::max)
    }

    /// Rows `tau,norm,contraction_ratio`; the ratio is blank where undefined.
    pub fn write_norm_history_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "tau,norm,contraction_ratio")?;
        for r in &self.norm_history {
            let ratio = r.contraction_ratio.map(fmt_f64).unwrap_or_default();
            writeln!(w, "{},{},{}", fmt_f64(r.tau), fmt_f64(r.norm), ratio)?;
        }
        Ok(())
    }
}

fn weighted_integral(nodes: &[f64], dens: &[Field], p: f64, theta: f64) -> Result<f64> {
    let q = p / (p - 1.0);
    let mut t_prev = 0.0;
    let mut g_prev = 0.0;
    let mut total = 0.0;
    for (t, f) in nodes.iter().zip(dens) {
        let g = t.powf(theta * q) * f.lp_norm(p)?.powf(q);
        total += 0.5 * (t - t_prev) * (g + g_prev);
        t_prev = *t;
        g_prev = g;
    }
    Ok(total.powf(1.0 / q))
}

pub fn solve(u0: &Field, cfg: &SolverConfig) -> Result<(TimeSlab, SolveDiagnostics)> {
    let dim = u0.grid().dim();
    let cfg = cfg.clone().validated(dim)?;
    if !u0.values().iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        return Err(LabError::NonFinite);
    }
    let norm_kind = ModeNorm::new(&cfg, u0.grid())?;
    let theta = cfg.theta(dim);
    let (horizon, c_hat) = match cfg.horizon_rule {
        HorizonRule::Fixed(t) => (t, None),
        HorizonRule::Auto => {
            let choice = choose_horizon(u0, &cfg)?;
            (choice.horizon, Some(choice.effective_constant))
        }
    };
    let initial_norm = norm_kind.state(u0)?;
    let mut slab = TimeSlab::constant(u0, horizon, theta, cfg.nodes_per_unit)?;
    let count = slab.nodes.len();
    let mut diag = SolveDiagnostics {
        mode: cfg.mode.name().to_string(),
        sign: cfg.sign,
        p: cfg.mode.p(),
        theta,
        horizon_rule: cfg.horizon_rule,
        chosen_t: horizon,
        effective_constant: c_hat,
        node_count: count,
        iterations: 0,
        converged: false,
        iterate_distances: Vec::new(),
        contraction_ratios: Vec::new(),
        final_residual: f64::NAN,
        initial_norm,
        apriori_ratio: f64::NAN,
        norm_history: Vec::new(),
        weighted_integral: None,
    };
    let mut node_diffs: Vec<Vec<f64>> = Vec::new();
    for iteration in 1..=cfg.max_iter {
        let next = picard_map(&slab, u0, &cfg)?;
        let diffs: Vec<f64> = next
            .states
            .par_iter()
            .zip(slab.states.par_iter())
            .map(|(a, b)| norm_kind.increment(&a.sub(b)?))
            .collect::<Result<_>>()?;
        let d = diffs.iter().copied().fold(0.0, f64::max);
        diag.iterations = iteration;
        if let Some(prev) = diag.iterate_distances.last() {
            let ratio = d / prev;
            diag.contraction_ratios.push(ratio);
            if ratio >= 1.0 {
                diag.iterate_distances.push(d);
                return Err(LabError::NonContraction {
                    ratio,
                    iteration,
                    diagnostics: Box::new(diag),
                });
            }
        }
        diag.iterate_distances.push(d);
        node_diffs.push(diffs);
        slab = next;
        if d < cfg.tol {
            diag.converged = true;
            break;
        }
    }
    let (check, dens) = map_with_densities(&slab, u0, &cfg)?;
    diag.final_residual = check
        .states
        .iter()
        .zip(&slab.states)
        .map(|(a, b)| norm_kind.increment(&a.sub(b)?))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let norms: Vec<f64> = slab.states.par_iter().map(|v| norm_kind.state(v)).collect::<Result<_>>()?;
    let sup = norms.iter().copied().fold(initial_norm, f64::max);
    diag.apriori_ratio = if initial_norm == 0.0 { 0.0 } else { sup / initial_norm };
    let k = node_diffs.len();
    diag.norm_history.push(NodeRecord {
        tau: 0.0,
        norm: initial_norm,
        contraction_ratio: None,
    });
    for (m, (t, n)) in slab.nodes.iter().zip(&norms).enumerate() {
        let ratio = if k >= 2 && node_diffs[k - 2][m] > 0.0 {
            Some(node_diffs[k - 1][m] / node_diffs[k - 2][m])
        } else {
            None
        };
        diag.norm_history.push(NodeRecord {
            tau: *t,
            norm: *n,
            contraction_ratio: ratio,
        });
    }
    if let SolverMode::Lp1d { p } = cfg.mode {
        diag.weighted_integral = Some(weighted_integral(&slab.nodes, &dens, p, theta)?);
    }
    if matches!(cfg.mode, SolverMode::Besov(_)) && diag.apriori_ratio > 2.0 {
        return Err(LabError::AprioriBound {
            ratio: diag.apriori_ratio,
            diagnostics: Box::new(diag),
        });
    }
    Ok((slab, diag))
}

/// Writes `diagnostics.json`, `norm_history.csv` and one binary field per node
/// (`slab/node_0000.bin` is the initial state) under `dir`.
pub fn persist(dir: &Path, slab: &TimeSlab, diag: &SolveDiagnostics) -> Result<()> {
    fs::create_dir_all(dir.join("slab"))?;
    let mut json = fs::File::create(dir.join("diagnostics.json"))?;
    io::write_json(diag, &mut json)?;
    json.write_all(b"\n")?;
    diag.write_norm_history_csv(fs::File::create(dir.join("norm_history.csv"))?)?;
    let mut nodes = fs::File::create(dir.join("slab").join("nodes.csv"))?;
    writeln!(nodes, "index,tau")?;
    writeln!(nodes, "0,{}", fmt_f64(0.0))?;
    for (m, t) in slab.nodes.iter().enumerate() {
        writeln!(nodes, "{},{}", m + 1, fmt_f64(*t))?;
    }
    std::iter::once(&slab.initial)
        .chain(&slab.states)
        .enumerate()
        .try_for_each(|(m, f)| fs::write(dir.join("slab").join(format!("node_{m:04}.bin")), io::to_binary(f)))?;
    Ok(())
}
