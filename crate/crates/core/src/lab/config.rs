//! Sweep definitions and verdict thresholds. Every tolerance a check compares
//! against lives here.

use serde::{Deserialize, Serialize};

use super::fit::geomspace;
use crate::error::{LabError, Result};
use crate::grid::Grid;

fn grid(dim: usize, points: usize, box_length: f64) -> Grid {
    Grid::new(dim, points, box_length).expect("default grids are valid")
}

/// Closed interval a seeded parameter is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Range { min, max }
    }

    fn check(&self, name: &str) -> Result<()> {
        if self.min.is_finite() && self.max.is_finite() && self.min <= self.max {
            Ok(())
        } else {
            Err(LabError::param(name, format!("need min ≤ max, got [{}, {}]", self.min, self.max)))
        }
    }
}

/// `lemma21`: τ-decay of `‖T(v1,v2,v3)‖₁` for Gaussian inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayCheck {
    pub grid: Grid,
    pub widths: [f64; 3],
    pub taus: Vec<f64>,
    pub slope_target: f64,
    pub slope_tolerance: f64,
}

impl Default for DecayCheck {
    fn default() -> Self {
        DecayCheck {
            grid: grid(1, 2048, 256.0),
            widths: [1.0, 1.0, 1.0],
            taus: geomspace(1.0, 8.0, 8),
            slope_target: -1.0,
            slope_tolerance: 0.15,
        }
    }
}

/// `lemma22`: growth of `‖T‖₂` in the annulus indices of `v2`, `v3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthCheck {
    pub grid: Grid,
    pub taus: Vec<f64>,
    pub indices: Vec<i32>,
    /// `v1` is a ball packet `|ξ| ≤ 2^ball`.
    pub ball: i32,
    pub slope_target: f64,
    pub slope_tolerance: f64,
}

impl Default for GrowthCheck {
    fn default() -> Self {
        GrowthCheck {
            grid: grid(1, 262144, 1024.0),
            taus: vec![0.0, 0.25, 0.5],
            indices: (2..=6).collect(),
            ball: 7,
            slope_target: 0.5,
            slope_tolerance: 0.15,
        }
    }
}

/// `lemma23`: uniformity of the interpolated `L^p` bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpolationCheck {
    pub grid: Grid,
    pub taus: Vec<f64>,
    pub indices: Vec<i32>,
    pub ps: Vec<f64>,
    pub ball: i32,
    pub max_spread: f64,
}

impl Default for InterpolationCheck {
    fn default() -> Self {
        InterpolationCheck {
            grid: grid(1, 131072, 1280.0),
            taus: vec![0.25, 0.5, 1.0, 2.0],
            indices: (2..=5).collect(),
            ps: vec![1.25, 1.5, 1.75],
            ball: 6,
            max_spread: 10.0,
        }
    }
}

/// Random modulated Gaussians `a·e^{−x²/w²}e^{iξ₀x}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketDraw {
    pub width: Range,
    pub modulation: Range,
    pub amplitude: Range,
}

impl PacketDraw {
    fn check(&self) -> Result<()> {
        self.width.check("width")?;
        self.modulation.check("modulation")?;
        self.amplitude.check("amplitude")
    }
}

/// `eq_c13`: `τ^θ‖F(τ;w)‖_B / ‖w‖_B³` over τ and random `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearBoundCheck {
    pub grid: Grid,
    pub p: f64,
    pub data: PacketDraw,
    pub taus: Vec<f64>,
    pub max_spread: f64,
}

impl Default for NonlinearBoundCheck {
    fn default() -> Self {
        NonlinearBoundCheck {
            grid: grid(1, 1024, 80.0),
            p: 1.5,
            data: PacketDraw {
                width: Range::new(2.5, 4.0),
                modulation: Range::new(3.0, 5.0),
                amplitude: Range::new(1.0, 1.0),
            },
            taus: geomspace(0.05, 2.0, 12),
            max_spread: 10.0,
        }
    }
}

/// `contraction_c14_c16`: Besov-mode solve under the auto horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractionCheck {
    pub grid: Grid,
    pub p: f64,
    pub sign: i8,
    pub width: f64,
    pub modulation: f64,
    pub amplitude: f64,
    pub nodes_per_unit: usize,
    pub tol: f64,
    pub max_ratio: f64,
    pub max_residual: f64,
    pub max_apriori_ratio: f64,
}

impl Default for ContractionCheck {
    fn default() -> Self {
        ContractionCheck {
            grid: grid(1, 1024, 80.0),
            p: 1.5,
            sign: 1,
            width: 3.0,
            modulation: 4.0,
            amplitude: 0.4,
            nodes_per_unit: 100,
            tol: 1e-10,
            max_ratio: 0.6,
            max_residual: 1e-8,
            max_apriori_ratio: 2.0,
        }
    }
}

/// `stability_c19`: Lipschitz quotient of the data-to-solution map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityCheck {
    pub grid: Grid,
    pub p: f64,
    pub sign: i8,
    pub data: PacketDraw,
    /// `‖u01 − u02‖_B / ‖u01‖_B`
    pub perturbation: f64,
    pub nodes_per_unit: usize,
    pub max_quotient: f64,
}

impl Default for StabilityCheck {
    fn default() -> Self {
        StabilityCheck {
            grid: grid(1, 1024, 80.0),
            p: 1.5,
            sign: 1,
            data: PacketDraw {
                width: Range::new(2.5, 4.0),
                modulation: Range::new(3.0, 5.0),
                amplitude: Range::new(0.2, 0.4),
            },
            perturbation: 1e-3,
            nodes_per_unit: 40,
            max_quotient: 2.0,
        }
    }
}

/// `lemma41`: `sup_τ τ‖T(v̄,v,v)(τ)‖₁` along a solve against the cube of
/// `‖u0‖₁ + ∫‖F‖₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightedL1Check {
    pub grid: Grid,
    pub p: f64,
    pub sign: i8,
    pub horizon: f64,
    pub nodes_per_unit: usize,
    pub data: PacketDraw,
    pub max_spread: f64,
}

impl Default for WeightedL1Check {
    fn default() -> Self {
        WeightedL1Check {
            grid: grid(1, 2048, 256.0),
            p: 1.5,
            sign: 1,
            horizon: 4.0,
            nodes_per_unit: 10,
            data: PacketDraw {
                width: Range::new(1.0, 3.0),
                modulation: Range::new(0.0, 2.0),
                amplitude: Range::new(0.1, 0.2),
            },
            max_spread: 10.0,
        }
    }
}

/// `lemma42_strichartz`: `(∫_0^T‖S(t)f‖₆⁶ dt)^{1/6} / ‖f‖₂` under `T → 2T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrichartzCheck {
    pub grid: Grid,
    pub samples: usize,
    pub band: Range,
    pub envelope: f64,
    pub horizon: f64,
    /// Simpson step; must divide both horizons into an even count.
    pub dt: f64,
    pub max_change: f64,
}

impl Default for StrichartzCheck {
    fn default() -> Self {
        StrichartzCheck {
            grid: grid(1, 4096, 400.0),
            samples: 10,
            band: Range::new(0.5, 2.0),
            envelope: 3.0,
            horizon: 4.0,
            dt: 0.01,
            max_change: 0.05,
        }
    }
}

/// `lemma43_a80`: `C₁ = (∫τ^{θp′}‖F‖_p^{p′})^{1/p′} / ‖u0‖_p³` under node
/// doubling and `C₀ = sup‖v‖_p / ‖u0‖_p` across resolutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightedIntegralCheck {
    pub box_length: f64,
    pub points: usize,
    pub resolutions: Vec<usize>,
    pub ps: Vec<f64>,
    pub sign: i8,
    pub width: f64,
    pub amplitude: f64,
    pub nodes_per_unit: usize,
    pub max_c1_drift: f64,
    pub max_c0_drift: f64,
}

impl Default for WeightedIntegralCheck {
    fn default() -> Self {
        WeightedIntegralCheck {
            box_length: 40.0,
            points: 1024,
            resolutions: vec![512, 1024, 2048],
            ps: vec![1.25, 1.5],
            sign: -1,
            width: 1.0,
            amplitude: 1.0,
            nodes_per_unit: 200,
            max_c1_drift: 0.10,
            max_c0_drift: 0.10,
        }
    }
}

/// `global_sobolev_a13`: free-solution decay against the vector-field norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalSobolevCheck {
    pub grid: Grid,
    pub width: f64,
    pub times: Vec<f64>,
    pub slope_target: f64,
    pub slope_tolerance: f64,
    pub max_spread: f64,
    /// Points with more squared mass than this beyond `0.4·L` are dropped.
    pub box_escape_limit: f64,
}

impl Default for GlobalSobolevCheck {
    fn default() -> Self {
        GlobalSobolevCheck {
            grid: grid(1, 2048, 256.0),
            width: 2.0,
            times: super::fit::linspace(0.0, 8.0, 33),
            slope_target: -0.5,
            slope_tolerance: 0.1,
            max_spread: 10.0,
            box_escape_limit: 1e-6,
        }
    }
}

/// `conjugation_a9`: `L(t)S(t) = S(t)x` and constancy of `‖L^α u(t)‖₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConjugationCheck {
    pub grid: Grid,
    pub width: f64,
    pub times: Vec<f64>,
    pub powers: Vec<usize>,
    pub max_residual: f64,
    pub max_drift: f64,
}

impl Default for ConjugationCheck {
    fn default() -> Self {
        ConjugationCheck {
            grid: grid(1, 2048, 160.0),
            width: 1.0,
            times: vec![0.1, 0.3, 1.0, 3.0],
            powers: vec![1, 2],
            max_residual: 1e-8,
            max_drift: 1e-9,
        }
    }
}

/// `scaling_rem16`: `u0 → λu0(λ·)` on norms and on the whole solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingCheck {
    pub grid: Grid,
    pub lambda: f64,
    pub width: f64,
    pub amplitude: f64,
    pub sign: i8,
    pub p: f64,
    pub horizon: f64,
    pub nodes_per_unit: usize,
    pub norm_ps: Vec<f64>,
    pub l1_tolerance: f64,
    pub lp_tolerance: f64,
    pub max_covariance_error: f64,
}

impl Default for ScalingCheck {
    fn default() -> Self {
        ScalingCheck {
            grid: grid(1, 1024, 40.0),
            lambda: 2.0,
            width: 1.0,
            amplitude: 1.0,
            sign: 1,
            p: 1.5,
            horizon: 0.1,
            nodes_per_unit: 100,
            norm_ps: vec![1.0, 1.5],
            l1_tolerance: 1e-10,
            lp_tolerance: 1e-8,
            max_covariance_error: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    pub seed: u64,
    /// Random draws per randomized report.
    pub samples: usize,
    /// Log-log RMS above which a fit cannot pass.
    pub max_fit_rms: f64,
    /// Squared mass beyond `0.4·L` that invalidates a trilinear sweep point.
    pub wraparound_limit: f64,
    /// Fraction of sweep points that must survive invalidation.
    pub min_valid_fraction: f64,
    pub lemma21: DecayCheck,
    pub lemma22: GrowthCheck,
    pub lemma23: InterpolationCheck,
    pub eq_c13: NonlinearBoundCheck,
    pub contraction_c14_c16: ContractionCheck,
    pub stability_c19: StabilityCheck,
    pub lemma41: WeightedL1Check,
    pub lemma42_strichartz: StrichartzCheck,
    pub lemma43_a80: WeightedIntegralCheck,
    pub global_sobolev_a13: GlobalSobolevCheck,
    pub conjugation_a9: ConjugationCheck,
    pub scaling_rem16: ScalingCheck,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            seed: 20240611,
            samples: 20,
            max_fit_rms: 0.05,
            wraparound_limit: 1e-3,
            min_valid_fraction: 0.5,
            lemma21: DecayCheck::default(),
            lemma22: GrowthCheck::default(),
            lemma23: InterpolationCheck::default(),
            eq_c13: NonlinearBoundCheck::default(),
            contraction_c14_c16: ContractionCheck::default(),
            stability_c19: StabilityCheck::default(),
            lemma41: WeightedL1Check::default(),
            lemma42_strichartz: StrichartzCheck::default(),
            lemma43_a80: WeightedIntegralCheck::default(),
            global_sobolev_a13: GlobalSobolevCheck::default(),
            conjugation_a9: ConjugationCheck::default(),
            scaling_rem16: ScalingCheck::default(),
        }
    }
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(LabError::param(name, "must not be empty"))
    } else {
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(LabError::param(name, format!("must be positive, got {v}")))
    }
}

impl LabConfig {
    /// Structural checks that need no computation. Grids are re-validated
    /// since deserialization bypasses [`Grid::new`].
    pub fn validated(self) -> Result<Self> {
        if self.samples == 0 {
            return Err(LabError::param("samples", "must be at least 1"));
        }
        positive("max_fit_rms", self.max_fit_rms)?;
        positive("wraparound_limit", self.wraparound_limit)?;
        if !(self.min_valid_fraction > 0.0 && self.min_valid_fraction <= 1.0) {
            return Err(LabError::param("min_valid_fraction", "need 0 < fraction ≤ 1"));
        }
        for g in [
            self.lemma21.grid,
            self.lemma22.grid,
            self.lemma23.grid,
            self.eq_c13.grid,
            self.contraction_c14_c16.grid,
            self.stability_c19.grid,
            self.lemma41.grid,
            self.lemma42_strichartz.grid,
            self.global_sobolev_a13.grid,
            self.conjugation_a9.grid,
            self.scaling_rem16.grid,
        ] {
            let g = g.validated()?;
            if g.dim() != 1 {
                return Err(LabError::param("grid", "the lab runs on one-dimensional grids"));
            }
        }
        nonempty("lemma21.taus", &self.lemma21.taus)?;
        if self.lemma21.taus.iter().any(|t| *t <= 0.0) {
            return Err(LabError::param("lemma21.taus", "need τ > 0"));
        }
        nonempty("lemma22.taus", &self.lemma22.taus)?;
        nonempty("lemma22.indices", &self.lemma22.indices)?;
        nonempty("lemma23.taus", &self.lemma23.taus)?;
        if self.lemma23.taus.iter().any(|t| *t <= 0.0) {
            return Err(LabError::param("lemma23.taus", "need τ > 0"));
        }
        nonempty("lemma23.ps", &self.lemma23.ps)?;
        if self.lemma23.ps.iter().any(|p| !(*p >= 1.0 && *p <= 2.0)) {
            return Err(LabError::param("lemma23.ps", "need 1 ≤ p ≤ 2"));
        }
        nonempty("eq_c13.taus", &self.eq_c13.taus)?;
        self.eq_c13.data.check()?;
        self.stability_c19.data.check()?;
        positive("stability_c19.perturbation", self.stability_c19.perturbation)?;
        self.lemma41.data.check()?;
        positive("lemma41.horizon", self.lemma41.horizon)?;
        let s = &self.lemma42_strichartz;
        positive("lemma42_strichartz.horizon", s.horizon)?;
        positive("lemma42_strichartz.dt", s.dt)?;
        s.band.check("lemma42_strichartz.band")?;
        let steps = s.horizon / s.dt;
        if (steps - steps.round()).abs() > 1e-9 || !(steps.round() as u64).is_multiple_of(2) {
            return Err(LabError::param("lemma42_strichartz.dt", "horizon / dt must be an even integer"));
        }
        let w = &self.lemma43_a80;
        Grid::new(1, w.points, w.box_length)?;
        nonempty("lemma43_a80.resolutions", &w.resolutions)?;
        for n in &w.resolutions {
            Grid::new(1, *n, w.box_length)?;
        }
        nonempty("lemma43_a80.ps", &w.ps)?;
        nonempty("global_sobolev_a13.times", &self.global_sobolev_a13.times)?;
        nonempty("conjugation_a9.times", &self.conjugation_a9.times)?;
        positive("scaling_rem16.lambda", self.scaling_rem16.lambda)?;
        positive("scaling_rem16.horizon", self.scaling_rem16.horizon)?;
        Ok(self)
    }

    /// Seed of the `i`-th random draw of a report.
    pub fn sample_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = LabConfig::default().validated().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: LabConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg: LabConfig = serde_json::from_str(r#"{"seed": 3, "lemma21": {"slope_tolerance": 0.2}}"#).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.lemma21.slope_tolerance, 0.2);
        assert_eq!(cfg.lemma21.taus, DecayCheck::default().taus);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<LabConfig>(r#"{"lemma21": {"slope_tol": 0.2}}"#).unwrap_err();
        assert!(err.to_string().contains("slope_tol"));
        assert!(serde_json::from_str::<LabConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut cfg = LabConfig::default();
        cfg.lemma42_strichartz.dt = 0.3;
        assert!(cfg.validated().is_err());
        let mut cfg = LabConfig::default();
        cfg.lemma23.ps = vec![2.5];
        assert!(cfg.validated().is_err());
        let bad: LabConfig =
            serde_json::from_str(r#"{"lemma21": {"grid": {"dim": 1, "points_per_dim": 100, "box_length": 1}}}"#).unwrap();
        assert!(bad.validated().is_err());
    }
}
