//! Acceptance suite: one PASS/FAIL line per criterion, thresholds written out
//! here rather than read from the lab defaults.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nls_lab::lab::{self, EstimateId, EstimateReport, LabConfig};
use nls_lab::picard::{self, checked_splitstep, HorizonRule, SolverConfig};
use nls_lab::propagator::{self, PropagatorConvention};
use nls_lab::{make_field, Field, Grid, TestFamily};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Option<u64>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion(r: &EstimateReport, name: &str) -> f64 {
    r.criteria
        .iter()
        .find(|c| c.name == name)
        .map(|c| c.value)
        .unwrap_or(f64::NAN)
}

fn run(id: EstimateId) -> Result<EstimateReport, String> {
    lab::run_check(id, &LabConfig::default()).map_err(|e| format!("{id}: {e}"))
}

fn propagator_laws() -> Outcome {
    let g = Grid::new(1, 1024, 40.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut group, mut unitary) = (0.0f64, 0.0f64);
    for seed in 0..100 {
        let f = make_field(&TestFamily::random_band_limited(seed, 0.5, 20.0, None), &g).map_err(|e| e.to_string())?;
        let (t, s): (f64, f64) = (rng.gen_range(-10.0..=10.0), rng.gen_range(-10.0..=10.0));
        let composed = propagator::apply(t, &propagator::apply(s, &f));
        group = group.max(composed.relative_l2_distance(&propagator::apply(t + s, &f)).unwrap());
        unitary = unitary.max((propagator::apply(t, &f).lp_norm(2.0).unwrap() / f.lp_norm(2.0).unwrap() - 1.0).abs());
    }
    let wide = Grid::new(1, 1024, 80.0).unwrap();
    let f = make_field(&TestFamily::gaussian(1.0), &wide).unwrap();
    let mut gaussian = 0.0f64;
    for t in [0.1, 0.5, 1.0, 2.0] {
        let a = Complex64::new(1.0, -4.0 * t);
        let exact = Field::from_fn(wide, |x| a.sqrt().inv() * (-(x[0] * x[0]) / a).exp()).unwrap();
        gaussian = gaussian.max(propagator::apply(t, &f).sub(&exact).unwrap().lp_norm(2.0).unwrap());
    }
    check(
        group < 1e-10 && unitary < 1e-10 && gaussian < 1e-8,
        format!("group {group:.2e}, unitarity {unitary:.2e}, gaussian {gaussian:.2e}"),
    )
}

fn convention_lock() -> Outcome {
    let g = Grid::new(1, 256, 60.0).unwrap();
    let f = make_field(&TestFamily::modulated_gaussian(1.5, 1.0, 1.0), &g).unwrap();
    let (convention, matching, other) = propagator::calibrate_sign(0.5, &f).map_err(|e| e.to_string())?;
    check(
        convention == PropagatorConvention::FROZEN && matching < 1e-3,
        format!("sign {:+}, kernel discrepancy {matching:.2e} (other sign {other:.2e})", convention.multiplier_sign),
    )
}

fn vector_field() -> Outcome {
    let r = run(EstimateId::Conjugation)?;
    let (residual, drift) = (criterion(&r, "max_residual"), criterion(&r, "max_norm_drift"));
    check(residual < 1e-8 && drift <= 1e-9, format!("residual {residual:.2e}, norm drift {drift:.2e}"))
}

fn decay_exponent() -> Outcome {
    let r = run(EstimateId::TrilinearDecay)?;
    let f = r.fitted_exponents.first().ok_or("no fit")?;
    let kept = r.measured_ratios.len();
    check(
        (-1.15..=-0.85).contains(&f.slope) && f.rms_residual <= 0.05 && kept >= 2,
        format!("slope {:.4}, rms {:.4}, {kept} validated points", f.slope, f.rms_residual),
    )
}

fn growth_exponent() -> Outcome {
    let r = run(EstimateId::TrilinearGrowth)?;
    let worst = r.fitted_exponents.iter().map(|f| (f.slope - 0.5).abs()).fold(0.0, f64::max);
    let rms = r.fitted_exponents.iter().map(|f| f.rms_residual).fold(0.0, f64::max);
    check(
        !r.fitted_exponents.is_empty() && worst <= 0.15 && rms <= 0.05,
        format!("{} fits, max |slope − 0.5| {worst:.4}, max rms {rms:.4}", r.fitted_exponents.len()),
    )
}

fn interpolation_uniformity() -> Outcome {
    let r = run(EstimateId::TrilinearInterpolation)?;
    let spread = criterion(&r, "ratio_spread");
    check(spread < 10.0, format!("spread ×{spread:.3} over {} points", r.measured_ratios.len()))
}

fn contraction() -> Outcome {
    let r = run(EstimateId::Contraction)?;
    let (ratio, residual, apriori) = (
        criterion(&r, "max_contraction_ratio"),
        criterion(&r, "final_residual"),
        criterion(&r, "apriori_ratio"),
    );
    check(
        ratio <= 0.6 && residual < 1e-8 && apriori <= 2.0 && criterion(&r, "converged") >= 1.0,
        format!("max ratio {ratio:.4}, residual {residual:.2e}, a-priori {apriori:.4}"),
    )
}

fn stability() -> Outcome {
    let r = run(EstimateId::Stability)?;
    let q = criterion(&r, "max_quotient");
    let pairs = r.measured_ratios.len();
    check(pairs >= 20 && q <= 2.0, format!("max quotient {q:.4} over {pairs} pairs"))
}

fn oracle_equivalence() -> Outcome {
    let g = Grid::new(1, 1024, 40.0).unwrap();
    let u0 = make_field(&TestFamily::gaussian(1.0), &g).unwrap();
    let horizon = 0.5;
    let cfg = SolverConfig::lp_1d(1.5, -1)
        .unwrap()
        .with_horizon(HorizonRule::Fixed(horizon))
        .with_nodes_per_unit(200);
    let (slab, _) = picard::solve(&u0, &cfg).map_err(|e| e.to_string())?;
    let u = slab.transported().pop().unwrap();
    let (reference, split) = checked_splitstep(&u0, horizon, 400, -1.0, 1e-6).map_err(|e| e.to_string())?;
    let err = u.relative_l2_distance(&reference).unwrap();
    check(
        err < 1e-5 && (split.observed_order - 2.0).abs() <= 0.2,
        format!("relative error {err:.2e}, split-step order {:.3}", split.observed_order),
    )
}

fn weighted_integral() -> Outcome {
    let r = run(EstimateId::WeightedIntegral)?;
    let mut parts = Vec::new();
    let mut ok = true;
    for p in ["1.25", "1.5"] {
        let c1 = criterion(&r, &format!("c1_drift(p={p})"));
        let c0 = criterion(&r, &format!("c0_drift(p={p})"));
        ok &= c1 < 0.10 && c0 <= 0.10;
        parts.push(format!("p={p}: C1 drift {c1:.2e}, C0 drift {c0:.2e}"));
    }
    check(ok, parts.join("; "))
}

fn strichartz() -> Outcome {
    let r = run(EstimateId::Strichartz)?;
    let change = criterion(&r, "max_relative_change");
    let n = r.measured_ratios.len();
    check(n >= 10 && change <= 0.05, format!("max change {change:.4} over {n} data"))
}

fn scaling() -> Outcome {
    let r = run(EstimateId::Scaling)?;
    let (l1, lp) = (criterion(&r, "norm_scaling(p=1)"), criterion(&r, "norm_scaling(p=1.5)"));
    let cov = criterion(&r, "solution_covariance");
    check(
        l1 <= 1e-10 && lp <= 1e-8 && cov < 1e-4,
        format!("L1 invariance {l1:.2e}, L^1.5 ratio error {lp:.2e}, covariance {cov:.2e}"),
    )
}

fn payloads(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "metadata.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn reproducibility() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.cfg");
    for _ in 0..2 {
        let status = Command::new(env!("CARGO_BIN_EXE_nls-lab"))
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(root.path())
            .args(["verify", "--only", "lemma21,eq_c13,stability_c19,lemma41"])
            .output()
            .map_err(|e| e.to_string())?
            .status;
        if !status.success() {
            return Err(format!("verify exited with {status}"));
        }
    }
    let mut dirs: Vec<_> = fs::read_dir(root.path()).unwrap().map(|e| e.unwrap().path()).collect();
    dirs.sort();
    let (a, b) = (payloads(&dirs[0]), payloads(&dirs[1]));
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
    check(
        dirs.len() == 2 && a.len() == b.len() && a.len() > 2 && differing.is_empty(),
        format!("{} payload files compared across {} run directories, {} differ", a.len(), dirs.len(), differing.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("propagator group law, unitarity, Gaussian evolution", propagator_laws, Some(10)),
        ("multiplier sign locked against the kernel", convention_lock, Some(30)),
        ("vector-field conjugation and norm constancy", vector_field, None),
        ("trilinear τ-decay exponent", decay_exponent, Some(120)),
        ("trilinear annulus growth exponents", growth_exponent, Some(120)),
        ("trilinear bound-ratio uniformity", interpolation_uniformity, None),
        ("Besov contraction and a-priori bound", contraction, Some(120)),
        ("data-to-solution stability", stability, None),
        ("Picard solve against split-step reference", oracle_equivalence, None),
        ("weighted integral and L^p a-priori constants", weighted_integral, None),
        ("Strichartz ratio under horizon doubling", strichartz, None),
        ("scaling invariance and covariance", scaling, None),
        ("byte-identical verify reruns", reproducibility, None),
    ];
    let mut failures = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(d), Some(s)) if elapsed > Duration::from_secs(*s) => Err(format!("{d}; over the {s} s budget")),
            (o, _) => o,
        };
        let (verdict, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("{verdict} {:>2} {name}: {detail} [{:.1} s]", i + 1, elapsed.as_secs_f64());
        failures += outcome.is_err() as usize;
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
