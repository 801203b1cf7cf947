use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nls_lab::io::fmt_f64;
use nls_lab::lab::{self, EstimateId, EstimateReport};
use nls_lab::picard::{self, SolveDiagnostics};
use nls_lab::{make_field, LabError};
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::config::{parse_estimates, ExperimentConfig, SolverBlock};
use crate::{rundir, Failure};

fn error_kind(e: &LabError) -> &'static str {
    match e {
        LabError::InvalidGrid(_) => "invalid_grid",
        LabError::InvalidParameter { .. } => "invalid_parameter",
        LabError::GridMismatch => "grid_mismatch",
        LabError::NonFinite => "non_finite",
        LabError::OutOfBand(_) => "out_of_band",
        LabError::UnreliableNorm { .. } => "unreliable_norm",
        LabError::NonContraction { .. } => "non_contraction",
        LabError::AprioriBound { .. } => "apriori_bound",
        LabError::StepHalving { .. } => "step_halving",
        LabError::Invalidated(_) => "invalidated",
        LabError::Format(_) => "format",
        LabError::Io(_) => "io",
        LabError::Json(_) => "json",
    }
}

fn failed_diagnostics(e: &LabError) -> Option<&SolveDiagnostics> {
    match e {
        LabError::NonContraction { diagnostics, .. } | LabError::AprioriBound { diagnostics, .. } => Some(diagnostics),
        _ => None,
    }
}

fn describe_solve(diag: &SolveDiagnostics) -> String {
    format!(
        "mode {} (p = {}, sign {:+}): T = {}, {} nodes, {} iterations, converged {}, \
         residual {:.3e}, max ratio {:.4}, a-priori ratio {:.4}",
        diag.mode,
        diag.p,
        diag.sign,
        diag.chosen_t,
        diag.node_count,
        diag.iterations,
        diag.converged,
        diag.final_residual,
        diag.max_contraction_ratio(),
        diag.apriori_ratio,
    )
}

pub fn solve(cfg: &ExperimentConfig, root: &Path) -> Result<(), Failure> {
    let scfg = cfg.solver.solver_config()?;
    let u0 = make_field(&cfg.solver.initial, &cfg.run.grid)
        .map_err(|e| Failure::Config(format!("solver.initial: {e}")))?;
    let dir = rundir::create(root, "solve", cfg)?;
    println!("run directory: {}", dir.display());
    match picard::solve(&u0, &scfg) {
        Ok((slab, diag)) => {
            picard::persist(&dir, &slab, &diag)?;
            println!("{}", describe_solve(&diag));
            Ok(())
        }
        Err(e) => {
            if let Some(diag) = failed_diagnostics(&e) {
                fs::write(dir.join("diagnostics.json"), nls_lab::io::to_json_string(diag)? + "\n")?;
                println!("{}", describe_solve(diag));
            }
            Err(e.into())
        }
    }
}

pub fn verify(cfg: &ExperimentConfig, root: &Path) -> Result<(), Failure> {
    let ids = parse_estimates(&cfg.verify.estimates, "verify.estimates")?;
    let lab_cfg = cfg.lab().validated()?;
    let dir = rundir::create(root, "verify", cfg)?;
    let results: Vec<_> = ids.par_iter().map(|id| lab::run_check(*id, &lab_cfg)).collect();
    let mut reports = Vec::new();
    let mut errors = Vec::new();
    for (id, r) in ids.iter().zip(results) {
        match r {
            Ok(report) => {
                lab::persist_report(&dir, &report)?;
                reports.push(report);
            }
            Err(e) => errors.push((*id, e)),
        }
    }
    print!("{}", lab::summary_table(&reports));
    for (id, e) in &errors {
        println!("{:<20} ERROR {e}", id.as_str());
    }
    println!("reports: {}", dir.display());
    if let Some((id, e)) = errors.iter().find(|(_, e)| e.is_numerical()) {
        return Err(Failure::Numerical(format!("{id}: {e}")));
    }
    if let Some((id, e)) = errors.into_iter().next() {
        return Err(Failure::Config(format!("{id}: {e}")));
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.estimate_id.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "{} of {} estimates failed: {}",
            failed.len(),
            reports.len(),
            failed.join(", ")
        )))
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Solve points and check points; each point's outcome is a table row, so a
/// sweep only fails on configuration errors.
pub fn sweep(cfg: &ExperimentConfig, root: &Path) -> Result<(), Failure> {
    let s = &cfg.sweep;
    let amplitudes: Vec<Option<f64>> = if s.amplitudes.is_empty() {
        vec![None]
    } else {
        s.amplitudes.iter().copied().map(Some).collect()
    };
    let ps = if s.ps.is_empty() { vec![cfg.solver.p] } else { s.ps.clone() };
    let npus = if s.nodes_per_unit.is_empty() { vec![cfg.solver.nodes_per_unit] } else { s.nodes_per_unit.clone() };
    let mut points = Vec::new();
    for &a in &amplitudes {
        for &p in &ps {
            for &n in &npus {
                points.push((a, p, n));
            }
        }
    }
    let checks: Vec<EstimateId> = if s.estimates.is_empty() {
        Vec::new()
    } else {
        parse_estimates(&s.estimates, "sweep.estimates")?
    };
    let base_lab = cfg.lab();
    let seeds = if s.seeds.is_empty() { vec![base_lab.seed] } else { s.seeds.clone() };
    let mut check_points = Vec::new();
    for &seed in &seeds {
        for &id in &checks {
            check_points.push((seed, id));
        }
    }

    let dir = rundir::create(root, "sweep", cfg)?;
    println!("run directory: {}", dir.display());
    let solves: Vec<(String, Option<SolveDiagnostics>)> = points
        .par_iter()
        .map(|&(a, p, n)| {
            let block = SolverBlock { p, nodes_per_unit: n, ..cfg.solver.clone() };
            let family = match a {
                Some(a) => block.initial.with_amplitude(a),
                None => block.initial.clone(),
            };
            let outcome = block
                .solver_config()
                .and_then(|scfg| Ok((scfg, make_field(&family, &cfg.run.grid)?)))
                .and_then(|(scfg, u0)| picard::solve(&u0, &scfg));
            match outcome {
                Ok((_, diag)) => ("ok".to_string(), Some(diag)),
                Err(e) => (error_kind(&e).to_string(), failed_diagnostics(&e).cloned()),
            }
        })
        .collect();
    let mut csv = String::from(
        "amplitude,p,nodes_per_unit,status,horizon,node_count,iterations,max_contraction_ratio,final_residual,apriori_ratio,initial_norm\n",
    );
    for (&(a, p, n), (status, diag)) in points.iter().zip(&solves) {
        let d = diag.as_ref();
        writeln!(
            csv,
            "{},{},{n},{status},{},{},{},{},{},{},{}",
            cell(a),
            fmt_f64(p),
            cell(d.map(|d| d.chosen_t)),
            d.map(|d| d.node_count.to_string()).unwrap_or_default(),
            d.map(|d| d.iterations.to_string()).unwrap_or_default(),
            cell(d.map(|d| d.max_contraction_ratio())),
            cell(d.map(|d| d.final_residual)),
            cell(d.map(|d| d.apriori_ratio)),
            cell(d.map(|d| d.initial_norm)),
        )
        .expect("writing to a String cannot fail");
    }
    fs::write(dir.join("solves.csv"), &csv)?;
    let ok = solves.iter().filter(|(s, _)| s == "ok").count();
    println!("solves: {ok} of {} converged", points.len());

    if check_points.is_empty() {
        return Ok(());
    }
    let outcomes: Vec<Result<EstimateReport, LabError>> = check_points
        .par_iter()
        .map(|&(seed, id)| {
            let mut lab_cfg = base_lab.clone();
            lab_cfg.seed = seed;
            lab::run_check(id, &lab_cfg)
        })
        .collect();
    let mut csv = String::from("estimate_id,seed,status,min_ratio,max_ratio,excluded\n");
    for (&(seed, id), outcome) in check_points.iter().zip(&outcomes) {
        match outcome {
            Ok(report) => {
                lab::persist_report(&dir.join("checks").join(format!("seed_{seed}")), report)?;
                let finite = report.measured_ratios.iter().copied().filter(|r| r.is_finite());
                let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));
                let status = if report.passed() { "pass" } else { "fail" };
                let range = if lo <= hi { (Some(lo), Some(hi)) } else { (None, None) };
                writeln!(csv, "{id},{seed},{status},{},{},{}", cell(range.0), cell(range.1), report.excluded.len())
            }
            Err(e) => writeln!(csv, "{id},{seed},{},,,", error_kind(e)),
        }
        .expect("writing to a String cannot fail");
    }
    fs::write(dir.join("checks.csv"), &csv)?;
    let passed = outcomes.iter().filter(|o| matches!(o, Ok(r) if r.passed())).count();
    println!("checks: {passed} of {} passed", check_points.len());
    Ok(())
}

fn render_report(r: &EstimateReport, source: &str, out: &mut String) {
    let verdict = if r.passed() { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "{} {verdict} ({source})", r.estimate_id);
    for c in &r.criteria {
        let mark = if c.passed { "ok" } else { "FAIL" };
        let _ = writeln!(out, "  {:<28} {:>12.5e} {:?} {:.3e}  {mark}", c.name, c.value, c.comparison, c.threshold);
    }
    for f in &r.fitted_exponents {
        let mark = if f.passed { "ok" } else { "FAIL" };
        let _ = writeln!(
            out,
            "  {:<28} slope {:.4} (target {} ± {}), rms {:.4}  {mark}",
            f.name, f.slope, f.target, f.tolerance, f.rms_residual
        );
    }
    if !r.excluded.is_empty() {
        let _ = writeln!(out, "  {} sweep points excluded", r.excluded.len());
    }
}

/// Text summary of every report and solve found under `dir`; `csv` receives
/// one row per criterion and fit.
pub fn report(dir: &Path, csv: Option<&Path>) -> Result<(), Failure> {
    if !dir.is_dir() {
        return Err(Failure::Config(format!("report: {} is not a run directory", dir.display())));
    }
    let mut text = String::new();
    let mut rows = String::from("source,estimate_id,kind,name,value,threshold,passed\n");
    let mut reports = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| Failure::Config(format!("report: {e}")))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let source = path.strip_prefix(dir).unwrap_or(path).display().to_string();
        match name {
            "config.json" | "metadata.json" => {}
            "diagnostics.json" => {
                let diag: SolveDiagnostics = serde_json::from_str(&fs::read_to_string(path)?)
                    .map_err(|e| Failure::Config(format!("{source}: {e}")))?;
                let _ = writeln!(text, "solve ({source})\n  {}", describe_solve(&diag));
            }
            _ => {
                let r = lab::load_report(path).map_err(|e| Failure::Config(format!("{source}: {e}")))?;
                render_report(&r, &source, &mut text);
                for c in &r.criteria {
                    let _ = writeln!(
                        rows,
                        "{source},{},criterion,{},{},{},{}",
                        r.estimate_id,
                        c.name,
                        fmt_f64(c.value),
                        fmt_f64(c.threshold),
                        c.passed
                    );
                }
                for f in &r.fitted_exponents {
                    let _ = writeln!(
                        rows,
                        "{source},{},fit,{},{},{},{}",
                        r.estimate_id,
                        f.name,
                        fmt_f64(f.slope),
                        fmt_f64(f.target),
                        f.passed
                    );
                }
                reports.push(r);
            }
        }
    }
    if !reports.is_empty() {
        text.push('\n');
        text.push_str(&lab::summary_table(&reports));
    }
    if text.is_empty() {
        return Err(Failure::Config(format!("report: no reports or diagnostics under {}", dir.display())));
    }
    print!("{text}");
    if let Some(path) = csv {
        fs::write(path, rows)?;
    }
    Ok(())
}
