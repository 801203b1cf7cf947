//! Least-squares fits for exponent measurements.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in the units of `y`.
    pub rms_residual: f64,
}

/// `y ≈ intercept + slope·x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(LabError::param("fit", format!("need ≥ 2 paired points, got {} and {}", xs.len(), ys.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::param("fit", "abscissae are all equal"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(LinearFit {
        slope,
        intercept,
        rms_residual: (rss / n).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    pub intercept: f64,
    pub slope_a: f64,
    pub slope_b: f64,
    pub rms_residual: f64,
}

/// `y ≈ intercept + slope_a·a + slope_b·b`.
pub fn plane_fit(a: &[f64], b: &[f64], ys: &[f64]) -> Result<PlaneFit> {
    let n = ys.len();
    if a.len() != n || b.len() != n || n < 3 {
        return Err(LabError::param("fit", "need ≥ 3 points with two regressors each"));
    }
    let nf = n as f64;
    let (ma, mb, my) = (
        a.iter().sum::<f64>() / nf,
        b.iter().sum::<f64>() / nf,
        ys.iter().sum::<f64>() / nf,
    );
    let (mut saa, mut sbb, mut sab, mut say, mut sby) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let (da, db, dy) = (a[i] - ma, b[i] - mb, ys[i] - my);
        saa += da * da;
        sbb += db * db;
        sab += da * db;
        say += da * dy;
        sby += db * dy;
    }
    let det = saa * sbb - sab * sab;
    if det.abs() <= 1e-12 * (saa * sbb).max(f64::MIN_POSITIVE) {
        return Err(LabError::param("fit", "regressors are collinear"));
    }
    let slope_a = (say * sbb - sby * sab) / det;
    let slope_b = (sby * saa - say * sab) / det;
    let intercept = my - slope_a * ma - slope_b * mb;
    let rss: f64 = (0..n)
        .map(|i| (ys[i] - intercept - slope_a * a[i] - slope_b * b[i]).powi(2))
        .sum();
    Ok(PlaneFit {
        intercept,
        slope_a,
        slope_b,
        rms_residual: (rss / nf).sqrt(),
    })
}

pub fn geomspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (count - 1) as f64).exp())
            .collect(),
    }
}

pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// `max/min` of positive values (1 for an empty or single sample).
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.len() < 2 {
        1.0
    } else if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
