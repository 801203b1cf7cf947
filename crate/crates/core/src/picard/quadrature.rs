//! Product-type quadrature for integrands that behave like `τ^{-θ}` at 0.
//!
//! Nodes are graded as `τ_m = T (m/M)^{1/(1−θ)}`, `m = 1..M`. On each interval
//! the integrand is replaced by its interpolant in `span{1, τ^{-θ}}` through
//! the two endpoint nodes; on `[0, τ_1]` the interpolant through nodes 1 and 2
//! is integrated instead. The rule is exact for `a + bτ^{-θ}`.

use crate::error::{LabError, Result};

pub fn node_count(horizon: f64, nodes_per_unit: usize) -> usize {
    ((nodes_per_unit as f64) * horizon.max(1.0)).ceil() as usize
}

pub fn graded_nodes(horizon: f64, count: usize, theta: f64) -> Result<Vec<f64>> {
    check(horizon, count, theta)?;
    let exponent = 1.0 / (1.0 - theta);
    let mut nodes: Vec<f64> = (1..=count)
        .map(|m| horizon * (m as f64 / count as f64).powf(exponent))
        .collect();
    nodes[count - 1] = horizon;
    Ok(nodes)
}

fn check(horizon: f64, count: usize, theta: f64) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(LabError::param("horizon", format!("must be positive, got {horizon}")));
    }
    if count == 0 {
        return Err(LabError::param("nodes_per_unit", "need at least one node"));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(LabError::param("theta", format!("need 0 < θ < 1, got {theta}")));
    }
    Ok(())
}

/// Weights `[a, b]` per interval. Entry 0 multiplies `(F_1, F_2)` and covers
/// `[0, τ_1]`; entry `i ≥ 1` multiplies `(F_i, F_{i+1})` on `[τ_i, τ_{i+1}]`
/// (nodes numbered from 1). A single node gets `[τ_1, 0]`.
pub fn interval_weights(nodes: &[f64], theta: f64) -> Result<Vec<[f64; 2]>> {
    let count = nodes.len();
    check(*nodes.last().unwrap_or(&0.0), count.max(1), theta)?;
    if nodes.windows(2).any(|w| w[1] <= w[0]) || nodes[0] <= 0.0 {
        return Err(LabError::param("nodes", "must be positive and strictly increasing"));
    }
    if count == 1 {
        return Ok(vec![[nodes[0], 0.0]]);
    }
    let e = 1.0 - theta;
    let g = |t: f64| t.powf(-theta);
    let antiderivative = |t: f64| t.powf(e) / e;
    let mut out = Vec::with_capacity(count);
    let (t1, t2) = (nodes[0], nodes[1]);
    let (g1, g2) = (g(t1), g(t2));
    let big_g = antiderivative(t1);
    out.push([(g2 * t1 - big_g) / (g2 - g1), (big_g - g1 * t1) / (g2 - g1)]);
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let h = b - a;
        let (ga, gb) = (g(a), g(b));
        let big_g = antiderivative(b) - antiderivative(a);
        out.push([(gb * h - big_g) / (gb - ga), (big_g - ga * h) / (gb - ga)]);
    }
    Ok(out)
}

/// Running integrals `∫_0^{τ_m} F` for node values `f_m`, in node order.
pub fn cumulative<T, A>(weights: &[[f64; 2]], values: &[T], zero: T, mut axpy: A) -> Vec<T>
where
    T: Clone,
    A: FnMut(&T, f64, &T) -> T,
{
    let count = values.len();
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let mut acc = axpy(&zero, weights[0][0], &values[0]);
    if count > 1 {
        acc = axpy(&acc, weights[0][1], &values[1]);
    }
    out.push(acc.clone());
    for m in 1..count {
        let [a, b] = weights[m];
        acc = axpy(&acc, a, &values[m - 1]);
        acc = axpy(&acc, b, &values[m]);
        out.push(acc.clone());
    }
    out
}

/// [`cumulative`] on plain numbers.
pub fn cumulative_scalar(weights: &[[f64; 2]], values: &[f64]) -> Vec<f64> {
    cumulative(weights, values, 0.0, |acc, w, v| acc + w * v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_graded_and_end_at_horizon() {
        let nodes = graded_nodes(0.5, 10, 1.0 / 3.0).unwrap();
        assert_eq!(nodes.len(), 10);
        assert_eq!(*nodes.last().unwrap(), 0.5);
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        assert!((nodes[0] - 0.5 * 0.1f64.powf(1.5)).abs() < 1e-15);
        assert_eq!(node_count(0.2, 50), 50);
        assert_eq!(node_count(2.5, 50), 125);
    }

    #[test]
    fn integrates_pure_power_and_constants() {
        for theta in [0.2, 1.0 / 3.0, 0.6, 0.9] {
            let nodes = graded_nodes(1.7, 37, theta).unwrap();
            let w = interval_weights(&nodes, theta).unwrap();
            let power: Vec<f64> = nodes.iter().map(|t| t.powf(-theta)).collect();
            let ones = vec![1.0; nodes.len()];
            let ip = cumulative_scalar(&w, &power);
            let ic = cumulative_scalar(&w, &ones);
            for (m, t) in nodes.iter().enumerate() {
                let exact = t.powf(1.0 - theta) / (1.0 - theta);
                assert!((ip[m] - exact).abs() < 1e-8 * exact.max(1.0), "θ={theta} m={m}");
                assert!((ic[m] - t).abs() < 1e-12, "θ={theta} m={m}");
            }
        }
    }

    #[test]
    fn second_order_on_smooth_integrands() {
        let theta = 1.0 / 3.0;
        let f = |t: f64| t.powf(-theta) * (1.0 + t).cos();
        let err = |m: usize| {
            let nodes = graded_nodes(1.0, m, theta).unwrap();
            let w = interval_weights(&nodes, theta).unwrap();
            let vals: Vec<f64> = nodes.iter().map(|t| f(*t)).collect();
            let fine_nodes = graded_nodes(1.0, 20000, theta).unwrap();
            let fw = interval_weights(&fine_nodes, theta).unwrap();
            let fv: Vec<f64> = fine_nodes.iter().map(|t| f(*t)).collect();
            (cumulative_scalar(&w, &vals)[m - 1] - cumulative_scalar(&fw, &fv)[19999]).abs()
        };
        let order = (err(200) / err(400)).log2();
        assert!(order > 1.75, "{order}");
    }

    #[test]
    fn single_node_is_rectangle_rule() {
        let w = interval_weights(&[0.01], 0.5).unwrap();
        assert_eq!(cumulative_scalar(&w, &[3.0]), vec![0.03]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(graded_nodes(1.0, 0, 0.5).is_err());
        assert!(graded_nodes(-1.0, 3, 0.5).is_err());
        assert!(graded_nodes(1.0, 3, 1.0).is_err());
        assert!(interval_weights(&[0.5, 0.5], 0.5).is_err());
    }
}
