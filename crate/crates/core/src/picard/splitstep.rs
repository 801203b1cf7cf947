//! Strang splitting for `iu_t − Δu = σ|u|²u`: half nonlinear phase, full
//! free step, half nonlinear phase.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::Field;
use crate::propagator;

/// Exact flow of `u_t = −iσ|u|²u` over `dt`.
pub fn nonlinear_phase(u: &Field, sign: f64, dt: f64) -> Field {
    u.map_values(|_, v| v * Complex64::from_polar(1.0, -sign * v.norm_sqr() * dt))
}

pub fn reference_splitstep(u0: &Field, horizon: f64, steps: usize, sign: f64) -> Result<Field> {
    if steps == 0 {
        return Err(LabError::param("steps", "need at least one step"));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(LabError::param("horizon", format!("must be non-negative, got {horizon}")));
    }
    let dt = horizon / steps as f64;
    let mut u = nonlinear_phase(u0, sign, 0.5 * dt);
    for step in 0..steps {
        u = propagator::apply(dt, &u);
        let sub = if step + 1 == steps { 0.5 * dt } else { dt };
        u = nonlinear_phase(&u, sign, sub);
    }
    Ok(u)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitStepCheck {
    pub steps: [usize; 3],
    /// `‖u_{2s} − u_{4s}‖₂ / ‖u_{4s}‖₂`
    pub halving_change: f64,
    /// `log2(‖u_s − u_{2s}‖ / ‖u_{2s} − u_{4s}‖)`
    pub observed_order: f64,
}

/// Runs `steps`, `2·steps` and `4·steps`; returns the finest solution and fails
/// with [`LabError::StepHalving`] when the last halving moved it by more than
/// `limit` (relative L²).
pub fn checked_splitstep(
    u0: &Field,
    horizon: f64,
    steps: usize,
    sign: f64,
    limit: f64,
) -> Result<(Field, SplitStepCheck)> {
    let runs: Vec<Field> = [steps, 2 * steps, 4 * steps]
        .iter()
        .map(|&s| reference_splitstep(u0, horizon, s, sign))
        .collect::<Result<_>>()?;
    let coarse = runs[0].sub(&runs[1])?.lp_norm(2.0)?;
    let fine = runs[1].sub(&runs[2])?.lp_norm(2.0)?;
    let scale = runs[2].lp_norm(2.0)?;
    let change = if scale == 0.0 { fine } else { fine / scale };
    let check = SplitStepCheck {
        steps: [steps, 2 * steps, 4 * steps],
        halving_change: change,
        observed_order: if fine > 0.0 { (coarse / fine).log2() } else { f64::INFINITY },
    };
    if change > limit {
        return Err(LabError::StepHalving { change, limit });
    }
    let finest = runs.into_iter().nth(2).expect("three runs");
    Ok((finest, check))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{make_field, TestFamily};
    use crate::grid::Grid;

    fn data() -> Field {
        make_field(&TestFamily::gaussian(1.0), &Grid::new(1, 1024, 40.0).unwrap()).unwrap()
    }

    #[test]
    fn phase_step_keeps_modulus() {
        let u = data();
        let v = nonlinear_phase(&u, 1.0, 0.37);
        for (a, b) in u.values().iter().zip(v.values()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn mass_is_conserved() {
        let u0 = data();
        let u = reference_splitstep(&u0, 0.5, 200, -1.0).unwrap();
        assert!((u.lp_norm(2.0).unwrap() - u0.lp_norm(2.0).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn second_order_self_convergence() {
        let (_, check) = checked_splitstep(&data(), 0.1, 100, -1.0, 1e-6).unwrap();
        assert!((check.observed_order - 2.0).abs() < 0.2, "{}", check.observed_order);
        let err = checked_splitstep(&data(), 0.1, 2, -1.0, 1e-12).unwrap_err();
        assert!(matches!(err, LabError::StepHalving { .. }));
    }

    #[test]
    fn linear_limit_is_free_flow() {
        let u0 = data().scale_real(1e-9);
        let u = reference_splitstep(&u0, 0.3, 3, 1.0).unwrap();
        let free = propagator::apply(0.3, &u0);
        assert!(u.relative_l2_distance(&free).unwrap() < 1e-12);
    }
}
