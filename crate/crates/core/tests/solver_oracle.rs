use nls_lab::picard::{self, checked_splitstep, HorizonRule, SolverConfig};
use nls_lab::{make_field, Grid, TestFamily};

#[test]
fn picard_matches_splitstep_on_defocusing_gaussian() {
    let g = Grid::new(1, 1024, 40.0).unwrap();
    let u0 = make_field(&TestFamily::gaussian(1.0), &g).unwrap();
    let horizon = 0.5;
    let cfg = SolverConfig::lp_1d(1.5, -1)
        .unwrap()
        .with_horizon(HorizonRule::Fixed(horizon))
        .with_nodes_per_unit(200);
    let (slab, diag) = picard::solve(&u0, &cfg).unwrap();
    assert!(diag.converged);
    let u = slab.transported().pop().unwrap();
    let (reference, check) = checked_splitstep(&u0, horizon, 400, -1.0, 1e-6).unwrap();
    let err = u.relative_l2_distance(&reference).unwrap();
    assert!(err < 1e-5, "{err:e}");
    assert!((check.observed_order - 2.0).abs() < 0.2, "{}", check.observed_order);
}

#[test]
fn zero_data_gives_the_zero_slab() {
    let g = Grid::new(1, 256, 40.0).unwrap();
    let u0 = make_field(&TestFamily::gaussian(1.0).with_amplitude(0.0), &g).unwrap();
    for cfg in [SolverConfig::besov(1.5, 1).unwrap(), SolverConfig::lp_1d(1.5, -1).unwrap()] {
        let (slab, diag) = picard::solve(&u0, &cfg).unwrap();
        assert!(diag.converged);
        assert!(slab.states.iter().all(|v| v.max_modulus() == 0.0));
    }
}
