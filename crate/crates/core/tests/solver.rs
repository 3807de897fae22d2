use kcurv::grid::{Resolution, ScalarField, SphereGrid};
use kcurv::monitor::identity_residuals_on;
use kcurv::par::Execution;
use kcurv::prescription::{ConstantPrescription, HomotopyPrescription, ModelPrescription};
use kcurv::solver::{
    initial_constant, newton_solve, run_homotopy, smooth_direction, DiscreteProblem, SolveError, SolverConfig,
};

fn sphere(nlat: usize, nlon: usize) -> SphereGrid {
    SphereGrid::new(Resolution::Sphere { nlat, nlon }).unwrap()
}

#[test]
fn forward_difference_error_is_first_order() {
    let grid = sphere(16, 32);
    let psi = ModelPrescription::new(0.5, 0.1, 2.0).unwrap();
    let prob = DiscreteProblem::new(&grid, HomotopyPrescription::new(&psi, 2.0, 0.6).unwrap(), 2).unwrap();
    let u = ScalarField::from_fn(&grid, |p| {
        let [x, y, z] = p.embedding();
        0.75 + 0.03 * x + 0.02 * y * z
    });
    let v = smooth_direction(&grid);
    let jv = prob.jacobian(&u).unwrap().apply(v.values());
    let base = prob.residual(&u).unwrap();
    let err = |eps: f64| {
        let shifted = ScalarField::new(u.values().iter().zip(v.values()).map(|(a, b)| a + eps * b).collect());
        let r = prob.residual(&shifted).unwrap();
        (0..grid.len())
            .map(|i| ((r.values()[i] - base.values()[i]) / eps - jv[i]).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1e-3), err(5e-4));
    let ratio = e1 / e2;
    assert!((1.8..=2.2).contains(&ratio), "{e1:e} {e2:e} ratio {ratio}");
}

#[test]
fn newton_tail_is_quadratic() {
    let grid = sphere(16, 32);
    let psi = ModelPrescription::new(0.5, 0.1, 2.0).unwrap();
    let prob = DiscreteProblem::new(&grid, HomotopyPrescription::new(&psi, 2.0, 1.0).unwrap(), 2).unwrap();
    let lam = initial_constant(2.0).unwrap();
    let cfg = SolverConfig { tol_newton: 1e-13, ..Default::default() };
    let (_, rep) = newton_solve(&prob, &ScalarField::constant(&grid, lam), &cfg).unwrap();
    let h = &rep.history;
    assert!(h.len() >= 3, "{h:?}");
    let tail = &h[h.len() - 3..];
    for w in tail.windows(2) {
        if w[1] > 1e-12 {
            assert!(w[1] <= 10.0 * w[0] * w[0], "{h:?}");
        }
    }
}

#[test]
fn runs_are_bit_identical_across_repeats_and_execution_modes() {
    let psi = ModelPrescription::new(0.5, 0.1, 2.0).unwrap();
    let cfg = SolverConfig::default();
    let par = sphere(16, 32);
    let seq = sphere(16, 32).with_execution(Execution::Sequential);
    let a = run_homotopy(&psi, &par, &cfg).unwrap();
    let b = run_homotopy(&psi, &par, &cfg).unwrap();
    let c = run_homotopy(&psi, &seq, &cfg).unwrap();
    assert_eq!(a.u, b.u);
    assert_eq!(a.step_history, b.step_history);
    assert_eq!(a.u, c.u);
    assert_eq!(a.step_history, c.step_history);
}

#[test]
fn xi_independent_targets_keep_constant_solutions() {
    let psi = ModelPrescription::new(0.35, 0.0, 3.0).unwrap();
    let cfg = SolverConfig::default();
    let st = run_homotopy(&psi, &sphere(16, 32), &cfg).unwrap();
    let mean = st.u.values().iter().sum::<f64>() / st.u.len() as f64;
    let dev = st.u.values().iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
    assert!(dev <= 10.0 * cfg.tol_newton, "{dev:e}");
    // Constant slice equation 0.35 cosh³ r = 1.
    let want = (1.0_f64 / 0.35).powf(1.0 / 3.0).acosh();
    assert!((mean - want).abs() < 1e-8);
}

#[test]
fn jacobian_self_check_runs_on_schedule() {
    let psi = ModelPrescription::new(0.5, 0.1, 2.0).unwrap();
    let cfg = SolverConfig { k: 1, jacobian_check_every: 2, ..Default::default() };
    let grid = SphereGrid::new(Resolution::Circle(64)).unwrap();
    let st = run_homotopy(&psi, &grid, &cfg).unwrap();
    let accepted = st.step_history.len() - 1;
    assert_eq!(st.jacobian_checks.len(), accepted / 2 + 1);
    assert!(st.jacobian_checks.iter().all(|(_, rel)| *rel <= 1e-5));
}

#[test]
fn missing_barrier_stops_before_solving() {
    let psi = ConstantPrescription { value: 0.2 };
    let grid = SphereGrid::new(Resolution::Circle(32)).unwrap();
    let err = run_homotopy(&psi, &grid, &SolverConfig { k: 1, ..Default::default() }).unwrap_err();
    assert!(matches!(err, SolveError::Barrier(ref f) if !f.lower_found), "{err}");
}

#[test]
fn non_zonal_identities_converge_away_from_the_poles() {
    let f = |p: &kcurv::grid::SpherePoint| {
        let [x, y, z] = p.embedding();
        0.8 + 0.1 * (1.5 * z * z - 0.5) + 0.1 * (x * x - y * y) + 0.1 * x * z
    };
    let band = |p: &kcurv::grid::SpherePoint| p.coords()[0].sin() >= 0.5;
    let res: Vec<_> = [sphere(32, 64), sphere(64, 128), sphere(128, 256)]
        .iter()
        .map(|g| identity_residuals_on(&ScalarField::from_fn(g, f), g, band).unwrap())
        .collect();
    for w in res.windows(2) {
        for (a, b) in [
            (w[0].r_eta, w[1].r_eta),
            (w[0].r_tau1, w[1].r_tau1),
            (w[0].r_tau2, w[1].r_tau2),
            (w[0].codazzi, w[1].codazzi),
        ] {
            assert!((3.4..=4.6).contains(&(a / b)), "{a:e} / {b:e}");
        }
    }
}
