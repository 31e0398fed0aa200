use fdecolloc::blocksys::point_condition;
use fdecolloc::exprgraph::{func, y, PointFn};
use fdecolloc::solve::{newton, NewtonOptions, Problem};
use fdecolloc::build_piecewise_grid;

// Three significant digits, or agreement to the 11 printed decimals.
fn sig3(a: f64, b: f64) -> bool {
    (a - b).abs() <= (5e-3 * b.abs()).max(0.5e-11)
}

#[test]
fn state_dependent_dde_newton_history() {
    let g = build_piecewise_grid(&[0.0, 1.0], &[12]).unwrap();
    let e = y().diff(1) + y().at_state(y(), PointFn::identity()) - func(|t: f64| t.cos() + t.sin().sin());
    let p = Problem::scalar(&g, e).with_constraints([point_condition(&g, 0.0, 0, 0.0, Some(0)).unwrap()]);
    let sol = newton(&p, g.nodes(), &NewtonOptions::default()).unwrap();
    let r: Vec<f64> = sol.report.iterations.iter().map(|i| i.residual_norm).collect();
    let expected = [0.71407355247, 0.05480002458, 0.00016794991, 5.1e-10];
    for (a, b) in r.iter().zip(expected) {
        assert!(sig3(*a, b), "{a} vs {b}");
    }
    assert!(sol.report.converged);
    let err = g.nodes().iter().zip(&sol.x).map(|(t, v)| (t.sin() - v).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-10, "{err}");
}

#[test]
fn state_dependent_fde_newton_history() {
    let g = build_piecewise_grid(&[0.0, 1.0], &[12]).unwrap();
    let e = y().diff(1) + y().at_state(y(), PointFn::identity());
    let p = Problem::scalar(&g, e).with_constraints([point_condition(&g, 0.0, 0, 1.0, Some(0)).unwrap()]);
    let sol = newton(&p, vec![1.0; 12], &NewtonOptions::default()).unwrap();
    let r: Vec<f64> = sol.report.iterations.iter().map(|i| i.residual_norm).collect();
    let expected = [1.0, 0.25, 0.00686128071, 8.43021e-6, 2e-11];
    for (a, b) in r.iter().zip(expected) {
        assert!(sig3(*a, b), "{a} vs {b}");
    }
}
