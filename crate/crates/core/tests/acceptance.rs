use std::f64::consts::PI;
use std::time::Instant;

use fdecolloc::blocksys::delay_block;
use fdecolloc::catalog::{
    converge, delay_evp_pencil, example10_equation, example3_exact, find, koenigs, Outcome, RunConfig,
};
use fdecolloc::exprgraph::{constant, discretize, func, linearize, param, t, y};
use fdecolloc::interp::{barymat, cumsummat, diffmat, trig_barymat, trig_coeff_magnitudes};
use fdecolloc::mesh::{propagate_breakpoints, PropagationOptions};
use fdecolloc::periodic::{solve_periodic_linear, LimitCycle};
use fdecolloc::solve::{eig_generalized, eig_smoothest, NewtonReport};
use fdecolloc::{build_piecewise_grid, cheb_grid, trig_grid, DelayMap, GridKind, HistorySpec, Matrix, OpExpr, PointFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Suite {
    passed: usize,
    failed: Vec<String>,
}

impl Suite {
    fn record(&mut self, id: &str, title: &str, ok: bool, detail: String) {
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("[{tag}] {id:>3} {title}: {detail}");
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(id.to_string());
        }
    }
}

fn sig3(a: f64, b: f64) -> bool {
    (a - b).abs() <= (5e-3 * b.abs()).max(0.5e-11)
}

// agreement to six significant digits of the expected value
fn sig6(a: f64, b: f64) -> bool {
    let e = b.abs().log10().floor();
    (a - b).abs() <= 0.5 * 10f64.powf(e - 5.0)
}

fn run(name: &str, cfg: &RunConfig) -> Result<Outcome, String> {
    find(name).ok_or_else(|| format!("no example {name}"))?.run(cfg).map_err(|e| e.to_string())
}

fn residuals(r: Option<&NewtonReport>) -> Vec<f64> {
    r.map(|r| r.iterations.iter().map(|i| i.residual_norm).collect()).unwrap_or_default()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

fn criterion_1(s: &mut Suite) {
    let start = Instant::now();
    let out = run("example1", &RunConfig::with_n(20));
    let elapsed = start.elapsed().as_secs_f64();
    let err = out.ok().and_then(|o| o.max_error(|t| (-t).exp())).unwrap_or(f64::INFINITY);
    let ns: Vec<usize> = (4..=24).step_by(2).collect();
    let geometric = converge(find("example1").unwrap(), &ns, &RunConfig::default())
        .map(|recs| recs.windows(2).all(|w| w[0].error <= 1e-13 || w[1].error <= 0.5 * w[0].error))
        .unwrap_or(false);
    s.record(
        "1",
        "ODE baseline",
        err <= 1e-13 && geometric && elapsed < 0.1,
        format!("max error {err:.2e} (<= 1e-13), geometric decay to the floor: {geometric}, {elapsed:.3} s (< 0.1 s)"),
    );
}

fn criterion_2(s: &mut Suite) {
    let err = run("example2", &RunConfig::with_n(20)).ok().and_then(|o| o.max_error(|t| (-t).exp())).unwrap_or(f64::INFINITY);
    s.record("2", "pantograph", err <= 1e-13, format!("max error {err:.2e} (<= 1e-13)"));
}

fn criterion_3(s: &mut Suite) {
    let multi = run("example3", &RunConfig::with_sizes(vec![20, 20]))
        .ok()
        .and_then(|o| o.max_error(example3_exact))
        .unwrap_or(f64::INFINITY);
    let single = run("example3_single_domain", &RunConfig::with_n(40))
        .ok()
        .and_then(|o| o.max_error(example3_exact))
        .unwrap_or(0.0);
    s.record(
        "3",
        "discrete delay on two panels",
        multi <= 1e-12 && single > 1e-6,
        format!("two panels {multi:.2e} (<= 1e-12), single panel n=40 {single:.2e} (> 1e-6)"),
    );
}

fn criterion_4(s: &mut Suite) {
    let opts = PropagationOptions::default();
    let a = propagate_breakpoints(|t| t - 0.5, (0.0, 2.0), &[0.0], opts).unwrap_or_default();
    let b = propagate_breakpoints(|t| t * t - 0.25, (0.0, 1.0), &[0.0], opts).unwrap_or_default();
    let ok_a = a == [0.5, 1.0, 1.5];
    let ok_b = b.len() == 2 && (b[0] - 0.5).abs() <= 1e-12 && (b[1] - 3f64.sqrt() / 2.0).abs() <= 1e-12;
    s.record("4", "breakpoint propagation", ok_a && ok_b, format!("t - 1/2: {a:?}, t^2 - 1/4: {b:?}"));
}

fn criterion_5(s: &mut Suite) {
    let expected = [0.71407355247, 0.05480002458, 0.00016794991, 5.1e-10];
    let Ok(out) = run("example6", &RunConfig::with_n(12)) else {
        return s.record("5", "state-dependent Newton", false, "solver failed".into());
    };
    let r = residuals(out.report());
    let table = r.len() >= 4 && r.iter().zip(expected).all(|(a, b)| sig3(*a, b));
    let err = out.max_error(f64::sin).unwrap_or(f64::INFINITY);
    s.record(
        "5",
        "state-dependent Newton",
        table && err <= 1e-10,
        format!("residuals [{}], error vs sin {err:.2e} (<= 1e-10)", fmt_list(&r)),
    );
}

fn criterion_6(s: &mut Suite) {
    let expected = [1.0, 0.25, 0.00686128071, 8.43021e-6, 2e-11];
    let r = run("example9", &RunConfig::with_n(12)).map(|o| residuals(o.report())).unwrap_or_default();
    let table = r.len() >= 5 && r.iter().zip(expected).all(|(a, b)| sig3(*a, b));
    // rows past the table sit at the rounding floor
    let quadratic = r.len() >= 5 && r[..5].windows(2).all(|w| w[1] <= 10.0 * w[0] * w[0]);
    s.record(
        "6",
        "state-dependent FDE Newton",
        table && quadratic,
        format!("residuals [{}], quadratic tail: {quadratic}", fmt_list(&r)),
    );
}

fn criterion_7(s: &mut Suite) {
    let exact = |t: f64| (t / 10.0 - 1.0).exp();
    let rel = run("chebfun_ex1", &RunConfig::with_n(20))
        .ok()
        .and_then(|o| o.nodes_values())
        .map(|(x, v)| x.iter().zip(&v).map(|(t, u)| ((u - exact(*t)) / exact(*t)).abs()).fold(0.0, f64::max))
        .unwrap_or(f64::INFINITY);
    s.record("7", "Volterra and pantograph terms", rel <= 1e-12, format!("max relative error {rel:.2e} (<= 1e-12)"));
}

fn criterion_8(s: &mut Suite) {
    let err = run("chebfun_ex2", &RunConfig::default())
        .ok()
        .and_then(|o| o.max_error(|t| (2.0 * t).sin().exp()))
        .unwrap_or(f64::INFINITY);
    let (converged, detail) = match run("chebfun_ex2_w", &RunConfig::default()) {
        Ok(o) => {
            let r = residuals(o.report());
            let conv = o.report().is_some_and(|r| r.converged);
            (conv, format!("converged {conv}, final residual {:.2e}, cond {:.2e}", r.last().copied().unwrap_or(f64::NAN), o.cond().unwrap_or(f64::NAN)))
        }
        Err(e) => (false, e),
    };
    s.record("8", "neutral DDE", err <= 1e-10 && converged, format!("slope 2 error {err:.2e} (<= 1e-10); W branch {detail}"));
}

fn criterion_9(s: &mut Suite) {
    let expected = [13.05485001, 169.7286494, 1398.543635, 9480.135715, 57516.69512, 326708.2900];
    let start = Instant::now();
    let got: Vec<f64> = delay_evp_pencil(60)
        .and_then(|(a, b, _)| eig_smoothest(&a, &b, 6, 0.0, GridKind::ChebyshevLobatto))
        .map(|r| {
            let mut v: Vec<f64> = r.pairs.iter().filter(|p| p.is_real(1e-8) && p.value.re > 0.0).map(|p| p.value.re).collect();
            v.sort_by(f64::total_cmp);
            v
        })
        .unwrap_or_default();
    let elapsed = start.elapsed().as_secs_f64();
    let matched: Vec<bool> = expected.iter().enumerate().map(|(i, e)| got.get(i).is_some_and(|g| sig6(*g, *e))).collect();
    let ok = matched.iter().all(|m| *m) && elapsed < 5.0;
    let shown: Vec<String> = expected
        .iter()
        .enumerate()
        .map(|(i, e)| match got.get(i) {
            Some(g) => format!("{g:.6} vs {e} {}", if matched[i] { "ok" } else { "MISMATCH" }),
            None => format!("unresolved vs {e} MISMATCH"),
        })
        .collect();
    s.record("9", "delay eigenvalue problem", ok, format!("[{}], {elapsed:.2} s (< 5 s)", shown.join("; ")));
}

fn criterion_10(s: &mut Suite) {
    let solve = |n: usize| trig_grid(n, 0.0, 2.0 * PI).and_then(|g| solve_periodic_linear(example10_equation(), &g));
    let (Ok(coarse), Ok(fine)) = (solve(32), solve(64)) else {
        return s.record("10", "periodic linear DDE", false, "solver failed".into());
    };
    let gap = coarse
        .eval(fine.grid().nodes())
        .iter()
        .zip(fine.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let m = trig_coeff_magnitudes(coarse.values());
    let top = m.iter().copied().fold(0.0, f64::max);
    let tail = m[m.len() - 3..].iter().copied().fold(0.0, f64::max) / top;
    s.record(
        "10",
        "periodic linear DDE",
        gap <= 1e-10 && tail <= 1e-10,
        format!("n=32 vs n=64 {gap:.2e} (<= 1e-10), trailing coefficients {tail:.2e} (<= 1e-10)"),
    );
}

fn cycle(name: &str, n: usize) -> Option<(LimitCycle, f64)> {
    let start = Instant::now();
    match run(name, &RunConfig::with_n(n)) {
        Ok(Outcome::Cycle(c)) => Some((c.cycle, start.elapsed().as_secs_f64())),
        _ => None,
    }
}

fn cycle_gap(a: &LimitCycle, b: &LimitCycle) -> f64 {
    let theta: Vec<f64> = (0..400).map(|i| i as f64 / 400.0).collect();
    let (u, v) = (a.eval(0, &theta).unwrap(), b.eval(0, &theta).unwrap());
    let states = u.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    states.max((a.period - b.period).abs())
}

fn criterion_11(s: &mut Suite) {
    let lv = cycle("example11", 129);
    let trig = cycle("example13", 25);
    let trig_ref = cycle("example13", 40);
    let cheb = cycle("example13_chebyshev", 50);
    let cheb_ref = cycle("example13_chebyshev", 70);
    let (Some(lv), Some(trig), Some(trig_ref), Some(cheb), Some(cheb_ref)) = (lv, trig, trig_ref, cheb, cheb_ref) else {
        return s.record("11", "limit cycles", false, "a cycle solve failed".into());
    };
    let lv_ok = (lv.0.period - 30.83847284).abs() <= 1e-4 && lv.1 < 30.0;
    let logistic_ok = (trig.0.period - 4.0964).abs() <= 1e-3 && trig.1 < 30.0 && cheb.1 < 30.0;
    let (gt, gc) = (cycle_gap(&trig.0, &trig_ref.0), cycle_gap(&cheb.0, &cheb_ref.0));
    s.record(
        "11",
        "limit cycles",
        lv_ok && logistic_ok && gt <= 5e-9 && gc <= 5e-9,
        format!(
            "Lotka-Volterra T = {:.10} ({:.2} s); logistic T = {:.10} ({:.2} s), 25 trig vs proxy {gt:.2e}, 50 Chebyshev vs proxy {gc:.2e} (<= 5e-9)",
            lv.0.period, lv.1, trig.0.period, trig.1
        ),
    );
}

fn criterion_12(s: &mut Suite) {
    let xs: Vec<f64> = (0..=400).map(|i| 2.0 * i as f64 / 400.0).collect();
    let err = match run("example12", &RunConfig::with_n(30)) {
        Ok(Outcome::Collocation(c)) => c
            .solution
            .eval(&xs)
            .map(|v| xs.iter().zip(&v).map(|(x, u)| (u - koenigs(*x)).abs()).fold(0.0, f64::max))
            .unwrap_or(f64::INFINITY),
        _ => f64::INFINITY,
    };
    s.record("12", "functional equation", err <= 1e-10, format!("max error vs iterated composition on [0, 2] {err:.2e} (<= 1e-10)"));
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

fn partition_of_unity(rng: &mut ChaCha8Rng) -> bool {
    (0..50).all(|_| {
        let n = rng.gen_range(2..40);
        let x: f64 = rng.gen_range(0.0..1.0);
        let c = barymat(&[x], &cheb_grid(n, 0.0, 1.0).unwrap()).unwrap();
        let t = trig_barymat(&[7.0 * x - 2.0], &trig_grid(n, 0.0, 2.0 * PI).unwrap()).unwrap();
        (c.row(0).iter().sum::<f64>() - 1.0).abs() <= 1e-12 && (t.row(0).iter().sum::<f64>() - 1.0).abs() <= 1e-12
    })
}

fn exactness(rng: &mut ChaCha8Rng) -> bool {
    (0..50).all(|_| {
        let deg = rng.gen_range(0..10);
        let c: Vec<f64> = (0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = cheb_grid(deg + 2, 0.0, 1.0).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|&s| poly(&c, s)).collect();
        let x: f64 = rng.gen_range(0.0..1.0);
        let poly_ok = (barymat(&[x], &g).unwrap().matvec(&v)[0] - poly(&c, x)).abs() <= 1e-12;
        let k = rng.gen_range(1..6);
        let tg = trig_grid(2 * k + 1, 0.0, 2.0 * PI).unwrap();
        let tv: Vec<f64> = tg.nodes().iter().map(|&s| (k as f64 * s).sin()).collect();
        let z: f64 = rng.gen_range(-5.0..10.0);
        let trig_ok = (trig_barymat(&[z], &tg).unwrap().matvec(&tv)[0] - (k as f64 * z).sin()).abs() <= 1e-12;
        poly_ok && trig_ok
    })
}

fn jacobians(rng: &mut ChaCha8Rng) -> bool {
    let g = build_piecewise_grid(&[0.0, 1.0], &[12]).unwrap();
    let (c0, c1, c2, p0) = (rng.gen_range(0.2..0.4), rng.gen_range(0.0..0.25), rng.gen_range(0.0..0.25), rng.gen_range(0.3..0.7));
    let x: Vec<f64> = g.nodes().iter().map(|&u| c0 + c1 * u + c2 * u * u).collect();
    let cases: Vec<OpExpr> = vec![
        t() * y(),
        constant(2.0) + func(f64::sin) * y(),
        y().diff(1) + y().diff(2),
        y().delay(DelayMap::Proportional(0.5)),
        y().delay_with_history(DelayMap::Shift(0.3), HistorySpec::explicit(|s: f64| 0.3 + 0.1 * s)),
        y().delay(DelayMap::map(|s| s * s)),
        y().at_state(y(), PointFn::identity()),
        y().neutral(DelayMap::Proportional(0.5)),
        y().cumsum(),
        y().volterra(|a, b| (a - b).cos()),
        y() * y().diff(1) * y().delay(DelayMap::Proportional(0.7)),
        3.5 * y() + y().apply(PointFn::exp()) + y().apply(PointFn::ln()) + y().apply(PointFn::recip()),
        param(0) * y() + y().delay(DelayMap::parametric(|s, p| p[0] * s, |s, _| vec![s])),
    ];
    let h = 1e-6;
    cases.iter().all(|e| {
        let lin = linearize(e, &g, &x, &[p0], 1).unwrap();
        (0..=x.len()).all(|j| {
            let shifted = |d: f64| {
                let (mut xs, mut ps) = (x.clone(), vec![p0]);
                if j < x.len() {
                    xs[j] += d;
                } else {
                    ps[0] += d;
                }
                discretize(e, &g, &xs, &ps, 1).unwrap()
            };
            let (up, dn) = (shifted(h), shifted(-h));
            (0..x.len()).all(|i| {
                let an = if j < lin.jac.cols() { lin.jac[(i, j)] } else { 0.0 };
                ((up[i] - dn[i]) / (2.0 * h) - an).abs() <= 1e-5 * an.abs().max(1.0)
            })
        })
    })
}

fn lower_triangular(rng: &mut ChaCha8Rng) -> bool {
    (0..20).all(|_| {
        let panels = rng.gen_range(2..5);
        let lag: f64 = rng.gen_range(0.05..0.9);
        let breaks: Vec<f64> = (0..=panels).map(|k| k as f64 / panels as f64).collect();
        let g = build_piecewise_grid(&breaks, &vec![8; panels]).unwrap();
        let (m, _) = delay_block(&g, |s| s - lag, Some(&HistorySpec::Constant(0.0))).unwrap();
        (0..g.len()).all(|i| (0..g.len()).all(|j| g.panel_of_index(j) <= g.panel_of_index(i) || m[(i, j)] == 0.0))
    })
}

fn integral_identity(rng: &mut ChaCha8Rng) -> bool {
    (0..30).all(|_| {
        let deg = rng.gen_range(0..9);
        let c: Vec<f64> = (0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = cheb_grid(deg + 3, -0.5, 1.5).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|&s| poly(&c, s)).collect();
        let back = cumsummat(&g).unwrap().matmul(&diffmat(&g, 1).unwrap()).matvec(&v);
        back.iter().zip(&v).all(|(w, u)| (w - (u - v[0])).abs() <= 1e-11)
    })
}

fn eigen_residuals(rng: &mut ChaCha8Rng) -> bool {
    (0..20).all(|_| {
        let n = rng.gen_range(2..12);
        let a = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let b = Matrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { 0.0 } + 0.1 * rng.gen_range(-1.0..1.0));
        let scale = a.norm_inf() + b.norm_inf();
        eig_generalized(&a, &b, n, 0.123)
            .map(|r| r.pairs.iter().all(|p| p.residual <= 1e-8 * scale * (1.0 + p.value.norm())))
            .unwrap_or(false)
    })
}

fn criterion_13(s: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let checks: [(&str, fn(&mut ChaCha8Rng) -> bool); 6] = [
        ("partition of unity", partition_of_unity),
        ("polynomial/trig exactness", exactness),
        ("Jacobian vs finite differences", jacobians),
        ("block lower triangular delays", lower_triangular),
        ("cumsummat of diffmat", integral_identity),
        ("eigen residual bound", eigen_residuals),
    ];
    let results: Vec<(&str, bool)> = checks.iter().map(|(name, f)| (*name, f(&mut rng))).collect();
    let detail = results.iter().map(|(n, ok)| format!("{n}: {}", if *ok { "ok" } else { "FAILED" })).collect::<Vec<_>>();
    s.record("13", "property suites", results.iter().all(|r| r.1), detail.join(", "));
}

fn main() {
    let mut s = Suite { passed: 0, failed: Vec::new() };
    criterion_1(&mut s);
    criterion_2(&mut s);
    criterion_3(&mut s);
    criterion_4(&mut s);
    criterion_5(&mut s);
    criterion_6(&mut s);
    criterion_7(&mut s);
    criterion_8(&mut s);
    criterion_9(&mut s);
    criterion_10(&mut s);
    criterion_11(&mut s);
    criterion_12(&mut s);
    criterion_13(&mut s);
    println!("acceptance: {} passed, {} failed {:?}", s.passed, s.failed.len(), s.failed);
    if !s.failed.is_empty() {
        std::process::exit(1);
    }
}
