use memwave::{
    maccamy_constants, resolvent_kernel, resolvent_on_grid, verify_resolvent_identity, Error,
    MemoryKernel, PronyTerm, TimeGrid,
};

fn max_err(r: &memwave::ResolventData, exact: impl Fn(f64) -> f64) -> f64 {
    r.grid()
        .nodes()
        .zip(r.marched())
        .map(|(t, v)| (v - exact(t)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn exponential_resolvent_second_order() {
    let m = MemoryKernel::exponential(0.5, 1.0).unwrap();
    let exact = |t: f64| 0.5 * (-1.5 * t).exp();
    let coarse = resolvent_kernel(&m, 0.01, 5.0).unwrap();
    let fine = resolvent_kernel(&m, 0.005, 5.0).unwrap();
    let (e1, e2) = (max_err(&coarse, exact), max_err(&fine, exact));
    assert!(e1 <= 5.0 * 0.01 * 0.01);
    let ratio = e1 / e2;
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn two_term_prony_against_laplace_oracle() {
    // M = e^{-t} + e^{-3t}: the Laplace transform of R is M^/(1 + M^), which
    // has partial fractions R(t) = A e^{p1 t} + B e^{p2 t} with p the roots of
    // (s + 1)(s + 3) + (s + 3) + (s + 1) = s^2 + 6 s + 7.
    let m = MemoryKernel::prony(vec![PronyTerm::new(1.0, 1.0), PronyTerm::new(1.0, 3.0)]).unwrap();
    let d = 2f64.sqrt();
    let (p1, p2) = (-3.0 + d, -3.0 - d);
    // numerator 2 s + 4 at the roots divided by the derivative 2 s + 6
    let a = (2.0 * p1 + 4.0) / (2.0 * p1 + 6.0);
    let b = (2.0 * p2 + 4.0) / (2.0 * p2 + 6.0);
    let exact = |t: f64| a * (p1 * t).exp() + b * (p2 * t).exp();
    let r = resolvent_kernel(&m, 0.005, 4.0).unwrap();
    let err = max_err(&r, exact);
    assert!(err < 0.05 * 0.005 * 0.005 * 100.0, "{err}");
    assert!(r.analytic_form().is_none());
    // a = R(0) = 2, b = R'(0) = p1 A + p2 B
    // b comes from one-sided second-order differences
    let b_exact = p1 * a + p2 * b;
    let b_err = |h: f64| {
        let data = maccamy_constants(&resolvent_kernel(&m, h, 1.0).unwrap()).unwrap();
        assert!((data.a - 2.0).abs() < 1e-12);
        (data.b - b_exact).abs()
    };
    let ratio = b_err(0.01) / b_err(0.005);
    assert!((3.5..=4.5).contains(&ratio), "{ratio}");
}

#[test]
fn resolvent_identity_holds_both_ways() {
    for m in [
        MemoryKernel::exponential(0.5, 1.0).unwrap(),
        MemoryKernel::prony(vec![PronyTerm::new(0.3, 0.5), PronyTerm::new(-0.1, 2.0)]).unwrap(),
    ] {
        let r = resolvent_kernel(&m, 0.01, 5.0).unwrap();
        let res = verify_resolvent_identity(&m, &r).unwrap();
        assert!(res <= r.tolerance(), "{res}");
        assert!(res < 1e-5);
    }
}

#[test]
fn sampled_kernel_matches_prony_on_same_nodes() {
    let grid = TimeGrid::from_horizon(2.0, 200).unwrap();
    let p = MemoryKernel::exponential(0.5, 1.0).unwrap();
    let rows: Vec<(f64, f64)> = (0..=400).map(|j| {
        let t = 0.005 * j as f64;
        (t, 0.5 * (-t).exp())
    }).collect();
    let s = MemoryKernel::from_rows(&rows).unwrap();
    let rp = resolvent_on_grid(&p, &grid).unwrap();
    let rs = resolvent_on_grid(&s, &grid).unwrap();
    for (a, b) in rp.marched().iter().zip(rs.marched()) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn sampled_kernel_too_short_is_rejected() {
    let s = MemoryKernel::sampled(0.01, vec![1.0; 50]).unwrap();
    let grid = TimeGrid::from_horizon(1.0, 100).unwrap();
    assert!(matches!(resolvent_on_grid(&s, &grid), Err(Error::GridMismatch(_))));
}

#[test]
fn stiff_kernel_trips_guard() {
    let m = MemoryKernel::exponential(1.0, 500.0).unwrap();
    let err = resolvent_kernel(&m, 0.01, 1.0).unwrap_err();
    assert!(err.is_numerical_guard());
}
