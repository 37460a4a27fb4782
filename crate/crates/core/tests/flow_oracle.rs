//! Independent oracles for the chain transport module: the logarithmic
//! mean against direct numerical quadrature of its defining integral, and
//! the two-state geodesic distance against a dense one-dimensional
//! quadrature of its closed-form reduction.

use quow::flow::solver::{w_distance, SolverOptions};
use quow::flow::{theta, ReversibleChain};
use quow::gen;
use rand::Rng;

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut total = f(a) + f(b);
    for k in 1..n {
        let weight = if k % 2 == 1 { 4.0 } else { 2.0 };
        total += weight * f(a + k as f64 * h);
    }
    total * h / 3.0
}

/// `∫₀¹ s^p t^{1−p} dp` evaluated directly; the integrand is smooth, so
/// Simpson with 2000 intervals is far below the 1e-10 comparison budget.
fn theta_by_quadrature(s: f64, t: f64) -> f64 {
    simpson(0.0, 1.0, 2000, |p| s.powf(p) * t.powf(1.0 - p))
}

#[test]
fn log_mean_matches_its_defining_integral_at_a_thousand_points() {
    let mut r = gen::rng(81);
    for _ in 0..1000 {
        let s = r.gen_range(0.05..4.0);
        let t = r.gen_range(0.05..4.0);
        let closed = theta(s, t).unwrap();
        let integral = theta_by_quadrature(s, t);
        assert!(
            (closed - integral).abs() <= 1e-10,
            "theta({s}, {t}): closed {closed} vs integral {integral}"
        );
    }
}

#[test]
fn log_mean_of_e_and_one_is_e_minus_one() {
    let e = std::f64::consts::E;
    let integral = theta_by_quadrature(e, 1.0);
    assert!((integral - (e - 1.0)).abs() <= 1e-10);
    assert!((theta(e, 1.0).unwrap() - integral).abs() <= 1e-10);
}

#[test]
fn log_mean_vanishes_on_the_boundary_in_the_quadrature_limit() {
    // The integrand s^p 0^{1-p} vanishes for p < 1; quadrature of the
    // limiting integrand confirms the boundary branch.
    for s in [0.5f64, 1.0, 3.0] {
        let integral = simpson(0.0, 1.0 - 1e-9, 2000, |p| {
            s.powf(p) * 0.0f64.powf(1.0 - p)
        });
        assert!(integral.abs() <= 1e-12);
        assert_eq!(theta(s, 0.0).unwrap(), 0.0);
    }
}

/// Two-state symmetric chain: along densities `(1+r, 1−r)` the continuity
/// equation has one unknown per time, and eliminating it reduces the
/// geodesic problem to `W = ∫ (2 θ(1+r, 1−r))^{−1/2} dr` over the
/// parameter interval. The log-mean is evaluated from scratch here.
fn two_state_w_by_quadrature(eps: f64) -> f64 {
    simpson(-eps, eps, 4000, |r| {
        let s = 1.0 + r;
        let t = 1.0 - r;
        let log_mean = if r == 0.0 { 1.0 } else { (s - t) / (s.ln() - t.ln()) };
        1.0 / (2.0 * log_mean).sqrt()
    })
}

#[test]
fn two_state_distance_matches_the_reduced_quadrature() {
    let chain = ReversibleChain::new(
        vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        Some(vec![0.5, 0.5]),
    )
    .unwrap();
    let eps = 0.05;
    let rho0 = vec![1.0 + eps, 1.0 - eps];
    let rho1 = vec![1.0 - eps, 1.0 + eps];
    let sol = w_distance(&chain, &rho0, &rho1, &SolverOptions::default()).unwrap();
    let oracle = two_state_w_by_quadrature(eps);
    assert!(
        (sol.distance - oracle).abs() <= 1e-4,
        "solver {} vs quadrature {}",
        sol.distance,
        oracle
    );
}
