//! Randomized invariants of metric quotients by finite isometry groups.
//!
//! The orbit-space distance must itself satisfy the metric axioms and the
//! projection must be 1-Lipschitz, in fact a submetry in the sense of
//! Berestovskii (1987). Mass bookkeeping through pushforward and group
//! averaging closes exactly on binary-grid data, and free actions leave a
//! single isotropy class carrying all the mass. The distortion
//! coefficients of Sturm (2006) are compared against a direct evaluation
//! of their defining sine and hyperbolic sine quotients.

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::Rng;

use quow::distortion::{sigma_with_dimension, tau, DistortionParams};
use quow::equivariant::{g_average_measure, lift_measure, push_measure};
use quow::exact::ExactSum;
use quow::foliation::check_submetry;
use quow::gen;
use quow::group::{orbit_census, Action};
use quow::perm::Perm;
use quow::quotient::Quotient;
use quow::space::Space;

/// A random space symmetrized under one generator family. Sizes are even
/// so the half turn is always defined; family 0 is a full rotation,
/// 1 the half turn, 2 a pair of disjoint involutions, 3 the trivial group.
fn instance(seed: u64, family: u8, half: usize, dyadic: bool) -> (Space, Action) {
    let mut rng = gen::rng(seed);
    let n = 2 * half;
    let base = if dyadic {
        gen::dyadic_space(&mut rng, n)
    } else {
        gen::euclidean_space(&mut rng, n)
    };
    let generators: Vec<Perm> = match family % 4 {
        0 => vec![gen::rotation(n)],
        1 => vec![gen::half_turn(n)],
        2 => gen::disjoint_involutions(&mut rng, n, 2),
        _ => Vec::new(),
    };
    gen::invariant_space(&base, generators)
}

proptest! {
    #[test]
    fn quotient_distances_satisfy_the_metric_axioms(
        seed in any::<u64>(),
        family in 0u8..4,
        half in 2usize..=5,
    ) {
        let (space, action) = instance(seed, family, half, false);
        let q = Quotient::new(&space, &action);
        let qs = q.space();
        let rebuilt = Space::new(
            qs.labels().to_vec(),
            qs.distance_rows().to_vec(),
            qs.masses().to_vec(),
        );
        prop_assert!(rebuilt.is_ok(), "quotient metric failed validation: {rebuilt:?}");
    }

    #[test]
    fn the_projection_is_one_lipschitz(
        seed in any::<u64>(),
        family in 0u8..4,
        half in 2usize..=5,
    ) {
        let (space, action) = instance(seed, family, half, false);
        let q = Quotient::new(&space, &action);
        for x in 0..space.len() {
            for y in 0..space.len() {
                let up = space.dist(x, y);
                let down = q.space().dist(q.project(x), q.project(y));
                prop_assert!(down <= up, "expansion at ({x}, {y}): {down} > {up}");
            }
        }
    }

    #[test]
    fn quotients_preserve_total_mass_exactly(
        seed in any::<u64>(),
        family in 0u8..4,
        half in 2usize..=5,
    ) {
        let (space, action) = instance(seed, family, half, true);
        let q = Quotient::new(&space, &action);
        let mut diff = ExactSum::new();
        for &m in space.masses() {
            diff.add(m);
        }
        for &m in q.space().masses() {
            diff.add(-m);
        }
        prop_assert!(diff.is_zero(), "mass defect {}", diff.value());
    }

    #[test]
    fn free_actions_have_a_full_principal_stratum(
        seed in any::<u64>(),
        family in 0u8..2,
        half in 2usize..=5,
    ) {
        // Rotations and the half turn act freely on an even point count.
        let (space, action) = instance(seed, family, half, false);
        let census = orbit_census(&space, &action);
        prop_assert!(census.isotropy_order.iter().all(|&o| o == 1));
        prop_assert_eq!(census.classes.len(), 1);
        let principal = &census.classes[census.principal];
        prop_assert_eq!(principal.order, 1);
        prop_assert_eq!(principal.mass_fraction, 1.0);
    }

    #[test]
    fn the_projection_is_a_submetry(
        seed in any::<u64>(),
        family in 0u8..4,
        half in 2usize..=5,
    ) {
        let (space, action) = instance(seed, family, half, false);
        let q = Quotient::new(&space, &action);
        let map: Vec<usize> = (0..space.len()).map(|x| q.project(x)).collect();
        let report = check_submetry(&space, q.space(), &map).unwrap();
        prop_assert!(report.pass, "ball image defect: {:?}", report.witness);
    }

    #[test]
    fn group_averaging_fixes_the_pushforward(
        seed in any::<u64>(),
        family in 1u8..4,
        half in 2usize..=5,
    ) {
        // Families of two-power order keep the average on the binary grid,
        // so both identities hold bit for bit.
        let (space, action) = instance(seed, family, half, true);
        let q = Quotient::new(&space, &action);
        let mu = gen::dyadic_probability(&mut gen::rng(seed ^ 0x9e37_79b9), space.len(), 8);
        let avg = g_average_measure(&action, &mu).unwrap();

        let down = push_measure(&q, &mu).unwrap();
        let down_avg = push_measure(&q, &avg).unwrap();
        prop_assert_eq!(down_avg.weights(), down.weights());

        let lifted = lift_measure(&q, &down).unwrap();
        prop_assert_eq!(lifted.weights(), avg.weights());
    }
}

/// Direct evaluation of the sigma coefficient from its defining quotient,
/// with the zero-curvature, infinite-dimension, and supercritical
/// conventions spelled out inline.
fn sigma_direct(k: f64, n: f64, t: f64, theta: f64) -> f64 {
    if k * theta * theta == 0.0 || n.is_infinite() {
        return t;
    }
    if k > 0.0 {
        let w = theta * (k / n).sqrt();
        if w >= PI {
            return f64::INFINITY;
        }
        return (t * w).sin() / w.sin();
    }
    let w = theta * (-k / n).sqrt();
    (t * w).sinh() / w.sinh()
}

fn tau_direct(k: f64, n: f64, t: f64, theta: f64) -> f64 {
    if n.is_infinite() {
        return t;
    }
    let s = if n == 1.0 {
        // Dimension zero: infinite for positive excess, else the limit t.
        if k * theta * theta > 0.0 {
            f64::INFINITY
        } else {
            t
        }
    } else {
        sigma_direct(k, n - 1.0, t, theta)
    };
    if s.is_infinite() {
        return if t == 0.0 { 0.0 } else { f64::INFINITY };
    }
    if n == 1.0 {
        return t;
    }
    t.powf(1.0 / n) * s.powf((n - 1.0) / n)
}

fn close(name: &str, got: f64, want: f64) {
    if got.is_infinite() || want.is_infinite() {
        assert_eq!(got, want, "{name}: {got} vs {want}");
        return;
    }
    let rel = (got - want).abs() / want.abs().max(1.0);
    assert!(rel <= 1e-12, "{name}: {got} vs {want} (rel {rel:.3e})");
}

#[test]
fn distortion_coefficients_match_their_defining_quotients() {
    let mut rng = gen::rng(0x0d15_7047);
    let dims = [1.0, 1.5, 2.0, 3.0, 5.0, 9.0];
    let mut checked = 0usize;
    while checked < 10_000 {
        let k: f64 = rng.gen_range(-4.0..4.0);
        let n = dims[rng.gen_range(0..dims.len())];
        let t: f64 = rng.gen_range(0.0..=1.0);
        let theta: f64 = rng.gen_range(0.01..3.0);

        // Stay away from the branch boundaries of both sigma factors; on
        // the boundary the two evaluations may legitimately disagree about
        // which side they are on.
        let excess = k * theta * theta;
        if excess.abs() < 1e-8 {
            continue;
        }
        let near = |dim: f64| dim > 0.0 && (excess - dim * PI * PI).abs() < 1e-6 * dim * PI * PI;
        if k > 0.0 && (near(n) || near(n - 1.0)) {
            continue;
        }
        checked += 1;

        close("sigma", sigma_with_dimension(k, n, t, theta), sigma_direct(k, n, t, theta));
        let par = DistortionParams::new(k, n, t, theta).unwrap();
        close("tau", tau(&par), tau_direct(k, n, t, theta));

        if checked % 17 == 0 {
            let par = DistortionParams::new(k, f64::INFINITY, t, theta).unwrap();
            assert_eq!(tau(&par), t);
            assert_eq!(sigma_with_dimension(k, f64::INFINITY, t, theta), t);
        }
    }
}
