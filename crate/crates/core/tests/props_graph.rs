//! Randomized invariants of the weighted graph calculus: positivity and
//! symmetry of the carre du champ of Bakry and Emery (1985), exact
//! bilinearity and shift invariance on binary-grid data, monotonicity of
//! the curvature bound in the dimension parameter, equivariance under
//! relabeling, the one-sided error of the Rayleigh sampling oracle, and
//! bitwise commutation of quotient lifts over two-power fibers.

use proptest::prelude::*;
use rand::seq::SliceRandom;

use quow::gen;
use quow::graph::curvature::{cd_curvature, sampled_curvature};
use quow::graph::quotient::{quotient_graph, verify_lift_commutation};
use quow::graph::WeightedGraph;
use quow::perm::Perm;

const DIMENSIONS: [f64; 6] = [1.0, 1.5, 2.0, 4.0, 16.0, f64::INFINITY];

/// Power-of-two scalars; multiplying binary-grid data by these stays on
/// the grid, so linearity identities can be asserted bit for bit.
const SCALES: [f64; 8] = [-2.0, -1.0, -0.5, 0.25, 0.5, 1.0, 2.0, 4.0];

fn permuted(graph: &WeightedGraph, sigma: &[usize]) -> WeightedGraph {
    let n = graph.len();
    let mut omega = vec![vec![0.0; n]; n];
    let mut mass = vec![0.0; n];
    for i in 0..n {
        mass[sigma[i]] = graph.mass(i);
        for j in 0..n {
            omega[sigma[i]][sigma[j]] = graph.omega(i, j);
        }
    }
    WeightedGraph::with_default_labels(omega, mass).expect("permuted graph stays valid")
}

proptest! {
    #[test]
    fn the_square_field_is_nonnegative_and_symmetric(
        seed in any::<u64>(),
        n in 2usize..=8,
    ) {
        let mut rng = gen::rng(seed);
        let graph = gen::random_graph(&mut rng, n);
        let f = gen::random_function(&mut rng, n);
        let g = gen::random_function(&mut rng, n);
        for (x, &v) in graph.gamma(&f, &f).iter().enumerate() {
            prop_assert!(v >= 0.0, "gamma(f,f) negative at {x}: {v}");
        }
        prop_assert_eq!(graph.gamma(&f, &g), graph.gamma(&g, &f));
        prop_assert_eq!(graph.gamma2(&f, &g), graph.gamma2(&g, &f));
    }

    #[test]
    fn the_forms_are_bilinear_on_binary_grids(
        seed in any::<u64>(),
        n in 3usize..=7,
        six in 0usize..8,
    ) {
        let mut rng = gen::rng(seed);
        let graph = gen::dyadic_graph(&mut rng, n);
        let f1 = gen::dyadic_function(&mut rng, n);
        let f2 = gen::dyadic_function(&mut rng, n);
        let g = gen::dyadic_function(&mut rng, n);
        let a = SCALES[six];
        let combo: Vec<f64> = f1.iter().zip(&f2).map(|(&u, &v)| a * u + v).collect();

        let lhs = graph.gamma(&combo, &g);
        let (g1, g2) = (graph.gamma(&f1, &g), graph.gamma(&f2, &g));
        for x in 0..n {
            prop_assert_eq!(lhs[x], a * g1[x] + g2[x], "gamma not linear at {}", x);
        }

        let lhs2 = graph.gamma2(&combo, &g);
        let (h1, h2) = (graph.gamma2(&f1, &g), graph.gamma2(&f2, &g));
        for x in 0..n {
            prop_assert_eq!(lhs2[x], a * h1[x] + h2[x], "gamma2 not linear at {}", x);
        }
    }

    #[test]
    fn constant_shifts_leave_the_operators_alone(
        seed in any::<u64>(),
        n in 3usize..=7,
    ) {
        let mut rng = gen::rng(seed);
        let graph = gen::dyadic_graph(&mut rng, n);
        let f = gen::dyadic_function(&mut rng, n);
        let g = gen::dyadic_function(&mut rng, n);
        let c = gen::dyadic_in(&mut rng, -2.0, 2.0, 0.125);
        let shifted: Vec<f64> = f.iter().map(|&v| v + c).collect();

        prop_assert_eq!(graph.laplacian(&shifted), graph.laplacian(&f));
        prop_assert_eq!(graph.gamma(&shifted, &g), graph.gamma(&f, &g));
        prop_assert_eq!(graph.gamma2(&shifted, &g), graph.gamma2(&f, &g));
    }

    #[test]
    fn curvature_grows_with_the_dimension_parameter(
        seed in any::<u64>(),
        n in 2usize..=7,
        vix in 0usize..7,
    ) {
        let mut rng = gen::rng(seed);
        let graph = gen::random_graph(&mut rng, n);
        let x = vix % n;
        let mut previous = f64::NEG_INFINITY;
        for dim in DIMENSIONS {
            let k = cd_curvature(&graph, x, dim).unwrap();
            prop_assert!(
                k >= previous - 1e-9,
                "curvature dropped from {previous} to {k} at dimension {dim}"
            );
            previous = k;
        }
    }

    #[test]
    fn curvature_is_equivariant_under_relabeling(
        seed in any::<u64>(),
        n in 3usize..=7,
        vix in 0usize..7,
    ) {
        let mut rng = gen::rng(seed);
        let graph = gen::random_graph(&mut rng, n);
        let mut sigma: Vec<usize> = (0..n).collect();
        sigma.shuffle(&mut rng);
        let relabeled = permuted(&graph, &sigma);
        let x = vix % n;
        for dim in [2.0, f64::INFINITY] {
            let here = cd_curvature(&graph, x, dim).unwrap();
            let there = cd_curvature(&relabeled, sigma[x], dim).unwrap();
            prop_assert!(
                (here - there).abs() <= 1e-8 * here.abs().max(1.0),
                "vertex {x}, dimension {dim}: {here} vs {there}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampling_never_undercuts_the_spectral_bound(
        seed in any::<u64>(),
        n in 2usize..=7,
        vix in 0usize..7,
        dix in 0usize..3,
    ) {
        let mut rng = gen::rng(seed);
        let graph = gen::random_graph(&mut rng, n);
        let x = vix % n;
        let dim = [2.0, 4.0, f64::INFINITY][dix];
        let eigen = cd_curvature(&graph, x, dim).unwrap();
        let sampled = sampled_curvature(&graph, x, dim, 30, &mut rng).unwrap();
        prop_assert!(
            sampled >= eigen - 1e-6,
            "sampled {sampled} fell below the spectral bound {eigen}"
        );
    }

    #[test]
    fn quotient_lifts_commute_bitwise_over_two_power_fibers(
        seed in any::<u64>(),
        half in 2usize..=4,
        family in 0u8..2,
        pix in 0u8..3,
    ) {
        let mut rng = gen::rng(seed);
        let n = 2 * half;
        let generators: Vec<Perm> = match family {
            0 => vec![gen::half_turn(n)],
            _ => gen::disjoint_involutions(&mut rng, n, 2),
        };
        let (base, _) = gen::invariant_dyadic_graph(&mut rng, n, generators.clone());
        let gq = quotient_graph(&base, generators).unwrap();
        let q = gq.quotient().len();
        let fstar = gen::dyadic_function(&mut rng, q);
        let gstar = gen::dyadic_function(&mut rng, q);
        let p = [1.0, 2.0, 3.0][pix as usize];
        let report = verify_lift_commutation(&gq, &fstar, &gstar, p).unwrap();
        prop_assert_eq!(report.max_deviation, 0.0, "commutation defect {:?}", report);
    }
}
