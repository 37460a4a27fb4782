//! Verification sweeps over randomized corpora.
//!
//! Every acceptance-grade property lives here exactly once, with its
//! tolerance pinned as a constant, so the batch front end and the test
//! suite apply identical thresholds. Two kinds of entry point coexist:
//! per-instance checks that examine a caller-supplied space, graph, or
//! chain, and seeded sweeps that generate their own corpus and aggregate
//! each property into its worst observed case.
//!
//! Where a check has an independent route to the same number (a quadrature
//! for the logarithmic mean, a closed form for the edge-graph curvature, a
//! restarted local search for the eigenvalue bound), the oracle is computed
//! here side by side with the production code path and never shared with it.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::distortion::{entropy, renyi_functional, DistortionError};
use crate::equivariant::{lift_coupling, lift_measure, verify_cd_rhs_equality, EquivariantError};
use crate::flow::solver::{w_distance, SolverOptions};
use crate::flow::symmetry::{g_average, quotient_chain_mm, verify_w_isometry};
use crate::flow::{action as flow_action, entropy_mm, theta, FlowError, ReversibleChain};
use crate::foliation::{
    check_metric_foliation, check_mm_foliation, check_submetry, FoliationError, LeafPartition,
};
use crate::gen;
use crate::graph::curvature::{cd_curvature, sampled_curvature, SAMPLING_RESTARTS};
use crate::graph::quotient::{
    quotient_graph, verify_cd_quotient, verify_lift_commutation, GraphQuotient, CD_QUOTIENT_TOL,
};
use crate::graph::{divergence_defect, product_rule_defect, GraphError, WeightedGraph};
use crate::group::{Action, ActionError};
use crate::ollivier::{
    min_coarse_ricci, quotient_chain, verify_ollivier_preservation, MarkovChain, OllivierError,
    PRESERVATION_TOL,
};
use crate::perm::Perm;
use crate::quotient::Quotient;
use crate::report::Check;
use crate::space::Space;
use crate::transport::{cost_matrix, cp_transform, wasserstein, Measure, TransportError, TransportSolution};

/// Bound on `|W_p of the lifted measures - W_p on the quotient|`.
pub const LIFT_ISOMETRY_TOL: f64 = 1e-8;
/// Bound on `|cost of the lifted coupling - optimal base cost|`.
pub const COUPLING_COST_TOL: f64 = 1e-9;
/// Bound on the two-sided curvature-dimension comparison integral.
pub const CD_RHS_TOL: f64 = 1e-9;
/// Bound on pointwise deviations of lifted graph operators.
pub const OPERATOR_LIFT_TOL: f64 = 1e-12;
/// Bound for the eigenvalue route against closed forms.
pub const CLOSED_FORM_TOL: f64 = 1e-9;
/// Bound for the eigenvalue route against the restarted sampling oracle.
pub const SAMPLING_AGREEMENT_TOL: f64 = 1e-4;
/// Bound for the logarithmic mean against its defining quadrature.
pub const LOG_MEAN_QUADRATURE_TOL: f64 = 1e-10;
/// Slack allowed in midpoint convexity and averaging comparisons.
pub const CONVEXITY_TOL: f64 = 1e-10;
/// Slack allowed when a refined time grid should not increase the value.
pub const REFINEMENT_SLACK: f64 = 1e-6;
/// Bound for the discrete transport distance against the two-state quadrature.
pub const TWO_STATE_ORACLE_TOL: f64 = 1e-4;
/// Relative bound for the flow-metric quotient isometry.
pub const FLOW_ISOMETRY_TOL: f64 = 1e-3;
/// Bound for conditional-measure transport against leaf distances.
pub const MM_FOLIATION_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Equivariant(#[from] EquivariantError),
    #[error(transparent)]
    Distortion(#[from] DistortionError),
    #[error(transparent)]
    Ollivier(#[from] OllivierError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Foliation(#[from] FoliationError),
    #[error(transparent)]
    Group(#[from] ActionError),
}

/// Collapses repeated checks of one property into the single worst case,
/// keeping the original tolerance. An empty collection passes vacuously.
fn aggregate(name: &str, tolerance: f64, checks: &[Check]) -> Check {
    let mut worst: Option<&Check> = None;
    for check in checks {
        let beats = match worst {
            None => true,
            Some(w) => check.diff.is_nan() || check.diff > w.diff,
        };
        if beats {
            worst = Some(check);
        }
    }
    match worst {
        Some(w) => Check { name: name.to_string(), ..w.clone() },
        None => Check::compare(name, 0.0, 0.0, tolerance),
    }
}

/// A base space carrying an isometric measure-preserving action, drawn
/// from a round-robin of group families: cyclic, dihedral, a half turn,
/// commuting involutions, odd order, and the trivial group. Orders stay
/// at or below 24 on at most 12 points.
fn space_instance(rng: &mut ChaCha8Rng, index: usize, sizes: &[usize]) -> (Space, Action) {
    let n = sizes[rng.gen_range(0..sizes.len())];
    match index % 6 {
        0 => gen::invariant_space(&gen::dyadic_space(rng, n), vec![gen::rotation(n)]),
        1 => gen::invariant_space(
            &gen::dyadic_space(rng, n),
            vec![gen::rotation(n), gen::reflection(n)],
        ),
        2 => gen::invariant_space(&gen::euclidean_space(rng, n), vec![gen::half_turn(n)]),
        3 => {
            let gens = gen::disjoint_involutions(rng, n, 2);
            gen::invariant_space(&gen::dyadic_space(rng, n), gens)
        }
        4 => {
            let gens = gen::odd_order_generators(rng, n, true);
            gen::invariant_space(&gen::dyadic_space(rng, n), gens)
        }
        _ => gen::invariant_space(&gen::dyadic_space(rng, n), Vec::new()),
    }
}

/// Instances whose orbits all have power-of-two size, so fiber mass sums
/// and uniform fiber splits are exact and lifted densities reproduce
/// quotient densities bit for bit.
fn dyadic_fiber_instance(rng: &mut ChaCha8Rng, index: usize) -> (Space, Action) {
    match index % 4 {
        0 => {
            let n = [4, 6, 8, 10][rng.gen_range(0..4)];
            gen::invariant_space(&gen::dyadic_space(rng, n), vec![gen::half_turn(n)])
        }
        1 => {
            let n = [6, 8, 10, 12][rng.gen_range(0..4)];
            let gens = gen::disjoint_involutions(rng, n, 2);
            gen::invariant_space(&gen::dyadic_space(rng, n), gens)
        }
        2 => {
            let n = [4, 8][rng.gen_range(0..2)];
            gen::invariant_space(&gen::dyadic_space(rng, n), vec![gen::rotation(n)])
        }
        _ => {
            let n = rng.gen_range(3..7);
            gen::invariant_space(&gen::dyadic_space(rng, n), Vec::new())
        }
    }
}

/// Transport checks on one quotient: the lift is a `W_p` isometry, the
/// lifted optimal coupling attains the base optimum on distance-realizing
/// pairs, and cost-concave transforms commute with lifting bit for bit.
pub fn lift_checks(
    q: &Quotient,
    p: f64,
    measure_draws: usize,
    transform_draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Check>, SuiteError> {
    let k = q.space().len();
    let n = q.base().len();
    let base_cost = cost_matrix(q.base(), p);
    let mut checks = Vec::new();

    for _ in 0..measure_draws {
        let mu0 = gen::dyadic_probability(rng, k, 6);
        let mu1 = gen::dyadic_probability(rng, k, 6);
        let down = wasserstein(q.space(), &mu0, &mu1, p)?;
        let hat0 = lift_measure(q, &mu0)?;
        let hat1 = lift_measure(q, &mu1)?;
        let up = wasserstein(q.base(), &hat0, &hat1, p)?;
        checks.push(Check::compare("lift_isometry", up.value, down.value, LIFT_ISOMETRY_TOL));

        let lifted = lift_coupling(q, &down.coupling, None)?;
        checks.push(Check::compare(
            "lifted_coupling_cost",
            lifted.cost_against(&base_cost),
            up.cost,
            COUPLING_COST_TOL,
        ));
        let in_od = lifted
            .support()
            .into_iter()
            .all(|(x, y)| q.pair_realizes_quotient_distance(x, y));
        checks.push(Check::flag("lifted_coupling_support", in_od));
    }

    for _ in 0..transform_draws {
        let psi: Vec<f64> = (0..k).map(|_| gen::dyadic_in(rng, -2.0, 2.0, 0.125)).collect();
        let psi_hat: Vec<f64> = (0..n).map(|x| psi[q.project(x)]).collect();
        let up = cp_transform(q.base(), p, &psi_hat)?;
        let down = cp_transform(q.space(), p, &psi)?;
        let max_dev = (0..n)
            .map(|x| (up[x] - down[q.project(x)]).abs())
            .fold(0.0, f64::max);
        checks.push(Check::compare("transform_lift_commutation", max_dev, 0.0, 0.0));
    }
    Ok(checks)
}

/// Randomized corpus behind [`lift_checks`]: `instances` quotients with
/// exponents cycling through 1, 2, 3, aggregated per property.
pub fn lift_sweep(seed: u64, instances: usize) -> Result<Vec<Check>, SuiteError> {
    let mut rng = gen::rng(seed);
    let sizes = [4, 6, 8, 10, 12];
    let mut raw = Vec::new();
    for index in 0..instances {
        let (space, act) = space_instance(&mut rng, index, &sizes);
        let q = Quotient::new(&space, &act);
        let p = [1.0, 2.0, 3.0][index % 3];
        raw.extend(lift_checks(&q, p, 1, 2, &mut rng)?);
    }
    Ok(group_by_property(&raw, &[
        ("lift_isometry", LIFT_ISOMETRY_TOL),
        ("lifted_coupling_cost", COUPLING_COST_TOL),
        ("lifted_coupling_support", 0.0),
        ("transform_lift_commutation", 0.0),
    ]))
}

fn group_by_property(raw: &[Check], properties: &[(&str, f64)]) -> Vec<Check> {
    properties
        .iter()
        .map(|&(name, tol)| {
            let matching: Vec<Check> =
                raw.iter().filter(|c| c.name == name).cloned().collect();
            aggregate(name, tol, &matching)
        })
        .collect()
}

/// Curvature-dimension comparison checks on one quotient: `draws`
/// randomized parameter triples with both curvature signs, plus exact
/// entropy and Renyi lift identities.
/// Strictly positive dyadic class density: mix a random probability with
/// the uniform one so every class stays charged, then divide by the
/// masses.
fn positive_class_density(masses: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let k = masses.len();
    let mu = gen::dyadic_probability(rng, k, 6);
    let kf = k as f64;
    mu.weights()
        .iter()
        .zip(masses)
        .map(|(&w, &m)| (0.5 * w + 0.5 / kf) / m)
        .collect()
}

/// Draw a density pair on the quotient and solve the 2-Wasserstein problem
/// between the induced measures.
fn cd_draw(
    q: &Quotient,
    masses: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, Vec<f64>, TransportSolution), SuiteError> {
    let rho0 = positive_class_density(masses, rng);
    let rho1 = positive_class_density(masses, rng);
    let to_measure = |rho: &[f64]| -> Result<Measure, SuiteError> {
        Ok(Measure::new(rho.iter().zip(masses).map(|(&r, &m)| r * m).collect())?)
    };
    let sol = wasserstein(q.space(), &to_measure(&rho0)?, &to_measure(&rho1)?, 2.0)?;
    Ok((rho0, rho1, sol))
}

pub fn cd_space_checks(
    q: &Quotient,
    draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Check>, SuiteError> {
    let masses = q.space().masses().to_vec();
    let diam = q.base().diameter().max(1e-9);
    let mut checks = Vec::new();

    for draw in 0..draws {
        let (rho0, rho1, sol) = cd_draw(q, &masses, rng)?;

        let nprime = if draw % 2 == 0 {
            // Negative curvature admits every dimension parameter.
            [1.0, 1.5, 2.0, 4.0, f64::INFINITY][rng.gen_range(0..5)]
        } else {
            [1.5, 2.0, 3.0, 8.0, f64::INFINITY][rng.gen_range(0..5)]
        };
        let t = gen::dyadic_in(rng, 0.0625, 0.9375, 0.0625);
        let kappa = if draw % 2 == 0 {
            -gen::dyadic_in(rng, 0.25, 2.0, 0.0625)
        } else {
            // Positive curvature is capped so the distortion coefficients
            // stay finite out to the base diameter.
            let cap = if nprime.is_finite() {
                0.8 * std::f64::consts::PI.powi(2) * (nprime - 1.0) / (diam * diam)
            } else {
                2.0
            };
            gen::dyadic_in(rng, 0.25, 2.0, 0.0625).min(cap)
        };
        let report = verify_cd_rhs_equality(q, &rho0, &rho1, &sol.coupling, kappa, nprime, t, CD_RHS_TOL)?;
        checks.push(Check::compare("cd_rhs_equality", report.lhs, report.rhs, CD_RHS_TOL));
    }

    let mu = gen::dyadic_probability(rng, q.space().len(), 6);
    let hat = lift_measure(q, &mu)?;
    checks.push(Check::compare(
        "entropy_lift_exact",
        entropy(&hat, q.base())?,
        entropy(&mu, q.space())?,
        0.0,
    ));
    for nprime in [2.0, 4.0, f64::INFINITY] {
        checks.push(Check::compare(
            "renyi_lift_exact",
            renyi_functional(&hat, q.base(), nprime)?,
            renyi_functional(&mu, q.space(), nprime)?,
            0.0,
        ));
    }
    Ok(checks)
}

/// CD comparison at caller-pinned curvature, dimension, and time, over
/// freshly drawn positive densities. The caller owns the branch choice:
/// parameters that drive the distortion coefficients to infinity are the
/// caller's to avoid.
pub fn cd_pinned_checks(
    q: &Quotient,
    kappa: f64,
    nprime: f64,
    t: f64,
    draws: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Check>, SuiteError> {
    let masses = q.space().masses().to_vec();
    let mut checks = Vec::new();
    for _ in 0..draws {
        let (rho0, rho1, sol) = cd_draw(q, &masses, rng)?;
        let report =
            verify_cd_rhs_equality(q, &rho0, &rho1, &sol.coupling, kappa, nprime, t, CD_RHS_TOL)?;
        checks.push(Check::compare("cd_rhs_equality", report.lhs, report.rhs, CD_RHS_TOL));
    }
    Ok(checks)
}

/// Randomized corpus behind [`cd_space_checks`], restricted to quotients
/// with power-of-two fibers so the lift identities are exact.
pub fn cd_sweep(seed: u64, draws: usize) -> Result<Vec<Check>, SuiteError> {
    let mut rng = gen::rng(seed);
    let per_instance = 4usize;
    let instances = draws.div_ceil(per_instance);
    let mut raw = Vec::new();
    for index in 0..instances {
        let (space, act) = dyadic_fiber_instance(&mut rng, index);
        let q = Quotient::new(&space, &act);
        raw.extend(cd_space_checks(&q, per_instance, &mut rng)?);
    }
    Ok(group_by_property(&raw, &[
        ("cd_rhs_equality", CD_RHS_TOL),
        ("entropy_lift_exact", 0.0),
        ("renyi_lift_exact", 0.0),
    ]))
}

/// Coarse-curvature checks on one invariant chain: the quotient chain
/// never loses the global lower bound.
pub fn ollivier_checks(chain: &MarkovChain, q: &Quotient) -> Result<Vec<Check>, SuiteError> {
    let report = verify_ollivier_preservation(chain, q)?;
    Ok(vec![Check::lower_bound(
        "ollivier_preservation",
        report.k_quotient,
        report.k_base,
        PRESERVATION_TOL,
    )])
}

/// Randomized invariant chains plus the frozen identity and mixing chains,
/// whose curvatures are zero and one exactly, before and after quotienting.
pub fn ollivier_sweep(seed: u64, instances: usize) -> Result<Vec<Check>, SuiteError> {
    let mut rng = gen::rng(seed);
    let sizes = [4, 6, 8];
    let mut raw = Vec::new();
    for index in 0..instances {
        let (space, act) = space_instance(&mut rng, index, &sizes);
        let q = Quotient::new(&space, &act);
        let kernel = gen::invariant_kernel(&mut rng, &act);
        let chain = MarkovChain::new(space.clone(), kernel)?;
        raw.extend(ollivier_checks(&chain, &q)?);
    }
    let mut checks = group_by_property(&raw, &[("ollivier_preservation", PRESERVATION_TOL)]);

    let (space, act) = gen::invariant_space(&gen::dyadic_space(&mut rng, 6), vec![gen::half_turn(6)]);
    let q = Quotient::new(&space, &act);
    let identity = MarkovChain::identity(space.clone());
    checks.push(Check::compare(
        "identity_chain_curvature",
        min_coarse_ricci(&identity)?,
        0.0,
        0.0,
    ));
    checks.push(Check::compare(
        "identity_quotient_curvature",
        min_coarse_ricci(&quotient_chain(&identity, &q)?)?,
        0.0,
        0.0,
    ));
    let uniform = Measure::new(vec![1.0 / 6.0; 6])?;
    let mixing = MarkovChain::mixing(space, uniform)?;
    checks.push(Check::compare(
        "mixing_chain_curvature",
        min_coarse_ricci(&mixing)?,
        1.0,
        0.0,
    ));
    checks.push(Check::compare(
        "mixing_quotient_curvature",
        min_coarse_ricci(&quotient_chain(&mixing, &q)?)?,
        1.0,
        0.0,
    ));
    Ok(checks)
}

/// Pointwise operator identities and dimension monotonicity on one graph.
/// The product-rule and divergence defects are exact zeros for arbitrary
/// finite data, so their tolerance is zero.
pub fn graph_identity_checks(
    graph: &WeightedGraph,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Check>, SuiteError> {
    let n = graph.len();
    let mut checks = Vec::new();
    for _ in 0..trials {
        let f = gen::random_function(rng, n);
        let g = gen::random_function(rng, n);
        checks.push(Check::compare(
            "product_rule_defect",
            product_rule_defect(graph, &f, &g),
            0.0,
            0.0,
        ));
        checks.push(Check::compare("divergence_defect", divergence_defect(graph, &f), 0.0, 0.0));
    }
    if trials > 0 {
        let ladder = [1.0, 1.5, 2.0, 4.0, 16.0, f64::INFINITY];
        for x in 0..n {
            let mut previous = f64::NEG_INFINITY;
            for nn in ladder {
                let value = cd_curvature(graph, x, nn)?;
                checks.push(Check::lower_bound(
                    "curvature_monotone_in_dimension",
                    value,
                    previous,
                    CLOSED_FORM_TOL,
                ));
                previous = value;
            }
        }
    }
    Ok(checks)
}

/// Eigenvalue-route curvature against the restarted sampling oracle at
/// every vertex where the bound is finite.
pub fn curvature_agreement_checks(
    graph: &WeightedGraph,
    restarts: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Check>, SuiteError> {
    let mut checks = Vec::new();
    for x in 0..graph.len() {
        let eigen = cd_curvature(graph, x, f64::INFINITY)?;
        if !eigen.is_finite() {
            continue;
        }
        let sampled = sampled_curvature(graph, x, f64::INFINITY, restarts, rng)?;
        checks.push(Check::compare(
            "sampling_oracle_agreement",
            eigen,
            sampled,
            SAMPLING_AGREEMENT_TOL,
        ));
    }
    Ok(checks)
}

/// Lift commutation and curvature preservation on one graph quotient.
/// Operators commute pointwise within 1e-12; the norm and energy
/// comparisons are exact on dyadic data.
pub fn graph_quotient_checks(
    gq: &GraphQuotient,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Check>, SuiteError> {
    let classes = gq.len();
    let mut checks = Vec::new();
    for trial in 0..trials {
        let fstar = gen::dyadic_function(rng, classes);
        let gstar = gen::dyadic_function(rng, classes);
        let p = [1.0, 2.0, 3.0][trial % 3];
        let report = verify_lift_commutation(gq, &fstar, &gstar, p)?;
        let operators = report.laplacian.max(report.gamma).max(report.gamma2);
        checks.push(Check::compare("operator_lift_commutation", operators, 0.0, OPERATOR_LIFT_TOL));
        checks.push(Check::compare("lp_norm_isometry", report.lp_norm, 0.0, 0.0));
        checks.push(Check::compare("sobolev_norm_isometry", report.sobolev_norm, 0.0, 0.0));
        checks.push(Check::compare("dirichlet_energy_isometry", report.dirichlet, 0.0, 0.0));
    }
    if trials > 0 {
        for nn in [4.0, f64::INFINITY] {
            let report = verify_cd_quotient(gq, nn)?;
            checks.push(Check::lower_bound(
                "graph_cd_preservation",
                report.k_quotient,
                report.k_base,
                CD_QUOTIENT_TOL,
            ));
        }
    }
    Ok(checks)
}

/// Named small graphs plus seeded random ones, all on at most ten
/// vertices; the corpus for the sampling-oracle comparison.
fn suite_graphs(rng: &mut ChaCha8Rng) -> Vec<WeightedGraph> {
    let cycle = |n: usize| -> WeightedGraph {
        let edges: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        WeightedGraph::from_edges(n, &edges, None).expect("cycle graph is valid")
    };
    let star = WeightedGraph::from_edges(5, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (0, 4, 1.0)], None)
        .expect("star graph is valid");
    let path = WeightedGraph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)], None)
        .expect("path graph is valid");
    let mut graphs = vec![
        gen::cube_graph(1),
        cycle(3),
        cycle(4),
        cycle(5),
        cycle(6),
        gen::cube_graph(3),
        star,
        path,
    ];
    graphs.push(gen::random_graph(rng, 7));
    graphs.push(gen::random_graph(rng, 9));
    graphs.push(gen::random_graph(rng, 10));
    graphs.push(gen::dyadic_graph(rng, 10));
    graphs
}

/// Randomized graph-calculus sweep: exact operator identities, the edge
/// graph against its closed-form curvature, and the sampling-oracle
/// comparison over the whole graph corpus.
pub fn graph_identity_sweep(seed: u64, trials: usize) -> Result<Vec<Check>, SuiteError> {
    let mut rng = gen::rng(seed);
    let mut raw = Vec::new();
    let mut remaining = trials;
    while remaining > 0 {
        let batch = remaining.min(25);
        let n = rng.gen_range(2..9);
        let graph = gen::random_graph(&mut rng, n);
        for _ in 0..batch {
            let f = gen::random_function(&mut rng, n);
            let g = gen::random_function(&mut rng, n);
            raw.push(Check::compare(
                "product_rule_defect",
                product_rule_defect(&graph, &f, &g),
                0.0,
                0.0,
            ));
            raw.push(Check::compare(
                "divergence_defect",
                divergence_defect(&graph, &f),
                0.0,
                0.0,
            ));
        }
        remaining -= batch;
    }

    // Closed-form oracle for the two-point graph: the curvature bound is
    // 2(N - 1)/N, read off the one-dimensional quadratic-form ratio.
    let edge = gen::cube_graph(1);
    for nn in [1.0, 1.5, 2.0, 4.0, 16.0, f64::INFINITY] {
        let expected = if nn.is_finite() { 2.0 * (nn - 1.0) / nn } else { 2.0 };
        for x in 0..2 {
            raw.push(Check::compare(
                "edge_curvature_closed_form",
                cd_curvature(&edge, x, nn)?,
                expected,
                CLOSED_FORM_TOL,
            ));
        }
    }

    Ok(group_by_property(&raw, &[
        ("product_rule_defect", 0.0),
        ("divergence_defect", 0.0),
        ("edge_curvature_closed_form", CLOSED_FORM_TOL),
    ]))
}

/// Sampling-oracle agreement over the full graph corpus.
pub fn curvature_oracle_sweep(seed: u64) -> Result<Vec<Check>, SuiteError> {
    let mut rng = gen::rng(seed);
    let graphs = suite_graphs(&mut rng);
    let mut raw = Vec::new();
    for graph in &graphs {
        raw.extend(curvature_agreement_checks(graph, SAMPLING_RESTARTS, &mut rng)?);
    }
    let mut out = group_by_property(&raw, &[("sampling_oracle_agreement", SAMPLING_AGREEMENT_TOL)]);
    out.push(Check::flag("sampling_oracle_coverage", raw.len() >= graphs.len()));
    Ok(out)
}

/// Randomized graph quotients, always including the three-cube modulo its
/// coordinate swaps, aggregated per property.
pub fn graph_quotient_sweep(seed: u64, instances: usize) -> Result<Vec<Check>, SuiteError> {
    let mut rng = gen::rng(seed);
    let mut raw = Vec::new();
    for index in 0..instances {
        let n = [4, 6, 8][rng.gen_range(0..3)];
        let generators = match index % 3 {
            0 => vec![gen::half_turn(n)],
            1 => gen::disjoint_involutions(&mut rng, n, 2),
            _ => vec![gen::rotation(n)],
        };
        let (graph, _) = gen::invariant_dyadic_graph(&mut rng, n, generators.clone());
        let gq = quotient_graph(&graph, generators)?;
        raw.extend(graph_quotient_checks(&gq, 3, &mut rng)?);
    }
    let cube = gen::cube_graph(3);
    let swaps = vec![gen::coordinate_swap(3, 0, 1), gen::coordinate_swap(3, 1, 2)];
    let gq = quotient_graph(&cube, swaps)?;
    raw.extend(graph_quotient_checks(&gq, 6, &mut rng)?);
    Ok(group_by_property(&raw, &[
        ("operator_lift_commutation", OPERATOR_LIFT_TOL),
        ("lp_norm_isometry", 0.0),
        ("sobolev_norm_isometry", 0.0),
        ("dirichlet_energy_isometry", 0.0),
        ("graph_cd_preservation", CD_QUOTIENT_TOL),
    ]))
}

fn simpson(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += weight * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// The logarithmic mean by its defining integral, `int of s^(1-r) t^r dr`
/// over the unit interval.
fn log_mean_quadrature(s: f64, t: f64) -> f64 {
    simpson(0.0, 1.0, 2000, |r| s.powf(1.0 - r) * t.powf(r))
}

/// Transport distance between the tilted two-state densities `1 +- eps`
/// by reduction to a one-dimensional integral over the tilt.
fn two_state_quadrature(eps: f64) -> f64 {
    let chain = two_state_chain();
    let c = chain.kernel(0, 1) * chain.pi(0);
    simpson(-eps, eps, 4000, |r| {
        let mean = if r == 0.0 {
            1.0
        } else {
            let (s, t) = (1.0 + r, 1.0 - r);
            (s - t) / (s.ln() - t.ln())
        };
        (4.0 * c * mean).powf(-0.5)
    })
}

fn two_state_chain() -> ReversibleChain {
    ReversibleChain::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], Some(vec![0.5, 0.5]))
        .expect("the symmetric two-state walk is reversible")
}

fn cycle_chain(n: usize) -> ReversibleChain {
    let mut kernel = vec![vec![0.0; n]; n];
    for x in 0..n {
        kernel[x][(x + 1) % n] += 0.5;
        kernel[x][(x + n - 1) % n] += 0.5;
    }
    let pi = vec![1.0 / n as f64; n];
    ReversibleChain::new(kernel, Some(pi)).expect("the cycle walk is reversible")
}

/// Positive density with unit mass against the stationary distribution.
fn positive_density(chain: &ReversibleChain, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = chain.len();
    let mu = gen::dyadic_probability(rng, n, 6);
    let nf = n as f64;
    (0..n)
        .map(|x| (0.5 * mu.weight(x) + 0.5 / nf) / chain.pi(x))
        .collect()
}

fn random_momenta(chain: &ReversibleChain, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = chain.len();
    let mut v = vec![vec![0.0; n]; n];
    for (a, b) in chain.edges() {
        let u = gen::dyadic_in(rng, -2.0, 2.0, 0.0625);
        v[a][b] = u;
        v[b][a] = -u;
    }
    v
}

/// Flow checks on one reversible chain: kinetic-action convexity, group
/// averaging monotonicity when generators are supplied, entropy lift
/// exactness, grid-refinement monotonicity, and the quotient isometry.
pub fn flow_chain_checks(
    chain: &ReversibleChain,
    generators: &[Perm],
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Check>, SuiteError> {
    let mut checks = Vec::new();
    for _ in 0..trials {
        let rho_a = positive_density(chain, rng);
        let rho_b = positive_density(chain, rng);
        let va = random_momenta(chain, rng);
        let vb = random_momenta(chain, rng);
        let mid_rho: Vec<f64> =
            rho_a.iter().zip(&rho_b).map(|(&x, &y)| 0.5 * (x + y)).collect();
        let mid_v: Vec<Vec<f64>> = va
            .iter()
            .zip(&vb)
            .map(|(ra, rb)| ra.iter().zip(rb).map(|(&x, &y)| 0.5 * (x + y)).collect())
            .collect();
        let average = 0.5 * flow_action(chain, &rho_a, &va)? + 0.5 * flow_action(chain, &rho_b, &vb)?;
        let midpoint = flow_action(chain, &mid_rho, &mid_v)?;
        checks.push(Check::lower_bound("action_midpoint_convexity", average, midpoint, CONVEXITY_TOL));
    }

    if !generators.is_empty() {
        let action_group = Action::close(chain.len(), generators.to_vec(), None)?;
        for _ in 0..trials {
            let rho = positive_density(chain, rng);
            let v = random_momenta(chain, rng);
            let before = flow_action(chain, &rho, &v)?;
            let (rho_avg, v_avg) = g_average(chain, &action_group, &rho, &v)?;
            let after = flow_action(chain, &rho_avg, &v_avg)?;
            checks.push(Check::lower_bound("group_average_monotonicity", before, after, CONVEXITY_TOL));
        }

        let gq = quotient_chain_mm(chain, generators.to_vec())?;
        for _ in 0..trials.min(8) {
            let rho_star = positive_density(gq.quotient(), rng);
            let lifted = gq.lift(&rho_star);
            checks.push(Check::compare(
                "flow_entropy_lift",
                entropy_mm(gq.base(), &lifted)?,
                entropy_mm(gq.quotient(), &rho_star)?,
                0.0,
            ));
        }
    }

    if trials > 0 {
        let rho0 = positive_density(chain, rng);
        let rho1 = positive_density(chain, rng);
        let mut previous = f64::INFINITY;
        for grid in [8usize, 16, 32] {
            let options = SolverOptions { grid, ..SolverOptions::default() };
            let sol = w_distance(chain, &rho0, &rho1, &options)?;
            checks.push(Check::lower_bound(
                "grid_refinement_monotone",
                previous,
                sol.distance,
                REFINEMENT_SLACK,
            ));
            previous = sol.distance;
        }
    }
    Ok(checks)
}

/// The fixed flow corpus: the logarithmic-mean quadrature, convexity and
/// averaging draws on small cycle walks, exact entropy lifts, refinement
/// monotonicity, the two-state quadrature oracle, and the four-cycle
/// quotient isometry.
pub fn flow_sweep(seed: u64, trials: usize) -> Result<Vec<Check>, SuiteError> {
    let mut rng = gen::rng(seed);
    let mut raw = Vec::new();

    // Logarithmic mean against its defining integral, including
    // near-diagonal pairs that exercise the series branch.
    let points = trials.max(1);
    let mut worst = Check::compare("log_mean_quadrature", 0.0, 0.0, LOG_MEAN_QUADRATURE_TOL);
    for i in 0..points {
        let (s, t) = if i % 5 == 4 {
            let s = gen::dyadic_in(&mut rng, 0.25, 2.0, 0.0078125);
            let delta = [0.0, 1e-6, -1e-6, 1e-4][i % 4];
            (s, s * (1.0 + delta))
        } else {
            (
                gen::dyadic_in(&mut rng, 0.05, 4.0, 0.0078125),
                gen::dyadic_in(&mut rng, 0.05, 4.0, 0.0078125),
            )
        };
        let check = Check::compare(
            "log_mean_quadrature",
            theta(s, t)?,
            log_mean_quadrature(s, t),
            LOG_MEAN_QUADRATURE_TOL,
        );
        if check.diff > worst.diff || check.diff.is_nan() {
            worst = check;
        }
    }
    raw.push(worst);

    let four = cycle_chain(4);
    let convexity_trials = trials.max(1);
    raw.extend(flow_chain_checks(&four, &[gen::half_turn(4)], convexity_trials, &mut rng)?);
    let six = cycle_chain(6);
    raw.extend(flow_chain_checks(&six, &[gen::half_turn(6)], convexity_trials.min(50), &mut rng)?);

    // Two-state oracle at the default grid.
    let eps = 0.05;
    let two = two_state_chain();
    let rho0 = vec![1.0 + eps, 1.0 - eps];
    let rho1 = vec![1.0 - eps, 1.0 + eps];
    let sol = w_distance(&two, &rho0, &rho1, &SolverOptions::default())?;
    raw.push(Check::compare(
        "two_state_oracle_agreement",
        sol.distance,
        two_state_quadrature(eps),
        TWO_STATE_ORACLE_TOL,
    ));

    // Four-cycle quotient isometry with perturbed endpoint densities.
    let report = verify_w_isometry(
        &four,
        vec![gen::half_turn(4)],
        &[1.2, 0.8],
        &[0.8, 1.2],
        &SolverOptions::default(),
    )?;
    raw.push(Check::compare(
        "flow_quotient_isometry",
        report.relative_difference,
        0.0,
        FLOW_ISOMETRY_TOL.max(report.tolerance),
    ));
    raw.push(Check::flag("flow_quotient_entropy_exact", report.entropy_exact));

    Ok(group_by_property(&raw, &[
        ("log_mean_quadrature", LOG_MEAN_QUADRATURE_TOL),
        ("action_midpoint_convexity", CONVEXITY_TOL),
        ("group_average_monotonicity", CONVEXITY_TOL),
        ("flow_entropy_lift", 0.0),
        ("grid_refinement_monotone", REFINEMENT_SLACK),
        ("two_state_oracle_agreement", TWO_STATE_ORACLE_TOL),
        ("flow_quotient_isometry", FLOW_ISOMETRY_TOL),
        ("flow_quotient_entropy_exact", 0.0),
    ]))
}

/// Submetry and foliation checks for one quotient projection with its
/// orbit partition and canonical conditionals.
pub fn foliation_checks(q: &Quotient, p: f64) -> Result<Vec<Check>, SuiteError> {
    let part = LeafPartition::from_quotient(q);
    let map: Vec<usize> = (0..q.base().len()).map(|x| q.project(x)).collect();
    let submetry = check_submetry(q.base(), q.space(), &map)?;
    let foliation = check_metric_foliation(&part);
    let mm = check_mm_foliation(&part, p, MM_FOLIATION_TOL)?;
    Ok(vec![
        Check::flag("submetry", submetry.pass),
        Check::flag("metric_foliation", foliation.pass),
        Check::compare("mm_foliation", mm.max_deviation, 0.0, MM_FOLIATION_TOL),
    ])
}

/// Foliation sweep over generated actions, plus a deliberately perturbed
/// conditional family that the measured check must reject: concentrating
/// a leaf's conditional on one representative makes the other leaf see
/// the far copy, so conditional transport exceeds the leaf distance.
pub fn foliation_sweep(seed: u64, instances: usize) -> Result<Vec<Check>, SuiteError> {
    let mut rng = gen::rng(seed);
    let sizes = [4, 6, 8, 10, 12];
    let mut raw = Vec::new();
    for index in 0..instances {
        let (space, act) = space_instance(&mut rng, index, &sizes);
        let q = Quotient::new(&space, &act);
        let p = [1.0, 2.0, 3.0][index % 3];
        raw.extend(foliation_checks(&q, p)?);
    }
    let mut checks = group_by_property(&raw, &[
        ("submetry", 0.0),
        ("metric_foliation", 0.0),
        ("mm_foliation", MM_FOLIATION_TOL),
    ]);

    let space = gen::cycle_space(6);
    let act = Action::build(&space, vec![gen::half_turn(6)], None)?;
    let q = Quotient::new(&space, &act);
    let mut conditionals = LeafPartition::from_quotient(&q)
        .conditionals()
        .expect("orbit partitions carry conditionals")
        .to_vec();
    let leaf = 0;
    let members = q.fiber(leaf).to_vec();
    for &x in &members {
        conditionals[leaf][x] = if x == members[0] { 1.0 } else { 0.0 };
    }
    let part = LeafPartition::new(q.base(), q.orbits().to_vec(), Some(conditionals))?;
    let mm = check_mm_foliation(&part, 1.0, MM_FOLIATION_TOL)?;
    checks.push(Check::flag("mm_foliation_rejects_perturbation", !mm.pass));
    Ok(checks)
}
