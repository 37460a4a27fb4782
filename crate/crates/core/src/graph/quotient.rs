//! Quotients of weighted graphs by finite symmetry groups.
//!
//! A permutation group preserving the edge weights and the vertex measure
//! induces a graph on its orbit space: the weight between two distinct
//! orbits is the sum of all base weights between their fibers, the orbit
//! measure is the fiber mass, and intra-orbit edges are dropped (they would
//! be self-loops, which never contribute to any operator). Functions on the
//! quotient pull back to invariant functions on the base, and under that
//! lift the Laplacian, the carré du champ, its iterate, the `ℓ^p` and
//! Sobolev norms, and the Dirichlet energy all commute with projection.
//! Those identities hold exactly in the reals; [`verify_lift_commutation`]
//! reports the floating-point deviations, which vanish outright on dyadic
//! data.

use crate::exact::ExactSum;
use crate::group::Action;
use crate::perm::Perm;

use super::curvature::cd_curvature;
use super::{GraphError, WeightedGraph};

/// A base graph together with a weight-preserving action and the induced
/// graph on the orbit space.
#[derive(Debug, Clone)]
pub struct GraphQuotient {
    base: WeightedGraph,
    action: Action,
    quotient: WeightedGraph,
}

impl GraphQuotient {
    pub fn base(&self) -> &WeightedGraph {
        &self.base
    }

    pub fn action(&self) -> &Action {
        &self.action
    }

    pub fn quotient(&self) -> &WeightedGraph {
        &self.quotient
    }

    /// Number of orbits, the vertex count of the quotient graph.
    pub fn len(&self) -> usize {
        self.quotient.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotient.is_empty()
    }

    /// Orbit of a base vertex.
    pub fn project(&self, vertex: usize) -> usize {
        self.action.orbit_index(vertex)
    }

    /// Base vertices lying over a quotient vertex.
    pub fn fiber(&self, class: usize) -> &[usize] {
        &self.action.orbits()[class]
    }

    /// Pull a quotient function back to the invariant function on the base.
    pub fn lift(&self, fstar: &[f64]) -> Vec<f64> {
        assert_eq!(fstar.len(), self.len(), "function length must match the orbit count");
        (0..self.base.len()).map(|v| fstar[self.project(v)]).collect()
    }
}

/// Close the generators into a group, check that each one preserves the
/// weights and the measure bit for bit, and build the quotient graph.
/// Preservation is closed under composition, so generator checks cover the
/// whole group.
pub fn quotient_graph(
    base: &WeightedGraph,
    generators: Vec<Perm>,
) -> Result<GraphQuotient, GraphError> {
    let n = base.len();
    let action = Action::close(n, generators, None)?;
    for (gi, g) in action.generators().iter().enumerate() {
        for i in 0..n {
            if base.mass(i) != base.mass(g.apply(i)) {
                return Err(GraphError::ActionNotMeasurePreserving { generator: gi, vertex: i });
            }
            for j in 0..n {
                if base.omega(i, j) != base.omega(g.apply(i), g.apply(j)) {
                    return Err(GraphError::ActionNotWeightPreserving { generator: gi, i, j });
                }
            }
        }
    }

    let q = action.orbits().len();
    let mut omega = vec![vec![0.0; q]; q];
    for u in 0..q {
        for v in u + 1..q {
            let mut acc = ExactSum::new();
            for &a in &action.orbits()[u] {
                for &b in &action.orbits()[v] {
                    acc.add(base.omega(a, b));
                }
            }
            let w = acc.value();
            omega[u][v] = w;
            omega[v][u] = w;
        }
    }
    let labels: Vec<String> =
        action.orbits().iter().map(|orbit| base.label(orbit[0]).to_string()).collect();
    let measure: Vec<f64> = action
        .orbits()
        .iter()
        .map(|orbit| {
            let mut acc = ExactSum::new();
            for &v in orbit {
                acc.add(base.mass(v));
            }
            acc.value()
        })
        .collect();
    let quotient = WeightedGraph::new(labels, omega, measure)?;
    Ok(GraphQuotient { base: base.clone(), action, quotient })
}

/// Deviations between quotient operators applied downstairs and base
/// operators applied to the lifted functions. Every field is a maximum
/// absolute difference; `max_deviation` is the overall worst case.
#[derive(Debug, Clone, Copy)]
pub struct CommutationReport {
    pub laplacian: f64,
    pub gamma: f64,
    pub gamma2: f64,
    pub lp_norm: f64,
    pub sobolev_norm: f64,
    pub dirichlet: f64,
    pub max_deviation: f64,
}

/// Compare `Δ`, `Γ`, `Γ₂`, the `ℓ^p` and Sobolev norms, and the Dirichlet
/// energy on the quotient against their base counterparts on the lifted
/// functions. The operator comparisons are pointwise over base vertices and
/// their orbits; the norm comparisons are global.
pub fn verify_lift_commutation(
    gq: &GraphQuotient,
    fstar: &[f64],
    gstar: &[f64],
    p: f64,
) -> Result<CommutationReport, GraphError> {
    let f = gq.lift(fstar);
    let g = gq.lift(gstar);
    let base = gq.base();
    let quot = gq.quotient();

    let pointwise_max = |down: &[f64], up: &[f64]| -> f64 {
        (0..base.len())
            .map(|v| (up[v] - down[gq.project(v)]).abs())
            .fold(0.0, f64::max)
    };

    let laplacian = pointwise_max(&quot.laplacian(fstar), &base.laplacian(&f));
    let gamma = pointwise_max(&quot.gamma(fstar, gstar), &base.gamma(&f, &g));
    let gamma2 = pointwise_max(&quot.gamma2(fstar, gstar), &base.gamma2(&f, &g));

    let down_norms = quot.sobolev_norms(fstar, p)?;
    let up_norms = base.sobolev_norms(&f, p)?;
    let lp_norm = (up_norms.lp - down_norms.lp).abs();
    let sobolev_norm = (up_norms.total - down_norms.total).abs();

    let energy = |graph: &WeightedGraph, h: &[f64]| -> f64 {
        let carre = graph.gamma(h, h);
        let mut acc = ExactSum::new();
        for v in 0..graph.len() {
            acc.add_prod(carre[v], graph.mass(v));
        }
        acc.value()
    };
    let dirichlet = (energy(base, &f) - energy(quot, fstar)).abs();

    let max_deviation = [laplacian, gamma, gamma2, lp_norm, sobolev_norm, dirichlet]
        .into_iter()
        .fold(0.0, f64::max);
    Ok(CommutationReport {
        laplacian,
        gamma,
        gamma2,
        lp_norm,
        sobolev_norm,
        dirichlet,
        max_deviation,
    })
}

/// Comparison of the global curvature bounds before and after quotienting.
#[derive(Debug, Clone, Copy)]
pub struct CdQuotientReport {
    pub k_base: f64,
    pub k_quotient: f64,
    /// `k_quotient - k_base`; zero when both bounds are infinite.
    pub slack: f64,
    pub pass: bool,
}

/// Tolerance for the curvature comparison under quotients.
pub const CD_QUOTIENT_TOL: f64 = 1e-7;

/// Check that the quotient satisfies CD(K, N) whenever the base does:
/// the worst-vertex curvature may only go up, within [`CD_QUOTIENT_TOL`].
pub fn verify_cd_quotient(gq: &GraphQuotient, n_param: f64) -> Result<CdQuotientReport, GraphError> {
    let worst = |graph: &WeightedGraph| -> Result<f64, GraphError> {
        let mut k = f64::INFINITY;
        for x in 0..graph.len() {
            k = k.min(cd_curvature(graph, x, n_param)?);
        }
        Ok(k)
    };
    let k_base = worst(gq.base())?;
    let k_quotient = worst(gq.quotient())?;
    let slack = if k_quotient == k_base { 0.0 } else { k_quotient - k_base };
    let pass = k_quotient >= k_base - CD_QUOTIENT_TOL;
    Ok(CdQuotientReport { k_base, k_quotient, slack, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    #[test]
    fn trivial_group_reproduces_the_base_graph() {
        let mut r = gen::rng(41);
        let base = gen::dyadic_graph(&mut r, 5);
        let gq = quotient_graph(&base, Vec::new()).unwrap();
        assert_eq!(gq.len(), 5);
        assert_eq!(gq.quotient(), &base);
        for v in 0..5 {
            assert_eq!(gq.project(v), v);
            assert_eq!(gq.fiber(v), &[v]);
        }
        let kq = cd_curvature(gq.quotient(), 0, f64::INFINITY).unwrap();
        let kb = cd_curvature(&base, 0, f64::INFINITY).unwrap();
        assert_eq!(kq, kb);
    }

    #[test]
    fn four_cycle_mod_half_turn_collapses_to_a_doubled_edge() {
        let base = WeightedGraph::from_edges(
            4,
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)],
            Some(vec![1.0; 4]),
        )
        .unwrap();
        let gq = quotient_graph(&base, vec![gen::half_turn(4)]).unwrap();
        assert_eq!(gq.len(), 2);
        assert_eq!(gq.quotient().omega(0, 1), 4.0);
        assert_eq!(gq.quotient().mass(0), 2.0);
        assert_eq!(gq.quotient().mass(1), 2.0);

        let fstar = vec![0.0, 1.0];
        let lap = gq.quotient().laplacian(&fstar);
        assert_eq!(lap, vec![2.0, -2.0]);
        let report = verify_lift_commutation(&gq, &fstar, &[1.0, 0.5], 2.0).unwrap();
        assert_eq!(report.max_deviation, 0.0);
    }

    #[test]
    fn fully_collapsed_edge_graph_has_no_edges_left() {
        let base = WeightedGraph::with_default_labels(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![1.0, 1.0],
        )
        .unwrap();
        let swap = Perm::new(vec![1, 0], 2).unwrap();
        let gq = quotient_graph(&base, vec![swap]).unwrap();
        assert_eq!(gq.len(), 1);
        assert_eq!(gq.quotient().mass(0), 2.0);
        assert!(gq.quotient().neighbors(0).is_empty());

        let report = verify_cd_quotient(&gq, f64::INFINITY).unwrap();
        assert_eq!(report.k_base, 2.0);
        assert_eq!(report.k_quotient, f64::INFINITY);
        assert!(report.pass);
    }

    #[test]
    fn cube_mod_coordinate_swaps_commutes_exactly() {
        let base = gen::cube_graph(3);
        let generators = vec![gen::coordinate_swap(3, 0, 1), gen::coordinate_swap(3, 1, 2)];
        let gq = quotient_graph(&base, generators).unwrap();
        // Orbits are the Hamming levels of the cube.
        assert_eq!(gq.len(), 4);
        let masses: Vec<f64> = (0..4).map(|c| gq.quotient().mass(c)).collect();
        assert_eq!(masses, vec![1.0, 3.0, 3.0, 1.0]);
        assert_eq!(gq.quotient().omega(0, 1), 3.0);
        assert_eq!(gq.quotient().omega(1, 2), 6.0);
        assert_eq!(gq.quotient().omega(2, 3), 3.0);
        assert_eq!(gq.quotient().omega(0, 2), 0.0);

        let mut r = gen::rng(42);
        for _ in 0..10 {
            let fstar = gen::dyadic_function(&mut r, 4);
            let gstar = gen::dyadic_function(&mut r, 4);
            for p in [1.0, 2.0, 3.0] {
                let report = verify_lift_commutation(&gq, &fstar, &gstar, p).unwrap();
                assert_eq!(report.max_deviation, 0.0, "lift identities drifted at p = {p}");
            }
        }
    }

    #[test]
    fn non_preserving_generators_are_rejected() {
        let base = gen::cube_graph(3);
        // Transposing vertices 000 and 011 tears the edge to 100.
        let g = Perm::new(vec![3, 1, 2, 0, 4, 5, 6, 7], 8).unwrap();
        assert!(matches!(
            quotient_graph(&base, vec![g]),
            Err(GraphError::ActionNotWeightPreserving { .. })
        ));

        let uneven = WeightedGraph::with_default_labels(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![1.0, 2.0],
        )
        .unwrap();
        let swap = Perm::new(vec![1, 0], 2).unwrap();
        assert!(matches!(
            quotient_graph(&uneven, vec![swap]),
            Err(GraphError::ActionNotMeasurePreserving { .. })
        ));
    }

    #[test]
    fn cube_curvature_survives_the_quotient() {
        let base = gen::cube_graph(3);
        let generators = vec![gen::coordinate_swap(3, 0, 1), gen::coordinate_swap(3, 1, 2)];
        let gq = quotient_graph(&base, generators).unwrap();
        let report = verify_cd_quotient(&gq, f64::INFINITY).unwrap();
        assert!((report.k_base - 2.0).abs() <= 1e-9);
        assert!(report.pass, "quotient curvature {} fell below {}", report.k_quotient, report.k_base);
    }

    #[test]
    fn random_invariant_graphs_commute_and_preserve_curvature() {
        let mut r = gen::rng(43);
        for trial in 0..6 {
            let n = 6;
            let (base, action) = gen::invariant_dyadic_graph(&mut r, n, vec![gen::half_turn(n)]);
            let gq = quotient_graph(&base, action.generators().to_vec()).unwrap();
            let q = gq.len();
            let fstar = gen::dyadic_function(&mut r, q);
            let gstar = gen::dyadic_function(&mut r, q);
            let report = verify_lift_commutation(&gq, &fstar, &gstar, 2.0).unwrap();
            assert_eq!(report.max_deviation, 0.0, "trial {trial}");
            let cd = verify_cd_quotient(&gq, f64::INFINITY).unwrap();
            assert!(cd.pass, "trial {trial}: {} vs {}", cd.k_quotient, cd.k_base);
        }
    }
}
