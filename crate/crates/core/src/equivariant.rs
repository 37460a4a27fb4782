//! Lifting machinery between a space and its quotient.
//!
//! A finite group of measure-preserving isometries induces a projection
//! `p` onto orbit classes. Going the other way, every object on the
//! quotient has a canonical invariant lift: measures spread each class
//! uniformly over its fiber, couplings spread each class pair uniformly
//! over the group orbit of a distance-realizing representative pair, and
//! potentials are constant on fibers. The central fact this module makes
//! checkable is that these lifts change nothing metrically: transport
//! distances, transforms, entropy functionals, and the curvature-dimension
//! comparison weights all agree between the two levels.
//!
//! Distance-realizing pairs are those `(x, y)` with `d(x, y)` equal to the
//! quotient distance of their classes. Membership is a bit-level
//! comparison because the quotient distance is itself a minimum of base
//! distances; no tolerance is involved anywhere in the lift constructions.

use thiserror::Error;

use crate::distortion::{tau, DistortionError, DistortionParams};
use crate::exact::{exact_sum, ExactSum};
use crate::group::Action;
use crate::quotient::Quotient;
use crate::transport::{
    cost_matrix, wasserstein, Coupling, Measure, PotentialPair, TransportError,
};

#[derive(Debug, Error)]
pub enum EquivariantError {
    #[error(transparent)]
    Transport(#[from] TransportError),

    #[error(transparent)]
    Distortion(#[from] DistortionError),

    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("section pair ({x},{y}) for classes ({class0},{class1}) does not realize the quotient distance")]
    SectionOutsideOd { class0: usize, class1: usize, x: usize, y: usize },

    #[error("input potentials are not admissible on the quotient: {source}")]
    InfeasibleInput { source: TransportError },

    #[error("coupling cost {cost} exceeds the optimal {optimal}; not an optimal coupling")]
    CouplingNotOptimal { cost: f64, optimal: f64 },
}

/// Two independently computed values of one quantity.
#[derive(Debug, Clone, Copy)]
pub struct EqualityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub difference: f64,
    pub pass: bool,
}

impl EqualityReport {
    pub fn new(lhs: f64, rhs: f64, tol: f64) -> Self {
        let difference = if lhs == rhs { 0.0 } else { lhs - rhs };
        Self { lhs, rhs, difference, pass: difference.abs() <= tol }
    }
}

/// Uniform probability on the orbit of `x`, as a measure on the base.
pub fn orbit_measure(action: &Action, x: usize) -> Measure {
    let orbit = action.orbit_of(x);
    let w = 1.0 / orbit.len() as f64;
    let mut weights = vec![0.0; action.degree()];
    for &y in orbit {
        weights[y] = w;
    }
    Measure::new(weights).expect("uniform orbit weights are normalized")
}

/// Lift of a quotient measure: each class weight spread uniformly over its
/// fiber. The result is invariant under the whole group by construction.
pub fn lift_measure(q: &Quotient, mu: &Measure) -> Result<Measure, EquivariantError> {
    let k = q.space().len();
    if mu.len() != k {
        return Err(EquivariantError::DimensionMismatch { expected: k, got: mu.len() });
    }
    let mut weights = vec![0.0; q.base().len()];
    for class in 0..k {
        let fiber = q.fiber(class);
        let w = mu.weight(class) / fiber.len() as f64;
        for &x in fiber {
            weights[x] = w;
        }
    }
    Ok(Measure::new(weights)?)
}

/// Pushforward of a base measure along the projection: fiber sums.
pub fn push_measure(q: &Quotient, mu: &Measure) -> Result<Measure, EquivariantError> {
    let n = q.base().len();
    if mu.len() != n {
        return Err(EquivariantError::DimensionMismatch { expected: n, got: mu.len() });
    }
    let weights = (0..q.space().len())
        .map(|class| {
            let vals: Vec<f64> = q.fiber(class).iter().map(|&x| mu.weight(x)).collect();
            exact_sum(&vals)
        })
        .collect();
    Ok(Measure::new(weights)?)
}

/// Group average of a base measure, `(1/|G|) sum over g of g_# mu`,
/// accumulated literally over the group elements. Always invariant; its
/// pushforward agrees with that of `mu`.
pub fn g_average_measure(action: &Action, mu: &Measure) -> Result<Measure, EquivariantError> {
    let n = action.degree();
    if mu.len() != n {
        return Err(EquivariantError::DimensionMismatch { expected: n, got: mu.len() });
    }
    let scale = 1.0 / action.order() as f64;
    let weights = (0..n)
        .map(|x| {
            // g_# mu at x reads mu at g^{-1} x; summing over all g is the
            // same as summing mu(g x) over all g.
            let vals: Vec<f64> = action.elements().iter().map(|g| mu.weight(g.apply(x))).collect();
            exact_sum(&vals) * scale
        })
        .collect();
    Ok(Measure::new(weights)?)
}

/// All pairs `(x, y)` of base points whose distance equals the quotient
/// distance of their classes, in row-major order. The diagonal is always
/// included.
pub fn distance_realizing_pairs(q: &Quotient) -> Vec<(usize, usize)> {
    let n = q.base().len();
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if q.pair_realizes_quotient_distance(x, y) {
                out.push((x, y));
            }
        }
    }
    out
}

/// Lexicographically first pair in `fiber(u) x fiber(v)` realizing the
/// quotient distance. Total because the quotient distance is a minimum
/// over exactly this set.
fn lex_first_section(q: &Quotient, u: usize, v: usize) -> (usize, usize) {
    for &x in q.fiber(u) {
        for &y in q.fiber(v) {
            if q.pair_realizes_quotient_distance(x, y) {
                return (x, y);
            }
        }
    }
    unreachable!("quotient distance is always realized by some fiber pair")
}

/// Lift of a quotient coupling. For each class pair carrying mass, the
/// mass is spread uniformly over the group orbit of a section pair that
/// realizes the quotient distance (default: lexicographically first).
///
/// The lifted plan has the lifted marginals, is supported on
/// distance-realizing pairs, and `sum of plan * d^p` is a term-for-term
/// rearrangement of the quotient cost.
pub fn lift_coupling(
    q: &Quotient,
    pi: &Coupling,
    section: Option<&dyn Fn(usize, usize) -> (usize, usize)>,
) -> Result<Coupling, EquivariantError> {
    let k = q.space().len();
    let n = q.base().len();
    if pi.rows().len() != k {
        return Err(EquivariantError::DimensionMismatch { expected: k, got: pi.rows().len() });
    }

    let row_sums: Vec<f64> = (0..k).map(|u| exact_sum(&pi.rows()[u])).collect();
    let col_sums: Vec<f64> = (0..k)
        .map(|v| {
            let col: Vec<f64> = pi.rows().iter().map(|row| row[v]).collect();
            exact_sum(&col)
        })
        .collect();
    let mu0 = lift_measure(q, &Measure::new(row_sums)?)?;
    let mu1 = lift_measure(q, &Measure::new(col_sums)?)?;

    let order = q.action().order();
    let mut plan = vec![vec![0.0; n]; n];
    let mut counts = vec![vec![0u32; n]; n];
    for u in 0..k {
        for v in 0..k {
            let mass = pi.mass(u, v);
            if mass == 0.0 {
                continue;
            }
            let (x, y) = match section {
                Some(f) => {
                    let (x, y) = f(u, v);
                    let in_fibers =
                        x < n && y < n && q.project(x) == u && q.project(y) == v;
                    if !in_fibers || !q.pair_realizes_quotient_distance(x, y) {
                        return Err(EquivariantError::SectionOutsideOd { class0: u, class1: v, x, y });
                    }
                    (x, y)
                }
                None => lex_first_section(q, u, v),
            };
            for g in q.action().elements() {
                counts[g.apply(x)][g.apply(y)] += 1;
            }
            for a in 0..n {
                for b in 0..n {
                    if counts[a][b] > 0 {
                        plan[a][b] += mass * (counts[a][b] as f64 / order as f64);
                        counts[a][b] = 0;
                    }
                }
            }
        }
    }
    Ok(Coupling::new(plan, &mu0, &mu1)?)
}

/// Lift of dual potentials: constant on fibers. Admissibility on the base
/// follows from admissibility on the quotient because base distances
/// dominate quotient distances; both are revalidated here.
pub fn lift_potentials(
    q: &Quotient,
    pair: &PotentialPair,
    p: f64,
) -> Result<PotentialPair, EquivariantError> {
    let k = q.space().len();
    if pair.phi().len() != k {
        return Err(EquivariantError::DimensionMismatch { expected: k, got: pair.phi().len() });
    }
    PotentialPair::new(pair.phi().to_vec(), pair.psi().to_vec(), q.space(), p)
        .map_err(|source| EquivariantError::InfeasibleInput { source })?;
    let n = q.base().len();
    let phi: Vec<f64> = (0..n).map(|x| pair.phi()[q.project(x)]).collect();
    let psi: Vec<f64> = (0..n).map(|y| pair.psi()[q.project(y)]).collect();
    Ok(PotentialPair::new(phi, psi, q.base(), p)?)
}

/// Both sides of the curvature-dimension comparison integral
/// `sum of [tau^(1-t)(d) rho0^(-1/N') + tau^(t)(d) rho1^(-1/N')] d(pi)`,
/// evaluated independently on the quotient (with the quotient distance)
/// and on the base (with the lifted coupling, lifted densities, and base
/// distance). The two are equal because the lifted coupling only charges
/// distance-realizing pairs.
///
/// `pi` must be a 2-optimal coupling of the measures `rho0 d(mass)` and
/// `rho1 d(mass)`; the densities must be positive wherever those measures
/// charge points.
pub fn verify_cd_rhs_equality(
    q: &Quotient,
    rho0: &[f64],
    rho1: &[f64],
    pi: &Coupling,
    k: f64,
    nprime: f64,
    t: f64,
    tol: f64,
) -> Result<EqualityReport, EquivariantError> {
    let m = q.space().len();
    if rho0.len() != m {
        return Err(EquivariantError::DimensionMismatch { expected: m, got: rho0.len() });
    }
    if rho1.len() != m {
        return Err(EquivariantError::DimensionMismatch { expected: m, got: rho1.len() });
    }
    DistortionParams::new(k, nprime, t, 0.0)?;

    let masses = q.space().masses();
    let weigh = |rho: &[f64]| -> Result<Measure, EquivariantError> {
        let w: Vec<f64> = rho.iter().zip(masses).map(|(&r, &mm)| r * mm).collect();
        Ok(Measure::new(w)?)
    };
    let mu0 = weigh(rho0)?;
    let mu1 = weigh(rho1)?;
    // Revalidate pi against the density-induced marginals, then against
    // the optimal transport value at p = 2.
    let pi = Coupling::new(pi.rows().to_vec(), &mu0, &mu1)?;
    let opt = wasserstein(q.space(), &mu0, &mu1, 2.0)?;
    let cost = pi.cost_against(&cost_matrix(q.space(), 2.0));
    if cost > opt.cost + 1e-9 * (1.0 + opt.cost.abs()) {
        return Err(EquivariantError::CouplingNotOptimal { cost, optimal: opt.cost });
    }

    let inv_power = |rho: f64| -> f64 {
        if nprime.is_infinite() {
            1.0
        } else {
            rho.powf(-1.0 / nprime)
        }
    };
    let integrand = |mass: f64, dist: f64, r0: f64, r1: f64, acc: &mut ExactSum| {
        let back = tau(&DistortionParams { k, n: nprime, t: 1.0 - t, theta: dist });
        let fore = tau(&DistortionParams { k, n: nprime, t, theta: dist });
        acc.add_prod(mass, back * inv_power(r0));
        acc.add_prod(mass, fore * inv_power(r1));
    };

    let mut quotient_side = ExactSum::new();
    for u in 0..m {
        for v in 0..m {
            let mass = pi.mass(u, v);
            if mass == 0.0 {
                continue;
            }
            integrand(mass, q.space().dist(u, v), rho0[u], rho1[v], &mut quotient_side);
        }
    }

    let lifted = lift_coupling(q, &pi, None)?;
    let n = q.base().len();
    let mut base_side = ExactSum::new();
    for x in 0..n {
        for y in 0..n {
            let mass = lifted.mass(x, y);
            if mass == 0.0 {
                continue;
            }
            let r0 = rho0[q.project(x)];
            let r1 = rho1[q.project(y)];
            integrand(mass, q.base().dist(x, y), r0, r1, &mut base_side);
        }
    }

    Ok(EqualityReport::new(quotient_side.value(), base_side.value(), tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::space::Space;
    use crate::transport::cp_transform;

    fn four_cycle_half_turn() -> Quotient {
        let space = gen::four_cycle();
        let action = Action::build(&space, vec![gen::half_turn(4)], None).unwrap();
        Quotient::new(&space, &action)
    }

    #[test]
    fn lift_of_the_frozen_two_class_measure() {
        let q = four_cycle_half_turn();
        let mu = Measure::new(vec![0.75, 0.25]).unwrap();
        let hat = lift_measure(&q, &mu).unwrap();
        assert_eq!(hat.weights(), &[0.375, 0.125, 0.375, 0.125]);
        // Round trip is exact.
        let back = push_measure(&q, &hat).unwrap();
        assert_eq!(back.weights(), mu.weights());
    }

    #[test]
    fn dirac_lifts_to_the_uniform_orbit_measure() {
        let q = four_cycle_half_turn();
        let delta = Measure::dirac(2, 0);
        let hat = lift_measure(&q, &delta).unwrap();
        assert_eq!(hat.weights(), orbit_measure(q.action(), 0).weights());
    }

    #[test]
    fn normalized_reference_lifts_to_normalized_reference() {
        // Orbit-constant but uneven masses; total 3 is not a power of two,
        // yet the lift still reproduces mass/total bit for bit because
        // halving commutes with rounding.
        let dist = gen::four_cycle().distance_rows().to_vec();
        let space = Space::with_default_labels(dist, vec![1.0, 0.5, 1.0, 0.5]).unwrap();
        let action = Action::build(&space, vec![gen::half_turn(4)], None).unwrap();
        let q = Quotient::new(&space, &action);
        let total = q.space().total_mass();
        let mu = Measure::new(q.space().masses().iter().map(|&w| w / total).collect()).unwrap();
        let hat = lift_measure(&q, &mu).unwrap();
        let expect: Vec<f64> = space.masses().iter().map(|&w| w / total).collect();
        assert_eq!(hat.weights(), &expect[..]);
    }

    #[test]
    fn distance_realizing_pairs_of_the_half_turn_quotient() {
        let q = four_cycle_half_turn();
        let od = distance_realizing_pairs(&q);
        // Diagonal plus all eight cross-orbit pairs (each at distance 1);
        // antipodal within-orbit pairs are excluded (distance 2 vs 0).
        let mut expect = vec![(0, 0), (1, 1), (2, 2), (3, 3)];
        expect.extend([(0, 1), (0, 3), (1, 0), (1, 2), (2, 1), (2, 3), (3, 0), (3, 2)]);
        expect.sort();
        let mut got = od.clone();
        got.sort();
        assert_eq!(got, expect);
    }

    #[test]
    fn trivial_action_realizes_every_pair() {
        let mut r = gen::rng(21);
        let space = gen::dyadic_space(&mut r, 5);
        let action = Action::trivial(&space);
        let q = Quotient::new(&space, &action);
        assert_eq!(distance_realizing_pairs(&q).len(), 25);
    }

    #[test]
    fn lifted_coupling_matches_cost_and_charges_only_realizing_pairs() {
        let q = four_cycle_half_turn();
        let mu0 = Measure::new(vec![0.75, 0.25]).unwrap();
        let mu1 = Measure::new(vec![0.25, 0.75]).unwrap();
        let sol = wasserstein(q.space(), &mu0, &mu1, 2.0).unwrap();
        let lifted = lift_coupling(&q, &sol.coupling, None).unwrap();
        let base_cost = lifted.cost_against(&cost_matrix(q.base(), 2.0));
        assert_eq!(base_cost, sol.cost);
        for (x, y) in lifted.support() {
            assert!(q.pair_realizes_quotient_distance(x, y));
        }
        // Marginals are the lifted marginals, exactly.
        let hat0 = lift_measure(&q, &mu0).unwrap();
        for (x, row) in lifted.rows().iter().enumerate() {
            assert_eq!(exact_sum(row), hat0.weight(x));
        }
    }

    #[test]
    fn a_section_off_the_realizing_set_is_rejected_and_diracs_expand() {
        let q = four_cycle_half_turn();
        let pi = Coupling::new(
            vec![vec![0.0, 1.0], vec![0.0, 0.0]],
            &Measure::dirac(2, 0),
            &Measure::dirac(2, 1),
        )
        .unwrap();
        // Antipodal pair (1, 3) projects to classes (1, 1), not (0, 1).
        let bad = |_, _| (1usize, 3usize);
        let err = lift_coupling(&q, &pi, Some(&bad)).unwrap_err();
        assert!(matches!(err, EquivariantError::SectionOutsideOd { class0: 0, class1: 1, .. }));

        let lifted = lift_coupling(&q, &pi, None).unwrap();
        // Mass 1/|G| on each translate of the section pair (0, 1).
        assert_eq!(lifted.mass(0, 1), 0.5);
        assert_eq!(lifted.mass(2, 3), 0.5);
    }

    #[test]
    fn lifted_potentials_attain_the_base_transport_value() {
        let q = four_cycle_half_turn();
        let mu0 = Measure::new(vec![0.75, 0.25]).unwrap();
        let mu1 = Measure::new(vec![0.25, 0.75]).unwrap();
        let sol = wasserstein(q.space(), &mu0, &mu1, 2.0).unwrap();
        let lifted = lift_potentials(&q, &sol.potentials, 2.0).unwrap();
        let hat0 = lift_measure(&q, &mu0).unwrap();
        let hat1 = lift_measure(&q, &mu1).unwrap();
        let base = wasserstein(q.base(), &hat0, &hat1, 2.0).unwrap();
        let dual = lifted.dual_objective(&hat0, &hat1);
        assert!((dual - base.cost).abs() <= 1e-9 * (1.0 + base.cost));
    }

    #[test]
    fn transform_of_a_lift_is_the_lift_of_the_transform() {
        let mut r = gen::rng(9);
        let base = gen::dyadic_space(&mut r, 8);
        let (space, action) = gen::invariant_space(&base, gen::disjoint_involutions(&mut r, 8, 2));
        let q = Quotient::new(&space, &action);
        let m = q.space().len();
        let psi: Vec<f64> = (0..m).map(|_| gen::dyadic_in(&mut r, -2.0, 2.0, 0.125)).collect();
        let psi_hat: Vec<f64> = (0..space.len()).map(|x| psi[q.project(x)]).collect();
        let lifted_then_transformed = cp_transform(q.base(), 2.0, &psi_hat).unwrap();
        let transformed = cp_transform(q.space(), 2.0, &psi).unwrap();
        let transformed_then_lifted: Vec<f64> =
            (0..space.len()).map(|x| transformed[q.project(x)]).collect();
        assert_eq!(lifted_then_transformed, transformed_then_lifted);
    }

    #[test]
    fn g_average_equals_lift_of_pushforward() {
        let mut r = gen::rng(33);
        let base = gen::dyadic_space(&mut r, 8);
        let (space, action) = gen::invariant_space(&base, vec![gen::half_turn(8)]);
        let q = Quotient::new(&space, &action);
        let mu = gen::dyadic_probability(&mut r, 8, 6);
        let avg = g_average_measure(&action, &mu).unwrap();
        let via_quotient = lift_measure(&q, &push_measure(&q, &mu).unwrap()).unwrap();
        assert_eq!(avg.weights(), via_quotient.weights());
    }

    fn cd_inputs(q: &Quotient, seed: u64) -> (Vec<f64>, Vec<f64>, Coupling) {
        let mut r = gen::rng(seed);
        let masses = q.space().masses().to_vec();
        let density = |r: &mut rand_chacha::ChaCha8Rng, masses: &[f64]| -> Vec<f64> {
            let mu = gen::dyadic_probability(r, masses.len(), 6);
            // Shift every class weight away from zero so densities stay
            // positive, renormalizing by construction: mix with uniform.
            let k = masses.len() as f64;
            mu.weights()
                .iter()
                .zip(masses)
                .map(|(&w, &mm)| (0.5 * w + 0.5 / k) / mm)
                .collect()
        };
        let rho0 = density(&mut r, &masses);
        let rho1 = density(&mut r, &masses);
        let to_measure = |rho: &[f64]| {
            Measure::new(rho.iter().zip(&masses).map(|(&x, &mm)| x * mm).collect()).unwrap()
        };
        let sol = wasserstein(q.space(), &to_measure(&rho0), &to_measure(&rho1), 2.0).unwrap();
        (rho0, rho1, sol.coupling)
    }

    #[test]
    fn cd_comparison_sides_agree_and_trivial_groups_agree_bit_for_bit() {
        let q = four_cycle_half_turn();
        let (rho0, rho1, pi) = cd_inputs(&q, 41);
        let report = verify_cd_rhs_equality(&q, &rho0, &rho1, &pi, 1.0, 3.0, 0.5, 1e-9).unwrap();
        assert!(report.pass, "difference {}", report.difference);

        let space = gen::four_cycle();
        let trivial = Action::trivial(&space);
        let qt = Quotient::new(&space, &trivial);
        let (rho0, rho1, pi) = cd_inputs(&qt, 42);
        let report = verify_cd_rhs_equality(&qt, &rho0, &rho1, &pi, -0.7, 2.5, 0.25, 0.0).unwrap();
        assert_eq!(report.difference, 0.0);
        assert!(report.pass);
    }

    #[test]
    fn cd_comparison_rejects_a_suboptimal_coupling() {
        let q = four_cycle_half_turn();
        let (rho0, rho1, _) = cd_inputs(&q, 43);
        let masses = q.space().masses();
        let mu0 =
            Measure::new(rho0.iter().zip(masses).map(|(&x, &mm)| x * mm).collect()).unwrap();
        let mu1 =
            Measure::new(rho1.iter().zip(masses).map(|(&x, &mm)| x * mm).collect()).unwrap();
        // The independent product coupling is feasible but not optimal here.
        let product: Vec<Vec<f64>> = (0..2)
            .map(|u| (0..2).map(|v| mu0.weight(u) * mu1.weight(v)).collect())
            .collect();
        let pi = Coupling::new(product, &mu0, &mu1).unwrap();
        let err = verify_cd_rhs_equality(&q, &rho0, &rho1, &pi, 1.0, 3.0, 0.5, 1e-9).unwrap_err();
        assert!(matches!(err, EquivariantError::CouplingNotOptimal { .. }));
    }
}
