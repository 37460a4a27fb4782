//! Exact p-Wasserstein transport on finite spaces.
//!
//! The p-cost between points is `c_p(x,y) = d(x,y)^p`; the transport problem
//! is the finite Kantorovich LP over couplings of two probability measures,
//! solved exactly by a deterministic transportation simplex. Alongside the
//! optimal plan we return Kantorovich potentials `(phi, psi)` feasible for
//! the dual (`phi(x) + psi(y) <= c_p(x,y)`), tight on the support of the
//! plan, so strong duality is checkable by the caller.
//!
//! The c_p-transform `psi^{c_p}(x) = min_y (c_p(x,y) - psi(y))` and its
//! derived notions (c_p-concavity, c_p-superdifferential, c_p-cyclical
//! monotonicity) follow the classical optimal-transport toolbox (Villani,
//! "Optimal Transport: Old and New", ch. 5) restricted to finite spaces,
//! where every infimum is a minimum and extended reals are just `f64`
//! infinities.

mod simplex;

use thiserror::Error;

use crate::exact::{exact_sum, ExactSum};
use crate::space::Space;

/// Normalization tolerance for probability measures.
pub const MEASURE_TOL: f64 = 1e-12;
/// Marginal tolerance for couplings.
pub const COUPLING_TOL: f64 = 1e-10;
/// Admissibility slack for dual potentials.
pub const ADMISSIBILITY_TOL: f64 = 1e-9;
/// Relative duality-gap bound the solver guarantees.
pub const DUALITY_REL_TOL: f64 = 1e-9;
/// Equality slack when testing c_p-concavity and superdifferential.
pub const CP_TOL: f64 = 1e-9;
/// A cycle only counts as a monotonicity violation when it improves the
/// cost by more than this.
pub const CYCLE_STRICTNESS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum TransportError {
    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("weight {value} at index {index} is negative or not finite")]
    BadWeight { index: usize, value: f64 },

    #[error("weights sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("coupling marginal {side} deviates by {deviation} at index {index}")]
    MarginalMismatch { side: &'static str, index: usize, deviation: f64 },

    #[error("negative coupling entry {value} at ({i},{j})")]
    NegativeEntry { i: usize, j: usize, value: f64 },

    #[error("potentials violate phi(x)+psi(y) <= d(x,y)^p at ({i},{j}) by {excess}")]
    NotAdmissible { i: usize, j: usize, excess: f64 },

    #[error("exponent p = {p} must be finite and >= 1")]
    InvalidExponent { p: f64 },

    #[error("simplex did not terminate within {pivots} pivots")]
    SolverFailure { pivots: usize },

    #[error("function is not c_p-concave: double transform differs by {gap} at point {point}")]
    NotCpConcave { point: usize, gap: f64 },

    #[error("cycle enumeration budget exceeded: {pairs} pairs, cycle length {max_cycle} (supported: <= 12 pairs, length 2..=5)")]
    BudgetExceeded { pairs: usize, max_cycle: usize },
}

/// A probability measure on the points of a space, stored as weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    weights: Vec<f64>,
}

impl Measure {
    /// Validate nonnegativity and normalization (exact-sum total within
    /// `MEASURE_TOL` of 1).
    pub fn new(weights: Vec<f64>) -> Result<Self, TransportError> {
        for (index, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(TransportError::BadWeight { index, value: w });
            }
        }
        let sum = exact_sum(&weights);
        if (sum - 1.0).abs() > MEASURE_TOL {
            return Err(TransportError::NotNormalized { sum });
        }
        Ok(Self { weights })
    }

    /// The point mass at `point` in a space of `n` points.
    pub fn dirac(n: usize, point: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[point] = 1.0;
        Self { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Indices carrying strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }
}

/// A coupling of two measures: a nonnegative plan with the prescribed
/// marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    plan: Vec<Vec<f64>>,
}

impl Coupling {
    /// Validate shape, nonnegativity, and both marginals (each row/column
    /// sum within `COUPLING_TOL` of the corresponding weight).
    pub fn new(plan: Vec<Vec<f64>>, mu0: &Measure, mu1: &Measure) -> Result<Self, TransportError> {
        let m = mu0.len();
        let n = mu1.len();
        if plan.len() != m {
            return Err(TransportError::DimensionMismatch { expected: m, got: plan.len() });
        }
        for (i, row) in plan.iter().enumerate() {
            if row.len() != n {
                return Err(TransportError::DimensionMismatch { expected: n, got: row.len() });
            }
            for (j, &x) in row.iter().enumerate() {
                if !(x.is_finite() && x >= 0.0) {
                    return Err(TransportError::NegativeEntry { i, j, value: x });
                }
            }
        }
        for i in 0..m {
            let dev = (exact_sum(&plan[i]) - mu0.weight(i)).abs();
            if dev > COUPLING_TOL {
                return Err(TransportError::MarginalMismatch { side: "row", index: i, deviation: dev });
            }
        }
        for j in 0..n {
            let col: Vec<f64> = plan.iter().map(|row| row[j]).collect();
            let dev = (exact_sum(&col) - mu1.weight(j)).abs();
            if dev > COUPLING_TOL {
                return Err(TransportError::MarginalMismatch { side: "column", index: j, deviation: dev });
            }
        }
        Ok(Self { plan })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.plan
    }

    #[inline]
    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.plan[i][j]
    }

    /// Pairs carrying strictly positive mass, in row-major order.
    pub fn support(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in self.plan.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if x > 0.0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Exactly accumulated transport cost against a cost table.
    pub fn cost_against(&self, cost: &[Vec<f64>]) -> f64 {
        let mut acc = ExactSum::new();
        for (i, row) in self.plan.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if x != 0.0 {
                    acc.add_prod(x, cost[i][j]);
                }
            }
        }
        acc.value()
    }
}

/// Kantorovich dual potentials, admissible for the p-cost.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialPair {
    phi: Vec<f64>,
    psi: Vec<f64>,
}

impl PotentialPair {
    /// Validate finiteness and admissibility `phi(x) + psi(y) <= d(x,y)^p`
    /// up to `ADMISSIBILITY_TOL`.
    pub fn new(phi: Vec<f64>, psi: Vec<f64>, space: &Space, p: f64) -> Result<Self, TransportError> {
        let n = space.len();
        if phi.len() != n {
            return Err(TransportError::DimensionMismatch { expected: n, got: phi.len() });
        }
        if psi.len() != n {
            return Err(TransportError::DimensionMismatch { expected: n, got: psi.len() });
        }
        for i in 0..n {
            for j in 0..n {
                let excess = phi[i] + psi[j] - power_cost(space.dist(i, j), p);
                if excess > ADMISSIBILITY_TOL {
                    return Err(TransportError::NotAdmissible { i, j, excess });
                }
            }
        }
        Ok(Self { phi, psi })
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// Dual objective against a pair of measures, accumulated exactly.
    pub fn dual_objective(&self, mu0: &Measure, mu1: &Measure) -> f64 {
        let mut acc = ExactSum::new();
        for (i, &w) in mu0.weights().iter().enumerate() {
            if w != 0.0 {
                acc.add_prod(w, self.phi[i]);
            }
        }
        for (j, &w) in mu1.weights().iter().enumerate() {
            if w != 0.0 {
                acc.add_prod(w, self.psi[j]);
            }
        }
        acc.value()
    }
}

/// Value, optimal plan, and dual potentials for one transport problem.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    /// The distance W_p, i.e. the p-th root of the optimal cost.
    pub value: f64,
    /// The optimal cost `integral of d^p` itself.
    pub cost: f64,
    pub coupling: Coupling,
    pub potentials: PotentialPair,
    /// |primal - dual| of the returned pair, before the p-th root.
    pub duality_gap: f64,
}

/// `d^p` with integral exponents computed by repeated squaring so the common
/// cases p = 1, 2, 3 round identically wherever they are evaluated.
#[inline]
pub fn power_cost(d: f64, p: f64) -> f64 {
    if p == 1.0 {
        d
    } else if p.fract() == 0.0 && p <= 32.0 {
        d.powi(p as i32)
    } else {
        d.powf(p)
    }
}

/// Dense p-cost table of a space.
pub fn cost_matrix(space: &Space, p: f64) -> Vec<Vec<f64>> {
    let n = space.len();
    (0..n)
        .map(|i| (0..n).map(|j| power_cost(space.dist(i, j), p)).collect())
        .collect()
}

fn check_exponent(p: f64) -> Result<(), TransportError> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(TransportError::InvalidExponent { p });
    }
    Ok(())
}

fn check_length(space: &Space, mu: &Measure) -> Result<(), TransportError> {
    if mu.len() != space.len() {
        return Err(TransportError::DimensionMismatch { expected: space.len(), got: mu.len() });
    }
    Ok(())
}

/// Solve the p-Wasserstein problem between two measures on the same space.
///
/// The LP is solved on the supports only; the returned plan is zero off the
/// supports and the potentials are extended off-support by c_p-transforms,
/// which preserves admissibility without changing the dual objective.
/// Deterministic: identical inputs produce identical plans and potentials.
pub fn wasserstein(
    space: &Space,
    mu0: &Measure,
    mu1: &Measure,
    p: f64,
) -> Result<TransportSolution, TransportError> {
    check_exponent(p)?;
    check_length(space, mu0)?;
    check_length(space, mu1)?;
    let n = space.len();
    let cost = cost_matrix(space, p);

    let supp0 = mu0.support();
    let supp1 = mu1.support();
    let sub_cost: Vec<Vec<f64>> = supp0
        .iter()
        .map(|&i| supp1.iter().map(|&j| cost[i][j]).collect())
        .collect();
    let supply: Vec<f64> = supp0.iter().map(|&i| mu0.weight(i)).collect();
    let demand: Vec<f64> = supp1.iter().map(|&j| mu1.weight(j)).collect();

    let sol = simplex::solve(&sub_cost, &supply, &demand)
        .map_err(|pivots| TransportError::SolverFailure { pivots })?;

    let mut plan = vec![vec![0.0; n]; n];
    for (a, &i) in supp0.iter().enumerate() {
        for (b, &j) in supp1.iter().enumerate() {
            plan[i][j] = sol.plan[a][b];
        }
    }

    // Potentials on the supports come from the simplex tree; off-support
    // values are filled in by transforms so admissibility holds everywhere.
    let mut phi = vec![f64::NEG_INFINITY; n];
    let mut psi = vec![f64::NEG_INFINITY; n];
    for (a, &i) in supp0.iter().enumerate() {
        phi[i] = sol.u[a];
    }
    for (b, &j) in supp1.iter().enumerate() {
        psi[j] = sol.v[b];
    }
    for x in 0..n {
        if phi[x] == f64::NEG_INFINITY {
            phi[x] = supp1
                .iter()
                .map(|&y| cost[x][y] - psi[y])
                .fold(f64::INFINITY, f64::min);
        }
    }
    for y in 0..n {
        if psi[y] == f64::NEG_INFINITY {
            psi[y] = (0..n).map(|x| cost[x][y] - phi[x]).fold(f64::INFINITY, f64::min);
        }
    }

    let coupling = Coupling::new(plan, mu0, mu1)?;
    let potentials = PotentialPair::new(phi, psi, space, p)?;
    let primal = coupling.cost_against(&cost);
    debug_assert_eq!(primal, sol.cost);
    let dual = potentials.dual_objective(mu0, mu1);
    let duality_gap = (primal - dual).abs();
    debug_assert!(duality_gap <= DUALITY_REL_TOL * (1.0 + primal.abs()));

    let value = if p == 1.0 {
        primal
    } else if p == 2.0 {
        primal.sqrt()
    } else {
        primal.powf(1.0 / p)
    };
    Ok(TransportSolution { value, cost: primal, coupling, potentials, duality_gap })
}

/// The c_p-transform `psi^{c_p}(x) = min_y (d(x,y)^p - psi(y))`.
///
/// Extended-real inputs are allowed: entries of `psi` may be plus or minus
/// infinity, and the usual conventions of f64 arithmetic implement the
/// extended-real minimum (a `+inf` entry of psi forces the transform to
/// `-inf`; `-inf` entries drop out of the minimum).
pub fn cp_transform(space: &Space, p: f64, psi: &[f64]) -> Result<Vec<f64>, TransportError> {
    check_exponent(p)?;
    if psi.len() != space.len() {
        return Err(TransportError::DimensionMismatch { expected: space.len(), got: psi.len() });
    }
    let n = space.len();
    Ok((0..n)
        .map(|x| {
            (0..n)
                .map(|y| power_cost(space.dist(x, y), p) - psi[y])
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

/// The c_p-superdifferential of a c_p-concave function: all pairs where
/// `phi(x) + phi^{c_p}(y) = d(x,y)^p` (up to `CP_TOL`).
///
/// Fails with `NotCpConcave` when `phi` is not (within `CP_TOL`) equal to its
/// own double transform.
pub fn cp_superdifferential(
    space: &Space,
    p: f64,
    phi: &[f64],
) -> Result<Vec<(usize, usize)>, TransportError> {
    let psi = cp_transform(space, p, phi)?;
    let back = cp_transform(space, p, &psi)?;
    for (point, (&a, &b)) in phi.iter().zip(&back).enumerate() {
        let gap = if a == b { 0.0 } else { (a - b).abs() };
        if gap > CP_TOL {
            return Err(TransportError::NotCpConcave { point, gap });
        }
    }
    let n = space.len();
    let mut pairs = Vec::new();
    for x in 0..n {
        for y in 0..n {
            let lhs = phi[x] + psi[y];
            let c = power_cost(space.dist(x, y), p);
            if lhs == c || (lhs - c).abs() <= CP_TOL {
                pairs.push((x, y));
            }
        }
    }
    Ok(pairs)
}

/// Outcome of a cyclical-monotonicity scan.
#[derive(Debug, Clone)]
pub struct CycleScan {
    /// True when no cycle of the examined lengths improves the cost by more
    /// than `CYCLE_STRICTNESS`.
    pub monotone: bool,
    /// Most negative relocation gain found and the pair indices realizing
    /// it, when any violation exists.
    pub violation: Option<(f64, Vec<usize>)>,
    pub cycles_checked: usize,
}

/// Exhaustively test c_p-cyclical monotonicity of a pair set: for every
/// cyclic selection `(x_1,y_1),..,(x_L,y_L)` of up to `max_cycle` distinct
/// pairs, relocating the targets along the cycle must not reduce the cost.
///
/// The enumeration is factorial in the cycle length, so the supported budget
/// is at most 12 pairs and cycles of length 2..=5; anything larger returns
/// `BudgetExceeded`.
pub fn check_cyclical_monotonicity(
    space: &Space,
    p: f64,
    pairs: &[(usize, usize)],
    max_cycle: usize,
) -> Result<CycleScan, TransportError> {
    check_exponent(p)?;
    if pairs.len() > 12 || max_cycle > 5 || max_cycle < 2 {
        return Err(TransportError::BudgetExceeded { pairs: pairs.len(), max_cycle });
    }
    let cost = cost_matrix(space, p);
    let m = pairs.len();
    let mut scan = CycleScan { monotone: true, violation: None, cycles_checked: 0 };

    // Canonical cycles: the smallest pair index is fixed in first position,
    // the rest permuted, so each cyclic order is visited exactly once.
    let mut selected: Vec<usize> = Vec::new();
    let mut used = vec![false; m];
    fn recurse(
        first: usize,
        len: usize,
        pairs: &[(usize, usize)],
        cost: &[Vec<f64>],
        used: &mut [bool],
        selected: &mut Vec<usize>,
        scan: &mut CycleScan,
    ) {
        if selected.len() == len {
            let mut gain = ExactSum::new();
            for k in 0..len {
                let (xi, yi) = pairs[selected[k]];
                let (_, ynext) = pairs[selected[(k + 1) % len]];
                gain.add(cost[xi][ynext]);
                gain.sub(cost[xi][yi]);
            }
            let g = gain.value();
            scan.cycles_checked += 1;
            if g < -CYCLE_STRICTNESS {
                scan.monotone = false;
                let better = match &scan.violation {
                    None => true,
                    Some((best, _)) => g < *best,
                };
                if better {
                    scan.violation = Some((g, selected.clone()));
                }
            }
            return;
        }
        for next in (first + 1)..pairs.len() {
            if !used[next] {
                used[next] = true;
                selected.push(next);
                recurse(first, len, pairs, cost, used, selected, scan);
                selected.pop();
                used[next] = false;
            }
        }
    }

    for len in 2..=max_cycle.min(m) {
        for first in 0..m {
            selected.clear();
            selected.push(first);
            used[first] = true;
            recurse(first, len, pairs, &cost, &mut used, &mut selected, &mut scan);
            used[first] = false;
        }
    }
    Ok(scan)
}
