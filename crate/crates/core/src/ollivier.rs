//! Coarse Ricci curvature of Markov chains and its behavior under
//! quotients.
//!
//! Following Ollivier (2009), a Markov kernel on a finite metric space
//! assigns to each pair of distinct points the curvature
//! `kappa(x, y) = 1 - W_1(mu_x, mu_y) / d(x, y)`, where `mu_x` is the
//! one-step transition measure at `x`. A finite isometric action induces a
//! chain on orbit classes by pushing rows forward and averaging over the
//! group; a global lower curvature bound survives that reduction, and
//! [`verify_ollivier_preservation`] checks the inequality on concrete
//! instances rather than taking it on faith.
//!
//! Curvature is symmetric in its two arguments, so every evaluation is
//! routed through the sorted pair. This halves the transport solves and
//! makes `kappa(x, y)` and `kappa(y, x)` identical bit for bit.

use thiserror::Error;

use crate::exact::ExactSum;
use crate::group::Action;
use crate::quotient::Quotient;
use crate::space::Space;
use crate::transport::{wasserstein, Measure, TransportError};

/// Slack allowed when comparing the quotient curvature bound against the
/// base bound; covers transport-solver rounding on both sides.
pub const PRESERVATION_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum OllivierError {
    #[error("expected {expected} kernel rows, got {got}")]
    WrongRowCount { expected: usize, got: usize },

    #[error("kernel row {row} has length {got}, expected {expected}")]
    BadRowLength { row: usize, expected: usize, got: usize },

    #[error("kernel row {row} is not a probability vector: {source}")]
    RowNotProbability { row: usize, source: TransportError },

    #[error("coarse curvature is undefined on the diagonal (point {point})")]
    SamePoint { point: usize },

    #[error("chain and quotient (or action) refer to different spaces")]
    SpaceMismatch,

    #[error("transport subproblem failed: {0}")]
    Transport(#[from] TransportError),
}

/// A row-stochastic kernel over a finite metric measure space. Row `x` is
/// the one-step transition measure out of `x`.
#[derive(Debug, Clone)]
pub struct MarkovChain {
    space: Space,
    rows: Vec<Measure>,
}

impl MarkovChain {
    /// Validate the kernel shape and each row as a probability vector.
    pub fn new(space: Space, kernel: Vec<Vec<f64>>) -> Result<Self, OllivierError> {
        let n = space.len();
        if kernel.len() != n {
            return Err(OllivierError::WrongRowCount { expected: n, got: kernel.len() });
        }
        let mut rows = Vec::with_capacity(n);
        for (row, weights) in kernel.into_iter().enumerate() {
            if weights.len() != n {
                return Err(OllivierError::BadRowLength { row, expected: n, got: weights.len() });
            }
            rows.push(
                Measure::new(weights)
                    .map_err(|source| OllivierError::RowNotProbability { row, source })?,
            );
        }
        Ok(Self { space, rows })
    }

    /// The chain that stays put: row `x` is the point mass at `x`.
    pub fn identity(space: Space) -> Self {
        let n = space.len();
        let rows = (0..n).map(|x| Measure::dirac(n, x)).collect();
        Self { space, rows }
    }

    /// The chain that forgets its position: every row is `target`.
    pub fn mixing(space: Space, target: Measure) -> Result<Self, OllivierError> {
        let n = space.len();
        if target.len() != n {
            return Err(OllivierError::BadRowLength { row: 0, expected: n, got: target.len() });
        }
        let rows = vec![target; n];
        Ok(Self { space, rows })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Transition measure out of `x`.
    pub fn row(&self, x: usize) -> &Measure {
        &self.rows[x]
    }

    /// Whether `K(gx, gy) = K(x, y)` bit for bit over the whole group.
    pub fn is_invariant(&self, action: &Action) -> bool {
        let n = self.len();
        if action.degree() != n {
            return false;
        }
        action.elements().iter().all(|g| {
            (0..n).all(|x| {
                (0..n).all(|y| self.rows[g.apply(x)].weight(g.apply(y)) == self.rows[x].weight(y))
            })
        })
    }

    fn same_space(&self, other: &Space) -> bool {
        self.space.len() == other.len()
            && self.space.distance_rows() == other.distance_rows()
            && self.space.masses() == other.masses()
    }
}

/// Coarse Ricci curvature along the pair `(x, y)`:
/// `1 - W_1(mu_x, mu_y) / d(x, y)`. Always at most 1; evaluated at the
/// sorted pair, so exchanging the arguments returns the same float.
pub fn coarse_ricci(chain: &MarkovChain, x: usize, y: usize) -> Result<f64, OllivierError> {
    if x == y {
        return Err(OllivierError::SamePoint { point: x });
    }
    let (a, b) = (x.min(y), x.max(y));
    let sol = wasserstein(&chain.space, chain.row(a), chain.row(b), 1.0)?;
    Ok(1.0 - sol.cost / chain.space.dist(a, b))
}

/// Minimum curvature over all distinct pairs: the largest `k` with
/// `kappa >= k` everywhere. Positive infinity on spaces with fewer than
/// two points, where the bound is vacuous.
pub fn min_coarse_ricci(chain: &MarkovChain) -> Result<f64, OllivierError> {
    let n = chain.len();
    let mut min = f64::INFINITY;
    for a in 0..n {
        for b in (a + 1)..n {
            let k = coarse_ricci(chain, a, b)?;
            if k < min {
                min = k;
            }
        }
    }
    Ok(min)
}

/// The induced chain on orbit classes: push each row forward to the
/// quotient and average over the group,
/// `row(x*) = (1/|G|) sum_g push(mu_{gx})`.
///
/// The multiset of summed kernel entries does not change when the
/// representative `x` moves inside its fiber (right translation permutes
/// the group), so the rows are representative-independent; the
/// accumulation is nevertheless re-run from every representative and
/// compared as an exact difference, so a regression cannot pass silently.
/// For a G-invariant chain the average collapses and the quotient row is
/// the plain pushforward.
pub fn quotient_chain(chain: &MarkovChain, q: &Quotient) -> Result<MarkovChain, OllivierError> {
    if !chain.same_space(q.base()) {
        return Err(OllivierError::SpaceMismatch);
    }
    let action = q.action();
    let order = action.order() as f64;
    let classes = q.orbits().len();

    let class_row = |x: usize, v: usize| -> ExactSum {
        let mut acc = ExactSum::new();
        for g in action.elements() {
            let gx = g.apply(x);
            for &y in q.fiber(v) {
                acc.add(chain.row(gx).weight(y));
            }
        }
        acc
    };

    let mut kernel = vec![vec![0.0; classes]; classes];
    for u in 0..classes {
        let fiber = q.fiber(u);
        for v in 0..classes {
            kernel[u][v] = class_row(fiber[0], v).value() / order;
            for &x in &fiber[1..] {
                let mut diff = class_row(fiber[0], v);
                for g in action.elements() {
                    let gx = g.apply(x);
                    for &y in q.fiber(v) {
                        diff.sub(chain.row(gx).weight(y));
                    }
                }
                assert!(diff.is_zero(), "quotient chain row depends on the representative");
            }
        }
    }
    MarkovChain::new(q.space().clone(), kernel)
}

/// The group-averaged chain on the base space,
/// `row(x) = (1/|G|) sum_g mu_{gx}`. Averaging a family of kernels cannot
/// lower the global curvature bound, because `W_1` is jointly convex in
/// its two measures; callers exercise that property in tests.
///
/// The action must have been built on the chain's space.
pub fn g_average_chain(chain: &MarkovChain, action: &Action) -> Result<MarkovChain, OllivierError> {
    let n = chain.len();
    if action.degree() != n {
        return Err(OllivierError::SpaceMismatch);
    }
    let order = action.order() as f64;
    let mut kernel = vec![vec![0.0; n]; n];
    for (x, row) in kernel.iter_mut().enumerate() {
        for (y, slot) in row.iter_mut().enumerate() {
            let mut acc = ExactSum::new();
            for g in action.elements() {
                acc.add(chain.row(g.apply(x)).weight(y));
            }
            *slot = acc.value() / order;
        }
    }
    MarkovChain::new(chain.space.clone(), kernel)
}

/// Outcome of comparing the base curvature bound with the quotient one.
#[derive(Debug, Clone, Copy)]
pub struct PreservationReport {
    /// Minimum curvature of the base chain.
    pub k_base: f64,
    /// Minimum curvature of the induced quotient chain.
    pub k_quotient: f64,
    /// `k_quotient - k_base`; nonnegative up to solver rounding.
    pub slack: f64,
    /// Whether `k_quotient >= k_base - PRESERVATION_TOL`.
    pub pass: bool,
}

/// Check that quotienting preserves the global curvature bound:
/// `min kappa* >= min kappa - PRESERVATION_TOL`.
pub fn verify_ollivier_preservation(
    chain: &MarkovChain,
    q: &Quotient,
) -> Result<PreservationReport, OllivierError> {
    let k_base = min_coarse_ricci(chain)?;
    let reduced = quotient_chain(chain, q)?;
    let k_quotient = min_coarse_ricci(&reduced)?;
    Ok(PreservationReport {
        k_base,
        k_quotient,
        slack: k_quotient - k_base,
        pass: k_quotient >= k_base - PRESERVATION_TOL,
    })
}

/// Reduce a pairwise curvature bound to the quotient: for distinct classes
/// `(u, v)`, the value is the maximum of the group-averaged bound
/// `(1/|G|) sum_g k(gx, gy)` over representative pairs realizing the
/// quotient distance. The diagonal is left at zero; `k` itself is read
/// only at distinct base pairs. For a G-invariant `k` the result is the
/// representative value.
pub fn varying_bound_kstar(k: &[Vec<f64>], q: &Quotient) -> Result<Vec<Vec<f64>>, OllivierError> {
    let n = q.base().len();
    if k.len() != n {
        return Err(OllivierError::WrongRowCount { expected: n, got: k.len() });
    }
    for (row, r) in k.iter().enumerate() {
        if r.len() != n {
            return Err(OllivierError::BadRowLength { row, expected: n, got: r.len() });
        }
    }
    let action = q.action();
    let order = action.order() as f64;
    let classes = q.orbits().len();
    let mut out = vec![vec![0.0; classes]; classes];
    for u in 0..classes {
        for v in 0..classes {
            if u == v {
                continue;
            }
            let dstar = q.space().dist(u, v);
            let mut best = f64::NEG_INFINITY;
            for &x in q.fiber(u) {
                for &y in q.fiber(v) {
                    if q.base().dist(x, y) != dstar {
                        continue;
                    }
                    let mut acc = ExactSum::new();
                    for g in action.elements() {
                        acc.add(k[g.apply(x)][g.apply(y)]);
                    }
                    let avg = acc.value() / order;
                    if avg > best {
                        best = avg;
                    }
                }
            }
            // The quotient distance is a minimum over fiber pairs, so some
            // pair realizes it exactly; orbit partitions cannot miss.
            assert!(best.is_finite(), "no representative pair realizes the quotient distance");
            out[u][v] = best;
        }
    }
    Ok(out)
}
