//! Discrete transport metrics on reversible Markov chains.
//!
//! A reversible chain carries the discrete analogue of the dynamical
//! formulation of optimal transport of Benamou and Brenier (2000),
//! introduced on Markov chains by Maas (2011) and Mielke (2011):
//! probability densities against the stationary measure, momenta on
//! ordered pairs of states, the logarithmic-mean mobility `θ`, the action
//! functional, and a geodesic distance obtained by minimizing the
//! integrated action over solutions of the discrete continuity equation.
//! [`solver`] hosts the desk-scale discretized minimizer; [`symmetry`]
//! hosts group averages, quotient chains, and the isometry checks.

pub mod solver;
pub mod symmetry;

use thiserror::Error;

use crate::exact::{exact_sum, ExactSum};

/// Tolerance on `πK = π` and on the unit mass of a supplied stationary
/// vector.
pub const STATIONARITY_TOL: f64 = 1e-10;

/// Tolerance on detailed balance `K(x,y)π(x) = K(y,x)π(y)`.
pub const REVERSIBILITY_TOL: f64 = 1e-10;

/// Tolerance on the unit `π`-mass of a probability density.
pub const DENSITY_MASS_TOL: f64 = 1e-9;

/// `|log s − log t|` below which [`theta`] switches to its series.
const THETA_SERIES_SWITCH: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("kernel must be square, row {row} has length {got} for {expected} states")]
    NotSquare { row: usize, expected: usize, got: usize },

    #[error("kernel entry {value} at ({x},{y}) is negative or not finite")]
    BadKernelEntry { x: usize, y: usize, value: f64 },

    #[error("kernel row {row} sums to {sum}, not 1")]
    RowNotStochastic { row: usize, sum: f64 },

    #[error("the kernel is not irreducible")]
    NotIrreducible,

    #[error("stationary vector has length {got} for {expected} states")]
    WrongStationaryLength { expected: usize, got: usize },

    #[error("stationary weight {value} at state {index} is not positive and finite")]
    BadStationaryWeight { index: usize, value: f64 },

    #[error("stationary vector has mass {sum}, not 1")]
    StationaryMassOff { sum: f64 },

    #[error("pi K differs from pi at state {point} by {residual}")]
    NotStationary { point: usize, residual: f64 },

    #[error("detailed balance fails at ({x},{y}) by {residual}")]
    NotReversible { x: usize, y: usize, residual: f64 },

    #[error("linear solve for the stationary vector failed")]
    StationarySolveFailed,

    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("logarithmic mean requires nonnegative arguments, got {value}")]
    NegativeInput { value: f64 },

    #[error("density entry {value} at state {index} is negative or not finite")]
    BadDensity { index: usize, value: f64 },

    #[error("density has pi-weighted mass {mass}, not 1")]
    DensityMassOff { mass: f64 },

    #[error("time grid must start at 0 and end at 1, got [{start}, {end}]")]
    TimeGridEndpoints { start: f64, end: f64 },

    #[error("time grid is not strictly increasing at index {index}")]
    TimeGridNotIncreasing { index: usize },

    #[error("momentum entry {value} at ({x},{y}) is not finite")]
    BadMomentum { x: usize, y: usize, value: f64 },

    #[error("generator {generator} does not preserve the kernel at ({x},{y})")]
    GroupNotKernelPreserving { generator: usize, x: usize, y: usize },

    #[error("generator {generator} does not preserve the stationary measure at state {point}")]
    GroupNotStationaryPreserving { generator: usize, point: usize },

    #[error(
        "solver stopped after {iterations} iterations at distance {distance} \
         (relative change {relative_change}, residual {residual})"
    )]
    NotConverged {
        distance: f64,
        action: f64,
        relative_change: f64,
        residual: f64,
        iterations: usize,
        /// Best feasible path found before stopping.
        best: Box<DensityPath>,
    },

    #[error(transparent)]
    Group(#[from] crate::group::ActionError),
}

/// An irreducible row-stochastic kernel in detailed balance with its
/// stationary probability vector. The stationary vector is computed when
/// not supplied; either way stochasticity, irreducibility, stationarity,
/// and reversibility are all validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ReversibleChain {
    kernel: Vec<Vec<f64>>,
    stationary: Vec<f64>,
}

impl ReversibleChain {
    pub fn new(kernel: Vec<Vec<f64>>, stationary: Option<Vec<f64>>) -> Result<Self, FlowError> {
        let n = kernel.len();
        for (row, entries) in kernel.iter().enumerate() {
            if entries.len() != n {
                return Err(FlowError::NotSquare { row, expected: n, got: entries.len() });
            }
            for (y, &value) in entries.iter().enumerate() {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(FlowError::BadKernelEntry { x: row, y, value });
                }
            }
            let sum = exact_sum(entries);
            if (sum - 1.0).abs() > STATIONARITY_TOL {
                return Err(FlowError::RowNotStochastic { row, sum });
            }
        }
        if !strongly_connected(&kernel) {
            return Err(FlowError::NotIrreducible);
        }

        let stationary = match stationary {
            Some(pi) => {
                if pi.len() != n {
                    return Err(FlowError::WrongStationaryLength { expected: n, got: pi.len() });
                }
                for (index, &value) in pi.iter().enumerate() {
                    if !(value.is_finite() && value > 0.0) {
                        return Err(FlowError::BadStationaryWeight { index, value });
                    }
                }
                let sum = exact_sum(&pi);
                if (sum - 1.0).abs() > STATIONARITY_TOL {
                    return Err(FlowError::StationaryMassOff { sum });
                }
                pi
            }
            None => solve_stationary(&kernel)?,
        };

        for y in 0..n {
            let mut acc = ExactSum::new();
            for x in 0..n {
                acc.add_prod(stationary[x], kernel[x][y]);
            }
            acc.sub(stationary[y]);
            let residual = acc.value().abs();
            if residual > STATIONARITY_TOL {
                return Err(FlowError::NotStationary { point: y, residual });
            }
        }
        for x in 0..n {
            for y in x + 1..n {
                let mut acc = ExactSum::new();
                acc.add_prod(kernel[x][y], stationary[x]);
                acc.sub_prod(kernel[y][x], stationary[y]);
                let residual = acc.value().abs();
                if residual > REVERSIBILITY_TOL {
                    return Err(FlowError::NotReversible { x, y, residual });
                }
            }
        }
        Ok(Self { kernel, stationary })
    }

    pub fn len(&self) -> usize {
        self.kernel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.is_empty()
    }

    pub fn kernel(&self, x: usize, y: usize) -> f64 {
        self.kernel[x][y]
    }

    pub fn kernel_rows(&self) -> &[Vec<f64>] {
        &self.kernel
    }

    pub fn pi(&self, x: usize) -> f64 {
        self.stationary[x]
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Unordered support pairs `x < y` with `K(x,y) > 0`. Reversibility
    /// and positivity of `π` make the support symmetric.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut edges = Vec::new();
        for x in 0..n {
            for y in x + 1..n {
                if self.kernel[x][y] > 0.0 {
                    edges.push((x, y));
                }
            }
        }
        edges
    }

    /// Validate a probability density against `π`: nonnegative entries and
    /// unit `π`-weighted mass within [`DENSITY_MASS_TOL`].
    pub fn check_density(&self, rho: &[f64]) -> Result<(), FlowError> {
        if rho.len() != self.len() {
            return Err(FlowError::DimensionMismatch { expected: self.len(), got: rho.len() });
        }
        for (index, &value) in rho.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(FlowError::BadDensity { index, value });
            }
        }
        let mut acc = ExactSum::new();
        for (x, &value) in rho.iter().enumerate() {
            acc.add_prod(value, self.stationary[x]);
        }
        let mass = acc.value();
        if (mass - 1.0).abs() > DENSITY_MASS_TOL {
            return Err(FlowError::DensityMassOff { mass });
        }
        Ok(())
    }
}

/// Strong connectivity of the positive-entry digraph, by forward and
/// reverse reachability from state 0.
fn strongly_connected(kernel: &[Vec<f64>]) -> bool {
    let n = kernel.len();
    if n == 0 {
        return false;
    }
    let reach = |reverse: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for y in 0..n {
                let w = if reverse { kernel[y][x] } else { kernel[x][y] };
                if w > 0.0 && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(false) && reach(true)
}

/// Solve `πK = π`, `Σπ = 1` by replacing one redundant balance equation
/// with the normalization; nonsingular for irreducible kernels.
fn solve_stationary(kernel: &[Vec<f64>]) -> Result<Vec<f64>, FlowError> {
    let n = kernel.len();
    let mut a = nalgebra::DMatrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            a[(y, x)] = kernel[x][y] - if x == y { 1.0 } else { 0.0 };
        }
    }
    for x in 0..n {
        a[(n - 1, x)] = 1.0;
    }
    let mut b = nalgebra::DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = a.lu().solve(&b).ok_or(FlowError::StationarySolveFailed)?;
    let pi: Vec<f64> = pi.iter().copied().collect();
    if pi.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(FlowError::StationarySolveFailed);
    }
    Ok(pi)
}

/// Logarithmic mean `θ(s,t) = ∫₀¹ s^p t^{1−p} dp`: `(s−t)/(log s − log t)`
/// away from the diagonal, `s` on it, `0` on the boundary. Near the
/// diagonal the closed form cancels catastrophically, so below a log-gap
/// of `1e-5` it switches to the inverse-artanh series
/// `m / (1 + w²/3 + w⁴/5)` with `m = (s+t)/2` and `w = (s−t)/(s+t)`, whose
/// next term is far below double precision there.
pub fn theta(s: f64, t: f64) -> Result<f64, FlowError> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(FlowError::NegativeInput { value: s });
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(FlowError::NegativeInput { value: t });
    }
    if s == 0.0 || t == 0.0 {
        return Ok(0.0);
    }
    if s == t {
        return Ok(s);
    }
    let gap = s.ln() - t.ln();
    if gap.abs() < THETA_SERIES_SWITCH {
        let m = 0.5 * (s + t);
        let w = (s - t) / (s + t);
        let w2 = w * w;
        return Ok(m / (1.0 + w2 / 3.0 + w2 * w2 / 5.0));
    }
    Ok((s - t) / gap)
}

/// Mobility coefficient `α(x, s, t)`: `0` when `θ(s,t) = 0` and `x = 0`,
/// `x²/θ(s,t)` when `θ(s,t) > 0`, `+∞` when `θ(s,t) = 0` and `x ≠ 0`.
pub fn alpha(x: f64, s: f64, t: f64) -> Result<f64, FlowError> {
    assert!(!x.is_nan(), "momentum must not be NaN");
    let th = theta(s, t)?;
    if th == 0.0 {
        if x == 0.0 {
            Ok(0.0)
        } else {
            Ok(f64::INFINITY)
        }
    } else {
        Ok(x * x / th)
    }
}

/// Action of a density and a momentum table:
/// `½ Σ_{x,y} α(V(x,y), ρ(x), ρ(y)) K(x,y) π(x)`, in extended arithmetic.
/// Pairs outside the kernel support carry zero weight and are skipped, so
/// an infinite mobility there does not poison the sum.
pub fn action(chain: &ReversibleChain, rho: &[f64], v: &[Vec<f64>]) -> Result<f64, FlowError> {
    let n = chain.len();
    if rho.len() != n {
        return Err(FlowError::DimensionMismatch { expected: n, got: rho.len() });
    }
    if v.len() != n {
        return Err(FlowError::DimensionMismatch { expected: n, got: v.len() });
    }
    let mut total = 0.0f64;
    for x in 0..n {
        if v[x].len() != n {
            return Err(FlowError::DimensionMismatch { expected: n, got: v[x].len() });
        }
        for y in 0..n {
            let k = chain.kernel(x, y);
            if k == 0.0 {
                continue;
            }
            let a = alpha(v[x][y], rho[x], rho[y])?;
            if a.is_infinite() {
                return Ok(f64::INFINITY);
            }
            total += a * k * chain.pi(x);
        }
    }
    Ok(0.5 * total)
}

/// Entropy `ℋ(ρ) = Σ_x ρ(x) log ρ(x) π(x)` with `0 log 0 = 0`.
pub fn entropy_mm(chain: &ReversibleChain, rho: &[f64]) -> Result<f64, FlowError> {
    chain.check_density(rho)?;
    let mut acc = ExactSum::new();
    for (x, &value) in rho.iter().enumerate() {
        if value > 0.0 {
            acc.add_prod(value * value.ln(), chain.pi(x));
        }
    }
    Ok(acc.value())
}

/// A time-discretized solution candidate for the continuity equation:
/// densities on a strictly increasing grid over `[0, 1]` and one momentum
/// table per interval (piecewise constant in time).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPath {
    times: Vec<f64>,
    rho: Vec<Vec<f64>>,
    momenta: Vec<Vec<Vec<f64>>>,
}

impl DensityPath {
    pub fn new(
        chain: &ReversibleChain,
        times: Vec<f64>,
        rho: Vec<Vec<f64>>,
        momenta: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, FlowError> {
        let n = chain.len();
        if times.len() < 2 || times[0] != 0.0 || *times.last().unwrap() != 1.0 {
            return Err(FlowError::TimeGridEndpoints {
                start: times.first().copied().unwrap_or(f64::NAN),
                end: times.last().copied().unwrap_or(f64::NAN),
            });
        }
        for i in 1..times.len() {
            if times[i] <= times[i - 1] {
                return Err(FlowError::TimeGridNotIncreasing { index: i });
            }
        }
        if rho.len() != times.len() {
            return Err(FlowError::DimensionMismatch { expected: times.len(), got: rho.len() });
        }
        for level in &rho {
            chain.check_density(level)?;
        }
        if momenta.len() != times.len() - 1 {
            return Err(FlowError::DimensionMismatch {
                expected: times.len() - 1,
                got: momenta.len(),
            });
        }
        for table in &momenta {
            if table.len() != n {
                return Err(FlowError::DimensionMismatch { expected: n, got: table.len() });
            }
            for (x, row) in table.iter().enumerate() {
                if row.len() != n {
                    return Err(FlowError::DimensionMismatch { expected: n, got: row.len() });
                }
                for (y, &value) in row.iter().enumerate() {
                    if !value.is_finite() {
                        return Err(FlowError::BadMomentum { x, y, value });
                    }
                }
            }
        }
        Ok(Self { times, rho, momenta })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn densities(&self) -> &[Vec<f64>] {
        &self.rho
    }

    pub fn momenta(&self) -> &[Vec<Vec<f64>>] {
        &self.momenta
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Residuals of the discrete continuity equation
/// `ρ̇(x) + ½ Σ_y (V(x,y) − V(y,x)) K(x,y) = 0`, one per interval and
/// state, with forward differences in time.
#[derive(Debug, Clone)]
pub struct ContinuityReport {
    pub residuals: Vec<Vec<f64>>,
    pub max_abs: f64,
}

pub fn continuity_residual(
    chain: &ReversibleChain,
    path: &DensityPath,
) -> Result<ContinuityReport, FlowError> {
    let n = chain.len();
    let mut residuals = Vec::with_capacity(path.momenta.len());
    let mut max_abs = 0.0f64;
    for (i, table) in path.momenta.iter().enumerate() {
        let dt = path.times[i + 1] - path.times[i];
        let mut level = Vec::with_capacity(n);
        for x in 0..n {
            let mut flux = ExactSum::new();
            for y in 0..n {
                let k = chain.kernel(x, y);
                if k > 0.0 {
                    flux.add_prod(table[x][y] - table[y][x], k);
                }
            }
            let r = (path.rho[i + 1][x] - path.rho[i][x]) / dt + 0.5 * flux.value();
            max_abs = max_abs.max(r.abs());
            level.push(r);
        }
        residuals.push(level);
    }
    Ok(ContinuityReport { residuals, max_abs })
}

/// Integrated action of a path: trapezoidal in the density levels,
/// piecewise constant in the momenta, matching the solver objective.
pub fn path_action(chain: &ReversibleChain, path: &DensityPath) -> Result<f64, FlowError> {
    let mut total = 0.0f64;
    for (i, table) in path.momenta.iter().enumerate() {
        let dt = path.times[i + 1] - path.times[i];
        let left = action(chain, &path.rho[i], table)?;
        let right = action(chain, &path.rho[i + 1], table)?;
        total += 0.5 * dt * (left + right);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use rand::Rng;

    pub(crate) fn two_state() -> ReversibleChain {
        ReversibleChain::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            Some(vec![0.5, 0.5]),
        )
        .unwrap()
    }

    pub(crate) fn cycle_walk(n: usize) -> ReversibleChain {
        let mut kernel = vec![vec![0.0; n]; n];
        for x in 0..n {
            kernel[x][(x + 1) % n] += 0.5;
            kernel[x][(x + n - 1) % n] += 0.5;
        }
        ReversibleChain::new(kernel, Some(vec![1.0 / n as f64; n])).unwrap()
    }

    #[test]
    fn chain_validation_rejects_each_defect() {
        let bad_row = ReversibleChain::new(vec![vec![0.0, 0.5], vec![1.0, 0.0]], None);
        assert!(matches!(bad_row, Err(FlowError::RowNotStochastic { row: 0, .. })));

        let reducible = ReversibleChain::new(
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 0.5, 0.5],
                vec![0.0, 0.5, 0.5],
            ],
            None,
        );
        assert!(matches!(reducible, Err(FlowError::NotIrreducible)));

        let not_stationary = ReversibleChain::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            Some(vec![0.25, 0.75]),
        );
        assert!(matches!(not_stationary, Err(FlowError::NotStationary { .. })));

        let irreversible = ReversibleChain::new(
            vec![
                vec![0.0, 0.75, 0.25],
                vec![0.25, 0.0, 0.75],
                vec![0.75, 0.25, 0.0],
            ],
            None,
        );
        assert!(matches!(irreversible, Err(FlowError::NotReversible { .. })));
    }

    #[test]
    fn missing_stationary_vector_is_solved_for() {
        // Birth-death kernel: detailed balance pins pi = (1/3, 2/3).
        let chain = ReversibleChain::new(
            vec![vec![0.5, 0.5], vec![0.25, 0.75]],
            None,
        )
        .unwrap();
        assert!((chain.pi(0) - 1.0 / 3.0).abs() <= 1e-12);
        assert!((chain.pi(1) - 2.0 / 3.0).abs() <= 1e-12);
    }

    #[test]
    fn theta_closed_form_and_boundary_branches() {
        let mut r = gen::rng(51);
        for _ in 0..50 {
            let s = r.gen_range(0.1..4.0);
            assert_eq!(theta(s, s).unwrap(), s);
            assert_eq!(theta(s, 0.0).unwrap(), 0.0);
            assert_eq!(theta(0.0, s).unwrap(), 0.0);
        }
        let e = std::f64::consts::E;
        assert!((theta(e, 1.0).unwrap() - (e - 1.0)).abs() <= 1e-12);
        assert!(matches!(theta(-0.5, 1.0), Err(FlowError::NegativeInput { .. })));
    }

    #[test]
    fn theta_is_symmetric_bounded_and_homogeneous() {
        let mut r = gen::rng(52);
        for _ in 0..200 {
            let s = r.gen_range(0.05..4.0);
            let t = r.gen_range(0.05..4.0);
            let th = theta(s, t).unwrap();
            assert_eq!(th, theta(t, s).unwrap(), "theta must be bitwise symmetric");
            assert!(th >= s.min(t) - 1e-12 && th <= 0.5 * (s + t) + 1e-12);
            let c = r.gen_range(0.5..2.0);
            let scaled = theta(c * s, c * t).unwrap();
            assert!((scaled - c * th).abs() <= 1e-10 * (1.0 + scaled.abs()));
        }
    }

    #[test]
    fn theta_series_branch_joins_the_closed_form_smoothly() {
        // Just outside the switch the closed form is still accurate; the
        // series must agree with it through the crossover.
        for &t in &[0.5, 1.0, 2.5] {
            for &rel in &[0.9e-5, 1.1e-5, 2e-5] {
                let s = t * (1.0 + rel);
                let th = theta(s, t).unwrap();
                let direct = (s - t) / (s / t).ln();
                assert!((th - direct).abs() <= 1e-11 * t, "mismatch at t={t}, rel={rel}");
            }
        }
    }

    #[test]
    fn alpha_selects_its_three_branches_exactly() {
        assert_eq!(alpha(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(alpha(2.0, 1.0, 1.0).unwrap(), 4.0);
        assert_eq!(alpha(1.0, 0.0, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(alpha(-3.0, 4.0, 4.0).unwrap(), 2.25);
    }

    #[test]
    fn action_on_the_two_state_chain_matches_the_single_term() {
        let chain = two_state();
        let rho = vec![1.0, 1.0];
        let mut v = vec![vec![0.0; 2]; 2];
        assert_eq!(action(&chain, &rho, &v).unwrap(), 0.0);
        v[0][1] = 1.0;
        assert_eq!(action(&chain, &rho, &v).unwrap(), 0.25);
    }

    #[test]
    fn action_is_convex_along_random_segments() {
        let chain = cycle_walk(4);
        let mut r = gen::rng(53);
        for _ in 0..50 {
            let draw = |r: &mut rand_chacha::ChaCha8Rng| {
                let raw: Vec<f64> = (0..4).map(|_| r.gen_range(0.2..2.0)).collect();
                let mass: f64 = raw.iter().map(|v| v * 0.25).sum();
                let rho: Vec<f64> = raw.iter().map(|v| v / mass).collect();
                let v: Vec<Vec<f64>> =
                    (0..4).map(|_| (0..4).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
                (rho, v)
            };
            let (rho_a, v_a) = draw(&mut r);
            let (rho_b, v_b) = draw(&mut r);
            let lambda: f64 = r.gen_range(0.0..1.0);
            let rho_m: Vec<f64> = rho_a
                .iter()
                .zip(&rho_b)
                .map(|(&a, &b)| lambda * a + (1.0 - lambda) * b)
                .collect();
            let v_m: Vec<Vec<f64>> = v_a
                .iter()
                .zip(&v_b)
                .map(|(ra, rb)| {
                    ra.iter().zip(rb).map(|(&a, &b)| lambda * a + (1.0 - lambda) * b).collect()
                })
                .collect();
            let mid = action(&chain, &rho_m, &v_m).unwrap();
            let ends = lambda * action(&chain, &rho_a, &v_a).unwrap()
                + (1.0 - lambda) * action(&chain, &rho_b, &v_b).unwrap();
            assert!(mid <= ends + 1e-10, "convexity violated: {mid} > {ends}");
        }
    }

    #[test]
    fn entropy_examples_and_nonnegativity() {
        let chain = two_state();
        assert_eq!(entropy_mm(&chain, &[1.0, 1.0]).unwrap(), 0.0);
        let h = entropy_mm(&chain, &[2.0, 0.0]).unwrap();
        assert!((h - 2.0_f64.ln()).abs() <= 1e-15);

        let cycle = cycle_walk(4);
        let mut r = gen::rng(54);
        for _ in 0..50 {
            let raw: Vec<f64> = (0..4).map(|_| r.gen_range(0.05..3.0)).collect();
            let mass: f64 = raw.iter().map(|v| v * 0.25).sum();
            let rho: Vec<f64> = raw.iter().map(|v| v / mass).collect();
            assert!(entropy_mm(&cycle, &rho).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn continuity_residual_vanishes_only_when_the_momenta_balance() {
        let chain = two_state();
        let constant = DensityPath::new(
            &chain,
            vec![0.0, 0.5, 1.0],
            vec![vec![1.0, 1.0]; 3],
            vec![vec![vec![0.0; 2]; 2]; 2],
        )
        .unwrap();
        let report = continuity_residual(&chain, &constant).unwrap();
        assert_eq!(report.max_abs, 0.0);

        let eps = 0.25;
        let level = |t: f64| vec![1.0 + eps * (1.0 - 2.0 * t), 1.0 - eps * (1.0 - 2.0 * t)];
        let moving = DensityPath::new(
            &chain,
            vec![0.0, 0.5, 1.0],
            vec![level(0.0), level(0.5), level(1.0)],
            vec![vec![vec![0.0; 2]; 2]; 2],
        )
        .unwrap();
        assert!(continuity_residual(&chain, &moving).unwrap().max_abs > 0.1);

        // One unknown balances the linear path: rho-dot(0) = -2 eps, so
        // V(0,1) = -V(1,0) = 2 eps.
        let mut table = vec![vec![0.0; 2]; 2];
        table[0][1] = 2.0 * eps;
        table[1][0] = -2.0 * eps;
        let balanced = DensityPath::new(
            &chain,
            vec![0.0, 0.5, 1.0],
            vec![level(0.0), level(0.5), level(1.0)],
            vec![table.clone(), table],
        )
        .unwrap();
        assert!(continuity_residual(&chain, &balanced).unwrap().max_abs <= 1e-12);
    }

    #[test]
    fn density_path_validation_rejects_bad_grids_and_momenta() {
        let chain = two_state();
        let bad_grid = DensityPath::new(
            &chain,
            vec![0.0, 0.5],
            vec![vec![1.0, 1.0]; 2],
            vec![vec![vec![0.0; 2]; 2]],
        );
        assert!(matches!(bad_grid, Err(FlowError::TimeGridEndpoints { .. })));

        let not_increasing = DensityPath::new(
            &chain,
            vec![0.0, 0.5, 0.5, 1.0],
            vec![vec![1.0, 1.0]; 4],
            vec![vec![vec![0.0; 2]; 2]; 3],
        );
        assert!(matches!(not_increasing, Err(FlowError::TimeGridNotIncreasing { index: 2 })));

        let bad_momentum = DensityPath::new(
            &chain,
            vec![0.0, 1.0],
            vec![vec![1.0, 1.0]; 2],
            vec![vec![vec![0.0, f64::NAN], vec![0.0, 0.0]]],
        );
        assert!(matches!(bad_momentum, Err(FlowError::BadMomentum { x: 0, y: 1, .. })));

        let bad_density = chain.check_density(&[2.0, 2.0]);
        assert!(matches!(bad_density, Err(FlowError::DensityMassOff { .. })));
    }
}
