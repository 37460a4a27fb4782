//! Curvature-dimension bounds extracted from the Gamma calculus.
//!
//! At a vertex `x` the condition CD(K, N) demands
//! `Γ₂(f,f)(x) ≥ K Γ(f,f)(x) + (1/N)(Δf(x))²` for every function `f`. All
//! three functionals depend on `f` only through its values on the 2-ball
//! around `x` and ignore added constants, so after fixing `f(x) = 0` the
//! largest admissible `K` is a generalized eigenvalue problem between two
//! quadratic forms on the punctured 2-ball. The Γ-form is diagonal on the
//! neighbor coordinates and vanishes identically on the 2-sphere
//! coordinates, where the Γ₂-form is nonnegative; a Schur complement
//! eliminates that singular block and leaves a definite pencil solved by a
//! symmetric eigendecomposition.
//!
//! [`sampled_curvature`] is an independent oracle for the same quantity:
//! restarted coordinate descent on the Rayleigh quotient of the two forms,
//! never touching the eigen machinery.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{GraphError, WeightedGraph};

/// Restart budget used by the acceptance suites for the sampling oracle.
pub const SAMPLING_RESTARTS: usize = 10_000;

/// Most negative eigenvalue tolerated on the 2-sphere block before the
/// curvature is reported as minus infinity.
const KERNEL_FLOOR: f64 = -1e-9;

/// Quadratic forms of the curvature problem at one vertex, in the basis of
/// indicator functions on the punctured 2-ball (neighbors first, then the
/// 2-sphere).
struct LocalForms {
    /// Vertices carrying the coordinates; the first `m1` are neighbors.
    basis: Vec<usize>,
    m1: usize,
    /// Form of `Γ₂(·,·)(x) − (1/N)(Δ·(x))²`.
    a: DMatrix<f64>,
    /// Diagonal of the Γ-form on the neighbor block: `ω(x,i) / (2 m(x))`.
    b_diag: Vec<f64>,
}

fn inverse_dimension(n_param: f64) -> Result<f64, GraphError> {
    if n_param.is_infinite() && n_param > 0.0 {
        Ok(0.0)
    } else if n_param.is_finite() && n_param >= 1.0 {
        Ok(1.0 / n_param)
    } else {
        Err(GraphError::BadDimension { n: n_param })
    }
}

fn local_forms(graph: &WeightedGraph, x: usize, inv_n: f64) -> LocalForms {
    let n = graph.len();
    let s1 = graph.neighbors(x);
    let in_ball = |v: usize| v == x || s1.contains(&v);
    let mut s2: Vec<usize> = Vec::new();
    for &y in &s1 {
        for z in graph.neighbors(y) {
            if !in_ball(z) && !s2.contains(&z) {
                s2.push(z);
            }
        }
    }
    s2.sort_unstable();
    let m1 = s1.len();
    let basis: Vec<usize> = s1.iter().chain(s2.iter()).copied().collect();
    let m = basis.len();

    let unit = |v: usize| {
        let mut e = vec![0.0; n];
        e[v] = 1.0;
        e
    };
    let units: Vec<Vec<f64>> = basis.iter().map(|&v| unit(v)).collect();
    let lap_at_x: Vec<f64> = units.iter().map(|e| graph.laplacian(e)[x]).collect();

    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let value = graph.gamma2(&units[i], &units[j])[x] - inv_n * lap_at_x[i] * lap_at_x[j];
            a[(i, j)] = value;
            a[(j, i)] = value;
        }
    }
    let b_diag = s1.iter().map(|&y| graph.omega(x, y) / (2.0 * graph.mass(x))).collect();
    LocalForms { basis, m1, a, b_diag }
}

/// Largest `K` such that CD(K, N) holds at `x`: the minimal generalized
/// eigenvalue of the `Γ₂ − (1/N)Δ²` form against the Γ-form, after
/// eliminating the 2-sphere directions on which Γ vanishes. Returns
/// positive infinity at isolated vertices (the inequality is vacuous) and
/// negative infinity if the 2-sphere block fails its nonnegativity or
/// range conditions beyond the numerical floor, which cannot happen for
/// exact data.
pub fn cd_curvature(graph: &WeightedGraph, x: usize, n_param: f64) -> Result<f64, GraphError> {
    let inv_n = inverse_dimension(n_param)?;
    assert!(x < graph.len(), "vertex index out of range");
    let forms = local_forms(graph, x, inv_n);
    let (m1, m) = (forms.m1, forms.basis.len());
    if m1 == 0 {
        return Ok(f64::INFINITY);
    }
    let m2 = m - m1;

    let a11 = forms.a.view((0, 0), (m1, m1)).into_owned();
    let mut schur = a11;
    if m2 > 0 {
        let a12 = forms.a.view((0, m1), (m1, m2)).into_owned();
        let a22 = forms.a.view((m1, m1), (m2, m2)).into_owned();
        let eigen = a22.symmetric_eigen();
        let max_eig = eigen.eigenvalues.iter().fold(0.0f64, |acc, &l| acc.max(l.abs()));
        let rank_tol = 1e-12 * max_eig.max(1.0);
        let coupling_tol = 1e-9 * (1.0 + a12.amax());
        for k in 0..m2 {
            let lambda = eigen.eigenvalues[k];
            let coupled = &a12 * eigen.eigenvectors.column(k);
            if lambda <= rank_tol {
                if lambda < KERNEL_FLOOR {
                    return Ok(f64::NEG_INFINITY);
                }
                // Kernel directions of the 2-sphere block must not couple
                // into the neighbor block, or no K satisfies the form
                // inequality.
                if coupled.amax() > coupling_tol {
                    return Ok(f64::NEG_INFINITY);
                }
            } else {
                schur -= &coupled * coupled.transpose() / lambda;
            }
        }
    }

    let mut pencil = DMatrix::zeros(m1, m1);
    for i in 0..m1 {
        for j in 0..m1 {
            pencil[(i, j)] = schur[(i, j)] / (forms.b_diag[i] * forms.b_diag[j]).sqrt();
        }
    }
    Ok(pencil.symmetric_eigen().eigenvalues.iter().fold(f64::INFINITY, |acc, &l| acc.min(l)))
}

/// Sampling oracle for [`cd_curvature`]: minimize the Rayleigh quotient of
/// the two local forms by coordinate descent from `restarts` random
/// starting functions. Along a single coordinate the quotient is a ratio
/// of quadratics, so the best step solves a scalar quadratic exactly. The
/// sampled minimum can only overestimate the true infimum.
pub fn sampled_curvature(
    graph: &WeightedGraph,
    x: usize,
    n_param: f64,
    restarts: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64, GraphError> {
    let inv_n = inverse_dimension(n_param)?;
    assert!(x < graph.len(), "vertex index out of range");
    let forms = local_forms(graph, x, inv_n);
    let (m1, m) = (forms.m1, forms.basis.len());
    if m1 == 0 {
        return Ok(f64::INFINITY);
    }
    let mut b = vec![0.0; m];
    b[..m1].copy_from_slice(&forms.b_diag);
    let a = &forms.a;

    let quad_b = |f: &[f64]| -> f64 { (0..m).map(|i| b[i] * f[i] * f[i]).sum() };
    let quad_a = |f: &[f64]| -> f64 {
        let mut q = 0.0;
        for i in 0..m {
            for j in 0..m {
                q += f[i] * a[(i, j)] * f[j];
            }
        }
        q
    };

    let mut best = f64::INFINITY;
    for _ in 0..restarts {
        let mut f: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // Guarantee a usable denominator at the start.
        if quad_b(&f) < 1e-6 {
            let lucky = rng.gen_range(0..m1);
            f[lucky] = 1.0;
        }
        let mut af: Vec<f64> = (0..m).map(|i| (0..m).map(|j| a[(i, j)] * f[j]).sum()).collect();
        let mut qa = quad_a(&f);
        let mut qb = quad_b(&f);

        for _sweep in 0..24 {
            let mut improved = false;
            for i in 0..m {
                let (ai, bi, c) = (a[(i, i)], af[i], qa);
                let (di, ei, g) = (b[i], b[i] * f[i], qb);
                // d/dt of (c + 2 bi t + ai t²)/(g + 2 ei t + di t²) = 0.
                let q2 = ai * ei - bi * di;
                let q1 = ai * g - c * di;
                let q0 = bi * g - c * ei;
                let mut candidates: Vec<f64> = Vec::with_capacity(2);
                if q2.abs() > 1e-300 {
                    let disc = q1 * q1 - 4.0 * q2 * q0;
                    if disc >= 0.0 {
                        let root = disc.sqrt();
                        candidates.push((-q1 + root) / (2.0 * q2));
                        candidates.push((-q1 - root) / (2.0 * q2));
                    }
                } else if q1.abs() > 1e-300 {
                    candidates.push(-q0 / q1);
                }
                let current = qa / qb;
                let mut step = None;
                let mut step_value = current;
                for &t in &candidates {
                    if !t.is_finite() {
                        continue;
                    }
                    let denom = g + 2.0 * ei * t + di * t * t;
                    if denom <= 1e-12 {
                        continue;
                    }
                    let value = (c + 2.0 * bi * t + ai * t * t) / denom;
                    if value < step_value - 1e-15 * (1.0 + value.abs()) {
                        step_value = value;
                        step = Some(t);
                    }
                }
                if let Some(t) = step {
                    f[i] += t;
                    for (j, slot) in af.iter_mut().enumerate() {
                        *slot += t * a[(j, i)];
                    }
                    qa = c + 2.0 * bi * t + ai * t * t;
                    qb = g + 2.0 * ei * t + di * t * t;
                    improved = true;
                }
            }
            // Rescaling leaves the quotient unchanged and stops the iterate
            // from drifting toward overflow or underflow.
            let norm = f.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
            if norm > 0.0 {
                for v in &mut f {
                    *v /= norm;
                }
                af = (0..m).map(|i| (0..m).map(|j| a[(i, j)] * f[j]).sum()).collect();
                qa = quad_a(&f);
                qb = quad_b(&f);
            }
            if !improved {
                break;
            }
        }
        if qb > 1e-12 {
            let value = qa / qb;
            if value < best {
                best = value;
            }
        }
    }
    Ok(best)
}

/// One evaluation of the exponential curvature-dimension inequality
/// CDE(K, N) at `x` for a positive test function:
/// `Γ₂(f,f) − Γ(f, Γ(f,f)/f) ≥ K Γ(f,f) + (1/N)(Δf)²`.
#[derive(Debug, Clone, Copy)]
pub struct CdeCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; nonnegative exactly when the inequality holds here.
    pub slack: f64,
    pub pass: bool,
}

/// Evaluate the CDE(K, N) inequality at `x` for one positive function.
/// This verifies a single test function; it cannot certify the condition,
/// which quantifies over all positive `f`.
pub fn cde_check(
    graph: &WeightedGraph,
    x: usize,
    k: f64,
    n_param: f64,
    f: &[f64],
) -> Result<CdeCheck, GraphError> {
    let inv_n = inverse_dimension(n_param)?;
    assert!(x < graph.len(), "vertex index out of range");
    assert_eq!(f.len(), graph.len(), "function length must match the vertex count");
    for (index, &value) in f.iter().enumerate() {
        if !(value.is_finite() && value > 0.0) {
            return Err(GraphError::NonpositiveFunction { index, value });
        }
    }
    let gamma_ff = graph.gamma(f, f);
    let ratio: Vec<f64> = gamma_ff.iter().zip(f).map(|(&g, &v)| g / v).collect();
    let lhs = graph.gamma2(f, f)[x] - graph.gamma(f, &ratio)[x];
    let lap = graph.laplacian(f)[x];
    let rhs = k * gamma_ff[x] + inv_n * lap * lap;
    let slack = lhs - rhs;
    Ok(CdeCheck { lhs, rhs, slack, pass: slack >= 0.0 })
}

/// Worst slack of the CDE(K, N) inequality over a family of positive test
/// functions and all vertices.
#[derive(Debug, Clone, Copy)]
pub struct CdeSweep {
    pub min_slack: f64,
    pub vertex: usize,
    pub function_index: usize,
    pub pass: bool,
}

/// Sweep the CDE(K, N) inequality over every vertex and every function of
/// a nonempty family.
pub fn cde_sweep(
    graph: &WeightedGraph,
    k: f64,
    n_param: f64,
    family: &[Vec<f64>],
) -> Result<CdeSweep, GraphError> {
    assert!(!family.is_empty(), "the test family must be nonempty");
    let mut worst = CdeSweep { min_slack: f64::INFINITY, vertex: 0, function_index: 0, pass: true };
    for (function_index, f) in family.iter().enumerate() {
        for x in 0..graph.len() {
            let check = cde_check(graph, x, k, n_param, f)?;
            if check.slack < worst.min_slack {
                worst = CdeSweep { min_slack: check.slack, vertex: x, function_index, pass: true };
            }
        }
    }
    worst.pass = worst.min_slack >= 0.0;
    Ok(worst)
}
