//! Discretized geodesic solver for the chain transport distance.
//!
//! The squared distance is the infimum of the integrated action over
//! solutions of the discrete continuity equation, in the dynamical style
//! of Benamou and Brenier (2000). On a uniform time grid with piecewise
//! constant momenta the problem becomes finite dimensional and convex.
//! Two structural reductions keep it small: momenta are restricted to
//! their antisymmetric part on support edges (detailed balance makes the
//! two ordered weights of an edge equal, so the symmetric part is pure
//! cost and the reduction is exact), and for fixed interior densities the
//! optimal momenta of each interval solve a weighted minimum-norm problem
//! in closed form through a pseudo-inverse. The outer minimization over
//! interior densities is convex; it runs projected gradient descent with
//! Barzilai and Borwein (1988) steps and Armijo (1966) backtracking, the
//! gradient coming from the envelope theorem via the dual multipliers of
//! the inner solve. Every iterate yields a feasible path, so the returned
//! value is always an upper bound for the discretized problem.

use super::{
    continuity_residual, theta, DensityPath, FlowError, ReversibleChain,
};
use crate::exact::ExactSum;

/// Knobs for [`w_distance`]. `grid` counts time intervals; `tolerance`
/// bounds both the relative objective change and the continuity residual
/// at convergence; `epsilon` is the positivity floor used to mollify
/// boundary densities and clamp iterates.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub grid: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub epsilon: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { grid: 16, tolerance: 1e-8, max_iterations: 4000, epsilon: 1e-9 }
    }
}

/// A converged (or best-so-far) geodesic computation. `distance` is the
/// square root of `action`, the minimized integrated action.
#[derive(Debug, Clone)]
pub struct WSolution {
    pub distance: f64,
    pub action: f64,
    pub path: DensityPath,
    pub iterations: usize,
    pub relative_change: f64,
    pub continuity_residual: f64,
    /// True when a boundary density had to be clamped away from zero.
    pub mollified: bool,
}

struct Workspace<'a> {
    chain: &'a ReversibleChain,
    /// Unordered support edges `(a, b)` with `a < b`.
    edges: Vec<(usize, usize)>,
    /// `K(a,b) π(a)`, symmetric in the edge by detailed balance.
    cost: Vec<f64>,
    dt: f64,
}

struct Eval {
    f: f64,
    /// Raw objective gradient over interior levels, before projection.
    grad: Vec<Vec<f64>>,
    /// Optimal edge momenta per interval.
    u: Vec<Vec<f64>>,
}

/// `∂θ/∂s` for positive arguments, matching the branches of [`theta`].
fn theta_partial(s: f64, t: f64) -> f64 {
    if s == t {
        return 0.5;
    }
    let gap = s.ln() - t.ln();
    if gap.abs() >= 1e-5 {
        let th = (s - t) / gap;
        return (1.0 - th / s) / gap;
    }
    let m = 0.5 * (s + t);
    let w = (s - t) / (s + t);
    let d = 1.0 + w * w / 3.0 + w * w * w * w / 5.0;
    let d_w = 2.0 * w / 3.0 + 4.0 * w * w * w / 5.0;
    let w_s = 2.0 * t / ((s + t) * (s + t));
    0.5 / d - m * d_w * w_s / (d * d)
}

impl Workspace<'_> {
    /// Apply `M⁺` for the symmetric positive semidefinite `M = B Q⁻¹ Bᵀ`,
    /// discarding the rank-deficient direction (the span of `π`).
    fn pseudo_solve(m: &nalgebra::DMatrix<f64>, d: &[f64]) -> Vec<f64> {
        let n = d.len();
        let eigen = m.clone().symmetric_eigen();
        let max_eig = eigen.eigenvalues.iter().fold(0.0f64, |acc, &l| acc.max(l.abs()));
        let cutoff = 1e-13 * max_eig.max(f64::MIN_POSITIVE);
        let mut out = vec![0.0; n];
        for k in 0..n {
            let lambda = eigen.eigenvalues[k];
            if lambda <= cutoff {
                continue;
            }
            let v = eigen.eigenvectors.column(k);
            let proj: f64 = (0..n).map(|x| v[x] * d[x]).sum();
            let scale = proj / lambda;
            for x in 0..n {
                out[x] += scale * v[x];
            }
        }
        out
    }

    /// Objective, raw gradient, and optimal momenta for the given density
    /// levels (boundary levels included).
    fn evaluate(&self, levels: &[Vec<f64>]) -> Result<Eval, FlowError> {
        let n = self.chain.len();
        let e_count = self.edges.len();
        let intervals = levels.len() - 1;
        let inv_theta = |level: &[f64]| -> Result<Vec<f64>, FlowError> {
            self.edges
                .iter()
                .map(|&(a, b)| Ok(1.0 / theta(level[a], level[b])?))
                .collect()
        };
        let inv: Vec<Vec<f64>> =
            levels.iter().map(|l| inv_theta(l)).collect::<Result<_, _>>()?;

        let mut f = 0.0f64;
        let mut grad = vec![vec![0.0; n]; intervals.saturating_sub(1)];
        let mut u_all = Vec::with_capacity(intervals);
        for i in 0..intervals {
            let q: Vec<f64> = (0..e_count)
                .map(|e| self.dt * self.cost[e] * 0.5 * (inv[i][e] + inv[i + 1][e]))
                .collect();
            let d: Vec<f64> = (0..n)
                .map(|x| -(levels[i + 1][x] - levels[i][x]) / self.dt)
                .collect();
            // M = B Q⁻¹ Bᵀ where B row x holds ±K(x, ·) on incident edges.
            let mut m = nalgebra::DMatrix::zeros(n, n);
            let mut b_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
            for (e, &(a, b)) in self.edges.iter().enumerate() {
                b_rows[a].push((e, self.chain.kernel(a, b)));
                b_rows[b].push((e, -self.chain.kernel(b, a)));
            }
            let mut b_dense = vec![vec![0.0; e_count]; n];
            for (x, row) in b_rows.iter().enumerate() {
                for &(e, coeff) in row {
                    b_dense[x][e] = coeff;
                }
            }
            for x in 0..n {
                for y in x..n {
                    let mut acc = 0.0;
                    for e in 0..e_count {
                        if q[e] > 0.0 {
                            acc += b_dense[x][e] * b_dense[y][e] / q[e];
                        }
                    }
                    m[(x, y)] = acc;
                    m[(y, x)] = acc;
                }
            }
            let lambda = Self::pseudo_solve(&m, &d).iter().map(|v| 2.0 * v).collect::<Vec<_>>();
            let u: Vec<f64> = (0..e_count)
                .map(|e| {
                    let mut bt = 0.0;
                    for x in 0..n {
                        bt += b_dense[x][e] * lambda[x];
                    }
                    if q[e] > 0.0 {
                        bt / (2.0 * q[e])
                    } else {
                        0.0
                    }
                })
                .collect();
            let f_i: f64 = (0..e_count).map(|e| q[e] * u[e] * u[e]).sum();
            f += f_i;

            // Envelope theorem: with the inner optimum held fixed the
            // objective varies through d (multiplier term) and q.
            for (level, sign) in [(i, 1.0), (i + 1, -1.0)] {
                if level == 0 || level == intervals {
                    continue;
                }
                let slot = &mut grad[level - 1];
                for x in 0..n {
                    slot[x] += sign * lambda[x] / self.dt;
                }
                for (e, &(a, b)) in self.edges.iter().enumerate() {
                    let coeff = -0.5 * self.dt * self.cost[e] * u[e] * u[e]
                        * inv[level][e]
                        * inv[level][e];
                    let (s, t) = (levels[level][a], levels[level][b]);
                    slot[a] += coeff * theta_partial(s, t);
                    slot[b] += coeff * theta_partial(t, s);
                }
            }
            u_all.push(u);
        }
        Ok(Eval { f, grad, u: u_all })
    }
}

fn dot(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(&x, &y)| x * y).sum::<f64>())
        .sum()
}

fn inf_norm(a: &[Vec<f64>]) -> f64 {
    a.iter().flatten().fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

/// Orthogonal projection of each gradient level onto the mass-preserving
/// directions `{δ : ⟨δ, π⟩ = 0}`.
fn project_gradient(grad: &mut [Vec<f64>], pi: &[f64]) {
    let pi_norm: f64 = pi.iter().map(|&p| p * p).sum();
    for level in grad.iter_mut() {
        let overlap: f64 = level.iter().zip(pi).map(|(&g, &p)| g * p).sum();
        let scale = overlap / pi_norm;
        for (g, &p) in level.iter_mut().zip(pi) {
            *g -= scale * p;
        }
    }
}

/// Clamp a density level to the positivity floor and restore unit mass by
/// spreading the defect over the entries that can absorb it. Entries
/// pinned at the floor leave the free set, so this terminates in at most
/// `n` rounds and always returns a level at or above the floor.
fn project_level(level: &mut [f64], pi: &[f64], floor: f64) {
    for _ in 0..level.len() + 2 {
        for v in level.iter_mut() {
            *v = v.max(floor);
        }
        let mut acc = ExactSum::new();
        for (&v, &p) in level.iter().zip(pi) {
            acc.add_prod(v, p);
        }
        let defect = 1.0 - acc.value();
        if defect.abs() <= 1e-15 {
            return;
        }
        let free: Vec<usize> = if defect > 0.0 {
            (0..level.len()).collect()
        } else {
            (0..level.len()).filter(|&x| level[x] > floor).collect()
        };
        let denom: f64 = free.iter().map(|&x| pi[x]).sum();
        if denom <= 0.0 {
            return;
        }
        let shift = defect / denom;
        for &x in &free {
            level[x] += shift;
        }
    }
    for v in level.iter_mut() {
        *v = v.max(floor);
    }
}

/// Minimize the discretized action between two positive densities and
/// report the geodesic distance (square root of the action) with the
/// optimal path. Inputs with entries below `options.epsilon` are clamped
/// and renormalized first (`mollified` is set). Fails with
/// [`FlowError::NotConverged`], carrying the best feasible path, when the
/// convergence criteria are not met within the iteration budget.
pub fn w_distance(
    chain: &ReversibleChain,
    rho0: &[f64],
    rho1: &[f64],
    options: &SolverOptions,
) -> Result<WSolution, FlowError> {
    assert!(options.grid >= 1, "at least one time interval is required");
    chain.check_density(rho0)?;
    chain.check_density(rho1)?;
    let n = chain.len();
    let pi: Vec<f64> = (0..n).map(|x| chain.pi(x)).collect();

    let mut mollified = false;
    let mollify = |rho: &[f64], flag: &mut bool| -> Vec<f64> {
        let mut out = rho.to_vec();
        if out.iter().any(|&v| v < options.epsilon) {
            *flag = true;
            for v in out.iter_mut() {
                *v = v.max(options.epsilon);
            }
            let mass: f64 = out.iter().zip(&pi).map(|(&v, &p)| v * p).sum();
            for v in out.iter_mut() {
                *v /= mass;
            }
        }
        out
    };
    let rho0 = mollify(rho0, &mut mollified);
    let rho1 = mollify(rho1, &mut mollified);

    let grid = options.grid;
    let dt = 1.0 / grid as f64;
    let ws = Workspace {
        chain,
        edges: chain.edges(),
        cost: chain.edges().iter().map(|&(a, b)| chain.kernel(a, b) * chain.pi(a)).collect(),
        dt,
    };

    // Linear interpolation of the boundary densities, floored and
    // mass-corrected per level.
    let mut interior: Vec<Vec<f64>> = (1..grid)
        .map(|i| {
            let t = i as f64 * dt;
            let mut level: Vec<f64> =
                rho0.iter().zip(&rho1).map(|(&a, &b)| (1.0 - t) * a + t * b).collect();
            project_level(&mut level, &pi, options.epsilon);
            level
        })
        .collect();

    let assemble = |interior: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let mut levels = Vec::with_capacity(grid + 1);
        levels.push(rho0.clone());
        levels.extend(interior.iter().cloned());
        levels.push(rho1.clone());
        levels
    };

    let mut eval = ws.evaluate(&assemble(&interior))?;
    let mut iterations = 0usize;
    let mut relative_change = f64::INFINITY;
    let mut step = 0.1 / (1.0 + inf_norm(&eval.grad));
    let mut previous: Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = None;
    let mut converged = false;

    loop {
        let mut grad = eval.grad.clone();
        project_gradient(&mut grad, &pi);
        if inf_norm(&grad) <= 1e-14 {
            relative_change = 0.0;
            converged = true;
            break;
        }
        if iterations >= options.max_iterations {
            break;
        }
        if let Some((px, pg)) = &previous {
            let dx: Vec<Vec<f64>> = interior
                .iter()
                .zip(px)
                .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| x - y).collect())
                .collect();
            let dg: Vec<Vec<f64>> = grad
                .iter()
                .zip(pg)
                .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| x - y).collect())
                .collect();
            let num = dot(&dx, &dx);
            let den = dot(&dx, &dg);
            if den > 0.0 && num > 0.0 {
                step = (num / den).clamp(1e-12, 1e8);
            }
        }

        let f0 = eval.f;
        let mut accepted = None;
        let mut trial = step;
        for _ in 0..60 {
            let mut candidate: Vec<Vec<f64>> = interior
                .iter()
                .zip(&grad)
                .map(|(x, g)| x.iter().zip(g).map(|(&v, &d)| v - trial * d).collect())
                .collect();
            for level in candidate.iter_mut() {
                project_level(level, &pi, options.epsilon);
            }
            let moved: Vec<Vec<f64>> = interior
                .iter()
                .zip(&candidate)
                .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| x - y).collect())
                .collect();
            let predicted = dot(&grad, &moved);
            let cand_eval = ws.evaluate(&assemble(&candidate))?;
            if f0 - cand_eval.f >= 1e-4 * predicted.max(0.0) && cand_eval.f <= f0 {
                accepted = Some((candidate, cand_eval));
                break;
            }
            trial *= 0.5;
        }
        let Some((candidate, cand_eval)) = accepted else {
            break;
        };
        relative_change = (f0 - cand_eval.f).abs() / f0.max(1e-12);
        previous = Some((std::mem::take(&mut interior), grad));
        interior = candidate;
        eval = cand_eval;
        iterations += 1;
        if relative_change < options.tolerance {
            converged = true;
            break;
        }
    }

    let levels = assemble(&interior);
    let times: Vec<f64> = (0..=grid).map(|i| i as f64 * dt).collect();
    let momenta: Vec<Vec<Vec<f64>>> = eval
        .u
        .iter()
        .map(|u| {
            let mut table = vec![vec![0.0; n]; n];
            for (e, &(a, b)) in ws.edges.iter().enumerate() {
                table[a][b] = u[e];
                table[b][a] = -u[e];
            }
            table
        })
        .collect();
    let path = DensityPath::new(chain, times, levels, momenta)?;
    let residual = continuity_residual(chain, &path)?.max_abs;
    let distance = eval.f.max(0.0).sqrt();
    if !(converged && residual < options.tolerance) {
        return Err(FlowError::NotConverged {
            distance,
            action: eval.f,
            relative_change,
            residual,
            iterations,
            best: Box::new(path),
        });
    }
    Ok(WSolution {
        distance,
        action: eval.f,
        path,
        iterations,
        relative_change,
        continuity_residual: residual,
        mollified,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::{cycle_walk, two_state};
    use super::super::path_action;
    use super::*;
    use crate::gen;
    use rand::Rng;

    #[test]
    fn equal_endpoints_give_a_zero_constant_path() {
        let chain = two_state();
        let sol = w_distance(&chain, &[1.0, 1.0], &[1.0, 1.0], &SolverOptions::default()).unwrap();
        assert_eq!(sol.distance, 0.0);
        assert_eq!(sol.action, 0.0);
        assert!(!sol.mollified);
        for level in sol.path.densities() {
            assert_eq!(level, &vec![1.0, 1.0]);
        }
    }

    #[test]
    fn objective_gradient_matches_central_differences() {
        let chain = cycle_walk(4);
        let pi: Vec<f64> = (0..4).map(|x| chain.pi(x)).collect();
        let ws = Workspace {
            chain: &chain,
            edges: chain.edges(),
            cost: chain.edges().iter().map(|&(a, b)| chain.kernel(a, b) * chain.pi(a)).collect(),
            dt: 0.25,
        };
        let mut r = gen::rng(61);
        let mut levels: Vec<Vec<f64>> = Vec::new();
        for _ in 0..5 {
            let raw: Vec<f64> = (0..4).map(|_| r.gen_range(0.3..2.0)).collect();
            let mass: f64 = raw.iter().zip(&pi).map(|(&v, &p)| v * p).sum();
            levels.push(raw.iter().map(|v| v / mass).collect());
        }
        let eval = ws.evaluate(&levels).unwrap();

        // Directional derivatives along mass-preserving directions.
        for (level, x, y) in [(1usize, 0usize, 2usize), (2, 1, 3), (3, 2, 0)] {
            let mut direction = vec![vec![0.0; 4]; 5];
            direction[level][x] = 1.0;
            direction[level][y] = -pi[x] / pi[y];
            let h = 1e-6;
            let shift = |sign: f64| {
                let mut moved = levels.clone();
                for l in 0..5 {
                    for k in 0..4 {
                        moved[l][k] += sign * h * direction[l][k];
                    }
                }
                ws.evaluate(&moved).unwrap().f
            };
            let fd = (shift(1.0) - shift(-1.0)) / (2.0 * h);
            let analytic: f64 = (0..4)
                .map(|k| eval.grad[level - 1][k] * direction[level][k])
                .sum();
            assert!(
                (fd - analytic).abs() <= 1e-6 * (1.0 + fd.abs()),
                "level {level}: fd {fd} vs analytic {analytic}"
            );
        }
    }

    #[test]
    fn reported_action_equals_the_path_action() {
        let chain = two_state();
        let sol = w_distance(
            &chain,
            &[1.2, 0.8],
            &[0.8, 1.2],
            &SolverOptions { grid: 8, ..SolverOptions::default() },
        )
        .unwrap();
        let replay = path_action(&chain, &sol.path).unwrap();
        assert!((replay - sol.action).abs() <= 1e-12 * (1.0 + replay.abs()));
        assert!((sol.distance * sol.distance - sol.action).abs() <= 1e-15);
    }

    #[test]
    fn refinement_never_increases_the_value() {
        let chain = two_state();
        let mut values = Vec::new();
        for grid in [8, 16, 32] {
            let sol = w_distance(
                &chain,
                &[1.4, 0.6],
                &[0.6, 1.4],
                &SolverOptions { grid, ..SolverOptions::default() },
            )
            .unwrap();
            values.push(sol.distance);
        }
        assert!(values[1] <= values[0] + 1e-6);
        assert!(values[2] <= values[1] + 1e-6);
    }

    #[test]
    fn value_is_invariant_under_state_relabeling() {
        let chain = cycle_walk(4);
        let rho0 = vec![1.6, 0.8, 0.8, 0.8];
        let rho1 = vec![0.8, 0.8, 1.6, 0.8];
        let opts = SolverOptions { grid: 8, ..SolverOptions::default() };
        let direct = w_distance(&chain, &rho0, &rho1, &opts).unwrap();

        // Rotate every state by one: the kernel is rotation invariant.
        let rotate = |v: &[f64]| -> Vec<f64> {
            (0..4).map(|x| v[(x + 3) % 4]).collect()
        };
        let relabeled = w_distance(&chain, &rotate(&rho0), &rotate(&rho1), &opts).unwrap();
        assert!(
            (direct.distance - relabeled.distance).abs() <= 1e-6,
            "{} vs {}",
            direct.distance,
            relabeled.distance
        );
    }

    #[test]
    fn zero_boundary_densities_are_mollified() {
        let chain = two_state();
        let sol = w_distance(
            &chain,
            &[2.0, 0.0],
            &[1.0, 1.0],
            &SolverOptions { grid: 8, ..SolverOptions::default() },
        )
        .unwrap();
        assert!(sol.mollified);
        assert!(sol.distance.is_finite() && sol.distance > 0.0);
    }

    #[test]
    fn exhausted_iteration_budget_reports_diagnostics_with_a_feasible_path() {
        let chain = two_state();
        let result = w_distance(
            &chain,
            &[1.4, 0.6],
            &[0.6, 1.4],
            &SolverOptions { max_iterations: 0, ..SolverOptions::default() },
        );
        match result {
            Err(FlowError::NotConverged { distance, best, residual, .. }) => {
                assert!(distance.is_finite() && distance > 0.0);
                assert!(residual <= 1e-10, "even the initial path must be feasible");
                assert_eq!(best.densities().len(), 17);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }
}
