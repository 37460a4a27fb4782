//! Transportation simplex on a dense cost matrix.
//!
//! Network simplex specialized to the balanced transportation problem:
//! minimize `sum c[i][j] * x[i][j]` over nonnegative plans with prescribed row
//! sums (supplies) and column sums (demands). The basis is a spanning tree of
//! the complete bipartite graph; tree duals come out of the same elimination,
//! so the caller gets an optimal primal plan and feasible dual potentials with
//! complementary slackness on the basis.
//!
//! Pivoting is Bland's rule in lexicographic arc order (first arc with a
//! negative reduced cost enters, first min-ratio arc leaves), which makes the
//! solve deterministic and free of cycling even under degeneracy.

use crate::exact::ExactSum;

/// Optimal plan and duals for one transportation instance.
#[derive(Debug, Clone)]
pub struct SimplexSolution {
    /// Dense plan over (supply index, demand index).
    pub plan: Vec<Vec<f64>>,
    /// Source potentials, `u[i] + v[j] == c[i][j]` on basic cells.
    pub u: Vec<f64>,
    /// Sink potentials.
    pub v: Vec<f64>,
    /// Exactly accumulated objective value of the plan.
    pub cost: f64,
}

#[derive(Debug, Clone, Copy)]
struct Arc {
    row: usize,
    col: usize,
    flow: f64,
}

/// Solve a balanced transportation problem. `supply` and `demand` must be
/// strictly positive with equal totals (up to rounding). Returns `Err` with
/// the pivot count if the iteration cap is hit.
pub fn solve(cost: &[Vec<f64>], supply: &[f64], demand: &[f64]) -> Result<SimplexSolution, usize> {
    let m = supply.len();
    let n = demand.len();
    debug_assert!(m > 0 && n > 0);

    // Entering threshold scaled to the cost range: reduced costs above -eps
    // are treated as nonnegative. This bounds the residual duality gap by
    // eps times the transported mass.
    let scale = cost
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |a, &c| a.max(c.abs()));
    let eps = 1e-13 * (1.0 + scale);

    // Northwest-corner initial basis: exactly m + n - 1 cells, degenerate
    // zeros included.
    let mut basis: Vec<Arc> = Vec::with_capacity(m + n - 1);
    {
        let mut a = supply.to_vec();
        let mut b = demand.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let f = a[i].min(b[j]).max(0.0);
            basis.push(Arc { row: i, col: j, flow: f });
            if basis.len() == m + n - 1 {
                break;
            }
            a[i] -= f;
            b[j] -= f;
            if a[i] <= b[j] {
                i += 1;
                debug_assert!(i < m);
            } else {
                j += 1;
                debug_assert!(j < n);
            }
        }
    }

    let max_pivots = 500 * (m * n + m + n);
    let mut pivots = 0;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];

    loop {
        compute_duals(cost, &basis, m, n, &mut u, &mut v);

        // Bland entering rule: first cell in row-major order with negative
        // reduced cost.
        let mut entering = None;
        'scan: for i in 0..m {
            for j in 0..n {
                if cost[i][j] - u[i] - v[j] < -eps {
                    entering = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            break;
        };

        pivots += 1;
        if pivots > max_pivots {
            return Err(pivots);
        }

        // The basis tree plus the entering arc contains a unique cycle
        // through (ei, ej); signs alternate along it, + on the entering arc.
        let cycle = find_cycle(&basis, m, n, ei, ej);
        let mut theta = f64::INFINITY;
        let mut leave: Option<usize> = None;
        for &(arc_idx, positive) in &cycle {
            if !positive {
                let f = basis[arc_idx].flow;
                let better = match leave {
                    None => true,
                    Some(prev) => {
                        f < theta || (f == theta && arc_key(&basis[arc_idx]) < arc_key(&basis[prev]))
                    }
                };
                if better {
                    theta = f;
                    leave = Some(arc_idx);
                }
            }
        }
        let leave_idx = leave.expect("cycle in a balanced problem always has a decreasing arc");

        for &(arc_idx, positive) in &cycle {
            if positive {
                basis[arc_idx].flow += theta;
            } else {
                basis[arc_idx].flow -= theta;
            }
        }
        basis[leave_idx] = Arc { row: ei, col: ej, flow: theta };
    }

    let mut plan = vec![vec![0.0; n]; m];
    for arc in &basis {
        // Clamp the -0.0 dust degenerate pivots can leave.
        plan[arc.row][arc.col] += arc.flow.max(0.0);
    }
    let mut cost_acc = ExactSum::new();
    for (i, row) in plan.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if x != 0.0 {
                cost_acc.add_prod(x, cost[i][j]);
            }
        }
    }
    Ok(SimplexSolution { plan, u, v, cost: cost_acc.value() })
}

fn arc_key(a: &Arc) -> (usize, usize) {
    (a.row, a.col)
}

/// Tree duals: fix u[0] = 0 and propagate `u[i] + v[j] = c[i][j]` across
/// basic arcs. The basis is always a spanning tree, so one traversal
/// reaches every node.
fn compute_duals(cost: &[Vec<f64>], basis: &[Arc], m: usize, n: usize, u: &mut [f64], v: &mut [f64]) {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + n]; // node -> basis arc ids
    for (k, arc) in basis.iter().enumerate() {
        adj[arc.row].push(k);
        adj[m + arc.col].push(k);
    }
    let mut known = vec![false; m + n];
    let mut stack = vec![0usize];
    known[0] = true;
    u[0] = 0.0;
    while let Some(node) = stack.pop() {
        for &k in &adj[node] {
            let arc = &basis[k];
            let (src, snk) = (arc.row, m + arc.col);
            let other = if node == src { snk } else { src };
            if !known[other] {
                known[other] = true;
                if other == snk {
                    v[arc.col] = cost[arc.row][arc.col] - u[arc.row];
                } else {
                    u[arc.row] = cost[arc.row][arc.col] - v[arc.col];
                }
                stack.push(other);
            }
        }
    }
}

/// Unique cycle created by adding arc (ei, ej) to the basis tree. Returns
/// basis arc indices with their sign in the alternating update; the entering
/// arc itself (sign +) is not part of the list.
fn find_cycle(basis: &[Arc], m: usize, n: usize, ei: usize, ej: usize) -> Vec<(usize, bool)> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m + n]; // (neighbor node, arc id)
    for (k, arc) in basis.iter().enumerate() {
        adj[arc.row].push((m + arc.col, k));
        adj[m + arc.col].push((arc.row, k));
    }
    let start = ei;
    let goal = m + ej;
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; m + n];
    let mut seen = vec![false; m + n];
    seen[start] = true;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        if node == goal {
            break;
        }
        for &(next, k) in &adj[node] {
            if !seen[next] {
                seen[next] = true;
                parent[next] = Some((node, k));
                queue.push_back(next);
            }
        }
    }

    // Walk back from the sink: the tree path goal -> start, signs -, +, -, ..
    // (the arc meeting the entering column takes -).
    let mut out = Vec::new();
    let mut node = goal;
    let mut positive = false;
    while node != start {
        let (prev, k) = parent[node].expect("basis spans all nodes of a balanced instance");
        out.push((k, positive));
        positive = !positive;
        node = prev;
    }
    out
}
