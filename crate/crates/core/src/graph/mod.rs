//! Weighted graphs and the discrete Gamma calculus.
//!
//! A symmetric edge weight and a positive vertex measure determine the
//! m-Laplacian `Δf(x) = (1/m(x)) Σ_y ω(x,y)(f(y) − f(x))`, the carré du
//! champ `2Γ(f,g) = Δ(fg) − fΔg − gΔf`, and the iterated form
//! `2Γ₂(f,g) = ΔΓ(f,g) − Γ(f,Δg) − Γ(Δf,g)`, the discrete instance of the
//! calculus of Bakry and Émery (1985). Curvature-dimension bounds read off
//! these forms live in [`curvature`]; quotients by weight-preserving
//! permutation groups live in [`quotient`].
//!
//! Operator sums are accumulated exactly (products of inputs are never
//! rounded before summation) and rounded once after the division by the
//! vertex measure. The algebraic identities relating the operators are
//! therefore verifiable as exact statements about the accumulated sums:
//! [`product_rule_defect`] and [`divergence_defect`] return `0.0` for
//! arbitrary finite inputs, not merely small residuals.

pub mod curvature;
pub mod quotient;

use thiserror::Error;

use crate::exact::{exact_sum, ExactSum};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("weight table must be square, row {row} has length {got} for {expected} vertices")]
    NotSquare { row: usize, expected: usize, got: usize },

    #[error("expected {expected} labels, got {got}")]
    WrongLabelCount { expected: usize, got: usize },

    #[error("weights are not symmetric at ({i},{j}): {forward} vs {backward}")]
    NotSymmetric { i: usize, j: usize, forward: f64, backward: f64 },

    #[error("weight {value} at ({i},{j}) is negative or not finite")]
    BadWeight { i: usize, j: usize, value: f64 },

    #[error("self-loop weight {value} at vertex {i}; diagonal must be zero")]
    SelfLoop { i: usize, value: f64 },

    #[error("vertex measure {value} at {index} is not positive and finite")]
    BadMass { index: usize, value: f64 },

    #[error("vertex {vertex} is isolated; the degree measure would vanish there")]
    IsolatedVertex { vertex: usize },

    #[error("expected a function on {expected} vertices, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("exponent p = {p} must be finite and >= 1")]
    InvalidExponent { p: f64 },

    #[error("dimension parameter N = {n} must be >= 1 (infinity allowed)")]
    BadDimension { n: f64 },

    #[error("function value {value} at vertex {index} is not strictly positive")]
    NonpositiveFunction { index: usize, value: f64 },

    #[error("generator {generator} does not preserve weights: omega({i},{j}) changes")]
    ActionNotWeightPreserving { generator: usize, i: usize, j: usize },

    #[error("generator {generator} does not preserve the measure at vertex {vertex}")]
    ActionNotMeasurePreserving { generator: usize, vertex: usize },

    #[error("action degree {got} does not match the graph on {expected} vertices")]
    DegreeMismatch { expected: usize, got: usize },

    #[error(transparent)]
    Group(#[from] crate::group::ActionError),
}

/// A finite weighted graph with a positive vertex measure. Vertices `x`
/// and `y` are adjacent exactly when `omega(x, y) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    labels: Vec<String>,
    omega: Vec<Vec<f64>>,
    measure: Vec<f64>,
}

impl WeightedGraph {
    /// Validate symmetry (bitwise), a zero diagonal, nonnegative finite
    /// weights, and a strictly positive measure. Connectivity is not
    /// required; every operator here is local, so disconnected graphs are
    /// legal and [`is_connected`](Self::is_connected) lets callers warn.
    pub fn new(
        labels: Vec<String>,
        omega: Vec<Vec<f64>>,
        measure: Vec<f64>,
    ) -> Result<Self, GraphError> {
        let n = omega.len();
        if labels.len() != n {
            return Err(GraphError::WrongLabelCount { expected: n, got: labels.len() });
        }
        if measure.len() != n {
            return Err(GraphError::DimensionMismatch { expected: n, got: measure.len() });
        }
        for (row, r) in omega.iter().enumerate() {
            if r.len() != n {
                return Err(GraphError::NotSquare { row, expected: n, got: r.len() });
            }
        }
        for i in 0..n {
            if omega[i][i] != 0.0 {
                return Err(GraphError::SelfLoop { i, value: omega[i][i] });
            }
            for j in 0..n {
                let w = omega[i][j];
                if !(w.is_finite() && w >= 0.0) {
                    return Err(GraphError::BadWeight { i, j, value: w });
                }
                if omega[j][i] != w {
                    return Err(GraphError::NotSymmetric {
                        i,
                        j,
                        forward: w,
                        backward: omega[j][i],
                    });
                }
            }
        }
        for (index, &m) in measure.iter().enumerate() {
            if !(m.is_finite() && m > 0.0) {
                return Err(GraphError::BadMass { index, value: m });
            }
        }
        Ok(Self { labels, omega, measure })
    }

    /// Convenience constructor with numeric labels `"0", "1", ..`.
    pub fn with_default_labels(omega: Vec<Vec<f64>>, measure: Vec<f64>) -> Result<Self, GraphError> {
        let labels = (0..omega.len()).map(|i| i.to_string()).collect();
        Self::new(labels, omega, measure)
    }

    /// The natural vertex measure: `m(x) = d(x)`, the weighted degree.
    /// Rejects isolated vertices, whose degree measure would vanish.
    pub fn with_degree_measure(omega: Vec<Vec<f64>>) -> Result<Self, GraphError> {
        let measure: Vec<f64> = omega.iter().map(|row| exact_sum(row)).collect();
        if let Some(vertex) = measure.iter().position(|&d| d <= 0.0) {
            return Err(GraphError::IsolatedVertex { vertex });
        }
        Self::with_default_labels(omega, measure)
    }

    /// Build the weight table from an undirected edge list; weights of
    /// repeated edges accumulate.
    pub fn from_edges(
        n: usize,
        edges: &[(usize, usize, f64)],
        measure: Option<Vec<f64>>,
    ) -> Result<Self, GraphError> {
        let mut omega = vec![vec![0.0; n]; n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(GraphError::DimensionMismatch { expected: n, got: i.max(j) + 1 });
            }
            if i == j {
                return Err(GraphError::SelfLoop { i, value: w });
            }
            omega[i][j] += w;
            omega[j][i] = omega[i][j];
        }
        match measure {
            Some(m) => Self::with_default_labels(omega, m),
            None => Self::with_degree_measure(omega),
        }
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    #[inline]
    pub fn omega(&self, i: usize, j: usize) -> f64 {
        self.omega[i][j]
    }

    pub fn omega_rows(&self) -> &[Vec<f64>] {
        &self.omega
    }

    #[inline]
    pub fn mass(&self, x: usize) -> f64 {
        self.measure[x]
    }

    pub fn masses(&self) -> &[f64] {
        &self.measure
    }

    /// Weighted degree `d(x) = Σ_y ω(x, y)`.
    pub fn degree(&self, x: usize) -> f64 {
        exact_sum(&self.omega[x])
    }

    /// Vertices adjacent to `x`, in index order.
    pub fn neighbors(&self, x: usize) -> Vec<usize> {
        (0..self.len()).filter(|&y| self.omega[x][y] > 0.0).collect()
    }

    /// Whether the positive-weight edges connect all vertices.
    pub fn is_connected(&self) -> bool {
        let n = self.len();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for y in 0..n {
                if self.omega[x][y] > 0.0 && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn check_function(&self, f: &[f64]) {
        assert_eq!(f.len(), self.len(), "function length must match the vertex count");
    }

    /// m-Laplacian `Δf(x) = (1/m(x)) Σ_y ω(x,y)(f(y) − f(x))`. The sum is
    /// accumulated exactly and rounded once after the division.
    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        self.check_function(f);
        let n = self.len();
        (0..n)
            .map(|x| {
                let mut acc = ExactSum::new();
                for y in 0..n {
                    let w = self.omega[x][y];
                    if w > 0.0 {
                        acc.add_prod(w, f[y]);
                        acc.sub_prod(w, f[x]);
                    }
                }
                acc.value() / self.measure[x]
            })
            .collect()
    }

    /// Carré du champ
    /// `Γ(f,g)(x) = (1/2m(x)) Σ_y ω(x,y)(f(y) − f(x))(g(y) − g(x))`,
    /// accumulated as exact triple products so the sum agrees with the
    /// product-rule expansion term for term.
    pub fn gamma(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        self.check_function(f);
        self.check_function(g);
        let n = self.len();
        (0..n)
            .map(|x| {
                let mut acc = ExactSum::new();
                for y in 0..n {
                    let w = self.omega[x][y];
                    if w > 0.0 {
                        acc.add_triple(w, f[y], g[y]);
                        acc.sub_triple(w, f[y], g[x]);
                        acc.sub_triple(w, f[x], g[y]);
                        acc.add_triple(w, f[x], g[x]);
                    }
                }
                acc.value() / (2.0 * self.measure[x])
            })
            .collect()
    }

    /// Iterated form `Γ₂(f,g) = (ΔΓ(f,g) − Γ(f,Δg) − Γ(Δf,g)) / 2`.
    pub fn gamma2(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        let gamma_fg = self.gamma(f, g);
        let lap_gamma = self.laplacian(&gamma_fg);
        let gamma_f_lapg = self.gamma(f, &self.laplacian(g));
        let gamma_lapf_g = self.gamma(&self.laplacian(f), g);
        (0..self.len())
            .map(|x| {
                let mut acc = ExactSum::new();
                acc.add(lap_gamma[x]);
                acc.sub(gamma_f_lapg[x]);
                acc.sub(gamma_lapf_g[x]);
                acc.value() / 2.0
            })
            .collect()
    }

    /// `ℓ^p` mass, gradient term, and their sum, all as p-th powers:
    /// `‖f‖_p^p = Σ |f|^p m`, the gradient term
    /// `Σ_x |∇f|^p(x) m(x)` with
    /// `|∇f|^p(x) = (1/(p m(x))) Σ_y ω(x,y)|f(y) − f(x)|^p`, and the
    /// Sobolev total `‖f‖_{w^{1,p}}^p` as their sum.
    pub fn sobolev_norms(&self, f: &[f64], p: f64) -> Result<SobolevNorms, GraphError> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(GraphError::InvalidExponent { p });
        }
        self.check_function(f);
        let n = self.len();
        let mut lp = ExactSum::new();
        for x in 0..n {
            lp.add_prod(f[x].abs().powf(p), self.measure[x]);
        }
        // Summed over the measure, the per-vertex 1/(p m(x)) cancels and the
        // gradient term is the plain edge sum divided by p.
        let mut grad = ExactSum::new();
        for x in 0..n {
            for y in 0..n {
                let w = self.omega[x][y];
                if w > 0.0 {
                    grad.add_prod(w, (f[y] - f[x]).abs().powf(p));
                }
            }
        }
        let lp = lp.value();
        let gradient = grad.value() / p;
        Ok(SobolevNorms { lp, gradient, total: lp + gradient })
    }
}

/// `p`-th-power norms returned by [`WeightedGraph::sobolev_norms`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevNorms {
    /// `Σ_x |f(x)|^p m(x)`.
    pub lp: f64,
    /// `Σ_x |∇f|^p(x) m(x)`.
    pub gradient: f64,
    /// Sobolev power `lp + gradient`.
    pub total: f64,
}

/// Exact defect of the product rule `2Γ(f,g) = Δ(fg) − fΔg − gΔf` at the
/// level of the accumulated operator sums (all divisions by `m` cleared).
/// Both sides expand into the same multiset of triple products of inputs,
/// so the returned value is `0.0` for arbitrary finite data; anything else
/// indicates an implementation regression.
pub fn product_rule_defect(graph: &WeightedGraph, f: &[f64], g: &[f64]) -> f64 {
    graph.check_function(f);
    graph.check_function(g);
    let n = graph.len();
    let mut worst: f64 = 0.0;
    for x in 0..n {
        let mut acc = ExactSum::new();
        for y in 0..n {
            let w = graph.omega(x, y);
            if w == 0.0 {
                continue;
            }
            // Left side: ω (f(y) − f(x))(g(y) − g(x)), expanded.
            acc.add_triple(w, f[y], g[y]);
            acc.sub_triple(w, f[y], g[x]);
            acc.sub_triple(w, f[x], g[y]);
            acc.add_triple(w, f[x], g[x]);
            // Right side: ω [(fg)(y) − (fg)(x)] − f(x) ω (g(y) − g(x))
            //             − g(x) ω (f(y) − f(x)), expanded and subtracted.
            acc.sub_triple(w, f[y], g[y]);
            acc.add_triple(w, f[x], g[x]);
            acc.add_triple(f[x], w, g[y]);
            acc.sub_triple(f[x], w, g[x]);
            acc.add_triple(g[x], w, f[y]);
            acc.sub_triple(g[x], w, f[x]);
        }
        let defect = if acc.is_zero() { 0.0 } else { acc.value().abs() };
        if defect > worst {
            worst = defect;
        }
    }
    worst
}

/// Exact defect of the divergence identity `Σ_x Δf(x) m(x) = 0`, checked
/// as the cleared double sum `Σ_{x,y} ω(x,y)(f(y) − f(x))`. Terms cancel
/// in opposite pairs because `ω` is symmetric, so the result is `0.0` for
/// arbitrary finite data.
pub fn divergence_defect(graph: &WeightedGraph, f: &[f64]) -> f64 {
    graph.check_function(f);
    let n = graph.len();
    let mut acc = ExactSum::new();
    for x in 0..n {
        for y in 0..n {
            let w = graph.omega(x, y);
            if w > 0.0 {
                acc.add_prod(w, f[y]);
                acc.sub_prod(w, f[x]);
            }
        }
    }
    if acc.is_zero() {
        0.0
    } else {
        acc.value().abs()
    }
}
