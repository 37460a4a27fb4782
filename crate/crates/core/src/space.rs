//! Finite metric measure spaces.
//!
//! A space is a finite point set with a metric given by an explicit distance
//! table and a strictly positive measure on points. All downstream machinery
//! (transport plans, quotients, curvature functionals) works against this one
//! concrete type; nothing is ever approximated by embeddings.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("empty space")]
    Empty,

    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),

    #[error("distance table row {row} has length {got}, expected {expected}")]
    BadTableShape { row: usize, got: usize, expected: usize },

    #[error("expected {expected} masses, got {got}")]
    BadMassLength { got: usize, expected: usize },

    #[error("distance({i},{j}) = {value} is not symmetric/finite/positive as required")]
    BadDistance { i: usize, j: usize, value: f64 },

    #[error("triangle inequality fails: d({i},{k}) > d({i},{j}) + d({j},{k})")]
    TriangleViolation { i: usize, j: usize, k: usize },

    #[error("mass({i}) = {value} must be strictly positive and finite")]
    BadMass { i: usize, value: f64 },
}

/// Relative slack for the triangle-inequality check. Tight triangles
/// (collinear Euclidean triples) can round a hair past equality; anything
/// beyond a few ulps is a genuine violation.
const TRIANGLE_SLACK: f64 = 8.0 * f64::EPSILON;

/// A finite metric measure space: labelled points, distance table, masses.
#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
    mass: Vec<f64>,
}

impl Space {
    /// Validate and build. The distance table must be square, symmetric with
    /// zero diagonal and positive finite off-diagonal entries, and satisfy the
    /// triangle inequality; every mass must be strictly positive and finite.
    pub fn new(labels: Vec<String>, dist: Vec<Vec<f64>>, mass: Vec<f64>) -> Result<Self, SpaceError> {
        let n = labels.len();
        if n == 0 {
            return Err(SpaceError::Empty);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if labels[i] == labels[j] {
                    return Err(SpaceError::DuplicateLabel(labels[i].clone()));
                }
            }
        }
        if dist.len() != n {
            return Err(SpaceError::BadTableShape { row: 0, got: dist.len(), expected: n });
        }
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(SpaceError::BadTableShape { row: i, got: row.len(), expected: n });
            }
        }
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return Err(SpaceError::BadDistance { i, j: i, value: dist[i][i] });
            }
            for j in 0..n {
                let d = dist[i][j];
                if i != j && !(d.is_finite() && d > 0.0 && d == dist[j][i]) {
                    return Err(SpaceError::BadDistance { i, j, value: d });
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let via = dist[i][j] + dist[j][k];
                    if dist[i][k] > via + TRIANGLE_SLACK * via {
                        return Err(SpaceError::TriangleViolation { i, j, k });
                    }
                }
            }
        }
        for (i, &m) in mass.iter().enumerate() {
            if !(m.is_finite() && m > 0.0) {
                return Err(SpaceError::BadMass { i, value: m });
            }
        }
        if mass.len() != n {
            return Err(SpaceError::BadMassLength { got: mass.len(), expected: n });
        }
        Ok(Self { labels, dist, mass })
    }

    /// Convenience constructor with numeric labels `"0", "1", ..`.
    pub fn with_default_labels(dist: Vec<Vec<f64>>, mass: Vec<f64>) -> Result<Self, SpaceError> {
        let labels = (0..dist.len()).map(|i| i.to_string()).collect();
        Self::new(labels, dist, mass)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    #[inline]
    pub fn mass(&self, i: usize) -> f64 {
        self.mass[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn distance_rows(&self) -> &[Vec<f64>] {
        &self.dist
    }

    pub fn total_mass(&self) -> f64 {
        crate::exact::exact_sum(&self.mass)
    }

    pub fn diameter(&self) -> f64 {
        let mut d = 0.0;
        for row in &self.dist {
            for &v in row {
                if v > d {
                    d = v;
                }
            }
        }
        d
    }
}
