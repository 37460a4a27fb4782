//! Submetry and foliation checkers.
//!
//! A map between finite metric spaces is a submetry when it sends closed
//! balls onto closed balls of the same radius. A partition into leaves is a
//! metric foliation when the distance from a point to another leaf does not
//! depend on the point chosen within its leaf, and a metric measure
//! foliation when, additionally, the 2-Wasserstein distance between the
//! conditional measures of two leaves equals the leaf distance. Orbit
//! partitions of isometric group actions satisfy all three; the checkers
//! here decide the properties for arbitrary input.
//!
//! On a finite space the ball equality only changes at finitely many radii,
//! so quantifying over all positive radii reduces to the realized distances
//! of both spaces plus the midpoints between consecutive values.

use thiserror::Error;

use crate::exact::exact_sum;
use crate::quotient::Quotient;
use crate::space::Space;
use crate::transport::{wasserstein, Measure, TransportError, MEASURE_TOL};

#[derive(Debug, Error)]
pub enum FoliationError {
    #[error("map has {got} entries, expected {expected}")]
    MapLengthMismatch { expected: usize, got: usize },

    #[error("map value {value} at point {point} is outside the target space")]
    MapValueOutOfRange { point: usize, value: usize },

    #[error("map misses target point {point}")]
    NotSurjective { point: usize },

    #[error("point {point} appears in {count} leaves, expected exactly one")]
    NotAPartition { point: usize, count: usize },

    #[error("leaf {leaf} is empty")]
    EmptyLeaf { leaf: usize },

    #[error("expected {expected} conditionals, got {got}")]
    ConditionalCountMismatch { expected: usize, got: usize },

    #[error("conditional of leaf {leaf} puts mass {mass} on point {point} outside the leaf")]
    ConditionalNotSupported { leaf: usize, point: usize, mass: f64 },

    #[error("conditional of leaf {leaf} sums to {sum}, expected 1")]
    ConditionalNotProbability { leaf: usize, sum: f64 },

    #[error("conditionals are required for this check but absent")]
    MissingConditionals,

    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// A partition of a space into nonempty leaves, optionally carrying one
/// probability measure per leaf supported on that leaf.
#[derive(Debug, Clone)]
pub struct LeafPartition {
    space: Space,
    leaves: Vec<Vec<usize>>,
    leaf_of: Vec<usize>,
    conditionals: Option<Vec<Vec<f64>>>,
}

impl LeafPartition {
    pub fn new(
        space: &Space,
        leaves: Vec<Vec<usize>>,
        conditionals: Option<Vec<Vec<f64>>>,
    ) -> Result<Self, FoliationError> {
        let n = space.len();
        let mut count = vec![0usize; n];
        for (li, leaf) in leaves.iter().enumerate() {
            if leaf.is_empty() {
                return Err(FoliationError::EmptyLeaf { leaf: li });
            }
            for &x in leaf {
                if x >= n {
                    return Err(FoliationError::MapValueOutOfRange { point: x, value: x });
                }
                count[x] += 1;
            }
        }
        if let Some(point) = (0..n).find(|&x| count[x] != 1) {
            return Err(FoliationError::NotAPartition { point, count: count[point] });
        }
        let mut leaf_of = vec![0usize; n];
        for (li, leaf) in leaves.iter().enumerate() {
            for &x in leaf {
                leaf_of[x] = li;
            }
        }
        if let Some(cond) = &conditionals {
            if cond.len() != leaves.len() {
                return Err(FoliationError::ConditionalCountMismatch {
                    expected: leaves.len(),
                    got: cond.len(),
                });
            }
            for (li, weights) in cond.iter().enumerate() {
                if weights.len() != n {
                    return Err(FoliationError::MapLengthMismatch { expected: n, got: weights.len() });
                }
                for (x, &w) in weights.iter().enumerate() {
                    if w != 0.0 && leaf_of[x] != li {
                        return Err(FoliationError::ConditionalNotSupported { leaf: li, point: x, mass: w });
                    }
                }
                let sum = exact_sum(weights);
                if (sum - 1.0).abs() > MEASURE_TOL {
                    return Err(FoliationError::ConditionalNotProbability { leaf: li, sum });
                }
            }
        }
        Ok(Self { space: space.clone(), leaves, leaf_of, conditionals })
    }

    /// Orbit leaves of a quotient with the canonical mass-ratio
    /// conditionals (uniform on each fiber when masses are orbit-constant).
    pub fn from_quotient(q: &Quotient) -> Self {
        let dis = q.disintegration();
        Self::new(q.base(), q.orbits().to_vec(), Some(dis.families().to_vec()))
            .expect("quotient disintegration is a valid conditional family")
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn leaves(&self) -> &[Vec<usize>] {
        &self.leaves
    }

    pub fn leaf_of(&self, point: usize) -> usize {
        self.leaf_of[point]
    }

    pub fn conditionals(&self) -> Option<&[Vec<f64>]> {
        self.conditionals.as_deref()
    }

    /// Minimum distance between two leaves.
    fn leaf_distance(&self, a: usize, b: usize) -> f64 {
        let mut best = f64::INFINITY;
        for &x in &self.leaves[a] {
            for &y in &self.leaves[b] {
                best = best.min(self.space.dist(x, y));
            }
        }
        best
    }
}

/// Failed ball equality: around `point`, at radius `radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubmetryWitness {
    pub point: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SubmetryReport {
    pub pass: bool,
    pub witness: Option<SubmetryWitness>,
}

/// Decide whether `map` (a total point map from `source` onto `target`)
/// sends every closed ball onto the closed ball of equal radius.
pub fn check_submetry(
    source: &Space,
    target: &Space,
    map: &[usize],
) -> Result<SubmetryReport, FoliationError> {
    let n = source.len();
    let m = target.len();
    if map.len() != n {
        return Err(FoliationError::MapLengthMismatch { expected: n, got: map.len() });
    }
    let mut hit = vec![false; m];
    for (point, &v) in map.iter().enumerate() {
        if v >= m {
            return Err(FoliationError::MapValueOutOfRange { point, value: v });
        }
        hit[v] = true;
    }
    if let Some(point) = (0..m).find(|&v| !hit[v]) {
        return Err(FoliationError::NotSurjective { point });
    }

    // All radii at which either side's ball can change, plus midpoints to
    // probe the open intervals in between.
    let mut radii: Vec<f64> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            radii.push(source.dist(i, j));
        }
    }
    for i in 0..m {
        for j in 0..m {
            radii.push(target.dist(i, j));
        }
    }
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    for k in 1..radii.len() {
        radii.push(0.5 * (radii[k - 1] + radii[k]));
    }
    radii.sort_by(f64::total_cmp);
    radii.dedup();

    for x in 0..n {
        for &r in &radii {
            let mut image = vec![false; m];
            for y in 0..n {
                if source.dist(x, y) <= r {
                    image[map[y]] = true;
                }
            }
            for v in 0..m {
                let in_ball = target.dist(map[x], v) <= r;
                if image[v] != in_ball {
                    return Ok(SubmetryReport {
                        pass: false,
                        witness: Some(SubmetryWitness { point: x, radius: r }),
                    });
                }
            }
        }
    }
    Ok(SubmetryReport { pass: true, witness: None })
}

/// Representative dependence found: `d(x, leaf_b)` differs from the leaf
/// distance for `x` in `leaf_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoliationWitness {
    pub leaf_a: usize,
    pub leaf_b: usize,
    pub point: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct FoliationReport {
    pub pass: bool,
    pub witness: Option<FoliationWitness>,
}

/// Decide whether the partition is a metric foliation: the distance from a
/// point to another leaf must not depend on the representative. Distances
/// are minima of table entries, so the comparison is exact.
pub fn check_metric_foliation(part: &LeafPartition) -> FoliationReport {
    let k = part.leaves.len();
    for a in 0..k {
        for b in 0..k {
            if a == b {
                continue;
            }
            let reference = part.leaf_distance(a, b);
            for &x in &part.leaves[a] {
                let mut from_x = f64::INFINITY;
                for &y in &part.leaves[b] {
                    from_x = from_x.min(part.space.dist(x, y));
                }
                if from_x != reference {
                    return FoliationReport {
                        pass: false,
                        witness: Some(FoliationWitness { leaf_a: a, leaf_b: b, point: x }),
                    };
                }
            }
        }
    }
    FoliationReport { pass: true, witness: None }
}

#[derive(Debug, Clone, Copy)]
pub struct MmFoliationReport {
    pub pass: bool,
    /// Largest |W_p(conditionals) - leaf distance| over leaf pairs.
    pub max_deviation: f64,
    /// Leaf pair attaining the largest deviation.
    pub worst_pair: Option<(usize, usize)>,
}

/// Decide whether the partition with its conditionals is a metric measure
/// foliation: for every leaf pair, the p-Wasserstein distance between the
/// conditional measures must equal the leaf distance within `tol`.
pub fn check_mm_foliation(
    part: &LeafPartition,
    p: f64,
    tol: f64,
) -> Result<MmFoliationReport, FoliationError> {
    let cond = part.conditionals().ok_or(FoliationError::MissingConditionals)?;
    let measures: Vec<Measure> = cond
        .iter()
        .map(|w| Measure::new(w.clone()))
        .collect::<Result<_, _>>()?;
    let k = part.leaves.len();
    let mut max_deviation = 0.0f64;
    let mut worst_pair = None;
    for a in 0..k {
        for b in (a + 1)..k {
            let sol = wasserstein(&part.space, &measures[a], &measures[b], p)?;
            let deviation = (sol.value - part.leaf_distance(a, b)).abs();
            if deviation > max_deviation {
                max_deviation = deviation;
                worst_pair = Some((a, b));
            }
        }
    }
    Ok(MmFoliationReport { pass: max_deviation <= tol, max_deviation, worst_pair })
}
