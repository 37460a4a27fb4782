//! Finite group actions by measure-preserving isometries.
//!
//! A group is handed to us as a list of generating permutations of the point
//! set; we close it under composition, verify that every element preserves
//! both the distance table and the masses (exact comparisons: invariance is a
//! structural property of the tables, not a numerical one), and precompute the
//! orbit partition. Haar measure on a finite group is the uniform measure, so
//! group averages reduce to orbit averages throughout.

use std::collections::HashMap;

use thiserror::Error;

use crate::perm::Perm;
use crate::space::Space;

/// Upper bound on the closure size before we give up. 10 080 = |S7| * 2 is
/// far beyond anything the desk-scale tooling needs.
pub const DEFAULT_CLOSURE_CAP: usize = 10_080;

#[derive(Debug, Error, PartialEq)]
pub enum ActionError {
    #[error("generator {generator} has degree {got}, space has {expected} points")]
    DegreeMismatch { generator: usize, got: usize, expected: usize },

    #[error("generator {generator} is not an isometry: d({i},{j}) != d(g{i},g{j})")]
    NotIsometry { generator: usize, i: usize, j: usize },

    #[error("generator {generator} does not preserve the measure at point {point}")]
    NotMeasurePreserving { generator: usize, point: usize },

    #[error("group closure exceeded the cap of {cap} elements")]
    ClosureExceedsCap { cap: usize },
}

/// A closed group of measure-preserving isometric permutations, together with
/// its orbit partition on the underlying space.
#[derive(Debug, Clone)]
pub struct Action {
    elements: Vec<Perm>,
    generators: Vec<Perm>,
    orbits: Vec<Vec<usize>>,
    orbit_of: Vec<usize>,
}

impl Action {
    /// Close the generators into a group and validate every element against
    /// the space. Generator validation suffices for invariance (compositions
    /// of isometries are isometries), but elements are still produced through
    /// an explicit breadth-first closure so the group structure is available.
    pub fn build(space: &Space, generators: Vec<Perm>, cap: Option<usize>) -> Result<Self, ActionError> {
        let n = space.len();
        for (gi, g) in generators.iter().enumerate() {
            if g.len() != n {
                return Err(ActionError::DegreeMismatch { generator: gi, got: g.len(), expected: n });
            }
            for i in 0..n {
                if space.mass(g.apply(i)) != space.mass(i) {
                    return Err(ActionError::NotMeasurePreserving { generator: gi, point: i });
                }
                for j in 0..n {
                    if space.dist(g.apply(i), g.apply(j)) != space.dist(i, j) {
                        return Err(ActionError::NotIsometry { generator: gi, i, j });
                    }
                }
            }
        }
        Self::close(n, generators, cap)
    }

    /// Close the generators into a group without checking them against any
    /// space. For structures whose invariance notion is not metric (weighted
    /// graphs, Markov kernels), the owning module validates preservation of
    /// its own data; generator-level checks suffice there because the
    /// preserved quantities are closed under composition.
    pub fn close(degree: usize, generators: Vec<Perm>, cap: Option<usize>) -> Result<Self, ActionError> {
        let n = degree;
        let cap = cap.unwrap_or(DEFAULT_CLOSURE_CAP);
        for (gi, g) in generators.iter().enumerate() {
            if g.len() != n {
                return Err(ActionError::DegreeMismatch { generator: gi, got: g.len(), expected: n });
            }
        }

        let mut elements = vec![Perm::identity(n)];
        let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
        seen.insert(elements[0].image().to_vec(), 0);
        let mut frontier = 0;
        while frontier < elements.len() {
            let current = elements[frontier].clone();
            for g in &generators {
                let next = current.then(g);
                if !seen.contains_key(next.image()) {
                    if elements.len() == cap {
                        return Err(ActionError::ClosureExceedsCap { cap });
                    }
                    seen.insert(next.image().to_vec(), elements.len());
                    elements.push(next);
                }
            }
            frontier += 1;
        }
        // Canonical element order: lexicographic on images, identity first.
        elements.sort();

        let mut orbit_of = vec![usize::MAX; n];
        let mut orbits: Vec<Vec<usize>> = Vec::new();
        for start in 0..n {
            if orbit_of[start] != usize::MAX {
                continue;
            }
            let id = orbits.len();
            let mut orbit: Vec<usize> = elements.iter().map(|g| g.apply(start)).collect();
            orbit.sort_unstable();
            orbit.dedup();
            for &p in &orbit {
                orbit_of[p] = id;
            }
            orbits.push(orbit);
        }

        Ok(Self { elements, generators, orbits, orbit_of })
    }

    /// The trivial group on `n` points.
    pub fn trivial(space: &Space) -> Self {
        Action::build(space, Vec::new(), None).expect("empty generator set is always valid")
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn generators(&self) -> &[Perm] {
        &self.generators
    }

    pub fn degree(&self) -> usize {
        self.elements[0].len()
    }

    /// Orbits sorted internally and listed by their smallest point.
    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    pub fn orbit_index(&self, point: usize) -> usize {
        self.orbit_of[point]
    }

    pub fn orbit_of(&self, point: usize) -> &[usize] {
        &self.orbits[self.orbit_of[point]]
    }

    /// Indices (into `elements`) of the stabilizer subgroup of a point.
    pub fn stabilizer(&self, point: usize) -> Vec<usize> {
        self.elements
            .iter()
            .enumerate()
            .filter(|(_, g)| g.apply(point) == point)
            .map(|(i, _)| i)
            .collect()
    }

    /// An action is effective when only the identity fixes every point. For a
    /// group stored as permutations this can only fail degenerately, but the
    /// check is kept so callers can surface a warning.
    pub fn is_effective(&self) -> bool {
        self.elements
            .iter()
            .filter(|g| g.is_identity())
            .count()
            == 1
            && self.elements.iter().all(|g| g.is_identity() || !g.image().iter().enumerate().all(|(i, &v)| i == v))
    }

    fn element_index(&self) -> HashMap<&[usize], usize> {
        self.elements
            .iter()
            .enumerate()
            .map(|(i, g)| (g.image(), i))
            .collect()
    }

    /// Conjugate a subgroup (given by element indices) by element `g`.
    fn conjugate(&self, subgroup: &[usize], g: usize, index: &HashMap<&[usize], usize>) -> Vec<usize> {
        let g_perm = &self.elements[g];
        let g_inv = g_perm.inverse();
        let mut out: Vec<usize> = subgroup
            .iter()
            .map(|&h| {
                let conj = g_inv.then(&self.elements[h]).then(g_perm);
                *index.get(conj.image()).expect("group is closed")
            })
            .collect();
        out.sort_unstable();
        out
    }
}

/// One isotropy class of an orbit census: all points whose stabilizers are
/// conjugate, with the shared stabilizer order and the fraction of total mass
/// they carry.
#[derive(Debug, Clone)]
pub struct IsotropyClass {
    pub order: usize,
    pub points: Vec<usize>,
    pub mass_fraction: f64,
}

/// Summary of the isotropy structure of an action.
#[derive(Debug, Clone)]
pub struct OrbitCensus {
    /// Stabilizer order per point.
    pub isotropy_order: Vec<usize>,
    /// Points grouped by conjugacy class of their stabilizer, ordered by
    /// smallest member point.
    pub classes: Vec<IsotropyClass>,
    /// Index into `classes` of the candidate principal class: minimal
    /// isotropy order, ties broken by larger mass fraction, then by smaller
    /// representative point. Descriptive only; finite spaces need not have a
    /// unique principal stratum.
    pub principal: usize,
}

/// Group points by conjugacy class of their isotropy subgroup and identify
/// the candidate principal class.
pub fn orbit_census(space: &Space, action: &Action) -> OrbitCensus {
    let n = space.len();
    let index = action.element_index();
    let stabilizers: Vec<Vec<usize>> = (0..n).map(|p| action.stabilizer(p)).collect();

    // classes[c] = (canonical stabilizer set, points)
    let mut classes: Vec<(Vec<Vec<usize>>, Vec<usize>)> = Vec::new();
    'points: for p in 0..n {
        for (reps, points) in classes.iter_mut() {
            if reps.iter().any(|r| r == &stabilizers[p]) {
                points.push(p);
                continue 'points;
            }
        }
        // All conjugates of this stabilizer define the new class.
        let mut conjugates: Vec<Vec<usize>> = (0..action.order())
            .map(|g| action.conjugate(&stabilizers[p], g, &index))
            .collect();
        conjugates.sort();
        conjugates.dedup();
        classes.push((conjugates, vec![p]));
    }

    let total = space.total_mass();
    let classes: Vec<IsotropyClass> = classes
        .into_iter()
        .map(|(_, points)| {
            let mass: f64 = crate::exact::exact_sum(&points.iter().map(|&p| space.mass(p)).collect::<Vec<_>>());
            IsotropyClass {
                order: stabilizers[points[0]].len(),
                mass_fraction: mass / total,
                points,
            }
        })
        .collect();

    let mut principal = 0;
    for (c, class) in classes.iter().enumerate().skip(1) {
        let best = &classes[principal];
        let better = class.order < best.order
            || (class.order == best.order && class.mass_fraction > best.mass_fraction)
            || (class.order == best.order
                && class.mass_fraction == best.mass_fraction
                && class.points[0] < best.points[0]);
        if better {
            principal = c;
        }
    }

    OrbitCensus {
        isotropy_order: (0..n).map(|p| stabilizers[p].len()).collect(),
        classes,
        principal,
    }
}
