//! Metric measure quotients by finite isometric actions.
//!
//! The quotient of a finite metric measure space by a measure-preserving
//! isometric action carries the orbit-minimum metric
//! `d*(x*, y*) = min { d(u, v) : u in orbit(x), v in orbit(y) }`
//! and the pushforward measure (fiber sums of masses). Both are computed from
//! the original tables, so quotient distances are bit-identical copies of base
//! distances and quotient masses are exactly rounded fiber sums.

use thiserror::Error;

use crate::exact::{exact_sum, ExactSum};
use crate::group::Action;
use crate::space::Space;

#[derive(Debug, Error, PartialEq)]
pub enum DisintegrationError {
    #[error("family {family} has length {got}, expected {expected}")]
    BadFamilyShape { family: usize, got: usize, expected: usize },

    #[error("family {family} puts weight {weight} on point {point} outside its fiber")]
    OffFiberWeight { family: usize, point: usize, weight: f64 },

    #[error("family {family} has total weight {total}, expected 1")]
    NotProbability { family: usize, total: f64 },

    #[error("reconstruction mismatch at point {point}: got {got}, expected {expected}")]
    Reconstruction { point: usize, got: f64, expected: f64 },
}

/// A quotient space together with the projection data that produced it.
#[derive(Debug, Clone)]
pub struct Quotient {
    base: Space,
    action: Action,
    space: Space,
}

impl Quotient {
    /// Quotient a space by a validated action on it.
    pub fn new(base: &Space, action: &Action) -> Self {
        let orbits = action.orbits();
        let k = orbits.len();
        let labels: Vec<String> = orbits
            .iter()
            .map(|o| base.label(o[0]).to_string())
            .collect();
        let mut dist = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in (a + 1)..k {
                let mut best = f64::INFINITY;
                for &u in &orbits[a] {
                    for &v in &orbits[b] {
                        let d = base.dist(u, v);
                        if d < best {
                            best = d;
                        }
                    }
                }
                dist[a][b] = best;
                dist[b][a] = best;
            }
        }
        let mass: Vec<f64> = orbits
            .iter()
            .map(|o| exact_sum(&o.iter().map(|&p| base.mass(p)).collect::<Vec<_>>()))
            .collect();
        // The orbit-minimum distance of an isometric action is again a
        // metric; a failure here means the action validation was bypassed.
        let space = Space::new(labels, dist, mass)
            .expect("orbit-minimum metric of an isometric action must be a metric");
        Self { base: base.clone(), action: action.clone(), space }
    }

    pub fn base(&self) -> &Space {
        &self.base
    }

    pub fn action(&self) -> &Action {
        &self.action
    }

    /// The quotient metric measure space.
    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn orbits(&self) -> &[Vec<usize>] {
        self.action.orbits()
    }

    /// Projection of a base point to its orbit index.
    #[inline]
    pub fn project(&self, point: usize) -> usize {
        self.action.orbit_index(point)
    }

    /// Fiber of a quotient point.
    pub fn fiber(&self, class: usize) -> &[usize] {
        &self.action.orbits()[class]
    }

    /// The pair `(u, v)` realizes the quotient distance between its classes.
    pub fn pair_realizes_quotient_distance(&self, u: usize, v: usize) -> bool {
        self.base.dist(u, v) == self.space.dist(self.project(u), self.project(v))
    }

    /// The canonical disintegration of the base measure over the projection:
    /// conditional weight `m(x) / m*(x*)` on each fiber point.
    pub fn disintegration(&self) -> Disintegration {
        let families = self
            .orbits()
            .iter()
            .enumerate()
            .map(|(c, orbit)| {
                let mut row = vec![0.0; self.base.len()];
                for &p in orbit {
                    row[p] = self.base.mass(p) / self.space.mass(c);
                }
                row
            })
            .collect();
        Disintegration {
            families,
            quotient_masses: self.space.masses().to_vec(),
            fibers: self.orbits().to_vec(),
        }
    }
}

/// A disintegration of a measure over a partition: one probability measure
/// per fiber, weighted by the quotient masses, reconstructing the base
/// measure.
#[derive(Debug, Clone)]
pub struct Disintegration {
    families: Vec<Vec<f64>>,
    quotient_masses: Vec<f64>,
    fibers: Vec<Vec<usize>>,
}

impl Disintegration {
    /// Validate an explicit disintegration against base masses.
    ///
    /// Each family must be a probability vector supported on its fiber, and
    /// mixing the families by the quotient masses must reproduce the base
    /// masses (relative tolerance `1e-12`; the mixture is accumulated
    /// exactly, the slack only covers rounding of the stored inputs).
    pub fn new(
        families: Vec<Vec<f64>>,
        quotient_masses: Vec<f64>,
        fibers: Vec<Vec<usize>>,
        base_masses: &[f64],
    ) -> Result<Self, DisintegrationError> {
        let n = base_masses.len();
        for (fi, family) in families.iter().enumerate() {
            if family.len() != n {
                return Err(DisintegrationError::BadFamilyShape {
                    family: fi,
                    got: family.len(),
                    expected: n,
                });
            }
            for (p, &w) in family.iter().enumerate() {
                if w != 0.0 && !fibers[fi].contains(&p) {
                    return Err(DisintegrationError::OffFiberWeight { family: fi, point: p, weight: w });
                }
            }
            let total = exact_sum(family);
            if (total - 1.0).abs() > 1e-12 {
                return Err(DisintegrationError::NotProbability { family: fi, total });
            }
        }
        for p in 0..n {
            let mut acc = ExactSum::new();
            for (fi, family) in families.iter().enumerate() {
                acc.add_prod(quotient_masses[fi], family[p]);
            }
            let got = acc.value();
            let expected = base_masses[p];
            if (got - expected).abs() > 1e-12 * expected.abs().max(1.0) {
                return Err(DisintegrationError::Reconstruction { point: p, got, expected });
            }
        }
        Ok(Self { families, quotient_masses, fibers })
    }

    pub fn families(&self) -> &[Vec<f64>] {
        &self.families
    }

    pub fn family(&self, class: usize) -> &[f64] {
        &self.families[class]
    }

    pub fn quotient_masses(&self) -> &[f64] {
        &self.quotient_masses
    }

    pub fn fibers(&self) -> &[Vec<usize>] {
        &self.fibers
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::Perm;

    fn cycle4() -> (Space, Action) {
        let d = vec![
            vec![0.0, 1.0, 2.0, 1.0],
            vec![1.0, 0.0, 1.0, 2.0],
            vec![2.0, 1.0, 0.0, 1.0],
            vec![1.0, 2.0, 1.0, 0.0],
        ];
        let space = Space::with_default_labels(d, vec![1.0; 4]).unwrap();
        let half_turn = Perm::from_cycles(4, &[vec![0, 2], vec![1, 3]]).unwrap();
        let action = Action::build(&space, vec![half_turn], None).unwrap();
        (space, action)
    }

    #[test]
    fn half_turn_quotient_of_the_4_cycle() {
        let (space, action) = cycle4();
        let q = Quotient::new(&space, &action);
        assert_eq!(q.space().len(), 2);
        assert_eq!(q.space().dist(0, 1), 1.0);
        assert_eq!(q.space().mass(0), 2.0);
        assert_eq!(q.space().mass(1), 2.0);
        assert_eq!(q.project(2), 0);
        assert!(q.pair_realizes_quotient_distance(0, 1));
        // d(0,2) = 2 but d*(0*,0*) = 0: not a realizing pair.
        assert!(!q.pair_realizes_quotient_distance(0, 2));
    }

    #[test]
    fn quotient_mass_totals_match_the_base_exactly() {
        let (space, action) = cycle4();
        let q = Quotient::new(&space, &action);
        assert_eq!(q.space().total_mass(), space.total_mass());
    }

    #[test]
    fn canonical_disintegration_validates_and_reconstructs() {
        let (space, action) = cycle4();
        let q = Quotient::new(&space, &action);
        let dis = q.disintegration();
        let rebuilt = Disintegration::new(
            dis.families().to_vec(),
            dis.quotient_masses().to_vec(),
            dis.fibers().to_vec(),
            space.masses(),
        );
        assert!(rebuilt.is_ok());
        assert_eq!(dis.family(0)[0], 0.5);
        assert_eq!(dis.family(0)[1], 0.0);
    }

    #[test]
    fn off_fiber_weight_is_rejected() {
        let (space, action) = cycle4();
        let q = Quotient::new(&space, &action);
        let mut families = q.disintegration().families().to_vec();
        families[0] = vec![0.5, 0.5, 0.0, 0.0];
        let err = Disintegration::new(
            families,
            q.space().masses().to_vec(),
            q.orbits().to_vec(),
            space.masses(),
        )
        .unwrap_err();
        assert!(matches!(err, DisintegrationError::OffFiberWeight { family: 0, point: 1, .. }));
    }
}
