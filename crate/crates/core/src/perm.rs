//! Permutations of `{0, .., n-1}` in one-line (image) notation.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PermError {
    #[error("permutation image has length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },

    #[error("image is not a bijection: value {value} appears more than once or is out of range")]
    NotBijective { value: usize },
}

/// A permutation stored as its image vector: `p.apply(i) == image[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm {
    image: Vec<usize>,
}

impl Perm {
    /// Validate an image vector of length `n`.
    pub fn new(image: Vec<usize>, n: usize) -> Result<Self, PermError> {
        if image.len() != n {
            return Err(PermError::LengthMismatch {
                got: image.len(),
                expected: n,
            });
        }
        let mut seen = vec![false; n];
        for &v in &image {
            if v >= n || seen[v] {
                return Err(PermError::NotBijective { value: v });
            }
            seen[v] = true;
        }
        Ok(Self { image })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            image: (0..n).collect(),
        }
    }

    /// Build from disjoint-or-not cycles; points not mentioned are fixed.
    pub fn from_cycles(n: usize, cycles: &[Vec<usize>]) -> Result<Self, PermError> {
        let mut image: Vec<usize> = (0..n).collect();
        for c in cycles {
            for (k, &p) in c.iter().enumerate() {
                if p >= n {
                    return Err(PermError::NotBijective { value: p });
                }
                image[p] = c[(k + 1) % c.len()];
            }
        }
        Perm::new(image, n)
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| i == v)
    }

    #[inline]
    pub fn apply(&self, point: usize) -> usize {
        self.image[point]
    }

    /// Composition acting left-to-right on points: `(self.then(g)).apply(x) == g.apply(self.apply(x))`.
    pub fn then(&self, g: &Perm) -> Perm {
        debug_assert_eq!(self.len(), g.len());
        Perm {
            image: self.image.iter().map(|&v| g.apply(v)).collect(),
        }
    }

    pub fn inverse(&self) -> Perm {
        let mut image = vec![0; self.len()];
        for (i, &v) in self.image.iter().enumerate() {
            image[v] = i;
        }
        Perm { image }
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }
}
