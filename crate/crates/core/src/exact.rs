//! Exactly rounded accumulation of f64 sums and dot products.
//!
//! Every f64 is a dyadic rational, so a finite sum of f64 values is an exact
//! real number; only the final rounding loses information. This module keeps
//! the running sum as a Shewchuk expansion (a list of non-overlapping doubles
//! whose exact sum is the accumulated value), which makes two properties hold
//! that plain `fold(+)` does not have:
//!
//! - the result is independent of summation order, and
//! - if two accumulated expressions are equal *as real numbers*, their
//!   accumulated difference comes out exactly `0.0`.
//!
//! The second property is what lets structural identities (a quotient-side sum
//! versus the same terms regrouped on a covering space) be checked with zero
//! tolerance instead of an arbitrary epsilon.
//!
//! Reference: Shewchuk (1997), "Adaptive precision floating-point arithmetic
//! and fast robust geometric predicates".

/// Error-free transformation of `a + b`.
///
/// Returns `(s, e)` with `s = fl(a+b)` and `s + e = a + b` exactly.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bv = s - a;
    let av = s - bv;
    let br = b - bv;
    let ar = a - av;
    (s, ar + br)
}

/// Error-free transformation of `a * b` via fused multiply-add.
///
/// Returns `(p, e)` with `p = fl(a*b)` and `p + e = a * b` exactly.
#[inline]
fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// Running sum held as an expansion of non-overlapping components.
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    components: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a term. The expansion afterwards represents the previous value
    /// plus `x` exactly.
    pub fn add(&mut self, x: f64) {
        let mut q = x;
        let mut out = Vec::with_capacity(self.components.len() + 1);
        for &c in &self.components {
            let (s, e) = two_sum(q, c);
            if e != 0.0 {
                out.push(e);
            }
            q = s;
        }
        if q != 0.0 || out.is_empty() {
            out.push(q);
        }
        self.components = out;
    }

    /// Add the product `a * b` without rounding it first.
    pub fn add_prod(&mut self, a: f64, b: f64) {
        let (p, e) = two_product(a, b);
        self.add(e);
        self.add(p);
    }

    /// Add the product `a * b * c` without rounding. Splitting `a * b` into
    /// its rounded value and error term reduces the triple to two exact
    /// two-factor products.
    pub fn add_triple(&mut self, a: f64, b: f64, c: f64) {
        let (p, e) = two_product(a, b);
        self.add_prod(p, c);
        self.add_prod(e, c);
    }

    /// Subtract the product `a * b * c` exactly.
    pub fn sub_triple(&mut self, a: f64, b: f64, c: f64) {
        self.add_triple(-a, b, c);
    }

    /// Subtract a term.
    pub fn sub(&mut self, x: f64) {
        self.add(-x);
    }

    /// Subtract the product `a * b` exactly.
    pub fn sub_prod(&mut self, a: f64, b: f64) {
        let (p, e) = two_product(a, b);
        self.add(-e);
        self.add(-p);
    }

    /// Collapse the expansion to a single f64.
    ///
    /// Components are non-overlapping and stored in increasing magnitude
    /// order, so a left fold reproduces the value to within one rounding; in
    /// particular a zero real value collapses to exactly `0.0`.
    pub fn value(&self) -> f64 {
        self.components.iter().sum()
    }

    /// True when the accumulated value is exactly the real number zero.
    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|&c| c == 0.0)
    }
}

/// Order-independent sum of a slice.
pub fn exact_sum(xs: &[f64]) -> f64 {
    let mut acc = ExactSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Order-independent dot product of two slices.
///
/// Panics if the lengths differ; callers validate shapes upstream.
pub fn exact_dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut acc = ExactSum::new();
    for (&x, &y) in a.iter().zip(b) {
        acc.add_prod(x, y);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_is_order_independent() {
        let xs = [1e16, 1.0, -1e16, 3.5, 1e-9, -3.5];
        let mut fwd = ExactSum::new();
        for &x in &xs {
            fwd.add(x);
        }
        let mut rev = ExactSum::new();
        for &x in xs.iter().rev() {
            rev.add(x);
        }
        assert_eq!(fwd.value(), rev.value());
        assert_eq!(fwd.value(), 1.0 + 1e-9);
    }

    #[test]
    fn cancelling_terms_collapse_to_exact_zero() {
        let mut acc = ExactSum::new();
        // 0.1 + 0.2 != 0.3 in f64, but (a + b) - a - b is exactly zero as a
        // real number, whatever the doubles are.
        for &x in &[0.1, 0.2, 7e-300, -0.2, -7e-300, -0.1] {
            acc.add(x);
        }
        assert!(acc.is_zero());
        assert_eq!(acc.value(), 0.0);
    }

    #[test]
    fn products_are_tracked_exactly() {
        let mut acc = ExactSum::new();
        acc.add_prod(0.1, 0.3);
        acc.sub_prod(0.3, 0.1);
        assert!(acc.is_zero());

        // Splitting a product across a grouped factor is exact:
        // a*(m1+m2) - a*m1 - a*m2 = 0 when m1+m2 is itself exact.
        let (m1, m2) = (0.25, 1.5);
        let a = 0.377;
        let mut acc = ExactSum::new();
        acc.add_prod(a, m1 + m2);
        acc.sub_prod(a, m1);
        acc.sub_prod(a, m2);
        assert!(acc.is_zero());
    }

    #[test]
    fn exact_dot_matches_naive_on_benign_data() {
        let a = [1.0, 2.0, 3.0];
        let b = [0.5, 0.25, 2.0];
        assert_eq!(exact_dot(&a, &b), 7.0);
    }
}
