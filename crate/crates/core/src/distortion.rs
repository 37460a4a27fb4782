//! Distortion coefficients and entropy-type functionals.
//!
//! The coefficients `sigma` and `tau` are the comparison weights of the
//! curvature-dimension condition CD(K, N) in the sense of Sturm and of
//! Lott-Villani, evaluated on a finite space where the argument `theta` is
//! just a distance. Branch selection is part of the contract: the zero of
//! `K theta^2` always yields the linear weight `t`, the coefficient blows up
//! to `+inf` once `K theta^2` reaches `N pi^2`, and `N = inf` always yields
//! `t` (the limit of both trigonometric branches).
//!
//! Entropy here is relative entropy against the reference mass of the
//! space, with the usual convention `0 log 0 = 0`; the Renyi-type
//! functional is the `integral of rho^(1 - 1/N')` appearing on the left of
//! the CD(K, N') inequality.

use std::f64::consts::PI;

use thiserror::Error;

use crate::exact::ExactSum;
use crate::space::Space;
use crate::transport::Measure;

#[derive(Debug, Error, PartialEq)]
pub enum DistortionError {
    #[error("parameter {name} = {value} is outside its admissible range")]
    BadParameter { name: &'static str, value: f64 },

    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Arguments of a distortion coefficient: curvature `k`, dimension `n`
/// (possibly infinite), interpolation time `t` in [0,1], and distance
/// `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionParams {
    pub k: f64,
    pub n: f64,
    pub t: f64,
    pub theta: f64,
}

impl DistortionParams {
    pub fn new(k: f64, n: f64, t: f64, theta: f64) -> Result<Self, DistortionError> {
        if !k.is_finite() {
            return Err(DistortionError::BadParameter { name: "k", value: k });
        }
        if !(n >= 1.0) {
            return Err(DistortionError::BadParameter { name: "n", value: n });
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(DistortionError::BadParameter { name: "t", value: t });
        }
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(DistortionError::BadParameter { name: "theta", value: theta });
        }
        Ok(Self { k, n, t, theta })
    }
}

/// The raw sigma branch dispatch, also accepting `n = 0` (needed by `tau`,
/// whose definition shifts the dimension down by one).
///
/// Branches, in order of precedence:
/// `k theta^2 = 0` gives `t`; `n = inf` gives `t`; `k theta^2 >= n pi^2`
/// (necessarily with `k theta^2 > 0` here) gives `+inf`; positive
/// subcritical gives the sine quotient; negative with `n = 0` gives `t`;
/// negative with `n > 0` gives the hyperbolic sine quotient.
pub fn sigma_with_dimension(k: f64, n: f64, t: f64, theta: f64) -> f64 {
    let excess = k * theta * theta;
    if excess == 0.0 {
        return t;
    }
    if n.is_infinite() {
        return t;
    }
    if excess > 0.0 {
        if excess >= n * PI * PI {
            return f64::INFINITY;
        }
        let w = theta * (k / n).sqrt();
        return (t * w).sin() / w.sin();
    }
    if n == 0.0 {
        return t;
    }
    let w = theta * (-k / n).sqrt();
    (t * w).sinh() / w.sinh()
}

/// The distortion coefficient `sigma^(t)_(k,n)(theta)`.
pub fn sigma(par: &DistortionParams) -> f64 {
    sigma_with_dimension(par.k, par.n, par.t, par.theta)
}

/// The distortion coefficient
/// `tau^(t)_(k,n)(theta) = t^(1/n) * sigma^(t)_(k,n-1)(theta)^((n-1)/n)`.
///
/// Conventions at the edges: `n = inf` gives `t`; an infinite sigma factor
/// keeps `tau` infinite for `t > 0` even at `n = 1`, where the exponent
/// `(n-1)/n` vanishes; `t = 0` gives `0`.
pub fn tau(par: &DistortionParams) -> f64 {
    let DistortionParams { k, n, t, theta } = *par;
    if n.is_infinite() {
        return t;
    }
    let s = sigma_with_dimension(k, n - 1.0, t, theta);
    if s.is_infinite() {
        return if t == 0.0 { 0.0 } else { f64::INFINITY };
    }
    if n == 1.0 {
        return t;
    }
    t.powf(1.0 / n) * s.powf((n - 1.0) / n)
}

/// Relative entropy of `mu` against the reference mass of the space,
/// `sum of rho log rho d(mass)` for the density `rho = mu / mass`.
/// Zero-mass atoms of `mu` contribute zero.
pub fn entropy(mu: &Measure, space: &Space) -> Result<f64, DistortionError> {
    if mu.len() != space.len() {
        return Err(DistortionError::DimensionMismatch { expected: space.len(), got: mu.len() });
    }
    let mut acc = ExactSum::new();
    for x in 0..space.len() {
        let w = mu.weight(x);
        if w == 0.0 {
            continue;
        }
        let rho = w / space.mass(x);
        acc.add_prod(rho * rho.ln(), space.mass(x));
    }
    Ok(acc.value())
}

/// The functional `sum of rho^(1 - 1/nprime) d(mass)` over the support of
/// `mu`, with `rho = mu / mass`. At `nprime = inf` the exponent is one and
/// the value is the total mass of `mu`.
pub fn renyi_functional(mu: &Measure, space: &Space, nprime: f64) -> Result<f64, DistortionError> {
    if mu.len() != space.len() {
        return Err(DistortionError::DimensionMismatch { expected: space.len(), got: mu.len() });
    }
    if !(nprime >= 1.0) {
        return Err(DistortionError::BadParameter { name: "nprime", value: nprime });
    }
    let exponent = 1.0 - 1.0 / nprime;
    let mut acc = ExactSum::new();
    for x in 0..space.len() {
        let w = mu.weight(x);
        if w == 0.0 {
            continue;
        }
        let rho = w / space.mass(x);
        let val = if exponent == 1.0 {
            rho
        } else if exponent == 0.0 {
            1.0
        } else {
            rho.powf(exponent)
        };
        acc.add_prod(val, space.mass(x));
    }
    Ok(acc.value())
}
