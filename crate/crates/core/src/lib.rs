//! Optimal transport, curvature bounds, and gradient flows on finite metric
//! measure spaces and their quotients under finite isometry groups.

#![forbid(unsafe_code)]

pub mod distortion;
pub mod equivariant;
pub mod exact;
pub mod foliation;
pub mod flow;
pub mod gen;
pub mod graph;
pub mod group;
pub mod io;
pub mod ollivier;
pub mod perm;
pub mod quotient;
pub mod report;
pub mod space;
pub mod suites;
pub mod transport;
