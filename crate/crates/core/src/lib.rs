//! Barycentric decompositions in truncated sequence spaces, convex hulls of
//! functions, μ-compactness certificates, midpoint-stability tools and
//! convex-roof entanglement monotones.

pub mod hull;
pub mod lp;
pub mod measures;
pub mod mucert;
pub mod quantum;
pub mod spaces;
pub mod stability;
