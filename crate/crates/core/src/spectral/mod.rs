//! Principal eigenpairs, elliptic and transport resolvents, characteristic roots.

mod charroot;
mod eigen;
mod elliptic;
mod resolvent;

pub use charroot::{char_root_ttb, char_root_vintage, CharRoot, GROWTH_ASSUMPTION};
pub use eigen::{principal_eigenpair, EigenPair, DEFAULT_EIGEN_TOL};
pub use elliptic::solve_elliptic;
pub use resolvent::{age_cutoff, transport_resolvent};
