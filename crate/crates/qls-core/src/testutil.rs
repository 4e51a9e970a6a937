//! Shared fixtures for unit tests: the four worked example bases.

use crate::lattice::Basis;

pub(crate) fn rho_default() -> f64 {
    2f64.sqrt() - 1.0
}

/// Single mode on Z, b = 1.
pub(crate) fn t1() -> Basis {
    Basis::new(vec![vec![1]], rho_default()).unwrap()
}

/// Standard pair in Z^2; no nontrivial resonances.
pub(crate) fn t2() -> Basis {
    Basis::new(vec![vec![1, 0], vec![0, 1]], rho_default()).unwrap()
}

/// Skew triple in Z^3 carrying the resonant mode (1,1,-1).
pub(crate) fn t3() -> Basis {
    Basis::new(
        vec![vec![1, 0, 1], vec![0, 1, 1], vec![0, 0, 1]],
        rho_default(),
    )
    .unwrap()
}

/// Standard basis of Z^3; equal norms, orthogonal.
pub(crate) fn t4() -> Basis {
    Basis::new(
        vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]],
        rho_default(),
    )
    .unwrap()
}
