//! Default numerical thresholds, kept in one table so reports can echo them.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Hermiticity check for freshly built Hamiltonians.
    pub hermitian: f64,
    /// Hermiticity precondition for the oracle.
    pub oracle_hermitian: f64,
    /// Singular values below `pinv_rel * ||M||` are dropped in the Q-space resolvent.
    pub pinv_rel: f64,
    /// Weight of `Q H P φ` allowed on a dropped resolvent direction.
    pub resolvent_weight: f64,
    /// Relative E⁰ gap below which two labels are degenerate partners.
    pub degeneracy_rel: f64,
    /// Absolute eigenvalue gap grouping oracle clusters.
    pub cluster_gap: f64,
    /// Imaginary part of an exact shift that triggers a warning.
    pub imag_warning: f64,
    /// Smallest |1 + <φ|DC|φ>| accepted as invertible.
    pub normalization_min: f64,
    /// Negative eigenvalues above `-fidelity_clamp` are clamped to zero.
    pub fidelity_clamp: f64,
    /// Eigenvalues below `-fidelity_invalid` reject the state.
    pub fidelity_invalid: f64,
    /// Allowed spread of per-ν Δt before a uniform Δt is withheld.
    pub uniform_shift: f64,
    /// Relative determinant threshold for a triangulating transform.
    pub triangular_det: f64,
    /// Minimum overlap for unambiguous eigenvector matching.
    pub matching_overlap: f64,
    /// `|Σ_k …|` below which the bath DF constraint counts as satisfied.
    pub df_constraint: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            oracle_hermitian: 1e-10,
            pinv_rel: 1e-10,
            resolvent_weight: 1e-8,
            degeneracy_rel: 1e-9,
            cluster_gap: 1e-9,
            imag_warning: 1e-8,
            normalization_min: 1e-12,
            fidelity_clamp: 1e-12,
            fidelity_invalid: 1e-9,
            uniform_shift: 1e-10,
            triangular_det: 1e-12,
            matching_overlap: 0.5,
            df_constraint: 1e-12,
        }
    }
}

/// Default cap on the composite Hilbert-space dimension.
pub const DEFAULT_MAX_DIM: usize = 4096;
