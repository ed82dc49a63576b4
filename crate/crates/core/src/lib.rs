//! Exact and perturbative subdynamics of a two-qubit exchange gate coupled
//! to a bosonic bath, with gate-timing corrections and decoherence-free
//! subspace diagnostics.
//!
//! Every per-label quantity can be cross-checked against [`oracle`], which
//! diagonalises the full Hamiltonian densely.

pub mod dfcheck;
pub mod error;
pub mod exec;
pub mod gates;
pub mod model;
pub mod operator;
pub mod oracle;
pub mod subdyn;
pub mod tolerances;

pub use error::{Result, SkeError};
pub use exec::Execution;
pub use model::{
    build_hamiltonians, build_hamiltonians_with_j, split_by_basis, unperturbed_basis,
    unperturbed_basis_with_j, BathMode, CompositeIndex, CouplingKind, Hamiltonians, JProfile,
    JSegment, ModelConfig, UnperturbedBasis,
};
pub use operator::{OperatorMatrix, SpectralDecomposition, C64};
pub use oracle::{exact_eigensystem, EigenSystem};
pub use subdyn::{Order, SubdynSet, Subdynamics};
pub use tolerances::Tolerances;
