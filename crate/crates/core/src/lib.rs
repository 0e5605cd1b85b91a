//! Exact propagation, parallel-transport eigenframes and adiabaticity
//! diagnostics for finite-dimensional time-dependent Hamiltonians.

pub mod diagnostics;
pub mod error;
pub mod gauge;
pub mod grid;
pub mod hamiltonian;
pub mod identities;
pub mod linalg;
pub mod models;
pub mod propagator;
pub mod scenario;

pub use error::{Error, Result};
pub use grid::Grid;
pub use hamiltonian::{dual_of, generator_of, negate, transform, HamiltonianPath, UnitaryPath};
pub use linalg::{herm_eig, unitary_exp, ComplexMatrix, ComplexVector, HermEig, Tolerances, C64};
pub use models::{DrivenTwoLevel, SpinHalf};
pub use propagator::{propagate, propagate_adaptive, PropagationResult};
pub use gauge::{couplings, CouplingRoute, EigenFrame, FrameOptions};
pub use diagnostics::{classify, ClassifierSample, Classification, DiagnosticsReport, Thresholds};
pub use scenario::{GridSpec, Scenario, SystemKind};
pub use identities::{verify_all, IdentityCheck, VerifyOptions};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
