//! Brute-force many-body engine on a truncated Fock space over the lattice modes.

pub mod approx;
pub mod basis;
pub mod excitation;
pub mod krylov;
pub mod operators;
pub mod sparse;
pub mod states;

pub use excitation::ExcitationMap;
pub use basis::{FockBasis, Ladder, Sector, DEFAULT_MEMORY_CAP};
pub use krylov::{expm_multiply, KrylovOptions};
pub use operators::{
    assemble_bogoliubov_h, assemble_dgamma, assemble_hn, assemble_pair_ops, build_fock_space, LadderSet,
};
pub use sparse::CsrMatrix;
pub use states::{
    all_words, build_quasi_free, default_words, extract_density_matrices, factorial_moment, fock_evolve, moment,
    moment_bound_check, moment_constant, product_state, squeezed_vacuum, squeezing_matrix, takagi, wick_defect,
    wick_second_moment, FockGenerator, FockTrajectory, FockVector, QuasiFreeBuild, StaticFockGenerator,
};
