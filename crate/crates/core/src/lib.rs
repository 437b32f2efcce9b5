//! Construction, enumeration, exact diagonalization and entanglement analysis of a
//! family of translationally invariant 1D Hamiltonians built from two-site
//! transition rules and illegal-pair penalties.

pub mod configspace;
pub mod entanglement;
pub mod error;
pub mod hamiltonian;
pub mod model;
pub mod ruleset;
pub mod rulespec;
pub mod spectral;
pub mod symbol;
pub mod transition;

pub use configspace::{
    enumerate_chain_basis, enumerate_cycle_basis, BasisIndex, BasisState, ChainFilter, Configuration, Layout,
    Params, Region, Segment, Topology,
};
pub use entanglement::{
    construct_cycle_state, construct_phi_g, construct_phi_x, entropy, entropy_sweep, pair_sectors, reduced_density,
    CycleState, DensityMatrix, EntropyReport, SectorReport, StateVector,
};
pub use error::{Error, Result};
pub use hamiltonian::{assemble_chain, assemble_cycle, build_term, ChainVariant, OperatorWeights, SparseOperator, TermKind};
pub use model::Model;
pub use ruleset::{
    builtin_chain_ruleset, builtin_cycle_ruleset, unguarded_chain_ruleset, unguarded_cycle_ruleset, RuleSet,
};
pub use rulespec::{parse_ruleset, print_ruleset};
pub use spectral::{lowest_eigenpairs, null_space_dimension, spectral_gap, SolverConfig, SpectralResult};
pub use symbol::{SiteState, Tag};
pub use transition::{classify_path, extract_path, Path, PathClass, Potential};
