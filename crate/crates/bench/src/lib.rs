//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use entchain_core::configspace::DEFAULT_BUDGET;
use entchain_core::{enumerate_chain_basis, BasisIndex, ChainFilter, Model};

/// Bracketed well-formed chain basis of length `n`.
pub fn chain_basis(n: usize) -> Arc<BasisIndex> {
    Arc::new(enumerate_chain_basis(Model::chain(), n, ChainFilter::BracketedWellFormed, DEFAULT_BUDGET).expect("chain basis"))
}

/// Deterministic dense test vector of length `dim`.
pub fn ramp(dim: usize) -> Vec<f64> {
    (0..dim).map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.5).collect()
}
