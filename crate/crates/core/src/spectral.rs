//! Lowest eigenpairs of sparse symmetric operators.
//!
//! Operators are split into connected components of their off-diagonal graph.
//! Small components are diagonalized densely; larger ones go through a Lanczos
//! iteration with full reorthogonalization and explicit locking of converged
//! vectors, started from a seeded random vector.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::configspace::{enumerate_segment_basis, BasisState, DEFAULT_BUDGET};
use crate::error::{OperatorError, Result, SpectralError};
use crate::hamiltonian::{assemble_chain, chain_weight_formula, size_term, ChainVariant, SparseOperator};
use crate::model::Model;
use crate::transition::Path;

/// Relative width of the lowest eigenvalue cluster.
pub const CLUSTER_TOLERANCE: f64 = 1e-7;

/// Smallest residual Lanczos is asked to reach, relative to the operator norm.
const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Dense for operators up to `dense_limit`; above that, dense per component
    /// up to `component_dense_limit` and Lanczos for larger components. Components
    /// up to `dense_limit` also go dense when `tol` is below the rounding floor of
    /// the operator norm, where Lanczos residuals cannot reach it.
    Auto,
    Dense,
    /// Lanczos on the whole operator without splitting into components.
    Lanczos,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Residual bound `|Av - lambda v|` for accepted eigenpairs.
    pub tol: f64,
    pub seed: u64,
    pub max_restarts: usize,
    pub krylov_dim: usize,
    pub dense_limit: usize,
    pub component_dense_limit: usize,
    pub method: Method,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            seed: 42,
            max_restarts: 400,
            krylov_dim: 80,
            dense_limit: 2000,
            component_dense_limit: 500,
            method: Method::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralResult {
    /// Lowest eigenvalues in ascending order, with multiplicity.
    pub eigenvalues: Vec<f64>,
    pub lambda0: f64,
    /// Second-lowest eigenvalue counting multiplicity (`NaN` for dimension 1).
    pub lambda1: f64,
    pub gap: f64,
    #[serde(skip)]
    pub vectors: Vec<Vec<f64>>,
    /// Number of returned vectors in the lowest cluster.
    pub degeneracy: usize,
    /// The vectors spanning the lowest cluster.
    #[serde(skip)]
    pub ground_vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Gap above the lowest eigenvalue cluster.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub lambda0: f64,
    /// First eigenvalue above the lowest cluster.
    pub lambda1: f64,
    pub gap: f64,
    pub normalized_gap: f64,
    pub degeneracy: usize,
    pub iterations: usize,
}

/// Connected components of the off-diagonal pattern, each sorted, ordered by smallest index.
pub fn components(op: &SparseOperator) -> Vec<Vec<usize>> {
    let dim = op.dim();
    let mut parent: Vec<usize> = (0..dim).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, j, _) in op.entries() {
        if i < j {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut label = vec![usize::MAX; dim];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in 0..dim {
        let r = find(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = out.len();
            out.push(Vec::new());
        }
        out[label[r]].push(i);
    }
    out
}

/// Operator restricted to `indices` (sorted), with local numbering.
fn restrict(op: &SparseOperator, indices: &[usize]) -> SparseOperator {
    let triplets = indices.iter().enumerate().flat_map(|(a, &i)| {
        let (cols, vals) = op.row(i);
        cols.iter().zip(vals).filter_map(move |(&j, &v)| indices.binary_search(&(j as usize)).ok().map(|b| (a, b, v)))
    });
    SparseOperator::from_triplets(indices.len(), op.kind().to_string(), triplets)
}

struct Partial {
    values: Vec<f64>,
    /// Columns are eigenvectors in the component's local numbering.
    vectors: Option<DMatrix<f64>>,
    iterations: usize,
}

fn dense_solve(m: DMatrix<f64>, k: usize, vectors: bool) -> Partial {
    let k = k.min(m.nrows());
    if !vectors {
        let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values.truncate(k);
        return Partial { values, vectors: None, iterations: 0 };
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(k);
    let values = order.iter().map(|&c| eig.eigenvalues[c]).collect();
    let vecs = DMatrix::from_columns(&order.iter().map(|&c| eig.eigenvectors.column(c).into_owned()).collect::<Vec<_>>());
    Partial { values, vectors: Some(vecs), iterations: 0 }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn orthogonalize_once(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(v, b);
        axpy(-c, b, v);
    }
}

/// Two passes of classical Gram-Schmidt against `basis`.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    orthogonalize_once(v, basis);
    orthogonalize_once(v, basis);
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng, locked: &[Vec<f64>]) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        orthogonalize(&mut v, locked);
        if normalize(&mut v) > 1e-8 {
            return v;
        }
    }
}

/// The `k` lowest eigenpairs by thick-restart Lanczos with locking.
///
/// Each cycle extends the basis `[kept Ritz vectors, start]` by Krylov steps from
/// its last vector, forms the projected matrix from the Gram-Schmidt
/// coefficients and keeps the lowest Ritz vectors for the next cycle, started
/// from the residual of the lowest unconverged one. Converged
/// pairs are locked one per cycle in ascending order; after each lock a fresh random vector
/// becomes the next start so that exactly degenerate copies are reached.
fn lanczos(op: &SparseOperator, k: usize, cfg: &SolverConfig, seed: u64) -> Result<Partial, SpectralError> {
    let dim = op.dim();
    let k = k.min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut best = f64::INFINITY;
    let mut w = vec![0.0; dim];
    let mut kept: Vec<Vec<f64>> = Vec::new();
    let mut start = Some(random_unit(dim, &mut rng, &[]));
    for _ in 0..cfg.max_restarts {
        let free = dim - locked.len();
        let m = cfg.krylov_dim.max(k + 8).min(free);
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m);
        for x in kept.drain(..).chain(start.take()) {
            let mut x = x;
            orthogonalize(&mut x, &locked);
            orthogonalize(&mut x, &v);
            if normalize(&mut x) > 1e-10 {
                v.push(x);
            }
        }
        if v.is_empty() {
            v.push(random_unit(dim, &mut rng, &locked));
        }
        let mut h = DMatrix::<f64>::zeros(m, m);
        let mut next: Option<Vec<f64>> = None;
        let mut j = 0;
        while j < v.len() {
            op.apply_slice(&v[j], &mut w);
            iterations += 1;
            let scale = dot(&w, &w).sqrt();
            for _ in 0..2 {
                orthogonalize_once(&mut w, &locked);
                for (i, vi) in v.iter().enumerate() {
                    let c = dot(&w, vi);
                    axpy(-c, vi, &mut w);
                    h[(i, j)] += c;
                }
            }
            if j + 1 == v.len() {
                let mut b = dot(&w, &w).sqrt();
                if b < 1e-6 * scale {
                    orthogonalize_once(&mut w, &locked);
                    orthogonalize_once(&mut w, &v);
                    b = dot(&w, &w).sqrt();
                }
                if b > 1e-10 * scale.max(op.norm_bound() * 1e-3) {
                    let u: Vec<f64> = w.iter().map(|x| x / b).collect();
                    if v.len() < m {
                        v.push(u);
                    } else {
                        next = Some(u);
                    }
                }
            }
            j += 1;
        }
        let steps = v.len();
        let t = DMatrix::from_fn(steps, steps, |a, b| h[(a.min(b), a.max(b))]);
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..steps).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let ritz = |c: usize| -> Vec<f64> {
            let mut x = vec![0.0; dim];
            for (jj, vj) in v.iter().enumerate() {
                axpy(eig.eigenvectors[(jj, c)], vj, &mut x);
            }
            normalize(&mut x);
            x
        };
        let want = k - locked.len();
        let keep = (want + 6).min(steps);
        let mut fresh_lock = false;
        let mut residual_dir = None;
        let mut pending: Vec<Vec<f64>> = Vec::new();
        for (rank, &c) in order.iter().take(keep).enumerate() {
            let x = ritz(c);
            if rank < want && pending.is_empty() && !fresh_lock {
                op.apply_slice(&x, &mut w);
                let theta = dot(&x, &w);
                axpy(-theta, &x, &mut w);
                let r = dot(&w, &w).sqrt();
                best = best.min(r);
                if r < cfg.tol {
                    values.push(theta);
                    locked.push(x);
                    fresh_lock = true;
                    continue;
                }
                residual_dir = Some(w.clone());
            }
            pending.push(x);
        }
        if locked.len() >= k {
            break;
        }
        kept = pending;
        start = if fresh_lock { Some(random_unit(dim, &mut rng, &locked)) } else { residual_dir.or(next) };
    }
    if locked.len() < k {
        return Err(SpectralError::NoConvergence { iterations, best_residual: best });
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let cols: Vec<DVector<f64>> = order.iter().map(|&c| DVector::from_vec(locked[c].clone())).collect();
    let values = order.iter().map(|&c| values[c]).collect();
    Ok(Partial { values, vectors: Some(DMatrix::from_columns(&cols)), iterations })
}

fn solve_component(
    op: &SparseOperator,
    indices: &[usize],
    k: usize,
    vectors: bool,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<Partial, SpectralError> {
    let size = indices.len();
    if size == 1 {
        let i = indices[0];
        return Ok(Partial { values: vec![op.get(i, i)], vectors: vectors.then(|| DMatrix::from_element(1, 1, 1.0)), iterations: 0 });
    }
    let below_floor = cfg.tol < ROUNDING_FLOOR * op.norm_bound() && size <= cfg.dense_limit;
    if cfg.method == Method::Dense || op.dim() <= cfg.dense_limit || size <= cfg.component_dense_limit || below_floor {
        return Ok(dense_solve(op.submatrix(indices), k, vectors));
    }
    lanczos(&restrict(op, indices), k, cfg, seed)
}

/// Eigenvalue and, optionally, global eigenvector of one solved mode.
struct Mode {
    value: f64,
    component: usize,
    column: usize,
}

fn lowest_modes(partials: &[Partial], k: usize) -> Vec<Mode> {
    let mut modes: Vec<Mode> = partials
        .iter()
        .enumerate()
        .flat_map(|(c, p)| p.values.iter().enumerate().map(move |(col, &value)| Mode { value, component: c, column: col }))
        .collect();
    modes.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.component.cmp(&b.component)));
    modes.truncate(k);
    modes
}

fn solve(op: &SparseOperator, k: usize, vectors: bool, cfg: &SolverConfig) -> Result<SpectralResult> {
    let dim = op.dim();
    if k > dim {
        return Err(SpectralError::TooMany { requested: k, dim }.into());
    }
    let comps: Vec<Vec<usize>> = match cfg.method {
        Method::Lanczos => vec![(0..dim).collect()],
        _ => components(op),
    };
    let seed = |c: usize| cfg.seed.wrapping_add(c as u64);
    let mut partials: Vec<Partial> = if cfg.method == Method::Lanczos {
        vec![lanczos(op, k, cfg, cfg.seed)?]
    } else {
        comps
            .par_iter()
            .enumerate()
            .map(|(c, idx)| solve_component(op, idx, k, false, cfg, seed(c)))
            .collect::<Result<_, _>>()?
    };
    // Vectors only for the components that hold the selected modes.
    let modes = loop {
        let modes = lowest_modes(&partials, k);
        let missing: BTreeSet<usize> =
            modes.iter().filter(|m| vectors && partials[m.component].vectors.is_none()).map(|m| m.component).collect();
        if missing.is_empty() {
            break modes;
        }
        for c in missing {
            partials[c] = solve_component(op, &comps[c], k, true, cfg, seed(c))?;
        }
    };
    let iterations = partials.iter().map(|p| p.iterations).sum();
    let mut out_vectors = Vec::new();
    let mut residuals = Vec::new();
    if vectors {
        let mut y = vec![0.0; dim];
        for m in &modes {
            let local = partials[m.component].vectors.as_ref().expect("vectors requested");
            let mut v = vec![0.0; dim];
            for (a, &i) in comps[m.component].iter().enumerate() {
                v[i] = local[(a, m.column)];
            }
            op.apply_slice(&v, &mut y);
            residuals.push(y.iter().zip(&v).map(|(a, b)| (a - m.value * b).powi(2)).sum::<f64>().sqrt());
            out_vectors.push(v);
        }
    }
    let eigenvalues: Vec<f64> = modes.iter().map(|m| m.value).collect();
    let degeneracy = cluster_size(&eigenvalues);
    let lambda0 = eigenvalues[0];
    let lambda1 = eigenvalues.get(1).copied().unwrap_or(f64::NAN);
    let ground_vectors = out_vectors.iter().take(degeneracy).cloned().collect();
    Ok(SpectralResult {
        lambda0,
        lambda1,
        gap: lambda1 - lambda0,
        eigenvalues,
        vectors: out_vectors,
        degeneracy,
        ground_vectors,
        residuals,
        iterations,
    })
}

/// Size of the cluster around the first value.
fn cluster_size(sorted: &[f64]) -> usize {
    let Some(&l0) = sorted.first() else { return 0 };
    let width = CLUSTER_TOLERANCE * l0.abs().max(1.0);
    sorted.iter().take_while(|&&x| x - l0 <= width).count()
}

/// The `k` lowest eigenpairs with vectors and residuals.
pub fn lowest_eigenpairs(op: &SparseOperator, k: usize, cfg: &SolverConfig) -> Result<SpectralResult> {
    solve(op, k, true, cfg)
}

/// The `k` lowest eigenvalues only.
pub fn lowest_eigenvalues(op: &SparseOperator, k: usize, cfg: &SolverConfig) -> Result<Vec<f64>> {
    Ok(solve(op, k, false, cfg)?.eigenvalues)
}

/// Smallest set of lowest eigenvalues that contains the whole lowest cluster and at least one value above it.
fn lowest_beyond_cluster(op: &SparseOperator, cfg: &SolverConfig) -> Result<(Vec<f64>, usize)> {
    let dim = op.dim();
    let mut k = 2.min(dim);
    loop {
        let r = solve(op, k, false, cfg)?;
        if r.degeneracy < r.eigenvalues.len() || k == dim {
            return Ok((r.eigenvalues, r.iterations));
        }
        k = (2 * k).min(dim);
    }
}

/// Gap between the lowest cluster and the next eigenvalue, raw and divided by the norm bound.
pub fn spectral_gap(op: &SparseOperator, cfg: &SolverConfig) -> Result<GapReport> {
    if op.dim() < 2 {
        return Err(SpectralError::TooMany { requested: 2, dim: op.dim() }.into());
    }
    let (values, iterations) = lowest_beyond_cluster(op, cfg)?;
    let degeneracy = cluster_size(&values);
    let lambda0 = values[0];
    let lambda1 = values.get(degeneracy).copied().unwrap_or(f64::NAN);
    let gap = lambda1 - lambda0;
    Ok(GapReport { lambda0, lambda1, gap, normalized_gap: gap / op.norm_bound(), degeneracy, iterations })
}

/// Lowest eigenvalues of one connected block of an operator.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentSpectrum {
    /// Basis indices of the block, ascending.
    pub indices: Vec<usize>,
    /// Its lowest eigenvalues, ascending.
    pub values: Vec<f64>,
}

/// The `k` lowest eigenvalues (all, for smaller blocks) of every connected block.
pub fn component_spectra(op: &SparseOperator, k: usize, cfg: &SolverConfig) -> Result<Vec<ComponentSpectrum>> {
    components(op)
        .into_par_iter()
        .enumerate()
        .map(|(c, indices)| {
            let kc = k.min(indices.len());
            let p = solve_component(op, &indices, kc, false, cfg, cfg.seed.wrapping_add(c as u64))?;
            Ok(ComponentSpectrum { indices, values: p.values })
        })
        .collect()
}

/// Number of eigenvalues below `tol`; the next eigenvalue must exceed `10 * tol`.
pub fn null_space_dimension(op: &SparseOperator, tol: f64, cfg: &SolverConfig) -> Result<usize> {
    let per: Vec<(usize, f64)> = components(op)
        .into_par_iter()
        .enumerate()
        .map(|(c, indices)| {
            let mut k = 2.min(indices.len());
            loop {
                let values = solve_component(op, &indices, k, false, cfg, cfg.seed.wrapping_add(c as u64))?.values;
                let count = values.iter().take_while(|&&x| x < tol).count();
                if count < values.len() {
                    return Ok((count, values[count]));
                }
                if k == indices.len() {
                    return Ok((count, f64::INFINITY));
                }
                k = (2 * k).min(indices.len());
            }
        })
        .collect::<Result<_, SpectralError>>()?;
    let count = per.iter().map(|e| e.0).sum();
    let next = per.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    if next <= 10.0 * tol {
        return Err(SpectralError::MarginViolation { index: count, value: next, tol }.into());
    }
    Ok(count)
}

/// Whether `h_trans` restricted to the path states is the tridiagonal path matrix
/// (1/2 at both corners, 1 inside, -1/2 next to the diagonal), to 1e-12.
pub fn verify_path_block(h_trans: &SparseOperator, p: &Path) -> Result<bool> {
    let basis = h_trans.basis().ok_or(OperatorError::MissingState(p.first().to_string()))?;
    let indices = p
        .states
        .iter()
        .map(|s| basis.index_of(s).ok_or_else(|| OperatorError::MissingState(s.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(restriction_matches(&h_trans.submatrix(&indices)))
}

fn restriction_matches(m: &DMatrix<f64>) -> bool {
    let k = m.nrows();
    let expected = |i: usize, j: usize| -> f64 {
        if k == 1 {
            0.0
        } else if i == j {
            if i == 0 || i == k - 1 {
                0.5
            } else {
                1.0
            }
        } else if i.abs_diff(j) == 1 {
            -0.5
        } else {
            0.0
        }
    };
    (0..k).all(|i| (0..k).all(|j| (m[(i, j)] - expected(i, j)).abs() <= 1e-12))
}

/// Inputs and result of the chain-weight formula for a cycle with segment target `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainWeightReport {
    pub n: usize,
    /// Largest `|H_size|` diagonal over the segment lengths scanned.
    pub size_norm: f64,
    /// Smallest segment gap: the first excitation for odd lengths, the ground energy for even ones.
    pub chain_gap: f64,
    /// `(length, gap)` per segment length.
    pub per_length: Vec<(usize, f64)>,
    pub p: i64,
}

/// Measures the chain weight over segment lengths `4..=max_len` under `model`.
pub fn measure_chain_weight(model: &Model, n: usize, max_len: usize, cfg: &SolverConfig) -> Result<ChainWeightReport> {
    let mut size_norm: f64 = 0.0;
    let mut per_length = Vec::new();
    for l in 4..=max_len {
        let basis = std::sync::Arc::new(enumerate_segment_basis(model, l, DEFAULT_BUDGET)?);
        size_norm = size_norm.max(size_term(n, &basis)?.norm_bound());
        let core = assemble_chain(model, ChainVariant::Core, &basis)?;
        let g = if l % 2 == 1 { spectral_gap(&core, cfg)?.lambda1 } else { lowest_eigenvalues(&core, 1, cfg)?[0] };
        per_length.push((l, g));
    }
    let chain_gap = per_length.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    let p = chain_weight_formula(n, size_norm, chain_gap);
    Ok(ChainWeightReport { n, size_norm, chain_gap, per_length, p })
}

/// Residual `|A v - <v|A|v> v|` and expectation of a dense vector.
pub fn residual(op: &SparseOperator, v: &[f64]) -> (f64, f64) {
    let mut y = vec![0.0; op.dim()];
    op.apply_slice(v, &mut y);
    let e = dot(v, &y) / dot(v, v);
    let r = y.iter().zip(v).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt();
    (r, e)
}

/// Dense vector of a state on an operator's basis, or an error if some state is missing.
pub fn embed(op: &SparseOperator, amplitudes: &[(BasisState, f64)]) -> Result<Vec<f64>> {
    let basis = op.basis().ok_or(OperatorError::DimensionMismatch { expected: op.dim(), got: 0 })?;
    let mut v = vec![0.0; op.dim()];
    for (s, a) in amplitudes {
        let i = basis.index_of(s).ok_or_else(|| OperatorError::MissingState(s.to_string()))?;
        v[i] += a;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_cases() {
        let op = SparseOperator::diagonal("d", &[2.0, 0.0, 1.0]);
        let r = lowest_eigenpairs(&op, 2, &SolverConfig::default()).unwrap();
        assert_eq!(r.eigenvalues, vec![0.0, 1.0]);
        let g = spectral_gap(&SparseOperator::diagonal("d", &[0.0, 3.0]), &SolverConfig::default()).unwrap();
        assert_eq!(g.gap, 3.0);
    }

    fn laplacian(k: usize) -> SparseOperator {
        // path-graph Laplacian / 2, eigenvalues 1 - cos(pi j / k)
        let mut t = Vec::new();
        for i in 0..k {
            let d = if i == 0 || i == k - 1 { 0.5 } else { 1.0 };
            t.push((i, i, d));
            if i + 1 < k {
                t.push((i, i + 1, -0.5));
                t.push((i + 1, i, -0.5));
            }
        }
        SparseOperator::from_triplets(k, "path", t)
    }

    #[test]
    fn lanczos_matches_closed_form() {
        let k = 300;
        let cfg = SolverConfig { method: Method::Lanczos, ..SolverConfig::default() };
        let r = lowest_eigenpairs(&laplacian(k), 3, &cfg).unwrap();
        for (j, v) in r.eigenvalues.iter().enumerate() {
            let exact = 1.0 - (std::f64::consts::PI * j as f64 / k as f64).cos();
            assert!((v - exact).abs() < 1e-9, "{j}: {v} vs {exact}");
        }
        assert!(r.residuals.iter().all(|&x| x < 1e-10));
    }

    #[test]
    fn degenerate_copies_are_found() {
        // two disconnected copies of the same path, solved as one block
        let a = laplacian(40);
        let t = a.entries().chain(a.entries().map(|(i, j, v)| (i + 40, j + 40, v)));
        let op = SparseOperator::from_triplets(80, "pair", t);
        let cfg = SolverConfig { method: Method::Lanczos, ..SolverConfig::default() };
        let r = lowest_eigenpairs(&op, 3, &cfg).unwrap();
        assert_eq!(r.degeneracy, 2);
        assert!(r.eigenvalues[0].abs() < 1e-10 && r.eigenvalues[1].abs() < 1e-10);
        assert_eq!(components(&op).len(), 2);
    }

    #[test]
    fn path_block_shapes() {
        assert!(restriction_matches(&DMatrix::zeros(1, 1)));
        let m = laplacian(6).to_dense();
        assert!(restriction_matches(&m));
        let mut bad = m.clone();
        bad[(0, 0)] = 1.0;
        assert!(!restriction_matches(&bad));
    }

    #[test]
    fn null_space_margin() {
        let op = SparseOperator::diagonal("d", &[0.0, 0.0, 1e-9, 1.0]);
        let err = null_space_dimension(&op, 1e-9, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, crate::Error::Spectral(SpectralError::MarginViolation { .. })));
        let op = SparseOperator::diagonal("d", &[0.0, 0.0, 1.0]);
        assert_eq!(null_space_dimension(&op, 1e-9, &SolverConfig::default()).unwrap(), 2);
    }
}
