//! Sparse Hermitian operators on an enumerated basis: the single terms and the
//! weighted chain and cycle combinations.
//!
//! Every term is accumulated row by row with exact rational coefficients and only
//! converted to `f64` once the row is complete.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_rational::Ratio;
use rayon::prelude::*;

use crate::configspace::{BasisIndex, BasisState, Topology};
use crate::entanglement::StateVector;
use crate::error::{OperatorError, Result};
use crate::model::Model;
use crate::ruleset::{PenaltyGroup, RuleSet, SiteProjector};
use crate::symbol::Tag;

type Q = Ratio<i64>;

/// Stored entries with magnitude below this are dropped.
pub const DROP_TOLERANCE: f64 = 1e-14;

const ROW_CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TermKind {
    Trans,
    Legal,
    Init,
    /// Bracket penalty on every site.
    Bracket,
    /// Bracket penalty on the first and last site only.
    Boundary,
    Size,
}

impl TermKind {
    pub const ALL: [TermKind; 6] =
        [TermKind::Trans, TermKind::Legal, TermKind::Init, TermKind::Bracket, TermKind::Boundary, TermKind::Size];

    pub const fn name(self) -> &'static str {
        match self {
            TermKind::Trans => "trans",
            TermKind::Legal => "legal",
            TermKind::Init => "init",
            TermKind::Bracket => "bracket",
            TermKind::Boundary => "boundary",
            TermKind::Size => "size",
        }
    }

    /// Whether the term is positive semidefinite on every basis.
    pub const fn is_psd(self) -> bool {
        !matches!(self, TermKind::Size)
    }
}

impl fmt::Display for TermKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChainVariant {
    /// `H_trans + H_legal + H_init`.
    Core,
    /// Core plus the bracket penalty at the two ends.
    FrustrationFree,
    /// `3 * core + H_bracket`.
    UniformBracket,
}

impl ChainVariant {
    pub const ALL: [ChainVariant; 3] = [ChainVariant::Core, ChainVariant::FrustrationFree, ChainVariant::UniformBracket];

    pub const fn name(self) -> &'static str {
        match self {
            ChainVariant::Core => "core",
            ChainVariant::FrustrationFree => "frustration_free",
            ChainVariant::UniformBracket => "uniform_bracket",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }

    fn terms(self) -> Vec<(TermKind, Q)> {
        let one = Q::from_integer(1);
        let core = |w: Q| vec![(TermKind::Trans, w), (TermKind::Legal, w), (TermKind::Init, w)];
        match self {
            ChainVariant::Core => core(one),
            ChainVariant::FrustrationFree => {
                let mut t = core(one);
                t.push((TermKind::Boundary, one));
                t
            }
            ChainVariant::UniformBracket => {
                let mut t = core(Q::from_integer(3));
                t.push((TermKind::Bracket, one));
                t
            }
        }
    }
}

/// Weights of the cycle Hamiltonian `chain_weight * H_chain + H_size`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OperatorWeights {
    pub chain_weight: Q,
    /// Coefficients of identity, `|<><<|` and the turning controls in `H_size`.
    pub size_weights: [Q; 3],
}

impl OperatorWeights {
    /// Size weights `(1/n, 2, T_n/(n-2))` for target segment length `n`, with chain weight 1.
    pub fn segment(n: usize) -> Self {
        let n = n as i64;
        let path_len = (n - 1) * (n - 2) / 2;
        let turning = Q::new(path_len, n - 2);
        debug_assert_eq!(turning, Q::new(n - 1, 2));
        OperatorWeights {
            chain_weight: Q::from_integer(1),
            size_weights: [Q::new(1, n), Q::from_integer(2), turning],
        }
    }

    pub fn with_chain_weight(mut self, p: i64) -> Self {
        self.chain_weight = Q::from_integer(p);
        self
    }
}

/// Real symmetric operator in compressed-row form.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    kind: String,
    n: usize,
    basis: Option<Arc<BasisIndex>>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    norm_bound: f64,
}

impl SparseOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, kind: impl Into<String>, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); dim];
        for (i, j, v) in triplets {
            assert!(i < dim && j < dim, "triplet out of range");
            rows[i].push((j as u32, v));
        }
        let mut op = SparseOperator {
            kind: kind.into(),
            n: 0,
            basis: None,
            row_ptr: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
            norm_bound: 0.0,
        };
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(u32, f64)> = Vec::with_capacity(row.len());
            for (j, v) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += v,
                    _ => merged.push((j, v)),
                }
            }
            op.push_row(merged.into_iter().filter(|e| e.1.abs() >= DROP_TOLERANCE));
        }
        op.finish();
        op
    }

    pub fn diagonal(kind: impl Into<String>, values: &[f64]) -> Self {
        Self::from_triplets(values.len(), kind, values.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    fn push_row(&mut self, entries: impl Iterator<Item = (u32, f64)>) {
        for (j, v) in entries {
            self.cols.push(j);
            self.vals.push(v);
        }
        self.row_ptr.push(self.cols.len());
    }

    fn finish(&mut self) {
        self.norm_bound = (0..self.dim())
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    /// Site count of the underlying basis (0 for operators built from raw triplets).
    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> Option<&Arc<BasisIndex>> {
        self.basis.as_ref()
    }

    /// Maximum absolute row sum, an upper bound on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&(j as u32)).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim()).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j as usize, v))
        })
    }

    /// Largest `|A_ij - A_ji|` over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        self.entries().map(|(i, j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max)
    }

    /// `y = A x` on dense vectors.
    pub fn apply_slice(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        let body = |(i, yi): (usize, &mut f64)| {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j as usize]).sum();
        };
        if self.dim() >= ROW_CHUNK {
            y.par_iter_mut().enumerate().for_each(body);
        } else {
            y.iter_mut().enumerate().for_each(body);
        }
    }

    /// Dense restriction to the given basis indices, in that order.
    pub fn submatrix(&self, indices: &[usize]) -> DMatrix<f64> {
        let k = indices.len();
        let mut m = DMatrix::zeros(k, k);
        let mut pos: Vec<(usize, usize)> = indices.iter().copied().enumerate().map(|(a, i)| (i, a)).collect();
        pos.sort_unstable();
        let local = |j: usize| pos.binary_search_by_key(&j, |p| p.0).ok().map(|k| pos[k].1);
        for (a, &i) in indices.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if let Some(b) = local(j as usize) {
                    m[(a, b)] = v;
                }
            }
        }
        m
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let idx: Vec<usize> = (0..self.dim()).collect();
        self.submatrix(&idx)
    }

    /// `<v|A|v>` for a dense vector.
    pub fn expectation_slice(&self, v: &[f64]) -> f64 {
        let mut y = vec![0.0; self.dim()];
        self.apply_slice(v, &mut y);
        v.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    /// Coordinate-triplet export with a `# dim=.. kind=.. n=..` header.
    pub fn write_export<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# dim={} kind={} n={}", self.dim(), self.kind, self.n)?;
        for (i, j, v) in self.entries() {
            writeln!(w, "{i} {j} {v:.16e}")?;
        }
        Ok(())
    }
}

/// Exact sparse product; the result lives on the operator's basis.
pub fn apply(op: &SparseOperator, v: &StateVector) -> Result<StateVector> {
    let basis = op.basis().ok_or(OperatorError::DimensionMismatch { expected: op.dim(), got: v.basis().len() })?;
    if basis.len() != v.basis().len() || !Arc::ptr_eq(basis, v.basis()) && **basis != **v.basis() {
        return Err(OperatorError::DimensionMismatch { expected: op.dim(), got: v.basis().len() }.into());
    }
    // A is symmetric, so column j is row j.
    let mut out: Vec<(usize, f64)> = Vec::new();
    for &(j, a) in v.amplitudes() {
        let (cols, vals) = op.row(j);
        out.extend(cols.iter().zip(vals).map(|(&i, &x)| (i as usize, x * a)));
    }
    out.sort_by_key(|e| e.0);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(out.len());
    for (i, x) in out {
        match merged.last_mut() {
            Some(last) if last.0 == i => last.1 += x,
            _ => merged.push((i, x)),
        }
    }
    merged.retain(|e| e.1 != 0.0);
    Ok(StateVector::from_sorted(Arc::clone(basis), merged))
}

struct Assembly<'a> {
    model: &'a Model,
    basis: &'a BasisIndex,
    terms: Vec<(TermKind, Q)>,
    size: [Q; 3],
}

impl Assembly<'_> {
    fn index(&self, s: &BasisState) -> Result<u32, OperatorError> {
        self.basis.index_of(s).map(|i| i as u32).ok_or_else(|| OperatorError::BasisNotClosed(s.to_string()))
    }

    fn row(&self, r: usize, out: &mut Vec<(u32, Q)>) -> Result<(), OperatorError> {
        let s = self.basis.get(r);
        let half = Q::new(1, 2);
        let diag = r as u32;
        for &(kind, w) in &self.terms {
            match kind {
                TermKind::Trans => {
                    for (i, j) in s.bonds() {
                        let (a, b) = (s.get(i), s.get(j));
                        for m in self.model.pair_forward(a, b).iter().chain(self.model.pair_backward(a, b)) {
                            let t = s.with_site(i, m.to[0]).with_site(j, m.to[1]);
                            out.push((diag, w * half));
                            out.push((self.index(&t)?, -w * half));
                        }
                    }
                }
                TermKind::Legal => {
                    let c = self.model.illegal_bond_count(&s) as i64;
                    if c > 0 {
                        out.push((diag, w * c));
                    }
                }
                TermKind::Init | TermKind::Bracket | TermKind::Boundary => {
                    let group = if kind == TermKind::Init { PenaltyGroup::Init } else { PenaltyGroup::Bracket };
                    let n = s.len();
                    let sites: Vec<usize> = if kind == TermKind::Boundary { vec![0, n - 1] } else { (0..n).collect() };
                    for p in self.model.rules().site_penalties().iter().filter(|p| p.group == group) {
                        let pw = w * p.weight;
                        for &i in &sites {
                            let x = s.get(i);
                            match p.projector {
                                SiteProjector::Identity => out.push((diag, pw)),
                                SiteProjector::Symbol(t) if x.tag() == t => out.push((diag, pw)),
                                SiteProjector::Minus(t) if x.tag() == t && x.bit().is_some() => {
                                    // (|0> - |1>)(<0| - <1|) / 2
                                    out.push((diag, pw * half));
                                    out.push((self.index(&s.with_site(i, x.flipped()))?, -pw * half));
                                }
                                _ => {}
                            }
                        }
                    }
                }
                TermKind::Size => {
                    let [id, left, turning] = self.size;
                    let mut d = id * s.len() as i64;
                    for x in s.sites() {
                        match x.tag() {
                            Tag::LeftEnd => d -= left,
                            Tag::Down | Tag::Up | Tag::DoubleUp => d += turning,
                            _ => {}
                        }
                    }
                    out.push((diag, w * d));
                }
            }
        }
        Ok(())
    }

    fn build(&self, kind: String, basis: &Arc<BasisIndex>) -> Result<SparseOperator> {
        let dim = self.basis.len();
        let chunks: Vec<(Vec<usize>, Vec<u32>, Vec<f64>)> = (0..dim.div_ceil(ROW_CHUNK))
            .into_par_iter()
            .map(|c| -> Result<_, OperatorError> {
                let mut lens = Vec::new();
                let mut cols = Vec::new();
                let mut vals = Vec::new();
                let mut buf = Vec::new();
                for r in c * ROW_CHUNK..((c + 1) * ROW_CHUNK).min(dim) {
                    buf.clear();
                    self.row(r, &mut buf)?;
                    buf.sort_by_key(|e| e.0);
                    let before = cols.len();
                    let mut k = 0;
                    while k < buf.len() {
                        let j = buf[k].0;
                        let mut acc = Q::from_integer(0);
                        while k < buf.len() && buf[k].0 == j {
                            acc += buf[k].1;
                            k += 1;
                        }
                        let v = *acc.numer() as f64 / *acc.denom() as f64;
                        if v.abs() >= DROP_TOLERANCE {
                            cols.push(j);
                            vals.push(v);
                        }
                    }
                    lens.push(cols.len() - before);
                }
                Ok((lens, cols, vals))
            })
            .collect::<Result<_, _>>()?;
        let mut op = SparseOperator {
            kind,
            n: basis.sites(),
            basis: Some(Arc::clone(basis)),
            row_ptr: Vec::with_capacity(dim + 1),
            cols: Vec::new(),
            vals: Vec::new(),
            norm_bound: 0.0,
        };
        op.row_ptr.push(0);
        for (lens, cols, vals) in chunks {
            for l in lens {
                let last = *op.row_ptr.last().unwrap();
                op.row_ptr.push(last + l);
            }
            op.cols.extend(cols);
            op.vals.extend(vals);
        }
        op.finish();
        Ok(op)
    }
}

fn require(basis: &BasisIndex, topology: Topology, term: &'static str) -> Result<(), OperatorError> {
    if basis.topology() == topology {
        Ok(())
    } else {
        Err(OperatorError::WrongTopology { term, topology: basis.topology().name() })
    }
}

/// A single term on `basis` under the rules `rs`. `Size` uses the basis length as
/// target segment length and is only defined on chain bases here; see [`size_term`].
pub fn build_term(kind: TermKind, rs: &RuleSet, basis: &Arc<BasisIndex>) -> Result<SparseOperator> {
    let model = Model::new(rs.clone());
    build_term_with(kind, &model, basis)
}

/// [`build_term`] with a precompiled model.
pub fn build_term_with(kind: TermKind, model: &Model, basis: &Arc<BasisIndex>) -> Result<SparseOperator> {
    if kind == TermKind::Boundary {
        require(basis, Topology::Chain, "boundary")?;
    }
    if kind == TermKind::Size {
        require(basis, Topology::Chain, "size")?;
        return size_term(basis.sites(), basis);
    }
    let a = Assembly { model, basis, terms: vec![(kind, Q::from_integer(1))], size: [Q::from_integer(0); 3] };
    a.build(kind.name().to_string(), basis)
}

/// `H_size` for target segment length `n` on any basis.
pub fn size_term(n: usize, basis: &Arc<BasisIndex>) -> Result<SparseOperator> {
    let w = OperatorWeights::segment(n);
    let model = match basis.topology() {
        Topology::Chain => Model::chain(),
        Topology::Cycle => Model::cycle(),
    };
    let a = Assembly { model, basis, terms: vec![(TermKind::Size, Q::from_integer(1))], size: w.size_weights };
    a.build("size".to_string(), basis)
}

/// Weighted chain combination; the site count is taken from the basis.
pub fn assemble_chain(model: &Model, variant: ChainVariant, basis: &Arc<BasisIndex>) -> Result<SparseOperator> {
    require(basis, Topology::Chain, variant.name())?;
    let a = Assembly { model, basis, terms: variant.terms(), size: [Q::from_integer(0); 3] };
    a.build(variant.name().to_string(), basis)
}

/// `p * (H_trans + H_legal + H_init) + H_size` on an `n * t` site cycle basis.
pub fn assemble_cycle(
    model: &Model,
    n: usize,
    t: usize,
    weights: &OperatorWeights,
    basis: &Arc<BasisIndex>,
) -> Result<SparseOperator> {
    require(basis, Topology::Cycle, "cycle")?;
    if basis.sites() != n * t {
        return Err(OperatorError::DimensionMismatch { expected: n * t, got: basis.sites() }.into());
    }
    let p = weights.chain_weight;
    let terms = vec![(TermKind::Trans, p), (TermKind::Legal, p), (TermKind::Init, p), (TermKind::Size, Q::from_integer(1))];
    let a = Assembly { model, basis, terms, size: weights.size_weights };
    a.build("cycle".to_string(), basis)
}

/// Segment-level operator `p * core + H_size` on a chain basis of segment states.
pub fn assemble_segment(model: &Model, n: usize, weights: &OperatorWeights, basis: &Arc<BasisIndex>) -> Result<SparseOperator> {
    require(basis, Topology::Chain, "segment")?;
    let p = weights.chain_weight;
    let terms = vec![(TermKind::Trans, p), (TermKind::Legal, p), (TermKind::Init, p), (TermKind::Size, Q::from_integer(1))];
    let a = Assembly { model, basis, terms, size: OperatorWeights::segment(n).size_weights };
    a.build(format!("segment:{n}"), basis)
}

/// `ceil((2 n^2 B^2 + 2 B) / gap)` for a size-term norm `B` and chain gap `gap`.
pub fn chain_weight_formula(n: usize, size_norm: f64, gap: f64) -> i64 {
    let n = n as f64;
    ((2.0 * n * n * size_norm * size_norm + 2.0 * size_norm) / gap).ceil() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::{enumerate_chain_basis, ChainFilter, DEFAULT_BUDGET};

    fn bracketed(n: usize) -> Arc<BasisIndex> {
        Arc::new(enumerate_chain_basis(Model::chain(), n, ChainFilter::BracketedWellFormed, DEFAULT_BUDGET).unwrap())
    }

    #[test]
    fn terms_are_symmetric() {
        let b = bracketed(5);
        for kind in TermKind::ALL {
            let op = build_term(kind, &crate::ruleset::builtin_chain_ruleset(), &b).unwrap();
            assert_eq!(op.dim(), b.len());
            assert_eq!(op.hermiticity_defect(), 0.0, "{kind}");
        }
    }

    #[test]
    fn legal_penalizes_item_13() {
        let b = bracketed(5);
        let legal = build_term_with(TermKind::Legal, Model::chain(), &b).unwrap();
        let s: BasisState = "< e0 ->1 W >".parse().unwrap();
        let i = b.index_of(&s).unwrap();
        assert!(legal.get(i, i) >= 1.0);
    }

    #[test]
    fn size_weights_are_exact() {
        for n in [5usize, 7, 9, 11] {
            let w = OperatorWeights::segment(n);
            assert_eq!(w.size_weights[2], Q::new(n as i64 - 1, 2));
            assert_eq!(w.size_weights[0] * n as i64, Q::from_integer(1));
        }
    }

    #[test]
    fn diagonal_and_export() {
        let op = SparseOperator::diagonal("test", &[0.0, 1.0, 2.0]);
        assert_eq!(op.nnz(), 2);
        assert_eq!(op.norm_bound(), 2.0);
        let mut out = Vec::new();
        op.write_export(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next(), Some("# dim=3 kind=test n=0"));
        assert_eq!(text.lines().nth(1), Some("1 1 1.0000000000000000e0"));
    }

    #[test]
    fn cycle_requires_cycle_basis() {
        let b = bracketed(5);
        let err = assemble_cycle(Model::cycle(), 5, 1, &OperatorWeights::segment(5), &b).unwrap_err();
        assert!(matches!(err, crate::Error::Operator(OperatorError::WrongTopology { .. })));
    }
}
