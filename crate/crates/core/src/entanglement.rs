//! Ground states of the chain and cycle, reduced density matrices over contiguous
//! regions and their von Neumann entropies (base 2).

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::configspace::{BasisIndex, BasisState, Layout, Params, Region, Topology};
use crate::error::{OperatorError, ParamError, RegionError, Result};
use crate::symbol::{SiteState, Tag};
use crate::model::Model;
use crate::transition::{extract_path, good_path, Path};

/// Eigenvalues below this are left out of entropy sums.
pub const ENTROPY_CUTOFF: f64 = 1e-14;

/// Real state supported on a set of basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    basis: Arc<BasisIndex>,
    /// Sorted by basis index, no zeros.
    amplitudes: Vec<(usize, f64)>,
    norm: f64,
}

impl StateVector {
    pub(crate) fn from_sorted(basis: Arc<BasisIndex>, amplitudes: Vec<(usize, f64)>) -> Self {
        let norm = amplitudes.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        StateVector { basis, amplitudes, norm }
    }

    /// A vector on an existing basis; repeated states are summed.
    pub fn on_basis(basis: Arc<BasisIndex>, amplitudes: &[(BasisState, f64)]) -> Result<Self> {
        let mut v: Vec<(usize, f64)> = amplitudes
            .iter()
            .map(|(s, a)| basis.index_of(s).map(|i| (i, *a)).ok_or_else(|| OperatorError::MissingState(s.to_string())))
            .collect::<Result<_, _>>()?;
        v.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(v.len());
        for (i, a) in v {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += a,
                _ => merged.push((i, a)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        Ok(Self::from_sorted(basis, merged))
    }

    /// A vector on the basis spanned by its own support.
    pub fn from_states(sites: usize, topology: Topology, amplitudes: Vec<(BasisState, f64)>) -> Self {
        let basis = Arc::new(BasisIndex::from_states(sites, topology, "support", amplitudes.iter().map(|e| e.0)));
        Self::on_basis(basis, &amplitudes).expect("support basis contains every state")
    }

    pub fn basis(&self) -> &Arc<BasisIndex> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[(usize, f64)] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn support_len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn sites(&self) -> usize {
        self.basis.sites()
    }

    pub fn iter(&self) -> impl Iterator<Item = (BasisState, f64)> + '_ {
        self.amplitudes.iter().map(|&(i, a)| (self.basis.get(i), a))
    }

    pub fn amplitude(&self, s: &BasisState) -> f64 {
        self.basis
            .index_of(s)
            .and_then(|i| self.amplitudes.binary_search_by_key(&i, |e| e.0).ok())
            .map(|k| self.amplitudes[k].1)
            .unwrap_or(0.0)
    }

    /// `<self|other>`, matching states rather than indices.
    pub fn inner(&self, other: &StateVector) -> f64 {
        self.iter().map(|(s, a)| a * other.amplitude(&s)).sum()
    }

    /// The same vector expressed on another basis containing its support.
    pub fn rebased(&self, basis: &Arc<BasisIndex>) -> Result<StateVector> {
        let amps: Vec<(BasisState, f64)> = self.iter().collect();
        Self::on_basis(Arc::clone(basis), &amps)
    }

    /// Dense coefficient vector on `basis`.
    pub fn dense_on(&self, basis: &BasisIndex) -> Result<Vec<f64>> {
        let mut v = vec![0.0; basis.len()];
        for (s, a) in self.iter() {
            let i = basis.index_of(&s).ok_or_else(|| OperatorError::MissingState(s.to_string()))?;
            v[i] = a;
        }
        Ok(v)
    }
}

fn check_odd(n: usize) -> Result<Params, ParamError> {
    Params::new(n)
}

fn check_bits(n: usize, x: &[u8]) -> Result<(), ParamError> {
    let m = (n - 3) / 2;
    if x.len() != m || x.iter().any(|&b| b > 1) {
        return Err(ParamError::BadQubitString { got: x.len(), expected: m });
    }
    Ok(())
}

fn bit_strings(m: usize) -> impl Iterator<Item = Vec<u8>> {
    (0..1u32 << m).map(move |k| (0..m).map(|j| ((k >> (m - 1 - j)) & 1) as u8).collect())
}

/// Uniform superposition over the good path with `U` qubits set to `x`.
pub fn construct_phi_x(n: usize, x: &[u8]) -> Result<StateVector> {
    check_odd(n)?;
    check_bits(n, x)?;
    let p = good_path(n, x)?;
    let a = 1.0 / (p.len() as f64).sqrt();
    Ok(StateVector::from_states(n, Topology::Chain, p.states.iter().map(|s| (*s, a)).collect()))
}

fn good_paths(n: usize) -> Result<Vec<Path>> {
    check_odd(n)?;
    bit_strings((n - 3) / 2).map(|x| good_path(n, &x)).collect()
}

/// `2^{-m/2} sum_x phi_x`.
pub fn construct_phi_g(n: usize) -> Result<StateVector> {
    let paths = good_paths(n)?;
    let count: usize = paths.iter().map(|p| p.len()).sum();
    let a = 1.0 / (count as f64).sqrt();
    let amps = paths.iter().flat_map(|p| p.states.iter().map(move |s| (*s, a))).collect();
    Ok(StateVector::from_states(n, Topology::Chain, amps))
}

/// `floor((n - 3) / 4)`, the number of qubit pairs crossing a right cut.
pub fn entropy_s(n: usize) -> usize {
    (n - 3) / 4
}

/// Index of the first state on the path holding at least `s + 1` `e` sites.
pub fn split_index(p: &Path, s: usize) -> usize {
    p.states.iter().position(|st| st.count(Tag::LowerE) > s).unwrap_or(p.len())
}

/// The two parts of `phi_g` around the split with `s + 1` `e` sites, and `c = T_2 / T`.
#[derive(Clone, Debug)]
pub struct PhiSplit {
    pub s: usize,
    pub phi1: StateVector,
    pub phi2: StateVector,
    pub t1: usize,
    pub t2: usize,
    pub c: f64,
}

pub fn split_phi_g(n: usize, s: usize) -> Result<PhiSplit> {
    let paths = good_paths(n)?;
    let k = split_index(&paths[0], s);
    let t = paths[0].len();
    let (t1, t2) = (k, t - k);
    let part = |range: std::ops::Range<usize>| -> StateVector {
        let w = 1.0 / ((range.len() * paths.len()) as f64).sqrt();
        let amps = paths.iter().flat_map(|p| p.states[range.clone()].iter().map(move |x| (*x, w))).collect();
        StateVector::from_states(n, Topology::Chain, amps)
    };
    Ok(PhiSplit { s, phi1: part(0..k), phi2: part(k..t), t1, t2, c: t2 as f64 / t as f64 })
}

/// Which cycle state to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CycleState {
    /// `t` copies of `phi_g` with the first `<` at site `i`.
    Psi(usize),
    /// `n^{-1/2} sum_i psi_i`.
    Phi,
}

/// Segment layout of `psi_i`.
pub fn psi_layout(n: usize, t: usize, i: usize) -> Layout {
    Layout::uniform(n, t, i)
}

fn psi_amplitudes(n: usize, t: usize, i: usize, seg: &[(BasisState, f64)], scale: f64) -> Vec<(BasisState, f64)> {
    let sites = n * t;
    let mut out = Vec::with_capacity(seg.len().pow(t as u32));
    let mut buf = vec![SiteState::LEFT_END; sites];
    fn rec(
        k: usize,
        t: usize,
        n: usize,
        i: usize,
        amp: f64,
        seg: &[(BasisState, f64)],
        buf: &mut [SiteState],
        out: &mut Vec<(BasisState, f64)>,
    ) {
        if k == t {
            out.push((BasisState::cycle(buf).expect("site count"), amp));
            return;
        }
        let sites = buf.len();
        for (s, a) in seg {
            for j in 0..n {
                buf[(i + k * n + j) % sites] = s.get(j);
            }
            rec(k + 1, t, n, i, amp * a, seg, buf, out);
        }
    }
    rec(0, t, n, i % sites, scale, seg, &mut buf, &mut out);
    out
}

/// `psi_i` or `Phi` on a cycle of `t` segments of length `n`.
pub fn construct_cycle_state(n: usize, t: usize, which: CycleState) -> Result<StateVector> {
    Params::new(n)?.with_segments(t)?;
    let seg: Vec<(BasisState, f64)> = construct_phi_g(n)?.iter().collect();
    let amps = match which {
        CycleState::Psi(i) => {
            if i >= n {
                return Err(ParamError::IndexOutOfRange { index: i, bound: n }.into());
            }
            psi_amplitudes(n, t, i, &seg, 1.0)
        }
        CycleState::Phi => {
            let w = 1.0 / (n as f64).sqrt();
            (0..n).flat_map(|i| psi_amplitudes(n, t, i, &seg, w)).collect()
        }
    };
    Ok(StateVector::from_states(n * t, Topology::Cycle, amps))
}

/// One block of a reduced density matrix: the coefficients `M[a][b]` of the
/// support restricted to a connected set of region labels `a` and complement labels `b`.
#[derive(Clone, Debug)]
pub struct DensityBlock {
    pub region_labels: Vec<u128>,
    pub complement_labels: Vec<u128>,
    /// `(a, b, coefficient)` with local label indices.
    pub entries: Vec<(u32, u32, f64)>,
}

impl DensityBlock {
    /// `rho_A` on this block, `M M^T`.
    pub fn matrix(&self) -> DMatrix<f64> {
        gram(&self.entries, self.region_labels.len(), self.complement_labels.len(), false)
    }

    pub fn trace(&self) -> f64 {
        self.entries.iter().map(|e| e.2 * e.2).sum()
    }

    /// Eigenvalues of `M M^T` computed on the smaller of the two sides.
    pub fn spectrum(&self) -> Vec<f64> {
        let (r, c) = (self.region_labels.len(), self.complement_labels.len());
        if r == 1 || c == 1 {
            return vec![self.trace()];
        }
        let g = gram(&self.entries, r, c, c < r);
        g.symmetric_eigenvalues().iter().copied().collect()
    }
}

fn gram(entries: &[(u32, u32, f64)], r: usize, c: usize, dual: bool) -> DMatrix<f64> {
    let (rows, cols) = if dual { (c, r) } else { (r, c) };
    let mut m = DMatrix::<f64>::zeros(rows, cols);
    for &(a, b, x) in entries {
        if dual {
            m[(b as usize, a as usize)] += x;
        } else {
            m[(a as usize, b as usize)] += x;
        }
    }
    &m * m.transpose()
}

/// Reduced state on a region, kept in block-diagonal form.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub region: Region,
    pub blocks: Vec<DensityBlock>,
}

impl DensityMatrix {
    /// Number of distinct region restrictions in the support.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.region_labels.len()).sum()
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(DensityBlock::trace).sum()
    }

    pub fn block_traces(&self) -> Vec<f64> {
        self.blocks.iter().map(DensityBlock::trace).collect()
    }

    /// Nonzero spectrum (eigenvalues above the cutoff), descending.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut all: Vec<f64> =
            self.blocks.par_iter().flat_map(|b| b.spectrum()).filter(|&x| x > ENTROPY_CUTOFF).collect();
        all.sort_by(|a, b| b.total_cmp(a));
        all
    }

    /// Dense `rho_A` with rows ordered by block then label.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        let mut off = 0;
        for b in &self.blocks {
            let k = b.region_labels.len();
            m.view_mut((off, off), (k, k)).copy_from(&b.matrix());
            off += k;
        }
        m
    }

    /// Region restrictions in the order of [`DensityMatrix::to_dense`].
    pub fn labels(&self) -> Vec<BasisState> {
        let len = self.region.len;
        self.blocks
            .iter()
            .flat_map(|b| b.region_labels.iter().map(move |&p| BasisState::from_packed(p, len, Topology::Chain)))
            .collect()
    }
}

fn union_find_root(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Partial trace of `v` over the complement of `region`.
pub fn reduced_density(v: &StateVector, region: &Region) -> Result<DensityMatrix> {
    if region.len == 0 {
        return Err(RegionError::Empty.into());
    }
    if region.sites != v.sites() {
        return Err(RegionError::OutOfRange { start: region.start, len: region.len, sites: v.sites() }.into());
    }
    let inside = region.indices();
    let outside = region.complement();
    let mut a_ids: HashMap<u128, usize> = HashMap::new();
    let mut b_ids: HashMap<u128, usize> = HashMap::new();
    let mut a_labels = Vec::new();
    let mut b_labels = Vec::new();
    let mut triples = Vec::with_capacity(v.support_len());
    for (s, amp) in v.iter() {
        let ka = s.pack_sites(&inside);
        let kb = s.pack_sites(&outside);
        let a = *a_ids.entry(ka).or_insert_with(|| {
            a_labels.push(ka);
            a_labels.len() - 1
        });
        let b = *b_ids.entry(kb).or_insert_with(|| {
            b_labels.push(kb);
            b_labels.len() - 1
        });
        triples.push((a, b, amp));
    }
    // bipartite components: region labels first, then complement labels
    let na = a_labels.len();
    let mut parent: Vec<usize> = (0..na + b_labels.len()).collect();
    for &(a, b, _) in &triples {
        let (x, y) = (union_find_root(&mut parent, a), union_find_root(&mut parent, na + b));
        if x != y {
            parent[x.max(y)] = x.min(y);
        }
    }
    let mut block_of: HashMap<usize, usize> = HashMap::new();
    let mut blocks: Vec<DensityBlock> = Vec::new();
    let mut local_a = vec![u32::MAX; na];
    let mut local_b = vec![u32::MAX; b_labels.len()];
    for (a, b, amp) in triples {
        let root = union_find_root(&mut parent, a);
        let k = *block_of.entry(root).or_insert_with(|| {
            blocks.push(DensityBlock { region_labels: Vec::new(), complement_labels: Vec::new(), entries: Vec::new() });
            blocks.len() - 1
        });
        let blk = &mut blocks[k];
        if local_a[a] == u32::MAX {
            local_a[a] = blk.region_labels.len() as u32;
            blk.region_labels.push(a_labels[a]);
        }
        if local_b[b] == u32::MAX {
            local_b[b] = blk.complement_labels.len() as u32;
            blk.complement_labels.push(b_labels[b]);
        }
        blk.entries.push((local_a[a], local_b[b], amp));
    }
    Ok(DensityMatrix { region: *region, blocks })
}

/// `-sum lambda log2 lambda` over eigenvalues above [`ENTROPY_CUTOFF`].
pub fn entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_spectrum(&rho.spectrum())
}

pub fn entropy_of_spectrum(values: &[f64]) -> f64 {
    values.iter().filter(|&&x| x > ENTROPY_CUTOFF).map(|&x| -x * x.log2()).sum()
}

/// One sector of a reduced state, labelled by the bits of the first `s` pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sector {
    pub bits: Vec<u8>,
    pub trace: f64,
    pub entropy_bits: f64,
}

/// Reduced state of a chain vector split by the bits that sites `2..=s+1`
/// carry at the end of each support state's path.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectorReport {
    pub s: usize,
    pub sectors: Vec<Sector>,
    /// No region or complement restriction appears in two sectors.
    pub block_diagonal: bool,
    pub entropy_bits: f64,
}

/// Splits `v` into sectors by the qubits at sites `1..=s` (0-based) of the final
/// state of each support state's path and checks that the sectors share no
/// region or complement restriction, so that `rho_A` is their direct sum.
pub fn pair_sectors(model: &Model, v: &StateVector, region: &Region, s: usize) -> Result<SectorReport> {
    if region.sites != v.sites() {
        return Err(RegionError::OutOfRange { start: region.start, len: region.len, sites: v.sites() }.into());
    }
    let inside = region.indices();
    let outside = region.complement();
    let mut parts: BTreeMap<Vec<u8>, Vec<(BasisState, f64)>> = BTreeMap::new();
    let mut owner: HashMap<(u8, u128), Vec<u8>> = HashMap::new();
    let mut block_diagonal = true;
    for (st, amp) in v.iter() {
        let last = *extract_path(model, &st)?.last();
        let bits: Vec<u8> = (1..=s).map(|i| last.get(i).bit().unwrap_or(0)).collect();
        for label in [(0u8, st.pack_sites(&inside)), (1, st.pack_sites(&outside))] {
            match owner.get(&label) {
                Some(b) if *b != bits => block_diagonal = false,
                Some(_) => {}
                None => {
                    owner.insert(label, bits.clone());
                }
            }
        }
        parts.entry(bits).or_default().push((st, amp));
    }
    let topology = v.basis().topology();
    let mut sectors = Vec::new();
    for (bits, amps) in parts {
        let trace: f64 = amps.iter().map(|a| a.1 * a.1).sum();
        let scale = 1.0 / trace.sqrt();
        let part = StateVector::from_states(v.sites(), topology, amps.into_iter().map(|(x, a)| (x, a * scale)).collect());
        let entropy_bits = entropy(&reduced_density(&part, region)?);
        sectors.push(Sector { bits, trace, entropy_bits });
    }
    let entropy_bits = entropy(&reduced_density(v, region)?);
    Ok(SectorReport { s, sectors, block_diagonal, entropy_bits })
}

/// One row of an entropy sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyReport {
    pub n: usize,
    pub t: usize,
    pub state: String,
    pub region_start: usize,
    pub region_len: usize,
    pub entropy_bits: f64,
    /// `s` on chains; `(min{r, n/4} - 2) / 16` on cycles.
    pub s_bound: f64,
    /// Measured `T_2 / T` for the segment length.
    pub c_split: f64,
    pub good_count: Option<usize>,
}

/// `(min{r, n/4} - 2) / 16`.
pub fn cycle_entropy_bound(n: usize, r: usize) -> f64 {
    ((r as f64).min(n as f64 / 4.0) - 2.0) / 16.0
}

/// Position `p` (1-based within a segment of length `n`) lies near an edge.
pub fn is_edge_position(n: usize, p: usize) -> bool {
    let (nf, pf) = (n as f64, p as f64);
    (2.0 <= pf && pf <= nf / 4.0) || (3.0 * nf / 4.0 <= pf && pf <= nf - 1.0)
}

/// Segment position holding the qubit entangled with position `p`.
pub fn partner_position(n: usize, p: usize) -> usize {
    n + 1 - p
}

/// Sites of `region` that are good for a state with segments `layout` of length `n`:
/// edge positions whose entangled partner lies outside the region.
pub fn good_particle_count(n: usize, layout: &Layout, region: &Region) -> usize {
    let mut count = 0;
    for seg in &layout.segments {
        if seg.len != n {
            continue;
        }
        for p in 1..=n {
            let site = (seg.start + p - 1) % layout.sites;
            if !is_edge_position(n, p) || !region.contains(site) {
                continue;
            }
            let partner = (seg.start + partner_position(n, p) - 1) % layout.sites;
            if !region.contains(partner) {
                count += 1;
            }
        }
    }
    count
}

/// Measured `c = T_2 / T` with `s = floor((n - 3) / 4)`.
pub fn c_split(n: usize) -> Result<f64> {
    Ok(split_phi_g(n, entropy_s(n))?.c)
}

/// Entropies over regions: prefixes on chains, every start position on cycles.
/// `t` is 1 for chains.
pub fn entropy_sweep(v: &StateVector, label: &str, n: usize, t: usize, sizes: &[usize]) -> Result<Vec<EntropyReport>> {
    let sites = v.sites();
    let topology = v.basis().topology();
    let c = c_split(n)?;
    let mut regions = Vec::new();
    for &len in sizes {
        match topology {
            Topology::Chain => regions.push(Region::new(0, len, sites, topology)?),
            Topology::Cycle => {
                for start in 0..sites {
                    regions.push(Region::new(start, len, sites, topology)?);
                }
            }
        }
    }
    let layout = match label.strip_prefix("psi:") {
        Some(i) => i.parse::<usize>().ok().map(|i| psi_layout(n, t, i)),
        None => None,
    };
    regions
        .par_iter()
        .map(|region| {
            let rho = reduced_density(v, region)?;
            let (s_bound, good_count) = match topology {
                Topology::Chain => (entropy_s(n) as f64, None),
                Topology::Cycle => {
                    (cycle_entropy_bound(n, region.len), layout.as_ref().map(|l| good_particle_count(n, l, region)))
                }
            };
            Ok(EntropyReport {
                n,
                t,
                state: label.to_string(),
                region_start: region.start,
                region_len: region.len,
                entropy_bits: entropy(&rho),
                s_bound,
                c_split: c,
                good_count,
            })
        })
        .collect()
}
