//! Configurations, packed standard-basis states, the structural predicates and
//! enumeration of the subspaces the Hamiltonians act on.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{EnumerationError, ParamError, PredicateError, RegionError, SymbolError};
use crate::model::Model;
use crate::symbol::{SiteState, Tag};

/// Largest supported site count (5 bits per site in a `u128`).
pub const MAX_SITES: usize = 25;

const BITS_PER_SITE: usize = 5;
const SITE_MASK: u128 = 0x1f;

/// Default cap on the number of materialized basis states.
pub const DEFAULT_BUDGET: usize = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Chain,
    Cycle,
}

impl Topology {
    pub const fn name(self) -> &'static str {
        match self {
            Topology::Chain => "chain",
            Topology::Cycle => "cycle",
        }
    }
}

/// A string of symbols with qubit values erased.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub sites: Vec<Tag>,
    pub topology: Topology,
}

impl Configuration {
    pub fn chain(sites: Vec<Tag>) -> Self {
        Configuration { sites, topology: Topology::Chain }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let glyphs: Vec<_> = self.sites.iter().map(|t| t.glyph()).collect();
        f.write_str(&glyphs.join(" "))
    }
}

/// A standard-basis state: one [`SiteState`] per site, packed 5 bits per site with
/// site 0 in the most significant position, so integer order is lexicographic order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    len: u8,
    topology: Topology,
    packed: u128,
}

impl BasisState {
    pub fn new(sites: &[SiteState], topology: Topology) -> Result<Self, EnumerationError> {
        if sites.is_empty() || sites.len() > MAX_SITES {
            return Err(EnumerationError::BadSiteCount(sites.len()));
        }
        let packed = sites.iter().fold(0u128, |acc, s| (acc << BITS_PER_SITE) | s.code() as u128);
        Ok(BasisState { len: sites.len() as u8, topology, packed })
    }

    pub fn chain(sites: &[SiteState]) -> Result<Self, EnumerationError> {
        Self::new(sites, Topology::Chain)
    }

    pub fn cycle(sites: &[SiteState]) -> Result<Self, EnumerationError> {
        Self::new(sites, Topology::Cycle)
    }

    pub(crate) const fn from_packed(packed: u128, len: usize, topology: Topology) -> Self {
        BasisState { len: len as u8, topology, packed }
    }

    pub const fn packed(&self) -> u128 {
        self.packed
    }

    pub const fn len(&self) -> usize {
        self.len as usize
    }

    pub const fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub const fn topology(&self) -> Topology {
        self.topology
    }

    #[inline]
    fn shift(&self, i: usize) -> usize {
        BITS_PER_SITE * (self.len as usize - 1 - i)
    }

    /// Site `i`. Panics if `i` is out of range.
    #[inline]
    pub fn get(&self, i: usize) -> SiteState {
        assert!(i < self.len as usize, "site {i} out of range");
        SiteState::from_code_unchecked(((self.packed >> self.shift(i)) & SITE_MASK) as u8)
    }

    #[inline]
    pub fn with_site(&self, i: usize, s: SiteState) -> Self {
        assert!(i < self.len as usize, "site {i} out of range");
        let shift = self.shift(i);
        let packed = (self.packed & !(SITE_MASK << shift)) | ((s.code() as u128) << shift);
        BasisState { packed, ..*self }
    }

    pub fn sites(&self) -> impl Iterator<Item = SiteState> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn to_vec(&self) -> Vec<SiteState> {
        self.sites().collect()
    }

    /// Nearest-neighbour bonds `(i, j)`; cycles include the wraparound bond.
    pub fn bonds(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.len();
        let count = match self.topology {
            Topology::Chain => n.saturating_sub(1),
            Topology::Cycle if n >= 2 => n,
            Topology::Cycle => 0,
        };
        (0..count).map(move |i| (i, (i + 1) % n))
    }

    /// The state moved `shift` positions to the right around the cycle.
    pub fn rotated(&self, shift: usize) -> Self {
        let n = self.len();
        let mut sites = vec![SiteState::LEFT_END; n];
        for (j, s) in self.sites().enumerate() {
            sites[(j + shift) % n] = s;
        }
        BasisState::new(&sites, self.topology).expect("same length")
    }

    pub fn configuration(&self) -> Configuration {
        Configuration { sites: self.sites().map(|s| s.tag()).collect(), topology: self.topology }
    }

    pub fn count(&self, tag: Tag) -> usize {
        self.sites().filter(|s| s.tag() == tag).count()
    }

    /// First control site, if any.
    pub fn control(&self) -> Option<(usize, SiteState)> {
        self.sites().enumerate().find(|(_, s)| s.tag().is_control())
    }

    /// Packs the listed sites (in order) into one integer key.
    pub fn pack_sites(&self, indices: &[usize]) -> u128 {
        indices.iter().fold(0u128, |acc, &i| (acc << BITS_PER_SITE) | self.get(i).code() as u128)
    }

    /// Parses whitespace-separated glyphs into a state with the given topology.
    pub fn parse(text: &str, topology: Topology) -> Result<Self, SymbolError> {
        let sites = text
            .split_whitespace()
            .map(str::parse::<SiteState>)
            .collect::<Result<Vec<_>, _>>()?;
        BasisState::new(&sites, topology).map_err(|_| SymbolError::UnknownGlyph(text.to_string()))
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sites().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")?;
        if self.topology == Topology::Cycle {
            f.write_str("@cycle")?;
        }
        Ok(())
    }
}

/// Chain states in glyph notation, e.g. `< e0 => W >`.
impl FromStr for BasisState {
    type Err = SymbolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BasisState::parse(s, Topology::Chain)
    }
}

/// A contiguous block of sites, wrapping around on cycles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Region {
    pub start: usize,
    pub len: usize,
    pub sites: usize,
    pub topology: Topology,
}

impl Region {
    pub fn new(start: usize, len: usize, sites: usize, topology: Topology) -> Result<Self, RegionError> {
        if len == 0 {
            return Err(RegionError::Empty);
        }
        let fits = match topology {
            Topology::Chain => start + len <= sites,
            Topology::Cycle => start < sites && len <= sites,
        };
        if !fits {
            return Err(RegionError::OutOfRange { start, len, sites });
        }
        Ok(Region { start, len, sites, topology })
    }

    /// Whether the region runs past the last site back to site 0.
    pub fn wraps(&self) -> bool {
        self.start + self.len > self.sites
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.len).map(|k| (self.start + k) % self.sites).collect()
    }

    pub fn complement(&self) -> Vec<usize> {
        let mut inside = vec![false; self.sites];
        for i in self.indices() {
            inside[i] = true;
        }
        (0..self.sites).filter(|&i| !inside[i]).collect()
    }

    pub fn contains(&self, i: usize) -> bool {
        let offset = (i + self.sites - self.start) % self.sites;
        i < self.sites && offset < self.len
    }
}

/// Size parameters of the ground-state constructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Params {
    /// Segment (or chain) length.
    pub n: usize,
    /// Qubit pairs per segment, `(n - 3) / 2`.
    pub m: usize,
    /// Number of segments on the cycle.
    pub t: usize,
    /// Generic segment length under study.
    pub l: usize,
}

impl Params {
    pub fn new(n: usize) -> Result<Self, ParamError> {
        if n < 5 || n % 2 == 0 {
            return Err(ParamError::BadSegmentLength(n));
        }
        Ok(Params { n, m: (n - 3) / 2, t: 1, l: n })
    }

    pub fn with_segments(self, t: usize) -> Result<Self, ParamError> {
        if t == 0 {
            return Err(ParamError::NoSegments);
        }
        Ok(Params { t, ..self })
    }

    pub fn total_sites(&self) -> usize {
        self.n * self.t
    }
}

/// `< ^^ U^m W^m >` with the given U qubit values.
pub fn good_start(n: usize, bits: &[u8]) -> Result<BasisState, ParamError> {
    let p = Params::new(n)?;
    if bits.len() != p.m {
        return Err(ParamError::BadQubitString { got: bits.len(), expected: p.m });
    }
    let mut sites = vec![SiteState::LEFT_END, SiteState::plain(Tag::DoubleUp)];
    sites.extend(bits.iter().map(|&b| SiteState::with_bit(Tag::UpperU, b)));
    sites.extend(std::iter::repeat(SiteState::plain(Tag::UpperW)).take(p.m));
    sites.push(SiteState::RIGHT_END);
    Ok(BasisState::chain(&sites).expect("n <= MAX_SITES"))
}

/// Whether the configuration of `s` is `< ^^ U^m W^m >` for some `m`.
pub fn is_good_start(s: &BasisState) -> bool {
    let n = s.len();
    if n < 3 || (n - 3) % 2 != 0 {
        return false;
    }
    let m = (n - 3) / 2;
    let c = s.configuration().sites;
    c[0] == Tag::LeftEnd
        && c[1] == Tag::DoubleUp
        && c[2..2 + m].iter().all(|&t| t == Tag::UpperU)
        && c[2 + m..2 + 2 * m].iter().all(|&t| t == Tag::UpperW)
        && c[n - 1] == Tag::RightEnd
}

/// No illegal pair from items 1–8 of the built-in rules for the configuration's topology.
pub fn is_well_formed(c: &Configuration) -> bool {
    if c.is_empty() {
        return false;
    }
    let model = match c.topology {
        Topology::Chain => Model::chain(),
        Topology::Cycle => Model::cycle(),
    };
    let sites: Vec<_> = c.sites.iter().map(|&t| SiteState::plain(t)).collect();
    BasisState::new(&sites, c.topology).map(|s| model.is_well_formed(&s)).unwrap_or(false)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Repeat {
    Optional,
    Star,
    One,
}

struct Slot {
    tags: &'static [Tag],
    repeat: Repeat,
}

const fn slot(tags: &'static [Tag], repeat: Repeat) -> Slot {
    Slot { tags, repeat }
}

use Tag::*;

const EXPRESSIONS: [&[Slot]; 3] = [
    &[
        slot(&[LeftEnd], Repeat::Optional),
        slot(&[LowerE], Repeat::Star),
        slot(&[LowerU, LowerW], Repeat::Star),
        slot(&[RightArrow, LeftArrow, DoubleRightArrow], Repeat::One),
        slot(&[UpperW, UpperU], Repeat::Star),
        slot(&[UpperE], Repeat::Star),
        slot(&[RightEnd], Repeat::Optional),
    ],
    &[
        slot(&[LeftEnd], Repeat::Optional),
        slot(&[LowerE], Repeat::Star),
        slot(&[Up, DoubleUp], Repeat::One),
        slot(&[UpperW, UpperU], Repeat::Star),
        slot(&[UpperE], Repeat::Star),
        slot(&[RightEnd], Repeat::Optional),
    ],
    &[
        slot(&[LeftEnd], Repeat::Optional),
        slot(&[LowerE], Repeat::Star),
        slot(&[LowerW, LowerU], Repeat::Star),
        slot(&[Down], Repeat::One),
        slot(&[UpperE], Repeat::Star),
        slot(&[RightEnd], Repeat::Optional),
    ],
];

fn is_substring_of(sites: &[Tag], expr: &[Slot]) -> bool {
    let mut slots = Vec::with_capacity(sites.len());
    for t in sites {
        match expr.iter().position(|s| s.tags.contains(t)) {
            Some(k) => slots.push(k),
            None => return false,
        }
    }
    if slots.windows(2).any(|w| w[0] > w[1]) {
        return false;
    }
    for (k, s) in expr.iter().enumerate() {
        let used = slots.iter().filter(|&&x| x == k).count();
        if s.repeat != Repeat::Star && used > 1 {
            return false;
        }
    }
    let (lo, hi) = (slots[0], slots[slots.len() - 1]);
    (lo + 1..hi).all(|k| expr[k].repeat != Repeat::One || slots.contains(&k))
}

/// Chain well-formedness by direct matching against the three well-formed
/// expressions (any nonempty substring of one of them).
pub fn matches_well_formed_grammar(c: &Configuration) -> bool {
    !c.is_empty() && EXPRESSIONS.iter().any(|e| is_substring_of(&c.sites, e))
}

pub fn is_bracketed(s: &BasisState) -> bool {
    s.len() >= 2 && s.get(0) == SiteState::LEFT_END && s.get(s.len() - 1) == SiteState::RIGHT_END
}

pub fn is_balanced(model: &Model, s: &BasisState) -> Result<bool, PredicateError> {
    if !is_bracketed(s) {
        return Err(PredicateError::NotBracketed);
    }
    if !model.is_well_formed(s) {
        return Err(PredicateError::NotWellFormed);
    }
    let tags = s.configuration().sites;
    let last_u = tags.iter().rposition(|t| matches!(t, UpperU | LowerU));
    let first_w = tags.iter().position(|t| matches!(t, UpperW | LowerW));
    if let (Some(u), Some(w)) = (last_u, first_w) {
        if u > w {
            return Ok(false);
        }
    }
    let count = |f: &dyn Fn(Tag) -> bool| tags.iter().filter(|&&t| f(t)).count();
    let lower_e = count(&|t| t == LowerE);
    let upper_e = count(&|t| t == UpperE);
    let u = count(&|t| matches!(t, UpperU | LowerU));
    let w = count(&|t| matches!(t, UpperW | LowerW));
    let Some(control) = tags.iter().copied().find(|t| t.is_control()) else {
        return Ok(true);
    };
    let ok = match control {
        RightArrow | DoubleRightArrow | Down => {
            lower_e == upper_e + 1
                && u + 1 == w
                && match control {
                    DoubleRightArrow => lower_e == 1,
                    RightArrow => lower_e >= 2,
                    _ => true,
                }
        }
        DoubleUp => lower_e == upper_e && u == w && lower_e == 0,
        Up | LeftArrow => lower_e == upper_e && u == w && lower_e >= 1,
        _ => unreachable!("control tags"),
    };
    Ok(ok)
}

pub fn is_consistent(model: &Model, s: &BasisState) -> Result<bool, PredicateError> {
    if !is_balanced(model, s)? {
        return Err(PredicateError::NotBalanced);
    }
    let sites = s.to_vec();
    let lower: Vec<u8> = sites.iter().filter(|x| x.tag() == LowerE).filter_map(|x| x.bit()).collect();
    let upper: Vec<u8> = sites.iter().rev().filter(|x| x.tag() == UpperE).filter_map(|x| x.bit()).collect();
    if upper.iter().zip(&lower).any(|(a, b)| a != b) || upper.len() > lower.len() {
        return Ok(false);
    }
    if let Some((_, c)) = s.control() {
        if matches!(c.tag(), RightArrow | DoubleRightArrow | Down) && lower.last() != c.bit().as_ref() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Which chain states to enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChainFilter {
    WellFormed,
    BracketedWellFormed,
}

impl ChainFilter {
    pub const fn name(self) -> &'static str {
        match self {
            ChainFilter::WellFormed => "well-formed",
            ChainFilter::BracketedWellFormed => "bracketed",
        }
    }
}

/// Sorted, duplicate-free list of basis states with a bijective index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisIndex {
    sites: usize,
    topology: Topology,
    label: String,
    states: Vec<u128>,
}

impl BasisIndex {
    /// Builds an index from arbitrary states of one shape. Sorts and deduplicates.
    pub fn from_states(
        sites: usize,
        topology: Topology,
        label: impl Into<String>,
        states: impl IntoIterator<Item = BasisState>,
    ) -> Self {
        let mut packed: Vec<u128> = states
            .into_iter()
            .inspect(|s| assert!(s.len() == sites && s.topology() == topology, "state shape mismatch"))
            .map(|s| s.packed())
            .collect();
        packed.sort_unstable();
        packed.dedup();
        BasisIndex { sites, topology, label: label.into(), states: packed }
    }

    fn from_sorted(sites: usize, topology: Topology, label: impl Into<String>, states: Vec<u128>) -> Self {
        debug_assert!(states.windows(2).all(|w| w[0] < w[1]));
        BasisIndex { sites, topology, label: label.into(), states }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn get(&self, i: usize) -> BasisState {
        BasisState::from_packed(self.states[i], self.sites, self.topology)
    }

    pub fn index_of(&self, s: &BasisState) -> Option<usize> {
        if s.len() != self.sites || s.topology() != self.topology {
            return None;
        }
        self.states.binary_search(&s.packed()).ok()
    }

    pub fn contains(&self, s: &BasisState) -> bool {
        self.index_of(s).is_some()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = BasisState> + '_ {
        self.states.iter().map(|&p| BasisState::from_packed(p, self.sites, self.topology))
    }

    /// One state per line in glyph notation after a `# n=.. filter=.. count=..` header.
    pub fn write_export<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# n={} filter={} count={}", self.sites, self.label, self.len())?;
        for s in self.iter() {
            writeln!(w, "{s}")?;
        }
        Ok(())
    }
}

fn check_sites(n: usize) -> Result<(), EnumerationError> {
    if n == 0 || n > MAX_SITES {
        Err(EnumerationError::BadSiteCount(n))
    } else {
        Ok(())
    }
}

/// Constraints for a string enumeration over the declared site states.
struct StringSpec<'a> {
    model: &'a Model,
    len: usize,
    first: Option<SiteState>,
    last: Option<SiteState>,
    /// Forbid delimiters strictly inside the string.
    plain_interior: bool,
    /// Also require the wraparound pair to be well-formed.
    cyclic: bool,
    /// Forbid delimiters anywhere.
    no_delimiters: bool,
}

impl StringSpec<'_> {
    fn allowed_at(&self, i: usize, s: SiteState) -> bool {
        let delim = s == SiteState::LEFT_END || s == SiteState::RIGHT_END;
        if self.no_delimiters && delim {
            return false;
        }
        let pinned_first = (i == 0).then_some(self.first).flatten();
        let pinned_last = (i + 1 == self.len).then_some(self.last).flatten();
        if pinned_first.is_some() || pinned_last.is_some() {
            return pinned_first.is_none_or(|f| s == f) && pinned_last.is_none_or(|l| s == l);
        }
        !(self.plain_interior && delim && i > 0 && i + 1 < self.len)
    }

    fn alphabet(&self) -> Vec<SiteState> {
        self.model.rules().site_states()
    }

    /// Exact number of matching strings (before materialization).
    fn count(&self) -> u128 {
        let alphabet = self.alphabet();
        let k = alphabet.len();
        let starts: Vec<usize> = if self.cyclic { (0..k).collect() } else { vec![usize::MAX] };
        let mut total = 0u128;
        for &start in &starts {
            let mut ways: Vec<u128> = alphabet
                .iter()
                .enumerate()
                .map(|(a, &s)| {
                    let first_ok = self.allowed_at(0, s) && (start == usize::MAX || a == start);
                    u128::from(first_ok)
                })
                .collect();
            for i in 1..self.len {
                let mut next = vec![0u128; k];
                for (b, &sb) in alphabet.iter().enumerate() {
                    if !self.allowed_at(i, sb) {
                        continue;
                    }
                    next[b] = alphabet
                        .iter()
                        .enumerate()
                        .filter(|&(_, &sa)| self.model.pair_well_formed(sa, sb))
                        .map(|(a, _)| ways[a])
                        .sum();
                }
                ways = next;
            }
            total += ways
                .iter()
                .enumerate()
                .filter(|&(b, _)| start == usize::MAX || self.model.pair_well_formed(alphabet[b], alphabet[start]))
                .map(|(_, w)| w)
                .sum::<u128>();
        }
        total
    }

    /// Packed strings in increasing order.
    fn materialize(&self) -> Vec<u128> {
        let alphabet = self.alphabet();
        let mut out = Vec::new();
        let mut stack: Vec<SiteState> = Vec::with_capacity(self.len);
        self.dfs(&alphabet, &mut stack, 0u128, &mut out);
        out
    }

    fn dfs(&self, alphabet: &[SiteState], stack: &mut Vec<SiteState>, packed: u128, out: &mut Vec<u128>) {
        let i = stack.len();
        if i == self.len {
            if !self.cyclic || self.model.pair_well_formed(stack[i - 1], stack[0]) {
                out.push(packed);
            }
            return;
        }
        for &s in alphabet {
            if !self.allowed_at(i, s) {
                continue;
            }
            if let Some(&prev) = stack.last() {
                if !self.model.pair_well_formed(prev, s) {
                    continue;
                }
            }
            stack.push(s);
            self.dfs(alphabet, stack, (packed << BITS_PER_SITE) | s.code() as u128, out);
            stack.pop();
        }
    }
}

fn check_budget(count: u128, budget: usize) -> Result<(), EnumerationError> {
    if count > budget as u128 {
        Err(EnumerationError::BudgetExceeded { count, cap: budget })
    } else {
        Ok(())
    }
}

fn chain_spec(model: &Model, n: usize, filter: ChainFilter) -> StringSpec<'_> {
    let bracketed = filter == ChainFilter::BracketedWellFormed;
    StringSpec {
        model,
        len: n,
        first: bracketed.then_some(SiteState::LEFT_END),
        last: bracketed.then_some(SiteState::RIGHT_END),
        plain_interior: false,
        cyclic: false,
        no_delimiters: false,
    }
}

/// Number of chain states `enumerate_chain_basis` would return.
pub fn count_chain_states(model: &Model, n: usize, filter: ChainFilter) -> Result<u128, EnumerationError> {
    check_sites(n)?;
    Ok(chain_spec(model, n, filter).count())
}

/// Well-formed chain states on `n` sites, sorted lexicographically.
pub fn enumerate_chain_basis(
    model: &Model,
    n: usize,
    filter: ChainFilter,
    budget: usize,
) -> Result<BasisIndex, EnumerationError> {
    check_sites(n)?;
    let spec = chain_spec(model, n, filter);
    check_budget(spec.count(), budget)?;
    Ok(BasisIndex::from_sorted(n, Topology::Chain, filter.name(), spec.materialize()))
}

/// Bracketed well-formed strings of length `l` with no interior delimiters.
fn segment_strings(model: &Model, l: usize) -> StringSpec<'_> {
    StringSpec {
        model,
        len: l,
        first: Some(SiteState::LEFT_END),
        last: Some(SiteState::RIGHT_END),
        plain_interior: true,
        cyclic: false,
        no_delimiters: false,
    }
}

/// Bracketed well-formed segment states of length `l` under `model`, as chain states.
pub fn enumerate_segment_basis(model: &Model, l: usize, budget: usize) -> Result<BasisIndex, EnumerationError> {
    check_sites(l)?;
    let spec = segment_strings(model, l);
    check_budget(spec.count(), budget)?;
    Ok(BasisIndex::from_sorted(l, Topology::Chain, "segment", spec.materialize()))
}

/// A maximal run from a `<` site through the next `>` site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Segment {
    pub start: usize,
    pub len: usize,
}

/// Positions of all segments on a cycle of `sites` sites.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Layout {
    pub sites: usize,
    pub segments: Vec<Segment>,
}

impl Layout {
    /// Segments starting at the given sorted positions; each runs up to the next start.
    pub fn from_starts(sites: usize, starts: &[usize]) -> Self {
        let segments = starts
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let next = if k + 1 < starts.len() { starts[k + 1] } else { starts[0] + sites };
                Segment { start: s, len: next - s }
            })
            .collect();
        Layout { sites, segments }
    }

    /// `t` segments of length `n`, the first starting at `offset`.
    pub fn uniform(n: usize, t: usize, offset: usize) -> Self {
        let sites = n * t;
        let mut starts: Vec<usize> = (0..t).map(|k| (offset + k * n) % sites).collect();
        starts.sort_unstable();
        Layout::from_starts(sites, &starts)
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.segments.iter().map(|s| s.len).collect()
    }

    pub fn segment_sites(&self, k: usize) -> Vec<usize> {
        let s = self.segments[k];
        (0..s.len).map(|j| (s.start + j) % self.sites).collect()
    }
}

/// Smallest segment length kept in cycle enumerations. Every state of a length-3
/// segment `< X >` carries an illegal pair, and `< >` is not well-formed.
pub const MIN_SEGMENT_LEN: usize = 4;

/// All segment layouts on a cycle with every segment at least `min_len` long.
pub fn cycle_layouts(sites: usize, min_len: usize) -> Vec<Layout> {
    let mut out = Vec::new();
    let min_len = min_len.max(1);
    for first in 0..sites {
        // the first segment start is the smallest start
        let mut starts = vec![first];
        extend_layouts(sites, min_len, first, &mut starts, &mut out);
    }
    out.sort();
    out
}

fn extend_layouts(sites: usize, min_len: usize, first: usize, starts: &mut Vec<usize>, out: &mut Vec<Layout>) {
    let last = *starts.last().unwrap();
    if first + sites - last >= min_len {
        out.push(Layout::from_starts(sites, starts));
    }
    let mut next = last + min_len;
    while next < sites && first + sites - next >= min_len {
        starts.push(next);
        extend_layouts(sites, min_len, first, starts, out);
        starts.pop();
        next += 1;
    }
}

/// The segment structure of a cycle state, or `None` when delimiters are not
/// arranged as `> <` junctions around segments. A chain state counts as one
/// segment when bracketed.
pub fn segments_of(s: &BasisState) -> Option<Vec<Segment>> {
    let n = s.len();
    match s.topology() {
        Topology::Chain => is_bracketed(s).then(|| vec![Segment { start: 0, len: n }]),
        Topology::Cycle => {
            let starts: Vec<usize> = (0..n).filter(|&i| s.get(i) == SiteState::LEFT_END).collect();
            let ends = (0..n).filter(|&i| s.get(i) == SiteState::RIGHT_END).count();
            if starts.len() != ends {
                return None;
            }
            if starts.is_empty() {
                return Some(Vec::new());
            }
            let layout = Layout::from_starts(n, &starts);
            for seg in &layout.segments {
                let end = (seg.start + seg.len - 1) % n;
                if seg.len < 2 || s.get(end) != SiteState::RIGHT_END {
                    return None;
                }
            }
            Some(layout.segments)
        }
    }
}

/// Well-formed cycle states whose segments are exactly `layout`.
pub fn enumerate_layout_basis(model: &Model, layout: &Layout, budget: usize) -> Result<BasisIndex, EnumerationError> {
    check_sites(layout.sites)?;
    let specs: Vec<_> = layout.segments.iter().map(|s| segment_strings(model, s.len)).collect();
    let count: u128 = specs.iter().map(|s| s.count()).product();
    check_budget(count, budget)?;
    let pieces: Vec<Vec<u128>> = specs.iter().map(|s| s.materialize()).collect();
    let states = layout_product(layout, &pieces);
    let label = format!(
        "layout:{}",
        layout.segments.iter().map(|s| format!("{}+{}", s.start, s.len)).collect::<Vec<_>>().join(",")
    );
    Ok(BasisIndex::from_states(layout.sites, Topology::Cycle, label, states))
}

fn layout_product(layout: &Layout, pieces: &[Vec<u128>]) -> Vec<BasisState> {
    let n = layout.sites;
    let mut out = Vec::new();
    let mut sites = vec![SiteState::LEFT_END; n];
    fill_layout(layout, pieces, 0, &mut sites, &mut out);
    debug_assert!(out.iter().all(|s| s.len() == n));
    out
}

fn fill_layout(layout: &Layout, pieces: &[Vec<u128>], k: usize, sites: &mut [SiteState], out: &mut Vec<BasisState>) {
    if k == layout.segments.len() {
        out.push(BasisState::cycle(sites).expect("site count checked"));
        return;
    }
    let seg = layout.segments[k];
    for &p in &pieces[k] {
        let piece = BasisState::from_packed(p, seg.len, Topology::Chain);
        for j in 0..seg.len {
            sites[(seg.start + j) % layout.sites] = piece.get(j);
        }
        fill_layout(layout, pieces, k + 1, sites, out);
    }
}

fn segmentless_spec(model: &Model, sites: usize) -> StringSpec<'_> {
    StringSpec {
        model,
        len: sites,
        first: None,
        last: None,
        plain_interior: false,
        cyclic: true,
        no_delimiters: true,
    }
}

/// Number of states `enumerate_cycle_basis` would return.
pub fn count_cycle_states(model: &Model, sites: usize) -> Result<u128, EnumerationError> {
    check_sites(sites)?;
    let mut total = segmentless_spec(model, sites).count();
    for layout in cycle_layouts(sites, MIN_SEGMENT_LEN) {
        total += layout.segments.iter().map(|s| segment_strings(model, s.len).count()).product::<u128>();
    }
    Ok(total)
}

/// All well-formed cycle states on `sites` sites: states made of segments of
/// length at least [`MIN_SEGMENT_LEN`] joined by `> <`, plus the segmentless states.
pub fn enumerate_cycle_basis(model: &Model, sites: usize, budget: usize) -> Result<BasisIndex, EnumerationError> {
    check_budget(count_cycle_states(model, sites)?, budget)?;
    let mut states: Vec<BasisState> = segmentless_spec(model, sites)
        .materialize()
        .into_iter()
        .map(|p| BasisState::from_packed(p, sites, Topology::Cycle))
        .collect();
    let mut cache: Vec<Option<Vec<u128>>> = vec![None; sites + 1];
    for layout in cycle_layouts(sites, MIN_SEGMENT_LEN) {
        for seg in &layout.segments {
            if cache[seg.len].is_none() {
                cache[seg.len] = Some(segment_strings(model, seg.len).materialize());
            }
        }
        let pieces: Vec<Vec<u128>> = layout.segments.iter().map(|s| cache[s.len].clone().unwrap()).collect();
        states.extend(layout_product(&layout, &pieces));
    }
    Ok(BasisIndex::from_states(sites, Topology::Cycle, "cycle", states))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(text: &str) -> BasisState {
        text.parse().unwrap()
    }

    #[test]
    fn packing_round_trip() {
        let s = st("< e0 =>0 W >");
        assert_eq!(s.len(), 5);
        assert_eq!(s.to_string(), "< e0 =>0 W >");
        assert_eq!(s.get(2), SiteState::with_bit(Tag::DoubleRightArrow, 0));
        let t = s.with_site(2, SiteState::with_bit(Tag::DoubleRightArrow, 1));
        assert_eq!(t.to_string(), "< e0 =>1 W >");
        assert!(s < t);
    }

    #[test]
    fn well_formed_examples() {
        let cfg = |glyphs: &str| st(glyphs).configuration();
        assert!(is_well_formed(&cfg("< e0 <- U0 W >")));
        assert!(!is_well_formed(&cfg("< <- ->0 >")));
        assert!(is_well_formed(&cfg("e0")));
        assert!(matches_well_formed_grammar(&cfg("< e0 <- U0 W >")));
        assert!(!matches_well_formed_grammar(&cfg("< <- ->0 >")));
        assert!(matches_well_formed_grammar(&cfg("e0")));
        assert!(!matches_well_formed_grammar(&Configuration::chain(vec![])));
    }

    #[test]
    fn legality_examples() {
        let m = Model::chain();
        let v = m.violations(&st("< e0 ->1 W >"));
        assert_eq!(v, vec![crate::model::Violation { position: 1, item: 13 }]);
        assert!(m.violations(&st("< ^^ U0 W >")).is_empty());
        let v = m.violations(&st("< ^ e0 W >"));
        assert!(v.contains(&crate::model::Violation { position: 0, item: 11 }));
    }

    #[test]
    fn balance_and_consistency() {
        let m = Model::chain();
        let s = st("< e0 =>0 W >");
        assert_eq!(is_balanced(m, &s), Ok(true));
        assert_eq!(is_consistent(m, &s), Ok(true));
        assert_eq!(is_consistent(m, &st("< e0 =>1 W >")), Ok(false));
        assert_eq!(is_balanced(m, &st("< e0 e0 =>0 W >")), Ok(false));
        assert_eq!(is_balanced(m, &st("e0 =>0 W")), Err(PredicateError::NotBracketed));
        assert_eq!(is_balanced(m, &st("< =>0 e0 >")), Err(PredicateError::NotWellFormed));
        assert_eq!(is_consistent(m, &st("< e0 e0 =>0 W >")), Err(PredicateError::NotBalanced));
    }

    #[test]
    fn small_enumerations() {
        let m = Model::chain();
        let b2 = enumerate_chain_basis(m, 2, ChainFilter::BracketedWellFormed, 100).unwrap();
        assert!(b2.is_empty());
        let b5 = enumerate_chain_basis(m, 5, ChainFilter::BracketedWellFormed, 1 << 20).unwrap();
        assert!(b5.contains(&st("< ^^ U1 W >")));
        for (i, s) in b5.iter().enumerate() {
            assert_eq!(b5.index_of(&s), Some(i));
        }
        let err = enumerate_chain_basis(m, 7, ChainFilter::WellFormed, 10).unwrap_err();
        assert!(matches!(err, EnumerationError::BudgetExceeded { cap: 10, .. }));
        assert!(matches!(enumerate_chain_basis(m, 0, ChainFilter::WellFormed, 10), Err(EnumerationError::BadSiteCount(0))));
    }

    #[test]
    fn regions() {
        let r = Region::new(8, 4, 10, Topology::Cycle).unwrap();
        assert!(r.wraps());
        assert_eq!(r.indices(), vec![8, 9, 0, 1]);
        assert_eq!(r.complement(), vec![2, 3, 4, 5, 6, 7]);
        assert!(r.contains(0) && !r.contains(5));
        assert_eq!(Region::new(0, 0, 5, Topology::Chain), Err(RegionError::Empty));
        assert!(Region::new(3, 3, 5, Topology::Chain).is_err());
    }

    #[test]
    fn layouts() {
        let l = cycle_layouts(10, 4);
        assert!(l.contains(&Layout::uniform(5, 2, 0)));
        assert!(l.contains(&Layout::from_starts(10, &[3])));
        assert!(l.iter().all(|x| x.lengths().iter().all(|&k| k >= 4)));
        assert!(l.iter().all(|x| x.lengths().iter().sum::<usize>() == 10));
        // one-segment layouts: 10 starts; two segments (4,6),(5,5),(6,4) shapes
        let singles = l.iter().filter(|x| x.segments.len() == 1).count();
        assert_eq!(singles, 10);
        let doubles = l.iter().filter(|x| x.segments.len() == 2).count();
        assert_eq!(doubles, 15);
        assert_eq!(Layout::uniform(5, 2, 3).segments, vec![Segment { start: 3, len: 5 }, Segment { start: 8, len: 5 }]);
    }

    #[test]
    fn params() {
        assert_eq!(Params::new(7).unwrap().m, 2);
        assert_eq!(Params::new(6), Err(ParamError::BadSegmentLength(6)));
        assert_eq!(Params::new(5).unwrap().with_segments(0), Err(ParamError::NoSegments));
        assert_eq!(good_start(7, &[0, 1]).unwrap().to_string(), "< ^^ U0 U1 W W >");
        assert!(is_good_start(&good_start(9, &[1, 1, 0]).unwrap()));
    }
}
