//! Transition rules, illegal pairs and single-site penalties as data.
//!
//! Rules are stored at schema level (symbol tags plus a qubit action) and expanded
//! to concrete site-state pairs on demand; see [`TransitionRule::expand`].
//! Illegal-pair item numbers follow the published list (1–14), with the two cycle
//! additions numbered 15 (`UUP RIGHT_END`) and 16 (`LEFT_END X`, X not in {UUP, e}).
//!
//! Item 17 holds the endpoint guards. Without them a control can stall against a
//! delimiter (`< ->0 E0 >` runs to `< v0 E0 >`, `< e0 <- >` to `< e0 ^ >`) and every
//! state on the way is legal, so the null space of the chain terms picks up states
//! that never came from a good start. No good path contains a guard pair.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

use crate::configspace::{enumerate_chain_basis, ChainFilter};
use crate::error::{Result, RuleSetError};
use crate::model::Model;
use crate::symbol::{SiteState, Tag};
use crate::configspace::BasisState;

/// A declared symbol: tag, number of internal levels, control flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SiteSymbol {
    pub tag: Tag,
    pub arity: u8,
    pub control: bool,
}

impl SiteSymbol {
    /// The symbol with its intrinsic arity and control flag.
    pub const fn of(tag: Tag) -> Self {
        SiteSymbol { tag, arity: tag.arity(), control: tag.is_control() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// How qubit values flow through a transition rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QubitAction {
    /// Control keeps its bit, the non-control site keeps its bit.
    Carry,
    /// The single lhs qubit is copied onto both rhs sites.
    Entangle,
    /// The control's bit moves to the named rhs site.
    Transfer(Side),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TransitionRule {
    /// Item number in the published rule list (several schemas may share one).
    pub item: u8,
    pub lhs: [Tag; 2],
    pub rhs: [Tag; 2],
    pub action: QubitAction,
}

impl fmt::Display for TransitionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} -> {} {}", self.lhs[0], self.lhs[1], self.rhs[0], self.rhs[1])
    }
}

impl TransitionRule {
    pub fn new(item: u8, lhs: [Tag; 2], rhs: [Tag; 2], action: QubitAction) -> Self {
        TransitionRule { item, lhs, rhs, action }
    }

    /// Concrete `(lhs pair, rhs pair)` terms, summed over all qubit values.
    ///
    /// Assumes the rule passed [`RuleSet::new`] validation against `symbols`.
    pub fn expand(&self, symbols: &[SiteSymbol]) -> Vec<([SiteState; 2], [SiteState; 2])> {
        let arity = |t: Tag| lookup(symbols, t).map_or(t.arity(), |s| s.arity);
        let is_ctrl = |t: Tag| lookup(symbols, t).is_some_and(|s| s.control);
        let state = |t: Tag, bit: u8| {
            if arity(t) == 2 {
                SiteState::with_bit(t, bit)
            } else {
                SiteState::plain(t)
            }
        };
        let lc = if is_ctrl(self.lhs[0]) { 0 } else { 1 };
        let rc = if is_ctrl(self.rhs[0]) { 0 } else { 1 };
        let mut out = Vec::new();
        let bits = |t: Tag| if arity(t) == 2 { vec![0u8, 1] } else { vec![0u8] };
        for b0 in bits(self.lhs[0]) {
            for b1 in bits(self.lhs[1]) {
                let lb = [b0, b1];
                let lhs = [state(self.lhs[0], b0), state(self.lhs[1], b1)];
                let mut rb = [0u8; 2];
                match self.action {
                    QubitAction::Carry => {
                        rb[rc] = lb[lc];
                        rb[1 - rc] = lb[1 - lc];
                    }
                    QubitAction::Entangle => {
                        let x = if arity(self.lhs[0]) == 2 { b0 } else { b1 };
                        rb = [x, x];
                    }
                    QubitAction::Transfer(side) => {
                        let i = if side == Side::Left { 0 } else { 1 };
                        rb[i] = lb[lc];
                    }
                }
                let rhs = [state(self.rhs[0], rb[0]), state(self.rhs[1], rb[1])];
                out.push((lhs, rhs));
            }
        }
        out
    }
}

fn lookup(symbols: &[SiteSymbol], tag: Tag) -> Option<SiteSymbol> {
    symbols.iter().copied().find(|s| s.tag == tag)
}

/// Base of an illegal-pair pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PatternBase {
    Any,
    Lower,
    Upper,
    Control,
    Symbol(Tag),
    State(SiteState),
}

/// A single-site pattern: a base class minus an optional list of excluded tags.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pattern {
    pub base: PatternBase,
    pub except: Vec<Tag>,
}

impl Pattern {
    pub const ANY: Pattern = Pattern { base: PatternBase::Any, except: Vec::new() };
    pub const LOWER: Pattern = Pattern { base: PatternBase::Lower, except: Vec::new() };
    pub const UPPER: Pattern = Pattern { base: PatternBase::Upper, except: Vec::new() };
    pub const CONTROL: Pattern = Pattern { base: PatternBase::Control, except: Vec::new() };

    pub const fn sym(tag: Tag) -> Self {
        Pattern { base: PatternBase::Symbol(tag), except: Vec::new() }
    }

    pub const fn state(tag: Tag, bit: u8) -> Self {
        Pattern { base: PatternBase::State(SiteState::with_bit(tag, bit)), except: Vec::new() }
    }

    pub fn except(mut self, tags: &[Tag]) -> Self {
        self.except.extend_from_slice(tags);
        self
    }

    /// Whether `s` matches, given the declared symbol table.
    pub fn matches(&self, s: SiteState, symbols: &[SiteSymbol]) -> bool {
        let Some(sym) = lookup(symbols, s.tag()) else { return false };
        let base = match self.base {
            PatternBase::Any => true,
            PatternBase::Lower => sym.tag.is_lower(),
            PatternBase::Upper => sym.tag.is_upper(),
            PatternBase::Control => sym.control,
            PatternBase::Symbol(t) => t == sym.tag,
            PatternBase::State(st) => st == s,
        };
        base && !self.except.contains(&sym.tag)
    }

    fn referenced_tags(&self) -> Vec<Tag> {
        let mut v = self.except.clone();
        match self.base {
            PatternBase::Symbol(t) => v.push(t),
            PatternBase::State(s) => v.push(s.tag()),
            _ => {}
        }
        v
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.base {
            PatternBase::Any => f.write_str("ANY")?,
            PatternBase::Lower => f.write_str("LOWER")?,
            PatternBase::Upper => f.write_str("UPPER")?,
            PatternBase::Control => f.write_str("CONTROL")?,
            PatternBase::Symbol(t) => f.write_str(t.name())?,
            PatternBase::State(s) => write!(f, "{}_{}", s.tag().name(), s.bit().unwrap_or(0))?,
        }
        if !self.except.is_empty() {
            let names: Vec<_> = self.except.iter().map(|t| t.name()).collect();
            write!(f, "!{}", names.join(","))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IllegalPair {
    pub left: Pattern,
    pub right: Pattern,
    pub item: u8,
}

impl IllegalPair {
    pub fn new(left: Pattern, right: Pattern, item: u8) -> Self {
        IllegalPair { left, right, item }
    }
}

/// Which Hamiltonian term a single-site penalty belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PenaltyGroup {
    Init,
    Bracket,
}

impl PenaltyGroup {
    pub const fn name(self) -> &'static str {
        match self {
            PenaltyGroup::Init => "init",
            PenaltyGroup::Bracket => "bracket",
        }
    }
}

/// Single-site operator appearing in a penalty term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SiteProjector {
    Identity,
    /// `|tag><tag|` summed over the tag's qubit values.
    Symbol(Tag),
    /// `|tag_-><tag_-|` with `|tag_-> = (|tag_0> - |tag_1>)/sqrt 2`.
    Minus(Tag),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SitePenalty {
    pub group: PenaltyGroup,
    pub projector: SiteProjector,
    pub weight: Ratio<i64>,
}

/// Validated, immutable rule set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSet {
    symbols: Vec<SiteSymbol>,
    transitions: Vec<TransitionRule>,
    illegal_pairs: Vec<IllegalPair>,
    site_penalties: Vec<SitePenalty>,
}

impl RuleSet {
    pub fn new(
        symbols: Vec<SiteSymbol>,
        transitions: Vec<TransitionRule>,
        illegal_pairs: Vec<IllegalPair>,
        site_penalties: Vec<SitePenalty>,
    ) -> Result<Self, RuleSetError> {
        let mut seen = BTreeSet::new();
        for s in &symbols {
            if !seen.insert(s.tag) {
                return Err(RuleSetError::DuplicateSymbol(s.tag));
            }
            if s.arity != s.tag.arity() {
                return Err(RuleSetError::ArityMismatch {
                    tag: s.tag,
                    declared: s.arity,
                    expected: s.tag.arity(),
                });
            }
        }
        let declared = |t: Tag| -> Result<SiteSymbol, RuleSetError> {
            lookup(&symbols, t).ok_or_else(|| RuleSetError::UndeclaredSymbol(t.name().to_string()))
        };
        for r in &transitions {
            for t in r.lhs.iter().chain(r.rhs.iter()) {
                declared(*t)?;
            }
            check_rule(r, &symbols)?;
        }
        for p in &illegal_pairs {
            for t in p.left.referenced_tags().into_iter().chain(p.right.referenced_tags()) {
                declared(t)?;
            }
        }
        for p in &site_penalties {
            match p.projector {
                SiteProjector::Identity => {}
                SiteProjector::Symbol(t) => {
                    declared(t)?;
                }
                SiteProjector::Minus(t) => {
                    if declared(t)?.arity != 2 {
                        return Err(RuleSetError::ArityMismatch { tag: t, declared: 1, expected: 2 });
                    }
                }
            }
        }
        Ok(RuleSet { symbols, transitions, illegal_pairs, site_penalties })
    }

    pub fn symbols(&self) -> &[SiteSymbol] {
        &self.symbols
    }

    pub fn transitions(&self) -> &[TransitionRule] {
        &self.transitions
    }

    pub fn illegal_pairs(&self) -> &[IllegalPair] {
        &self.illegal_pairs
    }

    pub fn site_penalties(&self) -> &[SitePenalty] {
        &self.site_penalties
    }

    /// Distinct rule item numbers.
    pub fn transition_items(&self) -> BTreeSet<u8> {
        self.transitions.iter().map(|r| r.item).collect()
    }

    pub fn symbol(&self, tag: Tag) -> Option<SiteSymbol> {
        lookup(&self.symbols, tag)
    }

    /// All concrete site states of the declared symbols.
    pub fn site_states(&self) -> Vec<SiteState> {
        let mut v: Vec<_> = self.symbols.iter().flat_map(|s| s.tag.states()).collect();
        v.sort();
        v
    }

    /// Concrete `(left, right)` pairs matched by the illegal pairs of `item`.
    pub fn illegal_pairs_of_item(&self, item: u8) -> BTreeSet<(SiteState, SiteState)> {
        let states = self.site_states();
        let mut out = BTreeSet::new();
        for p in self.illegal_pairs.iter().filter(|p| p.item == item) {
            for &a in &states {
                for &b in &states {
                    if p.left.matches(a, &self.symbols) && p.right.matches(b, &self.symbols) {
                        out.insert((a, b));
                    }
                }
            }
        }
        out
    }
}

pub(crate) fn check_rule(r: &TransitionRule, symbols: &[SiteSymbol]) -> Result<(), RuleSetError> {
    let sym = |t: Tag| lookup(symbols, t).expect("declared");
    for (side, pair) in [("left", r.lhs), ("right", r.rhs)] {
        let count = pair.iter().filter(|t| sym(**t).control).count();
        if count != 1 {
            return Err(RuleSetError::ControlCount { rule: r.to_string(), side, count });
        }
    }
    let lc = if sym(r.lhs[0]).control { 0 } else { 1 };
    let rc = if sym(r.rhs[0]).control { 0 } else { 1 };
    let la = [sym(r.lhs[0]).arity, sym(r.lhs[1]).arity];
    let ra = [sym(r.rhs[0]).arity, sym(r.rhs[1]).arity];
    let bad = |reason: &str| Err(RuleSetError::BadAction { rule: r.to_string(), reason: reason.into() });
    match r.action {
        QubitAction::Carry => {
            if la[lc] != ra[rc] || la[1 - lc] != ra[1 - rc] {
                return bad("carry needs matching arities for control and non-control sites");
            }
        }
        QubitAction::Entangle => {
            if la[0] + la[1] != 3 || ra != [2, 2] {
                return bad("entangle needs one lhs qubit and two rhs qubits");
            }
        }
        QubitAction::Transfer(side) => {
            let i = if side == Side::Left { 0 } else { 1 };
            if la[lc] != 2 || la[1 - lc] != 1 || ra[i] != 2 || ra[1 - i] != 1 {
                return bad("transfer needs a qubit-carrying control moving onto a qubit site");
            }
        }
    }
    Ok(())
}

fn all_symbols() -> Vec<SiteSymbol> {
    Tag::ALL.iter().map(|&t| SiteSymbol::of(t)).collect()
}

fn chain_transitions() -> Vec<TransitionRule> {
    use QubitAction::*;
    use Tag::*;
    vec![
        TransitionRule::new(1, [RightArrow, UpperU], [LowerU, RightArrow], Carry),
        TransitionRule::new(1, [RightArrow, UpperW], [LowerW, RightArrow], Carry),
        TransitionRule::new(2, [RightArrow, UpperE], [Down, UpperE], Carry),
        TransitionRule::new(3, [LowerW, Down], [LeftArrow, UpperE], Transfer(Side::Right)),
        TransitionRule::new(4, [LowerW, LeftArrow], [LeftArrow, UpperW], Carry),
        TransitionRule::new(4, [LowerU, LeftArrow], [LeftArrow, UpperU], Carry),
        TransitionRule::new(5, [LowerE, LeftArrow], [LowerE, Up], Carry),
        TransitionRule::new(6, [Up, UpperU], [LowerE, RightArrow], Entangle),
        TransitionRule::new(7, [DoubleUp, UpperU], [LowerE, DoubleRightArrow], Entangle),
        TransitionRule::new(8, [DoubleRightArrow, UpperU], [LowerU, DoubleRightArrow], Carry),
        TransitionRule::new(8, [DoubleRightArrow, UpperW], [LowerW, DoubleRightArrow], Carry),
        TransitionRule::new(9, [DoubleRightArrow, RightEnd], [Down, RightEnd], Carry),
    ]
}

/// Item number of the endpoint guard pairs.
pub const GUARD_ITEM: u8 = 17;

fn guard_pairs() -> Vec<IllegalPair> {
    use Tag::*;
    let s = Pattern::sym;
    [
        (LeftEnd, RightArrow),
        (LeftEnd, DoubleRightArrow),
        (LeftEnd, Down),
        (LeftEnd, LeftArrow),
        (LeftArrow, RightEnd),
        (Up, RightEnd),
        (DoubleUp, UpperW),
    ]
    .into_iter()
    .map(|(a, b)| IllegalPair::new(s(a), s(b), GUARD_ITEM))
    .collect()
}

fn chain_illegal_pairs(cycle: bool) -> Vec<IllegalPair> {
    use Tag::*;
    let p = IllegalPair::new;
    let s = Pattern::sym;
    let mut v = Vec::new();
    if cycle {
        v.push(p(s(RightEnd), Pattern::ANY.except(&[LeftEnd]), 1));
        v.push(p(Pattern::ANY.except(&[RightEnd]), s(LeftEnd), 1));
    } else {
        v.push(p(s(RightEnd), Pattern::ANY, 1));
        v.push(p(Pattern::ANY, s(LeftEnd), 1));
    }
    v.extend([
        p(Pattern::UPPER, Pattern::LOWER, 2),
        p(Pattern::CONTROL, Pattern::LOWER, 2),
        p(Pattern::UPPER, Pattern::CONTROL, 2),
        p(Pattern::CONTROL, Pattern::CONTROL, 3),
        p(Pattern::LOWER, Pattern::UPPER, 4),
        p(Pattern::LOWER, s(RightEnd), 4),
        p(s(LeftEnd), Pattern::UPPER, 4),
        p(s(LeftEnd), s(RightEnd), 4),
        p(s(LowerW), s(LowerE), 5),
        p(s(LowerU), s(LowerE), 5),
        p(s(UpperE), s(UpperW), 6),
        p(s(UpperE), s(UpperU), 6),
        p(s(LowerU), s(Up), 7),
        p(s(LowerU), s(DoubleUp), 7),
        p(s(LowerW), s(Up), 7),
        p(s(LowerW), s(DoubleUp), 7),
        p(s(Down), s(UpperU), 8),
        p(s(Down), s(UpperW), 8),
        p(s(LowerW), s(LowerU), 9),
        p(s(UpperW), s(UpperU), 9),
        p(s(DoubleRightArrow), s(UpperE), 10),
        p(s(RightArrow), s(RightEnd), 10),
        p(s(LeftEnd), s(Up), 11),
        p(s(LowerE), s(DoubleUp), 11),
        p(s(DoubleUp), s(UpperE), 11),
        p(s(Up), s(UpperW), 12),
        p(s(LowerU), s(Down), 12),
        p(s(LowerE), s(Down), 12),
        p(Pattern::state(LowerE, 0), Pattern::state(RightArrow, 1), 13),
        p(Pattern::state(LowerE, 1), Pattern::state(RightArrow, 0), 13),
        p(Pattern::state(LowerE, 0), Pattern::state(DoubleRightArrow, 1), 14),
        p(Pattern::state(LowerE, 1), Pattern::state(DoubleRightArrow, 0), 14),
    ]);
    if cycle {
        v.push(p(s(DoubleUp), s(RightEnd), 15));
        v.push(p(s(LeftEnd), Pattern::ANY.except(&[DoubleUp, LowerE]), 16));
    }
    v
}

fn chain_penalties() -> Vec<SitePenalty> {
    let one = Ratio::from_integer(1);
    vec![
        SitePenalty { group: PenaltyGroup::Init, projector: SiteProjector::Minus(Tag::UpperU), weight: one },
        SitePenalty { group: PenaltyGroup::Bracket, projector: SiteProjector::Identity, weight: one },
        SitePenalty { group: PenaltyGroup::Bracket, projector: SiteProjector::Symbol(Tag::LeftEnd), weight: -one },
        SitePenalty { group: PenaltyGroup::Bracket, projector: SiteProjector::Symbol(Tag::RightEnd), weight: -one },
    ]
}

fn assemble(cycle: bool, guarded: bool) -> RuleSet {
    let mut pairs = chain_illegal_pairs(cycle);
    if guarded {
        pairs.extend(guard_pairs());
    }
    RuleSet::new(all_symbols(), chain_transitions(), pairs, chain_penalties()).expect("built-in rule set is valid")
}

/// Rule set of the finite chain: rules 1–9, illegal-pair items 1–14 and the guards (17).
pub fn builtin_chain_ruleset() -> RuleSet {
    assemble(false, true)
}

/// Cycle variant: `RIGHT_END LEFT_END` becomes legal and items 15–16 are added.
pub fn builtin_cycle_ruleset() -> RuleSet {
    assemble(true, true)
}

/// [`builtin_chain_ruleset`] without item 17.
pub fn unguarded_chain_ruleset() -> RuleSet {
    assemble(false, false)
}

/// [`builtin_cycle_ruleset`] without item 17.
pub fn unguarded_cycle_ruleset() -> RuleSet {
    assemble(true, false)
}

/// A well-formed state with more than one applicable rule in some direction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterminismViolation {
    pub state: BasisState,
    pub forward: usize,
    pub backward: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterminismReport {
    pub n: usize,
    pub states_checked: usize,
    pub violations: Vec<DeterminismViolation>,
}

impl DeterminismReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exhaustively checks that every well-formed chain state on `n` sites has at most one
/// applicable forward rule and at most one applicable backward rule.
pub fn validate_determinism(rs: &RuleSet, n: usize, budget: usize) -> Result<DeterminismReport> {
    let model = Model::new(rs.clone());
    let basis = enumerate_chain_basis(&model, n, ChainFilter::WellFormed, budget)?;
    let mut violations = Vec::new();
    for s in basis.iter() {
        let forward = model.forward_moves(&s).len();
        let backward = model.backward_moves(&s).len();
        if forward > 1 || backward > 1 {
            violations.push(DeterminismViolation { state: s, forward, backward });
        }
    }
    Ok(DeterminismReport { n, states_checked: basis.len(), violations })
}
