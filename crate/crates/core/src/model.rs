//! A rule set compiled into lookup tables over ordered pairs of site states.

use std::sync::OnceLock;

use crate::configspace::{BasisState, Topology};
use crate::ruleset::{builtin_chain_ruleset, builtin_cycle_ruleset, RuleSet};
use crate::symbol::{SiteState, NUM_SITE_STATES};

/// Illegal-pair items 1 through 8.
pub const WELL_FORMED_ITEMS: u32 = 0b1_1111_1110;

const PAIRS: usize = NUM_SITE_STATES * NUM_SITE_STATES;

#[inline]
fn pair_index(a: SiteState, b: SiteState) -> usize {
    a.code() as usize * NUM_SITE_STATES + b.code() as usize
}

/// A concrete two-site rewrite `(a, b) -> (c, d)` from one rule term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairMove {
    pub to: [SiteState; 2],
    /// Index into [`RuleSet::transitions`].
    pub rule: usize,
}

/// A rewrite applied at bond `position` of a full state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Move {
    pub position: usize,
    pub rule: usize,
    pub result: BasisState,
}

/// An illegal pair found at bond `position` (left site index).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Violation {
    pub position: usize,
    pub item: u8,
}

#[derive(Debug)]
pub struct Model {
    rules: RuleSet,
    forward: Vec<Vec<PairMove>>,
    backward: Vec<Vec<PairMove>>,
    items: Vec<u32>,
    declared: [bool; NUM_SITE_STATES],
}

impl Model {
    pub fn new(rules: RuleSet) -> Self {
        let mut forward = vec![Vec::new(); PAIRS];
        let mut backward = vec![Vec::new(); PAIRS];
        for (rule, r) in rules.transitions().iter().enumerate() {
            for (lhs, rhs) in r.expand(rules.symbols()) {
                forward[pair_index(lhs[0], lhs[1])].push(PairMove { to: rhs, rule });
                backward[pair_index(rhs[0], rhs[1])].push(PairMove { to: lhs, rule });
            }
        }
        let mut items = vec![0u32; PAIRS];
        let mut declared = [false; NUM_SITE_STATES];
        for s in rules.site_states() {
            declared[s.code() as usize] = true;
        }
        for p in rules.illegal_pairs() {
            for a in SiteState::all() {
                if !p.left.matches(a, rules.symbols()) {
                    continue;
                }
                for b in SiteState::all() {
                    if p.right.matches(b, rules.symbols()) {
                        items[pair_index(a, b)] |= 1 << p.item;
                    }
                }
            }
        }
        Model { rules, forward, backward, items, declared }
    }

    /// Compiled built-in chain rules.
    pub fn chain() -> &'static Model {
        static CHAIN: OnceLock<Model> = OnceLock::new();
        CHAIN.get_or_init(|| Model::new(builtin_chain_ruleset()))
    }

    /// Compiled built-in cycle rules.
    pub fn cycle() -> &'static Model {
        static CYCLE: OnceLock<Model> = OnceLock::new();
        CYCLE.get_or_init(|| Model::new(builtin_cycle_ruleset()))
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn is_declared(&self, s: SiteState) -> bool {
        self.declared[s.code() as usize]
    }

    /// Bitmask of illegal-pair items matching `(a, b)`; bit `k` is item `k`.
    #[inline]
    pub fn pair_items(&self, a: SiteState, b: SiteState) -> u32 {
        self.items[pair_index(a, b)]
    }

    #[inline]
    pub fn pair_well_formed(&self, a: SiteState, b: SiteState) -> bool {
        self.pair_items(a, b) & WELL_FORMED_ITEMS == 0
    }

    #[inline]
    pub fn pair_forward(&self, a: SiteState, b: SiteState) -> &[PairMove] {
        &self.forward[pair_index(a, b)]
    }

    #[inline]
    pub fn pair_backward(&self, a: SiteState, b: SiteState) -> &[PairMove] {
        &self.backward[pair_index(a, b)]
    }

    /// All illegal pairs in `s`, ordered by position then item.
    pub fn violations(&self, s: &BasisState) -> Vec<Violation> {
        let mut out = Vec::new();
        for (i, j) in s.bonds() {
            let mut mask = self.pair_items(s.get(i), s.get(j));
            while mask != 0 {
                let item = mask.trailing_zeros() as u8;
                out.push(Violation { position: i, item });
                mask &= mask - 1;
            }
        }
        out
    }

    pub fn is_well_formed(&self, s: &BasisState) -> bool {
        s.sites().all(|x| self.is_declared(x))
            && s.bonds().all(|(i, j)| self.pair_well_formed(s.get(i), s.get(j)))
    }

    pub fn is_legal(&self, s: &BasisState) -> bool {
        s.bonds().all(|(i, j)| self.pair_items(s.get(i), s.get(j)) == 0)
    }

    /// Number of bonds carrying at least one illegal pair.
    pub fn illegal_bond_count(&self, s: &BasisState) -> usize {
        s.bonds().filter(|&(i, j)| self.pair_items(s.get(i), s.get(j)) != 0).count()
    }

    pub fn forward_moves(&self, s: &BasisState) -> Vec<Move> {
        self.moves(s, &self.forward)
    }

    pub fn backward_moves(&self, s: &BasisState) -> Vec<Move> {
        self.moves(s, &self.backward)
    }

    fn moves(&self, s: &BasisState, table: &[Vec<PairMove>]) -> Vec<Move> {
        let mut out = Vec::new();
        for (i, j) in s.bonds() {
            for m in &table[pair_index(s.get(i), s.get(j))] {
                let result = s.with_site(i, m.to[0]).with_site(j, m.to[1]);
                out.push(Move { position: i, rule: m.rule, result });
            }
        }
        out
    }

    /// Whether the compiled rules were built for cyclic boundary conditions.
    pub fn allows_wraparound(&self) -> bool {
        self.pair_items(SiteState::RIGHT_END, SiteState::LEFT_END) == 0
    }

    pub fn natural_topology(&self) -> Topology {
        if self.allows_wraparound() {
            Topology::Cycle
        } else {
            Topology::Chain
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::Tag;

    #[test]
    fn well_formed_mask_covers_items_one_to_eight() {
        for k in 1..=8 {
            assert_ne!(WELL_FORMED_ITEMS & (1 << k), 0);
        }
        assert_eq!(WELL_FORMED_ITEMS & 1, 0);
        assert_eq!(WELL_FORMED_ITEMS & (1 << 9), 0);
    }

    #[test]
    fn pair_tables() {
        let m = Model::chain();
        let up = SiteState::plain(Tag::DoubleUp);
        let u0 = SiteState::with_bit(Tag::UpperU, 0);
        let moves = m.pair_forward(up, u0);
        assert_eq!(moves.len(), 1);
        assert_eq!(moves[0].to, [SiteState::with_bit(Tag::LowerE, 0), SiteState::with_bit(Tag::DoubleRightArrow, 0)]);
        let back = m.pair_backward(moves[0].to[0], moves[0].to[1]);
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].to, [up, u0]);
        assert!(!m.allows_wraparound());
        assert!(Model::cycle().allows_wraparound());
    }
}
