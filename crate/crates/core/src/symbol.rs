//! The site alphabet: fourteen symbol tags expanding to 21 standard-basis site states.
//!
//! Site states carry a compact code in `0..21` ordered as
//! `E0 E1 e0 e1 U0 U1 u0 u1 W w ->0 ->1 =>0 =>1 <- ^ ^^ v0 v1 < >`.
//! Basis-state ordering everywhere in the crate is lexicographic in this code.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SymbolError;

/// Number of distinct standard-basis site states.
pub const NUM_SITE_STATES: usize = 21;

/// Symbol tags. Arity is intrinsic to the tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    /// `E`: right-side qubit entangled with a partner on the left.
    UpperE,
    /// `e`: left-side qubit entangled with a partner on the right.
    LowerE,
    /// `U`: unentangled qubit right of the control.
    UpperU,
    /// `u`: unentangled qubit left of the control.
    LowerU,
    /// `W`: waiting site right of the control.
    UpperW,
    /// `w`: waiting site left of the control.
    LowerW,
    /// Single right-moving control (carries a qubit).
    RightArrow,
    /// Double right-moving control, first sweep only (carries a qubit).
    DoubleRightArrow,
    /// Left-moving control.
    LeftArrow,
    /// Left-end turning control.
    Up,
    /// Left-end turning control of the first sweep.
    DoubleUp,
    /// Right-end turning control (carries a qubit).
    Down,
    LeftEnd,
    RightEnd,
}

impl Tag {
    pub const ALL: [Tag; 14] = [
        Tag::UpperE,
        Tag::LowerE,
        Tag::UpperU,
        Tag::LowerU,
        Tag::UpperW,
        Tag::LowerW,
        Tag::RightArrow,
        Tag::DoubleRightArrow,
        Tag::LeftArrow,
        Tag::Up,
        Tag::DoubleUp,
        Tag::Down,
        Tag::LeftEnd,
        Tag::RightEnd,
    ];

    /// Number of internal levels (1 or 2).
    pub const fn arity(self) -> u8 {
        match self {
            Tag::UpperE
            | Tag::LowerE
            | Tag::UpperU
            | Tag::LowerU
            | Tag::RightArrow
            | Tag::DoubleRightArrow
            | Tag::Down => 2,
            _ => 1,
        }
    }

    pub const fn is_control(self) -> bool {
        matches!(
            self,
            Tag::RightArrow
                | Tag::DoubleRightArrow
                | Tag::LeftArrow
                | Tag::Up
                | Tag::DoubleUp
                | Tag::Down
        )
    }

    pub const fn is_lower(self) -> bool {
        matches!(self, Tag::LowerE | Tag::LowerU | Tag::LowerW)
    }

    pub const fn is_upper(self) -> bool {
        matches!(self, Tag::UpperE | Tag::UpperU | Tag::UpperW)
    }

    /// Code of the first (bit 0) state of this tag.
    const fn base_code(self) -> u8 {
        match self {
            Tag::UpperE => 0,
            Tag::LowerE => 2,
            Tag::UpperU => 4,
            Tag::LowerU => 6,
            Tag::UpperW => 8,
            Tag::LowerW => 9,
            Tag::RightArrow => 10,
            Tag::DoubleRightArrow => 12,
            Tag::LeftArrow => 14,
            Tag::Up => 15,
            Tag::DoubleUp => 16,
            Tag::Down => 17,
            Tag::LeftEnd => 19,
            Tag::RightEnd => 20,
        }
    }

    /// Name used in rule-spec documents.
    pub const fn name(self) -> &'static str {
        match self {
            Tag::UpperE => "E",
            Tag::LowerE => "e",
            Tag::UpperU => "U",
            Tag::LowerU => "u",
            Tag::UpperW => "W",
            Tag::LowerW => "w",
            Tag::RightArrow => "R_ARROW",
            Tag::DoubleRightArrow => "RR_ARROW",
            Tag::LeftArrow => "L_ARROW",
            Tag::Up => "UP",
            Tag::DoubleUp => "UUP",
            Tag::Down => "DOWN",
            Tag::LeftEnd => "LEFT_END",
            Tag::RightEnd => "RIGHT_END",
        }
    }

    /// Short ASCII glyph used in basis dumps and path tableaux.
    pub const fn glyph(self) -> &'static str {
        match self {
            Tag::UpperE => "E",
            Tag::LowerE => "e",
            Tag::UpperU => "U",
            Tag::LowerU => "u",
            Tag::UpperW => "W",
            Tag::LowerW => "w",
            Tag::RightArrow => "->",
            Tag::DoubleRightArrow => "=>",
            Tag::LeftArrow => "<-",
            Tag::Up => "^",
            Tag::DoubleUp => "^^",
            Tag::Down => "v",
            Tag::LeftEnd => "<",
            Tag::RightEnd => ">",
        }
    }

    pub fn from_name(name: &str) -> Option<Tag> {
        Tag::ALL.into_iter().find(|t| t.name() == name)
    }

    pub fn from_glyph(glyph: &str) -> Option<Tag> {
        Tag::ALL.into_iter().find(|t| t.glyph() == glyph)
    }

    /// All site states of this tag, bit 0 first.
    pub fn states(self) -> impl Iterator<Item = SiteState> {
        let base = self.base_code();
        (0..self.arity()).map(move |b| SiteState(base + b))
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const CODE_TAGS: [Tag; NUM_SITE_STATES] = [
    Tag::UpperE,
    Tag::UpperE,
    Tag::LowerE,
    Tag::LowerE,
    Tag::UpperU,
    Tag::UpperU,
    Tag::LowerU,
    Tag::LowerU,
    Tag::UpperW,
    Tag::LowerW,
    Tag::RightArrow,
    Tag::RightArrow,
    Tag::DoubleRightArrow,
    Tag::DoubleRightArrow,
    Tag::LeftArrow,
    Tag::Up,
    Tag::DoubleUp,
    Tag::Down,
    Tag::Down,
    Tag::LeftEnd,
    Tag::RightEnd,
];

/// One standard-basis state of a single site: a tag plus a bit when the tag has arity 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SiteState(u8);

impl SiteState {
    pub const LEFT_END: SiteState = SiteState(19);
    pub const RIGHT_END: SiteState = SiteState(20);

    pub fn new(tag: Tag, bit: Option<u8>) -> Result<Self, SymbolError> {
        match (tag.arity(), bit) {
            (1, None) => Ok(SiteState(tag.base_code())),
            (2, Some(b @ (0 | 1))) => Ok(SiteState(tag.base_code() + b)),
            _ => Err(SymbolError::BadBit { tag, bit }),
        }
    }

    /// Arity-1 state, or bit 0 of an arity-2 tag.
    pub const fn plain(tag: Tag) -> Self {
        SiteState(tag.base_code())
    }

    /// Arity-2 state with the given bit. The bit is masked to 0/1.
    pub const fn with_bit(tag: Tag, bit: u8) -> Self {
        SiteState(tag.base_code() + (bit & 1))
    }

    /// Caller guarantees `code < 21`.
    pub(crate) const fn from_code_unchecked(code: u8) -> Self {
        SiteState(code)
    }

    pub fn from_code(code: u8) -> Option<Self> {
        ((code as usize) < NUM_SITE_STATES).then_some(SiteState(code))
    }

    pub const fn code(self) -> u8 {
        self.0
    }

    pub const fn tag(self) -> Tag {
        CODE_TAGS[self.0 as usize]
    }

    pub const fn bit(self) -> Option<u8> {
        let tag = self.tag();
        if tag.arity() == 2 {
            Some(self.0 - tag.base_code())
        } else {
            None
        }
    }

    /// The same tag with the qubit flipped; unchanged for arity-1 tags.
    pub const fn flipped(self) -> Self {
        let tag = self.tag();
        if tag.arity() == 2 {
            SiteState(tag.base_code() + (1 - (self.0 - tag.base_code())))
        } else {
            self
        }
    }

    pub fn all() -> impl Iterator<Item = SiteState> {
        (0..NUM_SITE_STATES as u8).map(SiteState)
    }
}

impl fmt::Display for SiteState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag().glyph())?;
        if let Some(b) = self.bit() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for SiteState {
    type Err = SymbolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(tag) = Tag::from_glyph(s) {
            return SiteState::new(tag, None);
        }
        let (head, last) = s.split_at(s.len().saturating_sub(1));
        let bit = match last {
            "0" => 0,
            "1" => 1,
            _ => return Err(SymbolError::UnknownGlyph(s.to_string())),
        };
        let tag = Tag::from_glyph(head).ok_or_else(|| SymbolError::UnknownGlyph(s.to_string()))?;
        SiteState::new(tag, Some(bit))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabet_has_21_states() {
        assert_eq!(Tag::ALL.len(), 14);
        let total: usize = Tag::ALL.iter().map(|t| t.arity() as usize).sum();
        assert_eq!(total, NUM_SITE_STATES);
        let two: Vec<_> = Tag::ALL.iter().filter(|t| t.arity() == 2).map(|t| t.name()).collect();
        assert_eq!(two, ["E", "e", "U", "u", "R_ARROW", "RR_ARROW", "DOWN"]);
        let controls: Vec<_> = Tag::ALL.iter().filter(|t| t.is_control()).map(|t| t.name()).collect();
        assert_eq!(controls, ["R_ARROW", "RR_ARROW", "L_ARROW", "UP", "UUP", "DOWN"]);
    }

    #[test]
    fn codes_round_trip() {
        for s in SiteState::all() {
            assert_eq!(SiteState::new(s.tag(), s.bit()).unwrap(), s);
            assert_eq!(s.to_string().parse::<SiteState>().unwrap(), s);
            assert_eq!(s.flipped().flipped(), s);
        }
        let codes: Vec<u8> = Tag::ALL.iter().flat_map(|t| t.states()).map(|s| s.code()).collect();
        let mut sorted = codes.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, (0..21).collect::<Vec<_>>());
    }

    #[test]
    fn glyph_errors() {
        assert!("=>".parse::<SiteState>().is_err());
        assert!("W0".parse::<SiteState>().is_err());
        assert!("Q".parse::<SiteState>().is_err());
        assert_eq!("<-".parse::<SiteState>().unwrap().tag(), Tag::LeftArrow);
        assert_eq!("v1".parse::<SiteState>().unwrap(), SiteState::with_bit(Tag::Down, 1));
    }
}
