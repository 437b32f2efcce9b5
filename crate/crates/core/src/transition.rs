//! Deterministic evolution of well-formed states, maximal paths in the state
//! graph, their classification and the lexicographic potential.

use std::cmp::Ordering;

use serde::Serialize;

use crate::configspace::{good_start, is_bracketed, is_good_start, BasisState, Params};
use crate::error::{ParamError, Result, TransitionError};
use crate::model::{Model, Move};
use crate::symbol::Tag;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartKind {
    GoodStart,
    Other,
}

/// A maximal orbit under the forward and backward rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub states: Vec<BasisState>,
    pub start_kind: StartKind,
    pub contains_illegal: bool,
    pub bracketed: bool,
}

impl Path {
    /// Number of states in the path.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn first(&self) -> &BasisState {
        &self.states[0]
    }

    pub fn last(&self) -> &BasisState {
        &self.states[self.states.len() - 1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathClass {
    /// Bracketed, every state legal, rooted at a good start state.
    Good,
    /// Bracketed with at least one illegal state.
    IllegalContaining,
    Unbracketed,
    /// Bracketed and legal throughout but not rooted at a good start state.
    /// Never produced by the built-in rules.
    LegalOtherStart,
}

fn unique(moves: Vec<Move>, s: &BasisState, direction: &'static str) -> Result<Option<BasisState>, TransitionError> {
    match moves.len() {
        0 => Ok(None),
        1 => Ok(Some(moves[0].result)),
        count => Err(TransitionError::NonDeterministic { state: s.to_string(), direction, count }),
    }
}

fn require_well_formed(model: &Model, s: &BasisState) -> Result<(), TransitionError> {
    if model.is_well_formed(s) {
        Ok(())
    } else {
        Err(TransitionError::NotWellFormed { state: s.to_string() })
    }
}

pub fn step_forward(model: &Model, s: &BasisState) -> Result<Option<BasisState>, TransitionError> {
    require_well_formed(model, s)?;
    unique(model.forward_moves(s), s, "forward")
}

pub fn step_backward(model: &Model, s: &BasisState) -> Result<Option<BasisState>, TransitionError> {
    require_well_formed(model, s)?;
    unique(model.backward_moves(s), s, "backward")
}

/// Walks backward to the first state and forward to the last.
pub fn extract_path(model: &Model, s: &BasisState) -> Result<Path, TransitionError> {
    let n = s.len();
    let cap = 2 * n * n + 2;
    let mut back = Vec::new();
    let mut cur = *s;
    while let Some(prev) = step_backward(model, &cur)? {
        back.push(prev);
        if back.len() > cap {
            return Err(TransitionError::CapExceeded { state: s.to_string(), cap });
        }
        cur = prev;
    }
    back.reverse();
    let mut states = back;
    states.push(*s);
    cur = *s;
    while let Some(next) = step_forward(model, &cur)? {
        states.push(next);
        if states.len() > cap {
            return Err(TransitionError::CapExceeded { state: s.to_string(), cap });
        }
        cur = next;
    }
    let start_kind = if is_good_start(&states[0]) { StartKind::GoodStart } else { StartKind::Other };
    let contains_illegal = states.iter().any(|x| !model.is_legal(x));
    let bracketed = is_bracketed(s);
    Ok(Path { states, start_kind, contains_illegal, bracketed })
}

pub fn classify_path(p: &Path) -> PathClass {
    if !p.bracketed {
        PathClass::Unbracketed
    } else if p.contains_illegal {
        PathClass::IllegalContaining
    } else if p.start_kind == StartKind::GoodStart {
        PathClass::Good
    } else {
        PathClass::LegalOtherStart
    }
}

/// The path through `< ^^ U^m W^m >` with the given U qubit values.
pub fn good_path(n: usize, bits: &[u8]) -> Result<Path> {
    let start = good_start(n, bits)?;
    Ok(extract_path(Model::chain(), &start)?)
}

/// Ordered pair that strictly increases along every forward transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Potential {
    /// Sites in `e` or `E`.
    pub x: usize,
    pub y: usize,
}

impl PartialOrd for Potential {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Potential {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.x, self.y).cmp(&(other.x, other.y))
    }
}

/// `y` is `n` for the turning controls, the number of `u`/`w` sites left of a
/// right-moving control, the number of `U`/`W` sites right of `<-`, and 0 without a control.
pub fn potential(s: &BasisState) -> Potential {
    let tags = s.configuration().sites;
    let x = tags.iter().filter(|t| matches!(t, Tag::LowerE | Tag::UpperE)).count();
    let y = match s.control() {
        None => 0,
        Some((pos, c)) => match c.tag() {
            Tag::Up | Tag::Down | Tag::DoubleUp => s.len(),
            Tag::RightArrow | Tag::DoubleRightArrow => {
                tags[..pos].iter().filter(|t| matches!(t, Tag::LowerU | Tag::LowerW)).count()
            }
            Tag::LeftArrow => tags[pos + 1..].iter().filter(|t| matches!(t, Tag::UpperU | Tag::UpperW)).count(),
            _ => unreachable!("control tags"),
        },
    };
    Potential { x, y }
}

/// Length of the good path, `(n - 1)(n - 2) / 2`.
pub fn path_count_formula(n: usize) -> Result<usize, ParamError> {
    Params::new(n)?;
    Ok((n - 1) * (n - 2) / 2)
}
