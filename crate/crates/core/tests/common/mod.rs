//! Shared oracles for the integration tests: a regex for the three
//! well-formed expressions, an exhaustive string generator and the n=7
//! tableau of the good path with qubits erased.
#![allow(dead_code)]

use entchain_core::{SiteState, Tag};
use regex::Regex;

pub fn letter(t: Tag) -> char {
    match t {
        Tag::LeftEnd => '<',
        Tag::RightEnd => '>',
        Tag::LowerE => 'e',
        Tag::LowerU => 'u',
        Tag::LowerW => 'w',
        Tag::UpperE => 'E',
        Tag::UpperU => 'U',
        Tag::UpperW => 'W',
        Tag::RightArrow => 'r',
        Tag::DoubleRightArrow => 'R',
        Tag::LeftArrow => 'l',
        Tag::Up => 'o',
        Tag::DoubleUp => 'D',
        Tag::Down => 'd',
    }
}

#[derive(Clone, Copy)]
pub enum Rep {
    Opt,
    Star,
    One,
}

/// Substrings of `slot_0 slot_1 ... slot_k`: pick a first and last slot, keep
/// the inner slots as they are and make the two end slots optional.
pub fn substring_regex(slots: &[(&str, Rep)]) -> String {
    let mut alts = Vec::new();
    for i in 0..slots.len() {
        for j in i..slots.len() {
            let mut s = String::new();
            for (k, (class, rep)) in slots.iter().enumerate().take(j + 1).skip(i) {
                let rep = if k == i || k == j {
                    match rep {
                        Rep::Star => "*",
                        _ => "?",
                    }
                } else {
                    match rep {
                        Rep::Opt => "?",
                        Rep::Star => "*",
                        Rep::One => "",
                    }
                };
                s.push_str(&format!("[{class}]{rep}"));
            }
            alts.push(s);
        }
    }
    format!("^(?:{})$", alts.join("|"))
}

pub fn oracle() -> Vec<Regex> {
    use Rep::*;
    let exprs: [&[(&str, Rep)]; 3] = [
        &[("<", Opt), ("e", Star), ("uw", Star), ("rlR", One), ("WU", Star), ("E", Star), (">", Opt)],
        &[("<", Opt), ("e", Star), ("oD", One), ("WU", Star), ("E", Star), (">", Opt)],
        &[("<", Opt), ("e", Star), ("wu", Star), ("d", One), ("E", Star), (">", Opt)],
    ];
    exprs.iter().map(|e| Regex::new(&substring_regex(e)).unwrap()).collect()
}

pub fn for_each_string(n: usize, mut f: impl FnMut(&[SiteState])) {
    let all: Vec<SiteState> = SiteState::all().collect();
    let mut idx = vec![0usize; n];
    let mut buf = vec![all[0]; n];
    loop {
        for (b, &i) in buf.iter_mut().zip(&idx) {
            *b = all[i];
        }
        f(&buf);
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < all.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Letters of a string of site states, as matched by [`oracle`].
pub fn word(sites: &[SiteState]) -> String {
    sites.iter().map(|s| letter(s.tag())).collect()
}

pub fn oracle_accepts(res: &[Regex], sites: &[SiteState]) -> bool {
    let w = word(sites);
    res.iter().any(|r| r.is_match(&w))
}

/// The good path at n=7, first round then second round.
pub const TABLEAU_N7: [&str; 15] = [
    "< ^^ U U W W >",
    "< e => U W W >",
    "< e u => W W >",
    "< e u w => W >",
    "< e u w w => >",
    "< e u w w v >",
    "< e u w <- E >",
    "< e u <- W E >",
    "< e <- U W E >",
    "< e ^ U W E >",
    "< e e -> W E >",
    "< e e w -> E >",
    "< e e w v E >",
    "< e e <- E E >",
    "< e e ^ E E >",
];

/// Glyphs of a state with the qubits dropped.
pub fn configuration_glyphs(s: &entchain_core::BasisState) -> String {
    s.sites().map(|x| x.tag().glyph()).collect::<Vec<_>>().join(" ")
}
