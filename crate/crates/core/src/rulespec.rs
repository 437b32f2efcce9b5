//! Line-oriented text format for rule sets.
//!
//! ```text
//! symbol <TAG> arity=<1|2> [control]
//! rule <a> <b> -> <c> <d> action=<carry|entangle|transfer:left|transfer:right> [item=<k>]
//! illegal <p> <q> item=<k>
//! penalty <init|bracket> <identity|TAG|minus(TAG)> weight=<rational>
//! ```
//!
//! Patterns `<p>`/`<q>` are a tag name, a `TAG_bit` literal such as `e_0`, or one of
//! `ANY LOWER UPPER CONTROL`, optionally followed by `!TAG,TAG` to exclude tags.
//! `#` starts a comment.

use std::fmt::Write as _;

use num_rational::Ratio;

use crate::error::{ParseError, ParseErrorKind, RuleSetError};
use crate::ruleset::{
    check_rule, IllegalPair, Pattern, PatternBase, PenaltyGroup, QubitAction, RuleSet, Side, SitePenalty,
    SiteProjector, SiteSymbol, TransitionRule,
};
use crate::symbol::{SiteState, Tag};

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let code = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in code.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token { text: &code[s..i], column: s + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token { text: &code[s..], column: s + 1 });
    }
    out
}

struct Parser {
    symbols: Vec<SiteSymbol>,
    transitions: Vec<TransitionRule>,
    illegal_pairs: Vec<IllegalPair>,
    penalties: Vec<SitePenalty>,
    line: usize,
}

impl Parser {
    fn err(&self, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { line: self.line, column, kind }
    }

    fn syntax(&self, column: usize, msg: impl Into<String>) -> ParseError {
        self.err(column, ParseErrorKind::Syntax(msg.into()))
    }

    fn declared(&self, tok: &Token<'_>, name: &str) -> Result<Tag, ParseError> {
        self.symbols
            .iter()
            .find(|s| s.tag.name() == name)
            .map(|s| s.tag)
            .ok_or_else(|| self.err(tok.column, ParseErrorKind::Invalid(RuleSetError::UndeclaredSymbol(name.into()))))
    }

    fn key_value<'a>(&self, tok: &Token<'a>, key: &str) -> Result<&'a str, ParseError> {
        tok.text
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| self.syntax(tok.column, format!("expected `{key}=...`, found `{}`", tok.text)))
    }

    fn item(&self, tok: &Token<'_>) -> Result<u8, ParseError> {
        let v = self.key_value(tok, "item")?;
        v.parse::<u8>()
            .ok()
            .filter(|&k| (1..=31).contains(&k))
            .ok_or_else(|| self.syntax(tok.column, format!("bad item number `{v}`")))
    }

    fn symbol_line(&mut self, toks: &[Token<'_>]) -> Result<(), ParseError> {
        if !(3..=4).contains(&toks.len()) {
            return Err(self.syntax(toks[0].column, "expected `symbol <tag> arity=<1|2> [control]`"));
        }
        let tag = Tag::from_name(toks[1].text)
            .ok_or_else(|| self.err(toks[1].column, ParseErrorKind::UnknownTag(toks[1].text.into())))?;
        let arity = match self.key_value(&toks[2], "arity")? {
            "1" => 1,
            "2" => 2,
            other => return Err(self.syntax(toks[2].column, format!("bad arity `{other}`"))),
        };
        let control = match toks.get(3) {
            None => false,
            Some(t) if t.text == "control" => true,
            Some(t) => return Err(self.syntax(t.column, format!("unexpected `{}`", t.text))),
        };
        if self.symbols.iter().any(|s| s.tag == tag) {
            return Err(self.err(toks[1].column, RuleSetError::DuplicateSymbol(tag).into()));
        }
        if arity != tag.arity() {
            let e = RuleSetError::ArityMismatch { tag, declared: arity, expected: tag.arity() };
            return Err(self.err(toks[2].column, e.into()));
        }
        self.symbols.push(SiteSymbol { tag, arity, control });
        Ok(())
    }

    fn rule_line(&mut self, toks: &[Token<'_>]) -> Result<(), ParseError> {
        if !(7..=8).contains(&toks.len()) || toks[3].text != "->" {
            return Err(self.syntax(toks[0].column, "expected `rule <a> <b> -> <c> <d> action=<...>`"));
        }
        let names = [&toks[1], &toks[2], &toks[4], &toks[5]];
        let mut tags = [Tag::LeftEnd; 4];
        for (k, t) in names.iter().enumerate() {
            tags[k] = self.declared(t, t.text)?;
        }
        let action = match self.key_value(&toks[6], "action")? {
            "carry" => QubitAction::Carry,
            "entangle" => QubitAction::Entangle,
            "transfer:left" => QubitAction::Transfer(Side::Left),
            "transfer:right" => QubitAction::Transfer(Side::Right),
            other => return Err(self.syntax(toks[6].column, format!("unknown action `{other}`"))),
        };
        let item = match toks.get(7) {
            Some(t) => self.item(t)?,
            None => (self.transitions.len() + 1).min(31) as u8,
        };
        let rule = TransitionRule::new(item, [tags[0], tags[1]], [tags[2], tags[3]], action);
        check_rule(&rule, &self.symbols).map_err(|e| self.err(toks[0].column, e.into()))?;
        self.transitions.push(rule);
        Ok(())
    }

    fn pattern(&self, tok: &Token<'_>) -> Result<Pattern, ParseError> {
        let (head, except) = match tok.text.split_once('!') {
            Some((h, e)) => (h, Some(e)),
            None => (tok.text, None),
        };
        let base = match head {
            "ANY" => PatternBase::Any,
            "LOWER" => PatternBase::Lower,
            "UPPER" => PatternBase::Upper,
            "CONTROL" => PatternBase::Control,
            _ => match Tag::from_name(head) {
                Some(_) => PatternBase::Symbol(self.declared(tok, head)?),
                None => match head.rsplit_once('_') {
                    Some((name, bit @ ("0" | "1"))) if Tag::from_name(name).is_some() => {
                        let tag = self.declared(tok, name)?;
                        let state = SiteState::new(tag, Some(bit.parse().unwrap()))
                            .map_err(|e| self.syntax(tok.column, e.to_string()))?;
                        PatternBase::State(state)
                    }
                    _ => {
                        let e = RuleSetError::UndeclaredSymbol(head.into());
                        return Err(self.err(tok.column, e.into()));
                    }
                },
            },
        };
        let mut pattern = Pattern { base, except: Vec::new() };
        if let Some(list) = except {
            for name in list.split(',') {
                pattern.except.push(self.declared(tok, name)?);
            }
        }
        Ok(pattern)
    }

    fn illegal_line(&mut self, toks: &[Token<'_>]) -> Result<(), ParseError> {
        if toks.len() != 4 {
            return Err(self.syntax(toks[0].column, "expected `illegal <a> <b> item=<k>`"));
        }
        let left = self.pattern(&toks[1])?;
        let right = self.pattern(&toks[2])?;
        let item = self.item(&toks[3])?;
        self.illegal_pairs.push(IllegalPair { left, right, item });
        Ok(())
    }

    fn penalty_line(&mut self, toks: &[Token<'_>]) -> Result<(), ParseError> {
        if toks.len() != 4 {
            return Err(self.syntax(toks[0].column, "expected `penalty <group> <projector> weight=<r>`"));
        }
        let group = match toks[1].text {
            "init" => PenaltyGroup::Init,
            "bracket" => PenaltyGroup::Bracket,
            other => return Err(self.syntax(toks[1].column, format!("unknown penalty group `{other}`"))),
        };
        let text = toks[2].text;
        let projector = if text == "identity" {
            SiteProjector::Identity
        } else if let Some(inner) = text.strip_prefix("minus(").and_then(|r| r.strip_suffix(')')) {
            let tag = self.declared(&toks[2], inner)?;
            if tag.arity() != 2 {
                let e = RuleSetError::ArityMismatch { tag, declared: tag.arity(), expected: 2 };
                return Err(self.err(toks[2].column, e.into()));
            }
            SiteProjector::Minus(tag)
        } else {
            SiteProjector::Symbol(self.declared(&toks[2], text)?)
        };
        let w = self.key_value(&toks[3], "weight")?;
        let weight = w
            .parse::<Ratio<i64>>()
            .map_err(|_| self.syntax(toks[3].column, format!("bad weight `{w}`")))?;
        self.penalties.push(SitePenalty { group, projector, weight });
        Ok(())
    }
}

/// Parses a rule-spec document.
pub fn parse_ruleset(text: &str) -> Result<RuleSet, ParseError> {
    let mut p = Parser {
        symbols: Vec::new(),
        transitions: Vec::new(),
        illegal_pairs: Vec::new(),
        penalties: Vec::new(),
        line: 0,
    };
    for (i, line) in text.lines().enumerate() {
        p.line = i + 1;
        let toks = tokenize(line);
        let Some(head) = toks.first() else { continue };
        match head.text {
            "symbol" => p.symbol_line(&toks)?,
            "rule" => p.rule_line(&toks)?,
            "illegal" => p.illegal_line(&toks)?,
            "penalty" => p.penalty_line(&toks)?,
            other => return Err(p.syntax(head.column, format!("unknown directive `{other}`"))),
        }
    }
    let line = p.line;
    RuleSet::new(p.symbols, p.transitions, p.illegal_pairs, p.penalties)
        .map_err(|e| ParseError { line, column: 1, kind: e.into() })
}

/// Serializes a rule set so that `parse_ruleset(&print_ruleset(rs)) == rs`.
pub fn print_ruleset(rs: &RuleSet) -> String {
    let mut out = String::new();
    for s in rs.symbols() {
        let control = if s.control { " control" } else { "" };
        writeln!(out, "symbol {} arity={}{}", s.tag.name(), s.arity, control).unwrap();
    }
    for r in rs.transitions() {
        let action = match r.action {
            QubitAction::Carry => "carry",
            QubitAction::Entangle => "entangle",
            QubitAction::Transfer(Side::Left) => "transfer:left",
            QubitAction::Transfer(Side::Right) => "transfer:right",
        };
        writeln!(
            out,
            "rule {} {} -> {} {} action={} item={}",
            r.lhs[0].name(),
            r.lhs[1].name(),
            r.rhs[0].name(),
            r.rhs[1].name(),
            action,
            r.item
        )
        .unwrap();
    }
    for p in rs.illegal_pairs() {
        writeln!(out, "illegal {} {} item={}", p.left, p.right, p.item).unwrap();
    }
    for p in rs.site_penalties() {
        let projector = match p.projector {
            SiteProjector::Identity => "identity".to_string(),
            SiteProjector::Symbol(t) => t.name().to_string(),
            SiteProjector::Minus(t) => format!("minus({})", t.name()),
        };
        writeln!(out, "penalty {} {} weight={}", p.group.name(), projector, p.weight).unwrap();
    }
    out
}

/// Bundled rule-spec document for the chain rules.
pub const CHAIN_RULES: &str = include_str!("../rules/chain.rules");

/// Bundled rule-spec document for the cycle rules.
pub const CYCLE_RULES: &str = include_str!("../rules/cycle.rules");

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ruleset::{builtin_chain_ruleset, builtin_cycle_ruleset};

    #[test]
    fn bundled_files_match_builtins() {
        assert_eq!(parse_ruleset(CHAIN_RULES).unwrap(), builtin_chain_ruleset());
        assert_eq!(parse_ruleset(CYCLE_RULES).unwrap(), builtin_cycle_ruleset());
    }

    #[test]
    fn rejects_rule_without_control() {
        let text = "symbol W arity=1\nrule W W -> W W action=carry\n";
        let err = parse_ruleset(text).unwrap_err();
        assert_eq!(err.line, 2);
        assert!(matches!(err.kind, ParseErrorKind::Invalid(RuleSetError::ControlCount { count: 0, .. })));
    }

    #[test]
    fn rejects_undeclared_symbol() {
        let text = "symbol W arity=1\nillegal W Q item=9\n";
        let err = parse_ruleset(text).unwrap_err();
        assert_eq!((err.line, err.column), (2, 11));
        assert_eq!(err.kind, ParseErrorKind::Invalid(RuleSetError::UndeclaredSymbol("Q".into())));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_ruleset("symbol W arity=3").unwrap_err();
        assert_eq!((err.line, err.column), (1, 10));
        let err = parse_ruleset("\n  frobnicate\n").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
        let err = parse_ruleset("symbol W arity=1 # trailing comment is fine\nsymbol W arity=1").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Invalid(RuleSetError::DuplicateSymbol(Tag::UpperW)));
    }
}
