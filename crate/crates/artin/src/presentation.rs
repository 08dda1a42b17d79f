//! Presentations: an ordered generator list with a symmetric pair-label map,
//! plus classification, parabolic restriction, the infinity-edge split used
//! for amalgam decompositions, and word parsing against the generator names.

use std::fmt;

use thiserror::Error;

use crate::word::{Gen, GenMask, Letter, Sign, Word};

/// Label of a generator pair: an integer >= 2 or infinity.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Label {
    Finite(u32),
    Infinity,
}

impl Label {
    pub fn finite(self) -> Option<u32> {
        match self {
            Label::Finite(m) => Some(m),
            Label::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Label::Infinity)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Finite(m) => write!(f, "{m}"),
            Label::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("empty input, expected a `gens:` line")]
    Empty,
    #[error("line {line}: expected the `gens:` header first")]
    MissingHeader { line: usize },
    #[error("line {line}: generator names must be single lowercase ascii letters, got `{tok}`")]
    BadGeneratorName { line: usize, tok: String },
    #[error("line {line}: duplicate generator `{name}`")]
    DuplicateGenerator { line: usize, name: char },
    #[error("line {line}: no generators listed")]
    NoGenerators { line: usize },
    #[error("line {line}: malformed line, expected `m <g1> <g2> <label>`")]
    Malformed { line: usize },
    #[error("line {line}: unknown generator `{tok}`")]
    UnknownGenerator { line: usize, tok: String },
    #[error("line {line}: a pair must name two distinct generators")]
    SelfPair { line: usize },
    #[error("line {line}: label must be an integer >= 2 or `inf`, got `{tok}`")]
    BadLabel { line: usize, tok: String },
    #[error("line {line}: duplicate label for pair `{a} {b}`")]
    DuplicatePair { line: usize, a: char, b: char },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WordError {
    #[error("position {pos}: `{ch}` does not name a generator of this presentation")]
    UnknownLetter { pos: usize, ch: char },
}

/// How a presentation relates to the solver's scope. Variants are listed in
/// precedence order: the first matching kind wins.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Classification {
    /// Every pair label is 2.
    FreeAbelian,
    /// Exactly two generators, with a finite label.
    DihedralSpherical,
    /// Every label is at least 3 (or infinite).
    Large,
    /// Whenever m(s,t) = 2 and m(s,u) is finite and > 2, m(t,u) is infinite.
    SufficientlyLarge,
    /// A triple violating the condition above, as witness.
    OutOfScope { witness: (Gen, Gen, Gen) },
}

impl Classification {
    pub fn in_scope(self) -> bool {
        !matches!(self, Classification::OutOfScope { .. })
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Classification::FreeAbelian => "FREE_ABELIAN",
            Classification::DihedralSpherical => "DIHEDRAL_SPHERICAL",
            Classification::Large => "LARGE",
            Classification::SufficientlyLarge => "SUFFICIENTLY_LARGE",
            Classification::OutOfScope { .. } => "OUT_OF_SCOPE",
        };
        f.write_str(s)
    }
}

/// The infinity-edge split: a pair with label inf together with the two
/// co-rank-one generator subsets and their intersection.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct InfinitySplit {
    pub s1: Gen,
    pub s2: Gen,
    /// Everything except s2 (contains s1).
    pub left: GenMask,
    /// Everything except s1 (contains s2).
    pub right: GenMask,
    /// Everything except both.
    pub shared: GenMask,
}

/// An Artin-Tits presentation. The name table and label map always describe
/// the originally parsed generators; a parabolic restriction only shrinks the
/// `active` set, so letter indices stay valid across restrictions.
#[derive(Clone)]
pub struct Presentation {
    names: Vec<char>,
    // labels[tri(i, j)] for 0 <= i < j < names.len()
    labels: Vec<Label>,
    active: GenMask,
}

fn tri(i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    j * (j - 1) / 2 + i
}

impl Presentation {
    /// Parse the line-oriented format: a `gens:` header naming the
    /// generators, then `m <g1> <g2> <label>` lines. `#` starts a comment,
    /// blank lines are skipped, and unlisted pairs get label `inf`.
    pub fn parse(text: &str) -> Result<Presentation, ParseError> {
        let mut names: Vec<char> = Vec::new();
        let mut labels: Vec<Option<Label>> = Vec::new();
        let mut seen_header = false;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            let mut toks = content.split_whitespace().peekable();
            if toks.peek().is_none() {
                continue;
            }
            if !seen_header {
                if toks.next() != Some("gens:") {
                    return Err(ParseError::MissingHeader { line });
                }
                for tok in toks {
                    let mut chars = tok.chars();
                    let c = chars.next().unwrap();
                    if chars.next().is_some() || !c.is_ascii_lowercase() {
                        return Err(ParseError::BadGeneratorName {
                            line,
                            tok: tok.to_string(),
                        });
                    }
                    if names.contains(&c) {
                        return Err(ParseError::DuplicateGenerator { line, name: c });
                    }
                    names.push(c);
                }
                if names.is_empty() {
                    return Err(ParseError::NoGenerators { line });
                }
                labels = vec![None; names.len() * names.len().saturating_sub(1) / 2];
                seen_header = true;
                continue;
            }

            if toks.next() != Some("m") {
                return Err(ParseError::Malformed { line });
            }
            let (g1, g2, lab) = match (toks.next(), toks.next(), toks.next(), toks.next()) {
                (Some(a), Some(b), Some(l), None) => (a, b, l),
                _ => return Err(ParseError::Malformed { line }),
            };
            let lookup = |tok: &str| -> Result<usize, ParseError> {
                let mut chars = tok.chars();
                let c = chars.next();
                match c {
                    Some(c) if chars.as_str().is_empty() => names
                        .iter()
                        .position(|&n| n == c)
                        .ok_or(ParseError::UnknownGenerator {
                            line,
                            tok: tok.to_string(),
                        }),
                    _ => Err(ParseError::UnknownGenerator {
                        line,
                        tok: tok.to_string(),
                    }),
                }
            };
            let i = lookup(g1)?;
            let j = lookup(g2)?;
            if i == j {
                return Err(ParseError::SelfPair { line });
            }
            let label = if lab == "inf" {
                Label::Infinity
            } else {
                match lab.parse::<u32>() {
                    Ok(m) if m >= 2 => Label::Finite(m),
                    _ => {
                        return Err(ParseError::BadLabel {
                            line,
                            tok: lab.to_string(),
                        })
                    }
                }
            };
            let slot = &mut labels[tri(i.min(j), i.max(j))];
            if slot.is_some() {
                return Err(ParseError::DuplicatePair {
                    line,
                    a: names[i.min(j)],
                    b: names[i.max(j)],
                });
            }
            *slot = Some(label);
        }

        if !seen_header {
            return Err(ParseError::Empty);
        }
        Ok(Presentation {
            active: GenMask::full(names.len()),
            names,
            labels: labels
                .into_iter()
                .map(|l| l.unwrap_or(Label::Infinity))
                .collect(),
        })
    }

    /// Two generators named s and t with the given label.
    pub fn dihedral(m: u32) -> Presentation {
        assert!(m >= 2);
        Presentation {
            names: vec!['s', 't'],
            labels: vec![Label::Finite(m)],
            active: GenMask::full(2),
        }
    }

    /// The generators this value ranges over (the active set).
    pub fn gens(&self) -> GenMask {
        self.active
    }

    pub fn rank(&self) -> usize {
        self.active.count()
    }

    pub fn name(&self, g: Gen) -> char {
        self.names[g.idx()]
    }

    pub fn gen_by_name(&self, c: char) -> Option<Gen> {
        let g = Gen(self.names.iter().position(|&n| n == c)? as u8);
        self.active.contains(g).then_some(g)
    }

    pub fn label(&self, a: Gen, b: Gen) -> Label {
        debug_assert_ne!(a, b);
        debug_assert!(self.active.contains(a) && self.active.contains(b));
        let (i, j) = (a.idx().min(b.idx()), a.idx().max(b.idx()));
        self.labels[tri(i, j)]
    }

    /// All unordered active pairs, ascending.
    pub fn pairs(&self) -> impl Iterator<Item = (Gen, Gen, Label)> + '_ {
        let gens: Vec<Gen> = self.active.iter().collect();
        let mut out = Vec::with_capacity(gens.len() * gens.len() / 2);
        for (k, &a) in gens.iter().enumerate() {
            for &b in &gens[k + 1..] {
                out.push((a, b, self.label(a, b)));
            }
        }
        out.into_iter()
    }

    pub fn finite_pairs(&self) -> impl Iterator<Item = (Gen, Gen, u32)> + '_ {
        self.pairs().filter_map(|(a, b, l)| Some((a, b, l.finite()?)))
    }

    /// Restriction to a subset of the active generators. Labels and letter
    /// indices are unchanged, only the active set shrinks.
    pub fn parabolic(&self, subset: GenMask) -> Presentation {
        debug_assert!(subset.is_subset(self.active));
        Presentation {
            names: self.names.clone(),
            labels: self.labels.clone(),
            active: subset,
        }
    }

    pub fn classify(&self) -> Classification {
        let all: Vec<(Gen, Gen, Label)> = self.pairs().collect();
        if all.iter().all(|&(_, _, l)| l == Label::Finite(2)) {
            return Classification::FreeAbelian;
        }
        if self.rank() == 2 && all[0].2.finite().is_some() {
            return Classification::DihedralSpherical;
        }
        if all.iter().all(|&(_, _, l)| l.finite().is_none_or(|m| m >= 3)) {
            return Classification::Large;
        }
        // Ordered triples (s, t, u): a 2-labelled edge st next to a finite
        // edge su of label > 2 forces m(t, u) = inf.
        let gens: Vec<Gen> = self.active.iter().collect();
        for &s in &gens {
            for &t in &gens {
                if t == s || self.label(s, t) != Label::Finite(2) {
                    continue;
                }
                for &u in &gens {
                    if u == s || u == t {
                        continue;
                    }
                    let su = self.label(s, u);
                    if matches!(su, Label::Finite(m) if m > 2)
                        && self.label(t, u) != Label::Infinity
                    {
                        return Classification::OutOfScope { witness: (s, t, u) };
                    }
                }
            }
        }
        Classification::SufficientlyLarge
    }

    /// The lowest-indexed pair with an infinite label, with the two
    /// co-rank-one parts. Deterministic by construction.
    pub fn split_on_infinity(&self) -> Option<InfinitySplit> {
        let (s1, s2, _) = self.pairs().find(|&(_, _, l)| l.is_infinite())?;
        Some(InfinitySplit {
            s1,
            s2,
            left: self.active.minus(GenMask::single(s2)),
            right: self.active.minus(GenMask::single(s1)),
            shared: self
                .active
                .minus(GenMask::single(s1))
                .minus(GenMask::single(s2)),
        })
    }

    /// Connected components of the graph on the active generators whose
    /// edges are the pairs with label >= 3. Requires every label finite;
    /// cross-component pairs then all carry label 2.
    pub fn coxeter_components(&self) -> Option<Vec<GenMask>> {
        if self.pairs().any(|(_, _, l)| l.is_infinite()) {
            return None;
        }
        let gens: Vec<Gen> = self.active.iter().collect();
        let mut comp: Vec<GenMask> = Vec::new();
        let mut seen = GenMask::EMPTY;
        for &g in &gens {
            if seen.contains(g) {
                continue;
            }
            let mut stack = vec![g];
            let mut members = GenMask::EMPTY;
            while let Some(v) = stack.pop() {
                if members.contains(v) {
                    continue;
                }
                members.insert(v);
                seen.insert(v);
                for &u in &gens {
                    if u != v
                        && !members.contains(u)
                        && matches!(self.label(v, u), Label::Finite(m) if m >= 3)
                    {
                        stack.push(u);
                    }
                }
            }
            comp.push(members);
        }
        Some(comp)
    }

    /// Parse a compact word string: lowercase letters are generators,
    /// uppercase their inverses. The empty string is the empty word.
    pub fn parse_word(&self, s: &str) -> Result<Word, WordError> {
        let mut w = Word::new();
        for (pos, ch) in s.chars().enumerate() {
            let lower = ch.to_ascii_lowercase();
            let sign = if ch.is_ascii_lowercase() {
                Sign::Pos
            } else if ch.is_ascii_uppercase() {
                Sign::Neg
            } else {
                return Err(WordError::UnknownLetter { pos, ch });
            };
            let gen = self
                .gen_by_name(lower)
                .ok_or(WordError::UnknownLetter { pos, ch })?;
            w.push(Letter { gen, sign });
        }
        Ok(w)
    }

    pub fn word_string(&self, w: &Word) -> String {
        w.iter()
            .map(|l| {
                let c = self.name(l.gen);
                match l.sign {
                    Sign::Pos => c,
                    Sign::Neg => c.to_ascii_uppercase(),
                }
            })
            .collect()
    }

    /// True if every letter of the word lies in the given generator subset.
    pub fn word_over(&self, w: &Word, subset: GenMask) -> bool {
        w.support().is_subset(subset)
    }
}

impl fmt::Debug for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Presentation{{")?;
        for (i, (a, b, l)) in self.pairs().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "m({}, {}) = {}", self.name(a), self.name(b), l)?;
        }
        write!(f, "}}")
    }
}
