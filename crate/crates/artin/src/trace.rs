//! Elementary rewriting moves and replayable derivations.
//!
//! A [`Move`] rewrites one factor of a word at a fixed position: removal of
//! an adjacent inverse pair, replacement of one alternating relation side by
//! the other, or the two directed half-twist exchanges that carry an inverse
//! block across a relation. A [`Trace`] records a start word, a move list,
//! and an end word, and can be replayed and checked independently of the
//! code that produced it. Insertions are deliberately absent from the move
//! alphabet, so every valid trace is a removal-free 0/1/2 derivation.

use serde_json::{json, Value};
use thiserror::Error;

use crate::presentation::{Presentation, WordError};
use crate::word::{alt_from, Gen, Letter, Word};

/// Split data for the directed type-2 moves. The relation instance is the
/// pair (a, b) with label m: the u side is [a,b,m> = u1 u2 and the v side is
/// [b,a,m> = v1 v2, cut at the recorded lengths.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Two {
    pub pos: usize,
    pub pair: (Gen, Gen),
    pub m: u32,
    /// Lengths [|u1|, |u2|, |v1|, |v2|]; the first two and last two each sum to m.
    pub splits: [usize; 4],
    /// Claims the surrounding-letter side conditions that make this a 2-star
    /// move. The claim is checked whenever the move is applied.
    pub star: bool,
}

/// One elementary move, anchored at a 0-based position.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Move {
    /// Remove the adjacent mutually inverse pair at pos, pos+1 (either sign
    /// order).
    T0 { pos: usize, gen: Gen },
    /// Replace the relation side [x,y,m> at pos by [y,x,m>; if the letter at
    /// pos is negative, both sides are read in their inverse spelling.
    T1 { pos: usize, pair: (Gen, Gen), m: u32 },
    /// Replace v1^-1 u1 by v2 u2^-1. Requires u1 and v1 non-empty.
    T2R(Two),
    /// Replace v2 u2^-1 by v1^-1 u1. Requires u2 and v2 non-empty.
    T2L(Two),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MoveError {
    #[error("position {pos}: needs {need} letters, word has {len}")]
    OutOfRange { pos: usize, need: usize, len: usize },
    #[error("position {pos}: expected factor {expected:?}, found {found:?}")]
    FactorMismatch { pos: usize, expected: Word, found: Word },
    #[error("type-{kind} move with an empty mandatory part")]
    EmptyMandatoryPart { kind: &'static str },
    #[error("splits {splits:?} do not cut two sides of length {m}")]
    BadSplits { m: u32, splits: [usize; 4] },
    #[error("relation pair names the same generator twice")]
    SamePair,
    #[error("position {pos}: 2-star side conditions fail in this context")]
    StarConditionFails { pos: usize },
}

impl Move {
    pub fn pos(&self) -> usize {
        match *self {
            Move::T0 { pos, .. } | Move::T1 { pos, .. } => pos,
            Move::T2R(t) | Move::T2L(t) => t.pos,
        }
    }

    pub fn shifted(&self, offset: usize) -> Move {
        let mut mv = *self;
        match &mut mv {
            Move::T0 { pos, .. } | Move::T1 { pos, .. } => *pos += offset,
            Move::T2R(t) | Move::T2L(t) => t.pos += offset,
        }
        mv
    }

    pub fn with_star(&self, star: bool) -> Move {
        let mut mv = *self;
        if let Move::T2R(t) | Move::T2L(t) = &mut mv {
            t.star = star;
        }
        mv
    }

    pub fn is_star(&self) -> bool {
        matches!(self, Move::T2R(Two { star: true, .. }) | Move::T2L(Two { star: true, .. }))
    }

    /// The move that undoes this one when applied to its result. Removals
    /// have no inverse inside the move alphabet.
    pub fn inverted(&self) -> Option<Move> {
        match *self {
            Move::T0 { .. } => None,
            Move::T1 { pos, pair: (x, y), m } => Some(Move::T1 { pos, pair: (y, x), m }),
            Move::T2R(t) => Some(Move::T2L(t)),
            Move::T2L(t) => Some(Move::T2R(t)),
        }
    }
}

/// The four relation-side parts (u1, u2, v1, v2) named by a type-2 move.
pub fn relation_parts(
    pair: (Gen, Gen),
    m: u32,
    splits: [usize; 4],
) -> Result<(Word, Word, Word, Word), MoveError> {
    let (a, b) = pair;
    if a == b {
        return Err(MoveError::SamePair);
    }
    let [l1, l2, l3, l4] = splits;
    let m = m as usize;
    if l1 + l2 != m || l3 + l4 != m {
        return Err(MoveError::BadSplits { m: m as u32, splits });
    }
    let u = alt_from(a, b, m);
    let v = alt_from(b, a, m);
    Ok((
        Word::from(&u[..l1]),
        Word::from(&u[l1..]),
        Word::from(&v[..l3]),
        Word::from(&v[l3..]),
    ))
}

// The 2-star side conditions say the chosen factor is greedy: the letter
// just before the factor must not extend the outgoing negative (resp.
// positive) block, and the letter just after must not extend the other one.
fn star_ok_2r(w: &Word, pos: usize, u1: &Word, u2: &Word, v1: &Word, v2: &Word) -> bool {
    let before = pos == 0 || v2.is_empty() || w[pos - 1] != v2[0].inverse();
    let end = pos + v1.len() + u1.len();
    let after = end == w.len() || u2.is_empty() || w[end] != u2[0];
    before && after
}

fn star_ok_2l(w: &Word, pos: usize, u1: &Word, u2: &Word, v1: &Word, v2: &Word) -> bool {
    let before = pos == 0 || v1.is_empty() || w[pos - 1] != *v1.last().unwrap();
    let end = pos + v2.len() + u2.len();
    let after = end == w.len() || u1.is_empty() || w[end] != u1.last().unwrap().inverse();
    before && after
}

/// Whether the 2-star side conditions hold for a type-2 move in the context
/// of `w`; `None` for other kinds. The move's own star field is ignored.
pub fn move_star_ok(w: &Word, mv: &Move) -> Result<Option<bool>, MoveError> {
    match *mv {
        Move::T2R(t) => {
            let (u1, u2, v1, v2) = relation_parts(t.pair, t.m, t.splits)?;
            Ok(Some(star_ok_2r(w, t.pos, &u1, &u2, &v1, &v2)))
        }
        Move::T2L(t) => {
            let (u1, u2, v1, v2) = relation_parts(t.pair, t.m, t.splits)?;
            Ok(Some(star_ok_2l(w, t.pos, &u1, &u2, &v1, &v2)))
        }
        _ => Ok(None),
    }
}

fn replace(w: &Word, pos: usize, len: usize, with: &Word) -> Word {
    let mut v = Vec::with_capacity(w.len() - len + with.len());
    v.extend_from_slice(&w[..pos]);
    v.extend_from_slice(with);
    v.extend_from_slice(&w[pos + len..]);
    Word(v)
}

/// Apply one move, checking full legality (factor match, mandatory parts,
/// and the 2-star claim when the move carries one).
pub fn apply_move(w: &Word, mv: &Move) -> Result<Word, MoveError> {
    match *mv {
        Move::T0 { pos, gen } => {
            if pos + 2 > w.len() {
                return Err(MoveError::OutOfRange { pos, need: 2, len: w.len() });
            }
            let a = w[pos];
            if a.gen != gen || w[pos + 1] != a.inverse() {
                return Err(MoveError::FactorMismatch {
                    pos,
                    expected: Word(vec![Letter::pos(gen), Letter::neg(gen)]),
                    found: Word::from(&w[pos..pos + 2]),
                });
            }
            Ok(replace(w, pos, 2, &Word::new()))
        }
        Move::T1 { pos, pair: (x, y), m } => {
            if x == y {
                return Err(MoveError::SamePair);
            }
            let ml = m as usize;
            if ml == 0 || pos + ml > w.len() {
                return Err(MoveError::OutOfRange { pos, need: ml, len: w.len() });
            }
            let (expected, replacement) = if w[pos].is_pos() {
                (alt_from(x, y, ml), alt_from(y, x, ml))
            } else {
                (alt_from(x, y, ml).inverse(), alt_from(y, x, ml).inverse())
            };
            let found = Word::from(&w[pos..pos + ml]);
            if found != expected {
                return Err(MoveError::FactorMismatch { pos, expected, found });
            }
            Ok(replace(w, pos, ml, &replacement))
        }
        Move::T2R(t) => {
            let (u1, u2, v1, v2) = relation_parts(t.pair, t.m, t.splits)?;
            if u1.is_empty() || v1.is_empty() {
                return Err(MoveError::EmptyMandatoryPart { kind: "2r" });
            }
            let expected = v1.inverse().concat(&u1);
            if t.pos + expected.len() > w.len() {
                return Err(MoveError::OutOfRange {
                    pos: t.pos,
                    need: expected.len(),
                    len: w.len(),
                });
            }
            let found = Word::from(&w[t.pos..t.pos + expected.len()]);
            if found != expected {
                return Err(MoveError::FactorMismatch { pos: t.pos, expected, found });
            }
            if t.star && !star_ok_2r(w, t.pos, &u1, &u2, &v1, &v2) {
                return Err(MoveError::StarConditionFails { pos: t.pos });
            }
            Ok(replace(w, t.pos, expected.len(), &v2.concat(&u2.inverse())))
        }
        Move::T2L(t) => {
            let (u1, u2, v1, v2) = relation_parts(t.pair, t.m, t.splits)?;
            if u2.is_empty() || v2.is_empty() {
                return Err(MoveError::EmptyMandatoryPart { kind: "2l" });
            }
            let expected = v2.concat(&u2.inverse());
            if t.pos + expected.len() > w.len() {
                return Err(MoveError::OutOfRange {
                    pos: t.pos,
                    need: expected.len(),
                    len: w.len(),
                });
            }
            let found = Word::from(&w[t.pos..t.pos + expected.len()]);
            if found != expected {
                return Err(MoveError::FactorMismatch { pos: t.pos, expected, found });
            }
            if t.star && !star_ok_2l(w, t.pos, &u1, &u2, &v1, &v2) {
                return Err(MoveError::StarConditionFails { pos: t.pos });
            }
            Ok(replace(w, t.pos, expected.len(), &v1.inverse().concat(&u1)))
        }
    }
}

/// A replayable derivation: `moves` applied in order turn `start` into `end`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Trace {
    pub start: Word,
    pub moves: Vec<Move>,
    pub end: Word,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("move {index}: {source}")]
    Move { index: usize, source: MoveError },
    #[error("replay ends at {found:?}, trace claims {claimed:?}")]
    EndMismatch { claimed: Word, found: Word },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReverseError {
    #[error("move {index} is a removal, which has no inverse in the move alphabet")]
    Removal { index: usize },
    #[error("move {index} does not invert cleanly: {source}")]
    Illegal { index: usize, source: MoveError },
}

impl Trace {
    /// The empty derivation at `w`.
    pub fn identity(w: Word) -> Trace {
        Trace { start: w.clone(), moves: Vec::new(), end: w }
    }

    /// Sequential composition. Panics if the endpoints do not meet.
    pub fn then(mut self, other: &Trace) -> Trace {
        assert_eq!(self.end, other.start, "trace composition endpoint mismatch");
        self.moves.extend_from_slice(&other.moves);
        self.end = other.end.clone();
        self
    }

    /// Play the derivation backwards: moves are inverted in reverse order,
    /// with 2-star flags recomputed in their new contexts. Fails on
    /// removals and on the rare type-2 split whose inverse direction has an
    /// empty mandatory part.
    pub fn reversed(&self) -> Result<Trace, ReverseError> {
        let mut b = TraceBuilder::new(self.end.clone());
        for (index, mv) in self.moves.iter().enumerate().rev() {
            let inv = mv.inverted().ok_or(ReverseError::Removal { index })?;
            let inv = match move_star_ok(b.current(), &inv)
                .map_err(|source| ReverseError::Illegal { index, source })?
            {
                Some(star) => inv.with_star(star),
                None => inv,
            };
            b.try_push(inv)
                .map_err(|source| ReverseError::Illegal { index, source })?;
        }
        let tr = b.finish();
        debug_assert_eq!(tr.end, self.start);
        Ok(tr)
    }
}

/// Replay a trace, checking every move and the claimed end word.
pub fn verify(tr: &Trace) -> Result<(), TraceError> {
    let mut w = tr.start.clone();
    for (index, mv) in tr.moves.iter().enumerate() {
        w = apply_move(&w, mv).map_err(|source| TraceError::Move { index, source })?;
    }
    if w == tr.end {
        Ok(())
    } else {
        Err(TraceError::EndMismatch { claimed: tr.end.clone(), found: w })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpliceError {
    #[error("offset {offset}: expected factor {expected:?}, found {found:?}")]
    RegionMismatch { offset: usize, expected: Word, found: Word },
    #[error("spliced move {index}: {source}")]
    Move { index: usize, source: MoveError },
}

/// Grows a trace move by move, keeping the current word; every pushed move
/// is applied (and therefore fully checked) immediately.
pub struct TraceBuilder {
    start: Word,
    moves: Vec<Move>,
    current: Word,
}

impl TraceBuilder {
    pub fn new(start: Word) -> TraceBuilder {
        TraceBuilder { current: start.clone(), start, moves: Vec::new() }
    }

    pub fn current(&self) -> &Word {
        &self.current
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn try_push(&mut self, mv: Move) -> Result<(), MoveError> {
        self.current = apply_move(&self.current, &mv)?;
        self.moves.push(mv);
        Ok(())
    }

    /// Push a move that the caller knows is legal.
    pub fn push(&mut self, mv: Move) {
        if let Err(e) = self.try_push(mv) {
            panic!("illegal move {mv:?} on {:?}: {e}", self.current);
        }
    }

    /// Push removals, leftmost pair first, until the word is freely reduced.
    pub fn free_reduce(&mut self) {
        while let Some(i) = self
            .current
            .windows(2)
            .position(|p| p[0] == p[1].inverse())
        {
            let gen = self.current[i].gen;
            self.push(Move::T0 { pos: i, gen });
        }
    }

    /// Splice a whole sub-derivation in at `offset`: the sub-trace's start
    /// must occur there as a factor. Moves are shifted and their 2-star
    /// flags recomputed in the ambient context (the claim is positional, so
    /// it can gain or lose truth when letters surround the region).
    pub fn splice(&mut self, offset: usize, sub: &Trace) -> Result<(), SpliceError> {
        let len = sub.start.len();
        let found = if offset + len <= self.current.len() {
            Word::from(&self.current[offset..offset + len])
        } else {
            Word::new()
        };
        if found != sub.start {
            return Err(SpliceError::RegionMismatch {
                offset,
                expected: sub.start.clone(),
                found,
            });
        }
        for (index, mv) in sub.moves.iter().enumerate() {
            let shifted = mv.shifted(offset);
            let shifted = match move_star_ok(&self.current, &shifted)
                .map_err(|source| SpliceError::Move { index, source })?
            {
                Some(star) => shifted.with_star(star),
                None => shifted,
            };
            self.try_push(shifted)
                .map_err(|source| SpliceError::Move { index, source })?;
        }
        Ok(())
    }

    pub fn finish(self) -> Trace {
        Trace { start: self.start, moves: self.moves, end: self.current }
    }
}

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("{at}: expected {what}")]
    Shape { at: &'static str, what: &'static str },
    #[error("move {index}: unknown kind `{kind}`")]
    UnknownKind { index: usize, kind: String },
    #[error("move {index}: field `{field}` {problem}")]
    Field { index: usize, field: &'static str, problem: String },
    #[error("field `{field}`: {source}")]
    Word { field: &'static str, source: WordError },
}

fn gen_name(p: &Presentation, g: Gen) -> String {
    p.name(g).to_string()
}

fn move_to_json(p: &Presentation, mv: &Move) -> Value {
    match *mv {
        Move::T0 { pos, gen } => json!({
            "kind": "0",
            "pos": pos,
            "pair": [gen_name(p, gen), gen_name(p, gen)],
        }),
        Move::T1 { pos, pair: (x, y), m } => json!({
            "kind": "1",
            "pos": pos,
            "pair": [gen_name(p, x), gen_name(p, y)],
            "m": m,
        }),
        Move::T2R(t) | Move::T2L(t) => json!({
            "kind": if matches!(mv, Move::T2R(_)) { "2r" } else { "2l" },
            "pos": t.pos,
            "pair": [gen_name(p, t.pair.0), gen_name(p, t.pair.1)],
            "m": t.m,
            "splits": t.splits,
            "star": t.star,
        }),
    }
}

pub fn trace_to_json(p: &Presentation, tr: &Trace) -> Value {
    json!({
        "start": p.word_string(&tr.start),
        "end": p.word_string(&tr.end),
        "moves": tr.moves.iter().map(|mv| move_to_json(p, mv)).collect::<Vec<_>>(),
    })
}

fn json_gen(p: &Presentation, v: &Value, index: usize, which: usize) -> Result<Gen, JsonError> {
    let err = |problem: String| JsonError::Field { index, field: "pair", problem };
    let arr = v.as_array().ok_or_else(|| err("must be a two-element array".into()))?;
    let s = arr
        .get(which)
        .and_then(Value::as_str)
        .ok_or_else(|| err(format!("entry {which} must be a string")))?;
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => p
            .gen_by_name(c)
            .ok_or_else(|| err(format!("`{c}` is not a generator"))),
        _ => Err(err(format!("`{s}` is not a single generator name"))),
    }
}

fn json_usize(v: &Value, index: usize, field: &'static str) -> Result<usize, JsonError> {
    v.as_u64().map(|n| n as usize).ok_or(JsonError::Field {
        index,
        field,
        problem: "must be a non-negative integer".into(),
    })
}

fn move_from_json(p: &Presentation, v: &Value, index: usize) -> Result<Move, JsonError> {
    let obj = v
        .as_object()
        .ok_or(JsonError::Shape { at: "moves[]", what: "an object per move" })?;
    let missing = |field: &'static str| JsonError::Field {
        index,
        field,
        problem: "is required".into(),
    };
    let kind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or(missing("kind"))?;
    let pos = json_usize(obj.get("pos").ok_or(missing("pos"))?, index, "pos")?;
    let pair_v = obj.get("pair").ok_or(missing("pair"))?;
    let a = json_gen(p, pair_v, index, 0)?;
    let b = json_gen(p, pair_v, index, 1)?;
    let get_m = || -> Result<u32, JsonError> {
        Ok(json_usize(obj.get("m").ok_or(missing("m"))?, index, "m")? as u32)
    };
    match kind {
        "0" => {
            if a != b {
                return Err(JsonError::Field {
                    index,
                    field: "pair",
                    problem: "removal must name one generator twice".into(),
                });
            }
            Ok(Move::T0 { pos, gen: a })
        }
        "1" => Ok(Move::T1 { pos, pair: (a, b), m: get_m()? }),
        "2r" | "2l" => {
            let m = get_m()?;
            let sv = obj.get("splits").ok_or(missing("splits"))?;
            let arr = sv.as_array().filter(|a| a.len() == 4).ok_or(JsonError::Field {
                index,
                field: "splits",
                problem: "must be a four-element array".into(),
            })?;
            let mut splits = [0usize; 4];
            for (k, s) in arr.iter().enumerate() {
                splits[k] = json_usize(s, index, "splits")?;
            }
            let star = match obj.get("star") {
                None => false,
                Some(Value::Bool(b)) => *b,
                Some(_) => {
                    return Err(JsonError::Field {
                        index,
                        field: "star",
                        problem: "must be a boolean".into(),
                    })
                }
            };
            let two = Two { pos, pair: (a, b), m, splits, star };
            Ok(if kind == "2r" { Move::T2R(two) } else { Move::T2L(two) })
        }
        _ => Err(JsonError::UnknownKind { index, kind: kind.to_string() }),
    }
}

pub fn trace_from_json(p: &Presentation, v: &Value) -> Result<Trace, JsonError> {
    let obj = v
        .as_object()
        .ok_or(JsonError::Shape { at: "top level", what: "an object" })?;
    let word_field = |field: &'static str| -> Result<Word, JsonError> {
        let s = obj
            .get(field)
            .and_then(Value::as_str)
            .ok_or(JsonError::Shape { at: "top level", what: "string start/end words" })?;
        p.parse_word(s).map_err(|source| JsonError::Word { field, source })
    };
    let start = word_field("start")?;
    let end = word_field("end")?;
    let moves_v = obj
        .get("moves")
        .and_then(Value::as_array)
        .ok_or(JsonError::Shape { at: "moves", what: "an array" })?;
    let mut moves = Vec::with_capacity(moves_v.len());
    for (index, mv) in moves_v.iter().enumerate() {
        moves.push(move_from_json(p, mv, index)?);
    }
    Ok(Trace { start, moves, end })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::Presentation;

    fn p3() -> Presentation {
        Presentation::dihedral(3)
    }

    fn p4() -> Presentation {
        Presentation::dihedral(4)
    }

    fn w(p: &Presentation, s: &str) -> Word {
        p.parse_word(s).unwrap()
    }

    const S: Gen = Gen(0);
    const T: Gen = Gen(1);

    #[test]
    fn t1_flips_a_relation_side() {
        let p = p3();
        let mv = Move::T1 { pos: 0, pair: (S, T), m: 3 };
        assert_eq!(apply_move(&w(&p, "sts"), &mv).unwrap(), w(&p, "tst"));
        // Negative spelling flips the inverse side.
        assert_eq!(apply_move(&w(&p, "STS"), &mv).unwrap(), w(&p, "TST"));
        // Undo is the swapped pair at the same position.
        let undone = apply_move(&w(&p, "tst"), &mv.inverted().unwrap()).unwrap();
        assert_eq!(undone, w(&p, "sts"));
    }

    #[test]
    fn t2r_carries_the_inverse_block_right() {
        let p = p3();
        // STs -> tST
        let mv = Move::T2R(Two { pos: 0, pair: (S, T), m: 3, splits: [1, 2, 2, 1], star: false });
        assert_eq!(apply_move(&w(&p, "STs"), &mv).unwrap(), w(&p, "tST"));
        // TSTs -> ST, with an empty v2
        let mv = Move::T2R(Two { pos: 0, pair: (S, T), m: 3, splits: [1, 2, 3, 0], star: false });
        assert_eq!(apply_move(&w(&p, "TSTs"), &mv).unwrap(), w(&p, "ST"));
    }

    #[test]
    fn t2_moves_undo_each_other() {
        let p = p4();
        let two = Two { pos: 1, pair: (T, S), m: 4, splits: [3, 1, 1, 3], star: false };
        let start = w(&p, "ttstSt");
        let mid = apply_move(&start, &Move::T2L(two)).unwrap();
        assert_eq!(mid, w(&p, "tStstt"));
        assert_eq!(apply_move(&mid, &Move::T2R(two)).unwrap(), start);
    }

    #[test]
    fn star_claims_are_checked_positionally() {
        let p = p4();
        // The greedy factor tstS at position 1 is a 2-star move.
        let good = Two { pos: 1, pair: (T, S), m: 4, splits: [3, 1, 1, 3], star: true };
        assert!(apply_move(&w(&p, "ttstSt"), &Move::T2L(good)).is_ok());
        assert_eq!(
            move_star_ok(&w(&p, "ttstSt"), &Move::T2L(good)).unwrap(),
            Some(true)
        );
        // The shorter factor stS at position 2 is preceded by a letter that
        // extends its positive block, so the star claim fails there.
        let bad = Two { pos: 2, pair: (T, S), m: 4, splits: [3, 1, 2, 2], star: true };
        assert_eq!(
            apply_move(&w(&p, "ttstSt"), &Move::T2L(bad)),
            Err(MoveError::StarConditionFails { pos: 2 })
        );
        // Without the claim the same move is plain type 2 and legal.
        let plain = Move::T2L(bad).with_star(false);
        assert!(apply_move(&w(&p, "ttstSt"), &plain).is_ok());
    }

    #[test]
    fn removal_needs_an_adjacent_inverse_pair() {
        let p = p3();
        let mv = Move::T0 { pos: 1, gen: T };
        assert_eq!(apply_move(&w(&p, "stTs"), &mv).unwrap(), w(&p, "ss"));
        assert_eq!(apply_move(&w(&p, "sTts"), &mv).unwrap(), w(&p, "ss"));
        assert!(matches!(
            apply_move(&w(&p, "stts"), &mv),
            Err(MoveError::FactorMismatch { .. })
        ));
        assert!(matches!(
            apply_move(&w(&p, "st"), &mv),
            Err(MoveError::OutOfRange { .. })
        ));
    }

    #[test]
    fn builder_free_reduce_is_leftmost_first() {
        let p = p3();
        let mut b = TraceBuilder::new(w(&p, "stTS"));
        b.free_reduce();
        let tr = b.finish();
        assert_eq!(tr.end, Word::new());
        assert_eq!(
            tr.moves,
            vec![Move::T0 { pos: 1, gen: T }, Move::T0 { pos: 0, gen: S }]
        );
        assert!(verify(&tr).is_ok());
    }

    #[test]
    fn verify_reports_first_failure() {
        let p = p3();
        let good = Trace {
            start: w(&p, "stTS"),
            moves: vec![Move::T0 { pos: 1, gen: T }, Move::T0 { pos: 0, gen: S }],
            end: Word::new(),
        };
        assert!(verify(&good).is_ok());

        let bad_pos = Trace {
            start: w(&p, "stTS"),
            moves: vec![Move::T0 { pos: 1, gen: T }, Move::T0 { pos: 1, gen: S }],
            end: Word::new(),
        };
        assert!(matches!(
            verify(&bad_pos),
            Err(TraceError::Move { index: 1, .. })
        ));

        let bad_end = Trace {
            start: w(&p, "stTS"),
            moves: vec![Move::T0 { pos: 1, gen: T }],
            end: Word::new(),
        };
        assert!(matches!(verify(&bad_end), Err(TraceError::EndMismatch { .. })));
    }

    #[test]
    fn splice_recomputes_star_flags() {
        let p = p4();
        // Standalone, tstS -> Stst at position 0 is 2-star (nothing nearby).
        let sub = {
            let mut b = TraceBuilder::new(w(&p, "tstS"));
            b.push(Move::T2L(Two {
                pos: 0,
                pair: (T, S),
                m: 4,
                splits: [3, 1, 1, 3],
                star: true,
            }));
            b.finish()
        };
        // In s.tstS.t the letter before the region extends v1, so the
        // spliced move must drop its star claim.
        let mut b = TraceBuilder::new(w(&p, "ststSt"));
        b.splice(1, &sub).unwrap();
        let tr = b.finish();
        assert_eq!(tr.end, w(&p, "sStstt"));
        assert!(!tr.moves[0].is_star());
        assert!(verify(&tr).is_ok());

        // In t.tstS.t it keeps the claim.
        let mut b = TraceBuilder::new(w(&p, "ttstSt"));
        b.splice(1, &sub).unwrap();
        assert!(b.moves()[0].is_star());

        let mut b = TraceBuilder::new(w(&p, "ststSt"));
        assert!(matches!(
            b.splice(2, &sub),
            Err(SpliceError::RegionMismatch { .. })
        ));
    }

    #[test]
    fn reversal_inverts_movewise() {
        let p = p3();
        let mut b = TraceBuilder::new(w(&p, "sTsTs"));
        b.push(Move::T2R(Two { pos: 1, pair: (S, T), m: 3, splits: [1, 2, 1, 2], star: true }));
        b.push(Move::T2R(Two { pos: 5, pair: (S, T), m: 3, splits: [1, 2, 1, 2], star: true }));
        let tr = b.finish();
        assert_eq!(tr.end, w(&p, "sstSTstST"));

        let back = tr.reversed().unwrap();
        assert_eq!(back.start, tr.end);
        assert_eq!(back.end, tr.start);
        assert!(verify(&back).is_ok());
        assert!(matches!(back.moves[0], Move::T2L(_)));
        assert!(matches!(back.moves[1], Move::T2L(_)));

        // Removals do not reverse.
        let mut b = TraceBuilder::new(w(&p, "sS"));
        b.free_reduce();
        assert_eq!(
            b.finish().reversed(),
            Err(ReverseError::Removal { index: 0 })
        );
    }

    #[test]
    fn json_round_trip() {
        let p = p3();
        let mut b = TraceBuilder::new(w(&p, "TstsTsTs"));
        b.push(Move::T1 { pos: 1, pair: (S, T), m: 3 });
        b.free_reduce();
        b.push(Move::T2R(Two { pos: 2, pair: (S, T), m: 3, splits: [1, 2, 1, 2], star: true }));
        b.push(Move::T2L(Two { pos: 3, pair: (S, T), m: 3, splits: [1, 2, 2, 1], star: false }));
        b.free_reduce();
        let tr = b.finish();
        assert_eq!(tr.end, w(&p, "ssTs"));

        let v = trace_to_json(&p, &tr);
        assert_eq!(v["moves"][0]["kind"], "1");
        assert!(v["moves"][0].get("splits").is_none());
        assert_eq!(v["moves"][1]["kind"], "0");
        assert!(v["moves"][1].get("m").is_none());
        assert_eq!(v["moves"][3]["kind"], "2r");
        assert_eq!(v["moves"][3]["star"], true);
        assert_eq!(v["moves"][3]["pair"][0], "s");
        assert_eq!(v["moves"][4]["kind"], "2l");
        assert_eq!(v["moves"][4]["splits"][2], 2);

        let back = trace_from_json(&p, &v).unwrap();
        assert_eq!(back, tr);
        assert!(verify(&back).is_ok());
    }

    #[test]
    fn json_rejects_malformed_moves() {
        let p = p3();
        let bad_kind: Value =
            serde_json::from_str(r#"{"start":"s","end":"s","moves":[{"kind":"3","pos":0,"pair":["s","s"]}]}"#)
                .unwrap();
        assert!(matches!(
            trace_from_json(&p, &bad_kind),
            Err(JsonError::UnknownKind { index: 0, .. })
        ));

        let missing_m: Value =
            serde_json::from_str(r#"{"start":"sts","end":"tst","moves":[{"kind":"1","pos":0,"pair":["s","t"]}]}"#)
                .unwrap();
        assert!(matches!(
            trace_from_json(&p, &missing_m),
            Err(JsonError::Field { field: "m", .. })
        ));

        let bad_word: Value =
            serde_json::from_str(r#"{"start":"xy","end":"","moves":[]}"#).unwrap();
        assert!(matches!(
            trace_from_json(&p, &bad_word),
            Err(JsonError::Word { field: "start", .. })
        ));
    }
}
