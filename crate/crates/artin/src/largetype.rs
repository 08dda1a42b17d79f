//! The multi-generator engine for presentations whose labels are all at
//! least 3. Critical factor chains carry flips across adjacent parabolics;
//! on top of them sit geodesic reduction, a greedy shortlex normal form,
//! geodesic-to-geodesic traces, and coset-minimal decompositions.

use std::collections::HashMap;

use thiserror::Error;

use crate::dihedral::{DihedralContext, DihedralError};
use crate::presentation::Presentation;
use crate::trace::{SpliceError, Trace, TraceBuilder};
use crate::word::{shortlex_cmp, Gen, GenMask, Letter, Word};

#[derive(Error, Debug, PartialEq, Eq)]
pub enum LargeTypeError {
    #[error("presentation has a label below 3")]
    NotLargeType,
    #[error("factor chain does not satisfy the chaining condition")]
    BadFactorization,
    #[error("dihedral step failed: {0}")]
    Dihedral(#[from] DihedralError),
    #[error("trace splice failed: {0}")]
    Splice(#[from] SpliceError),
    #[error("word is not geodesic")]
    NotGeodesic,
    #[error("normal forms differ: {left:?} vs {right:?}")]
    NormalFormMismatch { left: Word, right: Word },
    #[error("geodesic leaves the requested alphabet")]
    AlphabetEscape,
    #[error("search gave up without a certificate: {0}")]
    Indeterminate(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Rightward,
    Leftward,
}

/// A chain of factors threading critical words across parabolics. The chain
/// is stored in processing order: rightward chains read left to right in the
/// word, leftward chains right to left.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriticalFactorization {
    pub direction: Direction,
    pub alpha: Word,
    pub factors: Vec<Word>,
    pub beta: Word,
}

/// Decomposition w = v u with u over a standard parabolic alphabet and v a
/// shortest representative of its coset. The trace carries the input to the
/// concatenation v u.
#[derive(Clone, Debug)]
pub struct TransversalDecomposition {
    pub v: Word,
    pub u: Word,
    pub trace: Trace,
}

pub fn check_large_type(p: &Presentation) -> Result<(), LargeTypeError> {
    let ok = p
        .pairs()
        .all(|(_, _, label)| label.finite().is_none_or(|m| m >= 3));
    if ok {
        Ok(())
    } else {
        Err(LargeTypeError::NotLargeType)
    }
}

// The dihedral context of a two-generator word, when its pair has a finite
// label. Critical words never live over one generator or an infinite label.
fn pair_context(p: &Presentation, w: &Word) -> Option<DihedralContext> {
    let sup: Vec<Gen> = w.support().iter().collect();
    if sup.len() != 2 {
        return None;
    }
    DihedralContext::for_pair(p, sup[0], sup[1])
}

fn flip_of(p: &Presentation, w: &Word) -> Option<Word> {
    let ctx = pair_context(p, w)?;
    ctx.flip(w).ok()
}

impl CriticalFactorization {
    fn block_len(&self) -> usize {
        self.factors.iter().map(|f| f.len()).sum()
    }

    /// The word this factorization tiles.
    pub fn source(&self) -> Word {
        let mut out = self.alpha.clone();
        match self.direction {
            Direction::Rightward => {
                for f in &self.factors {
                    out = out.concat(f);
                }
            }
            Direction::Leftward => {
                for f in self.factors.iter().rev() {
                    out = out.concat(f);
                }
            }
        }
        out.concat(&self.beta)
    }

    /// The block the factors turn into: each chain step flips the factor
    /// together with the letter handed over by the previous step, passing
    /// one letter on to the next.
    pub fn replacement(&self, p: &Presentation) -> Result<Word, LargeTypeError> {
        let terms = flip_sequence(p, self)?;
        let mut out = Word::new();
        match self.direction {
            Direction::Rightward => {
                for t in &terms {
                    out = out.concat(t);
                }
            }
            Direction::Leftward => {
                for t in terms.iter().rev() {
                    out = out.concat(t);
                }
            }
        }
        Ok(out)
    }

    /// The whole word after the chain is applied (before any free
    /// reduction).
    pub fn applied_word(&self, p: &Presentation) -> Result<Word, LargeTypeError> {
        Ok(self.alpha.concat(&self.replacement(p)?).concat(&self.beta))
    }
}

/// The flipped terms of a chain, in processing order. All terms but the
/// last lose the letter handed to the next factor; the last keeps it, so
/// concatenating the terms matches the factor block in length.
pub fn flip_sequence(
    p: &Presentation,
    cf: &CriticalFactorization,
) -> Result<Vec<Word>, LargeTypeError> {
    let mut terms = Vec::with_capacity(cf.factors.len());
    let mut entering: Option<Letter> = None;
    for (i, v) in cf.factors.iter().enumerate() {
        let crit = match (cf.direction, entering) {
            (_, None) => v.clone(),
            (Direction::Rightward, Some(s)) => Word::single(s).concat(v),
            (Direction::Leftward, Some(s)) => v.concat(&Word::single(s)),
        };
        let flipped = flip_of(p, &crit).ok_or(LargeTypeError::BadFactorization)?;
        let last = i + 1 == cf.factors.len();
        if last {
            terms.push(flipped);
        } else {
            match cf.direction {
                Direction::Rightward => {
                    entering = Some(flipped[flipped.len() - 1]);
                    terms.push(Word::from(&flipped[..flipped.len() - 1]));
                }
                Direction::Leftward => {
                    entering = Some(flipped[0]);
                    terms.push(Word::from(&flipped[1..]));
                }
            }
        }
    }
    Ok(terms)
}

/// Depth-first enumeration of factor chains on `w`. With `want_cancelling`,
/// only chains whose handed-on end letter cancels against the neighbouring
/// remainder are reported: those are exactly the chains whose application
/// shortens the word after free reduction.
pub fn find_critical_factorizations(
    p: &Presentation,
    w: &Word,
    direction: Direction,
    want_cancelling: bool,
) -> Vec<CriticalFactorization> {
    let mut out = Vec::new();
    search_factorizations(p, w, direction, want_cancelling, &mut |cf| {
        out.push(cf);
        false
    });
    out
}

fn first_cancelling(
    p: &Presentation,
    w: &Word,
    direction: Direction,
) -> Option<CriticalFactorization> {
    let mut found = None;
    search_factorizations(p, w, direction, true, &mut |cf| {
        found = Some(cf);
        true
    });
    found
}

// Shared chain search. The visitor returns true to stop. States that led
// nowhere are memoized by (boundary position, handed-over letter).
fn search_factorizations(
    p: &Presentation,
    w: &Word,
    direction: Direction,
    want_cancelling: bool,
    visit: &mut dyn FnMut(CriticalFactorization) -> bool,
) {
    debug_assert!(w.is_freely_reduced());
    let mut dead: HashMap<(usize, Letter), bool> = HashMap::new();
    match direction {
        Direction::Rightward => {
            for start in 0..w.len() {
                let mut chain = Vec::new();
                if go_right(p, w, want_cancelling, start, start, None, &mut chain, &mut dead, visit)
                {
                    return;
                }
            }
        }
        Direction::Leftward => {
            for start in (1..=w.len()).rev() {
                let mut chain = Vec::new();
                if go_left(p, w, want_cancelling, start, start, None, &mut chain, &mut dead, visit)
                {
                    return;
                }
            }
        }
    }
}

// Support of a slice plus an optional handed-over letter; None when it can
// no longer fit a two-generator parabolic with a finite label.
fn slice_context(
    p: &Presentation,
    seg: &[Letter],
    extra: Option<Letter>,
) -> Result<Option<DihedralContext>, ()> {
    let mut mask = GenMask::EMPTY;
    if let Some(s) = extra {
        mask.insert(s.gen);
    }
    for l in seg {
        mask.insert(l.gen);
    }
    let gens: Vec<Gen> = mask.iter().collect();
    match gens.len() {
        0 | 1 => Ok(None),
        2 => match DihedralContext::for_pair(p, gens[0], gens[1]) {
            Some(ctx) => Ok(Some(ctx)),
            // An infinite label can never host a critical word, and growing
            // the slice keeps both generators in play.
            None => Err(()),
        },
        _ => Err(()),
    }
}

#[allow(clippy::too_many_arguments)]
fn go_right(
    p: &Presentation,
    w: &Word,
    want_cancelling: bool,
    start: usize,
    pos: usize,
    entering: Option<Letter>,
    chain: &mut Vec<Word>,
    dead: &mut HashMap<(usize, Letter), bool>,
    visit: &mut dyn FnMut(CriticalFactorization) -> bool,
) -> bool {
    if let Some(s) = entering {
        if dead.get(&(pos, s)).copied().unwrap_or(false) {
            return false;
        }
    }
    let mut emitted = false;
    if let Some(s) = entering {
        // Option one: close the chain here. The handed-over letter is the
        // last letter of the final flipped term.
        let closes = if want_cancelling {
            pos < w.len() && s == w[pos].inverse()
        } else {
            true
        };
        if closes {
            let cf = CriticalFactorization {
                direction: Direction::Rightward,
                alpha: Word::from(&w[..start]),
                factors: chain.clone(),
                beta: Word::from(&w[pos..]),
            };
            if visit(cf) {
                return true;
            }
            emitted = true;
        }
    }
    // Option two: extend with the next factor.
    for l in 1..=w.len() - pos {
        let seg = &w[pos..pos + l];
        let ctx = match slice_context(p, seg, entering) {
            Ok(Some(ctx)) => ctx,
            Ok(None) => continue,
            Err(()) => break,
        };
        let crit = match entering {
            None => Word::from(seg),
            Some(s) => Word::single(s).concat(&Word::from(seg)),
        };
        if ctx.critical(&crit).is_none() {
            continue;
        }
        let flipped = ctx.flip(&crit).expect("classified critical");
        let handed = flipped[flipped.len() - 1];
        chain.push(Word::from(seg));
        let stop = go_right(p, w, want_cancelling, start, pos + l, Some(handed), chain, dead, visit);
        chain.pop();
        if stop {
            return true;
        }
        if !dead.get(&(pos + l, handed)).copied().unwrap_or(false) {
            emitted = true;
        }
    }
    if let Some(s) = entering {
        if !emitted {
            dead.insert((pos, s), true);
        }
    }
    false
}

#[allow(clippy::too_many_arguments)]
fn go_left(
    p: &Presentation,
    w: &Word,
    want_cancelling: bool,
    start: usize,
    pos: usize,
    entering: Option<Letter>,
    chain: &mut Vec<Word>,
    dead: &mut HashMap<(usize, Letter), bool>,
    visit: &mut dyn FnMut(CriticalFactorization) -> bool,
) -> bool {
    if let Some(s) = entering {
        if dead.get(&(pos, s)).copied().unwrap_or(false) {
            return false;
        }
    }
    let mut emitted = false;
    if let Some(s) = entering {
        let closes = if want_cancelling {
            pos > 0 && s == w[pos - 1].inverse()
        } else {
            true
        };
        if closes {
            let cf = CriticalFactorization {
                direction: Direction::Leftward,
                alpha: Word::from(&w[..pos]),
                factors: chain.clone(),
                beta: Word::from(&w[start..]),
            };
            if visit(cf) {
                return true;
            }
            emitted = true;
        }
    }
    for l in 1..=pos {
        let seg = &w[pos - l..pos];
        let ctx = match slice_context(p, seg, entering) {
            Ok(Some(ctx)) => ctx,
            Ok(None) => continue,
            Err(()) => break,
        };
        let crit = match entering {
            None => Word::from(seg),
            Some(s) => Word::from(seg).concat(&Word::single(s)),
        };
        if ctx.critical(&crit).is_none() {
            continue;
        }
        let flipped = ctx.flip(&crit).expect("classified critical");
        let handed = flipped[0];
        chain.push(Word::from(seg));
        let stop = go_left(p, w, want_cancelling, start, pos - l, Some(handed), chain, dead, visit);
        chain.pop();
        if stop {
            return true;
        }
        if !dead.get(&(pos - l, handed)).copied().unwrap_or(false) {
            emitted = true;
        }
    }
    if let Some(s) = entering {
        if !emitted {
            dead.insert((pos, s), true);
        }
    }
    false
}

// Splice the chain's flip traces into the builder, walking the handed-over
// letter across the word.
fn apply_into(
    p: &Presentation,
    b: &mut TraceBuilder,
    cf: &CriticalFactorization,
) -> Result<(), LargeTypeError> {
    match cf.direction {
        Direction::Rightward => {
            let mut at = cf.alpha.len();
            let mut entering = 0usize;
            for v in &cf.factors {
                let lo = at - entering;
                let crit = Word::from(&b.current()[lo..lo + v.len() + entering]);
                let ctx = pair_context(p, &crit).ok_or(LargeTypeError::BadFactorization)?;
                let tr = ctx.flip_trace(&crit)?;
                b.splice(lo, &tr)?;
                entering = 1;
                at = lo + crit.len();
            }
        }
        Direction::Leftward => {
            let mut right = cf.alpha.len() + cf.block_len();
            let mut entering = 0usize;
            for v in &cf.factors {
                let lo = right - entering - v.len();
                let crit = Word::from(&b.current()[lo..lo + v.len() + entering]);
                let ctx = pair_context(p, &crit).ok_or(LargeTypeError::BadFactorization)?;
                let tr = ctx.flip_trace(&crit)?;
                b.splice(lo, &tr)?;
                entering = 1;
                right = lo + 1;
            }
        }
    }
    Ok(())
}

/// Replace the factor block of `cf` by its flipped terms, returning the new
/// word and a verifying trace of single relation applications and star
/// moves.
pub fn apply_critical_sequence(
    p: &Presentation,
    w: &Word,
    cf: &CriticalFactorization,
) -> Result<(Word, Trace), LargeTypeError> {
    let mut b = TraceBuilder::new(w.clone());
    apply_into(p, &mut b, cf)?;
    let end = b.current().clone();
    debug_assert_eq!(end, cf.applied_word(p)?);
    Ok((end, b.finish()))
}

fn reduce_into(p: &Presentation, b: &mut TraceBuilder) -> Result<(), LargeTypeError> {
    loop {
        b.free_reduce();
        let cur = b.current().clone();
        let Some(cf) = first_cancelling(p, &cur, Direction::Rightward) else {
            return Ok(());
        };
        apply_into(p, b, &cf)?;
    }
}

/// Shorten `w` to a geodesic spelling: free reduction interleaved with
/// cancelling factor chains until neither applies.
pub fn reduce_to_geodesic(p: &Presentation, w: &Word) -> Result<(Word, Trace), LargeTypeError> {
    check_large_type(p)?;
    let mut b = TraceBuilder::new(w.clone());
    reduce_into(p, &mut b)?;
    Ok((b.current().clone(), b.finish()))
}

fn shortlex_into(p: &Presentation, b: &mut TraceBuilder) -> Result<(), LargeTypeError> {
    reduce_into(p, b)?;
    loop {
        let cur = b.current().clone();
        let mut best: Option<(Word, CriticalFactorization)> = None;
        for cf in find_critical_factorizations(p, &cur, Direction::Leftward, false) {
            let cand = cf.applied_word(p)?;
            debug_assert!(cand.is_freely_reduced());
            let against = best.as_ref().map_or(&cur, |(b, _)| b);
            if shortlex_cmp(&cand, against) == std::cmp::Ordering::Less {
                best = Some((cand, cf));
            }
        }
        match best {
            Some((_, cf)) => apply_into(p, b, &cf)?,
            None => return Ok(()),
        }
    }
}

/// Geodesic reduction followed by greedy length-preserving improvement:
/// keep applying the leftward chain that most lowers the word in shortlex
/// order until none does. The result is stable under repetition; whether it
/// always reaches the global shortlex minimum is checked by callers that
/// need it, never assumed.
pub fn shortlex_nf(p: &Presentation, w: &Word) -> Result<(Word, Trace), LargeTypeError> {
    check_large_type(p)?;
    let mut b = TraceBuilder::new(w.clone());
    shortlex_into(p, &mut b)?;
    Ok((b.current().clone(), b.finish()))
}

/// A relation-only trace between two geodesic spellings of one element,
/// through their common shortlex form. Mismatched forms are reported, not
/// papered over: they mean unequal elements or a greedy-strategy failure.
pub fn connect_geodesics(p: &Presentation, w: &Word, v: &Word) -> Result<Trace, LargeTypeError> {
    check_large_type(p)?;
    if !w.is_freely_reduced() || !v.is_freely_reduced() {
        return Err(LargeTypeError::NotGeodesic);
    }
    let (nw, tw) = shortlex_nf(p, w)?;
    let (nv, tv) = shortlex_nf(p, v)?;
    if nw.len() != w.len() || nv.len() != v.len() {
        return Err(LargeTypeError::NotGeodesic);
    }
    if nw != nv {
        return Err(LargeTypeError::NormalFormMismatch { left: nw, right: nv });
    }
    let back = tv
        .reversed()
        .expect("length-preserving traces contain no cancellations");
    Ok(tw.then(&back))
}

/// Split w as v u with u over the masked alphabet and v the shortlex
/// spelling of a shortest representative of the coset of w modulo that
/// parabolic, so any two words naming one element return the same v. Works
/// by greedy descent: absorb any letter of the parabolic that shortens the
/// front part, realizing each absorption as a geodesic-to-geodesic
/// respelling. `probe_depth` additionally searches short letter blocks
/// whose absorption shortens the front by their full length, as a safety
/// net for descents a single letter cannot see.
pub fn min_coset_rep(
    p: &Presentation,
    w: &Word,
    sub: GenMask,
    probe_depth: usize,
) -> Result<TransversalDecomposition, LargeTypeError> {
    check_large_type(p)?;
    let letters: Vec<Letter> = sub
        .iter()
        .flat_map(|g| [Letter::pos(g), Letter::neg(g)])
        .collect();
    let mut b = TraceBuilder::new(w.clone());
    reduce_into(p, &mut b)?;
    let mut v_len = b.current().len();
    'descend: loop {
        let v = Word::from(&b.current()[..v_len]);
        let mut blocks: Vec<Word> = letters.iter().map(|&z| Word::single(z)).collect();
        for _ in 0..probe_depth.max(1) {
            let mut next = Vec::new();
            for block in &blocks {
                let probe = v.concat(block);
                let (red, _) = reduce_to_geodesic(p, &probe)?;
                if red.len() + block.len() == v.len() {
                    // Full descent: v ends in this block's inverse, up to
                    // respelling. Move it across the boundary.
                    let target = red.concat(&block.inverse());
                    let seg = connect_geodesics(p, &v, &target).map_err(|e| match e {
                        LargeTypeError::NormalFormMismatch { .. } => LargeTypeError::Indeterminate(
                            "descent step found no connecting trace".into(),
                        ),
                        other => other,
                    })?;
                    b.splice(0, &seg)?;
                    v_len = red.len();
                    continue 'descend;
                }
                if red.len() == v.len() + block.len() {
                    for &z in &letters {
                        if block.last().is_some_and(|&l| l == z.inverse()) {
                            continue;
                        }
                        next.push(block.concat(&Word::single(z)));
                    }
                }
            }
            blocks = next;
            if blocks.is_empty() {
                break;
            }
        }
        break;
    }
    // Canonical spelling for the front part; length is already minimal.
    let v = Word::from(&b.current()[..v_len]);
    let (_, nf_tr) = shortlex_nf(p, &v)?;
    b.splice(0, &nf_tr)?;
    let cur = b.current().clone();
    Ok(TransversalDecomposition {
        v: Word::from(&cur[..v_len]),
        u: Word::from(&cur[v_len..]),
        trace: b.finish(),
    })
}

/// Transversal decomposition for an element of the parabolic on `ambient`:
/// v stays over `ambient`, u over the intersection with `sub`. Words whose
/// geodesics leave `ambient` are rejected.
pub fn coset_decompose_within(
    p: &Presentation,
    w: &Word,
    sub: GenMask,
    ambient: GenMask,
    probe_depth: usize,
) -> Result<TransversalDecomposition, LargeTypeError> {
    check_large_type(p)?;
    let (g, _) = reduce_to_geodesic(p, w)?;
    if !g.support().is_subset(ambient) {
        return Err(LargeTypeError::AlphabetEscape);
    }
    let td = min_coset_rep(p, w, sub.intersect(ambient), probe_depth)?;
    debug_assert!(td.v.support().is_subset(ambient));
    debug_assert!(td.u.support().is_subset(sub.intersect(ambient)));
    Ok(td)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dihedral::DihedralContext;
    use crate::garside::{gen_identity_word, DihedralOracle};
    use crate::trace::{verify, Move};

    fn tri333() -> Presentation {
        Presentation::parse("gens: a b c\nm a b 3\nm a c 3\nm b c 3\n").unwrap()
    }

    fn tri345() -> Presentation {
        Presentation::parse("gens: a b c\nm a b 3\nm a c 4\nm b c 5\n").unwrap()
    }

    fn w(p: &Presentation, s: &str) -> Word {
        p.parse_word(s).unwrap()
    }

    fn reduced_words(len: usize) -> Vec<Word> {
        let letters = [
            Letter::pos(Gen(0)),
            Letter::neg(Gen(0)),
            Letter::pos(Gen(1)),
            Letter::neg(Gen(1)),
        ];
        let mut out: Vec<Word> = vec![Word::new()];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|v| {
                    letters.iter().filter_map(move |&l| {
                        if v.last().is_some_and(|&p| p == l.inverse()) {
                            None
                        } else {
                            let mut n = v.clone();
                            n.push(l);
                            Some(n)
                        }
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn large_type_check() {
        assert!(check_large_type(&tri333()).is_ok());
        assert!(check_large_type(&tri345()).is_ok());
        let flat = Presentation::parse("gens: a b\nm a b 2\n").unwrap();
        assert_eq!(check_large_type(&flat), Err(LargeTypeError::NotLargeType));
        let free = Presentation::parse("gens: a b\n").unwrap();
        assert!(check_large_type(&free).is_ok());
    }

    #[test]
    fn single_factor_chains_on_a_dihedral_word() {
        let p = Presentation::dihedral(3);
        let word = w(&p, "stsT");
        let found = find_critical_factorizations(&p, &word, Direction::Rightward, true);
        assert!(!found.is_empty());
        let first = &found[0];
        assert_eq!(first.alpha, Word::new());
        assert_eq!(first.factors, vec![w(&p, "sts")]);
        assert_eq!(first.beta, w(&p, "T"));
        assert_eq!(first.source(), word);

        // Geodesics admit no cancelling chain in either direction.
        for s in ["st", "ts", "sT", "stS", "sts"] {
            let v = w(&p, s);
            assert!(
                find_critical_factorizations(&p, &v, Direction::Rightward, true).is_empty(),
                "{s}"
            );
            assert!(
                find_critical_factorizations(&p, &v, Direction::Leftward, true).is_empty(),
                "{s}"
            );
        }
        assert!(find_critical_factorizations(&p, &Word::new(), Direction::Rightward, true)
            .is_empty());
    }

    #[test]
    fn two_factor_chain_crosses_parabolics() {
        let p = tri333();
        // aba flips to bab, handing b to the c-parabolic where bcb flips to
        // cbc, whose final c cancels the trailing inverse.
        let word = w(&p, "abacbC");
        let cf = first_cancelling(&p, &word, Direction::Rightward).expect("chain exists");
        assert_eq!(cf.factors.len(), 2);
        assert_eq!(cf.factors, vec![w(&p, "aba"), w(&p, "cb")]);
        assert_eq!(cf.beta, w(&p, "C"));

        let terms = flip_sequence(&p, &cf).unwrap();
        assert_eq!(terms, vec![w(&p, "ba"), w(&p, "cbc")]);

        let (applied, tr) = apply_critical_sequence(&p, &word, &cf).unwrap();
        verify(&tr).unwrap();
        assert_eq!(applied, w(&p, "bacbcC"));
        assert_eq!(applied.free_reduce(), w(&p, "bacb"));

        let (out, tr) = reduce_to_geodesic(&p, &word).unwrap();
        verify(&tr).unwrap();
        assert_eq!(out, w(&p, "bacb"));
    }

    #[test]
    fn chain_prefixes_and_suffixes_stay_valid() {
        // Splitting a found chain at any point leaves two valid chains, the
        // second entered through the handed-over letter.
        let p = tri333();
        let word = w(&p, "abacbC");
        for cf in find_critical_factorizations(&p, &word, Direction::Rightward, true) {
            let n = cf.factors.len();
            for k in 1..n {
                let head = CriticalFactorization {
                    direction: cf.direction,
                    alpha: cf.alpha.clone(),
                    factors: cf.factors[..k].to_vec(),
                    beta: Word::new(),
                };
                assert!(flip_sequence(&p, &head).is_ok());
                // Recover the letter handed from step k to step k+1.
                let mut entering: Option<Letter> = None;
                for v in &cf.factors[..k] {
                    let crit = match entering {
                        None => v.clone(),
                        Some(s) => Word::single(s).concat(v),
                    };
                    let f = flip_of(&p, &crit).unwrap();
                    entering = Some(f[f.len() - 1]);
                }
                let s = entering.unwrap();
                let mut tail_factors =
                    vec![Word::single(s).concat(&cf.factors[k])];
                tail_factors.extend(cf.factors[k + 1..].iter().cloned());
                let tail = CriticalFactorization {
                    direction: cf.direction,
                    alpha: Word::new(),
                    factors: tail_factors,
                    beta: Word::new(),
                };
                assert!(flip_sequence(&p, &tail).is_ok(), "split at {k}");
            }
        }
    }

    #[test]
    fn flip_segment_kinds_match_factor_shape() {
        let p = Presentation::dihedral(3);
        // Mixed-sign factor: star moves only.
        let word = w(&p, "sstS");
        let cf = first_cancelling(&p, &word, Direction::Rightward);
        // s + tS is not how the chain falls here; just apply a hand-built
        // single-factor chain instead.
        drop(cf);
        let cf = CriticalFactorization {
            direction: Direction::Rightward,
            alpha: w(&p, "s"),
            factors: vec![w(&p, "stS")],
            beta: Word::new(),
        };
        let (applied, tr) = apply_critical_sequence(&p, &word, &cf).unwrap();
        verify(&tr).unwrap();
        assert_eq!(applied, w(&p, "s").concat(&w(&p, "Tst")));
        assert!(tr.moves.iter().all(|m| matches!(m, Move::T2R(_) | Move::T2L(_))));

        // Single-sign factor: single relation applications only.
        let word = w(&p, "ssts");
        let cf = CriticalFactorization {
            direction: Direction::Rightward,
            alpha: Word::new(),
            factors: vec![word.clone()],
            beta: Word::new(),
        };
        let (applied, tr) = apply_critical_sequence(&p, &word, &cf).unwrap();
        verify(&tr).unwrap();
        assert_eq!(applied, w(&p, "tstt"));
        assert!(tr.moves.iter().all(|m| matches!(m, Move::T1 { .. })));
    }

    #[test]
    fn reduction_agrees_with_the_dihedral_engine() {
        for m in [3u32, 4] {
            let p = Presentation::dihedral(m);
            let ctx = DihedralContext::new(Gen(0), Gen(1), m);
            let o = DihedralOracle::new(Gen(0), Gen(1), m);
            let ball = o.distance_ball(6);
            for len in 0..=6usize {
                for word in reduced_words(len) {
                    let (out, tr) = reduce_to_geodesic(&p, &word).unwrap();
                    verify(&tr).unwrap();
                    assert_eq!(tr.start, word);
                    assert_eq!(tr.end, out);
                    let (dout, _) = ctx.reduce_to_geodesic(&word);
                    assert_eq!(out.len(), dout.len(), "m={m} {word:?}");
                    assert_eq!(out.len(), ball[&o.nf(&word)], "m={m} {word:?}");
                    assert!(o.equal(&out, &word), "m={m} {word:?}");
                }
            }
        }
    }

    #[test]
    fn identity_words_reduce_to_nothing() {
        for p in [tri333(), tri345()] {
            for seed in 0..25u64 {
                let k = 1 + (seed as usize % 3);
                let c = seed as usize % 4;
                let word = gen_identity_word(&p, seed, k, c);
                let (out, tr) = reduce_to_geodesic(&p, &word).unwrap();
                verify(&tr).unwrap();
                assert_eq!(out, Word::new(), "seed {seed}: {word:?} -> {out:?}");
            }
        }
    }

    #[test]
    fn shortlex_prefers_the_smaller_spelling() {
        let p = Presentation::dihedral(3);
        let (nf, tr) = shortlex_nf(&p, &w(&p, "tst")).unwrap();
        verify(&tr).unwrap();
        assert_eq!(nf, w(&p, "sts"));
        let (nf2, _) = shortlex_nf(&p, &nf).unwrap();
        assert_eq!(nf2, nf);
        assert_eq!(shortlex_nf(&p, &Word::new()).unwrap().0, Word::new());

        // Equal elements through identity padding land on one spelling.
        let p = tri333();
        for seed in 0..10u64 {
            let base = w(&p, "bacb");
            let pad = gen_identity_word(&p, seed, 1 + seed as usize % 2, 2);
            let padded = base.concat(&pad);
            let (n1, _) = shortlex_nf(&p, &base).unwrap();
            let (n2, _) = shortlex_nf(&p, &padded).unwrap();
            assert_eq!(n1, n2, "seed {seed}");
        }
    }

    #[test]
    fn shortlex_agrees_with_oracle_order_on_dihedral_words() {
        // The shortlex form must be the least geodesic spelling: check on
        // all short words against oracle-equal candidates of equal length.
        let m = 3u32;
        let p = Presentation::dihedral(m);
        let o = DihedralOracle::new(Gen(0), Gen(1), m);
        for len in 0..=5usize {
            for word in reduced_words(len) {
                let (nf, _) = shortlex_nf(&p, &word).unwrap();
                for cand in reduced_words(nf.len()) {
                    if o.equal(&cand, &word) {
                        assert!(
                            shortlex_cmp(&nf, &cand) != std::cmp::Ordering::Greater,
                            "{word:?}: {nf:?} > {cand:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn connecting_geodesics() {
        let p = Presentation::dihedral(3);
        let tr = connect_geodesics(&p, &w(&p, "sts"), &w(&p, "tst")).unwrap();
        verify(&tr).unwrap();
        assert_eq!(tr.start, w(&p, "sts"));
        assert_eq!(tr.end, w(&p, "tst"));
        assert_eq!(tr.moves.len(), 1);
        assert!(matches!(tr.moves[0], Move::T1 { .. }));

        let same = connect_geodesics(&p, &w(&p, "st"), &w(&p, "st")).unwrap();
        verify(&same).unwrap();

        assert!(matches!(
            connect_geodesics(&p, &w(&p, "st"), &w(&p, "ts")),
            Err(LargeTypeError::NormalFormMismatch { .. })
        ));

        // Oracle-certified equal pairs connect.
        let o = DihedralOracle::new(Gen(0), Gen(1), 3);
        let pairs = [("stS", "Tst"), ("sT", "sT"), ("stsT", "ts")];
        for (a, b) in pairs {
            let wa = w(&p, a);
            let wb = w(&p, b);
            if wa.len() != wb.len() {
                continue;
            }
            assert!(o.equal(&wa, &wb), "{a} {b}");
            let tr = connect_geodesics(&p, &wa, &wb).unwrap();
            verify(&tr).unwrap();
            assert_eq!(tr.end, wb);
        }
    }

    #[test]
    fn coset_descent_on_a_dihedral_parabolic() {
        let p = Presentation::dihedral(3);
        let o = DihedralOracle::new(Gen(0), Gen(1), 3);
        let t_only = GenMask::single(Gen(1));

        let td = min_coset_rep(&p, &w(&p, "st"), t_only, 3).unwrap();
        verify(&td.trace).unwrap();
        assert_eq!(td.v, w(&p, "s"));
        assert_eq!(td.u, w(&p, "t"));
        assert_eq!(td.trace.end, td.v.concat(&td.u));

        // Empty parabolic: nothing to absorb.
        let td = min_coset_rep(&p, &w(&p, "stsT"), GenMask::EMPTY, 3).unwrap();
        assert_eq!(td.u, Word::new());
        assert_eq!(td.v.len(), 2);

        // Word inside the parabolic: everything absorbs.
        let full: GenMask = [Gen(0), Gen(1)].into_iter().collect();
        let td = min_coset_rep(&p, &w(&p, "sTs"), full, 3).unwrap();
        verify(&td.trace).unwrap();
        assert_eq!(td.v, Word::new());
        assert_eq!(td.u.len(), 3);
        assert!(o.equal(&td.u, &w(&p, "sTs")));

        // Brute-force check of coset minimality over several starts: walk
        // the coset g<t> and take the shortest element length.
        for s in ["st", "ts", "sts", "stT", "sTsT", "tssT"] {
            let word = w(&p, s);
            let td = min_coset_rep(&p, &word, t_only, 3).unwrap();
            verify(&td.trace).unwrap();
            assert!(o.equal(&td.v.concat(&td.u), &word), "{s}");
            assert!(td.u.support().is_subset(t_only), "{s}");
            let ball = o.distance_ball(8);
            let mut best = usize::MAX;
            for k in -4i32..=4 {
                let mut cand = word.clone();
                for _ in 0..k.unsigned_abs() {
                    let l = if k > 0 { Letter::pos(Gen(1)) } else { Letter::neg(Gen(1)) };
                    cand.push(l);
                }
                if let Some(d) = ball.get(&o.nf(&cand)) {
                    best = best.min(*d);
                }
            }
            assert_eq!(td.v.len(), best, "{s}: v={:?}", td.v);
        }
    }

    #[test]
    fn coset_descent_uniqueness_across_representatives() {
        let p = tri333();
        let sub: GenMask = [Gen(1), Gen(2)].into_iter().collect();
        let base = w(&p, "abC");
        for seed in 0..8u64 {
            let pad = gen_identity_word(&p, seed, 1, 2);
            let alt = base.concat(&pad);
            let td1 = min_coset_rep(&p, &base, sub, 3).unwrap();
            let td2 = min_coset_rep(&p, &alt, sub, 3).unwrap();
            verify(&td2.trace).unwrap();
            // v is canonical, so representatives agree letter for letter.
            assert_eq!(td1.v, td2.v, "seed {seed}");
        }
    }

    #[test]
    fn alphabet_constrained_decomposition() {
        let p = tri333();
        let ab: GenMask = [Gen(0), Gen(1)].into_iter().collect();
        let bc: GenMask = [Gen(1), Gen(2)].into_iter().collect();

        // An element of the ab-parabolic splits with u over the shared b.
        let td = coset_decompose_within(&p, &w(&p, "ab"), bc, ab, 3).unwrap();
        verify(&td.trace).unwrap();
        assert!(td.v.support().is_subset(ab));
        assert!(td.u.support().is_subset(GenMask::single(Gen(1))));
        assert_eq!(td.v.concat(&td.u), td.trace.end);

        // A word whose geodesic needs c is rejected for ambient ab.
        assert!(matches!(
            coset_decompose_within(&p, &w(&p, "c"), bc, ab, 3),
            Err(LargeTypeError::AlphabetEscape)
        ));

        // Empty ambient alphabet accepts only the identity.
        let td = coset_decompose_within(&p, &w(&p, "aA"), bc, GenMask::EMPTY, 3).unwrap();
        assert_eq!(td.v, Word::new());
        assert_eq!(td.u, Word::new());
    }
}
