//! Solver for presentations that mix commuting generators, infinite labels,
//! and large-type blocks. The presentation is decomposed recursively: every
//! infinite label splits the group into two overlapping parabolics glued
//! along their intersection, and once no infinite label remains the
//! generators fall apart into commuting components, each an abelian block or
//! a large-type block. Words are solved by walking the tree, pinching
//! amalgam factors into the shared parabolic, and shuffling commuting
//! letters, with every step recorded as an ordinary trace move.

use thiserror::Error;

use crate::largetype::{self, LargeTypeError};
use crate::presentation::{Classification, Label, Presentation};
use crate::trace::{move_star_ok, apply_move, Move, SpliceError, Trace, TraceBuilder, Two};
use crate::word::{Gen, GenMask, Letter, Word};

#[derive(Error, Debug, PartialEq, Eq)]
pub enum AmalgamError {
    #[error("presentation is out of scope for this solver")]
    OutOfScope,
    #[error("letters at {i} do not commute")]
    NotCommuting { i: usize },
    #[error("letter {letter:?} is outside both alphabets")]
    StrayLetter { letter: Letter },
    #[error("projection target straddles an amalgamation edge")]
    UnsupportedProjection,
    #[error(transparent)]
    LargeType(#[from] LargeTypeError),
    #[error("trace splice failed: {0}")]
    Splice(#[from] SpliceError),
}

/// How a presentation breaks into solvable pieces. Amalgam nodes record the
/// two endpoints of the infinite-labelled edge that was cut; product nodes
/// hold pairwise commuting parts; leaves are alphabets whose parabolic is
/// free abelian or of large type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecompositionTree {
    Amalgam {
        edge: (Gen, Gen),
        left: Box<DecompositionTree>,
        right: Box<DecompositionTree>,
        shared: Box<DecompositionTree>,
    },
    Product { parts: Vec<DecompositionTree> },
    LeafAbelian { gens: GenMask },
    LeafLarge { gens: GenMask },
}

impl DecompositionTree {
    pub fn alphabet(&self) -> GenMask {
        match self {
            DecompositionTree::Amalgam { left, right, .. } => {
                left.alphabet().union(right.alphabet())
            }
            DecompositionTree::Product { parts } => parts
                .iter()
                .fold(GenMask::EMPTY, |m, t| m.union(t.alphabet())),
            DecompositionTree::LeafAbelian { gens } | DecompositionTree::LeafLarge { gens } => {
                *gens
            }
        }
    }
}

/// Build the decomposition tree: cut infinite edges first, then split into
/// commuting components. Single generators are pooled into one abelian leaf
/// since they commute with everything left over.
pub fn decompose(p: &Presentation) -> Result<DecompositionTree, AmalgamError> {
    if matches!(p.classify(), Classification::OutOfScope { .. }) {
        return Err(AmalgamError::OutOfScope);
    }
    Ok(decompose_mask(p, p.gens()))
}

fn decompose_mask(p: &Presentation, mask: GenMask) -> DecompositionTree {
    let sub = p.parabolic(mask);
    if let Some(split) = sub.split_on_infinity() {
        return DecompositionTree::Amalgam {
            edge: (split.s1, split.s2),
            left: Box::new(decompose_mask(p, split.left)),
            right: Box::new(decompose_mask(p, split.right)),
            shared: Box::new(decompose_mask(p, split.shared)),
        };
    }
    let comps = sub.coxeter_components().expect("no infinite labels remain");
    let mut parts = Vec::new();
    let mut singles = GenMask::EMPTY;
    for comp in comps {
        if comp.count() >= 2 {
            parts.push(DecompositionTree::LeafLarge { gens: comp });
        } else {
            singles = singles.union(comp);
        }
    }
    if !singles.is_empty() || parts.is_empty() {
        parts.push(DecompositionTree::LeafAbelian { gens: singles });
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        DecompositionTree::Product { parts }
    }
}

/// Swap the commuting letters at `i`, `i+1`. Equal signs ride the two-letter
/// relation directly; opposite signs carry one letter across it as a split,
/// so the move kind stays within the 0/1/2 alphabet either way.
pub fn shuffle_commuting(
    p: &Presentation,
    w: &Word,
    i: usize,
) -> Result<(Word, Move), AmalgamError> {
    if i + 2 > w.len() {
        return Err(AmalgamError::NotCommuting { i });
    }
    let (l1, l2) = (w[i], w[i + 1]);
    let (g, h) = (l1.gen, l2.gen);
    if g == h || p.label(g, h) != Label::Finite(2) {
        return Err(AmalgamError::NotCommuting { i });
    }
    let mv = match (l1.is_pos(), l2.is_pos()) {
        (true, true) => Move::T1 { pos: i, pair: (g, h), m: 2 },
        (false, false) => Move::T1 { pos: i, pair: (h, g), m: 2 },
        // G h: read as v1^-1 u1 for the relation hg = gh.
        (false, true) => Move::T2R(Two {
            pos: i,
            pair: (h, g),
            m: 2,
            splits: [1, 1, 1, 1],
            star: false,
        }),
        // g H: read as v2 u2^-1 for the relation gh = hg.
        (true, false) => Move::T2L(Two {
            pos: i,
            pair: (g, h),
            m: 2,
            splits: [1, 1, 1, 1],
            star: false,
        }),
    };
    let mv = match move_star_ok(w, &mv).expect("well-formed split") {
        Some(star) => mv.with_star(star),
        None => mv,
    };
    let out = apply_move(w, &mv).expect("commuting swap is legal");
    Ok((out, mv))
}

// Bubble the word into ascending key order, interleaving free reduction.
// Only letters with distinct keys are swapped, so equal-key runs keep their
// order and every swap crosses a label-2 pair.
fn sort_by_key_into(
    p: &Presentation,
    b: &mut TraceBuilder,
    key: &dyn Fn(Gen) -> usize,
) -> Result<(), AmalgamError> {
    loop {
        b.free_reduce();
        let cur = b.current();
        let Some(i) =
            (0..cur.len().saturating_sub(1)).find(|&i| key(cur[i].gen) > key(cur[i + 1].gen))
        else {
            return Ok(());
        };
        let (_, mv) = shuffle_commuting(p, cur, i)?;
        b.try_push(mv).expect("shuffle move applies");
    }
}

/// Canonical form in a free abelian parabolic: letters sorted by generator,
/// inverse pairs cancelled, so the output spells the exponent vector.
/// Requires every label among the support of `w` to be 2.
pub fn reduce_abelian(p: &Presentation, w: &Word) -> (Word, Trace) {
    let mut b = TraceBuilder::new(w.clone());
    sort_by_key_into(p, &mut b, &|g| g.idx()).expect("abelian letters commute");
    (b.current().clone(), b.finish())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Shared,
}

/// Cut `w` into the fewest factors that each fit one of the two alphabets.
/// Letters in the intersection attach to the factor being built, which is
/// what makes the count minimal; a wholly shared word is a single factor.
pub fn factorize_by_alphabet(
    w: &Word,
    s1: GenMask,
    s2: GenMask,
) -> Result<Vec<(Word, Side)>, AmalgamError> {
    let both = s1.intersect(s2);
    let mut out: Vec<(Word, Side)> = Vec::new();
    let mut cur = Word::new();
    let mut side = Side::Shared;
    for &l in w.iter() {
        let ls = if both.contains(l.gen) {
            Side::Shared
        } else if s1.contains(l.gen) {
            Side::Left
        } else if s2.contains(l.gen) {
            Side::Right
        } else {
            return Err(AmalgamError::StrayLetter { letter: l });
        };
        match (side, ls) {
            (_, Side::Shared) | (Side::Shared, _) => {
                if side == Side::Shared {
                    side = ls;
                }
                cur.push(l);
            }
            (a, b) if a == b => cur.push(l),
            _ => {
                out.push((std::mem::take(&mut cur), side));
                side = ls;
                cur.push(l);
            }
        }
    }
    if !cur.is_empty() {
        out.push((cur, side));
    }
    Ok(out)
}

/// Outcome of projecting a word onto the parabolic of a generator subset.
#[derive(Clone, Debug)]
pub enum Projection {
    Inside { word: Word, trace: Trace },
    NotInParabolic,
}

/// Whether the element of `w` lies in the parabolic on `target`, and if so
/// a respelling over `target` reached by 0/1/2 moves. Leaves answer by
/// normal forms (geodesics stay inside the parabolic of their element;
/// exponent vectors decide the abelian case); amalgams pinch factors into
/// the shared parabolic first; products project componentwise.
pub fn project_to_parabolic(
    p: &Presentation,
    node: &DecompositionTree,
    w: &Word,
    target: GenMask,
) -> Result<Projection, AmalgamError> {
    debug_assert!(w.support().is_subset(node.alphabet()));
    let mut b = TraceBuilder::new(w.clone());
    if project_into(p, node, &mut b, target)? {
        Ok(Projection::Inside { word: b.current().clone(), trace: b.finish() })
    } else {
        Ok(Projection::NotInParabolic)
    }
}

fn project_into(
    p: &Presentation,
    node: &DecompositionTree,
    b: &mut TraceBuilder,
    target: GenMask,
) -> Result<bool, AmalgamError> {
    match node {
        DecompositionTree::LeafLarge { gens } => {
            let sub = p.parabolic(*gens);
            let (g, tr) = largetype::reduce_to_geodesic(&sub, b.current())?;
            b.splice(0, &tr)?;
            Ok(g.support().is_subset(target))
        }
        DecompositionTree::LeafAbelian { .. } => {
            let (g, tr) = reduce_abelian(p, b.current());
            b.splice(0, &tr)?;
            Ok(g.support().is_subset(target))
        }
        DecompositionTree::Product { parts } => {
            sort_into_parts(p, parts, b)?;
            let mut offset = 0;
            for part in parts {
                let alphabet = part.alphabet();
                let cur = b.current();
                let len = cur[offset..]
                    .iter()
                    .take_while(|l| alphabet.contains(l.gen))
                    .count();
                let block = Word::from(&cur[offset..offset + len]);
                let mut sub_b = TraceBuilder::new(block);
                if !project_into(p, part, &mut sub_b, target)? {
                    return Ok(false);
                }
                let projected = sub_b.current().len();
                b.splice(offset, &sub_b.finish())?;
                offset += projected;
            }
            Ok(true)
        }
        DecompositionTree::Amalgam { left, right, shared, .. } => {
            match pinch(p, left, right, shared, b)? {
                Pinch::Collapsed(side) => {
                    let sub = match side {
                        Side::Right => right,
                        Side::Left | Side::Shared => left,
                    };
                    project_into(p, sub, b, target.intersect(sub.alphabet()))
                }
                Pinch::Stuck(_) => {
                    let (lm, rm) = (left.alphabet(), right.alphabet());
                    if target.is_subset(lm) || target.is_subset(rm) {
                        Ok(false)
                    } else {
                        Err(AmalgamError::UnsupportedProjection)
                    }
                }
            }
        }
    }
}

// Sort the builder word so letters group by part, in part order. Distinct
// parts always commute, so only shuffles and cancellations are emitted.
fn sort_into_parts(
    p: &Presentation,
    parts: &[DecompositionTree],
    b: &mut TraceBuilder,
) -> Result<(), AmalgamError> {
    let masks: Vec<GenMask> = parts.iter().map(|t| t.alphabet()).collect();
    let key = move |g: Gen| {
        masks
            .iter()
            .position(|m| m.contains(g))
            .expect("node covers the word")
    };
    sort_by_key_into(p, b, &key)
}

enum Pinch {
    // The word now sits inside one factor (Shared means either will do).
    Collapsed(Side),
    // Two or more factors, none of which projects into the shared
    // parabolic: the alternating product cannot be trivial.
    Stuck(Vec<Word>),
}

// Repeatedly rewrite some factor that secretly lies in the shared parabolic
// into a spelling over it, merging its neighbours, until one factor remains
// or no factor projects. Factor count strictly drops per round.
fn pinch(
    p: &Presentation,
    left: &DecompositionTree,
    right: &DecompositionTree,
    shared: &DecompositionTree,
    b: &mut TraceBuilder,
) -> Result<Pinch, AmalgamError> {
    let (lm, rm) = (left.alphabet(), right.alphabet());
    let sm = shared.alphabet();
    loop {
        b.free_reduce();
        let factors = factorize_by_alphabet(b.current(), lm, rm)?;
        if factors.len() <= 1 {
            let side = factors.first().map_or(Side::Shared, |&(_, s)| s);
            return Ok(Pinch::Collapsed(side));
        }
        let mut offset = 0;
        let mut progressed = false;
        for (fw, side) in &factors {
            let sub = match side {
                Side::Right => right,
                Side::Left | Side::Shared => left,
            };
            match project_to_parabolic(p, sub, fw, sm)? {
                Projection::Inside { trace, .. } => {
                    b.splice(offset, &trace)?;
                    progressed = true;
                    break;
                }
                Projection::NotInParabolic => offset += fw.len(),
            }
        }
        if !progressed {
            return Ok(Pinch::Stuck(factors.into_iter().map(|(f, _)| f).collect()));
        }
    }
}

/// Why a word is not the identity: a checkable certificate rather than a
/// bare verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Obstruction {
    /// Abelian block with a nonzero exponent vector, spelled sorted.
    NonzeroExponents { word: Word },
    /// Large-type block whose geodesic form is nonempty.
    NonemptyGeodesic { word: Word },
    /// An alternating factor sequence across an amalgamation, length at
    /// least two, in which no factor lies in the shared parabolic.
    FactorAlternation { factors: Vec<Word> },
    /// A direct-product component carrying its own obstruction.
    Component { gens: GenMask, inner: Box<Obstruction> },
}

/// Verdict of the word problem against the identity.
#[derive(Debug)]
pub enum Solution {
    EqualOne(Trace),
    NotEqualOne(Obstruction),
}

/// Decide whether `w` is the identity, walking a prebuilt decomposition
/// tree. EqualOne carries a full 0/1/2 derivation to the empty word.
pub fn reduce_identity(
    p: &Presentation,
    tree: &DecompositionTree,
    w: &Word,
) -> Result<Solution, AmalgamError> {
    let mut b = TraceBuilder::new(w.clone());
    match solve_into(p, tree, &mut b)? {
        None => {
            debug_assert!(b.current().is_empty());
            Ok(Solution::EqualOne(b.finish()))
        }
        Some(ob) => Ok(Solution::NotEqualOne(ob)),
    }
}

/// One-call word problem: decompose the presentation and test `w`.
pub fn solve_word_problem(p: &Presentation, w: &Word) -> Result<Solution, AmalgamError> {
    let tree = decompose(p)?;
    reduce_identity(p, &tree, w)
}

// Drive the builder word to empty or report why that is impossible.
fn solve_into(
    p: &Presentation,
    node: &DecompositionTree,
    b: &mut TraceBuilder,
) -> Result<Option<Obstruction>, AmalgamError> {
    match node {
        DecompositionTree::LeafLarge { gens } => {
            let sub = p.parabolic(*gens);
            let (g, tr) = largetype::reduce_to_geodesic(&sub, b.current())?;
            b.splice(0, &tr)?;
            if g.is_empty() {
                Ok(None)
            } else {
                Ok(Some(Obstruction::NonemptyGeodesic { word: g }))
            }
        }
        DecompositionTree::LeafAbelian { .. } => {
            let (g, tr) = reduce_abelian(p, b.current());
            b.splice(0, &tr)?;
            if g.is_empty() {
                Ok(None)
            } else {
                Ok(Some(Obstruction::NonzeroExponents { word: g }))
            }
        }
        DecompositionTree::Product { parts } => {
            sort_into_parts(p, parts, b)?;
            for part in parts {
                let alphabet = part.alphabet();
                let len = b
                    .current()
                    .iter()
                    .take_while(|l| alphabet.contains(l.gen))
                    .count();
                let block = Word::from(&b.current()[..len]);
                let mut sub_b = TraceBuilder::new(block);
                match solve_into(p, part, &mut sub_b)? {
                    Some(inner) => {
                        return Ok(Some(Obstruction::Component {
                            gens: alphabet,
                            inner: Box::new(inner),
                        }))
                    }
                    None => b.splice(0, &sub_b.finish())?,
                }
            }
            Ok(None)
        }
        DecompositionTree::Amalgam { left, right, shared, .. } => {
            match pinch(p, left, right, shared, b)? {
                Pinch::Collapsed(side) => {
                    let sub = match side {
                        Side::Right => right,
                        Side::Left | Side::Shared => left,
                    };
                    solve_into(p, sub, b)
                }
                Pinch::Stuck(factors) => Ok(Some(Obstruction::FactorAlternation { factors })),
            }
        }
    }
}
