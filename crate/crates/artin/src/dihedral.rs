//! The two-generator rewriting engine. Everything here works inside one
//! dihedral parabolic: run statistics, the star-move calculus on run-bounded
//! words, conversion to normal positive pairs, critical words with their
//! flip involution, and reduction to geodesic spellings with a full trace.

use thiserror::Error;

use crate::presentation::Presentation;
use crate::trace::{apply_move, Move, Trace, TraceBuilder, Two};
use crate::word::{alt_from, alt_to, Gen, Letter, Word};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum DihedralError {
    #[error("word is not freely reduced")]
    NotFreelyReduced,
    #[error("word leaves the star-move domain (a run reaches the label)")]
    OutsideStarDomain,
    #[error("empty word has no factor decomposition")]
    EmptyWord,
    #[error("word is not critical")]
    NotCritical,
    #[error("words name different group elements")]
    ElementsDiffer,
}

/// One two-generator parabolic with a finite label. `x` is the canonical
/// first generator; spellings produced here start from it where a choice
/// exists.
#[derive(Clone, Copy, Debug)]
pub struct DihedralContext {
    pub x: Gen,
    pub y: Gen,
    pub m: u32,
}

/// Decomposition of a run-bounded word into its maximal signed square-free
/// factors, in order. Concatenating the factors restores the word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarDecomposition {
    pub factors: Vec<Word>,
}

impl StarDecomposition {
    /// Number of factor pairs (i, j) with i < j where factor i is negative
    /// and factor j is positive. Zero exactly when the word is a positive
    /// block followed by a negative block.
    pub fn inversions(&self) -> usize {
        let mut neg_seen = 0usize;
        let mut count = 0usize;
        for f in &self.factors {
            if f[0].is_pos() {
                count += neg_seen;
            } else {
                neg_seen += 1;
            }
        }
        count
    }

    fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.factors.len());
        let mut at = 0;
        for f in &self.factors {
            out.push(at);
            at += f.len();
        }
        out
    }
}

/// Result of eliminating all inversions: `trace` carries `start` to
/// `w1 w2^-1` by star moves alone, and the pair (w1, w2) is the normal
/// decomposition of the element.
#[derive(Clone, Debug)]
pub struct NormalPair {
    pub w1: Word,
    pub w2: Word,
    pub trace: Trace,
}

/// Shape of a critical word: either mixed-sign with head and tail runs
/// meeting the label exactly, or single-sign containing one full-length run
/// at an end.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Critical {
    /// Mixed signs, head run + tail run = m. `neg_head` tells which end
    /// carries the inverted run.
    Unsigned { p: usize, q: usize, neg_head: bool },
    /// Single sign with a maximal run of length exactly m at the head, the
    /// tail, or both.
    Signed { positive: bool, head: bool, tail: bool },
}

impl DihedralContext {
    pub fn new(x: Gen, y: Gen, m: u32) -> DihedralContext {
        assert!(m >= 2, "dihedral context needs a finite label of at least 2");
        assert_ne!(x, y);
        DihedralContext { x, y, m }
    }

    /// Context for an active pair with a finite label, anchored at the
    /// lower-indexed generator.
    pub fn for_pair(p: &Presentation, a: Gen, b: Gen) -> Option<DihedralContext> {
        let m = p.label(a, b).finite()?;
        let (x, y) = if a.idx() < b.idx() { (a, b) } else { (b, a) };
        Some(DihedralContext::new(x, y, m))
    }

    fn mi(self) -> usize {
        self.m as usize
    }

    pub fn other(self, g: Gen) -> Gen {
        if g == self.x {
            self.y
        } else {
            self.x
        }
    }

    /// The positive alternating word of full length m starting at x.
    pub fn half_twist_word(self) -> Word {
        alt_from(self.x, self.y, self.mi())
    }

    /// Conjugation by the half twist on generators: swaps the pair exactly
    /// when m is odd.
    pub fn twist_gen(self, g: Gen) -> Gen {
        if self.m % 2 == 1 {
            self.other(g)
        } else {
            g
        }
    }

    pub fn twist_word(self, w: &Word) -> Word {
        w.iter()
            .map(|l| Letter { gen: self.twist_gen(l.gen), sign: l.sign })
            .collect()
    }

    pub fn supports(self, w: &Word) -> bool {
        w.iter().all(|l| l.gen == self.x || l.gen == self.y)
    }

    /// Maximal positive square-free run length, capped at m.
    pub fn pos_run(self, w: &Word) -> usize {
        w.max_pos_run().min(self.mi())
    }

    /// Maximal negative square-free run length, capped at m.
    pub fn neg_run(self, w: &Word) -> usize {
        w.max_neg_run().min(self.mi())
    }

    /// The domain of the star-move calculus: freely reduced words whose runs
    /// all fall short of the label.
    pub fn in_star_domain(self, w: &Word) -> bool {
        debug_assert!(self.supports(w));
        w.is_freely_reduced() && self.pos_run(w).max(self.neg_run(w)) < self.mi()
    }

    /// Greedy split into maximal signed square-free factors.
    pub fn star_decomposition(self, w: &Word) -> Result<StarDecomposition, DihedralError> {
        if w.is_empty() {
            return Err(DihedralError::EmptyWord);
        }
        if !self.in_star_domain(w) {
            return Err(DihedralError::OutsideStarDomain);
        }
        let mut factors = Vec::new();
        let mut cur = vec![w[0]];
        for &l in &w[1..] {
            let prev = *cur.last().unwrap();
            if l.sign == prev.sign && l.gen != prev.gen {
                cur.push(l);
            } else {
                factors.push(Word(std::mem::take(&mut cur)));
                cur.push(l);
            }
        }
        factors.push(Word(cur));
        Ok(StarDecomposition { factors })
    }

    /// Every star move available on `w`, with its result. Each one replaces
    /// an adjacent factor pair of the star-decomposition and stays in the
    /// domain.
    pub fn star_moves(self, w: &Word) -> Vec<(Move, Word)> {
        debug_assert!(self.in_star_domain(w));
        let m = self.mi();
        let mut out = Vec::new();
        for pos in 0..w.len() {
            for pair in [(self.x, self.y), (self.y, self.x)] {
                for l1 in 0..=m {
                    for l3 in 0..=m {
                        let splits = [l1, m - l1, l3, m - l3];
                        for mv in [
                            Move::T2R(Two { pos, pair, m: self.m, splits, star: true }),
                            Move::T2L(Two { pos, pair, m: self.m, splits, star: true }),
                        ] {
                            if let Ok(res) = apply_move(w, &mv) {
                                out.push((mv, res));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    // The unique star move sitting at the junction in front of factor i+1,
    // where factor i is negative and factor i+1 positive. Both blocks are
    // consumed whole; anything less would leave an extendable end.
    fn junction_move(self, sd: &StarDecomposition, i: usize) -> Move {
        let offsets = sd.offsets();
        let o = offsets[i + 1];
        let l3 = sd.factors[i].len();
        let l1 = sd.factors[i + 1].len();
        let a = sd.factors[i + 1][0].gen;
        let b = self.other(a);
        let m = self.mi();
        Move::T2R(Two {
            pos: o - l3,
            pair: (a, b),
            m: self.m,
            splits: [l1, m - l1, l3, m - l3],
            star: true,
        })
    }

    /// Eliminate every inversion by star moves at the leftmost
    /// negative-positive junction, ending at a positive block followed by a
    /// negative block. The returned pair is the normal decomposition of the
    /// element, with the trace connecting `w` to `w1 w2^-1`.
    pub fn to_normal_pair(self, w: &Word) -> Result<NormalPair, DihedralError> {
        if !self.in_star_domain(w) {
            return Err(DihedralError::OutsideStarDomain);
        }
        let mut builder = TraceBuilder::new(w.clone());
        loop {
            let cur = builder.current().clone();
            if cur.is_empty() {
                break;
            }
            let sd = self.star_decomposition(&cur)?;
            let junction = (0..sd.factors.len().saturating_sub(1))
                .find(|&i| !sd.factors[i][0].is_pos() && sd.factors[i + 1][0].is_pos());
            match junction {
                Some(i) => builder.push(self.junction_move(&sd, i)),
                None => break,
            }
        }
        let end = builder.current().clone();
        let split = end.iter().position(|l| !l.is_pos()).unwrap_or(end.len());
        debug_assert!(end[split..].iter().all(|l| !l.is_pos()));
        let w1 = Word::from(&end[..split]);
        let w2 = Word::from(&end[split..]).inverse();
        Ok(NormalPair { w1, w2, trace: builder.finish() })
    }

    /// A pure star-move trace from `w` to `v`, built by normalizing both and
    /// running v's half backwards. Fails when the two words do not name the
    /// same element.
    pub fn connect(self, w: &Word, v: &Word) -> Result<Trace, DihedralError> {
        let a = self.to_normal_pair(w)?;
        let b = self.to_normal_pair(v)?;
        if a.trace.end != b.trace.end {
            return Err(DihedralError::ElementsDiffer);
        }
        // Junction moves always carry four nonempty relation parts inside
        // the domain, so each reverses cleanly.
        let back = b.trace.reversed().expect("junction moves reverse");
        Ok(a.trace.then(&back))
    }

    /// Geodesic test for freely reduced two-generator words: the two run
    /// statistics together must not exceed the label.
    pub fn is_geodesic(self, w: &Word) -> Result<bool, DihedralError> {
        if !w.is_freely_reduced() {
            return Err(DihedralError::NotFreelyReduced);
        }
        Ok(self.pos_run(w) + self.neg_run(w) <= self.mi())
    }

    // True when the len letters starting at `at` are alternating with the
    // given sign.
    fn run_at(self, w: &Word, at: usize, len: usize, positive: bool) -> bool {
        if at + len > w.len() {
            return false;
        }
        let seg = &w[at..at + len];
        seg.iter().all(|l| l.is_pos() == positive)
            && seg.windows(2).all(|p| p[0].gen != p[1].gen)
    }

    /// Classify `w` as a critical word, if it is one.
    pub fn critical(self, w: &Word) -> Option<Critical> {
        debug_assert!(self.supports(w));
        if !w.is_freely_reduced() || w.is_empty() {
            return None;
        }
        let m = self.mi();
        let k = w.len();
        let has_pos = w.iter().any(|l| l.is_pos());
        let has_neg = w.iter().any(|l| !l.is_pos());
        if has_pos && has_neg {
            let p = self.pos_run(w);
            let q = self.neg_run(w);
            if p + q != m {
                return None;
            }
            // The head and tail runs must realize p and q themselves.
            if w[0].is_pos() {
                (self.run_at(w, 0, p, true) && self.run_at(w, k - q, q, false))
                    .then_some(Critical::Unsigned { p, q, neg_head: false })
            } else {
                (self.run_at(w, 0, q, false) && self.run_at(w, k - p, p, true))
                    .then_some(Critical::Unsigned { p, q, neg_head: true })
            }
        } else {
            let positive = has_pos;
            // A single full-length run, sitting flush at an end, with the
            // remainder staying strictly shorter.
            let run = if positive { w.max_pos_run() } else { w.max_neg_run() };
            if run != m || k < m {
                return None;
            }
            let head = self.run_at(w, 0, m, positive)
                && Word::from(&w[m..]).max_pos_run().max(Word::from(&w[m..]).max_neg_run()) < m;
            let rest = Word::from(&w[..k - m]);
            let tail = self.run_at(w, k - m, m, positive)
                && rest.max_pos_run().max(rest.max_neg_run()) < m;
            (head || tail).then_some(Critical::Signed { positive, head, tail })
        }
    }

    /// The flip involution on critical words: the equal-length spelling of
    /// the same element with head and tail runs exchanged.
    pub fn flip(self, w: &Word) -> Result<Word, DihedralError> {
        let kind = self.critical(w).ok_or(DihedralError::NotCritical)?;
        let k = w.len();
        Ok(match kind {
            Critical::Unsigned { p, q, neg_head: false } => {
                // pos head of length p, neg tail of length q
                let a0 = w[0].gen;
                let al = w[k - 1].gen;
                let mid = self.twist_word(&Word::from(&w[p..k - q]));
                alt_to(a0, self.other(a0), q)
                    .inverse()
                    .concat(&mid)
                    .concat(&alt_to(al, self.other(al), p))
            }
            Critical::Unsigned { p, q, neg_head: true } => {
                let b0 = w[0].gen;
                let bl = w[k - 1].gen;
                let mid = self.twist_word(&Word::from(&w[q..k - p]));
                alt_from(self.other(b0), b0, p)
                    .concat(&mid)
                    .concat(&alt_from(self.other(bl), bl, q).inverse())
            }
            Critical::Signed { positive: true, head, .. } => self.flip_signed_positive(w, head),
            Critical::Signed { positive: false, head, .. } => {
                // Mirror through inversion: the inverse is positive critical
                // with head and tail exchanged.
                let flipped = self.flip_signed_positive(&w.inverse(), !head);
                flipped.inverse()
            }
        })
    }

    // Flip a positive critical word by carrying its full run to the other
    // end, twisting the remainder, and respelling the run so the outermost
    // letter changes.
    fn flip_signed_positive(self, w: &Word, head: bool) -> Word {
        let m = self.mi();
        let k = w.len();
        if head {
            let rest = self.twist_word(&Word::from(&w[m..]));
            // New tail run: the spelling whose last letter differs from w's.
            let last = w[k - 1].gen;
            let run = alt_to(last, self.other(last), m);
            debug_assert_ne!(run[m - 1].gen, last);
            rest.concat(&run)
        } else {
            let rest = self.twist_word(&Word::from(&w[..k - m]));
            // New head run: the spelling whose first letter differs.
            let first = w[0].gen;
            let run = alt_from(self.other(first), first, m);
            debug_assert_ne!(run[0].gen, first);
            run.concat(&rest)
        }
    }

    /// A verifying trace from a critical word to its flip. Mixed-sign
    /// critical words connect by star moves; single-sign ones by a chain of
    /// single relation applications that walk the full run across the word.
    pub fn flip_trace(self, w: &Word) -> Result<Trace, DihedralError> {
        let kind = self.critical(w).ok_or(DihedralError::NotCritical)?;
        match kind {
            Critical::Unsigned { .. } => {
                let target = self.flip(w)?;
                self.connect(w, &target)
            }
            Critical::Signed { positive: true, head, .. } => {
                Ok(self.shift_trace_positive(w, head))
            }
            Critical::Signed { positive: false, head, .. } => {
                // Build on the positive mirror and reflect each relation
                // application back onto the inverted word.
                let mirror = self.shift_trace_positive(&w.inverse(), !head);
                let k = w.len();
                let m = self.mi();
                let mut builder = TraceBuilder::new(w.clone());
                for mv in mirror.moves {
                    match mv {
                        Move::T1 { pos, pair, m: mm } => {
                            builder.push(Move::T1 { pos: k - m - pos, pair, m: mm });
                        }
                        _ => unreachable!("shift traces use single relation applications"),
                    }
                }
                let tr = builder.finish();
                debug_assert_eq!(tr.end, self.flip(w).unwrap());
                Ok(tr)
            }
        }
    }

    // Walk the full run across a positive critical word one letter at a
    // time. Each step applies the relation to the length-m window that
    // restores an alternating block, and one last flip fixes the outermost
    // letter when the spelling demands it.
    fn shift_trace_positive(self, w: &Word, head: bool) -> Trace {
        let m = self.mi();
        let k = w.len();
        let mut builder = TraceBuilder::new(w.clone());
        if head {
            for step in 0..k - m {
                let cur = builder.current().clone();
                let run_start = cur[step].gen;
                let next = cur[step + m].gen;
                let continuation = if m.is_multiple_of(2) { run_start } else { self.other(run_start) };
                let pos = if next == continuation { step + 1 } else { step };
                let pair = (cur[pos].gen, self.other(cur[pos].gen));
                builder.push(Move::T1 { pos, pair, m: self.m });
            }
            let target = self.flip_signed_positive(w, true);
            if *builder.current() != target {
                let cur = builder.current().clone();
                let g = cur[k - m].gen;
                builder.push(Move::T1 { pos: k - m, pair: (g, self.other(g)), m: self.m });
            }
            let tr = builder.finish();
            debug_assert_eq!(tr.end, self.flip_signed_positive(w, true));
            tr
        } else {
            for step in (0..k - m).rev() {
                let cur = builder.current().clone();
                let a = cur[step].gen;
                let run_start = cur[step + 1].gen;
                let (pos, lead) =
                    if a == self.other(run_start) { (step, a) } else { (step + 1, run_start) };
                builder.push(Move::T1 { pos, pair: (lead, self.other(lead)), m: self.m });
            }
            let target = self.flip_signed_positive(w, false);
            if *builder.current() != target {
                let cur = builder.current().clone();
                let g = cur[0].gen;
                builder.push(Move::T1 { pos: 0, pair: (g, self.other(g)), m: self.m });
            }
            let tr = builder.finish();
            debug_assert_eq!(tr.end, self.flip_signed_positive(w, false));
            tr
        }
    }

    /// Shorten `w` to a geodesic spelling of the same element. Every step is
    /// recorded: free cancellations, and critical-factor flips that expose
    /// the next cancellation.
    pub fn reduce_to_geodesic(self, w: &Word) -> (Word, Trace) {
        debug_assert!(self.supports(w));
        let mut builder = TraceBuilder::new(w.clone());
        loop {
            builder.free_reduce();
            let cur = builder.current().clone();
            if self.is_geodesic(&cur).expect("freely reduced after reduction") {
                break;
            }
            let (at, factor) = self
                .cancelling_critical_factor(&cur)
                .expect("non-geodesic words contain a critical factor that unlocks a cancellation");
            let tr = self.flip_trace(&factor).expect("factor was classified critical");
            builder
                .splice(at, &tr)
                .expect("flip trace starts at the chosen factor");
        }
        let end = builder.current().clone();
        (end, builder.finish())
    }

    // First factor (leftmost start, then shortest) whose flip cancels
    // against a neighbouring letter.
    fn cancelling_critical_factor(self, w: &Word) -> Option<(usize, Word)> {
        let k = w.len();
        for i in 0..k {
            for j in i + 1..=k {
                let factor = Word::from(&w[i..j]);
                if self.critical(&factor).is_none() {
                    continue;
                }
                let flipped = self.flip(&factor).expect("just classified");
                let left_cancel = i > 0 && flipped[0] == w[i - 1].inverse();
                let right_cancel = j < k && flipped[flipped.len() - 1] == w[j].inverse();
                if left_cancel || right_cancel {
                    return Some((i, factor));
                }
            }
        }
        None
    }
}
