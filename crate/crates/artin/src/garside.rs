//! Independent ground truth for two-generator parabolics, built on the
//! Garside structure of the dihedral Artin monoid: greedy normal forms,
//! equality, BFS geodesic distance, positive-pair normality, and a seeded
//! generator of identity words for end-to-end testing.
//!
//! Nothing in here shares code with the rewriting engine; that is the point.
//! The engine's outputs are checked against this module, never the other way
//! around.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::presentation::Presentation;
use crate::trace::{apply_move, Move};
use crate::word::{alt_from, Gen, Letter, Sign, Word};

/// A divisor of the half-twist: an alternating positive word of length
/// 0..=m, remembered as its length and first letter. The empty divisor and
/// the full twist get a canonical start letter so each divisor has exactly
/// one encoding.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Simple {
    len: usize,
    start: Gen,
}

/// Greedy normal form: an integer power of the half-twist followed by a
/// left-weighted sequence of proper divisors. Two words name the same group
/// element exactly when their forms are identical, which makes the form a
/// hashable element key.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GarsideNf {
    pub delta_pow: i64,
    tail: Vec<Simple>,
}

impl GarsideNf {
    pub fn is_identity(&self) -> bool {
        self.delta_pow == 0 && self.tail.is_empty()
    }

    pub fn is_positive(&self) -> bool {
        self.delta_pow >= 0
    }
}

/// Equality and distance oracle for one two-generator presentation with a
/// finite label.
#[derive(Clone, Copy, Debug)]
pub struct DihedralOracle {
    pub x: Gen,
    pub y: Gen,
    pub m: u32,
}

impl DihedralOracle {
    pub fn new(x: Gen, y: Gen, m: u32) -> DihedralOracle {
        assert!(m >= 2, "oracle needs a finite label of at least 2");
        assert_ne!(x, y);
        DihedralOracle { x, y, m }
    }

    /// Oracle for an active pair of the presentation, if its label is
    /// finite. The lower-indexed generator anchors canonical spellings.
    pub fn for_pair(p: &Presentation, a: Gen, b: Gen) -> Option<DihedralOracle> {
        let m = p.label(a, b).finite()?;
        let (x, y) = if a.idx() < b.idx() { (a, b) } else { (b, a) };
        Some(DihedralOracle::new(x, y, m))
    }

    fn mi(self) -> usize {
        self.m as usize
    }

    fn other(self, g: Gen) -> Gen {
        if g == self.x {
            self.y
        } else {
            self.x
        }
    }

    // Letter at position i (0-based) of the alternating spelling starting g.
    fn alt_letter(self, start: Gen, i: usize) -> Gen {
        if i.is_multiple_of(2) {
            start
        } else {
            self.other(start)
        }
    }

    fn canon(self, s: Simple) -> Simple {
        if s.len == 0 || s.len == self.mi() {
            Simple { len: s.len, start: self.x }
        } else {
            s
        }
    }

    fn eps(self) -> Simple {
        Simple { len: 0, start: self.x }
    }

    fn delta(self) -> Simple {
        Simple { len: self.mi(), start: self.x }
    }

    fn simple_word(self, s: Simple) -> Word {
        alt_from(s.start, self.other(s.start), s.len)
    }

    // s' with s s' = delta.
    fn rcomp(self, s: Simple) -> Simple {
        self.canon(Simple {
            len: self.mi() - s.len,
            start: self.alt_letter(s.start, s.len),
        })
    }

    // The length m-1 divisor c with c g = delta.
    fn lcomp_letter(self, g: Gen) -> Simple {
        let start = if self.mi() % 2 == 1 { g } else { self.other(g) };
        self.canon(Simple { len: self.mi() - 1, start })
    }

    // Conjugation by delta: swaps the two generators exactly when m is odd.
    fn twist(self, s: Simple) -> Simple {
        if self.mi() % 2 == 1 && s.len > 0 && s.len < self.mi() {
            Simple { len: s.len, start: self.other(s.start) }
        } else {
            s
        }
    }

    // Proper divisors below delta split by start letter, so the left gcd
    // collapses to a handful of cases.
    fn lgcd(self, a: Simple, b: Simple) -> Simple {
        let m = self.mi();
        if a.len == 0 || b.len == 0 {
            return self.eps();
        }
        if a.len == m {
            return b;
        }
        if b.len == m {
            return a;
        }
        if a.start == b.start {
            Simple { len: a.len.min(b.len), start: a.start }
        } else {
            self.eps()
        }
    }

    // a extended by g on the right; g must continue a's alternation.
    fn extend(self, a: Simple, g: Simple) -> Simple {
        if g.len == 0 {
            return a;
        }
        if a.len == 0 {
            return g;
        }
        debug_assert!(a.len + g.len <= self.mi());
        debug_assert_eq!(g.start, self.alt_letter(a.start, a.len));
        self.canon(Simple { len: a.len + g.len, start: a.start })
    }

    // b with the prefix g removed. The full twist accepts either spelling,
    // so it anchors on g's start.
    fn strip(self, b: Simple, g: Simple) -> Simple {
        if g.len == 0 {
            return b;
        }
        debug_assert!(g.len <= b.len);
        let start = if b.len == self.mi() { g.start } else { b.start };
        debug_assert!(b.len == self.mi() || g.start == b.start);
        self.canon(Simple {
            len: b.len - g.len,
            start: self.alt_letter(start, g.len),
        })
    }

    // Restore the greedy condition: each factor absorbs as much of its right
    // neighbour as stays a divisor, whole twists migrate to the front and
    // join the power.
    fn normalize(self, nf: &mut GarsideNf) {
        loop {
            nf.tail.retain(|s| s.len > 0);
            let mut changed = false;
            for i in 1..nf.tail.len() {
                let g = self.lgcd(self.rcomp(nf.tail[i - 1]), nf.tail[i]);
                if g.len > 0 {
                    nf.tail[i - 1] = self.extend(nf.tail[i - 1], g);
                    nf.tail[i] = self.strip(nf.tail[i], g);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let whole = nf.tail.iter().take_while(|s| s.len == self.mi()).count();
        nf.delta_pow += whole as i64;
        nf.tail.drain(..whole);
    }

    fn mul_letter(self, nf: &mut GarsideNf, l: Letter) {
        debug_assert!(l.gen == self.x || l.gen == self.y);
        match l.sign {
            Sign::Pos => nf.tail.push(Simple { len: 1, start: l.gen }),
            Sign::Neg => {
                // g^-1 = delta^-1 lcomp(g), and the twist carries the power
                // past the tail.
                nf.delta_pow -= 1;
                for s in nf.tail.iter_mut() {
                    *s = self.twist(*s);
                }
                nf.tail.push(self.lcomp_letter(l.gen));
            }
        }
        self.normalize(nf);
    }

    pub fn identity_nf(self) -> GarsideNf {
        GarsideNf { delta_pow: 0, tail: Vec::new() }
    }

    pub fn nf(self, w: &Word) -> GarsideNf {
        let mut out = self.identity_nf();
        for &l in w.iter() {
            self.mul_letter(&mut out, l);
        }
        out
    }

    pub fn equal(self, a: &Word, b: &Word) -> bool {
        self.nf(a) == self.nf(b)
    }

    fn positive_word(self, nf: &GarsideNf) -> Word {
        debug_assert!(nf.is_positive());
        let mut w = Word::new();
        for _ in 0..nf.delta_pow {
            w = w.concat(&self.simple_word(self.delta()));
        }
        for &s in &nf.tail {
            w = w.concat(&self.simple_word(s));
        }
        w
    }

    // The element with the atom divided off the right, if that stays in the
    // monoid.
    fn rdiv(self, nf: &GarsideNf, z: Gen) -> Option<GarsideNf> {
        let mut c = nf.clone();
        self.mul_letter(&mut c, Letter::neg(z));
        c.is_positive().then_some(c)
    }

    /// The unique pair of positive words (g1, g2) with w = g1 g2^-1 in the
    /// group and no common right divisor, both spelled canonically.
    pub fn left_normal_decomposition(self, w: &Word) -> (Word, Word) {
        let nf = self.nf(w);
        let (mut g1, mut g2) = if nf.is_positive() {
            (nf, self.identity_nf())
        } else {
            let k = (-nf.delta_pow) as usize;
            let mut tail = nf.tail;
            if k % 2 == 1 {
                for s in tail.iter_mut() {
                    *s = self.twist(*s);
                }
            }
            (
                GarsideNf { delta_pow: 0, tail },
                GarsideNf { delta_pow: k as i64, tail: Vec::new() },
            )
        };
        // Quotient out the common right divisors atom by atom; any
        // nontrivial common divisor would leave some atom in common.
        'strip: loop {
            for z in [self.x, self.y] {
                if let (Some(n1), Some(n2)) = (self.rdiv(&g1, z), self.rdiv(&g2, z)) {
                    g1 = n1;
                    g2 = n2;
                    continue 'strip;
                }
            }
            break;
        }
        (self.positive_word(&g1), self.positive_word(&g2))
    }

    /// Distances from the identity out to the given radius, keyed by normal
    /// form. Build once and share when many lookups are needed.
    pub fn distance_ball(self, radius: usize) -> HashMap<GarsideNf, usize> {
        let letters = [
            Letter::pos(self.x),
            Letter::neg(self.x),
            Letter::pos(self.y),
            Letter::neg(self.y),
        ];
        let mut dist = HashMap::new();
        dist.insert(self.identity_nf(), 0usize);
        let mut frontier = vec![self.identity_nf()];
        for d in 1..=radius {
            let mut next = Vec::new();
            for nf in &frontier {
                for &l in &letters {
                    let mut n = nf.clone();
                    self.mul_letter(&mut n, l);
                    if !dist.contains_key(&n) {
                        dist.insert(n.clone(), d);
                        next.push(n);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        dist
    }

    /// BFS distance of the element of `w` from the identity, or None if it
    /// exceeds `cap`.
    pub fn geodesic_length(self, w: &Word, cap: usize) -> Option<usize> {
        self.distance_ball(cap.min(w.len())).get(&self.nf(w)).copied()
    }

    // All words one relation flip away (either side, either spelling).
    fn t1_neighbors(self, w: &Word) -> Vec<Word> {
        let m = self.mi();
        let mut out = Vec::new();
        if w.len() < m {
            return out;
        }
        for pos in 0..=(w.len() - m) {
            for pair in [(self.x, self.y), (self.y, self.x)] {
                let mv = Move::T1 { pos, pair, m: self.m };
                if let Ok(v) = apply_move(w, &mv) {
                    out.push(v);
                }
            }
        }
        out
    }

    /// True when the positive pair (w1, w2) is not a normal pair: some
    /// sequence of relation flips on w1 w2^-1 exposes a free cancellation.
    pub fn detect_non_normal(self, w1: &Word, w2: &Word) -> bool {
        debug_assert!(w1.is_positive() && w2.is_positive());
        let start = w1.concat(&w2.inverse());
        let mut seen = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start.clone());
        queue.push_back(start);
        while let Some(w) = queue.pop_front() {
            if !w.is_freely_reduced() {
                return true;
            }
            for v in self.t1_neighbors(&w) {
                if seen.insert(v.clone()) {
                    queue.push_back(v);
                }
            }
        }
        false
    }
}

fn random_word(rng: &mut impl Rng, gens: &[Gen], max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| {
            let g = gens[rng.gen_range(0..gens.len())];
            if rng.gen_bool(0.5) {
                Letter::pos(g)
            } else {
                Letter::neg(g)
            }
        })
        .collect()
}

/// A freely reduced word representing the identity: a product of k
/// conjugated relator instances r^(+-1) with conjugators of length at most
/// c, deterministic per seed. Presentations without a finite label have no
/// relators; they get a word that cancels to nothing by free reduction
/// alone.
pub fn gen_identity_word(p: &Presentation, seed: u64, k: usize, c: usize) -> Word {
    if k == 0 {
        return Word::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let finite: Vec<(Gen, Gen, u32)> = p.finite_pairs().collect();
    let gens: Vec<Gen> = p.gens().iter().collect();
    if finite.is_empty() {
        let u = random_word(&mut rng, &gens, c.max(1));
        return u.concat(&u.inverse());
    }
    let mut w = Word::new();
    for _ in 0..k {
        let (a, b, m) = finite[rng.gen_range(0..finite.len())];
        let r = alt_from(a, b, m as usize).concat(&alt_from(b, a, m as usize).inverse());
        let r = if rng.gen_bool(0.5) { r } else { r.inverse() };
        let u = random_word(&mut rng, &gens, c);
        w = w.concat(&u).concat(&r).concat(&u.inverse());
    }
    w.free_reduce()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle(m: u32) -> (Presentation, DihedralOracle) {
        let p = Presentation::dihedral(m);
        let o = DihedralOracle::new(Gen(0), Gen(1), m);
        (p, o)
    }

    fn w(p: &Presentation, s: &str) -> Word {
        p.parse_word(s).unwrap()
    }

    #[test]
    fn equality_respects_the_relation() {
        let (p, o) = oracle(3);
        assert!(o.equal(&w(&p, "sts"), &w(&p, "tst")));
        assert!(!o.equal(&w(&p, "st"), &w(&p, "ts")));
        assert!(o.equal(&w(&p, "stsT"), &w(&p, "ts")));
        // Conjugation by the half-twist swaps the generators when m is odd.
        assert!(o.equal(&w(&p, "tstsTST"), &w(&p, "t")));
        let v = w(&p, "tsSTts");
        assert!(o.equal(&v, &v.concat(&w(&p, "sS"))));

        let (p, o) = oracle(4);
        assert!(o.equal(&w(&p, "stst"), &w(&p, "tsts")));
        assert!(!o.equal(&w(&p, "sts"), &w(&p, "tst")));
    }

    #[test]
    fn normal_form_is_a_stable_key() {
        let (p, o) = oracle(3);
        assert!(o.nf(&w(&p, "sSttTT")).is_identity());
        assert_eq!(o.nf(&w(&p, "sts")), o.nf(&w(&p, "tst")));
        // The full twist is central here (m odd, squared), so conjugation
        // fixes it.
        let delta2 = w(&p, "stssts");
        assert_eq!(o.nf(&delta2).delta_pow, 2);
        assert!(o.equal(&w(&p, "t").concat(&delta2).concat(&w(&p, "T")), &delta2));
    }

    #[test]
    fn left_normal_decomposition_examples() {
        let (p, o) = oracle(3);
        let pair = |a: &str, b: &str| (w(&p, a), w(&p, b));
        assert_eq!(o.left_normal_decomposition(&w(&p, "stS")), pair("st", "s"));
        assert_eq!(o.left_normal_decomposition(&w(&p, "sTs")), pair("sst", "ts"));
        // Positive words keep an empty denominator and get the canonical
        // spelling.
        assert_eq!(o.left_normal_decomposition(&w(&p, "tst")), pair("sts", ""));
        assert_eq!(o.left_normal_decomposition(&Word::new()), pair("", ""));
        // Pure negatives invert the mirrored decomposition.
        assert_eq!(o.left_normal_decomposition(&w(&p, "TS")), pair("", "st"));
    }

    #[test]
    fn decomposition_has_no_common_right_divisor() {
        let (p, o) = oracle(4);
        for s in ["stS", "sTs", "TsT", "stsTST", "sstT", "tSSt"] {
            let v = w(&p, s);
            let (g1, g2) = o.left_normal_decomposition(&v);
            assert!(o.equal(&g1.concat(&g2.inverse()), &v), "{s}");
            let n1 = o.nf(&g1);
            let n2 = o.nf(&g2);
            for z in [Gen(0), Gen(1)] {
                assert!(
                    o.rdiv(&n1, z).is_none() || o.rdiv(&n2, z).is_none(),
                    "{s}: common right divisor"
                );
            }
        }
    }

    #[test]
    fn geodesic_lengths_by_bfs() {
        let (p, o) = oracle(3);
        assert_eq!(o.geodesic_length(&w(&p, "sS"), 8), Some(0));
        assert_eq!(o.geodesic_length(&w(&p, "sts"), 8), Some(3));
        // stsT is tstT = ts after one flip, so the element has length 2.
        assert_eq!(o.geodesic_length(&w(&p, "stsT"), 8), Some(2));
        assert_eq!(o.geodesic_length(&w(&p, "stst"), 8), Some(4));

        let ball = o.distance_ball(4);
        assert_eq!(ball.get(&o.nf(&w(&p, "ts"))).copied(), Some(2));
        assert_eq!(ball.get(&o.identity_nf()).copied(), Some(0));
    }

    #[test]
    fn non_normal_pairs_are_detected() {
        let (p, o) = oracle(3);
        assert!(o.detect_non_normal(&w(&p, "sts"), &w(&p, "s")));
        assert!(!o.detect_non_normal(&w(&p, "st"), &w(&p, "s")));
        assert!(!o.detect_non_normal(&Word::new(), &Word::new()));
        // Needs a flip first: tst and t share no letter on the surface, but
        // tst = sts exposes the cancellation.
        assert!(o.detect_non_normal(&w(&p, "tst"), &w(&p, "t")));
        assert!(!o.detect_non_normal(&w(&p, "sst"), &w(&p, "ts")));
    }

    #[test]
    fn detect_non_normal_matches_the_decomposition() {
        // Exhaustive cross-check on short positive pairs: the flip search
        // and the divisor-free decomposition must agree on normality.
        for m in [3u32, 4] {
            let (_p, o) = oracle(m);
            let words: Vec<Word> = (0..=4usize)
                .flat_map(|len| {
                    (0..1usize << len).map(move |bits| {
                        (0..len)
                            .map(|i| {
                                Letter::pos(if bits >> i & 1 == 1 { Gen(1) } else { Gen(0) })
                            })
                            .collect::<Word>()
                    })
                })
                .collect();
            for g1 in &words {
                for g2 in &words {
                    let joined = g1.concat(&g2.inverse());
                    let (n1, n2) = o.left_normal_decomposition(&joined);
                    let is_normal_pair = o.equal(&n1, g1) && o.equal(&n2, g2);
                    assert_eq!(
                        o.detect_non_normal(g1, g2),
                        !is_normal_pair,
                        "m={m} pair {g1:?} {g2:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn identity_words_represent_the_identity() {
        let p = Presentation::parse("gens: a b c\nm a b 3\nm a c 4\nm b c 5\n").unwrap();
        for seed in 0..30u64 {
            let v = gen_identity_word(&p, seed, 1 + (seed as usize % 3), seed as usize % 4);
            assert!(v.is_freely_reduced());
            // Check against the abelianization. Odd labels identify their
            // two generators there, and every label here is odd or links to
            // one, so all three collapse to a single class: the total
            // exponent sum must vanish.
            let total: i64 = v
                .iter()
                .map(|l| if l.is_pos() { 1i64 } else { -1 })
                .sum();
            assert_eq!(total, 0, "seed {seed}");
        }
        // And exactly, via the oracle, when a single pair is involved.
        let (p2, o) = oracle(3);
        for seed in 0..30u64 {
            let v = gen_identity_word(&p2, seed, 2, 2);
            assert!(o.nf(&v).is_identity(), "seed {seed}");
        }
    }

    #[test]
    fn identity_word_edge_cases() {
        let (p, _o) = oracle(3);
        assert_eq!(gen_identity_word(&p, 7, 0, 5), Word::new());
        let one = gen_identity_word(&p, 7, 1, 0);
        let strs = p.word_string(&one);
        assert!(strs == "stsTST" || strs == "tstSTS", "{strs}");
        assert_eq!(gen_identity_word(&p, 11, 3, 2), gen_identity_word(&p, 11, 3, 2));

        // No finite label: the fallback must still cancel freely to nothing.
        let free = Presentation::parse("gens: s t\n").unwrap();
        let v = gen_identity_word(&free, 3, 2, 3);
        assert_eq!(v.free_reduce(), Word::new());
    }
}
