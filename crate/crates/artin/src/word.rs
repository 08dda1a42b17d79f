//! Free words over a generating set: letters, inversion, free reduction,
//! alternating words, and the square-free run statistics `max_pos_run` and `max_neg_run`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Deref;

/// Generator, identified by index into the owning presentation's name table.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gen(pub u8);

impl Gen {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Debug for Gen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

/// Letter sign. `Pos` sorts before `Neg`, so the derived letter order is
/// a < a^-1 < b < b^-1 < ..., which is the order shortlex comparisons use.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    #[inline]
    pub fn flip(self) -> Sign {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        }
    }
}

/// A generator or the formal inverse of one.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub gen: Gen,
    pub sign: Sign,
}

impl Letter {
    pub const fn pos(gen: Gen) -> Letter {
        Letter { gen, sign: Sign::Pos }
    }

    pub const fn neg(gen: Gen) -> Letter {
        Letter { gen, sign: Sign::Neg }
    }

    #[inline]
    pub fn inverse(self) -> Letter {
        Letter { gen: self.gen, sign: self.sign.flip() }
    }

    #[inline]
    pub fn is_pos(self) -> bool {
        matches!(self.sign, Sign::Pos)
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Debug rendering only: a..z for positive, A..Z for inverses.
        let base = b'a' + self.gen.0 % 26;
        let c = match self.sign {
            Sign::Pos => base,
            Sign::Neg => base - 32,
        };
        write!(f, "{}", c as char)
    }
}

/// A finite sequence of letters. Nothing is reduced implicitly; the empty
/// word is allowed. Derefs to a letter slice for indexing and iteration.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn new() -> Word {
        Word(Vec::new())
    }

    pub fn single(l: Letter) -> Word {
        Word(vec![l])
    }

    /// Formal inverse: reverse the letters and flip every sign.
    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn push(&mut self, l: Letter) {
        self.0.push(l);
    }

    /// True if no adjacent pair of letters is mutually inverse.
    pub fn is_freely_reduced(&self) -> bool {
        self.0.windows(2).all(|p| p[0] != p[1].inverse())
    }

    /// The freely reduced form. The result is independent of removal order,
    /// so a single left-to-right cancellation stack computes it.
    pub fn free_reduce(&self) -> Word {
        let mut out: Vec<Letter> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last().copied() == Some(l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    /// Generators that occur in the word, under either sign.
    pub fn support(&self) -> GenMask {
        let mut m = GenMask::EMPTY;
        for l in &self.0 {
            m.insert(l.gen);
        }
        m
    }

    pub fn is_positive(&self) -> bool {
        self.0.iter().all(|l| l.is_pos())
    }

    pub fn is_negative(&self) -> bool {
        self.0.iter().all(|l| !l.is_pos())
    }

    /// True if no two adjacent letters are equal (no `xx` and no `XX`).
    pub fn is_square_free(&self) -> bool {
        self.0.windows(2).all(|p| p[0] != p[1])
    }

    /// Length of the longest square-free positive factor.
    pub fn max_pos_run(&self) -> usize {
        self.max_clean_run(Sign::Pos)
    }

    /// Length of the longest factor whose formal inverse is square-free and
    /// positive.
    pub fn max_neg_run(&self) -> usize {
        self.max_clean_run(Sign::Neg)
    }

    // A square-free same-sign factor cannot cross a sign change or a repeated
    // letter, so one scan over maximal clean runs finds the longest.
    fn max_clean_run(&self, sign: Sign) -> usize {
        let mut best = 0;
        let mut run = 0;
        let mut prev: Option<Gen> = None;
        for &l in &self.0 {
            if l.sign != sign {
                run = 0;
                prev = None;
                continue;
            }
            run = if prev == Some(l.gen) { 1 } else { run + 1 };
            prev = Some(l.gen);
            best = best.max(run);
        }
        best
    }
}

impl Deref for Word {
    type Target = [Letter];

    fn deref(&self) -> &[Letter] {
        &self.0
    }
}

impl From<Vec<Letter>> for Word {
    fn from(v: Vec<Letter>) -> Word {
        Word(v)
    }
}

impl From<&[Letter]> for Word {
    fn from(s: &[Letter]) -> Word {
        Word(s.to_vec())
    }
}

impl FromIterator<Letter> for Word {
    fn from_iter<I: IntoIterator<Item = Letter>>(it: I) -> Word {
        Word(it.into_iter().collect())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"")?;
        for l in &self.0 {
            write!(f, "{l:?}")?;
        }
        write!(f, "\"")
    }
}

/// Positive alternating word of length `j` whose first letter is `x`:
/// x y x y ...
pub fn alt_from(x: Gen, y: Gen, j: usize) -> Word {
    (0..j)
        .map(|i| Letter::pos(if i % 2 == 0 { x } else { y }))
        .collect()
}

/// Positive alternating word of length `j` whose last letter is `y`:
/// ... x y x y.
pub fn alt_to(x: Gen, y: Gen, j: usize) -> Word {
    (0..j)
        .map(|i| Letter::pos(if (j - i) % 2 == 1 { y } else { x }))
        .collect()
}

/// Shortlex comparison: length first, then letterwise with
/// a < a^-1 < b < b^-1 < ... in generator-table order.
pub fn shortlex_cmp(a: &Word, b: &Word) -> Ordering {
    a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0))
}

/// Small generator set, as a bitmask over name-table indices.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct GenMask(pub u32);

impl GenMask {
    pub const EMPTY: GenMask = GenMask(0);

    pub fn single(g: Gen) -> GenMask {
        GenMask(1 << g.0)
    }

    /// The set {0, 1, ..., n-1}.
    pub fn full(n: usize) -> GenMask {
        debug_assert!(n <= 32);
        if n == 32 {
            GenMask(u32::MAX)
        } else {
            GenMask((1u32 << n) - 1)
        }
    }

    pub fn insert(&mut self, g: Gen) {
        self.0 |= 1 << g.0;
    }

    pub fn remove(&mut self, g: Gen) {
        self.0 &= !(1 << g.0);
    }

    pub fn contains(self, g: Gen) -> bool {
        self.0 >> g.0 & 1 == 1
    }

    pub fn union(self, other: GenMask) -> GenMask {
        GenMask(self.0 | other.0)
    }

    pub fn intersect(self, other: GenMask) -> GenMask {
        GenMask(self.0 & other.0)
    }

    pub fn minus(self, other: GenMask) -> GenMask {
        GenMask(self.0 & !other.0)
    }

    pub fn is_subset(self, other: GenMask) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Gen> {
        (0..32u8).map(Gen).filter(move |g| self.contains(*g))
    }
}

impl FromIterator<Gen> for GenMask {
    fn from_iter<I: IntoIterator<Item = Gen>>(it: I) -> GenMask {
        let mut m = GenMask::EMPTY;
        for g in it {
            m.insert(g);
        }
        m
    }
}

impl fmt::Debug for GenMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
