//! Rewriting calculus for Artin-Tits groups of large and sufficiently large
//! type: typed elementary moves with replayable traces, a two-generator
//! normalization engine, critical factorizations, minimal coset
//! representatives, and a word problem solver whose answers come with
//! independently checkable derivations.

pub mod amalgam;
pub mod dihedral;
pub mod garside;
pub mod largetype;
pub mod presentation;
pub mod trace;
pub mod word;

pub use presentation::{Classification, Label, Presentation};
pub use word::{Gen, GenMask, Letter, Sign, Word};
