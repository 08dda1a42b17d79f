//! Command-line front end for the rewriting library.
//!
//! One presentation file plus one subcommand per invocation. Output is plain
//! text unless `--json` is given. The exit code carries the verdict so the
//! tool can drive scripts: 0 success (for `solve`, the word is the
//! identity), 1 invalid trace, 2 usage, 3 parse failure, 4 presentation or
//! request out of scope, 5 the engine could not certify an answer, 10 the
//! word is not the identity.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use artin::amalgam::{self, AmalgamError, Obstruction, Solution};
use artin::garside::gen_identity_word;
use artin::largetype::{self, LargeTypeError};
use artin::trace::{trace_from_json, trace_to_json, verify, Trace, TraceError};
use artin::{Classification, GenMask, Presentation, Word};

#[derive(Parser)]
#[command(name = "artin", version, about = "Rewriting calculus for Artin-Tits presentations")]
struct Cli {
    /// Emit JSON instead of plain text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Report which class the presentation falls in.
    Classify { file: PathBuf },
    /// Rewrite a word to a geodesic representative.
    Reduce { file: PathBuf, word: String },
    /// Rewrite a word to its shortlex normal form.
    Nf { file: PathBuf, word: String },
    /// Decide whether a word represents the identity (exit 0 yes, 10 no).
    Solve { file: PathBuf, word: String },
    /// Split a word as v u with u over the chosen generators and v a
    /// minimal-length coset representative.
    Hsharp {
        file: PathBuf,
        word: String,
        /// Generators allowed in the right factor, written as one string.
        #[arg(long)]
        s0: String,
        /// Ambient parabolic the word must live in (default: all generators).
        #[arg(long)]
        sp: Option<String>,
        /// How many letters of lookahead to spend on stuck prefixes.
        #[arg(long, default_value_t = 3)]
        plateau_depth: usize,
    },
    /// Produce a seeded word that represents the identity.
    #[command(name = "gen-id")]
    GenId {
        file: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Number of conjugated relator factors.
        #[arg(long)]
        k: usize,
        /// Maximum conjugator length per factor.
        #[arg(long)]
        c: usize,
    },
    /// Check a recorded trace file against the move rules (exit 0 valid).
    Verify { file: PathBuf, trace: PathBuf },
}

enum Failure {
    Usage(String),
    Parse(String),
    OutOfScope(String),
    Indeterminate(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Parse(_) => 3,
            Failure::OutOfScope(_) => 4,
            Failure::Indeterminate(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m)
            | Failure::Parse(m)
            | Failure::OutOfScope(m)
            | Failure::Indeterminate(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.cmd {
        Cmd::Classify { file } => classify(&file, cli.json),
        Cmd::Reduce { file, word } => rewrite(&file, &word, cli.json, false),
        Cmd::Nf { file, word } => rewrite(&file, &word, cli.json, true),
        Cmd::Solve { file, word } => solve(&file, &word, cli.json),
        Cmd::Hsharp { file, word, s0, sp, plateau_depth } => {
            hsharp(&file, &word, &s0, sp.as_deref(), plateau_depth, cli.json)
        }
        Cmd::GenId { file, seed, k, c } => gen_id(&file, seed, k, c, cli.json),
        Cmd::Verify { file, trace } => verify_cmd(&file, &trace, cli.json),
    }
}

fn load(file: &Path) -> Result<Presentation, Failure> {
    let text = fs::read_to_string(file)
        .map_err(|e| Failure::Parse(format!("{}: {e}", file.display())))?;
    Presentation::parse(&text).map_err(|e| Failure::Parse(format!("{}: {e}", file.display())))
}

/// "-" stands for the empty word; shells make a literal "" awkward.
fn word_arg(p: &Presentation, s: &str) -> Result<Word, Failure> {
    if s == "-" {
        return Ok(Word::new());
    }
    p.parse_word(s)
        .map_err(|e| Failure::Parse(format!("word `{s}`: {e}")))
}

fn mask_arg(p: &Presentation, s: &str, flag: &str) -> Result<GenMask, Failure> {
    let mut mask = GenMask::EMPTY;
    for ch in s.chars() {
        let g = p.gen_by_name(ch).ok_or_else(|| {
            Failure::Parse(format!("--{flag}: `{ch}` is not a generator"))
        })?;
        mask.insert(g);
    }
    Ok(mask)
}

/// Empty words print as "-" in text mode, mirroring the input convention.
fn show(p: &Presentation, w: &Word) -> String {
    if w.is_empty() {
        "-".to_string()
    } else {
        p.word_string(w)
    }
}

fn from_large(e: LargeTypeError) -> Failure {
    match e {
        LargeTypeError::NotLargeType => Failure::OutOfScope(
            "this operation needs every finite label to be at least 3".to_string(),
        ),
        LargeTypeError::Indeterminate(msg) => Failure::Indeterminate(msg),
        other => Failure::Indeterminate(other.to_string()),
    }
}

fn from_amalgam(e: AmalgamError) -> Failure {
    match e {
        AmalgamError::OutOfScope => Failure::OutOfScope(
            "a generator triple falls outside the supported classes".to_string(),
        ),
        AmalgamError::LargeType(inner) => from_large(inner),
        other => Failure::Indeterminate(other.to_string()),
    }
}

fn emit(json_mode: bool, value: Value, text: String) {
    if json_mode {
        println!("{value}");
    } else {
        println!("{text}");
    }
}

fn classify(file: &Path, json_mode: bool) -> Result<ExitCode, Failure> {
    let p = load(file)?;
    let class = p.classify();
    let name = match class {
        Classification::FreeAbelian => "FREE_ABELIAN",
        Classification::DihedralSpherical => "DIHEDRAL_SPHERICAL",
        Classification::Large => "LARGE",
        Classification::SufficientlyLarge => "SUFFICIENTLY_LARGE",
        Classification::OutOfScope { .. } => "OUT_OF_SCOPE",
    };
    if let Classification::OutOfScope { witness: (s, t, u) } = class {
        let names = [p.name(s), p.name(t), p.name(u)];
        emit(
            json_mode,
            json!({ "classification": name, "witness": names }),
            format!("{name}\nwitness: {} {} {}", names[0], names[1], names[2]),
        );
        return Ok(ExitCode::from(4));
    }
    emit(json_mode, json!({ "classification": name }), name.to_string());
    Ok(ExitCode::SUCCESS)
}

/// Geodesic rewriting is defined when all finite labels are at least 3 or
/// when every label is 2; mixed presentations only support `solve`.
fn rewrite(file: &Path, word: &str, json_mode: bool, shortlex: bool) -> Result<ExitCode, Failure> {
    let p = load(file)?;
    if let Classification::OutOfScope { .. } = p.classify() {
        return Err(Failure::OutOfScope(
            "a generator triple falls outside the supported classes".to_string(),
        ));
    }
    let w = word_arg(&p, word)?;
    let (out, tr) = if matches!(p.classify(), Classification::FreeAbelian) {
        amalgam::reduce_abelian(&p, &w)
    } else {
        largetype::check_large_type(&p).map_err(from_large)?;
        if shortlex {
            largetype::shortlex_nf(&p, &w).map_err(from_large)?
        } else {
            largetype::reduce_to_geodesic(&p, &w).map_err(from_large)?
        }
    };
    emit(
        json_mode,
        json!({ "word": p.word_string(&out), "trace": trace_to_json(&p, &tr) }),
        show(&p, &out),
    );
    Ok(ExitCode::SUCCESS)
}

fn obstruction_to_json(p: &Presentation, ob: &Obstruction) -> Value {
    match ob {
        Obstruction::NonzeroExponents { word } => {
            json!({ "kind": "nonzero-exponents", "word": p.word_string(word) })
        }
        Obstruction::NonemptyGeodesic { word } => {
            json!({ "kind": "nonempty-geodesic", "word": p.word_string(word) })
        }
        Obstruction::FactorAlternation { factors } => json!({
            "kind": "factor-alternation",
            "factors": factors.iter().map(|f| p.word_string(f)).collect::<Vec<_>>(),
        }),
        Obstruction::Component { gens, inner } => json!({
            "kind": "component",
            "gens": gens.iter().map(|g| p.name(g)).collect::<Vec<_>>(),
            "inner": obstruction_to_json(p, inner),
        }),
    }
}

fn obstruction_text(p: &Presentation, ob: &Obstruction) -> String {
    match ob {
        Obstruction::NonzeroExponents { word } => {
            format!("nonzero exponents in {}", show(p, word))
        }
        Obstruction::NonemptyGeodesic { word } => {
            format!("nonempty geodesic {}", show(p, word))
        }
        Obstruction::FactorAlternation { factors } => {
            format!("alternating normal form with {} factors", factors.len())
        }
        Obstruction::Component { gens, inner } => {
            let names: String = gens.iter().map(|g| p.name(g)).collect();
            format!("component {{{names}}}: {}", obstruction_text(p, inner))
        }
    }
}

fn solve(file: &Path, word: &str, json_mode: bool) -> Result<ExitCode, Failure> {
    let p = load(file)?;
    let w = word_arg(&p, word)?;
    match amalgam::solve_word_problem(&p, &w).map_err(from_amalgam)? {
        Solution::EqualOne(tr) => {
            emit(
                json_mode,
                json!({ "result": "EQUAL_ONE", "trace": trace_to_json(&p, &tr) }),
                "EQUAL_ONE".to_string(),
            );
            Ok(ExitCode::SUCCESS)
        }
        Solution::NotEqualOne(ob) => {
            emit(
                json_mode,
                json!({ "result": "NOT_EQUAL_ONE", "certificate": obstruction_to_json(&p, &ob) }),
                format!("NOT_EQUAL_ONE: {}", obstruction_text(&p, &ob)),
            );
            Ok(ExitCode::from(10))
        }
    }
}

fn hsharp(
    file: &Path,
    word: &str,
    s0: &str,
    sp: Option<&str>,
    plateau_depth: usize,
    json_mode: bool,
) -> Result<ExitCode, Failure> {
    let p = load(file)?;
    largetype::check_large_type(&p).map_err(from_large)?;
    let w = word_arg(&p, word)?;
    let sub = mask_arg(&p, s0, "s0")?;
    let ambient = match sp {
        Some(s) => mask_arg(&p, s, "sp")?,
        None => p.gens(),
    };
    let dec = largetype::coset_decompose_within(&p, &w, sub, ambient, plateau_depth)
        .map_err(|e| match e {
            LargeTypeError::AlphabetEscape => Failure::Usage(
                "the word does not lie in the parabolic given by --sp".to_string(),
            ),
            other => from_large(other),
        })?;
    emit(
        json_mode,
        json!({
            "v": p.word_string(&dec.v),
            "u": p.word_string(&dec.u),
            "trace": trace_to_json(&p, &dec.trace),
        }),
        format!("v: {}\nu: {}", show(&p, &dec.v), show(&p, &dec.u)),
    );
    Ok(ExitCode::SUCCESS)
}

fn gen_id(file: &Path, seed: u64, k: usize, c: usize, json_mode: bool) -> Result<ExitCode, Failure> {
    let p = load(file)?;
    let w = gen_identity_word(&p, seed, k, c);
    emit(json_mode, json!({ "word": p.word_string(&w) }), show(&p, &w));
    Ok(ExitCode::SUCCESS)
}

fn verify_cmd(file: &Path, trace_path: &Path, json_mode: bool) -> Result<ExitCode, Failure> {
    let p = load(file)?;
    let text = fs::read_to_string(trace_path)
        .map_err(|e| Failure::Parse(format!("{}: {e}", trace_path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Parse(format!("{}: {e}", trace_path.display())))?;
    let tr: Trace = trace_from_json(&p, &value)
        .map_err(|e| Failure::Parse(format!("{}: {e}", trace_path.display())))?;
    match verify(&tr) {
        Ok(()) => {
            emit(json_mode, json!({ "valid": true }), "VALID".to_string());
            Ok(ExitCode::SUCCESS)
        }
        Err(TraceError::Move { index, source }) => {
            emit(
                json_mode,
                json!({ "valid": false, "index": index, "error": source.to_string() }),
                format!("INVALID at move {index}: {source}"),
            );
            Ok(ExitCode::FAILURE)
        }
        Err(err) => {
            emit(
                json_mode,
                json!({ "valid": false, "error": err.to_string() }),
                format!("INVALID: {err}"),
            );
            Ok(ExitCode::FAILURE)
        }
    }
}
