//! Command-line front end: the identity-file grammar, command dispatch and
//! the JSON output schema.
//!
//! Grammar (one statement per line, `#` starts a comment):
//!
//! ```text
//! vars X Y Z
//! id X^2*Y^2 + X^4*Y^2 + X*Y*X*Y
//! id X^3 = X
//! id [X, Y]*X - 2*X
//! ```

use std::fmt;
use std::time::Instant;

use clap::{Parser, Subcommand};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::decide::{decide_all, verify_witness, DecideOptions, IdentitySet, Limit, Verdict, Witness};
use crate::finitering::{make_ring, CheckMode, Fq, IdentityCheck, RingError, RingFamily};
use crate::freealg::{NcPoly, VarId, Word};
use crate::oracle::{cross_validate, SearchBounds};
use crate::theorems::{self, TheoremError, TheoremWitness};

pub const SCHEMA_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Parsing

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

impl std::error::Error for ParseError {}

/// A parsed identity file. Equality ignores source positions.
#[derive(Clone, Debug)]
pub struct InputDoc {
    pub vars: Vec<String>,
    /// Each identity normalized to `P = 0`.
    pub ids: Vec<NcPoly>,
    /// `(line, column)` of each `id` statement.
    pub spans: Vec<(usize, usize)>,
}

impl PartialEq for InputDoc {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars && self.ids == other.ids
    }
}

impl InputDoc {
    pub fn identity_set(&self) -> IdentitySet {
        IdentitySet::new(self.vars.len(), self.ids.clone())
    }

    /// Canonical text; reparses to an equal document.
    pub fn print(&self) -> String {
        let mut out = format!("vars {}\n", self.vars.join(" "));
        for p in &self.ids {
            out.push_str(&format!("id {}\n", p.to_string_with(&self.vars)));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Sym(char),
}

fn tokenize(src: &str, line: usize, col0: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let cs: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        let col = col0 + i;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let st = i;
            while i < cs.len() && cs[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = cs[st..i].iter().collect();
            out.push((Tok::Int(s.parse().unwrap()), col));
        } else if c.is_alphabetic() || c == '_' {
            let st = i;
            while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(cs[st..i].iter().collect()), col));
        } else if "+-*^()[],=".contains(c) {
            out.push((Tok::Sym(c), col));
            i += 1;
        } else {
            return Err(ParseError { line, col, msg: format!("unexpected character '{}'", c) });
        }
    }
    Ok(out)
}

struct ExprParser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
    vars: &'a mut Vec<String>,
    /// Undeclared names become new variables (single-expression commands).
    auto_declare: bool,
}

impl ExprParser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let col = self.toks.get(self.pos).map_or(self.end_col, |t| t.1);
        Err(ParseError { line: self.line, col, msg: msg.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", c))
        }
    }

    fn expr(&mut self) -> Result<NcPoly, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc.add(&self.term()?);
            } else if self.eat('-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<NcPoly, ParseError> {
        let mut acc = self.unary()?;
        while self.eat('*') {
            acc = acc.mul(&self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<NcPoly, ParseError> {
        if self.eat('-') {
            return Ok(self.unary()?.neg());
        }
        let base = self.atom()?;
        if self.eat('^') {
            match self.peek().cloned() {
                Some(Tok::Int(n)) => {
                    let e: u32 = match n.try_into() {
                        Ok(e) if e <= 100_000 => e,
                        _ => return self.err("exponent too large"),
                    };
                    self.pos += 1;
                    Ok(base.pow(e))
                }
                Some(Tok::Sym('-')) => self.err("negative exponent"),
                _ => self.err("expected a non-negative integer exponent"),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<NcPoly, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(NcPoly::constant(n))
            }
            Some(Tok::Ident(name)) => {
                let idx = match self.vars.iter().position(|v| *v == name) {
                    Some(i) => i,
                    None if self.auto_declare && self.vars.len() < VarId::MAX as usize => {
                        self.vars.push(name);
                        self.vars.len() - 1
                    }
                    None => return self.err(format!("undeclared variable '{}'", name)),
                };
                self.pos += 1;
                Ok(NcPoly::var(idx as VarId + 1))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Sym('[')) => {
                self.pos += 1;
                let a = self.expr()?;
                self.expect(',')?;
                let b = self.expr()?;
                self.expect(']')?;
                Ok(NcPoly::commutator(&a, &b))
            }
            Some(_) => self.err("expected a number, variable, '(' or '['"),
            None => self.err("unexpected end of expression"),
        }
    }

    /// `expr` or `expr = expr`, consuming everything.
    fn identity(&mut self) -> Result<NcPoly, ParseError> {
        let lhs = self.expr()?;
        let p = if self.eat('=') { lhs.sub(&self.expr()?) } else { lhs };
        match self.peek() {
            None => Ok(p),
            Some(Tok::Ident(_)) | Some(Tok::Int(_)) | Some(Tok::Sym('(')) | Some(Tok::Sym('[')) => {
                self.err("expected an operator ('*' is required between factors)")
            }
            Some(_) => self.err("unexpected token"),
        }
    }
}

pub fn parse_input(text: &str) -> Result<InputDoc, ParseError> {
    let mut doc = InputDoc { vars: vec![], ids: vec![], spans: vec![] };
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap();
        let trimmed = body.trim_start();
        if trimmed.trim().is_empty() {
            continue;
        }
        let indent = body.len() - trimmed.len();
        let kw_len = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
        let (kw, rest) = trimmed.split_at(kw_len);
        let rest_col = indent + kw_len + 1;
        match kw {
            "vars" => {
                if !doc.ids.is_empty() {
                    return Err(ParseError { line, col: indent + 1, msg: "vars must precede identities".into() });
                }
                for (tok, col) in tokenize(rest, line, rest_col)? {
                    match tok {
                        Tok::Ident(n) if n != "vars" && n != "id" => {
                            if doc.vars.contains(&n) {
                                return Err(ParseError { line, col, msg: format!("variable '{}' declared twice", n) });
                            }
                            if doc.vars.len() >= VarId::MAX as usize {
                                return Err(ParseError { line, col, msg: "too many variables".into() });
                            }
                            doc.vars.push(n);
                        }
                        _ => return Err(ParseError { line, col, msg: "expected a variable name".into() }),
                    }
                }
            }
            "id" => {
                let toks = tokenize(rest, line, rest_col)?;
                let end_col = indent + body.trim_start().trim_end().len() + 1;
                let mut ps = ExprParser { toks, pos: 0, line, end_col, vars: &mut doc.vars, auto_declare: false };
                let p = ps.identity()?;
                doc.ids.push(p);
                doc.spans.push((line, indent + 1));
            }
            _ => return Err(ParseError { line, col: indent + 1, msg: format!("expected 'vars' or 'id', found '{}'", kw) }),
        }
    }
    Ok(doc)
}

/// A single expression; variables are numbered in order of first occurrence
/// unless `vars` is given.
pub fn parse_expr(text: &str, vars: &mut Vec<String>) -> Result<NcPoly, ParseError> {
    let toks = tokenize(text, 1, 1)?;
    let end_col = text.chars().count() + 1;
    let auto = vars.is_empty();
    let mut ps = ExprParser { toks, pos: 0, line: 1, end_col, vars, auto_declare: auto };
    ps.identity()
}

// ---------------------------------------------------------------------------
// Witness JSON

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum RingJson {
    #[serde(rename = "U")]
    Up { p: u64 },
    B {
        p: u64,
        n: u32,
        l: u32,
        /// Monic modulus of `F_{p^n}`, constant term first.
        modulus: Vec<u64>,
    },
    Mat { k: u32, p: u64, n: u32 },
    TruncFree {
        p: u64,
        k: u32,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        relations: Vec<String>,
    },
    MinRing { p: u64 },
    Presented { p: u64, a: u32, b: u32, depth: u32, basis: Vec<String> },
}

fn word_from_label(s: &str) -> Option<Word> {
    s.chars()
        .map(|c| match c {
            'x' => Some(1),
            'y' => Some(2),
            _ => None,
        })
        .collect::<Option<Vec<VarId>>>()
        .map(Word)
}

fn label_of_word(w: &Word) -> String {
    w.0.iter().map(|&l| if l == 1 { 'x' } else { 'y' }).collect()
}

pub fn ring_json(f: &RingFamily) -> RingJson {
    match f {
        RingFamily::Up { p } => RingJson::Up { p: *p },
        RingFamily::B { p, n, l } => {
            let modulus = Fq::new(*p, *n).map(|f| f.modulus).unwrap_or_default();
            RingJson::B { p: *p, n: *n, l: *l, modulus }
        }
        RingFamily::Mat { k, p, n } => RingJson::Mat { k: *k, p: *p, n: *n },
        RingFamily::TruncFree { p, k, relations } => {
            RingJson::TruncFree { p: *p, k: *k, relations: relations.iter().map(label_of_word).collect() }
        }
        RingFamily::MinRing { p } => RingJson::MinRing { p: *p },
        RingFamily::Presented { p, a, b, depth, basis } => {
            RingJson::Presented { p: *p, a: *a, b: *b, depth: *depth, basis: basis.clone() }
        }
    }
}

/// Rebuilds the family, checking a supplied field modulus against the one
/// the library constructs.
pub fn family_from_json(r: &RingJson) -> Result<RingFamily, String> {
    Ok(match r {
        RingJson::Up { p } => RingFamily::Up { p: *p },
        RingJson::B { p, n, l, modulus } => {
            let f = Fq::new(*p, *n).map_err(|e| e.to_string())?;
            if f.modulus != *modulus {
                return Err(format!("modulus {:?} differs from the canonical {:?}", modulus, f.modulus));
            }
            RingFamily::B { p: *p, n: *n, l: *l }
        }
        RingJson::Mat { k, p, n } => RingFamily::Mat { k: *k, p: *p, n: *n },
        RingJson::TruncFree { p, k, relations } => {
            let rs = relations
                .iter()
                .map(|s| word_from_label(s).ok_or_else(|| format!("bad relation word '{}'", s)))
                .collect::<Result<Vec<_>, _>>()?;
            RingFamily::TruncFree { p: *p, k: *k, relations: rs }
        }
        RingJson::MinRing { p } => RingFamily::MinRing { p: *p },
        RingJson::Presented { p, a, b, depth, basis } => {
            RingFamily::Presented { p: *p, a: *a, b: *b, depth: *depth, basis: basis.clone() }
        }
    })
}

/// Compact ring syntax for `check --ring`: `U(2)`, `B(2,3,1)`, `Mat(2,2,1)`,
/// `TruncFree(3,3)`, `TruncFree(2,4,xy,yx)`, `MinRing(3)`, or a JSON object.
pub fn parse_ring_spec(s: &str) -> Result<RingFamily, String> {
    let s = s.trim();
    if s.starts_with('{') {
        let r: RingJson = serde_json::from_str(s).map_err(|e| e.to_string())?;
        return family_from_json(&r);
    }
    let open = s.find('(').ok_or("expected NAME(args)")?;
    if !s.ends_with(')') {
        return Err("expected NAME(args)".into());
    }
    let name = &s[..open];
    let args: Vec<&str> = s[open + 1..s.len() - 1].split(',').map(str::trim).collect();
    let num = |i: usize| -> Result<u64, String> {
        args.get(i).ok_or("missing argument")?.parse::<u64>().map_err(|e| e.to_string())
    };
    let small = |i: usize| -> Result<u32, String> { num(i)?.try_into().map_err(|_| "argument too large".to_string()) };
    let arity = |n: usize| if args.len() == n { Ok(()) } else { Err(format!("{} takes {} arguments", name, n)) };
    Ok(match name {
        "U" | "Up" => {
            arity(1)?;
            RingFamily::Up { p: num(0)? }
        }
        "B" => {
            arity(3)?;
            RingFamily::B { p: num(0)?, n: small(1)?, l: small(2)? }
        }
        "Mat" => {
            arity(3)?;
            RingFamily::Mat { k: small(0)?, p: num(1)?, n: small(2)? }
        }
        "TruncFree" => {
            let relations = args[2.min(args.len())..]
                .iter()
                .map(|w| word_from_label(w).ok_or_else(|| format!("bad relation word '{}'", w)))
                .collect::<Result<Vec<_>, _>>()?;
            RingFamily::TruncFree { p: num(0)?, k: small(1)?, relations }
        }
        "MinRing" => {
            arity(1)?;
            RingFamily::MinRing { p: num(0)? }
        }
        _ => return Err(format!("unknown ring family '{}'", name)),
    })
}

// ---------------------------------------------------------------------------
// Output documents

#[derive(Clone, Debug, Serialize)]
pub struct LimitsMeta {
    pub max_eval: u64,
    pub max_gsb_steps: u64,
    pub fast_path: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputDoc {
    pub schema_version: u32,
    pub command: String,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ring: Option<RingJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<[String; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<LimitJson>,
    /// Command-specific payload.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
    pub limits: LimitsMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitJson {
    pub stage: String,
    pub limit: String,
}

impl OutputDoc {
    fn new(command: &str, verdict: &str, limits: LimitsMeta) -> OutputDoc {
        OutputDoc {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            verdict: verdict.into(),
            ring: None,
            p: None,
            pair: None,
            trace: None,
            limit: None,
            details: None,
            limits,
            timing_ms: None,
        }
    }

    fn with_witness(mut self, w: &Witness) -> OutputDoc {
        self.ring = Some(ring_json(&w.family));
        self.p = Some(w.p);
        self.pair = w.pair.clone().map(|(a, b)| [a, b]);
        self.trace = w.trace.clone();
        self
    }

    fn from_verdict(command: &str, v: &Verdict, limits: LimitsMeta) -> OutputDoc {
        let doc = OutputDoc::new(command, v.kind(), limits);
        match v {
            Verdict::Forces => doc,
            Verdict::Witness(w) => doc.with_witness(w),
            Verdict::ResourceLimit(l) => {
                OutputDoc { limit: Some(LimitJson { stage: l.stage.clone(), limit: l.limit.clone() }), ..doc }
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("output serializes")
    }

    fn exit_code(&self) -> i32 {
        match self.verdict.as_str() {
            "resource_limit" => 3,
            "verify_failed" => 1,
            _ => 0,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = match self.verdict.as_str() {
            "forces" => "forces: every ring satisfying the identities is commutative".to_string(),
            "witness" => {
                let fam = self.ring.as_ref().and_then(|r| family_from_json(r).ok()).map(|f| f.describe());
                let mut s = format!("witness: {}", fam.unwrap_or_else(|| "?".into()));
                if let Some([a, b]) = &self.pair {
                    s.push_str(&format!(" ({} {} != {} {})", a, b, b, a));
                }
                s
            }
            "resource_limit" => {
                let l = self.limit.as_ref().unwrap();
                format!("resource limit in {}: {}", l.stage, l.limit)
            }
            other => other.to_string(),
        };
        if let Some(t) = &self.trace {
            out.push_str(&format!("\n  {}", t));
        }
        if let Some(d) = &self.details {
            out.push_str(&format!("\n  {}", d));
        }
        if let Some(t) = self.timing_ms {
            out.push_str(&format!("\n  {} ms", t));
        }
        out
    }
}

fn theorem_verdict(r: Result<Option<TheoremWitness>, TheoremError>, stage: &str) -> Result<Verdict, TheoremError> {
    match r {
        Ok(None) => Ok(Verdict::Forces),
        Ok(Some(w)) => Ok(Verdict::Witness(Witness { family: w.family, p: w.p, pair: w.pair, trace: None })),
        Err(TheoremError::Resource(s)) => Ok(Verdict::ResourceLimit(Limit { stage: stage.into(), limit: s })),
        Err(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// Commands

#[derive(Parser, Debug)]
#[command(name = "commdecide", version, about = "Commutativity theorems for polynomial identities of rings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Cap on tuple evaluations in exhaustive checks.
    #[arg(long, global = true, value_name = "N")]
    pub max_eval: Option<u64>,
    /// Cap on Gröbner–Shirshov completion steps.
    #[arg(long, global = true, value_name = "N")]
    pub max_gsb_steps: Option<u64>,
    /// Skip the closed-form criteria and run the general procedure.
    #[arg(long, global = true)]
    pub no_fast_path: bool,
    #[arg(long, global = true)]
    pub json: bool,
    /// Include wall-clock time in the output (makes JSON run-dependent).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide whether the identities in FILE force commutativity.
    Decide { file: String },
    /// Criterion for homogeneous multilinear identities.
    Multilinear { file: String },
    /// Criterion for a single identity P(X) = 0.
    Univariate { poly: String },
    /// Criterion for [Q(X), Y] = 0.
    Central { poly: String },
    /// Identities (XY)^n = X^n Y^n for n in the set.
    Power {
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<u64>,
    },
    /// Identities (X+Y)^n = X^n + Y^n for n in the set.
    Freshman {
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<u64>,
    },
    /// Check the identities on one ring.
    Check {
        #[arg(long)]
        ring: String,
        file: String,
    },
    /// Certify each identity on the minimal ring of characteristic P.
    Certify {
        #[arg(long)]
        p: u64,
        file: String,
    },
    /// Re-verify a witness produced by this tool.
    Verify { witness: String, file: String },
    /// Decide, then cross-check against bounded brute-force search.
    Oracle { file: String },
}

/// A usage-level failure (exit 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl From<ParseError> for UsageError {
    fn from(e: ParseError) -> Self {
        UsageError(format!("parse error at {}", e))
    }
}

fn read_doc(path: &str) -> Result<InputDoc, UsageError> {
    let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("{}: {}", path, e)))?;
    parse_input(&text).map_err(|e| UsageError(format!("{}:{}", path, e)))
}

fn one_var(text: &str) -> Result<NcPoly, UsageError> {
    let mut vars = Vec::new();
    let p = parse_expr(text, &mut vars)?;
    if vars.len() > 1 {
        return Err(UsageError(format!("expected one variable, found {}", vars.join(", "))));
    }
    Ok(p)
}

fn json_str(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("serializes")
}

pub fn execute(cli: &Cli) -> Result<OutputDoc, UsageError> {
    let mut opts = DecideOptions::default();
    if let Some(n) = cli.max_eval {
        opts.eval_cap = n;
    }
    if let Some(n) = cli.max_gsb_steps {
        opts.gsb_limits.max_steps = n;
    }
    opts.fast_path = !cli.no_fast_path;
    let limits = LimitsMeta { max_eval: opts.eval_cap, max_gsb_steps: opts.gsb_limits.max_steps, fast_path: opts.fast_path };
    let cap = opts.eval_cap;
    let usage = |e: TheoremError| UsageError(e.to_string());

    let doc = match &cli.command {
        Command::Decide { file } => {
            let ids = read_doc(file)?.identity_set();
            OutputDoc::from_verdict("decide", &decide_all(&ids, &opts), limits)
        }
        Command::Multilinear { file } => {
            let ids = read_doc(file)?.identity_set();
            let v = theorem_verdict(theorems::multilinear_decide(&ids.polys), "multilinear").map_err(usage)?;
            let profiles: Vec<Value> = ids
                .polys
                .iter()
                .filter_map(|p| theorems::theta_profile(p).ok())
                .map(|pr| {
                    let theta: Vec<Value> = pr
                        .theta
                        .iter()
                        .map(|(&(i, j), t)| serde_json::json!({"i": i, "j": j, "theta": t.to_string()}))
                        .collect();
                    serde_json::json!({"m": pr.m, "total": pr.total.to_string(), "theta": theta})
                })
                .collect();
            OutputDoc { details: Some(Value::Array(profiles)), ..OutputDoc::from_verdict("multilinear", &v, limits) }
        }
        Command::Univariate { poly } => {
            let p = one_var(poly)?;
            let v = theorem_verdict(theorems::univariate_decide(&p, cap), "univariate").map_err(usage)?;
            OutputDoc::from_verdict("univariate", &v, limits)
        }
        Command::Central { poly } => {
            let p = one_var(poly)?;
            let v = theorem_verdict(theorems::central_decide(&p, cap), "central").map_err(usage)?;
            OutputDoc::from_verdict("central", &v, limits)
        }
        Command::Power { set } => {
            let v = theorem_verdict(theorems::power_identity_decide(set, cap), "power").map_err(usage)?;
            OutputDoc::from_verdict("power", &v, limits)
        }
        Command::Freshman { set } => {
            let v = theorem_verdict(theorems::freshman_decide(set, cap), "freshman").map_err(usage)?;
            OutputDoc::from_verdict("freshman", &v, limits)
        }
        Command::Check { ring, file } => {
            let ids = read_doc(file)?.identity_set();
            let fam = parse_ring_spec(ring).map_err(UsageError)?;
            let r = make_ring(&fam).map_err(|e| UsageError(e.to_string()))?;
            let mut doc = OutputDoc::new("check", "checked", limits);
            doc.ring = Some(ring_json(&fam));
            doc.p = Some(fam.prime());
            match r.is_identity_set(&ids.polys, ids.vars, CheckMode::Exhaustive { cap }) {
                Ok(IdentityCheck::Holds) => {
                    doc.details = Some(serde_json::json!({"holds": true, "commutative": r.is_commutative().is_none()}))
                }
                Ok(IdentityCheck::Counterexample { tuple, value }) => {
                    let t: Vec<String> = tuple.iter().map(|x| r.format_element(x)).collect();
                    doc.details = Some(serde_json::json!({"holds": false, "tuple": t, "value": r.format_element(&value)}))
                }
                Err(RingError::CapExceeded { needed, cap }) => {
                    doc.verdict = "resource_limit".into();
                    doc.limit = Some(LimitJson { stage: "check".into(), limit: format!("{} > {}", needed, cap) });
                }
                Err(e) => return Err(UsageError(e.to_string())),
            }
            doc
        }
        Command::Certify { p, file } => {
            if !crate::commalg::is_prime(*p) {
                return Err(UsageError(format!("{} is not prime", p)));
            }
            let d = read_doc(file)?;
            let mut all = true;
            let mut items = Vec::new();
            for poly in &d.ids {
                match theorems::min_ring_certify(poly, *p) {
                    Ok(c) => {
                        let qh: Vec<Value> = c
                            .q_hat
                            .iter()
                            .map(|(&(i, j), q)| serde_json::json!({"i": i, "j": j, "q": q.to_string_with(&d.vars)}))
                            .collect();
                        let dd: Vec<Value> = c
                            .d
                            .iter()
                            .map(|(&(i, j), q)| serde_json::json!({"i": i, "j": j, "d": q.to_string_with(&d.vars)}))
                            .collect();
                        items.push(serde_json::json!({"certified": true, "generators": c.generators, "q_hat": qh, "d": dd}));
                    }
                    Err(f) => {
                        all = false;
                        items.push(serde_json::json!({"certified": false, "stage": f.stage, "term": f.term}));
                    }
                }
            }
            let mut doc = OutputDoc::new("certify", if all { "certified" } else { "not_certified" }, limits);
            doc.ring = Some(RingJson::MinRing { p: *p });
            doc.p = Some(*p);
            doc.details = Some(Value::Array(items));
            doc
        }
        Command::Verify { witness, file } => {
            let ids = read_doc(file)?.identity_set();
            let text = std::fs::read_to_string(witness).map_err(|e| UsageError(format!("{}: {}", witness, e)))?;
            let v: Value = serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {}", witness, e)))?;
            let ring_v = v.get("ring").cloned().unwrap_or(v);
            let rj: RingJson = serde_json::from_value(ring_v).map_err(|e| UsageError(format!("{}: {}", witness, e)))?;
            let mut doc = OutputDoc::new("verify", "verified", limits);
            doc.ring = Some(rj.clone());
            match family_from_json(&rj) {
                Err(e) => {
                    doc.verdict = "verify_failed".into();
                    doc.details = Some(json_str(e));
                }
                Ok(fam) => {
                    doc.p = Some(fam.prime());
                    match verify_witness(&ids, &fam, &opts) {
                        Ok(Some(w)) => doc.pair = w.pair.map(|(a, b)| [a, b]),
                        Ok(None) => doc.verdict = "verify_failed".into(),
                        Err(l) => {
                            doc.verdict = "resource_limit".into();
                            doc.limit = Some(LimitJson { stage: l.stage, limit: l.limit });
                        }
                    }
                }
            }
            doc
        }
        Command::Oracle { file } => {
            let ids = read_doc(file)?.identity_set();
            let v = decide_all(&ids, &opts);
            let bounds = SearchBounds { eval_cap: cap, ..SearchBounds::default() };
            let rep = cross_validate(&ids, &v, &bounds);
            let mut doc = OutputDoc::from_verdict("oracle", &v, limits);
            let agree = rep.agree;
            doc.details = Some(json_str(rep));
            if !agree {
                doc.verdict = "verify_failed".into();
            }
            doc
        }
    };
    Ok(doc)
}

/// Runs the tool on `args` (including the program name), returning the exit
/// code and the text for stdout.
pub fn run<I, T>(args: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return (code, e.to_string());
        }
    };
    let start = Instant::now();
    match execute(&cli) {
        Ok(mut doc) => {
            if cli.timing {
                doc.timing_ms = Some(start.elapsed().as_millis() as u64);
            }
            let text = if cli.json { doc.to_json() } else { doc.to_text() };
            (doc.exit_code(), text)
        }
        Err(UsageError(msg)) => {
            if cli.json {
                let v = serde_json::json!({"schema_version": SCHEMA_VERSION, "verdict": "error", "error": msg});
                (2, v.to_string())
            } else {
                (2, format!("error: {}", msg))
            }
        }
    }
}

pub fn main() -> i32 {
    let (code, text) = run(std::env::args_os());
    if code == 2 {
        eprintln!("{}", text);
    } else {
        println!("{}", text);
    }
    code
}
