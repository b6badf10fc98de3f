//! Gröbner–Shirshov bases for two-sided ideals of `Z/p^a{X_1,...,X_s}`.
//!
//! Monomials are ordered deg-lex with `X_1 < X_2 < ...` (so `Y > X`).
//! Leading coefficients are normalized to powers of `p`. Completion closes
//! under inclusion and overlap compositions of leading words and under the
//! annihilator composition `p^{a-e} f` of an element with leading coefficient
//! `p^e`. Normal forms reduce each coefficient modulo the smallest leading
//! power of `p` that divides its word, which makes them canonical once the
//! basis is complete.
//!
//! Dump format: one element per line, terms in descending order, each term
//! `c w` where `w` is a string over `X Y Z W V U T S` and `1` stands for the
//! empty word; terms are joined by ` + `.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::freealg::{NcPoly, VarId, Word};

const LETTERS: &[u8] = b"XYZWVUTS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompletionLimits {
    pub max_basis_size: usize,
    pub max_degree: usize,
    pub max_steps: u64,
}

impl Default for CompletionLimits {
    fn default() -> Self {
        CompletionLimits { max_basis_size: 20_000, max_degree: 40, max_steps: 1_000_000 }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GsError {
    #[error("zero polynomial has no initial term")]
    ZeroPolynomial,
    #[error("completion limit reached: {limit}")]
    Resource { limit: String, partial: Box<GsBasis> },
    #[error("basis is not complete")]
    Incomplete,
    #[error("malformed dump line {line}: {msg}")]
    BadDump { line: usize, msg: String },
}

/// How a basis element arose.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Input(usize),
    Annihilator(u64),
    Composition(u64, u64),
    Requeued(u64),
}

/// A sparse polynomial over `Z/q`, `q = p^a`.
pub type Terms = BTreeMap<Word, u64>;

/// Basis element with normalized leading coefficient `p^e`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GsPoly {
    pub terms: Terms,
    pub lead: Word,
    pub e: u32,
    pub id: u64,
    pub origin: Origin,
}

/// Coefficient arithmetic for `Z/p^a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Coeffs {
    pub p: u64,
    pub a: u32,
    pub q: u64,
}

impl Coeffs {
    pub fn new(p: u64, a: u32) -> Coeffs {
        Coeffs { p, a, q: p.pow(a) }
    }

    pub fn val(&self, c: u64) -> u32 {
        let mut c = c % self.q;
        if c == 0 {
            return self.a;
        }
        let mut k = 0;
        while c % self.p == 0 {
            c /= self.p;
            k += 1;
        }
        k
    }

    fn mul(&self, x: u64, y: u64) -> u64 {
        ((x as u128 * y as u128) % self.q as u128) as u64
    }

    fn inv_unit(&self, u: u64) -> u64 {
        let e = BigInt::from(u).extended_gcd(&BigInt::from(self.q));
        e.x.mod_floor(&BigInt::from(self.q)).to_u64().unwrap()
    }

    pub fn from_int(&self, c: &BigInt) -> u64 {
        c.mod_floor(&BigInt::from(self.q)).to_u64().unwrap()
    }
}

fn add_into(t: &mut Terms, w: Word, c: u64, q: u64) {
    if c % q == 0 {
        return;
    }
    use std::collections::btree_map::Entry;
    match t.entry(w) {
        Entry::Vacant(v) => {
            v.insert(c % q);
        }
        Entry::Occupied(mut o) => {
            let s = (*o.get() + c % q) % q;
            if s == 0 {
                o.remove();
            } else {
                *o.get_mut() = s;
            }
        }
    }
}

/// `t += k * u * g * v`.
fn add_multiple(t: &mut Terms, k: u64, u: &[VarId], g: &Terms, v: &[VarId], cf: &Coeffs) {
    for (w, c) in g {
        let mut x = Vec::with_capacity(u.len() + w.len() + v.len());
        x.extend_from_slice(u);
        x.extend_from_slice(&w.0);
        x.extend_from_slice(v);
        add_into(t, Word(x), cf.mul(k, *c), cf.q);
    }
}

fn scaled(t: &Terms, k: u64, cf: &Coeffs) -> Terms {
    let mut r = Terms::new();
    for (w, c) in t {
        add_into(&mut r, w.clone(), cf.mul(k, *c), cf.q);
    }
    r
}

pub fn to_terms(f: &NcPoly, cf: &Coeffs) -> Terms {
    let mut t = Terms::new();
    for (w, c) in f.terms() {
        add_into(&mut t, w.clone(), cf.from_int(c), cf.q);
    }
    t
}

pub fn from_terms(t: &Terms) -> NcPoly {
    NcPoly::from_terms(t.iter().map(|(w, c)| (w.clone(), BigInt::from(*c))))
}

/// Normalized initial term `(p^e, word)` of `f` over `Z/p^a`.
pub fn initial_term(f: &NcPoly, p: u64, a: u32) -> Result<(u64, Word), GsError> {
    let cf = Coeffs::new(p, a);
    let t = to_terms(f, &cf);
    let (w, c) = t.iter().next_back().ok_or(GsError::ZeroPolynomial)?;
    Ok((p.pow(cf.val(*c)), w.clone()))
}

/// All positions where `small` occurs inside `big`.
fn occurrences(big: &[VarId], small: &[VarId]) -> Vec<usize> {
    if small.len() > big.len() {
        return Vec::new();
    }
    (0..=big.len() - small.len()).filter(|&i| &big[i..i + small.len()] == small).collect()
}

/// A (possibly partial) Gröbner–Shirshov basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GsBasis {
    pub coeffs: Coeffs,
    pub elements: Vec<GsPoly>,
    pub complete: bool,
    pub limits: CompletionLimits,
}

impl GsBasis {
    pub fn p(&self) -> u64 {
        self.coeffs.p
    }

    pub fn a(&self) -> u32 {
        self.coeffs.a
    }

    /// Best reducer for a word: smallest `e`, then earliest element.
    fn reducer(&self, w: &Word) -> Option<(usize, usize)> {
        let mut best: Option<(u32, usize, usize)> = None;
        for (i, g) in self.elements.iter().enumerate() {
            if g.lead.len() > w.len() {
                continue;
            }
            if best.map_or(false, |(e, _, _)| g.e >= e) {
                continue;
            }
            if let Some(&pos) = occurrences(&w.0, &g.lead.0).first() {
                best = Some((g.e, i, pos));
                if g.e == 0 {
                    break;
                }
            }
        }
        best.map(|(_, i, pos)| (i, pos))
    }

    /// Full reduction of `t` against the basis.
    pub fn reduce_terms(&self, mut work: Terms) -> Terms {
        let cf = self.coeffs;
        let mut out = Terms::new();
        while let Some((w, c)) = work.pop_last() {
            match self.reducer(&w) {
                None => {
                    out.insert(w, c);
                }
                Some((i, pos)) => {
                    let g = &self.elements[i];
                    let pe = cf.p.pow(g.e);
                    let (k, r) = (c / pe, c % pe);
                    if k > 0 {
                        let u = &w.0[..pos];
                        let v = &w.0[pos + g.lead.len()..];
                        let neg = (cf.q - k % cf.q) % cf.q;
                        for (gw, gc) in g.terms.iter().rev().skip(1) {
                            let mut x = Vec::with_capacity(u.len() + gw.len() + v.len());
                            x.extend_from_slice(u);
                            x.extend_from_slice(&gw.0);
                            x.extend_from_slice(v);
                            add_into(&mut work, Word(x), cf.mul(neg, *gc), cf.q);
                        }
                    }
                    if r > 0 {
                        out.insert(w, r);
                    }
                }
            }
        }
        out
    }

    pub fn normal_form(&self, f: &NcPoly) -> NcPoly {
        from_terms(&self.reduce_terms(to_terms(f, &self.coeffs))).reduce_mod(&BigInt::from(self.coeffs.q))
    }

    pub fn is_member(&self, f: &NcPoly) -> bool {
        self.reduce_terms(to_terms(f, &self.coeffs)).is_empty()
    }

    /// Canonical text dump.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for g in &self.elements {
            let _ = writeln!(s, "{}", format_terms(&g.terms));
        }
        s
    }

    /// Rebuilds a basis from [`GsBasis::dump`] output (marked complete).
    pub fn from_dump(p: u64, a: u32, text: &str) -> Result<GsBasis, GsError> {
        let cf = Coeffs::new(p, a);
        let mut elements = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let t = parse_terms(line, &cf).map_err(|msg| GsError::BadDump { line: ln + 1, msg })?;
            let (w, c) = t.iter().next_back().ok_or(GsError::BadDump { line: ln + 1, msg: "empty".into() })?;
            let e = cf.val(*c);
            if p.pow(e) != *c {
                return Err(GsError::BadDump { line: ln + 1, msg: "leading coefficient not a power of p".into() });
            }
            elements.push(GsPoly { lead: w.clone(), e, terms: t, id: elements.len() as u64, origin: Origin::Input(ln) });
        }
        Ok(GsBasis { coeffs: cf, elements, complete: true, limits: CompletionLimits::default() })
    }
}

pub fn format_word(w: &Word) -> String {
    if w.is_empty() {
        "1".into()
    } else {
        w.0.iter().map(|&l| LETTERS[l as usize - 1] as char).collect()
    }
}

fn format_terms(t: &Terms) -> String {
    let parts: Vec<String> = t.iter().rev().map(|(w, c)| format!("{} {}", c, format_word(w))).collect();
    parts.join(" + ")
}

fn parse_terms(line: &str, cf: &Coeffs) -> Result<Terms, String> {
    let mut t = Terms::new();
    for part in line.split(" + ") {
        let mut it = part.split_whitespace();
        let c: u64 = it.next().ok_or("missing coefficient")?.parse().map_err(|_| "bad coefficient")?;
        let ws = it.next().ok_or("missing word")?;
        if it.next().is_some() {
            return Err("trailing input".into());
        }
        let w = if ws == "1" {
            Word::empty()
        } else {
            let mut v = Vec::new();
            for ch in ws.bytes() {
                let k = LETTERS.iter().position(|&l| l == ch).ok_or("unknown letter")?;
                v.push(k as VarId + 1);
            }
            Word(v)
        };
        add_into(&mut t, w, c, cf.q);
    }
    Ok(t)
}

/// Incremental completion engine.
#[derive(Clone, Debug)]
pub struct Completer {
    basis: GsBasis,
    queue: BTreeSet<(usize, u64)>,
    pending: BTreeMap<u64, (Terms, Origin)>,
    seq: u64,
    next_id: u64,
    steps: u64,
    pub interreduce: bool,
}

impl Completer {
    pub fn new(p: u64, a: u32, limits: CompletionLimits) -> Completer {
        Completer {
            basis: GsBasis { coeffs: Coeffs::new(p, a), elements: Vec::new(), complete: true, limits },
            queue: BTreeSet::new(),
            pending: BTreeMap::new(),
            seq: 0,
            next_id: 0,
            steps: 0,
            interreduce: true,
        }
    }

    pub fn basis(&self) -> &GsBasis {
        &self.basis
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn enqueue(&mut self, t: Terms, origin: Origin) {
        if t.is_empty() {
            return;
        }
        let deg = t.keys().next_back().unwrap().len();
        self.queue.insert((deg, self.seq));
        self.pending.insert(self.seq, (t, origin));
        self.seq += 1;
        self.basis.complete = false;
    }

    /// Adds a generator (reduced modulo `p^a`).
    pub fn push(&mut self, f: &NcPoly) {
        let t = to_terms(f, &self.basis.coeffs);
        let idx = self.seq as usize;
        self.enqueue(t, Origin::Input(idx));
    }

    pub fn push_terms(&mut self, t: Terms) {
        let idx = self.seq as usize;
        self.enqueue(t, Origin::Input(idx));
    }

    fn fail(&self, limit: &str) -> GsError {
        GsError::Resource { limit: limit.into(), partial: Box::new(self.basis.clone()) }
    }

    /// Runs completion until the queue is empty or a limit is hit.
    pub fn run(&mut self) -> Result<(), GsError> {
        let cf = self.basis.coeffs;
        let limits = self.basis.limits;
        while let Some(key) = self.queue.pop_first() {
            self.steps += 1;
            if self.steps > limits.max_steps {
                return Err(self.fail("max_steps"));
            }
            let (t, origin) = self.pending.remove(&key.1).unwrap();
            let r = self.basis.reduce_terms(t);
            let (lw, lc) = match r.iter().next_back() {
                None => continue,
                Some((w, c)) => (w.clone(), *c),
            };
            if lw.len() > limits.max_degree {
                return Err(self.fail("max_degree"));
            }
            let e = cf.val(lc);
            let unit = lc / cf.p.pow(e);
            let r = scaled(&r, cf.inv_unit(unit), &cf);
            let id = self.next_id;
            self.next_id += 1;
            let h = GsPoly { terms: r, lead: lw, e, id, origin };

            if self.interreduce {
                let mut keep = Vec::with_capacity(self.basis.elements.len());
                let old = std::mem::take(&mut self.basis.elements);
                for g in old {
                    if h.e <= g.e && !occurrences(&g.lead.0, &h.lead.0).is_empty() {
                        let gid = g.id;
                        self.enqueue(g.terms, Origin::Requeued(gid));
                    } else {
                        keep.push(g);
                    }
                }
                self.basis.elements = keep;
            }

            let comps = self.compositions(&h);
            self.basis.elements.push(h);
            if self.basis.elements.len() > limits.max_basis_size {
                return Err(self.fail("max_basis_size"));
            }
            for (t, o) in comps {
                self.enqueue(t, o);
            }
        }
        self.basis.complete = true;
        Ok(())
    }

    /// Compositions of `h` with itself and every current basis element, plus
    /// the annihilator composition of `h`.
    fn compositions(&self, h: &GsPoly) -> Vec<(Terms, Origin)> {
        let cf = self.basis.coeffs;
        let mut out = Vec::new();
        if h.e > 0 {
            out.push((scaled(&h.terms, cf.p.pow(cf.a - h.e), &cf), Origin::Annihilator(h.id)));
        }
        let mut partners: Vec<&GsPoly> = self.basis.elements.iter().collect();
        partners.push(h);
        for g in partners {
            for (f1, f2) in [(h, g), (g, h)] {
                let m = f1.e.max(f2.e);
                let k1 = cf.p.pow(m - f1.e);
                let k2 = cf.q - cf.p.pow(m - f2.e) % cf.q;
                let (w1, w2) = (&f1.lead.0, &f2.lead.0);
                // inclusion: w1 = u w2 v
                if f1.id != f2.id {
                    for pos in occurrences(w1, &w2[..]) {
                        let mut t = scaled(&f1.terms, k1, &cf);
                        add_multiple(&mut t, k2, &w1[..pos], &f2.terms, &w1[pos + w2.len()..], &cf);
                        out.push((t, Origin::Composition(f1.id, f2.id)));
                    }
                }
                // overlap: w1 = u s, w2 = s v
                for sl in 1..w1.len().min(w2.len()) {
                    if w1[w1.len() - sl..] == w2[..sl] {
                        let mut t = Terms::new();
                        add_multiple(&mut t, k1, &[], &f1.terms, &w2[sl..], &cf);
                        add_multiple(&mut t, k2, &w1[..w1.len() - sl], &f2.terms, &[], &cf);
                        out.push((t, Origin::Composition(f1.id, f2.id)));
                    }
                }
                if f1.id == f2.id {
                    break;
                }
            }
        }
        out
    }

    /// Sorts elements and reduces tails, for canonical output.
    pub fn finish(&mut self) -> GsBasis {
        let mut elems = std::mem::take(&mut self.basis.elements);
        elems.sort_by(|x, y| (&x.lead, x.e).cmp(&(&y.lead, y.e)));
        for i in 0..elems.len() {
            let mut tail = elems[i].terms.clone();
            let lead = tail.pop_last().unwrap();
            let others = GsBasis {
                coeffs: self.basis.coeffs,
                elements: elems.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| g.clone()).collect(),
                complete: false,
                limits: self.basis.limits,
            };
            let mut t = others.reduce_terms(tail);
            t.insert(lead.0, lead.1);
            elems[i].terms = t;
        }
        self.basis.elements = elems;
        self.basis.clone()
    }
}

/// Completes the ideal generated by `generators` over `Z/p^a`.
pub fn complete(generators: &[NcPoly], p: u64, a: u32, limits: CompletionLimits) -> Result<GsBasis, GsError> {
    let mut c = Completer::new(p, a, limits);
    for g in generators {
        c.push(g);
    }
    c.run()?;
    Ok(c.finish())
}

/// Whether `X_1 X_2 - X_2 X_1` lies in the ideal.
pub fn is_commutative_presentation(basis: &GsBasis) -> Result<bool, GsError> {
    if !basis.complete {
        return Err(GsError::Incomplete);
    }
    Ok(basis.is_member(&NcPoly::commutator(&NcPoly::var(1), &NcPoly::var(2))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> NcPoly {
        NcPoly::var(1)
    }
    fn y() -> NcPoly {
        NcPoly::var(2)
    }

    #[test]
    fn initial_terms() {
        let f = x().mul(&y()).sub(&y().mul(&x()));
        assert_eq!(initial_term(&f, 2, 2).unwrap(), (1, Word(vec![2, 1])));
        let g = NcPoly::from_words(&[(&[1, 1], 2), (&[1], 1)]);
        assert_eq!(initial_term(&g, 2, 2).unwrap(), (2, Word(vec![1, 1])));
        let h = NcPoly::from_words(&[(&[2, 1], 2)]);
        assert_eq!(initial_term(&h, 2, 3).unwrap(), (2, Word(vec![2, 1])));
        assert_eq!(initial_term(&NcPoly::zero(), 2, 1), Err(GsError::ZeroPolynomial));
    }

    #[test]
    fn z4_commutative() {
        let c = NcPoly::commutator(&y(), &x());
        let b = complete(&[NcPoly::constant(2), c.clone()], 2, 2, CompletionLimits::default()).unwrap();
        assert!(is_commutative_presentation(&b).unwrap());
        assert_eq!(b.normal_form(&y().mul(&x())), x().mul(&y()).reduce_mod(&BigInt::from(4)));
    }

    #[test]
    fn f2_yx() {
        let b = complete(&[y().mul(&x())], 2, 1, CompletionLimits::default()).unwrap();
        assert!(!is_commutative_presentation(&b).unwrap());
        let nf = b.normal_form(&NcPoly::commutator(&x(), &y()));
        assert_eq!(nf, x().mul(&y()).reduce_mod(&BigInt::from(2)));
        let e = GsBasis { elements: vec![], ..b.clone() };
        assert_eq!(e.normal_form(&x()), x().reduce_mod(&BigInt::from(2)));
    }

    #[test]
    fn dump_round_trip() {
        let c = NcPoly::commutator(&y(), &x());
        let b = complete(&[NcPoly::constant(2).mul(&x()), c], 2, 2, CompletionLimits::default()).unwrap();
        let d = b.dump();
        let b2 = GsBasis::from_dump(2, 2, &d).unwrap();
        assert_eq!(b2.dump(), d);
    }
}
