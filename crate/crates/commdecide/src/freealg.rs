//! The free associative algebra over `Z` (optionally `Z/m`): words, polynomials,
//! substitution, the straightened transversal, abelianization and the two
//! commutator-ideal reductions used by the B and 𝒜_p procedures.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::commalg::{CPoly, Domain};

/// 1-based variable index.
pub type VarId = u8;

/// A word in the variables; the empty word is the identity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<VarId>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(v: VarId) -> Self {
        Word(vec![v])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Letters sorted ascending: `X_1^{i_1} ... X_s^{i_s}`.
    pub fn sorted(&self) -> Word {
        let mut v = self.0.clone();
        v.sort_unstable();
        Word(v)
    }

    pub fn is_sorted(&self) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn max_var(&self) -> VarId {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Exponent vector of the sorted form with `nvars` entries.
    pub fn exponents(&self, nvars: usize) -> Vec<u32> {
        let mut e = vec![0u32; nvars];
        for &l in &self.0 {
            e[l as usize - 1] += 1;
        }
        e
    }

    pub fn from_exponents(e: &[u32]) -> Word {
        let mut v = Vec::new();
        for (i, &k) in e.iter().enumerate() {
            for _ in 0..k {
                v.push(i as VarId + 1);
            }
        }
        Word(v)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FreeAlgError {
    #[error("modulus mismatch")]
    ModulusMismatch,
    #[error("variable X{0} has no assignment")]
    UnassignedVariable(VarId),
}

/// Binary/unary operation selector for [`arith`].
#[derive(Clone, Debug)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Scale(BigInt),
    Mod(BigInt),
}

/// Noncommutative polynomial with deg-lex ordered terms.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct NcPoly {
    terms: BTreeMap<Word, BigInt>,
    modulus: Option<BigInt>,
}

impl NcPoly {
    pub fn zero() -> Self {
        NcPoly::default()
    }

    pub fn one() -> Self {
        Self::constant(1)
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        Self::monomial(Word::empty(), c)
    }

    pub fn var(v: VarId) -> Self {
        assert!(v >= 1, "variables are 1-based");
        Self::monomial(Word::letter(v), 1)
    }

    pub fn monomial(w: Word, c: impl Into<BigInt>) -> Self {
        let mut p = Self::zero();
        p.add_term(w, c.into());
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Word, BigInt)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (w, c) in terms {
            p.add_term(w, c);
        }
        p
    }

    /// Convenience: terms given as (letters, coefficient).
    pub fn from_words(terms: &[(&[VarId], i64)]) -> Self {
        Self::from_terms(terms.iter().map(|(w, c)| (Word(w.to_vec()), BigInt::from(*c))))
    }

    /// `[a, b] = ab - ba`.
    pub fn commutator(a: &NcPoly, b: &NcPoly) -> NcPoly {
        a.mul(b).sub(&b.mul(a))
    }

    pub fn modulus(&self) -> Option<&BigInt> {
        self.modulus.as_ref()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Word, &BigInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, w: &Word) -> BigInt {
        self.terms.get(w).cloned().unwrap_or_default()
    }

    /// Deg-lex greatest term.
    pub fn leading(&self) -> Option<(&Word, &BigInt)> {
        self.terms.iter().next_back()
    }

    pub fn degree(&self) -> Option<usize> {
        self.leading().map(|(w, _)| w.len())
    }

    pub fn min_degree(&self) -> Option<usize> {
        self.terms.keys().map(|w| w.len()).min()
    }

    pub fn max_var(&self) -> VarId {
        self.terms.keys().map(|w| w.max_var()).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, w: Word, c: BigInt) {
        use std::collections::btree_map::Entry;
        let norm = |c: BigInt, m: &Option<BigInt>| match m {
            Some(m) => c.mod_floor(m),
            None => c,
        };
        if c.is_zero() {
            return;
        }
        match self.terms.entry(w) {
            Entry::Vacant(v) => {
                let c = norm(c, &self.modulus);
                if !c.is_zero() {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                let s = norm(o.get() + c, &self.modulus);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn same_modulus(&self, other: &NcPoly) -> Result<Option<BigInt>, FreeAlgError> {
        match (&self.modulus, &other.modulus) {
            (None, None) => Ok(None),
            (Some(a), Some(b)) if a == b => Ok(Some(a.clone())),
            (Some(a), None) | (None, Some(a)) if other.is_zero() || self.is_zero() => Ok(Some(a.clone())),
            _ => Err(FreeAlgError::ModulusMismatch),
        }
    }

    fn with_modulus(m: Option<BigInt>) -> NcPoly {
        NcPoly { terms: BTreeMap::new(), modulus: m }
    }

    pub fn try_add(&self, other: &NcPoly) -> Result<NcPoly, FreeAlgError> {
        let m = self.same_modulus(other)?;
        let mut r = Self::with_modulus(m);
        for (w, c) in self.terms.iter().chain(other.terms.iter()) {
            r.add_term(w.clone(), c.clone());
        }
        Ok(r)
    }

    pub fn try_mul(&self, other: &NcPoly) -> Result<NcPoly, FreeAlgError> {
        let m = self.same_modulus(other)?;
        let mut acc: BTreeMap<Word, BigInt> = BTreeMap::new();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                *acc.entry(w1.concat(w2)).or_default() += c1 * c2;
            }
        }
        let mut r = Self::with_modulus(m);
        for (w, c) in acc {
            r.add_term(w, c);
        }
        Ok(r)
    }

    /// Panics on modulus mismatch; see [`arith`] for the checked form.
    pub fn add(&self, other: &NcPoly) -> NcPoly {
        self.try_add(other).expect("modulus mismatch")
    }

    pub fn sub(&self, other: &NcPoly) -> NcPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &NcPoly) -> NcPoly {
        self.try_mul(other).expect("modulus mismatch")
    }

    pub fn neg(&self) -> NcPoly {
        self.scale(&BigInt::from(-1))
    }

    pub fn scale(&self, k: &BigInt) -> NcPoly {
        let mut r = Self::with_modulus(self.modulus.clone());
        for (w, c) in &self.terms {
            r.add_term(w.clone(), c * k);
        }
        r
    }

    /// Reduces coefficients into `{0..m-1}` and tags the modulus.
    pub fn reduce_mod(&self, m: &BigInt) -> NcPoly {
        let mut r = Self::with_modulus(Some(m.clone()));
        for (w, c) in &self.terms {
            r.add_term(w.clone(), c.clone());
        }
        r
    }

    /// Drops the modulus tag, keeping residues as integers.
    pub fn lift(&self) -> NcPoly {
        NcPoly { terms: self.terms.clone(), modulus: None }
    }

    pub fn pow(&self, k: u32) -> NcPoly {
        let mut r = Self::with_modulus(self.modulus.clone());
        r.add_term(Word::empty(), BigInt::one());
        for _ in 0..k {
            r = r.mul(self);
        }
        r
    }

    /// Homomorphic image under `X_i -> assignment[i-1]`.
    pub fn substitute(&self, assignment: &[NcPoly]) -> Result<NcPoly, FreeAlgError> {
        if let Some(v) = self.terms.keys().flat_map(|w| w.0.iter()).find(|&&v| v as usize > assignment.len()) {
            return Err(FreeAlgError::UnassignedVariable(*v));
        }
        let mut r = Self::with_modulus(self.modulus.clone());
        for (w, c) in &self.terms {
            let mut t = NcPoly::constant(c.clone());
            if let Some(m) = &self.modulus {
                t = t.reduce_mod(m);
            }
            for &l in &w.0 {
                t = t.try_mul(&assignment[l as usize - 1])?;
            }
            r = r.try_add(&t)?;
        }
        Ok(r)
    }

    /// Each word replaced by its letter-sorted form.
    pub fn bar_transversal(&self) -> NcPoly {
        let mut r = Self::with_modulus(self.modulus.clone());
        for (w, c) in &self.terms {
            r.add_term(w.sorted(), c.clone());
        }
        r
    }

    /// Image in the commutative polynomial ring in `nvars` variables.
    pub fn abelianize(&self, nvars: usize) -> CPoly {
        CPoly::from_terms(nvars, Domain::Int, self.terms.iter().map(|(w, c)| (w.exponents(nvars), c.clone())))
    }

    /// Sorted-word polynomial from a commutative one.
    pub fn from_cpoly(p: &CPoly) -> NcPoly {
        NcPoly::from_terms(p.terms().map(|(e, c)| (Word::from_exponents(e), c.clone())))
    }

    /// Gcd of the coefficients; 0 for the zero polynomial.
    pub fn content_gcd(&self) -> BigInt {
        self.terms.values().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// Every word has each of `X_1..X_m` exactly once.
    pub fn is_multilinear(&self, m: usize) -> bool {
        !self.is_zero()
            && self.terms.keys().all(|w| {
                let mut v = w.0.clone();
                v.sort_unstable();
                v.len() == m && v.iter().enumerate().all(|(i, &l)| l as usize == i + 1)
            })
    }

    /// Only `X_1` occurs.
    pub fn is_univariate(&self) -> bool {
        self.terms.keys().all(|w| w.0.iter().all(|&l| l == 1))
    }

    pub fn to_string_with(&self, names: &[String]) -> String {
        let name = |v: VarId| {
            names.get(v as usize - 1).cloned().unwrap_or_else(|| format!("X{}", v))
        };
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (idx, (w, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let a = c.abs();
            let mut factors: Vec<String> = Vec::new();
            let mut i = 0;
            while i < w.0.len() {
                let l = w.0[i];
                let mut j = i;
                while j < w.0.len() && w.0[j] == l {
                    j += 1;
                }
                let k = j - i;
                factors.push(if k == 1 { name(l) } else { format!("{}^{}", name(l), k) });
                i = j;
            }
            if factors.is_empty() {
                out.push_str(&a.to_string());
            } else {
                if !a.is_one() {
                    out.push_str(&a.to_string());
                    out.push('*');
                }
                out.push_str(&factors.join("*"));
            }
        }
        out
    }
}

impl fmt::Display for NcPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = ["X", "Y", "Z", "W"].iter().map(|s| s.to_string()).collect();
        write!(f, "{}", self.to_string_with(&names))
    }
}

/// Checked arithmetic entry point.
pub fn arith(p: &NcPoly, q: &NcPoly, op: ArithOp) -> Result<NcPoly, FreeAlgError> {
    match op {
        ArithOp::Add => p.try_add(q),
        ArithOp::Sub => p.try_add(&q.neg()),
        ArithOp::Mul => p.try_mul(q),
        ArithOp::Scale(c) => Ok(p.scale(&c)),
        ArithOp::Mod(m) => Ok(p.reduce_mod(&m)),
    }
}

/// Target of polynomial evaluation.
pub trait Evaluator {
    type Elem: Clone;
    fn one(&self) -> Self::Elem;
    fn zero(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn scale(&self, a: &Self::Elem, c: &BigInt) -> Self::Elem;
}

/// Evaluates `p` at `vals` (index `i` holds the value of `X_{i+1}`), sharing
/// prefix products between consecutive words.
pub fn eval_with<E: Evaluator>(p: &NcPoly, ev: &E, vals: &[E::Elem]) -> E::Elem {
    let mut total = ev.zero();
    let mut prefix: Vec<E::Elem> = vec![ev.one()];
    let mut prev: &[VarId] = &[];
    for (w, c) in p.terms() {
        let common = prev.iter().zip(&w.0).take_while(|(a, b)| a == b).count();
        prefix.truncate(common + 1);
        for &l in &w.0[common..] {
            let next = ev.mul(prefix.last().unwrap(), &vals[l as usize - 1]);
            prefix.push(next);
        }
        total = ev.add(&total, &ev.scale(prefix.last().unwrap(), c));
        prev = &w.0;
    }
    total
}

// ---------------------------------------------------------------------------
// Commutator-ideal reductions.

/// One adjacent transposition: `u b a v = u a b v - u [a,b] v`, recorded as
/// `coeff * u [a,b] v` with `a < b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwapStep {
    pub left: Word,
    pub a: VarId,
    pub b: VarId,
    pub right: Word,
    pub coeff: BigInt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommTerm {
    pub i: VarId,
    pub j: VarId,
    pub a: NcPoly,
    pub c: NcPoly,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseIForm {
    pub bar: NcPoly,
    pub comm_terms: Vec<CommTerm>,
    /// Exact rewrite steps: `original = bar + sum coeff * left [a,b] right`.
    pub trace: Vec<SwapStep>,
}

impl CaseIForm {
    /// `bar + sum A [X_i,X_j] C`.
    pub fn reassemble(&self) -> NcPoly {
        let mut r = self.bar.clone();
        for t in &self.comm_terms {
            let k = NcPoly::commutator(&NcPoly::var(t.i), &NcPoly::var(t.j));
            r = r.add(&t.a.mul(&k).mul(&t.c));
        }
        r
    }

    /// `bar + sum coeff * left [a,b] right`; equals the input exactly.
    pub fn trace_expansion(&self) -> NcPoly {
        let mut r = self.bar.clone();
        for s in &self.trace {
            let k = NcPoly::commutator(&NcPoly::var(s.a), &NcPoly::var(s.b));
            let t = NcPoly::monomial(s.left.clone(), s.coeff.clone()).mul(&k).mul(&NcPoly::monomial(s.right.clone(), 1));
            r = r.add(&t);
        }
        r
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApForm {
    pub h: NcPoly,
    pub a: BTreeMap<(VarId, VarId), NcPoly>,
}

impl ApForm {
    pub fn reassemble(&self) -> NcPoly {
        let mut r = self.h.clone();
        for (&(i, j), c) in &self.a {
            r = r.add(&c.mul(&NcPoly::commutator(&NcPoly::var(i), &NcPoly::var(j))));
        }
        r
    }
}

/// Bubble-sorts every word, returning the sorted remainder and the swaps.
fn straighten(p: &NcPoly) -> (NcPoly, Vec<SwapStep>) {
    let mut bar = NcPoly::zero();
    let mut trace = Vec::new();
    for (w, c) in p.terms() {
        let mut cur = w.0.clone();
        while let Some(pos) = cur.windows(2).position(|x| x[0] > x[1]) {
            let (b, a) = (cur[pos], cur[pos + 1]);
            trace.push(SwapStep {
                left: Word(cur[..pos].to_vec()),
                a,
                b,
                right: Word(cur[pos + 2..].to_vec()),
                coeff: -c.clone(),
            });
            cur.swap(pos, pos + 1);
        }
        bar.add_term(Word(cur), c.clone());
    }
    (bar, trace)
}

/// Straightens `P` modulo `J^2`.
pub fn reduce_case_i(p: &NcPoly) -> CaseIForm {
    let p = p.lift();
    let (bar, trace) = straighten(&p);
    // bilinear data per pair: (sorted left, sorted right) -> coefficient
    let mut blocks: BTreeMap<(VarId, VarId), BTreeMap<(Word, Word), BigInt>> = BTreeMap::new();
    for s in &trace {
        *blocks
            .entry((s.a, s.b))
            .or_default()
            .entry((s.left.sorted(), s.right.sorted()))
            .or_default() += &s.coeff;
    }
    let mut comm_terms = Vec::new();
    for ((i, j), m) in blocks {
        for (a, c) in factor_bilinear(&m) {
            comm_terms.push(CommTerm { i, j, a, c });
        }
    }
    CaseIForm { bar, comm_terms, trace }
}

/// Rank factorization `M = L * R` over `Z` with `L` of full column rank and
/// `R` in echelon form, via unimodular row operations.
fn factor_bilinear(m: &BTreeMap<(Word, Word), BigInt>) -> Vec<(NcPoly, NcPoly)> {
    let mut rows: Vec<Word> = m.keys().map(|(u, _)| u.clone()).collect();
    rows.sort();
    rows.dedup();
    let mut cols: Vec<Word> = m.keys().map(|(_, v)| v.clone()).collect();
    cols.sort();
    cols.dedup();
    let (nr, nc) = (rows.len(), cols.len());
    let mut h = vec![vec![BigInt::zero(); nc]; nr];
    for ((u, v), c) in m {
        let i = rows.binary_search(u).unwrap();
        let j = cols.binary_search(v).unwrap();
        h[i][j] = c.clone();
    }
    let mut l: Vec<Vec<BigInt>> = (0..nr)
        .map(|i| (0..nr).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    let mut rank = 0;
    for col in 0..nc {
        if rank == nr {
            break;
        }
        // fold every lower row into the pivot row with gcd steps
        for r in rank + 1..nr {
            if h[r][col].is_zero() {
                continue;
            }
            let a = h[rank][col].clone();
            let b = h[r][col].clone();
            let e = a.extended_gcd(&b);
            let (g, x, y) = (e.gcd, e.x, e.y);
            let (ap, bp) = (&a / &g, &b / &g);
            for k in 0..nc {
                let (ri, rj) = (h[rank][k].clone(), h[r][k].clone());
                h[rank][k] = &x * &ri + &y * &rj;
                h[r][k] = -&bp * &ri + &ap * &rj;
            }
            for row in l.iter_mut() {
                let (ci, cj) = (row[rank].clone(), row[r].clone());
                row[rank] = &ap * &ci + &bp * &cj;
                row[r] = -&y * &ci + &x * &cj;
            }
        }
        if !h[rank][col].is_zero() {
            rank += 1;
        }
    }
    (0..rank)
        .map(|k| {
            let a = NcPoly::from_terms((0..nr).map(|i| (rows[i].clone(), l[i][k].clone())));
            let c = NcPoly::from_terms((0..nc).map(|j| (cols[j].clone(), h[k][j].clone())));
            (a, c)
        })
        .collect()
}

/// Reduces `P` modulo `J^2 + ([[X_i,X_j],X_k])`.
pub fn reduce_ap(p: &NcPoly) -> ApForm {
    let p = p.lift();
    let (h, trace) = straighten(&p);
    let mut a: BTreeMap<(VarId, VarId), NcPoly> = BTreeMap::new();
    for s in trace {
        let w = s.left.concat(&s.right).sorted();
        a.entry((s.a, s.b)).or_default().add_term(w, s.coeff);
    }
    a.retain(|_, v| !v.is_zero());
    ApForm { h, a }
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
    fn deg_lex_order() {
        assert!(Word(vec![2, 1]) > Word(vec![1, 2]));
        assert!(Word(vec![1, 1, 1]) > Word(vec![2, 2]));
        assert!(Word(vec![2]) > Word(vec![1]));
    }

    #[test]
    fn arith_examples() {
        assert_eq!(x().mul(&y()).mul(&x()), NcPoly::from_words(&[(&[1, 2, 1], 1)]));
        let c = NcPoly::commutator(&x(), &y());
        assert_eq!(c.add(&y().mul(&x())), x().mul(&y()));
        let p = NcPoly::from_words(&[(&[1, 2], 2), (&[1], 3)]);
        assert_eq!(p.reduce_mod(&BigInt::from(2)).lift(), x());
        let q = x().reduce_mod(&BigInt::from(3));
        assert_eq!(arith(&q, &x().reduce_mod(&BigInt::from(2)), ArithOp::Add), Err(FreeAlgError::ModulusMismatch));
    }

    #[test]
    fn substitute_examples() {
        let c = NcPoly::commutator(&x(), &y());
        assert!(c.substitute(&[x(), x()]).unwrap().is_zero());
        let xy = x().mul(&y());
        assert_eq!(xy.substitute(&[NcPoly::one().add(&x()), y()]).unwrap(), y().add(&xy));
        let p = NcPoly::from_words(&[(&[1, 1, 2, 2], 1), (&[1, 1, 1, 1, 2, 2], 1), (&[1, 2, 1, 2], 1)]);
        assert_eq!(
            p.substitute(&[x(), x()]).unwrap(),
            NcPoly::from_words(&[(&[1, 1, 1, 1], 2), (&[1, 1, 1, 1, 1, 1], 1)])
        );
        assert_eq!(xy.substitute(&[x()]), Err(FreeAlgError::UnassignedVariable(2)));
    }

    #[test]
    fn bar_examples() {
        assert_eq!(NcPoly::from_words(&[(&[1, 2, 1], 1)]).bar_transversal(), NcPoly::from_words(&[(&[1, 1, 2], 1)]));
        assert!(NcPoly::commutator(&x(), &y()).bar_transversal().is_zero());
    }

    #[test]
    fn case_i_simple() {
        let p = NcPoly::from_words(&[(&[1, 2, 1, 2], 1)]);
        let f = reduce_case_i(&p);
        assert_eq!(f.bar, NcPoly::from_words(&[(&[1, 1, 2, 2], 1)]));
        assert_eq!(f.comm_terms.len(), 1);
        let t = &f.comm_terms[0];
        assert_eq!((t.i, t.j), (1, 2));
        let prod = t.a.mul(&t.c);
        assert_eq!(prod, NcPoly::from_words(&[(&[1, 2], -1)]));
        assert_eq!(f.trace_expansion(), p);
        let s = NcPoly::from_words(&[(&[1, 1, 2], 1)]);
        let g = reduce_case_i(&s);
        assert_eq!(g.bar, s);
        assert!(g.comm_terms.is_empty());
    }

    #[test]
    fn ap_simple() {
        let p = NcPoly::from_words(&[(&[1, 2, 1, 2], 1)]);
        let f = reduce_ap(&p);
        assert_eq!(f.h, NcPoly::from_words(&[(&[1, 1, 2, 2], 1)]));
        assert_eq!(f.a[&(1, 2)], NcPoly::from_words(&[(&[1, 2], -1)]));
        let c = reduce_ap(&NcPoly::commutator(&x(), &y()));
        assert!(c.h.is_zero());
        assert_eq!(c.a[&(1, 2)], NcPoly::one());
        let q = x().mul(&x()).add(&y().scale(&BigInt::from(3)));
        let r = reduce_ap(&q);
        assert_eq!(r.h, q);
        assert!(r.a.is_empty());
    }

    #[test]
    fn bilinear_factor_independent() {
        // M = [[2, 4], [3, 6]] has rank 1
        let mut m = BTreeMap::new();
        let (u1, u2) = (Word(vec![1]), Word(vec![2]));
        let (v1, v2) = (Word(vec![1]), Word(vec![1, 1]));
        m.insert((u1.clone(), v1.clone()), BigInt::from(2));
        m.insert((u1.clone(), v2.clone()), BigInt::from(4));
        m.insert((u2.clone(), v1.clone()), BigInt::from(3));
        m.insert((u2.clone(), v2.clone()), BigInt::from(6));
        let f = factor_bilinear(&m);
        assert_eq!(f.len(), 1);
        let mut total: BTreeMap<(Word, Word), BigInt> = BTreeMap::new();
        for (a, c) in &f {
            for (wa, ca) in a.terms() {
                for (wc, cc) in c.terms() {
                    *total.entry((wa.clone(), wc.clone())).or_default() += ca * cc;
                }
            }
        }
        total.retain(|_, v| !v.is_zero());
        assert_eq!(total, m);
    }
}
