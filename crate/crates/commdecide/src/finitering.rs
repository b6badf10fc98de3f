//! Finite fields and finite rings given by structure constants.
//!
//! A [`TabledRing`] is a free module over `Z/m` with a basis and a sparse
//! multiplication table. Elements are coefficient vectors; for exhaustive
//! scans they are also numbered by reading the coefficient vector as a
//! base-`m` integer, basis element 0 least significant.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::commalg::{field_ideal_normal_form, is_prime, CPoly, Domain};
use crate::freealg::{eval_with, Evaluator, NcPoly, Word};

/// Default cap on tuple evaluations in exhaustive mode.
pub const DEFAULT_EVAL_CAP: u64 = 10_000_000;

/// Rings up to this many elements get full addition/multiplication tables.
const INDEX_TABLE_LIMIT: u64 = 2500;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("invalid ring parameters: {0}")]
    InvalidParameters(String),
    #[error("multiplication table is not associative on basis ({0}, {1}, {2})")]
    NotAssociative(usize, usize, usize),
    #[error("identity element check failed")]
    BadIdentity,
    #[error("wrong number of arguments: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("evaluation cap exceeded: {needed} > {cap}")]
    CapExceeded { needed: String, cap: u64 },
    #[error("family has no multiplication table")]
    NotTabled,
}

/// The witness families.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RingFamily {
    Up { p: u64 },
    B { p: u64, n: u32, l: u32 },
    Mat { k: u32, p: u64, n: u32 },
    /// `F_p{x,y}/((x,y)^k + (relation words))`
    TruncFree { p: u64, k: u32, relations: Vec<Word> },
    MinRing { p: u64 },
    /// `Z/p^a{X,Y}` modulo an ideal given by a complete Gröbner–Shirshov basis
    /// in dump format. The ideal contains `p^b (X,Y)^depth`; specializations
    /// were taken over words shorter than `depth`.
    Presented { p: u64, a: u32, b: u32, depth: u32, basis: Vec<String> },
}

impl RingFamily {
    pub fn prime(&self) -> u64 {
        match self {
            RingFamily::Up { p }
            | RingFamily::B { p, .. }
            | RingFamily::Mat { p, .. }
            | RingFamily::TruncFree { p, .. }
            | RingFamily::MinRing { p }
            | RingFamily::Presented { p, .. } => *p,
        }
    }

    /// Short human-readable name.
    pub fn describe(&self) -> String {
        match self {
            RingFamily::Up { p } => format!("U_{}", p),
            RingFamily::B { p, n, l } => format!("B({},{},{})", p, n, l),
            RingFamily::Mat { k, p, n } => format!("M_{}(F_{}^{})", k, p, n),
            RingFamily::TruncFree { p, k, relations } => {
                if relations.is_empty() {
                    format!("F_{}{{x,y}}/(x,y)^{}", p, k)
                } else {
                    let r: Vec<String> = relations.iter().map(word_label).collect();
                    format!("F_{}{{x,y}}/((x,y)^{} + ({}))", p, k, r.join(","))
                }
            }
            RingFamily::MinRing { p } => format!("MinRing({})", p),
            RingFamily::Presented { p, a, basis, .. } => {
                format!("Z/{}^{}{{X,Y}}/I ({} basis elements)", p, a, basis.len())
            }
        }
    }
}

fn word_label(w: &Word) -> String {
    if w.is_empty() {
        return "1".into();
    }
    w.0.iter().map(|&l| if l == 1 { 'x' } else { 'y' }).collect()
}

// ---------------------------------------------------------------------------
// F_{p^n}

/// `F_p[t]/(f)` with `f` the least monic irreducible of degree `n`,
/// comparing coefficient vectors constant term first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fq {
    pub p: u64,
    pub n: u32,
    /// Monic modulus, lowest degree first, length `n + 1`.
    pub modulus: Vec<u64>,
}

impl Fq {
    pub fn new(p: u64, n: u32) -> Result<Fq, RingError> {
        if !is_prime(p) || n == 0 {
            return Err(RingError::InvalidParameters(format!("F_{}^{}", p, n)));
        }
        let modulus = least_irreducible(p, n);
        Ok(Fq { p, n, modulus })
    }

    pub fn order(&self) -> u64 {
        self.p.pow(self.n)
    }

    pub fn zero(&self) -> Vec<u64> {
        vec![0; self.n as usize]
    }

    pub fn one(&self) -> Vec<u64> {
        let mut v = self.zero();
        v[0] = 1;
        v
    }

    /// The class of `t`.
    pub fn generator(&self) -> Vec<u64> {
        let mut v = self.zero();
        if self.n == 1 {
            // t reduces to -f_0
            v[0] = (self.p - self.modulus[0]) % self.p;
        } else {
            v[1] = 1;
        }
        v
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.p).collect()
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let n = self.n as usize;
        let p = self.p;
        let mut prod = vec![0u64; 2 * n];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % p;
            }
        }
        for d in (n..2 * n).rev() {
            let c = prod[d];
            if c == 0 {
                continue;
            }
            prod[d] = 0;
            for (i, &m) in self.modulus[..n].iter().enumerate() {
                prod[d - n + i] = (prod[d - n + i] + c * (p - m)) % p;
            }
        }
        prod.truncate(n);
        prod
    }

    pub fn pow(&self, a: &[u64], mut e: u64) -> Vec<u64> {
        let mut r = self.one();
        let mut b = a.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        r
    }

    /// `x^{p^k}`.
    pub fn frobenius(&self, x: &[u64], k: u32) -> Vec<u64> {
        let mut r = x.to_vec();
        for _ in 0..k {
            r = self.pow(&r, self.p);
        }
        r
    }

    /// Element with index `i` (base-`p` digits, constant term first).
    pub fn element(&self, mut i: u64) -> Vec<u64> {
        let mut v = self.zero();
        for c in v.iter_mut() {
            *c = i % self.p;
            i /= self.p;
        }
        v
    }

    pub fn index(&self, a: &[u64]) -> u64 {
        a.iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }
}

fn poly_rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    crate::commalg::poly_rem_mod_p(a, b, p)
}

fn is_irreducible(f: &[u64], p: u64) -> bool {
    let n = f.len() - 1;
    if n <= 1 {
        return true;
    }
    // trial division by monic polynomials of degree 1..=n/2
    for d in 1..=n / 2 {
        let count = p.pow(d as u32);
        for idx in 0..count {
            let mut g = vec![0u64; d + 1];
            let mut k = idx;
            for c in g.iter_mut().take(d) {
                *c = k % p;
                k /= p;
            }
            g[d] = 1;
            if poly_rem(f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

fn least_irreducible(p: u64, n: u32) -> Vec<u64> {
    let n = n as usize;
    // enumerate (c_0, ..., c_{n-1}) lexicographically with c_0 most significant
    let total = p.pow(n as u32);
    for idx in 0..total {
        let mut f = vec![0u64; n + 1];
        let mut k = idx;
        for i in (0..n).rev() {
            f[i] = k % p;
            k /= p;
        }
        f[n] = 1;
        if is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

// ---------------------------------------------------------------------------
// Tabled rings

/// Finite ring given by structure constants over `Z/modulus`.
#[derive(Clone, Debug)]
pub struct TabledRing {
    pub modulus: u64,
    pub dim: usize,
    pub labels: Vec<String>,
    pub one: Vec<u64>,
    /// `table[i * dim + j]` is the sparse expansion of `b_i * b_j`.
    pub table: Vec<Vec<(usize, u64)>>,
    pub family: RingFamily,
}

/// Result of an identity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IdentityCheck {
    Holds,
    Counterexample { tuple: Vec<Vec<u64>>, value: Vec<u64> },
}

impl IdentityCheck {
    pub fn holds(&self) -> bool {
        matches!(self, IdentityCheck::Holds)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    Exhaustive { cap: u64 },
    Random { trials: u64, seed: u64 },
}

impl TabledRing {
    pub fn new(
        modulus: u64,
        labels: Vec<String>,
        one: Vec<u64>,
        table: Vec<Vec<(usize, u64)>>,
        family: RingFamily,
    ) -> Result<TabledRing, RingError> {
        let dim = labels.len();
        let r = TabledRing { modulus, dim, labels, one, table, family };
        r.check_axioms()?;
        Ok(r)
    }

    fn check_axioms(&self) -> Result<(), RingError> {
        let d = self.dim;
        for i in 0..d {
            let bi = self.basis(i);
            if self.mul(&self.one, &bi) != bi || self.mul(&bi, &self.one) != bi {
                return Err(RingError::BadIdentity);
            }
        }
        for i in 0..d {
            for j in 0..d {
                let ij = self.basis_mul(i, j);
                for k in 0..d {
                    let bk = self.basis(k);
                    let left = self.mul(&ij, &bk);
                    let right = self.mul(&self.basis(i), &self.basis_mul(j, k));
                    if left != right {
                        return Err(RingError::NotAssociative(i, j, k));
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of elements, if it fits in `u64`.
    pub fn size(&self) -> Option<u64> {
        self.modulus.checked_pow(self.dim as u32)
    }

    /// Characteristic exponent data: `modulus = p^m`.
    pub fn prime(&self) -> u64 {
        self.family.prime()
    }

    pub fn zero(&self) -> Vec<u64> {
        vec![0; self.dim]
    }

    pub fn basis(&self, i: usize) -> Vec<u64> {
        let mut v = self.zero();
        v[i] = 1 % self.modulus;
        v
    }

    fn basis_mul(&self, i: usize, j: usize) -> Vec<u64> {
        let mut v = self.zero();
        for &(k, c) in &self.table[i * self.dim + j] {
            v[k] = (v[k] + c) % self.modulus;
        }
        v
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.modulus).collect()
    }

    pub fn scale(&self, a: &[u64], c: u64) -> Vec<u64> {
        a.iter().map(|x| x * c % self.modulus).collect()
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let d = self.dim;
        let m = self.modulus;
        let mut out = vec![0u64; d];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                if y == 0 {
                    continue;
                }
                let xy = x * y % m;
                for &(k, c) in &self.table[i * d + j] {
                    out[k] = (out[k] + xy * c) % m;
                }
            }
        }
        out
    }

    pub fn pow(&self, a: &[u64], mut e: u64) -> Vec<u64> {
        let mut r = self.one.clone();
        let mut b = a.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &b);
            }
            e >>= 1;
            if e > 0 {
                b = self.mul(&b, &b);
            }
        }
        r
    }

    pub fn element(&self, mut idx: u64) -> Vec<u64> {
        let mut v = self.zero();
        for c in v.iter_mut() {
            *c = idx % self.modulus;
            idx /= self.modulus;
        }
        v
    }

    pub fn index(&self, a: &[u64]) -> u64 {
        a.iter().rev().fold(0, |acc, &c| acc * self.modulus + c)
    }

    /// Human-readable element, e.g. `e12+2*e22`.
    pub fn format_element(&self, a: &[u64]) -> String {
        let parts: Vec<String> = a
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| if c == 1 { self.labels[i].clone() } else { format!("{}*{}", c, self.labels[i]) })
            .collect();
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join("+")
        }
    }

    /// A basis pair that does not commute, if any.
    pub fn is_commutative(&self) -> Option<(usize, usize)> {
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                if self.basis_mul(i, j) != self.basis_mul(j, i) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn eval(&self, p: &NcPoly, tuple: &[Vec<u64>]) -> Result<Vec<u64>, RingError> {
        let need = p.max_var() as usize;
        if tuple.len() < need {
            return Err(RingError::Arity { expected: need, got: tuple.len() });
        }
        Ok(eval_with(p, &VecEval(self), tuple))
    }

    /// Checks `P = 0` on the ring. `nvars` fixes the tuple length.
    pub fn is_identity(&self, p: &NcPoly, nvars: usize, mode: CheckMode) -> Result<IdentityCheck, RingError> {
        self.is_identity_set(std::slice::from_ref(p), nvars, mode)
    }

    /// Checks every polynomial in `ps`; a counterexample names the first tuple
    /// (in scan order) on which some polynomial is non-zero.
    pub fn is_identity_set(&self, ps: &[NcPoly], nvars: usize, mode: CheckMode) -> Result<IdentityCheck, RingError> {
        for p in ps {
            if p.max_var() as usize > nvars {
                return Err(RingError::Arity { expected: p.max_var() as usize, got: nvars });
            }
        }
        let ps: Vec<NcPoly> = ps.iter().map(|p| p.lift()).collect();
        match mode {
            CheckMode::Exhaustive { cap } => self.exhaustive(&ps, nvars, cap),
            CheckMode::Random { trials, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let ev = VecEval(self);
                for _ in 0..trials {
                    let tuple: Vec<Vec<u64>> = (0..nvars)
                        .map(|_| (0..self.dim).map(|_| rng.gen_range(0..self.modulus)).collect())
                        .collect();
                    for p in &ps {
                        let v = eval_with(p, &ev, &tuple);
                        if v.iter().any(|&c| c != 0) {
                            return Ok(IdentityCheck::Counterexample { tuple, value: v });
                        }
                    }
                }
                Ok(IdentityCheck::Holds)
            }
        }
    }

    fn tuple_count(&self, nvars: usize) -> Option<u64> {
        self.size()?.checked_pow(nvars as u32)
    }

    fn exhaustive(&self, ps: &[NcPoly], nvars: usize, cap: u64) -> Result<IdentityCheck, RingError> {
        let total = match self.tuple_count(nvars) {
            Some(t) if t <= cap => t,
            _ => {
                return Err(RingError::CapExceeded {
                    needed: format!("{}^{}", self.size().map(|s| s.to_string()).unwrap_or("?".into()), nvars),
                    cap,
                })
            }
        };
        let size = self.size().unwrap();
        if size <= INDEX_TABLE_LIMIT {
            let it = IndexTables::new(self);
            let found = scan_tuples(nvars, size, total, |idx| {
                ps.iter().find_map(|p| {
                    let v = eval_with(p, &it, idx);
                    if v != 0 {
                        Some(v)
                    } else {
                        None
                    }
                })
            });
            Ok(match found {
                None => IdentityCheck::Holds,
                Some((tuple, v)) => IdentityCheck::Counterexample {
                    tuple: tuple.iter().map(|&i| it.vecs[i as usize].clone()).collect(),
                    value: it.vecs[v as usize].clone(),
                },
            })
        } else {
            let ev = VecEval(self);
            let found = scan_tuples(nvars, size, total, |idx| {
                let tuple: Vec<Vec<u64>> = idx.iter().map(|&i| self.element(i as u64)).collect();
                ps.iter().find_map(|p| {
                    let v = eval_with(p, &ev, &tuple);
                    if v.iter().any(|&c| c != 0) {
                        Some(v)
                    } else {
                        None
                    }
                })
            });
            Ok(match found {
                None => IdentityCheck::Holds,
                Some((tuple, v)) => IdentityCheck::Counterexample {
                    tuple: tuple.iter().map(|&i| self.element(i as u64)).collect(),
                    value: v,
                },
            })
        }
    }

    /// Exhaustive check of an arbitrary element-valued function of `nvars`
    /// arguments (used where expanding a polynomial is impractical).
    pub fn is_identity_fn<F>(&self, nvars: usize, cap: u64, f: F) -> Result<IdentityCheck, RingError>
    where
        F: Fn(&TabledRing, &[Vec<u64>]) -> Vec<u64>,
    {
        let total = match self.tuple_count(nvars) {
            Some(t) if t <= cap => t,
            _ => return Err(RingError::CapExceeded { needed: format!("|R|^{}", nvars), cap }),
        };
        let size = self.size().unwrap();
        let found = scan_tuples(nvars, size, total, |idx| {
            let tuple: Vec<Vec<u64>> = idx.iter().map(|&i| self.element(i as u64)).collect();
            let v = f(self, &tuple);
            if v.iter().any(|&c| c != 0) {
                Some(v)
            } else {
                None
            }
        });
        Ok(match found {
            None => IdentityCheck::Holds,
            Some((tuple, v)) => IdentityCheck::Counterexample {
                tuple: tuple.iter().map(|&i| self.element(i as u64)).collect(),
                value: v,
            },
        })
    }

    /// Index-table view for fast repeated arithmetic; `None` when too large.
    pub fn index_tables(&self) -> Option<IndexTables> {
        match self.size() {
            Some(s) if s <= INDEX_TABLE_LIMIT => Some(IndexTables::new(self)),
            _ => None,
        }
    }

    /// Decides `P = 0` on a ring over a prime field by evaluating at generic
    /// points: each variable becomes `sum_k z_{i,k} b_k` with commuting
    /// indeterminates, and every output coordinate must vanish on `F_p`.
    /// Returns `None` if an intermediate coordinate exceeds `term_cap` terms.
    pub fn is_identity_symbolic(&self, p: &NcPoly, nvars: usize, term_cap: usize) -> Option<bool> {
        let pr = self.prime();
        if self.modulus != pr {
            return None;
        }
        let nz = nvars * self.dim;
        let ev = SymbolicEval { ring: self, nz, p: pr, term_cap, overflow: std::cell::Cell::new(false) };
        let vals: Vec<Vec<CPoly>> = (0..nvars)
            .map(|i| (0..self.dim).map(|k| CPoly::var(nz, Domain::ModP(pr), i * self.dim + k)).collect())
            .collect();
        let v = eval_with(&p.lift(), &ev, &vals);
        if ev.overflow.get() {
            return None;
        }
        Some(v.iter().all(|c| c.is_zero()))
    }

    /// Exhaustive when within `cap`, otherwise the symbolic test; `Err` when
    /// neither is feasible.
    pub fn verify_identities(&self, ps: &[NcPoly], nvars: usize, cap: u64) -> Result<bool, RingError> {
        match self.is_identity_set(ps, nvars, CheckMode::Exhaustive { cap }) {
            Ok(r) => Ok(r.holds()),
            Err(RingError::CapExceeded { needed, cap }) => {
                for p in ps {
                    match self.is_identity_symbolic(p, nvars, 200_000) {
                        Some(true) => {}
                        Some(false) => return Ok(false),
                        None => return Err(RingError::CapExceeded { needed, cap }),
                    }
                }
                Ok(true)
            }
            Err(e) => Err(e),
        }
    }
}

/// Odometer over `{0..size-1}^nvars`, first coordinate slowest.
fn scan_tuples<T, F>(nvars: usize, size: u64, total: u64, mut f: F) -> Option<(Vec<u32>, T)>
where
    F: FnMut(&[u32]) -> Option<T>,
{
    let mut cur = vec![0u32; nvars];
    for _ in 0..total {
        if let Some(v) = f(&cur) {
            return Some((cur, v));
        }
        let mut i = nvars;
        while i > 0 {
            i -= 1;
            cur[i] += 1;
            if (cur[i] as u64) < size {
                break;
            }
            cur[i] = 0;
        }
    }
    None
}

struct VecEval<'a>(&'a TabledRing);

impl Evaluator for VecEval<'_> {
    type Elem = Vec<u64>;
    fn one(&self) -> Vec<u64> {
        self.0.one.clone()
    }
    fn zero(&self) -> Vec<u64> {
        self.0.zero()
    }
    fn add(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        self.0.add(a, b)
    }
    fn mul(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        self.0.mul(a, b)
    }
    fn scale(&self, a: &Vec<u64>, c: &BigInt) -> Vec<u64> {
        let m = BigInt::from(self.0.modulus);
        self.0.scale(a, c.mod_floor(&m).to_u64().unwrap())
    }
}

/// Full addition and multiplication tables on element indices.
pub struct IndexTables {
    size: usize,
    modulus: u64,
    add: Vec<u32>,
    mul: Vec<u32>,
    /// `scale[c * size + e]`
    scale: Vec<u32>,
    one: u32,
    pub vecs: Vec<Vec<u64>>,
}

impl IndexTables {
    fn new(r: &TabledRing) -> IndexTables {
        let size = r.size().unwrap() as usize;
        let vecs: Vec<Vec<u64>> = (0..size as u64).map(|i| r.element(i)).collect();
        let mut add = vec![0u32; size * size];
        let mut mul = vec![0u32; size * size];
        // products are bilinear: compute basis products once per pair via vectors
        for a in 0..size {
            for b in 0..size {
                add[a * size + b] = r.index(&r.add(&vecs[a], &vecs[b])) as u32;
                mul[a * size + b] = r.index(&r.mul(&vecs[a], &vecs[b])) as u32;
            }
        }
        let m = r.modulus as usize;
        let mut scale = vec![0u32; m * size];
        for c in 0..m {
            for e in 0..size {
                scale[c * size + e] = r.index(&r.scale(&vecs[e], c as u64)) as u32;
            }
        }
        IndexTables { size, modulus: r.modulus, add, mul, scale, one: r.index(&r.one) as u32, vecs }
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.mul[a as usize * self.size + b as usize]
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        self.add[a as usize * self.size + b as usize]
    }

    pub fn neg(&self, a: u32) -> u32 {
        self.scale[(self.modulus as usize - 1) * self.size + a as usize]
    }

    pub fn one(&self) -> u32 {
        self.one
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        let mut r = self.one;
        let mut b = a;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, b);
            }
            e >>= 1;
            if e > 0 {
                b = self.mul(b, b);
            }
        }
        r
    }
}

impl Evaluator for IndexTables {
    type Elem = u32;
    fn one(&self) -> u32 {
        self.one
    }
    fn zero(&self) -> u32 {
        0
    }
    fn add(&self, a: &u32, b: &u32) -> u32 {
        IndexTables::add(self, *a, *b)
    }
    fn mul(&self, a: &u32, b: &u32) -> u32 {
        IndexTables::mul(self, *a, *b)
    }
    fn scale(&self, a: &u32, c: &BigInt) -> u32 {
        let m = BigInt::from(self.modulus);
        let c = c.mod_floor(&m).to_usize().unwrap();
        self.scale[c * self.size + *a as usize]
    }
}

struct SymbolicEval<'a> {
    ring: &'a TabledRing,
    nz: usize,
    p: u64,
    term_cap: usize,
    overflow: std::cell::Cell<bool>,
}

impl SymbolicEval<'_> {
    fn reduce(&self, c: CPoly) -> CPoly {
        let r = field_ideal_normal_form(&c, self.p, 1);
        if r.num_terms() > self.term_cap {
            self.overflow.set(true);
        }
        r
    }
}

impl Evaluator for SymbolicEval<'_> {
    type Elem = Vec<CPoly>;
    fn one(&self) -> Vec<CPoly> {
        self.ring.one.iter().map(|&c| CPoly::constant(self.nz, Domain::ModP(self.p), c)).collect()
    }
    fn zero(&self) -> Vec<CPoly> {
        vec![CPoly::zero(self.nz, Domain::ModP(self.p)); self.ring.dim]
    }
    fn add(&self, a: &Vec<CPoly>, b: &Vec<CPoly>) -> Vec<CPoly> {
        a.iter().zip(b).map(|(x, y)| x.add(y)).collect()
    }
    fn mul(&self, a: &Vec<CPoly>, b: &Vec<CPoly>) -> Vec<CPoly> {
        let d = self.ring.dim;
        let mut out = self.zero();
        if self.overflow.get() {
            return out;
        }
        for i in 0..d {
            if a[i].is_zero() {
                continue;
            }
            for j in 0..d {
                if b[j].is_zero() || self.ring.table[i * d + j].is_empty() {
                    continue;
                }
                let prod = a[i].mul(&b[j]);
                for &(k, c) in &self.ring.table[i * d + j] {
                    out[k] = out[k].add(&prod.scale(&BigInt::from(c)));
                }
            }
        }
        out.into_iter().map(|c| self.reduce(c)).collect()
    }
    fn scale(&self, a: &Vec<CPoly>, c: &BigInt) -> Vec<CPoly> {
        a.iter().map(|x| x.scale(c)).collect()
    }
}

// ---------------------------------------------------------------------------
// Family constructors

/// Builds the tabled ring of a family.
pub fn make_ring(family: &RingFamily) -> Result<TabledRing, RingError> {
    let bad = |s: String| Err(RingError::InvalidParameters(s));
    match family {
        RingFamily::Up { p } => {
            if !is_prime(*p) {
                return bad(format!("U_{}: p must be prime", p));
            }
            up_ring(*p)
        }
        RingFamily::B { p, n, l } => {
            if !is_prime(*p) || *n < 2 || *l < 1 || *l >= *n {
                return bad(format!("B({},{},{}): need p prime, n >= 2, 1 <= l <= n-1", p, n, l));
            }
            b_ring(*p, *n, *l)
        }
        RingFamily::Mat { k, p, n } => {
            if !is_prime(*p) || *k < 1 || *n < 1 {
                return bad(format!("Mat({},{},{})", k, p, n));
            }
            mat_ring(*k, *p, *n)
        }
        RingFamily::TruncFree { p, k, relations } => {
            if !is_prime(*p) || *k < 2 {
                return bad(format!("TruncFree({},{}): need p prime, k >= 2", p, k));
            }
            if relations.iter().any(|w| w.0.iter().any(|&l| l == 0 || l > 2)) {
                return bad("relation words must use x, y only".into());
            }
            trunc_free(*p, *k, relations)
        }
        RingFamily::MinRing { p } => {
            if !is_prime(*p) {
                return bad(format!("MinRing({}): p must be prime", p));
            }
            min_ring(*p)
        }
        RingFamily::Presented { .. } => Err(RingError::NotTabled),
    }
}

fn labels(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn up_ring(p: u64) -> Result<TabledRing, RingError> {
    // e11, e12, e22
    let mut t = vec![Vec::new(); 9];
    t[0] = vec![(0, 1)]; // e11 e11
    t[1] = vec![(1, 1)]; // e11 e12
    t[5] = vec![(1, 1)]; // e12 e22
    t[8] = vec![(2, 1)]; // e22 e22
    TabledRing::new(p, labels(&["e11", "e12", "e22"]), vec![1, 0, 1], t, RingFamily::Up { p })
}

fn min_ring(p: u64) -> Result<TabledRing, RingError> {
    // 1, u, v, vu
    let d = 4;
    let mut t = vec![Vec::new(); 16];
    for i in 0..d {
        t[i] = vec![(i, 1)];
        t[i * d] = vec![(i, 1)];
    }
    t[2 * d + 1] = vec![(3, 1)]; // v u
    TabledRing::new(p, labels(&["1", "u", "v", "vu"]), vec![1, 0, 0, 0], t, RingFamily::MinRing { p })
}

fn sparse(v: &[u64]) -> Vec<(usize, u64)> {
    v.iter().enumerate().filter(|(_, &c)| c != 0).map(|(i, &c)| (i, c)).collect()
}

fn power_label(i: usize) -> String {
    match i {
        0 => "1".into(),
        1 => "t".into(),
        _ => format!("t^{}", i),
    }
}

fn b_ring(p: u64, n: u32, l: u32) -> Result<TabledRing, RingError> {
    let f = Fq::new(p, n)?;
    let nn = n as usize;
    let d = 2 * nn;
    let basis: Vec<Vec<u64>> = (0..nn).map(|i| {
        let mut v = f.zero();
        v[i] = 1;
        v
    }).collect();
    let mut t = vec![Vec::new(); d * d];
    for i in 0..nn {
        for j in 0..nn {
            let prod = f.mul(&basis[i], &basis[j]);
            // (e_i,0)(e_j,0) = (e_i e_j, 0)
            t[i * d + j] = sparse(&prod);
            // (e_i,0)(0,e_j) = (0, e_i^{p^l} e_j)
            let tw = f.mul(&f.frobenius(&basis[i], l), &basis[j]);
            t[i * d + nn + j] = sparse(&tw).into_iter().map(|(k, c)| (k + nn, c)).collect();
            // (0,e_i)(e_j,0) = (0, e_i e_j)
            t[(nn + i) * d + j] = sparse(&prod).into_iter().map(|(k, c)| (k + nn, c)).collect();
        }
    }
    let mut lab: Vec<String> = (0..nn).map(|i| format!("({},0)", power_label(i))).collect();
    lab.extend((0..nn).map(|i| format!("(0,{})", power_label(i))));
    let mut one = vec![0u64; d];
    one[0] = 1;
    TabledRing::new(p, lab, one, t, RingFamily::B { p, n, l })
}

fn mat_ring(k: u32, p: u64, n: u32) -> Result<TabledRing, RingError> {
    let f = Fq::new(p, n)?;
    let (kk, nn) = (k as usize, n as usize);
    let d = kk * kk * nn;
    let idx = |a: usize, b: usize, i: usize| (a * kk + b) * nn + i;
    let mut t = vec![Vec::new(); d * d];
    let mut lab = vec![String::new(); d];
    for a in 0..kk {
        for b in 0..kk {
            for i in 0..nn {
                lab[idx(a, b, i)] = if nn == 1 {
                    format!("E{}{}", a + 1, b + 1)
                } else {
                    format!("{}*E{}{}", power_label(i), a + 1, b + 1)
                };
                for c in 0..kk {
                    for j in 0..nn {
                        let mut ei = f.zero();
                        ei[i] = 1;
                        let mut ej = f.zero();
                        ej[j] = 1;
                        let prod = f.mul(&ei, &ej);
                        t[idx(a, b, i) * d + idx(b, c, j)] =
                            sparse(&prod).into_iter().map(|(m, v)| (idx(a, c, m), v)).collect();
                    }
                }
            }
        }
    }
    let mut one = vec![0u64; d];
    for a in 0..kk {
        one[idx(a, a, 0)] = 1;
    }
    TabledRing::new(p, lab, one, t, RingFamily::Mat { k, p, n })
}

/// Words over {x=1, y=2} of length < k in deg-lex order.
fn words_below(k: u32) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut layer = vec![Word::empty()];
    for _ in 1..k {
        let mut next = Vec::new();
        for w in &layer {
            for l in 1..=2u8 {
                let mut v = w.0.clone();
                v.push(l);
                next.push(Word(v));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn contains_factor(w: &[u8], r: &[u8]) -> bool {
    r.is_empty() || w.windows(r.len()).any(|s| s == r)
}

fn trunc_free(p: u64, k: u32, relations: &[Word]) -> Result<TabledRing, RingError> {
    let basis: Vec<Word> = words_below(k)
        .into_iter()
        .filter(|w| !relations.iter().any(|r| contains_factor(&w.0, &r.0)))
        .collect();
    if basis.is_empty() || !basis[0].is_empty() {
        return Err(RingError::InvalidParameters("relations kill the identity".into()));
    }
    let d = basis.len();
    let mut t = vec![Vec::new(); d * d];
    for i in 0..d {
        for j in 0..d {
            let w = basis[i].concat(&basis[j]);
            if let Ok(pos) = basis.binary_search(&w) {
                t[i * d + j] = vec![(pos, 1)];
            }
        }
    }
    let lab: Vec<String> = basis.iter().map(word_label).collect();
    let mut one = vec![0u64; d];
    one[0] = 1;
    TabledRing::new(p, lab, one, t, RingFamily::TruncFree { p, k, relations: relations.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f4_modulus_and_frobenius() {
        let f = Fq::new(2, 2).unwrap();
        assert_eq!(f.modulus, vec![1, 1, 1]);
        let x = f.generator();
        assert_eq!(f.frobenius(&x, 1), vec![1, 1]);
        assert_eq!(f.frobenius(&x, 2), x);
        assert_eq!(f.frobenius(&f.one(), 1), f.one());
    }

    #[test]
    fn sizes() {
        let up = make_ring(&RingFamily::Up { p: 2 }).unwrap();
        assert_eq!(up.size(), Some(8));
        let m3 = make_ring(&RingFamily::MinRing { p: 3 }).unwrap();
        assert_eq!(m3.size(), Some(81));
        let tf = make_ring(&RingFamily::TruncFree { p: 2, k: 3, relations: vec![] }).unwrap();
        assert_eq!(tf.labels, vec!["1", "x", "y", "xx", "xy", "yx", "yy"]);
        let b = make_ring(&RingFamily::B { p: 2, n: 2, l: 1 }).unwrap();
        assert_eq!(b.size(), Some(16));
        assert!(make_ring(&RingFamily::B { p: 2, n: 2, l: 2 }).is_err());
        assert!(make_ring(&RingFamily::Up { p: 4 }).is_err());
    }

    #[test]
    fn commutativity() {
        let up = make_ring(&RingFamily::Up { p: 2 }).unwrap();
        assert_eq!(up.is_commutative(), Some((0, 1)));
        let f9 = make_ring(&RingFamily::Mat { k: 1, p: 3, n: 2 }).unwrap();
        assert_eq!(f9.is_commutative(), None);
        let mr = make_ring(&RingFamily::MinRing { p: 2 }).unwrap();
        assert_eq!(mr.is_commutative(), Some((1, 2)));
    }

    #[test]
    fn commutator_on_up2() {
        let up = make_ring(&RingFamily::Up { p: 2 }).unwrap();
        let c = NcPoly::commutator(&NcPoly::var(1), &NcPoly::var(2));
        let v = up.eval(&c, &[up.basis(0), up.basis(1)]).unwrap();
        assert_eq!(v, up.basis(1));
        let r = up.is_identity(&c, 2, CheckMode::Exhaustive { cap: DEFAULT_EVAL_CAP }).unwrap();
        assert_eq!(
            r,
            IdentityCheck::Counterexample { tuple: vec![up.basis(0), up.basis(1)], value: up.basis(1) }
        );
    }

    #[test]
    fn symbolic_matches_exhaustive() {
        let b = make_ring(&RingFamily::B { p: 2, n: 2, l: 1 }).unwrap();
        let x = NcPoly::var(1);
        let yz = NcPoly::commutator(&NcPoly::var(2), &NcPoly::var(3));
        let id = x.mul(&yz).sub(&yz.mul(&x.mul(&x)));
        assert_eq!(b.is_identity_symbolic(&id, 3, 100_000), Some(true));
        let c = NcPoly::commutator(&NcPoly::var(1), &NcPoly::var(2));
        assert_eq!(b.is_identity_symbolic(&c, 2, 100_000), Some(false));
    }
}
