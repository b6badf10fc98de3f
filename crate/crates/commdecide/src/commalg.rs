//! Commutative polynomials over `Z`, `F_p` and `Z/p^a`, together with the
//! structured ideal tests used by the decision procedures: Cartier
//! operators, field-ideal normal forms, grid search for a non-vanishing
//! point and univariate membership tests.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exponent vector, one entry per variable.
pub type ExpVec = Vec<u32>;

/// Coefficient domain of a [`CPoly`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    Int,
    ModP(u64),
    ModPk(u64, u32),
}

impl Domain {
    pub fn modulus(&self) -> Option<BigInt> {
        match *self {
            Domain::Int => None,
            Domain::ModP(p) => Some(BigInt::from(p)),
            Domain::ModPk(p, a) => Some(BigInt::from(p).pow(a)),
        }
    }

    fn normalize(&self, c: BigInt) -> BigInt {
        match self.modulus() {
            None => c,
            Some(m) => c.mod_floor(&m),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CommAlgError {
    #[error("Cartier index {index} out of range for p = {p}")]
    CartierIndex { index: u32, p: u64 },
    #[error("operation requires a polynomial over F_p")]
    NeedsModP,
    #[error("polynomial is not univariate")]
    NotUnivariate,
    #[error("domain mismatch")]
    DomainMismatch,
}

/// Structured ideals of the commutative polynomial ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IdealSpec {
    /// `(p, X_1^{p^n} - X_1, ..., X_s^{p^n} - X_s)`
    FieldIdeal { p: u64, n: u32 },
    /// `(p, (X^p - X)^2)` in one variable.
    UnivSq(u64),
    /// `(p, X^p - X)` in one variable.
    UnivLin(u64),
}

/// Commutative polynomial: exponent vector to coefficient map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CPoly {
    nvars: usize,
    domain: Domain,
    terms: BTreeMap<ExpVec, BigInt>,
}

impl CPoly {
    pub fn zero(nvars: usize, domain: Domain) -> Self {
        CPoly { nvars, domain, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, domain: Domain, c: impl Into<BigInt>) -> Self {
        let mut p = Self::zero(nvars, domain);
        p.add_term(vec![0; nvars], c.into());
        p
    }

    /// The variable `X_{i+1}` (0-based index `i`).
    pub fn var(nvars: usize, domain: Domain, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, domain, e, BigInt::one())
    }

    pub fn monomial(nvars: usize, domain: Domain, exps: ExpVec, c: impl Into<BigInt>) -> Self {
        assert_eq!(exps.len(), nvars);
        let mut p = Self::zero(nvars, domain);
        p.add_term(exps, c.into());
        p
    }

    pub fn from_terms<I>(nvars: usize, domain: Domain, terms: I) -> Self
    where
        I: IntoIterator<Item = (ExpVec, BigInt)>,
    {
        let mut p = Self::zero(nvars, domain);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars);
            p.add_term(e, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&ExpVec, &BigInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &[u32]) -> BigInt {
        self.terms.get(e).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, e: ExpVec, c: BigInt) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                let c = self.domain.normalize(c);
                if !c.is_zero() {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                let s = self.domain.normalize(o.get() + c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    /// Same polynomial viewed in a different domain (coefficients reduced).
    pub fn to_domain(&self, domain: Domain) -> CPoly {
        CPoly::from_terms(self.nvars, domain, self.terms.iter().map(|(e, c)| (e.clone(), c.clone())))
    }

    /// Same coefficients with more variables appended (exponent 0).
    pub fn extend_vars(&self, nvars: usize) -> CPoly {
        assert!(nvars >= self.nvars);
        CPoly::from_terms(
            nvars,
            self.domain,
            self.terms.iter().map(|(e, c)| {
                let mut e2 = e.clone();
                e2.resize(nvars, 0);
                (e2, c.clone())
            }),
        )
    }

    fn check(&self, other: &CPoly) {
        assert_eq!(self.nvars, other.nvars, "variable count mismatch");
        assert_eq!(self.domain, other.domain, "domain mismatch");
    }

    pub fn add(&self, other: &CPoly) -> CPoly {
        self.check(other);
        let mut r = self.clone();
        for (e, c) in &other.terms {
            r.add_term(e.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, other: &CPoly) -> CPoly {
        self.check(other);
        let mut r = self.clone();
        for (e, c) in &other.terms {
            r.add_term(e.clone(), -c.clone());
        }
        r
    }

    pub fn neg(&self) -> CPoly {
        self.scale(&BigInt::from(-1))
    }

    pub fn scale(&self, k: &BigInt) -> CPoly {
        CPoly::from_terms(self.nvars, self.domain, self.terms.iter().map(|(e, c)| (e.clone(), c * k)))
    }

    pub fn mul(&self, other: &CPoly) -> CPoly {
        self.check(other);
        let mut acc: BTreeMap<ExpVec, BigInt> = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: ExpVec = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                *acc.entry(e).or_default() += c1 * c2;
            }
        }
        CPoly::from_terms(self.nvars, self.domain, acc)
    }

    pub fn pow(&self, mut k: u64) -> CPoly {
        let mut base = self.clone();
        let mut r = CPoly::constant(self.nvars, self.domain, 1);
        while k > 0 {
            if k & 1 == 1 {
                r = r.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        r
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn degree_in(&self, var: usize) -> Option<u32> {
        self.terms.keys().map(|e| e[var]).max()
    }

    /// Value at an integer point (reduced into the domain's residue range).
    pub fn eval(&self, point: &[BigInt]) -> BigInt {
        assert_eq!(point.len(), self.nvars);
        let mut total = BigInt::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (x, &k) in point.iter().zip(e) {
                if k > 0 {
                    t *= x.pow(k);
                }
            }
            total += t;
        }
        self.domain.normalize(total)
    }

    /// Value at a point of `(Z/m)^s` with small modulus.
    pub fn eval_mod(&self, point: &[u64], m: u64) -> u64 {
        let mut total: u128 = 0;
        let mm = m as u128;
        for (e, c) in &self.terms {
            let cm = c.mod_floor(&BigInt::from(m)).to_u64().unwrap() as u128;
            let mut t = cm;
            for (&x, &k) in point.iter().zip(e) {
                t = t * pow_mod(x % m, k as u64, m) as u128 % mm;
            }
            total = (total + t) % mm;
        }
        total as u64
    }

    /// Gcd of all coefficients (non-negative); zero for the zero polynomial.
    pub fn content_gcd(&self) -> BigInt {
        self.terms.values().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// Substitutes `X_i -> X^{w_i}` producing a univariate polynomial.
    pub fn kronecker(&self, weights: &[u64]) -> CPoly {
        assert_eq!(weights.len(), self.nvars);
        CPoly::from_terms(
            1,
            self.domain,
            self.terms.iter().map(|(e, c)| {
                let d: u64 = e.iter().zip(weights).map(|(&k, &w)| k as u64 * w).sum();
                (vec![d as u32], c.clone())
            }),
        )
    }

    /// Formal derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> CPoly {
        CPoly::from_terms(
            self.nvars,
            self.domain,
            self.terms.iter().filter(|(e, _)| e[var] > 0).map(|(e, c)| {
                let mut e2 = e.clone();
                e2[var] -= 1;
                (e2, c * BigInt::from(e[var]))
            }),
        )
    }

    /// Composition with polynomials substituted for each variable.
    pub fn compose(&self, subs: &[CPoly]) -> CPoly {
        assert_eq!(subs.len(), self.nvars);
        let (nv, dom) = (subs[0].nvars, subs[0].domain);
        let mut r = CPoly::zero(nv, dom);
        for (e, c) in &self.terms {
            let mut t = CPoly::constant(nv, dom, c.clone());
            for (s, &k) in subs.iter().zip(e) {
                if k > 0 {
                    t = t.mul(&s.pow(k as u64));
                }
            }
            r = r.add(&t);
        }
        r
    }

    /// Replaces every exponent vector `k` by `p * k`.
    pub fn scale_exponents(&self, p: u32) -> CPoly {
        CPoly::from_terms(
            self.nvars,
            self.domain,
            self.terms.iter().map(|(e, c)| (e.iter().map(|&k| k * p).collect(), c.clone())),
        )
    }

    fn mod_p(&self) -> Result<u64, CommAlgError> {
        match self.domain {
            Domain::ModP(p) => Ok(p),
            _ => Err(CommAlgError::NeedsModP),
        }
    }
}

impl fmt::Display for CPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, k) })
                .collect();
            if mono.is_empty() {
                write!(f, "{}", a)?;
            } else if a.is_one() {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{}*{}", a, mono.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Cartier operator `Lambda_j` on a polynomial over `F_p`.
pub fn cartier(p_poly: &CPoly, j: &[u32]) -> Result<CPoly, CommAlgError> {
    let p = p_poly.mod_p()?;
    assert_eq!(j.len(), p_poly.nvars);
    if let Some(&bad) = j.iter().find(|&&x| x as u64 >= p) {
        return Err(CommAlgError::CartierIndex { index: bad, p });
    }
    let p32 = p as u32;
    Ok(CPoly::from_terms(
        p_poly.nvars,
        p_poly.domain,
        p_poly
            .terms
            .iter()
            .filter(|(e, _)| e.iter().zip(j).all(|(&a, &b)| a >= b && (a - b) % p32 == 0))
            .map(|(e, c)| (e.iter().zip(j).map(|(&a, &b)| (a - b) / p32).collect(), c.clone())),
    ))
}

/// All Cartier indices `{0..p-1}^s` in lexicographic order.
pub fn cartier_indices(p: u64, s: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; s];
    loop {
        out.push(cur.clone());
        let mut i = s;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if (cur[i] as u64) < p {
                break;
            }
            cur[i] = 0;
        }
    }
}

/// Reduces exponents `e >= 1` to `((e - 1) mod (q - 1)) + 1`, `q = p^n`.
pub fn reduce_exponent(e: u64, q: u64) -> u64 {
    if e == 0 {
        0
    } else {
        (e - 1) % (q - 1) + 1
    }
}

/// Normal form modulo `(p, X_i^{p^n} - X_i)`; zero iff the polynomial is an
/// identity for `F_{p^n}`.
pub fn field_ideal_normal_form(poly: &CPoly, p: u64, n: u32) -> CPoly {
    let q = p.pow(n);
    CPoly::from_terms(
        poly.nvars,
        Domain::ModP(p),
        poly.terms.iter().map(|(e, c)| {
            (e.iter().map(|&k| reduce_exponent(k as u64, q) as u32).collect(), c.clone())
        }),
    )
}

/// Scans `{0..D}^s` lexicographically for the first point where `poly` is
/// non-zero.
pub fn find_nonvanishing_point(poly: &CPoly, bound: u32) -> Option<(Vec<u32>, BigInt)> {
    if poly.is_zero() {
        return None;
    }
    let s = poly.nvars;
    let mut cur = vec![0u32; s];
    loop {
        let pt: Vec<BigInt> = cur.iter().map(|&x| BigInt::from(x)).collect();
        let v = poly.eval(&pt);
        if !v.is_zero() {
            return Some((cur, v));
        }
        let mut i = s;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] <= bound {
                break;
            }
            cur[i] = 0;
        }
    }
}

/// Dense univariate polynomial over `F_p`, lowest degree first.
fn to_dense_mod_p(poly: &CPoly, p: u64) -> Result<Vec<u64>, CommAlgError> {
    if poly.nvars != 1 {
        return Err(CommAlgError::NotUnivariate);
    }
    let deg = poly.degree_in(0).unwrap_or(0) as usize;
    let mut v = vec![0u64; deg + 1];
    let pb = BigInt::from(p);
    for (e, c) in &poly.terms {
        v[e[0] as usize] = (v[e[0] as usize] + c.mod_floor(&pb).to_u64().unwrap()) % p;
    }
    trim(&mut v);
    Ok(v)
}

fn trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

/// Remainder of `a` on division by the monic `b` over `F_p`.
pub fn poly_rem_mod_p(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    trim(&mut r);
    let db = b.len() - 1;
    assert_eq!(b[db], 1, "divisor must be monic");
    while r.len() > db {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - db;
        for (i, &bc) in b.iter().enumerate() {
            r[shift + i] = (r[shift + i] + (p - lead) * bc % p) % p;
        }
        trim(&mut r);
    }
    r
}

/// Product of dense polynomials over `F_p`.
pub fn poly_mul_mod_p(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut r = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            r[i + j] = (r[i + j] + x * y) % p;
        }
    }
    trim(&mut r);
    r
}

/// `X^p - X` over `F_p` as a dense vector.
fn frobenius_minus_id(p: u64) -> Vec<u64> {
    let mut v = vec![0u64; p as usize + 1];
    v[p as usize] = 1;
    v[1] = p - 1;
    v
}

/// Membership of a univariate integer polynomial in `(p, X^p - X)` or
/// `(p, (X^p - X)^2)`, or of a multivariate one in a field ideal.
pub fn ideal_membership(poly: &CPoly, spec: IdealSpec) -> Result<bool, CommAlgError> {
    match spec {
        IdealSpec::FieldIdeal { p, n } => Ok(field_ideal_normal_form(poly, p, n).is_zero()),
        IdealSpec::UnivLin(p) => {
            let a = to_dense_mod_p(poly, p)?;
            Ok(poly_rem_mod_p(&a, &frobenius_minus_id(p), p).is_empty())
        }
        IdealSpec::UnivSq(p) => {
            let a = to_dense_mod_p(poly, p)?;
            let f = frobenius_minus_id(p);
            let sq = poly_mul_mod_p(&f, &f, p);
            Ok(poly_rem_mod_p(&a, &sq, p).is_empty())
        }
    }
}

/// Univariate membership test (`UnivSq` / `UnivLin` only).
pub fn univariate_membership(poly: &CPoly, spec: IdealSpec) -> Result<bool, CommAlgError> {
    match spec {
        IdealSpec::FieldIdeal { .. } => Err(CommAlgError::DomainMismatch),
        _ => ideal_membership(poly, spec),
    }
}

// ---------------------------------------------------------------------------
// Small number theory helpers.

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r: u128 = 1 % m as u128;
    let mm = m as u128;
    let mut bb = b as u128 % mm;
    while e > 0 {
        if e & 1 == 1 {
            r = r * bb % mm;
        }
        bb = bb * bb % mm;
        e >>= 1;
    }
    b = r as u64;
    b
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for sp in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % sp == 0 {
            return n == sp;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = ((x as u128 * x as u128) % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn primes_up_to(n: u64) -> Vec<u64> {
    (2..=n).filter(|&k| is_prime(k)).collect()
}

/// Factors `|n|` by trial division up to `budget`; `None` if the remaining
/// cofactor is neither 1 nor a prime below `2^64`.
pub fn factor(n: &BigInt, budget: u64) -> Option<Vec<(BigInt, u32)>> {
    let mut m = n.abs();
    let mut out = Vec::new();
    if m.is_zero() {
        return Some(out);
    }
    let mut d = 2u64;
    while BigInt::from(d) * BigInt::from(d) <= m {
        if d > budget {
            let prime = m.to_u64().map_or(false, is_prime);
            if prime {
                break;
            }
            return None;
        }
        let bd = BigInt::from(d);
        let mut k = 0;
        while (&m % &bd).is_zero() {
            m /= &bd;
            k += 1;
        }
        if k > 0 {
            out.push((bd, k));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if !m.is_one() {
        out.push((m, 1));
    }
    Some(out)
}

/// p-adic valuation of a non-zero integer.
pub fn valuation(c: &BigInt, p: u64) -> u32 {
    let pb = BigInt::from(p);
    let mut m = c.abs();
    let mut k = 0;
    while !m.is_zero() && (&m % &pb).is_zero() {
        m /= &pb;
        k += 1;
    }
    k
}

/// Inverse of a unit modulo `m`.
pub fn inv_mod(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}
