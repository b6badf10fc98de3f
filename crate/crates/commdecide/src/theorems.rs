//! Closed-form criteria: multilinear identities, `P(X) = 0`, `[P(X), Y] = 0`,
//! `(XY)^n = X^n Y^n`, `(X+Y)^n = X^n + Y^n`, and certificates for
//! identities of the four-dimensional ring `F_p{u,v}/(u^2, v^2, uv)`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::commalg::{factor, field_ideal_normal_form, is_prime, univariate_membership, CPoly, Domain, IdealSpec};
use crate::finitering::{make_ring, RingError, RingFamily, TabledRing};
use crate::freealg::{reduce_ap, NcPoly, VarId, Word};

const FACTOR_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TheoremError {
    #[error("polynomial is not homogeneous multilinear")]
    NotMultilinear,
    #[error("polynomial is not univariate in X_1")]
    NotUnivariate,
    #[error("empty exponent set")]
    EmptySet,
    #[error("exponent {0} is below 2")]
    BadExponent(u64),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("witness failed verification: {0}")]
    VerificationFailed(String),
}

impl From<RingError> for TheoremError {
    fn from(e: RingError) -> Self {
        TheoremError::Resource(e.to_string())
    }
}

/// A verified noncommutative ring together with a non-commuting basis pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoremWitness {
    pub p: u64,
    pub family: RingFamily,
    pub pair: Option<(String, String)>,
}

fn least_prime_factor(n: &BigInt) -> Result<Option<u64>, TheoremError> {
    if n.is_zero() {
        return Ok(Some(2));
    }
    let f = factor(n, FACTOR_BUDGET).ok_or_else(|| TheoremError::Resource("factoring budget".into()))?;
    match f.first() {
        None => Ok(None),
        Some((p, _)) => p.to_u64().map(Some).ok_or_else(|| TheoremError::Resource("prime exceeds 64 bits".into())),
    }
}

fn noncommuting_pair(r: &TabledRing) -> Result<(String, String), TheoremError> {
    r.is_commutative()
        .map(|(i, j)| (r.labels[i].clone(), r.labels[j].clone()))
        .ok_or_else(|| TheoremError::VerificationFailed("ring is commutative".into()))
}

fn witness(r: &TabledRing) -> Result<TheoremWitness, TheoremError> {
    Ok(TheoremWitness { p: r.prime(), family: r.family.clone(), pair: Some(noncommuting_pair(r)?) })
}

fn check(r: &TabledRing, ps: &[NcPoly], nvars: usize, cap: u64) -> Result<TheoremWitness, TheoremError> {
    if r.verify_identities(ps, nvars, cap)? {
        witness(r)
    } else {
        Err(TheoremError::VerificationFailed(r.family.describe()))
    }
}

fn trunc3(p: u64) -> RingFamily {
    RingFamily::TruncFree { p, k: 3, relations: vec![] }
}

// ---------------------------------------------------------------------------
// Multilinear identities

/// Sum of coefficients and the ordered-pair sums of a multilinear polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultilinearProfile {
    pub m: usize,
    pub total: BigInt,
    /// `(i, j) -> sum of c_w over words with X_i before X_j`, `i < j`.
    pub theta: BTreeMap<(VarId, VarId), BigInt>,
}

pub fn theta_profile(p: &NcPoly) -> Result<MultilinearProfile, TheoremError> {
    let p = p.lift();
    let m = p.degree().ok_or(TheoremError::NotMultilinear)?;
    if !p.is_multilinear(m) {
        return Err(TheoremError::NotMultilinear);
    }
    let mut total = BigInt::zero();
    let mut theta = BTreeMap::new();
    for i in 1..=m as VarId {
        for j in i + 1..=m as VarId {
            theta.insert((i, j), BigInt::zero());
        }
    }
    for (w, c) in p.terms() {
        total += c;
        let mut pos = vec![0usize; m + 1];
        for (k, &l) in w.0.iter().enumerate() {
            pos[l as usize] = k;
        }
        for ((i, j), t) in theta.iter_mut() {
            if pos[*i as usize] < pos[*j as usize] {
                *t += c;
            }
        }
    }
    Ok(MultilinearProfile { m, total, theta })
}

/// Least prime dividing every total and every ordered-pair sum; the witness is
/// the four-dimensional minimal ring, checked on all basis tuples.
pub fn multilinear_decide(ids: &[NcPoly]) -> Result<Option<TheoremWitness>, TheoremError> {
    let mut g = BigInt::zero();
    let mut profiles = Vec::new();
    for p in ids {
        let pr = theta_profile(p)?;
        g = g.gcd(&pr.total);
        for t in pr.theta.values() {
            g = g.gcd(t);
        }
        profiles.push(pr);
    }
    let p = match least_prime_factor(&g)? {
        None => return Ok(None),
        Some(p) => p,
    };
    let ring = make_ring(&RingFamily::MinRing { p })?;
    for (poly, pr) in ids.iter().zip(&profiles) {
        if !holds_on_basis_tuples(&ring, poly, pr.m)? {
            return Err(TheoremError::VerificationFailed(format!("MinRing({}) on basis tuples", p)));
        }
    }
    Ok(Some(witness(&ring)?))
}

/// Evaluates `poly` on every tuple of basis elements; enough for multilinear
/// polynomials.
pub fn holds_on_basis_tuples(ring: &TabledRing, poly: &NcPoly, m: usize) -> Result<bool, TheoremError> {
    let d = ring.dim;
    let mut cur = vec![0usize; m];
    loop {
        let tuple: Vec<Vec<u64>> = cur.iter().map(|&i| ring.basis(i)).collect();
        if ring.eval(poly, &tuple)?.iter().any(|&c| c != 0) {
            return Ok(false);
        }
        let mut k = m;
        loop {
            if k == 0 {
                return Ok(true);
            }
            k -= 1;
            cur[k] += 1;
            if cur[k] < d {
                break;
            }
            cur[k] = 0;
        }
    }
}

// ---------------------------------------------------------------------------
// Univariate identities

fn univariate_cpoly(p: &NcPoly) -> Result<CPoly, TheoremError> {
    let p = p.lift();
    if !p.is_univariate() {
        return Err(TheoremError::NotUnivariate);
    }
    Ok(p.abelianize(1))
}

/// Primes dividing the first non-zero value `f(0), f(1), ...`, ascending.
fn value_primes(f: &CPoly) -> Result<Vec<u64>, TheoremError> {
    let deg = f.total_degree().unwrap_or(0);
    for i in 0..=deg {
        let v = f.eval(&[BigInt::from(i)]);
        if !v.is_zero() {
            let fs = factor(&v, FACTOR_BUDGET).ok_or_else(|| TheoremError::Resource("factoring budget".into()))?;
            return fs
                .into_iter()
                .map(|(p, _)| p.to_u64().ok_or_else(|| TheoremError::Resource("prime exceeds 64 bits".into())))
                .collect();
        }
    }
    Ok(vec![])
}

/// `P(X) = 0` admits a noncommutative ring iff `P` lies in `(p, (X^p - X)^2)`
/// for some prime `p`; the witness is `U_p`.
pub fn univariate_decide(p: &NcPoly, cap: u64) -> Result<Option<TheoremWitness>, TheoremError> {
    let f = univariate_cpoly(p)?;
    let primes = if f.is_zero() { vec![2] } else { value_primes(&f)? };
    for q in primes {
        if univariate_membership(&f, IdealSpec::UnivSq(q)).unwrap_or(false) || f.is_zero() {
            let ring = make_ring(&RingFamily::Up { p: q })?;
            return check(&ring, std::slice::from_ref(p), 1, cap).map(Some);
        }
    }
    Ok(None)
}

/// `[P(X), Y] = 0` admits a noncommutative ring iff `P'` lies in
/// `(p, X^p - X)` for some prime `p`; the witness is `F_p{x,y}/(x,y)^3`.
pub fn central_decide(p: &NcPoly, cap: u64) -> Result<Option<TheoremWitness>, TheoremError> {
    let f = univariate_cpoly(p)?;
    let df = f.derivative(0);
    let primes = if df.is_zero() { vec![2] } else { value_primes(&df)? };
    for q in primes {
        if df.is_zero() || univariate_membership(&df, IdealSpec::UnivLin(q)).unwrap_or(false) {
            let ring = make_ring(&trunc3(q))?;
            let id = NcPoly::commutator(&p.lift(), &NcPoly::var(2));
            return check(&ring, &[id], 2, cap).map(Some);
        }
    }
    Ok(None)
}

/// Whether `[X^a - X^b, Y] = 0` forces commutativity.
pub fn herstein_pair(a: u64, b: u64) -> bool {
    assert!(a > b && b >= 1);
    b == 1 || (a.gcd(&b) == 1 && (a + b) % 2 == 1)
}

// ---------------------------------------------------------------------------
// Power identities

fn check_set(s: &[u64]) -> Result<u64, TheoremError> {
    let n0 = *s.iter().min().ok_or(TheoremError::EmptySet)?;
    if let Some(&bad) = s.iter().find(|&&n| n < 2) {
        return Err(TheoremError::BadExponent(bad));
    }
    Ok(n0)
}

/// `(XY)^n = X^n Y^n` for all `n` in `S`.
pub fn power_identity_decide(s: &[u64], cap: u64) -> Result<Option<TheoremWitness>, TheoremError> {
    let n0 = check_set(s)?;
    let g = s.iter().fold(BigInt::zero(), |g, &n| g.gcd(&(BigInt::from(n) * BigInt::from(n - 1) / 2)));
    let p = match least_prime_factor(&g)? {
        None => return Ok(None),
        Some(p) => p,
    };
    let ring = make_ring(&trunc3(p))?;
    let e = u32::try_from(n0).map_err(|_| TheoremError::BadExponent(n0))?;
    let (x, y) = (NcPoly::var(1), NcPoly::var(2));
    let id = x.mul(&y).pow(e).sub(&x.pow(e).mul(&y.pow(e)));
    check(&ring, &[id], 2, cap).map(Some)
}

fn in_tp(n: u64, p: u64) -> bool {
    let mut m = n;
    while m % p == 0 {
        m /= p;
    }
    m == 1 && n >= if p == 2 { 4 } else { p }
}

/// `(X+Y)^n = X^n + Y^n` for all `n` in `S`; each exponent is checked on the
/// witness with ring powers rather than by expansion.
pub fn freshman_decide(s: &[u64], cap: u64) -> Result<Option<TheoremWitness>, TheoremError> {
    let n0 = check_set(s)?;
    let cands = factor(&BigInt::from(n0), FACTOR_BUDGET).unwrap_or_default();
    for (pb, _) in cands {
        let p = pb.to_u64().unwrap();
        if !s.iter().all(|&n| in_tp(n, p)) {
            continue;
        }
        let ring = make_ring(&trunc3(p))?;
        for &n in s {
            let r = ring.is_identity_fn(2, cap, |r, t| {
                let lhs = r.pow(&r.add(&t[0], &t[1]), n);
                let rhs = r.add(&r.pow(&t[0], n), &r.pow(&t[1], n));
                r.add(&lhs, &r.scale(&rhs, r.modulus - 1))
            })?;
            if !r.holds() {
                return Err(TheoremError::VerificationFailed(format!("(X+Y)^{} on {}", n, ring.family.describe())));
            }
        }
        return witness(&ring).map(Some);
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Minimal-ring certificates

/// Decomposition of an identity of `F_p{u,v}/(u^2,v^2,uv)` into instances of
/// the six generating identities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinRingCertificate {
    pub p: u64,
    /// `Qhat_{i,j}`, `i <= j`: coefficient of `(X_i^p - X_i)(X_j^p - X_j)`.
    pub q_hat: BTreeMap<(VarId, VarId), NcPoly>,
    /// `D_{i,j}`, `i < j`: coefficient of `[X_i, X_j]` modulo central
    /// commutators and products of two commutators.
    pub d: BTreeMap<(VarId, VarId), NcPoly>,
    /// Generators used by the decomposition, by name.
    pub generators: Vec<String>,
    pub residual: NcPoly,
}

impl MinRingCertificate {
    /// `sum (X_i^p - X_i)(X_j^p - X_j) Qhat_{i,j} + sum D_{i,j} [X_i, X_j]`;
    /// equals the input modulo `p` and the commutator-product ideal.
    pub fn reassemble(&self) -> NcPoly {
        let mut r = self.residual.clone();
        for (&(i, j), q) in &self.q_hat {
            r = r.add(&field_factor(i, self.p).mul(&field_factor(j, self.p)).mul(q));
        }
        for (&(i, j), dd) in &self.d {
            r = r.add(&dd.mul(&NcPoly::commutator(&NcPoly::var(i), &NcPoly::var(j))));
        }
        r
    }
}

/// Why a polynomial is not an identity of the minimal ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertifyFailure {
    pub p: u64,
    pub stage: String,
    pub term: String,
}

fn field_factor(i: VarId, p: u64) -> NcPoly {
    let x = NcPoly::var(i);
    x.pow(p as u32).sub(&x)
}

/// Divides by `X_i^p - X_i` (leading terms `X_i^p`), returning quotients and
/// the reduced remainder.
pub fn divide_field_ideal(f: &CPoly, p: u64) -> (Vec<CPoly>, CPoly) {
    let s = f.nvars();
    let dom = Domain::ModP(p);
    let mut quot = vec![CPoly::zero(s, dom); s];
    let mut rem = CPoly::zero(s, dom);
    let mut work = f.to_domain(dom);
    let pe = p as u32;
    loop {
        let top = work.terms().next_back().map(|(e, c)| (e.clone(), c.clone()));
        let Some((e, c)) = top else { break };
        work.add_term(e.clone(), -c.clone());
        match e.iter().position(|&k| k >= pe) {
            None => rem.add_term(e, c),
            Some(i) => {
                let mut e1 = e.clone();
                e1[i] -= pe;
                quot[i].add_term(e1.clone(), c.clone());
                e1[i] += 1;
                work.add_term(e1, c);
            }
        }
    }
    (quot, rem)
}

/// Follows the constructive reduction: the abelianization must lie in the
/// square of the field ideal, and the commutator coefficients must vanish on
/// `F_p`.
pub fn min_ring_certify(poly: &NcPoly, p: u64) -> Result<MinRingCertificate, CertifyFailure> {
    assert!(is_prime(p));
    let pb = BigInt::from(p);
    let orig = poly.lift();
    let poly = orig.reduce_mod(&pb).lift();
    let s = (poly.max_var() as usize).max(1);
    let fail = |stage: &str, term: String| CertifyFailure { p, stage: stage.into(), term };
    let mut generators = Vec::new();
    if orig != poly {
        generators.push("p".into());
    }

    let phi = poly.abelianize(s);
    let (a, rem) = divide_field_ideal(&phi, p);
    if !rem.is_zero() {
        return Err(fail("abelianization is not an identity of F_p", rem.to_string()));
    }
    let mut q: BTreeMap<(VarId, VarId), CPoly> = BTreeMap::new();
    for (i, ai) in a.iter().enumerate() {
        let (aij, r2) = divide_field_ideal(ai, p);
        if !r2.is_zero() {
            return Err(fail("field-ideal cofactor is not an identity of F_p", r2.to_string()));
        }
        for (j, c) in aij.into_iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let key = ((i.min(j) + 1) as VarId, (i.max(j) + 1) as VarId);
            let e = q.entry(key).or_insert_with(|| CPoly::zero(s, Domain::ModP(p)));
            *e = e.add(&c);
        }
    }
    q.retain(|_, c| !c.is_zero());
    let mut q_hat = BTreeMap::new();
    let mut rest = poly.clone();
    for (&(i, j), c) in &q {
        if !field_ideal_normal_form(c, p, 1).is_zero() {
            return Err(fail(&format!("Qhat({},{}) is not an identity of F_p", i, j), c.to_string()));
        }
        let qh = NcPoly::from_cpoly(&c.to_domain(Domain::Int));
        rest = rest.sub(&field_factor(i, p).mul(&field_factor(j, p)).mul(&qh));
        q_hat.insert((i, j), qh);
    }
    if !q_hat.is_empty() {
        generators.push("(Z1^p-Z1)Z2(Z3^p-Z3)Z4(Z5^p-Z5)".into());
        generators.push("(Z1^p-Z1)Z2[Z3,Z4]".into());
    }

    let form = reduce_ap(&rest);
    let h = form.h.reduce_mod(&pb);
    if !h.is_zero() {
        return Err(fail("straightened remainder", h.to_string()));
    }
    if rest.terms().any(|(w, _)| !w.is_sorted()) {
        generators.push("[[Z1,Z2],Z3]".into());
        generators.push("[Z1,Z2]Z3[Z4,Z5]".into());
    }
    let mut d = BTreeMap::new();
    for (&(i, j), c) in &form.a {
        let cm = c.reduce_mod(&pb);
        if cm.is_zero() {
            continue;
        }
        if !field_ideal_normal_form(&cm.abelianize(s), p, 1).is_zero() {
            return Err(fail(&format!("D({},{}) is not an identity of F_p", i, j), cm.to_string()));
        }
        d.insert((i, j), cm.lift());
    }
    if !d.is_empty() {
        generators.push("[Z1,Z2]Z3(Z4^p-Z4)".into());
    }
    let residual = NcPoly::from_cpoly(&rem.to_domain(Domain::Int));
    Ok(MinRingCertificate { p, q_hat, d, generators, residual })
}

/// Words `w` with `w` a permutation of `X_1..X_m`, each with coefficient 1.
pub fn symmetrization(m: usize) -> NcPoly {
    fn rec(cur: &mut Vec<VarId>, used: &mut Vec<bool>, out: &mut NcPoly) {
        if cur.len() == used.len() {
            out.add_term(Word(cur.clone()), BigInt::one());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                cur.push(v as VarId + 1);
                rec(cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = NcPoly::zero();
    rec(&mut Vec::new(), &mut vec![false; m], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles() {
        let pr = theta_profile(&symmetrization(3)).unwrap();
        assert_eq!(pr.total, BigInt::from(6));
        assert!(pr.theta.values().all(|t| *t == BigInt::from(3)));
        let c = NcPoly::from_words(&[(&[1, 2], 1), (&[2, 1], -1)]);
        let pr = theta_profile(&c).unwrap();
        assert_eq!(pr.total, BigInt::zero());
        assert_eq!(pr.theta[&(1, 2)], BigInt::one());
        let q = NcPoly::from_words(&[(&[1, 2, 3], 1), (&[3, 2, 1], -1)]);
        assert_eq!(theta_profile(&q).unwrap().theta[&(1, 3)], BigInt::one());
        assert_eq!(theta_profile(&NcPoly::from_words(&[(&[1, 1], 1)])), Err(TheoremError::NotMultilinear));
    }

    #[test]
    fn herstein_table_small() {
        assert!(herstein_pair(3, 1));
        assert!(!herstein_pair(4, 2));
        assert!(!herstein_pair(5, 3));
        assert!(herstein_pair(3, 2));
    }

    #[test]
    fn tp_membership() {
        assert!(in_tp(4, 2) && in_tp(8, 2) && !in_tp(2, 2));
        assert!(in_tp(3, 3) && in_tp(27, 3) && !in_tp(6, 3));
    }

    #[test]
    fn field_division() {
        let x = CPoly::var(1, Domain::Int, 0);
        let f = x.pow(4).sub(&x.pow(2).scale(&BigInt::from(2))).add(&x);
        let (q, r) = divide_field_ideal(&f, 2);
        let x2 = CPoly::var(1, Domain::ModP(2), 0);
        let back = x2.pow(2).sub(&x2).mul(&q[0]).add(&r);
        assert_eq!(back, f.to_domain(Domain::ModP(2)));
    }
}
