//! Decision procedures for the witness classes `U_p`, `B(p,n,l)` and `A_p`,
//! and the orchestrator that combines them.
//!
//! Each class procedure returns `Ok(Some(w))` with a verified witness,
//! `Ok(None)` when the class provably contains no ring satisfying the
//! identities, or `Err(limit)` when a resource bound stopped it.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_traits::{One, ToPrimitive, Zero};

use crate::commalg::{factor, field_ideal_normal_form, find_nonvanishing_point, primes_up_to, valuation, CPoly, Domain};
use crate::finitering::{make_ring, RingFamily, DEFAULT_EVAL_CAP};
use crate::freealg::{eval_with, reduce_ap, reduce_case_i, ApForm, CaseIForm, Evaluator, NcPoly, VarId, Word};
use crate::gsb::{complete, format_word, CompletionLimits, Completer, GsBasis, GsError, Terms};
use crate::theorems::{self, TheoremError, TheoremWitness};

// ---------------------------------------------------------------------------
// Types

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentitySet {
    pub vars: usize,
    pub polys: Vec<NcPoly>,
}

impl IdentitySet {
    /// `vars` is raised to cover every variable that occurs.
    pub fn new(vars: usize, polys: Vec<NcPoly>) -> IdentitySet {
        let polys: Vec<NcPoly> = polys.into_iter().map(|p| p.lift()).collect();
        let need = polys.iter().map(|p| p.max_var() as usize).max().unwrap_or(0);
        IdentitySet { vars: vars.max(need).max(1), polys }
    }

    pub fn single(p: NcPoly) -> IdentitySet {
        IdentitySet::new(0, vec![p])
    }

    pub fn abelianized(&self) -> Vec<CPoly> {
        self.polys.iter().map(|p| p.abelianize(self.vars)).collect()
    }

    pub fn bars(&self) -> Vec<NcPoly> {
        self.polys.iter().map(|p| p.bar_transversal()).collect()
    }

    /// The same set with `[X_1, X_2]` added.
    pub fn with_commutator(&self) -> IdentitySet {
        let mut polys = self.polys.clone();
        polys.push(NcPoly::commutator(&NcPoly::var(1), &NcPoly::var(2)));
        IdentitySet::new(self.vars.max(2), polys)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecideOptions {
    /// Cap on tuple evaluations for exhaustive checks.
    pub eval_cap: u64,
    pub gsb_limits: CompletionLimits,
    pub fast_path: bool,
    /// Cap on specializations tried in the presented-ring search.
    pub max_specializations: u64,
    /// Trial-division bound for factoring.
    pub factor_budget: u64,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            eval_cap: DEFAULT_EVAL_CAP,
            gsb_limits: CompletionLimits::default(),
            fast_path: true,
            max_specializations: 1_000_000,
            factor_budget: 10_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limit {
    pub stage: String,
    pub limit: String,
}

fn limit(stage: &str, what: impl Into<String>) -> Limit {
    Limit { stage: stage.into(), limit: what.into() }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub family: RingFamily,
    pub p: u64,
    /// Basis elements `a, b` with `ab != ba`.
    pub pair: Option<(String, String)>,
    pub trace: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Forces,
    Witness(Witness),
    ResourceLimit(Limit),
}

impl Verdict {
    pub fn kind(&self) -> &'static str {
        match self {
            Verdict::Forces => "forces",
            Verdict::Witness(_) => "witness",
            Verdict::ResourceLimit(_) => "resource_limit",
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Witness(w) => Some(w),
            _ => None,
        }
    }
}

pub type StageResult = Result<Option<Witness>, Limit>;

fn with_trace(r: StageResult, trace: String) -> StageResult {
    r.map(|o| o.map(|w| Witness { trace: Some(trace), ..w }))
}

/// Checks that `family` is noncommutative and satisfies every identity.
pub fn verify_witness(ids: &IdentitySet, family: &RingFamily, opts: &DecideOptions) -> StageResult {
    if let RingFamily::Presented { .. } = family {
        return verify_presented(ids, family, opts);
    }
    let ring = make_ring(family).map_err(|e| limit("verify", e.to_string()))?;
    let pair = match ring.is_commutative() {
        None => return Ok(None),
        Some((i, j)) => (ring.labels[i].clone(), ring.labels[j].clone()),
    };
    match ring.verify_identities(&ids.polys, ids.vars, opts.eval_cap) {
        Ok(true) => Ok(Some(Witness { family: family.clone(), p: family.prime(), pair: Some(pair), trace: None })),
        Ok(false) => Ok(None),
        Err(e) => Err(limit(&format!("verify {}", family.describe()), e.to_string())),
    }
}

fn prime_factors(n: &BigInt, budget: u64, stage: &str) -> Result<Vec<(u64, u32)>, Limit> {
    let f = factor(n, budget).ok_or_else(|| limit(stage, "factoring budget"))?;
    f.into_iter()
        .map(|(p, k)| p.to_u64().map(|p| (p, k)).ok_or_else(|| limit(stage, "prime factor exceeds 64 bits")))
        .collect()
}

fn checked_pow(p: u64, n: u32, stage: &str) -> Result<u64, Limit> {
    p.checked_pow(n).filter(|&q| q < 1 << 62).ok_or_else(|| limit(stage, format!("{}^{} too large", p, n)))
}

// ---------------------------------------------------------------------------
// Characteristic constraint

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PrimeConstraint {
    AllPrimes,
    /// `(p, a_p)`: the characteristic divides one of the `p^{a_p}`.
    Finite(Vec<(u64, u32)>),
}

impl PrimeConstraint {
    pub fn allows(&self, p: u64) -> bool {
        match self {
            PrimeConstraint::AllPrimes => true,
            PrimeConstraint::Finite(v) => v.iter().any(|&(q, _)| q == p),
        }
    }
}

/// Factors the value of the first non-zero abelianization at its least
/// non-vanishing grid point.
pub fn candidate_primes(ids: &IdentitySet, budget: u64) -> Result<PrimeConstraint, Limit> {
    for phi in ids.abelianized() {
        if phi.is_zero() {
            continue;
        }
        let d = phi.total_degree().unwrap_or(0);
        let (_, v) = find_nonvanishing_point(&phi, d).expect("non-zero polynomial has a non-vanishing grid point");
        return Ok(PrimeConstraint::Finite(prime_factors(&v, budget, "candidate primes")?));
    }
    Ok(PrimeConstraint::AllPrimes)
}

/// Odometer over `{0..base}^len`, last coordinate fastest; `f` returns
/// `false` to stop early.
fn for_each_tuple<F: FnMut(&[usize]) -> bool>(base: usize, len: usize, mut f: F) {
    let mut cur = vec![0usize; len];
    loop {
        if !f(&cur) {
            return;
        }
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < base {
                break;
            }
            cur[i] = 0;
        }
    }
}

// ---------------------------------------------------------------------------
// U_p

/// Integer upper-triangular matrices `[[a, b], [0, c]]` as `[a, b, c]`.
struct IntUpper;

impl Evaluator for IntUpper {
    type Elem = [BigInt; 3];
    fn one(&self) -> [BigInt; 3] {
        [BigInt::one(), BigInt::zero(), BigInt::one()]
    }
    fn zero(&self) -> [BigInt; 3] {
        [BigInt::zero(), BigInt::zero(), BigInt::zero()]
    }
    fn add(&self, x: &[BigInt; 3], y: &[BigInt; 3]) -> [BigInt; 3] {
        [&x[0] + &y[0], &x[1] + &y[1], &x[2] + &y[2]]
    }
    fn mul(&self, x: &[BigInt; 3], y: &[BigInt; 3]) -> [BigInt; 3] {
        [&x[0] * &y[0], &x[0] * &y[1] + &x[1] * &y[2], &x[2] * &y[2]]
    }
    fn scale(&self, x: &[BigInt; 3], c: &BigInt) -> [BigInt; 3] {
        [c * &x[0], c * &x[1], c * &x[2]]
    }
}

/// Evaluates on the eight 0/1 upper-triangular integer matrices; the gcd of
/// all entries bounds the primes `p` for which `U_p` can work.
pub fn decide_up(ids: &IdentitySet, opts: &DecideOptions) -> StageResult {
    let s = ids.vars;
    let total = 8u64.checked_pow(s as u32).filter(|&t| t <= opts.eval_cap);
    if total.is_none() {
        return Err(limit("U_p", format!("8^{} integer evaluations", s)));
    }
    let mats: Vec<[BigInt; 3]> =
        (0..8u32).map(|m| [BigInt::from(m & 1), BigInt::from((m >> 1) & 1), BigInt::from((m >> 2) & 1)]).collect();
    let mut g = BigInt::zero();
    for_each_tuple(8, s, |idx| {
        let vals: Vec<[BigInt; 3]> = idx.iter().map(|&i| mats[i].clone()).collect();
        for p in &ids.polys {
            for e in eval_with(p, &IntUpper, &vals).iter() {
                g = g.gcd(e);
            }
        }
        !g.is_one()
    });
    if g.is_one() {
        return Ok(None);
    }
    if g.is_zero() {
        return with_trace(verify_witness(ids, &RingFamily::Up { p: 2 }, opts), "U_p: all integer evaluations vanish".into());
    }
    for (p, _) in prime_factors(&g, opts.factor_budget, "U_p")? {
        let r = verify_witness(ids, &RingFamily::Up { p }, opts)?;
        if r.is_some() {
            return with_trace(Ok(r), format!("U_p: gcd of integer evaluations {}", g));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Twisted rings B(p, n, l)

/// Membership question `sum_i (X_{alpha_i}^{p^k} - X_{alpha_i}) A_i^{p^k} B_i
/// in (p, X^{p^n} - X)` over integer polynomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockInstance {
    pub a: Vec<CPoly>,
    pub b: Vec<CPoly>,
    pub alpha: Vec<VarId>,
    pub kappa: u32,
}

impl BlockInstance {
    pub fn new(a: Vec<CPoly>, b: Vec<CPoly>, alpha: Vec<VarId>) -> BlockInstance {
        assert!(a.len() == b.len() && a.len() == alpha.len() && !a.is_empty());
        let kappa = a.iter().chain(&b).filter_map(|x| x.total_degree()).max().unwrap_or(0);
        BlockInstance { a, b, alpha, kappa }
    }

    fn nvars(&self) -> usize {
        self.a[0].nvars()
    }

    /// The sum over `F_p` with twist exponent `p^k`.
    pub fn sum_mod_p(&self, p: u64, k: u32) -> CPoly {
        let s = self.nvars();
        let dom = Domain::ModP(p);
        let q = p.pow(k);
        let mut r = CPoly::zero(s, dom);
        for ((a, b), &al) in self.a.iter().zip(&self.b).zip(&self.alpha) {
            let x = CPoly::var(s, dom, al as usize - 1);
            let f = x.pow(q).sub(&x);
            let aq = a.to_domain(dom).scale_exponents(q as u32);
            r = r.add(&f.mul(&aq).mul(&b.to_domain(dom)));
        }
        r
    }

    /// Gcd of the integer coefficients of the block conditions
    /// `sum_i X_{alpha_i} A_i lambda_{i,e} - A_i lambda_{i,e - delta_{alpha_i}}`,
    /// `lambda_{i,e}` the coefficient of `X^e` in `B_i`. For `p^k > kappa + 2`
    /// and `n >= 2k` the sum is a member iff `p` divides this gcd.
    pub fn condition_gcd(&self) -> BigInt {
        let s = self.nvars();
        let mut conds: BTreeMap<Vec<u32>, CPoly> = BTreeMap::new();
        for ((a, b), &al) in self.a.iter().zip(&self.b).zip(&self.alpha) {
            let ai = al as usize - 1;
            let xa = CPoly::var(s, Domain::Int, ai).mul(a);
            for (e, lam) in b.terms() {
                let c = conds.entry(e.clone()).or_insert_with(|| CPoly::zero(s, Domain::Int));
                *c = c.add(&xa.scale(lam));
                let mut e2 = e.clone();
                e2[ai] += 1;
                let c2 = conds.entry(e2).or_insert_with(|| CPoly::zero(s, Domain::Int));
                *c2 = c2.sub(&a.scale(lam));
            }
        }
        conds.values().fold(BigInt::zero(), |g, c| g.gcd(&c.content_gcd()))
    }
}

fn least_k_above(p: u64, x: u64) -> u32 {
    let mut k = 1;
    let mut q = p;
    while q <= x {
        q = q.saturating_mul(p);
        k += 1;
    }
    k
}

/// Least `(p, n, k)` with `1 <= k <= n/2` making the instance a member.
pub fn block_decide(inst: &BlockInstance) -> Option<(u64, u32, u32)> {
    block_decide_joint(std::slice::from_ref(inst))
}

/// One triple serving every instance.
pub fn block_decide_joint(insts: &[BlockInstance]) -> Option<(u64, u32, u32)> {
    let kappa = insts.iter().map(|i| i.kappa).max().unwrap_or(0) as u64;
    let n = insts.iter().fold(BigInt::zero(), |g, i| g.gcd(&i.condition_gcd()));
    let mut best: Option<(u64, u32, u32)> = None;
    let p1 = if n.is_zero() {
        Some(2)
    } else {
        factor(&n, u64::MAX).and_then(|f| f.first().and_then(|(p, _)| p.to_u64()))
    };
    if let Some(p) = p1 {
        let k = least_k_above(p, kappa + 2);
        best = Some((p, 2 * k, k));
    }
    let bound = kappa * kappa + 4 * kappa + 2;
    for p in primes_up_to(kappa + 2) {
        let mut k = 1;
        while p.pow(k) <= kappa + 2 {
            let sums: Vec<CPoly> = insts.iter().map(|i| i.sum_mod_p(p, k)).collect();
            let mut nn = (2 * k).max(2);
            loop {
                let big = p.pow(nn) > bound;
                let ok = if big {
                    sums.iter().all(|f| f.is_zero())
                } else {
                    sums.iter().all(|f| field_ideal_normal_form(f, p, nn).is_zero())
                };
                if ok {
                    let t = (p, nn, k);
                    if best.map_or(true, |b| t < b) {
                        best = Some(t);
                    }
                    break;
                }
                if big {
                    break;
                }
                nn += 1;
            }
            k += 1;
        }
    }
    best
}

/// `chi(i, j) = 1` iff `i > j`.
pub fn chi(i: VarId, j: VarId) -> u32 {
    (i > j) as u32
}

/// Data of the one-commutator analysis: per-identity forms and the
/// membership instances obtained from the coefficient of each `V_j`.
#[derive(Clone, Debug)]
pub struct BCaseData {
    pub vars: usize,
    pub forms: Vec<CaseIForm>,
    pub kappa: u32,
    /// Instances for twists `l <= n/2`.
    pub direct: Vec<BlockInstance>,
    /// Instances for `l > n/2`, with twist `n - l` and the roles of the left
    /// and right cofactors exchanged.
    pub swapped: Vec<BlockInstance>,
}

impl BCaseData {
    pub fn new(ids: &IdentitySet) -> BCaseData {
        let s = ids.vars;
        let forms: Vec<CaseIForm> = ids.polys.iter().map(reduce_case_i).collect();
        let mut direct = Vec::new();
        let mut swapped = Vec::new();
        let mut kappa = 0;
        for f in &forms {
            for t in &f.comm_terms {
                kappa = kappa.max(t.a.degree().unwrap_or(0)).max(t.c.degree().unwrap_or(0));
            }
            for j in 1..=s as VarId {
                let (mut a, mut b, mut a2, mut b2, mut al) = (vec![], vec![], vec![], vec![], vec![]);
                for t in &f.comm_terms {
                    let other = if t.i == j {
                        t.j
                    } else if t.j == j {
                        t.i
                    } else {
                        continue;
                    };
                    let sign = BigInt::from(if chi(other, j) == 1 { -1 } else { 1 });
                    let ac = t.a.abelianize(s);
                    let cc = t.c.abelianize(s);
                    b.push(cc.scale(&sign));
                    b2.push(ac.scale(&-&sign));
                    a.push(ac);
                    a2.push(cc);
                    al.push(other);
                }
                if !a.is_empty() {
                    direct.push(BlockInstance::new(a, b, al.clone()));
                    swapped.push(BlockInstance::new(a2, b2, al));
                }
            }
        }
        BCaseData { vars: s, forms, kappa: kappa as u32, direct, swapped }
    }

    /// `H` over `F_p` in `U_1..U_s` (indices `0..s`) and `V_1..V_s`
    /// (indices `s..2s`), twist `p^l`.
    pub fn h(&self, form: usize, p: u64, l: u32) -> CPoly {
        let s = self.vars;
        let dom = Domain::ModP(p);
        let q = p.pow(l);
        let u = |i: VarId| CPoly::var(2 * s, dom, i as usize - 1);
        let v = |i: VarId| CPoly::var(2 * s, dom, s + i as usize - 1);
        let mut h = CPoly::zero(2 * s, dom);
        for t in &self.forms[form].comm_terms {
            let (i, j) = (t.i, t.j);
            let lin = u(i).pow(q).mul(&v(j)).add(&u(j).mul(&v(i))).sub(&u(j).pow(q).mul(&v(i))).sub(&u(i).mul(&v(j)));
            let aq = t.a.abelianize(s).to_domain(dom).scale_exponents(q as u32).extend_vars(2 * s);
            let c = t.c.abelianize(s).to_domain(dom).extend_vars(2 * s);
            h = h.add(&lin.mul(&aq).mul(&c));
        }
        h
    }

    /// Coefficient of `V_j` in `H`, in `U_1..U_s`.
    pub fn h_j(&self, form: usize, j: VarId, p: u64, l: u32) -> CPoly {
        let s = self.vars;
        let dom = Domain::ModP(p);
        let q = p.pow(l);
        let mut r = CPoly::zero(s, dom);
        for t in &self.forms[form].comm_terms {
            let other = if t.i == j {
                t.j
            } else if t.j == j {
                t.i
            } else {
                continue;
            };
            let x = CPoly::var(s, dom, other as usize - 1);
            let mut term = x.pow(q).sub(&x);
            if chi(other, j) == 1 {
                term = term.neg();
            }
            let aq = t.a.abelianize(s).to_domain(dom).scale_exponents(q as u32);
            r = r.add(&term.mul(&aq).mul(&t.c.abelianize(s).to_domain(dom)));
        }
        r
    }
}

/// Exact test of every identity on `B(p,n,l)`. At generic points
/// `X_i = (U_i, V_i)` the first coordinate is the abelianization and the
/// second is linear in the `V`'s; each `V_j`-coefficient must vanish as a
/// function on `F_{p^n}`.
pub fn b_satisfies(ids: &IdentitySet, p: u64, n: u32, l: u32) -> bool {
    let s = ids.vars;
    let qn = (p as u128).pow(n);
    let ql = (p as u128).pow(l);
    let red = |e: u128| -> u32 {
        if e == 0 {
            0
        } else {
            ((e - 1) % (qn - 1) + 1) as u32
        }
    };
    let pb = BigInt::from(p);
    for poly in &ids.polys {
        if !field_ideal_normal_form(&poly.abelianize(s), p, n).is_zero() {
            return false;
        }
        let mut acc: BTreeMap<(VarId, Vec<u32>), u64> = BTreeMap::new();
        for (w, c) in poly.terms() {
            let cm = c.mod_floor(&pb).to_u64().unwrap();
            if cm == 0 {
                continue;
            }
            let tot = w.exponents(s);
            let mut pre = vec![0u32; s];
            for &v in &w.0 {
                let vi = v as usize - 1;
                let key: Vec<u32> = (0..s)
                    .map(|k| {
                        let suf = tot[k] - pre[k] - (k == vi) as u32;
                        red(ql * pre[k] as u128 + suf as u128)
                    })
                    .collect();
                let e = acc.entry((v, key)).or_insert(0);
                *e = (*e + cm) % p;
                pre[vi] += 1;
            }
        }
        if acc.values().any(|&c| c != 0) {
            return false;
        }
    }
    true
}

/// Largest field degree to try for prime `p` when every bar vanishes mod `p`:
/// beyond it the membership question only depends on regimes already seen.
fn b_degree_cap(p: u64, kappa: u64) -> u32 {
    let k1 = least_k_above(p, kappa + 2);
    let nb = least_k_above(p, kappa * kappa + 4 * kappa + 2);
    (2 * k1).max(nb).max(2)
}

pub fn decide_b(ids: &IdentitySet, opts: &DecideOptions) -> StageResult {
    let s = ids.vars;
    let constraint = candidate_primes(ids, opts.factor_budget)?;
    let bars = ids.bars();
    let data = BCaseData::new(ids);
    let kappa = data.kappa as u64;
    let g = bars.iter().fold(BigInt::zero(), |g, b| g.gcd(&b.content_gcd()));

    // primes at which every bar vanishes, and the rest
    let mut vanishing: BTreeSet<u64> = BTreeSet::new();
    let mut others: BTreeSet<u64> = BTreeSet::new();
    if g.is_zero() {
        vanishing.extend(primes_up_to(kappa + 2));
        for insts in [&data.direct, &data.swapped] {
            let n = insts.iter().fold(BigInt::zero(), |acc, i| acc.gcd(&i.condition_gcd()));
            if !n.is_zero() {
                vanishing.extend(prime_factors(&n, opts.factor_budget, "B")?.into_iter().map(|(p, _)| p));
            }
        }
    } else {
        vanishing.extend(prime_factors(&g, opts.factor_budget, "B")?.into_iter().map(|(p, _)| p));
        let dmax = bars.iter().filter_map(|b| b.degree()).max().unwrap_or(0) as u64;
        others.extend(primes_up_to(dmax.sqrt()).into_iter().filter(|p| !vanishing.contains(p)));
    }
    let all: BTreeSet<u64> = vanishing.union(&others).copied().filter(|&p| constraint.allows(p)).collect();
    for p in all {
        let pb = BigInt::from(p);
        let ncap = if vanishing.contains(&p) {
            b_degree_cap(p, kappa)
        } else {
            let dp = bars
                .iter()
                .map(|b| b.reduce_mod(&pb).lift().degree())
                .filter_map(|d| d)
                .min()
                .unwrap_or(0) as u64;
            let mut n = 0;
            while p.checked_pow(n + 1).map_or(false, |q| q <= dp) {
                n += 1;
            }
            n
        };
        for n in 2..=ncap {
            checked_pow(p, 2 * n, "B")?;
            for l in 1..n {
                if b_satisfies(ids, p, n, l) {
                    let fam = RingFamily::B { p, n, l };
                    let r = verify_witness(ids, &fam, opts)?;
                    if r.is_some() {
                        let case = if vanishing.contains(&p) { "bars vanish" } else { "bar degree bound" };
                        return with_trace(Ok(r), format!("B: {} mod {}, s={}", case, p, s));
                    }
                }
            }
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// A_p

fn trunc3(p: u64) -> RingFamily {
    RingFamily::TruncFree { p, k: 3, relations: vec![] }
}

/// Every commutator coefficient vanishes on `F_p`.
fn ap_coefficients_vanish(forms: &[ApForm], s: usize, p: u64) -> bool {
    forms.iter().all(|f| f.a.values().all(|c| field_ideal_normal_form(&c.abelianize(s), p, 1).is_zero()))
}

/// Candidate primes when every bar is zero: bounded by the degree of some
/// non-zero coefficient, or dividing its content.
fn ap_coefficient_primes(forms: &[ApForm], s: usize, budget: u64) -> Result<Vec<u64>, Limit> {
    let first = forms.iter().flat_map(|f| f.a.values()).find(|c| !c.is_zero());
    let c = match first {
        None => return Ok(vec![2]),
        Some(c) => c.abelianize(s),
    };
    let mut ps: BTreeSet<u64> = primes_up_to(c.total_degree().unwrap_or(0) as u64).into_iter().collect();
    ps.extend(prime_factors(&c.content_gcd(), budget, "A_p")?.into_iter().map(|(p, _)| p));
    Ok(ps.into_iter().collect())
}

/// Per prime power `p^a` exactly dividing `N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ApPrimeCase {
    /// `p^a` divides every bar coefficient: reduces to the all-bars-zero test.
    Delegate { p: u64, a: u32 },
    Present(ApPrimeRecord),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApPrimeRecord {
    pub p: u64,
    pub a: u32,
    pub b: u32,
    /// Index of the specialization `G_k` used.
    pub k: usize,
    pub f: CPoly,
    pub f_rest: CPoly,
    /// Least exponent of `F`; `p^b u^{a t} = 0` in every candidate ring.
    pub t: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApSearchData {
    pub d_max: u32,
    pub d: BigInt,
    pub g: Vec<CPoly>,
    pub n: BigInt,
    pub primes: Vec<ApPrimeCase>,
}

impl ApSearchData {
    pub fn new(ids: &IdentitySet, budget: u64, point_cap: u64) -> Result<ApSearchData, Limit> {
        let s = ids.vars;
        let bars = ids.bars();
        let d_max = bars.iter().filter_map(|b| b.degree()).max().expect("some bar is non-zero") as u32;
        let d = bars.iter().fold(BigInt::zero(), |g, b| g.gcd(&b.content_gcd()));
        let base = d_max as u64 + 1;
        let weights: Vec<u64> = (0..s as u32).map(|i| base.pow(i)).collect();
        let points = base.checked_pow(s as u32).filter(|&x| x <= point_cap).ok_or_else(|| limit("A_p", "grid size"))?;
        let g: Vec<CPoly> = bars.iter().map(|b| b.abelianize(s).kronecker(&weights)).collect();
        let mut n = BigInt::zero();
        'outer: for j in 0..=points {
            let x = [BigInt::from(j)];
            for gi in &g {
                n = n.gcd(&gi.eval(&x));
                if n.is_one() {
                    break 'outer;
                }
            }
        }
        assert!(!n.is_zero());
        let mut primes = Vec::new();
        for (p, a) in prime_factors(&n, budget, "A_p")? {
            let pa = BigInt::from(p).pow(a);
            if (&d % &pa).is_zero() {
                primes.push(ApPrimeCase::Delegate { p, a });
                continue;
            }
            let b = valuation(&d, p).min(a);
            let (k, gk) = g
                .iter()
                .enumerate()
                .find(|(_, gi)| !gi.is_zero() && valuation(&gi.content_gcd(), p) == b)
                .expect("some specialization attains the valuation of d");
            let pbb = BigInt::from(p).pow(b);
            let pb1 = &pbb * BigInt::from(p);
            let mut f = CPoly::zero(1, Domain::Int);
            let mut fr = CPoly::zero(1, Domain::Int);
            for (e, c) in gk.terms() {
                if valuation(c, p) == b {
                    f.add_term(e.clone(), c / &pbb);
                } else {
                    fr.add_term(e.clone(), c / &pb1);
                }
            }
            let t = f.terms().next().map(|(e, _)| e[0]).unwrap();
            primes.push(ApPrimeCase::Present(ApPrimeRecord { p, a, b, k, f, f_rest: fr, t }));
        }
        Ok(ApSearchData { d_max, d, g, n, primes })
    }
}

pub fn decide_ap(ids: &IdentitySet, opts: &DecideOptions) -> StageResult {
    let s = ids.vars;
    let forms: Vec<ApForm> = ids.polys.iter().map(reduce_ap).collect();
    if ids.bars().iter().all(|b| b.is_zero()) {
        for p in ap_coefficient_primes(&forms, s, opts.factor_budget)? {
            if ap_coefficients_vanish(&forms, s, p) {
                let r = verify_witness(ids, &trunc3(p), opts)?;
                if r.is_some() {
                    return with_trace(Ok(r), format!("A_p: bars vanish, coefficients are identities of F_{}", p));
                }
            }
        }
        return Ok(None);
    }
    let data = ApSearchData::new(ids, opts.factor_budget, opts.eval_cap)?;
    for case in &data.primes {
        match case {
            ApPrimeCase::Delegate { p, a } => {
                if ap_coefficients_vanish(&forms, s, *p) {
                    let r = verify_witness(ids, &trunc3(*p), opts)?;
                    if r.is_some() {
                        return with_trace(Ok(r), format!("A_p: {}^{} divides every bar coefficient", p, a));
                    }
                }
            }
            ApPrimeCase::Present(rec) => {
                let r = ap_presented(ids, rec, opts)?;
                if r.is_some() {
                    return Ok(r);
                }
            }
        }
    }
    Ok(None)
}

/// `Z/q` arithmetic on [`Terms`] with reduction against a basis.
struct NfEval<'a> {
    basis: &'a GsBasis,
    q: u64,
}

impl NfEval<'_> {
    fn add_into(&self, t: &mut Terms, w: Word, c: u64) {
        let e = t.entry(w).or_insert(0);
        *e = ((*e as u128 + c as u128) % self.q as u128) as u64;
    }
    fn clean(&self, mut t: Terms) -> Terms {
        t.retain(|_, c| *c != 0);
        self.basis.reduce_terms(t)
    }
}

impl Evaluator for NfEval<'_> {
    type Elem = Terms;
    fn one(&self) -> Terms {
        self.clean(Terms::from([(Word::empty(), 1 % self.q)]))
    }
    fn zero(&self) -> Terms {
        Terms::new()
    }
    fn add(&self, a: &Terms, b: &Terms) -> Terms {
        let mut r = a.clone();
        for (w, c) in b {
            self.add_into(&mut r, w.clone(), *c);
        }
        self.clean(r)
    }
    fn mul(&self, a: &Terms, b: &Terms) -> Terms {
        let mut r = Terms::new();
        for (w1, c1) in a {
            for (w2, c2) in b {
                let c = ((*c1 as u128 * *c2 as u128) % self.q as u128) as u64;
                self.add_into(&mut r, w1.concat(w2), c);
            }
        }
        self.clean(r)
    }
    fn scale(&self, a: &Terms, c: &BigInt) -> Terms {
        let k = c.mod_floor(&BigInt::from(self.q)).to_u64().unwrap();
        let r: Terms = a.iter().map(|(w, x)| (w.clone(), ((*x as u128 * k as u128) % self.q as u128) as u64)).collect();
        self.clean(r)
    }
}

fn xy_commutator() -> NcPoly {
    NcPoly::commutator(&NcPoly::var(1), &NcPoly::var(2))
}

/// `p^b (X,Y)^depth` (sorted words suffice once depth >= 3) and the
/// relations making commutators central and killed by `p, X, Y`.
fn structural_generators(p: u64, b: u32, depth: u32) -> Vec<NcPoly> {
    let (x, y) = (NcPoly::var(1), NcPoly::var(2));
    let c = xy_commutator();
    let pb = BigInt::from(p).pow(b);
    let mut gens = Vec::new();
    for_each_tuple(2, depth as usize, |idx| {
        let w = Word(idx.iter().map(|&i| i as VarId + 1).collect());
        if depth < 3 || w.is_sorted() {
            gens.push(NcPoly::monomial(w, pb.clone()));
        }
        true
    });
    gens.push(x.mul(&c));
    gens.push(y.mul(&c));
    gens.push(c.mul(&x));
    gens.push(c.mul(&y));
    gens.push(c.scale(&BigInt::from(p)));
    gens
}

/// Words shorter than `depth` not reducible by a unit-led basis element, with
/// the coefficient range each can carry.
fn normal_words(basis: &GsBasis, depth: u32) -> Vec<(Word, u64)> {
    let q = basis.coeffs.q;
    let contains = |w: &Word, lead: &Word| lead.len() <= w.len() && w.0.windows(lead.len().max(1)).any(|s| s == &lead.0[..]);
    let mut out = Vec::new();
    let mut layer = vec![Word::empty()];
    for len in 0..depth {
        let mut next = Vec::new();
        for w in layer {
            let reducible = basis.elements.iter().any(|g| g.e == 0 && (g.lead.is_empty() || contains(&w, &g.lead)));
            if reducible {
                continue;
            }
            let range = basis
                .elements
                .iter()
                .filter(|g| g.lead.is_empty() || contains(&w, &g.lead))
                .map(|g| basis.coeffs.p.pow(g.e))
                .min()
                .unwrap_or(q);
            if len + 1 < depth {
                for l in 1..=2 {
                    let mut v = w.0.clone();
                    v.push(l);
                    next.push(Word(v));
                }
            }
            out.push((w, range));
        }
        layer = next;
    }
    out.sort_by(|x, y| x.0.cmp(&y.0));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Visit {
    /// Keep going; from [`walk_level`], the level is exhausted.
    Continue,
    /// The basis grew: recompute normal words and redo the level.
    Restart,
    Stop,
}

/// Walks the specializations `X_i -> z_i` with `z_i` supported on `words`
/// (all shorter than `level + 1`) and some coefficient on a word of length
/// exactly `level`. Specializations over a smaller word set or coefficient
/// range at lower levels were already visited, so restarting after the ideal
/// grows loses nothing.
fn walk_level<F>(words: &[(Word, u64)], s: usize, level: usize, count: &mut u64, cap: u64, mut visit: F) -> Result<Visit, Limit>
where
    F: FnMut(&[Terms]) -> Result<Visit, Limit>,
{
    let wl: Vec<&(Word, u64)> = words.iter().filter(|(w, r)| w.len() <= level && *r > 1).collect();
    if level > 0 && wl.iter().all(|(w, _)| w.len() < level) {
        return Ok(Visit::Continue);
    }
    let n = wl.len();
    let slots = s * n;
    let mut digits = vec![0u64; slots];
    loop {
        let fresh = level == 0 || digits.iter().enumerate().any(|(k, &d)| d != 0 && wl[k % n].0.len() == level);
        if fresh {
            *count += 1;
            if *count > cap {
                return Err(limit("A_p", format!("more than {} specializations", cap)));
            }
            let zs: Vec<Terms> = (0..s)
                .map(|i| (0..n).filter(|&k| digits[i * n + k] != 0).map(|k| (wl[k].0.clone(), digits[i * n + k])).collect())
                .collect();
            match visit(&zs)? {
                Visit::Continue => {}
                other => return Ok(other),
            }
        }
        let mut k = slots;
        loop {
            if k == 0 {
                return Ok(Visit::Continue);
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < wl[k % n].1 {
                break;
            }
            digits[k] = 0;
        }
    }
}

/// Variables beyond the largest one occurring need no specialization.
fn used_vars(ids: &IdentitySet) -> usize {
    ids.polys.iter().map(|p| p.max_var() as usize).max().unwrap_or(0)
}

fn gs_limit(e: GsError) -> Limit {
    match e {
        GsError::Resource { limit: l, .. } => limit("A_p completion", l),
        other => limit("A_p completion", other.to_string()),
    }
}

/// The presented candidate: `Z/p^a{X,Y}` modulo `p^b (X,Y)^{at}`, the
/// structural relations and every specialization of the identities. A
/// witness exists iff `[X,Y]` survives.
fn ap_presented(ids: &IdentitySet, rec: &ApPrimeRecord, opts: &DecideOptions) -> StageResult {
    let (p, a) = (rec.p, rec.a);
    // A known member of the class satisfying everything settles it at once.
    if let Ok(Some(w)) = verify_witness(ids, &trunc3(p), opts) {
        return Ok(Some(Witness { trace: Some(format!("A_p: {}^{}, F_{}{{x,y}}/(x,y)^3 satisfies the identities", p, a, p)), ..w }));
    }
    presented_search(ids, rec, opts)
}

/// The completion-based search alone.
pub fn presented_search(ids: &IdentitySet, rec: &ApPrimeRecord, opts: &DecideOptions) -> StageResult {
    let (p, a, b) = (rec.p, rec.a, rec.b);
    let depth = a.checked_mul(rec.t).filter(|&d| d <= 64).ok_or_else(|| limit("A_p", "truncation degree"))?;
    let q = checked_pow(p, a, "A_p")?;
    let comm = xy_commutator();
    let mut c = Completer::new(p, a, opts.gsb_limits);
    for g in structural_generators(p, b, depth) {
        c.push(&g);
    }
    c.run().map_err(gs_limit)?;
    if c.basis().is_member(&comm) {
        return Ok(None);
    }
    let used = used_vars(ids);
    let mut pushed = 0u64;
    let mut count = 0u64;
    for level in 0..depth as usize {
        loop {
            let words = normal_words(c.basis(), depth);
            let step = walk_level(&words, used, level, &mut count, opts.max_specializations, |zs| {
                let vals: Vec<Terms> = {
                    let ev = NfEval { basis: c.basis(), q };
                    ids.polys.iter().map(|poly| eval_with(poly, &ev, zs)).filter(|v| !v.is_empty()).collect()
                };
                if vals.is_empty() {
                    return Ok(Visit::Continue);
                }
                for v in vals {
                    c.push_terms(v);
                    pushed += 1;
                }
                c.run().map_err(gs_limit)?;
                Ok(if c.basis().is_member(&comm) { Visit::Stop } else { Visit::Restart })
            })?;
            match step {
                Visit::Continue => break,
                Visit::Restart => {}
                Visit::Stop => return Ok(None),
            }
        }
    }
    let basis = c.finish();
    let lines: Vec<String> = basis.dump().lines().map(String::from).collect();
    let fam = RingFamily::Presented { p, a, b, depth, basis: lines };
    let r = verify_witness(ids, &fam, opts)?;
    with_trace(Ok(r), format!("A_p: presented quotient, {} specialization generators", pushed))
}

/// For a presented witness: the dumped basis is complete, contains the
/// structural relations and `p^b (X,Y)^depth`, keeps `[X,Y]` alive, and
/// kills every specialization of every identity.
pub fn verify_presented(ids: &IdentitySet, family: &RingFamily, opts: &DecideOptions) -> StageResult {
    let (p, a, b, depth, lines) = match family {
        RingFamily::Presented { p, a, b, depth, basis } => (*p, *a, *b, *depth, basis),
        _ => return Ok(None),
    };
    let text = lines.join("\n");
    let basis = GsBasis::from_dump(p, a, &text).map_err(|e| limit("verify presented", e.to_string()))?;
    let gens: Vec<NcPoly> = basis.elements.iter().map(|g| crate::gsb::from_terms(&g.terms)).collect();
    let re = complete(&gens, p, a, opts.gsb_limits).map_err(gs_limit)?;
    if re.elements.iter().any(|g| !basis.reduce_terms(g.terms.clone()).is_empty()) {
        return Ok(None);
    }
    if structural_generators(p, b, depth).iter().any(|g| !basis.is_member(g)) || basis.is_member(&xy_commutator()) {
        return Ok(None);
    }
    let q = p.pow(a);
    let words = normal_words(&basis, depth);
    let ev = NfEval { basis: &basis, q };
    let mut count = 0u64;
    for level in 0..depth as usize {
        let step = walk_level(&words, used_vars(ids), level, &mut count, opts.max_specializations, |zs| {
            let bad = ids.polys.iter().any(|poly| !eval_with(poly, &ev, zs).is_empty());
            Ok(if bad { Visit::Stop } else { Visit::Continue })
        })?;
        if step == Visit::Stop {
            return Ok(None);
        }
    }
    let x = format_word(&Word::letter(1));
    let y = format_word(&Word::letter(2));
    Ok(Some(Witness { family: family.clone(), p, pair: Some((x, y)), trace: None }))
}

// ---------------------------------------------------------------------------
// Orchestration

fn from_theorem(r: Result<Option<TheoremWitness>, TheoremError>, trace: &str) -> Verdict {
    match r {
        Ok(None) => Verdict::Forces,
        Ok(Some(w)) => Verdict::Witness(Witness { family: w.family, p: w.p, pair: w.pair, trace: Some(trace.into()) }),
        Err(e) => Verdict::ResourceLimit(limit(trace, e.to_string())),
    }
}

/// `Q` with `P = [Q(X_1), X_2]` or `P = [X_2, Q(X_1)]`, `Q` univariate.
pub fn central_form(p: &NcPoly) -> Option<NcPoly> {
    if p.is_zero() || p.max_var() != 2 {
        return None;
    }
    let y = NcPoly::var(2);
    for sign in [1i64, -1] {
        let mut q = NcPoly::zero();
        for (w, c) in p.terms() {
            let l = &w.0;
            if !l.is_empty() && l[l.len() - 1] == 2 && l[..l.len() - 1].iter().all(|&v| v == 1) {
                q.add_term(Word(l[..l.len() - 1].to_vec()), c * BigInt::from(sign));
            }
        }
        if !q.is_zero() && NcPoly::commutator(&q, &y).scale(&BigInt::from(sign)) == *p {
            return Some(q);
        }
    }
    None
}

/// The closed-form answer when the input has one of the recognized shapes.
pub fn fast_path(ids: &IdentitySet, opts: &DecideOptions) -> Option<Verdict> {
    if ids.polys.is_empty() {
        return None;
    }
    if ids.polys.iter().all(|p| theorems::theta_profile(p).is_ok()) {
        return Some(from_theorem(theorems::multilinear_decide(&ids.polys), "multilinear criterion"));
    }
    if ids.polys.len() == 1 {
        let p = &ids.polys[0];
        if p.is_univariate() && !p.is_zero() {
            return Some(from_theorem(theorems::univariate_decide(p, opts.eval_cap), "univariate criterion"));
        }
        if let Some(q) = central_form(p) {
            return Some(from_theorem(theorems::central_decide(&q, opts.eval_cap), "central criterion"));
        }
    }
    None
}

/// Runs the class procedures in the order `U_p`, `B`, `A_p`.
pub fn decide_generic(ids: &IdentitySet, opts: &DecideOptions) -> Verdict {
    let mut first_limit = None;
    let stages: [fn(&IdentitySet, &DecideOptions) -> StageResult; 3] = [decide_up, decide_b, decide_ap];
    for stage in stages {
        match stage(ids, opts) {
            Ok(Some(w)) => return Verdict::Witness(w),
            Ok(None) => {}
            Err(l) => {
                first_limit.get_or_insert(l);
            }
        }
    }
    first_limit.map_or(Verdict::Forces, Verdict::ResourceLimit)
}

pub fn decide_all(ids: &IdentitySet, opts: &DecideOptions) -> Verdict {
    if ids.polys.is_empty() {
        let fam = RingFamily::Mat { k: 2, p: 2, n: 1 };
        return match verify_witness(ids, &fam, opts) {
            Ok(Some(w)) => Verdict::Witness(Witness { trace: Some("no identities".into()), ..w }),
            Ok(None) => unreachable!("M_2(F_2) is noncommutative"),
            Err(l) => Verdict::ResourceLimit(l),
        };
    }
    if opts.fast_path {
        if let Some(v) = fast_path(ids, opts) {
            return v;
        }
    }
    decide_generic(ids, opts)
}

/// Fast-path and generic verdicts side by side, when a fast path applies.
pub fn fast_path_agreement(ids: &IdentitySet, opts: &DecideOptions) -> Option<(Verdict, Verdict)> {
    let fast = fast_path(ids, opts)?;
    Some((fast, decide_generic(ids, opts)))
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

    fn mixed_forcing() -> NcPoly {
        NcPoly::from_words(&[(&[1, 1, 2, 2], 1), (&[1, 1, 1, 1, 2, 2], 1), (&[1, 2, 1, 2], 1)])
    }

    #[test]
    fn block_condition_examples() {
        let one = CPoly::constant(1, Domain::Int, 1);
        let xx = CPoly::var(1, Domain::Int, 0);
        let i0 = BlockInstance::new(vec![one.clone()], vec![one.clone()], vec![1]);
        assert_eq!(block_decide(&i0), None);
        let i1 = BlockInstance::new(vec![one.clone(), xx.clone()], vec![xx.clone(), one.neg()], vec![1, 1]);
        assert_eq!(block_decide(&i1), None);
        let iz = BlockInstance::new(vec![one.clone()], vec![CPoly::zero(1, Domain::Int)], vec![1]);
        assert_eq!(block_decide(&iz), Some((2, 2, 1)));
    }

    #[test]
    fn h_j_is_v_coefficient() {
        let ids = IdentitySet::new(
            3,
            vec![x().mul(&NcPoly::commutator(&y(), &NcPoly::var(3))).sub(&NcPoly::commutator(&y(), &NcPoly::var(3)).mul(&x().pow(2)))],
        );
        let data = BCaseData::new(&ids);
        let s = 3;
        for (p, l) in [(2u64, 1u32), (3, 1), (2, 2)] {
            let h = data.h(0, p, l);
            for j in 1..=3u8 {
                let mut coef = CPoly::zero(2 * s, Domain::ModP(p));
                for (e, c) in h.terms() {
                    if e[s + j as usize - 1] == 1 {
                        let mut e2 = e.clone();
                        e2[s + j as usize - 1] = 0;
                        coef.add_term(e2, c.clone());
                    }
                }
                assert_eq!(coef, data.h_j(0, j, p, l).extend_vars(2 * s));
            }
        }
    }

    #[test]
    fn b_exact_matches_exhaustive() {
        let c = NcPoly::commutator(&y(), &NcPoly::var(3));
        let p1 = x().mul(&c).sub(&c.mul(&x().pow(2)));
        let ids = IdentitySet::new(3, vec![p1]);
        assert!(b_satisfies(&ids, 2, 2, 1));
        let ids2 = IdentitySet::single(mixed_forcing());
        for (p, n, l) in [(2u64, 2u32, 1u32), (3, 2, 1), (2, 3, 1), (2, 3, 2)] {
            let ring = make_ring(&RingFamily::B { p, n, l }).unwrap();
            let ex = ring.verify_identities(&ids2.polys, 2, 10_000_000).unwrap();
            assert_eq!(ex, b_satisfies(&ids2, p, n, l), "{} {} {}", p, n, l);
        }
    }

    #[test]
    fn up_examples() {
        let opts = DecideOptions::default();
        assert_eq!(decide_up(&IdentitySet::single(xy_commutator()), &opts), Ok(None));
        assert_eq!(decide_up(&IdentitySet::single(mixed_forcing()), &opts), Ok(None));
    }

    #[test]
    fn candidate_examples() {
        assert_eq!(candidate_primes(&IdentitySet::single(mixed_forcing()), 1000), Ok(PrimeConstraint::Finite(vec![(3, 1)])));
        assert_eq!(candidate_primes(&IdentitySet::single(xy_commutator()), 1000), Ok(PrimeConstraint::AllPrimes));
    }

    #[test]
    fn central_detection() {
        let q = x().pow(3).sub(&x());
        assert_eq!(central_form(&NcPoly::commutator(&q, &y())), Some(q.clone()));
        assert_eq!(central_form(&NcPoly::commutator(&y(), &q)), Some(q.neg()));
        assert_eq!(central_form(&x().mul(&y())), None);
    }

    #[test]
    fn presented_search_agrees_with_known_member() {
        let p = NcPoly::from_words(&[(&[1, 1, 1], 2), (&[1, 1], 2)]);
        let ids = IdentitySet::new(2, vec![p]);
        let data = ApSearchData::new(&ids, 1000, 1_000_000).unwrap();
        assert_eq!(data.n, BigInt::from(4));
        let rec = match &data.primes[..] {
            [ApPrimeCase::Present(r)] => r.clone(),
            other => panic!("{:?}", other),
        };
        assert_eq!((rec.p, rec.a, rec.b, rec.t), (2, 2, 1, 2));
        let opts = DecideOptions::default();
        let w = presented_search(&ids, &rec, &opts).unwrap().expect("truncated free ring is a quotient");
        assert!(matches!(w.family, RingFamily::Presented { p: 2, a: 2, b: 1, depth: 4, .. }));
        assert!(verify_presented(&ids, &w.family, &opts).unwrap().is_some());
        let killed = IdentitySet::new(2, vec![ids.polys[0].clone(), xy_commutator().mul(&NcPoly::var(1)).add(&xy_commutator())]);
        assert_eq!(presented_search(&killed, &rec, &opts), Ok(None));
        assert!(verify_presented(&killed, &w.family, &opts).unwrap().is_none());
    }
}
