//! Criterion checks shared by the acceptance runner and the property suites.
//! Each returns a one-line summary on success and a reason on failure.

#![allow(dead_code)]

use std::path::PathBuf;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use commdecide::cli;
use commdecide::commalg::{cartier, cartier_indices, field_ideal_normal_form, CPoly, Domain};
use commdecide::decide::{self, DecideOptions, IdentitySet, PrimeConstraint, Verdict};
use commdecide::finitering::{make_ring, CheckMode, Fq, IdentityCheck, RingFamily};
use commdecide::freealg::{NcPoly, VarId, Word};
use commdecide::gsb::{complete, initial_term, is_commutative_presentation, CompletionLimits};
use commdecide::oracle::{cross_validate, random_poly, RandomProfile, SearchBounds};
use commdecide::theorems;

pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

pub fn x() -> NcPoly {
    NcPoly::var(1)
}
pub fn y() -> NcPoly {
    NcPoly::var(2)
}

pub fn mixed_forcing() -> NcPoly {
    NcPoly::from_words(&[(&[1, 1, 2, 2], 1), (&[1, 1, 1, 1, 2, 2], 1), (&[1, 2, 1, 2], 1)])
}

pub fn u2_witness() -> NcPoly {
    NcPoly::from_words(&[
        (&[1, 1, 2, 1, 2], 1),
        (&[1, 1, 2, 2, 1], -1),
        (&[1, 2, 1, 1, 2], -1),
        (&[1, 2, 2, 1, 1], 1),
        (&[2, 1, 1, 2, 1], 1),
        (&[2, 1, 2, 1, 1], -1),
    ])
}

pub fn xm_xn(m: u32, n: u32) -> NcPoly {
    x().pow(m).sub(&x().pow(n))
}

pub fn generic() -> DecideOptions {
    DecideOptions { fast_path: false, ..DecideOptions::default() }
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("corpus")
}

pub fn corpus_files() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().map_or(false, |e| e == "ids"))
        .collect();
    v.sort();
    v
}

fn exhaustive(fam: &RingFamily, ps: &[NcPoly], vars: usize) -> Result<bool, String> {
    let r = make_ring(fam).map_err(|e| e.to_string())?;
    let c = r.is_identity_set(ps, vars, CheckMode::Exhaustive { cap: u64::MAX }).map_err(|e| e.to_string())?;
    Ok(c.holds())
}

// ---------------------------------------------------------------------------
// 1-8: worked examples and closed-form criteria

pub fn criterion_1() -> Check {
    let ids = IdentitySet::single(mixed_forcing());
    let opts = DecideOptions::default();
    let cp = decide::candidate_primes(&ids, opts.factor_budget).map_err(|l| l.limit)?;
    ensure!(cp == PrimeConstraint::Finite(vec![(3, 1)]), "candidate primes {:?}", cp);
    let u3 = make_ring(&RingFamily::Up { p: 3 }).unwrap();
    let v = u3.eval(&mixed_forcing(), &[vec![1, 0, 0], vec![0, 1, 1]]).unwrap();
    ensure!(v == vec![0, 2, 0], "U_3 value {:?}", v);
    let c = u3.is_identity(&mixed_forcing(), 2, CheckMode::Exhaustive { cap: 1000 }).unwrap();
    ensure!(!c.holds(), "holds on U_3");
    ensure!(decide::decide_b(&ids, &opts) == Ok(None), "B branch not none");
    ensure!(decide::decide_ap(&ids, &opts) == Ok(None), "A_3 branch not none");
    let verdict = decide::decide_all(&ids, &opts);
    ensure!(verdict == Verdict::Forces, "verdict {:?}", verdict);
    Ok(format!("forces; primes {{3}}; U_3 value {}", u3.format_element(&v)))
}

pub fn criterion_2() -> Check {
    let ids = IdentitySet::single(u2_witness());
    let v = decide::decide_all(&ids, &DecideOptions::default());
    let w = v.witness().ok_or(format!("verdict {:?}", v))?;
    ensure!(w.family == RingFamily::Up { p: 2 }, "family {:?}", w.family);
    let ring = make_ring(&w.family).unwrap();
    let c = ring.is_identity(&u2_witness(), 2, CheckMode::Exhaustive { cap: 64 }).map_err(|e| e.to_string())?;
    ensure!(c.holds(), "fails on U_2: {:?}", c);
    Ok("Up(2), 64 tuples".into())
}

pub fn criterion_3() -> Check {
    let mut n_cases = 0;
    for m in 3..=6u32 {
        for n in 2..m {
            if (m + n) % 2 == 0 {
                continue;
            }
            let ids = IdentitySet::single(xm_xn(m, n));
            for opts in [DecideOptions::default(), generic()] {
                let v = decide::decide_all(&ids, &opts);
                ensure!(v == Verdict::Forces, "X^{} - X^{} (fast_path={}): {:?}", m, n, opts.fast_path, v);
            }
            n_cases += 1;
        }
    }
    Ok(format!("{} pairs forced, fast and generic", n_cases))
}

pub fn criterion_4() -> Check {
    for n in 2..=8u32 {
        let p = x().pow(n).sub(&x());
        let u = theorems::univariate_decide(&p, 10_000_000).map_err(|e| e.to_string())?;
        ensure!(u.is_none(), "univariate X^{} - X gives {:?}", n, u);
        let c = theorems::central_decide(&p, 10_000_000).map_err(|e| e.to_string())?;
        ensure!(c.is_none(), "central X^{} - X gives {:?}", n, c);
    }
    Ok("n = 2..8 none".into())
}

pub fn criterion_5() -> Check {
    let mut forcing = 0;
    for a in 2..=8u64 {
        for b in 1..a {
            let q = x().pow(a as u32).sub(&x().pow(b as u32));
            let c = theorems::central_decide(&q, 10_000_000).map_err(|e| e.to_string())?;
            let hp = theorems::herstein_pair(a, b);
            ensure!(hp == c.is_none(), "({}, {}): pair {} central {:?}", a, b, hp, c);
            let formula = b == 1 || (a.gcd(&b) == 1 && (a + b) % 2 == 1);
            ensure!(hp == formula, "({}, {}): pair {} formula {}", a, b, hp, formula);
            forcing += hp as u32;
        }
    }
    Ok(format!("28 pairs, {} forcing", forcing))
}

pub fn criterion_6() -> Check {
    let none = theorems::power_identity_decide(&[2], 10_000_000).map_err(|e| e.to_string())?;
    ensure!(none.is_none(), "{{2}} gives {:?}", none);
    let w = theorems::power_identity_decide(&[3], 10_000_000).map_err(|e| e.to_string())?.ok_or("{3} none")?;
    let fam = RingFamily::TruncFree { p: 3, k: 3, relations: vec![] };
    ensure!(w.p == 3 && w.family == fam, "{{3}} gives {:?}", w);
    let ring = make_ring(&fam).unwrap();
    ensure!(ring.size() == Some(2187), "size {:?}", ring.size());
    let id = x().mul(&y()).pow(3).sub(&x().pow(3).mul(&y().pow(3)));
    ensure!(exhaustive(&fam, &[id], 2)?, "(XY)^3 = X^3 Y^3 fails");
    Ok("{2} none; {3} -> 3 on 2187 elements".into())
}

pub fn criterion_7() -> Check {
    let none = theorems::freshman_decide(&[2], 10_000_000).map_err(|e| e.to_string())?;
    ensure!(none.is_none(), "{{2}} gives {:?}", none);
    let w = theorems::freshman_decide(&[4, 8], 10_000_000).map_err(|e| e.to_string())?.ok_or("{4,8} none")?;
    let fam = RingFamily::TruncFree { p: 2, k: 3, relations: vec![] };
    ensure!(w.p == 2 && w.family == fam, "{{4,8}} gives {:?}", w);
    let ids: Vec<NcPoly> = [4u32, 8].iter().map(|&n| x().add(&y()).pow(n).sub(&x().pow(n)).sub(&y().pow(n))).collect();
    ensure!(exhaustive(&fam, &ids, 2)?, "expanded identities fail");
    Ok("{2} none; {4,8} -> 2".into())
}

pub fn criterion_8() -> Check {
    let s3 = theorems::symmetrization(3);
    let prof = theorems::theta_profile(&s3).map_err(|e| e.to_string())?;
    ensure!(prof.total == BigInt::from(6), "total {}", prof.total);
    ensure!(prof.theta.len() == 3 && prof.theta.values().all(|t| *t == BigInt::from(3)), "theta {:?}", prof.theta);
    let w = theorems::multilinear_decide(&[s3.clone()]).map_err(|e| e.to_string())?.ok_or("none")?;
    ensure!(w.p == 3 && w.family == RingFamily::MinRing { p: 3 }, "witness {:?}", w);
    let ring = make_ring(&w.family).unwrap();
    ensure!(theorems::holds_on_basis_tuples(&ring, &s3, 3).map_err(|e| e.to_string())?, "basis tuples");
    ensure!(ring.size() == Some(81), "size");
    ensure!(exhaustive(&w.family, &[s3], 3)?, "81^3 evaluation fails");
    Ok("MinRing(3); total 6; theta 3,3,3; 64 basis + 531441 tuples".into())
}

// ---------------------------------------------------------------------------
// 9: minimal-ring certificates

/// Random members of the generating ideal, half of them perturbed by one
/// monomial.
pub fn certify_instance(rng: &mut ChaCha8Rng, p: u64) -> NcPoly {
    let deg = 2 * p as usize + 2;
    let (x, y) = (x(), y());
    let fx = x.pow(p as u32).sub(&x);
    let fy = y.pow(p as u32).sub(&y);
    let c = NcPoly::commutator(&x, &y);
    let small = |rng: &mut ChaCha8Rng, d: usize| {
        random_poly(rng, &RandomProfile { vars: 2, max_degree: d, coeff_range: 3, terms: 3, polys: 1 })
    };
    let room = deg - 2 * p as usize;
    let gens = [
        NcPoly::constant(p as i64),
        fx.mul(&fx),
        fx.mul(&fy),
        fy.mul(&fx),
        c.mul(&fx),
        fy.mul(&c),
        c.mul(&c),
        NcPoly::commutator(&c, &x).mul(&y),
    ];
    let mut f = NcPoly::zero();
    for _ in 0..rng.gen_range(1..=3) {
        let g = &gens[rng.gen_range(0..gens.len())];
        let gd = g.degree().unwrap_or(0);
        let r = deg.saturating_sub(gd).min(room);
        let l = small(rng, r / 2);
        let rr = small(rng, r - r / 2);
        f = f.add(&l.mul(g).mul(&rr));
    }
    if rng.gen_bool(0.5) {
        f = f.add(&small(rng, deg));
    }
    f
}

pub fn criterion_9() -> Check {
    let mut stats = Vec::new();
    for p in [2u64, 3] {
        let ring = make_ring(&RingFamily::MinRing { p }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(900 + p);
        let (mut yes, mut total) = (0, 0);
        for _ in 0..200 {
            let f = certify_instance(&mut rng, p);
            ensure!(f.degree().unwrap_or(0) <= 2 * p as usize + 2, "degree");
            let direct = ring.is_identity(&f, 2, CheckMode::Exhaustive { cap: u64::MAX }).unwrap().holds();
            let cert = theorems::min_ring_certify(&f, p);
            ensure!(cert.is_ok() == direct, "p={} f={}: certify {:?} exhaustive {}", p, f, cert.err(), direct);
            if let Ok(c) = cert {
                let diff = c.reassemble().sub(&f).reduce_mod(&BigInt::from(p)).lift();
                let ok = ring.is_identity(&diff, 2, CheckMode::Exhaustive { cap: u64::MAX }).unwrap().holds();
                ensure!(ok, "reassembly differs beyond identities for {}", f);
            }
            yes += direct as u32;
            total += 1;
        }
        ensure!(yes > 20 && yes < total - 20, "p={}: unbalanced sample {} / {}", p, yes, total);
        stats.push(format!("p={}: {}/{} identities", p, yes, total));
    }
    Ok(stats.join(", "))
}

// ---------------------------------------------------------------------------
// 10: field-ideal normal forms

fn fq_eval(f: &CPoly, fq: &Fq, pt: &[Vec<u64>]) -> Vec<u64> {
    let p = BigInt::from(fq.p);
    let mut acc = fq.zero();
    for (e, c) in f.terms() {
        let c = c.mod_floor(&p).to_u64().unwrap();
        if c == 0 {
            continue;
        }
        let mut t = fq.element(c);
        for (x, &k) in pt.iter().zip(e) {
            t = fq.mul(&t, &fq.pow(x, k as u64));
        }
        acc = fq.add(&acc, &t);
    }
    acc
}

pub fn random_cpoly(rng: &mut ChaCha8Rng, s: usize, deg: u32, terms: usize, dom: Domain) -> CPoly {
    let mut f = CPoly::zero(s, dom);
    for _ in 0..terms {
        let mut e = vec![0u32; s];
        let d = rng.gen_range(0..=deg);
        for _ in 0..d {
            e[rng.gen_range(0..s)] += 1;
        }
        f.add_term(e, BigInt::from(rng.gen_range(-4i64..=4)));
    }
    f
}

fn alon_instance(rng: &mut ChaCha8Rng, p: u64, q: u64, s: usize) -> CPoly {
    let q32 = q as u32;
    let noise = random_cpoly(rng, s, q32 + 2, 4, Domain::Int);
    if rng.gen_bool(0.5) {
        return noise;
    }
    let mut f = random_cpoly(rng, s, 3, 3, Domain::Int).scale(&BigInt::from(p));
    for i in 0..s {
        let xi = CPoly::var(s, Domain::Int, i);
        let fi = xi.pow(q).sub(&xi);
        f = f.add(&fi.mul(&random_cpoly(rng, s, 2, 3, Domain::Int)));
    }
    if rng.gen_bool(0.3) {
        f = f.add(&random_cpoly(rng, s, q32 + 1, 1, Domain::Int));
    }
    f
}

pub fn criterion_10() -> Check {
    let mut summary = Vec::new();
    for (p, n) in [(2u64, 1u32), (3, 1), (2, 2), (5, 1), (2, 3), (3, 2)] {
        let fq = Fq::new(p, n).unwrap();
        let q = fq.order();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + q);
        let mut vanish = 0;
        for t in 0..200 {
            let s = 1 + t % 2;
            let f = alon_instance(&mut rng, p, q, s);
            let nf = field_ideal_normal_form(&f, p, n);
            let pts = q.pow(s as u32);
            let all_zero = (0..pts).all(|idx| {
                let pt: Vec<Vec<u64>> = (0..s).map(|i| fq.element((idx / q.pow(i as u32)) % q)).collect();
                fq_eval(&f, &fq, &pt).iter().all(|&c| c == 0)
            });
            ensure!(nf.is_zero() == all_zero, "q={} f={:?}: nf zero {} vanishes {}", q, f, nf.is_zero(), all_zero);
            for e in nf.terms().map(|(e, _)| e) {
                ensure!(e.iter().all(|&k| (k as u64) < q), "normal form exponent {:?} not reduced", e);
            }
            if all_zero {
                vanish += 1;
                let fm = f.to_domain(Domain::ModP(p));
                if let Some(d) = fm.total_degree() {
                    ensure!(d as u64 >= q, "q={}: non-zero identity of degree {} < q", q, d);
                }
            }
        }
        ensure!(vanish >= 20 && vanish <= 180, "q={}: unbalanced sample ({} vanish)", q, vanish);
        summary.push(format!("q={}:{}", q, vanish));
    }
    Ok(format!("200 per field, vanishing counts {}", summary.join(" ")))
}

// ---------------------------------------------------------------------------
// 11: Cartier operators

pub fn criterion_11() -> Check {
    let mut count = 0;
    for p in [2u64, 3, 5] {
        let dom = Domain::ModP(p);
        let mut rng = ChaCha8Rng::seed_from_u64(1100 + p);
        for t in 0..170 {
            let s = 1 + t % 3;
            let big = random_cpoly(&mut rng, s, 8, 6, dom);
            let mut rec = CPoly::zero(s, dom);
            for j in cartier_indices(p, s) {
                let l = cartier(&big, &j).map_err(|e| e.to_string())?;
                let xj = CPoly::monomial(s, dom, j.clone(), 1);
                rec = rec.add(&xj.mul(&l.scale_exponents(p as u32)));
            }
            ensure!(rec == big, "p={}: reconstruction fails for {:?}", p, big);
            let a = random_cpoly(&mut rng, s, 8, 4, dom);
            let b = random_cpoly(&mut rng, s, 2, 2, dom);
            let c = random_cpoly(&mut rng, s, 6, 4, dom);
            let bp = b.pow(p);
            let lhs_in = a.add(&bp.mul(&c));
            for j in cartier_indices(p, s) {
                let lhs = cartier(&lhs_in, &j).unwrap();
                let rhs = cartier(&a, &j).unwrap().add(&b.mul(&cartier(&c, &j).unwrap()));
                ensure!(lhs == rhs, "p={}: linearity fails at j={:?}", p, j);
            }
            count += 1;
        }
    }
    Ok(format!("{} random polynomials, p in 2,3,5", count))
}

// ---------------------------------------------------------------------------
// 12: Gröbner–Shirshov bases

/// All words over `X, Y` of length `< k`, shortlex.
fn words_below(k: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut layer = vec![Word::empty()];
    for _ in 1..k {
        let mut next = Vec::new();
        for w in &layer {
            for l in 1..=2 {
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

/// Row-echelon basis over `F_p`; `insert` returns whether the rank grew.
struct Span {
    p: u64,
    rows: Vec<(usize, Vec<u64>)>,
}

impl Span {
    fn reduce(&self, mut v: Vec<u64>) -> Vec<u64> {
        for (piv, r) in &self.rows {
            let c = v[*piv];
            if c != 0 {
                for (x, y) in v.iter_mut().zip(r) {
                    *x = (*x + (self.p - c) * y) % self.p;
                }
            }
        }
        v
    }
    fn insert(&mut self, v: Vec<u64>) -> bool {
        let v = self.reduce(v);
        let piv = match v.iter().position(|&c| c != 0) {
            None => return false,
            Some(i) => i,
        };
        let inv = commdecide::commalg::pow_mod(v[piv], self.p - 2, self.p);
        let v: Vec<u64> = v.iter().map(|&c| c * inv % self.p).collect();
        for (_, r) in self.rows.iter_mut() {
            let c = r[piv];
            if c != 0 {
                for (x, y) in r.iter_mut().zip(&v) {
                    *x = (*x + (self.p - c) * y) % self.p;
                }
            }
        }
        self.rows.push((piv, v));
        true
    }
    fn contains(&self, v: Vec<u64>) -> bool {
        self.reduce(v).iter().all(|&c| c == 0)
    }
}

fn vectorize(f: &NcPoly, words: &[Word], p: u64) -> Vec<u64> {
    let pb = BigInt::from(p);
    words.iter().map(|w| f.coeff(w).mod_floor(&pb).to_u64().unwrap()).collect()
}

/// Ideal generated by `gens` in `F_p{X,Y}/(X,Y)^k`, by spanning all
/// `u g v` for words `u, v`.
fn brute_ideal(gens: &[NcPoly], p: u64, k: usize) -> (Span, Vec<Word>) {
    let words = words_below(k);
    let mut span = Span { p, rows: vec![] };
    for g in gens {
        for u in &words {
            for v in &words {
                if u.len() + v.len() >= k {
                    continue;
                }
                let t = NcPoly::monomial(u.clone(), 1).mul(g).mul(&NcPoly::monomial(v.clone(), 1));
                span.insert(vectorize(&t, &words, p));
            }
        }
    }
    (span, words)
}

fn all_words_of_length(k: usize) -> Vec<NcPoly> {
    words_below(k + 1).into_iter().filter(|w| w.len() == k).map(|w| NcPoly::monomial(w, 1)).collect()
}

pub fn gsb_membership_trials(n: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members = 0;
    for t in 0..n {
        let p = [2u64, 3][t % 2];
        let k = 3 + t % 3;
        let prof = RandomProfile { vars: 2, max_degree: k - 1, coeff_range: 2, terms: 3, polys: 1 };
        let gens: Vec<NcPoly> = (0..rng.gen_range(1..=2)).map(|_| random_poly(&mut rng, &prof)).collect();
        let (span, words) = brute_ideal(&gens, p, k);
        let mut all = gens.clone();
        all.extend(all_words_of_length(k));
        let basis = complete(&all, p, 1, CompletionLimits::default()).map_err(|e| e.to_string())?;
        for _ in 0..4 {
            let f = if rng.gen_bool(0.5) {
                random_poly(&mut rng, &prof)
            } else {
                let g = &gens[rng.gen_range(0..gens.len())];
                let u = random_poly(&mut rng, &RandomProfile { max_degree: 1, ..prof });
                let v = random_poly(&mut rng, &RandomProfile { max_degree: 1, ..prof });
                u.mul(g).mul(&v).add(&g.scale(&BigInt::from(rng.gen_range(0..p as i64))))
            };
            let brute = span.contains(vectorize(&f, &words, p));
            let nf = basis.is_member(&f);
            ensure!(brute == nf, "p={} k={} gens {:?} f {}: brute {} basis {}", p, k, gens, f, brute, nf);
            members += brute as usize;
        }
    }
    ensure!(members >= n / 2 && members <= 4 * n - n / 2, "unbalanced sample: {} members", members);
    Ok(format!("{} ideals x 4 elements, {} members", n, members))
}

/// Generators whose initial terms are `p YX, XYX, YYX, YXX, YXY`, with random
/// lower terms.
pub fn termination_regime_trials(n: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leads: [(&[VarId], bool); 5] =
        [(&[2, 1], true), (&[1, 2, 1], false), (&[2, 2, 1], false), (&[2, 1, 1], false), (&[2, 1, 2], false)];
    let mut max_steps = 0;
    for t in 0..n {
        let p = [2u64, 3, 5][t % 3];
        let a = 1 + (t % 2) as u32;
        let mut gens = Vec::new();
        for (w, scaled) in leads {
            let lead = Word(w.to_vec());
            let mut g = NcPoly::monomial(lead.clone(), if scaled { p as i64 } else { 1 });
            for lw in words_below(lead.len() + 1) {
                if lw < lead && rng.gen_bool(0.3) {
                    let c = rng.gen_range(0..(p.pow(a)) as i64);
                    g.add_term(lw, BigInt::from(if scaled { c * p as i64 } else { c }));
                }
            }
            if scaled && a == 1 {
                // p YX vanishes over F_p; the regime is the Z/p^a one.
                continue;
            }
            let (c, w0) = initial_term(&g, p, a).map_err(|e| e.to_string())?;
            ensure!(w0 == lead && c == if scaled { p } else { 1 }, "initial term {:?} {}", w0, c);
            gens.push(g);
        }
        let mut cmp = commdecide::gsb::Completer::new(p, a, CompletionLimits::default());
        for g in &gens {
            cmp.push(g);
        }
        cmp.run().map_err(|e| format!("p={} a={}: {}", p, a, e))?;
        max_steps = max_steps.max(cmp.steps());
    }
    Ok(format!("{} completions terminate, max {} steps", n, max_steps))
}

pub fn criterion_12() -> Check {
    let (x, y) = (x(), y());
    let b = complete(&[NcPoly::constant(2), y.mul(&x).sub(&x.mul(&y))], 2, 2, CompletionLimits::default())
        .map_err(|e| e.to_string())?;
    ensure!(is_commutative_presentation(&b).map_err(|e| e.to_string())?, "Z/4 example not commutative");
    let b = complete(&[y.mul(&x)], 2, 1, CompletionLimits::default()).map_err(|e| e.to_string())?;
    ensure!(!is_commutative_presentation(&b).map_err(|e| e.to_string())?, "{{YX}} reported commutative");
    let m = gsb_membership_trials(100, 1200)?;
    let t = termination_regime_trials(60, 1201)?;
    Ok(format!("examples ok; {}; {}", m, t))
}

// ---------------------------------------------------------------------------
// 13-14: oracle agreement and determinism

/// Every identity set exercised by the criteria, plus the corpus files.
pub fn full_corpus() -> Vec<(String, IdentitySet)> {
    let mut out = Vec::new();
    for f in corpus_files() {
        let doc = cli::parse_input(&std::fs::read_to_string(&f).unwrap()).unwrap();
        out.push((f.file_name().unwrap().to_string_lossy().into_owned(), doc.identity_set()));
    }
    out.push(("mixed_forcing".into(), IdentitySet::single(mixed_forcing())));
    out.push(("u2_witness".into(), IdentitySet::single(u2_witness())));
    for m in 3..=6u32 {
        for n in 2..m {
            out.push((format!("X^{}-X^{}", m, n), IdentitySet::single(xm_xn(m, n))));
        }
    }
    for n in 2..=8u32 {
        let q = x().pow(n).sub(&x());
        out.push((format!("X^{}-X", n), IdentitySet::single(q.clone())));
        out.push((format!("[X^{}-X,Y]", n), IdentitySet::single(NcPoly::commutator(&q, &y()))));
    }
    for n in [2u32, 3] {
        let p = x().mul(&y()).pow(n).sub(&x().pow(n).mul(&y().pow(n)));
        out.push((format!("power {}", n), IdentitySet::single(p)));
    }
    let fr = |n: u32| x().add(&y()).pow(n).sub(&x().pow(n)).sub(&y().pow(n));
    out.push(("freshman 2".into(), IdentitySet::single(fr(2))));
    out.push(("freshman 4,8".into(), IdentitySet::new(2, vec![fr(4), fr(8)])));
    out.push(("S_3".into(), IdentitySet::single(theorems::symmetrization(3))));
    out
}

pub fn criterion_13() -> Check {
    let bounds = SearchBounds { max_p: 5, max_n: 3, max_trunc_k: 4, ..SearchBounds::default() };
    let mut n = 0;
    let mut forces = 0;
    for (name, ids) in full_corpus() {
        for opts in [DecideOptions::default(), generic()] {
            let v = decide::decide_all(&ids, &opts);
            ensure!(!matches!(v, Verdict::ResourceLimit(_)), "{}: {:?}", name, v);
            let r = cross_validate(&ids, &v, &bounds);
            ensure!(r.agree, "{} (fast_path={}): {}", name, opts.fast_path, r.to_json());
            n += 1;
            forces += (v == Verdict::Forces) as u32;
        }
    }
    Ok(format!("{} verdicts agree ({} forces)", n, forces))
}

/// JSON outputs of every command over the corpus, in a fixed order.
pub fn suite_json() -> Vec<String> {
    let mut out = Vec::new();
    let run = |args: &[&str]| {
        let mut v = vec!["commdecide"];
        v.extend_from_slice(args);
        let (code, text) = cli::run(v);
        format!("{} {}", code, text)
    };
    for f in corpus_files() {
        let f = f.to_string_lossy().into_owned();
        out.push(run(&["decide", &f, "--json"]));
        out.push(run(&["decide", &f, "--json", "--no-fast-path"]));
        out.push(run(&["check", "--ring", "U(2)", &f, "--json"]));
        out.push(run(&["certify", "--p", "2", &f, "--json"]));
    }
    for n in 2..=8 {
        let e = format!("X^{} - X", n);
        out.push(run(&["univariate", &e, "--json"]));
        out.push(run(&["central", &e, "--json"]));
    }
    out.push(run(&["power", "--set", "3", "--json"]));
    out.push(run(&["freshman", "--set", "4,8", "--json"]));
    out.push(run(&["oracle", &corpus_dir().join("mixed_forcing.ids").to_string_lossy(), "--json"]));
    out
}

pub fn criterion_14() -> Check {
    let a = suite_json();
    let b = suite_json();
    ensure!(a.len() == b.len(), "different lengths");
    for (x, y) in a.iter().zip(&b) {
        ensure!(x == y, "outputs differ:\n{}\n{}", x, y);
    }
    let bytes: usize = a.iter().map(|s| s.len()).sum();
    Ok(format!("{} outputs, {} bytes, identical", a.len(), bytes))
}

pub fn ring_check(fam: &RingFamily, ps: &[NcPoly], vars: usize) -> IdentityCheck {
    make_ring(fam).unwrap().is_identity_set(ps, vars, CheckMode::Exhaustive { cap: u64::MAX }).unwrap()
}
