//! Brute-force cross-checks: a bounded search over the witness families and
//! comparison of verdicts against it.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::commalg::primes_up_to;
use crate::decide::{verify_presented, DecideOptions, IdentitySet, Verdict};
use crate::finitering::{make_ring, CheckMode, IdentityCheck, RingError, RingFamily, DEFAULT_EVAL_CAP};
use crate::freealg::{NcPoly, VarId, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBounds {
    pub max_p: u64,
    pub max_n: u32,
    pub max_trunc_k: u32,
    pub eval_cap: u64,
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds { max_p: 5, max_n: 3, max_trunc_k: 4, eval_cap: DEFAULT_EVAL_CAP }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchOutcome {
    /// First family (in search order) on which every identity vanishes.
    pub found: Option<String>,
    #[serde(skip)]
    pub family: Option<RingFamily>,
    pub checked: usize,
    /// Rings left out because exhaustive evaluation exceeded the cap.
    pub skipped: Vec<String>,
}

/// The rings searched, in order.
pub fn search_order(bounds: &SearchBounds) -> Vec<RingFamily> {
    let primes = primes_up_to(bounds.max_p);
    let mut out: Vec<RingFamily> = primes.iter().map(|&p| RingFamily::Up { p }).collect();
    for &p in &primes {
        for n in 2..=bounds.max_n {
            for l in 1..n {
                out.push(RingFamily::B { p, n, l });
            }
        }
    }
    out.extend(primes.iter().map(|&p| RingFamily::Mat { k: 2, p, n: 1 }));
    for &p in &primes {
        for k in 3..=bounds.max_trunc_k {
            out.push(RingFamily::TruncFree { p, k, relations: vec![] });
        }
    }
    out.extend(primes.iter().map(|&p| RingFamily::MinRing { p }));
    out
}

/// Exhaustive check of one ring; `Err` carries the skip reason.
fn ring_satisfies(ids: &IdentitySet, family: &RingFamily, cap: u64) -> Result<IdentityCheck, String> {
    let ring = make_ring(family).map_err(|e| e.to_string())?;
    if ring.is_commutative().is_none() {
        return Err("commutative".into());
    }
    match ring.is_identity_set(&ids.polys, ids.vars, CheckMode::Exhaustive { cap }) {
        Ok(c) => Ok(c),
        Err(RingError::CapExceeded { needed, .. }) => Err(format!("{} tuples", needed)),
        Err(e) => Err(e.to_string()),
    }
}

pub fn witness_search(ids: &IdentitySet, bounds: &SearchBounds) -> SearchOutcome {
    let mut out = SearchOutcome { found: None, family: None, checked: 0, skipped: vec![] };
    for fam in search_order(bounds) {
        match ring_satisfies(ids, &fam, bounds.eval_cap) {
            Ok(IdentityCheck::Holds) => {
                out.checked += 1;
                out.found = Some(fam.describe());
                out.family = Some(fam);
                return out;
            }
            Ok(_) => out.checked += 1,
            Err(why) => out.skipped.push(format!("{}: {}", fam.describe(), why)),
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum OracleOutcome {
    /// Witness re-verified exhaustively.
    Confirmed,
    /// Witness fails: some identity is non-zero, or the ring is commutative.
    Refuted { reason: String },
    /// Too large to re-verify.
    Unchecked { reason: String },
    Search(SearchOutcome),
    /// Resource limits carry no claim.
    Recorded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CrossReport {
    pub digest: String,
    pub verdict: String,
    pub oracle: OracleOutcome,
    pub agree: bool,
    pub details: Option<String>,
}

impl CrossReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Hex SHA-256 of the canonical printing of the set.
pub fn digest(ids: &IdentitySet) -> String {
    let mut h = Sha256::new();
    h.update(format!("vars {}\n", ids.vars));
    for p in &ids.polys {
        h.update(format!("{}\n", p));
    }
    h.finalize().iter().map(|b| format!("{:02x}", b)).collect()
}

fn verdict_label(v: &Verdict) -> String {
    match v {
        Verdict::Forces => "forces".into(),
        Verdict::Witness(w) => format!("witness {}", w.family.describe()),
        Verdict::ResourceLimit(l) => format!("resource_limit {}: {}", l.stage, l.limit),
    }
}

pub fn cross_validate(ids: &IdentitySet, verdict: &Verdict, bounds: &SearchBounds) -> CrossReport {
    let digest = digest(ids);
    let label = verdict_label(verdict);
    let (oracle, agree, details) = match verdict {
        Verdict::ResourceLimit(_) => (OracleOutcome::Recorded, true, None),
        Verdict::Witness(w) => {
            if let RingFamily::Presented { .. } = &w.family {
                let opts = DecideOptions { eval_cap: bounds.eval_cap, ..DecideOptions::default() };
                match verify_presented(ids, &w.family, &opts) {
                    Ok(Some(_)) => (OracleOutcome::Confirmed, true, None),
                    Ok(None) => (OracleOutcome::Refuted { reason: "presentation check failed".into() }, false, None),
                    Err(l) => (OracleOutcome::Unchecked { reason: l.limit }, true, None),
                }
            } else {
                match ring_satisfies(ids, &w.family, bounds.eval_cap) {
                    Ok(IdentityCheck::Holds) => (OracleOutcome::Confirmed, true, None),
                    Ok(IdentityCheck::Counterexample { tuple, value }) => {
                        let d = format!("tuple {:?} gives {:?}", tuple, value);
                        (OracleOutcome::Refuted { reason: "identity fails".into() }, false, Some(d))
                    }
                    Err(why) if why == "commutative" => {
                        (OracleOutcome::Refuted { reason: "ring is commutative".into() }, false, None)
                    }
                    Err(why) => (OracleOutcome::Unchecked { reason: why }, true, None),
                }
            }
        }
        Verdict::Forces => {
            let s = witness_search(ids, bounds);
            let details = s.found.as_ref().map(|f| format!("identities hold on {}", f));
            let agree = s.found.is_none();
            (OracleOutcome::Search(s), agree, details)
        }
    };
    CrossReport { digest, verdict: label, oracle, agree, details }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomProfile {
    pub vars: usize,
    pub max_degree: usize,
    /// Coefficients are drawn from `[-coeff_range, coeff_range] \ {0}`.
    pub coeff_range: i64,
    pub terms: usize,
    pub polys: usize,
}

impl Default for RandomProfile {
    fn default() -> Self {
        RandomProfile { vars: 2, max_degree: 4, coeff_range: 3, terms: 4, polys: 1 }
    }
}

pub fn random_poly(rng: &mut ChaCha8Rng, profile: &RandomProfile) -> NcPoly {
    let mut p = NcPoly::zero();
    for _ in 0..profile.terms {
        let len = rng.gen_range(0..=profile.max_degree);
        let w = Word((0..len).map(|_| rng.gen_range(1..=profile.vars as VarId)).collect());
        let mut c = rng.gen_range(1..=profile.coeff_range.max(1));
        if rng.gen_bool(0.5) {
            c = -c;
        }
        p.add_term(w, BigInt::from(c));
    }
    p
}

pub fn random_identities(seed: u64, profile: &RandomProfile) -> IdentitySet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let polys = (0..profile.polys).map(|_| random_poly(&mut rng, profile)).collect();
    IdentitySet::new(profile.vars, polys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_starts_with_up() {
        let o = search_order(&SearchBounds::default());
        assert_eq!(o[0], RingFamily::Up { p: 2 });
        assert_eq!(o.last(), Some(&RingFamily::MinRing { p: 5 }));
    }

    #[test]
    fn commutator_refutes_any_witness() {
        let ids = IdentitySet::single(NcPoly::commutator(&NcPoly::var(1), &NcPoly::var(2)));
        let w = crate::decide::Witness { family: RingFamily::Up { p: 2 }, p: 2, pair: None, trace: None };
        let r = cross_validate(&ids, &Verdict::Witness(w), &SearchBounds::default());
        assert!(!r.agree);
        assert!(r.details.is_some());
    }

    #[test]
    fn seeds_are_reproducible() {
        let p = RandomProfile::default();
        assert_eq!(random_identities(0, &p), random_identities(0, &p));
        assert_ne!(random_identities(0, &p), random_identities(1, &p));
    }
}
