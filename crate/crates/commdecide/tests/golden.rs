//! Pinned verdicts for seeded random identity sets. Regenerate with
//! `COMMDECIDE_BLESS=1 cargo test --test golden`.

use commdecide::decide::{decide_all, DecideOptions, Verdict};
use commdecide::oracle::{digest, random_identities, RandomProfile};

const PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/random_identities.txt");

fn render() -> String {
    let prof = RandomProfile::default();
    let opts = DecideOptions { max_specializations: 50_000, ..DecideOptions::default() };
    let mut out = String::new();
    for seed in 0..30u64 {
        let ids = random_identities(seed, &prof);
        let v = match decide_all(&ids, &opts) {
            Verdict::Witness(w) => format!("witness {}", w.family.describe()),
            other => other.kind().to_string(),
        };
        out.push_str(&format!("{} {} {} | {}\n", seed, &digest(&ids)[..16], v, ids.polys[0]));
    }
    out
}

#[test]
fn random_identities_match_golden() {
    let now = render();
    if std::env::var_os("COMMDECIDE_BLESS").is_some() {
        std::fs::write(PATH, &now).unwrap();
        return;
    }
    let pinned = std::fs::read_to_string(PATH).expect("golden file present");
    for (a, b) in pinned.lines().zip(now.lines()) {
        assert_eq!(a, b);
    }
    assert_eq!(pinned.lines().count(), now.lines().count());
}
