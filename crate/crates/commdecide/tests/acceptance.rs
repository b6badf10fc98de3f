//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::Check;

fn main() {
    let criteria: [(u32, &str, fn() -> Check, u64); 14] = [
        (1, "forcing example with two-variable identity", common::criterion_1, 60),
        (2, "commutator-ideal example has U_2 witness", common::criterion_2, 1),
        (3, "X^m - X^n of opposite parity forces", common::criterion_3, 300),
        (4, "fixed-degree X^n - X criteria", common::criterion_4, 10),
        (5, "central pair table", common::criterion_5, 30),
        (6, "power identities", common::criterion_6, 300),
        (7, "freshman identities", common::criterion_7, 30),
        (8, "multilinear symmetrization", common::criterion_8, 120),
        (9, "minimal-ring certificates", common::criterion_9, 300),
        (10, "field-ideal normal forms", common::criterion_10, 120),
        (11, "Cartier operators", common::criterion_11, 60),
        (12, "Groebner-Shirshov completion", common::criterion_12, 300),
        (13, "oracle cross-validation", common::criterion_13, 600),
        (14, "deterministic JSON", common::criterion_14, 600),
    ];
    let only: Option<u32> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut failed = 0;
    for (n, name, f, budget) in criteria {
        if only.map_or(false, |o| o != n) {
            continue;
        }
        let t = Instant::now();
        let r = f();
        let dt = t.elapsed();
        let r = match r {
            Ok(msg) if dt > Duration::from_secs(budget) => Err(format!("{} but took {:.1?} > {}s", msg, dt, budget)),
            other => other,
        };
        match r {
            Ok(msg) => println!("PASS criterion {:>2}: {} [{}] ({:.2?})", n, name, msg, dt),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {} [{}] ({:.2?})", n, name, msg, dt);
            }
        }
    }
    if failed > 0 {
        println!("{} criteria failed", failed);
        std::process::exit(1);
    }
}
