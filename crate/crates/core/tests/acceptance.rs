//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed. The process fails when a
//! check fails that is not listed in `KNOWN_FAILURES`, or when a criterion cannot be evaluated.

use std::process::ExitCode;
use std::time::Instant;

use kpp_core::harness::acceptance::{Suite, KNOWN_FAILURES};

fn main() -> ExitCode {
    let suite = Suite::new();
    let mut unexpected = Vec::new();
    println!("running 9 acceptance criteria");
    for k in 1..=9u8 {
        let t0 = Instant::now();
        match suite.criterion(k) {
            Ok(o) => {
                println!("{} ({:.1} s)", o.row.line(), t0.elapsed().as_secs_f64());
                for (part, ok) in &o.parts {
                    if !ok && KNOWN_FAILURES.contains(&part.as_str()) {
                        println!("    check {part} fails as documented");
                    }
                }
                unexpected.extend(o.unexpected_failures());
            }
            Err(e) => {
                println!("[FAIL] criterion {k}: could not be evaluated: {e}");
                unexpected.push(k.to_string());
            }
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: ok (known failing checks: {})", KNOWN_FAILURES.join(", "));
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures in {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}
