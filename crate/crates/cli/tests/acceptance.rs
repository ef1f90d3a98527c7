//! Acceptance run: every criterion at its stated tolerance, one line each.

use std::io::Write;
use std::time::{Duration, Instant};

use oscla::{criterion, title, SuiteParams, CRITERIA};

/// Wall-clock budget per criterion.
fn budget(n: usize) -> Duration {
    match n {
        // 30 s per model
        1 => Duration::from_secs(60),
        3 => Duration::from_secs(120),
        4 => Duration::from_secs(300),
        8 => Duration::from_secs(900),
        _ => Duration::from_secs(300),
    }
}

#[test]
fn acceptance_criteria() {
    let params = SuiteParams::default();
    let mut failed = Vec::new();
    let mut stdout = std::io::stdout();
    for n in 1..=CRITERIA {
        let start = Instant::now();
        let result = criterion(n, &params);
        let elapsed = start.elapsed();
        let line = match &result {
            Ok(out) => {
                let bad: Vec<_> = out.checks.iter().filter(|c| !c.pass).collect();
                let timely = elapsed <= budget(n);
                let pass = bad.is_empty() && timely && !out.checks.is_empty();
                if !pass {
                    failed.push(n);
                }
                let mut s = format!(
                    "criterion {n:>2} {}: {} ({} checks, {:.1}s)",
                    title(n),
                    if pass { "PASS" } else { "FAIL" },
                    out.checks.len(),
                    elapsed.as_secs_f64()
                );
                for c in bad {
                    s.push_str(&format!("\n    {}", c.line()));
                }
                if n == 5 {
                    for o in out.observations.iter().filter(|o| o.name.contains("literal")) {
                        s.push_str(&format!("\n    note {}: {:.3}", o.name, o.value));
                    }
                }
                s
            }
            Err(e) => {
                failed.push(n);
                format!("criterion {n:>2} {}: FAIL (error: {e})", title(n))
            }
        };
        writeln!(stdout, "{line}").unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
