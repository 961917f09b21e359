//! One line per acceptance criterion: `PASS|FAIL <id> <name> | measured | threshold | wall time`.

use ddtune::acceptance::{run_acceptance_suite, run_criterion, CriterionResult, Fault, SuiteOptions};

fn line(r: &CriterionResult) -> String {
    format!(
        "{} {:>2} {} | {} | {} | {:.2} s",
        if r.pass { "PASS" } else { "FAIL" },
        r.id,
        r.name,
        r.measured,
        r.threshold,
        r.wall_time_s
    )
}

#[test]
fn acceptance_suite() {
    let rows = run_acceptance_suite(SuiteOptions::default());
    for r in &rows {
        println!("{}", line(r));
    }
    let failed: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}

#[test]
fn misanchored_path_fails_path_accuracy() {
    let r = run_criterion(5, SuiteOptions { seed: 0, fault: Some(Fault::MisanchoredPath) }).unwrap();
    println!("fault injection: {}", line(&r));
    assert!(!r.pass);
}
