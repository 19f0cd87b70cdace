//! Acceptance gate: runs the full verification suite and prints one
//! pass/fail line per criterion. Report artifacts land in the cargo
//! target scratch directory.

use cubetree::suite::{self, SuiteConfig};

#[test]
fn acceptance_suite() {
    let config = SuiteConfig {
        artifact_dir: std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("reports"),
    };
    let outcomes = suite::run_all(&config);
    println!();
    for outcome in &outcomes {
        println!("{}", outcome.render());
    }
    println!();

    let artifact = config.artifact_dir.join("tightness_probe.csv");
    assert!(
        artifact.is_file(),
        "tightness probe must write its convergence table"
    );
    let table = std::fs::read_to_string(&artifact).unwrap();
    assert!(table.starts_with("set_cap,height,n,points,pairs_checked"));
    // two caps, universes 4..=9
    assert_eq!(table.lines().count(), 1 + 2 * 6);

    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| format!("criterion {} ({}): {}", o.id, o.name, o.detail))
        .collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
