use mhs_core::corpus::derivative_cases;
use mhs_core::verify::{ensure_passed, fd_ratio, run_suite, Suite, DEFAULT_SEED, DERIVATIVE_CASES};

#[test]
fn suite_names_round_trip() {
    for s in Suite::ALL.into_iter().chain([Suite::All]) {
        assert_eq!(Suite::parse(s.name()), Some(s));
    }
    assert_eq!(Suite::parse("nope"), None);
}

#[test]
fn fast_suites_pass_with_the_shipped_seed() {
    for suite in [
        Suite::Spectral,
        Suite::Lemmas,
        Suite::Derivatives,
        Suite::Taylor,
    ] {
        let results = run_suite(suite, DEFAULT_SEED).unwrap();
        assert!(!results.is_empty());
        ensure_passed(&results).unwrap();
        assert!(results
            .iter()
            .all(|r| r.suite == suite.name() && r.margin >= 0.0));
    }
}

#[test]
fn suites_are_deterministic() {
    let a = run_suite(Suite::Derivatives, 7).unwrap();
    let b = run_suite(Suite::Derivatives, 7).unwrap();
    assert_eq!(a, b);
}

#[test]
fn every_seeded_case_converges_at_second_order() {
    for (i, c) in derivative_cases(DEFAULT_SEED, DERIVATIVE_CASES, 64)
        .iter()
        .enumerate()
    {
        for gamma in [false, true] {
            let (ratio, coarse, fine) = fd_ratio(&c.state, &c.direction, gamma).unwrap();
            assert!(
                (80.0..=120.0).contains(&ratio),
                "case {i} gamma={gamma}: {ratio} ({coarse:e}, {fine:e})"
            );
        }
    }
}

#[test]
fn failure_report_serializes() {
    let mut results = run_suite(Suite::Spectral, DEFAULT_SEED).unwrap();
    results[0].passed = false;
    let err = ensure_passed(&results).unwrap_err().to_string();
    assert!(err.contains("spectral/"));
    let json = serde_json::to_value(&results[0]).unwrap();
    for key in [
        "suite", "property", "passed", "measured", "bound", "margin", "witness",
    ] {
        assert!(json.get(key).is_some(), "{key}");
    }
}
