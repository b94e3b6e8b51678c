mod common;

#[test]
fn every_layer_and_model_matches_finite_differences() {
    let mut failures = Vec::new();
    for (label, report) in common::gradient_suite() {
        assert!(report.checked > 0, "{label}: nothing checked");
        if report.max_rel >= 1e-4 {
            failures.push(format!("{label}: {:.3e} at {}", report.max_rel, report.worst));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}
