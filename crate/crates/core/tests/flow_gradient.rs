//! Finite-difference checks of the full negative log-likelihood gradient.

mod common;

#[test]
fn gradient_matches_central_differences_on_fifty_configurations() {
    let failures: Vec<String> = (0..50).flat_map(common::gradient_mismatches).collect();
    assert!(failures.is_empty(), "{} mismatches:\n{}", failures.len(), failures.join("\n"));
}
