mod common;

use common::checks;

#[test]
fn mf_gradient_matches_central_differences() {
    checks::mf_gradient_check(100, 2024).unwrap();
}

#[test]
fn transitions_pass_chi_square() {
    checks::transition_chi_square(10_000, 77).unwrap();
}

#[test]
fn average_precision_matches_definition_on_random_lists() {
    checks::ap_check(1000, 3).unwrap();
}

#[test]
fn random_embeddings_score_the_random_ranking_expectation() {
    checks::random_embedding_calibration(1000, 1000, 11).unwrap();
}
