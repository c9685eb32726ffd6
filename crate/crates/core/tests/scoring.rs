mod support;

#[test]
fn cluster_and_probe_counts_match_hand_table() {
    support::check_cluster_arithmetic().unwrap();
}

#[test]
fn ds_rerank_and_passage_score_match_reference() {
    support::check_filter_scores(100, 11).unwrap();
}

#[test]
fn ranking_metrics_match_brute_force() {
    support::check_metrics(1000, 5).unwrap();
}

#[test]
fn bootstrap_is_seeded() {
    support::check_bootstrap_determinism(9).unwrap();
}
