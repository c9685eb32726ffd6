mod support;

use mind_core::pltm::{dominant_topic, infer_theta, sweep_k, train, TrainConfig};

#[test]
fn planted_topics_recovered_with_invariants() {
    support::check_gibbs(200, 300, 42).unwrap();
}

#[test]
fn held_out_passages_inferred_to_planted_topic() {
    let planted = support::planted_bilingual(200, 30, 42);
    let cfg = TrainConfig {
        k: 2,
        iterations: 200,
        burn_in: 50,
        ..TrainConfig::default()
    };
    let model = train(&planted.tuples, &cfg).unwrap();
    // map planted topic -> learned topic using the training passages
    let learned0 = dominant_topic(model.theta_of("en0#0").unwrap());
    let fresh = support::planted_bilingual(40, 30, 7);
    let mut correct = 0;
    for (d, tuple) in fresh.tuples.iter().enumerate() {
        for side in &tuple.sides {
            let theta = infer_theta(&model, &side.language, &side.passages[0].tokens, 50, d as u64).unwrap();
            let want = if fresh.labels[d] == 0 { learned0 } else { 1 - learned0 };
            if dominant_topic(&theta) == want {
                correct += 1;
            }
        }
    }
    assert!(correct as f64 / 80.0 >= 0.9, "{correct} / 80");
}

#[test]
fn two_topic_model_more_coherent_than_one() {
    let planted = support::planted_bilingual(60, 20, 3);
    let base = TrainConfig {
        iterations: 100,
        burn_in: 20,
        ..TrainConfig::default()
    };
    let rows = sweep_k(&planted.tuples, &[2, 1], &base, 5).unwrap();
    assert_eq!(rows.iter().map(|r| r.k).collect::<Vec<_>>(), vec![1, 2]);
    assert!(rows[1].mean_npmi > rows[0].mean_npmi, "{rows:?}");
}
