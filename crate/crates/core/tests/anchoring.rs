mod common;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn every_pair_is_anchored_over_a_synthetic_corpus() {
    let corpus = common::synthetic_corpus(&mut ChaCha8Rng::seed_from_u64(500), 500);
    let started = Instant::now();
    let n = common::check_anchoring(&corpus).unwrap();
    assert!(n > 500, "only {n} pairs");
    assert!(started.elapsed().as_secs() < 10);
}

#[test]
fn several_corpora() {
    for seed in 0..5 {
        let corpus = common::synthetic_corpus(&mut ChaCha8Rng::seed_from_u64(seed), 200);
        common::check_anchoring(&corpus).unwrap();
    }
}
