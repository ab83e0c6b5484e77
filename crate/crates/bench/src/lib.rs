//! Shared inputs for the criterion benches.

use std::path::PathBuf;

use film_accord::recommender::GroupRequestFile;
use film_accord::{load_catalog, Catalog, EmotionScores, GroupRequest};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn corpus() -> Catalog {
    load_catalog(fixture("corpus_100.catalog")).expect("corpus fixture loads")
}

/// The four-participant, twelve-candidate group scenario.
pub fn sample_group() -> GroupRequest {
    let catalog = load_catalog(fixture("pool_12.catalog")).expect("pool fixture loads");
    let text = std::fs::read_to_string(fixture("group_request.json")).expect("group fixture reads");
    let file: GroupRequestFile = serde_json::from_str(&text).expect("group fixture parses");
    file.resolve(&catalog).expect("group fixture resolves")
}

/// Deterministic pseudo-random score vectors on the simplex.
pub fn score_grid(n: usize) -> Vec<EmotionScores> {
    let mut state = 0x2545_f491_u64;
    (0..n)
        .map(|_| {
            let mut v = [0.0; 5];
            for x in &mut v {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                *x = (state % 1000) as f64 + 1.0;
            }
            EmotionScores::from_array(v).normalized()
        })
        .collect()
}
