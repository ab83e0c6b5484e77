use std::path::PathBuf;

use film_accord::analytics::{
    emotion_distribution, genre_emotion_matrix, profile_corpus, rank_series, survey_emotion_correlation,
    Correlation,
};
use film_accord::catalog::{decode_poster, load_catalog, save_catalog, CatalogError, Provenance};
use film_accord::channels::{soundtrack_emotions, ColorEmotionKb, EmotionLexicon};
use film_accord::recommender::{labeled_accuracy, movie_profile, recommend};
use film_accord::recommender::{GroupRequestFile, LabeledScores};
use film_accord::{ChannelWeights, Emotion, EmotionScores, MovieRecord, ProfileContext};
use serde::Deserialize;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn read<T: serde::de::DeserializeOwned>(name: &str) -> T {
    serde_json::from_str(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

#[derive(Deserialize)]
struct Movies {
    movies: Vec<LabeledScores>,
}

struct Kit {
    lexicon: EmotionLexicon,
    kb: ColorEmotionKb,
}

impl Kit {
    fn new() -> Self {
        Kit { lexicon: EmotionLexicon::builtin(), kb: ColorEmotionKb::builtin() }
    }

    fn ctx(&self) -> ProfileContext<'_> {
        ProfileContext::new(ChannelWeights::default(), &self.lexicon, &self.kb)
            .with_media_root(fixture(""))
    }
}

#[test]
fn pool_catalog_has_the_twelve_candidates() {
    let c = load_catalog(fixture("pool_12.catalog")).unwrap();
    assert_eq!(c.len(), 12);
    for id in ["insidious-3", "annabelle-creation", "me-before-you"] {
        assert_eq!(c.provenance(id), Some(Provenance::File), "{id}");
    }
    let synthetic = c.entries().iter().filter(|e| e.provenance == Provenance::SyntheticFixture).count();
    assert_eq!(synthetic, 9);
}

#[test]
fn catalog_round_trips_field_for_field() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["pool_12.catalog", "favorites.catalog", "corpus_100.catalog"] {
        let c = load_catalog(fixture(name)).unwrap();
        let out = dir.path().join(name);
        save_catalog(&c, &out).unwrap();
        assert_eq!(load_catalog(&out).unwrap(), c, "{name}");
    }
}

#[test]
fn fused_rows_match_printed_averages() {
    let kit = Kit::new();
    let ctx = kit.ctx();
    let pool = load_catalog(fixture("pool_12.catalog")).unwrap();
    let favs = load_catalog(fixture("favorites.catalog")).unwrap();
    let expected: [(&str, [f64; 5]); 7] = [
        ("insidious-3", [0.06, 0.30, 0.04, 0.25, 0.47]),
        ("annabelle-creation", [0.16, 0.36, 0.16, 0.17, 0.34]),
        ("me-before-you", [0.34, 0.25, 0.13, 0.40, 0.21]),
        ("the-notebook", [0.40, 0.08, 0.19, 0.37, 0.23]),
        ("split", [0.26, 0.28, 0.11, 0.27, 0.31]),
        ("oppenheimer", [0.18, 0.41, 0.17, 0.06, 0.31]),
        ("barbie", [0.09, 0.07, 0.43, 0.25, 0.27]),
    ];
    for (id, want) in expected {
        let r = pool.get(id).or_else(|| favs.get(id)).unwrap();
        let got = movie_profile(r, &ctx).unwrap().rounded();
        assert_eq!(got.as_array(), &want, "{id}");
    }
}

#[test]
fn stored_labels_reproduce_cached_soundtrack_rows() {
    let pool = load_catalog(fixture("pool_12.catalog")).unwrap();
    let favs = load_catalog(fixture("favorites.catalog")).unwrap();
    let mut checked = 0;
    for r in pool.records().chain(favs.records()) {
        let (Some(labels), Some(cached)) = (&r.soundtrack_labels, &r.cached_channels) else { continue };
        if pool.provenance(&r.id) == Some(Provenance::SyntheticFixture) {
            continue;
        }
        let computed = soundtrack_emotions(labels).unwrap().rounded();
        assert_eq!(computed, cached.soundtrack.rounded(), "{}", r.id);
        checked += 1;
    }
    assert_eq!(checked, 7);
}

// Every favorite carries all five emotions above 0.05, so J_agg is just
// |candidate set| / 5. The printed 0.34 for the last pick cannot arise.
#[test]
fn group_scenario_as_computed() {
    let kit = Kit::new();
    let pool = load_catalog(fixture("pool_12.catalog")).unwrap();
    let file: GroupRequestFile = read("group_request.json");
    let req = file.resolve(&pool).unwrap();
    let out = recommend(&req, &kit.ctx()).unwrap();
    let score = |id: &str| out.get(id).unwrap().j_agg;
    assert_eq!(out.items.len(), 12);
    assert!((score("titanic") - 0.8).abs() < 1e-12);
    assert!((score("me-before-you") - 1.0).abs() < 1e-12);
    assert!((score("annabelle-creation") - 1.0).abs() < 1e-12);
    assert!((score("passengers") - 0.2).abs() < 1e-12);
    assert_eq!(out.items.last().unwrap().movie_id, "passengers");
    let top: Vec<_> = out.items.iter().take(2).map(|i| i.movie_id.as_str()).collect();
    assert_eq!(top, ["annabelle-creation", "me-before-you"]);
    for item in &out.items {
        assert_eq!(item.per_participant.len(), 4);
        assert!((0.0..=1.0).contains(&item.j_agg));
    }
}

#[test]
fn recommendation_is_deterministic() {
    let kit = Kit::new();
    let pool = load_catalog(fixture("pool_12.catalog")).unwrap();
    let file: GroupRequestFile = read("group_request.json");
    let mut req = file.resolve(&pool).unwrap();
    let a = recommend(&req, &kit.ctx()).unwrap();
    req.candidates.reverse();
    req.participants.rotate_left(1);
    let b = recommend(&req, &kit.ctx()).unwrap();
    let ids = |r: &film_accord::RankedRecommendation| r.items.iter().map(|i| i.movie_id.clone()).collect::<Vec<_>>();
    assert_eq!(ids(&a), ids(&b));
}

#[test]
fn accuracy_vector_from_score_files() {
    let p: Movies = read("accuracy_predicted.json");
    let h: Movies = read("accuracy_human.json");
    let r = labeled_accuracy(&p.movies, &h.movies, 0.05).unwrap();
    // Positions 3 and 5 (Annabelle, Me Before You) compute 0.6 and 1.0.
    let want = [1.0, 0.6, 0.4, 0.6, 0.5, 1.0, 0.8, 1.0, 1.0, 1.0, 0.6, 0.6];
    for (i, (got, want)) in r.per_movie.iter().zip(want).enumerate() {
        assert!((got - want).abs() < 1e-12, "entry {i}: {got} vs {want}");
    }
    assert!((r.mean - 9.1 / 12.0).abs() < 1e-12);
}

#[test]
fn predicted_file_agrees_with_catalog_profiles() {
    let kit = Kit::new();
    let pool = load_catalog(fixture("pool_12.catalog")).unwrap();
    let p: Movies = read("accuracy_predicted.json");
    for m in &p.movies {
        let got = movie_profile(pool.get(&m.id).unwrap(), &kit.ctx()).unwrap();
        for e in Emotion::ALL {
            assert!((got.get(e) - m.scores.get(e)).abs() < 1e-9, "{} {e}", m.id);
        }
    }
}

#[test]
fn corpus_statistics_on_shipped_chart() {
    let kit = Kit::new();
    let corpus = load_catalog(fixture("corpus_100.catalog")).unwrap();
    let profiled = profile_corpus(&corpus, &kit.ctx()).unwrap();
    let fear = rank_series(&profiled, Emotion::Fear).unwrap();
    let happy = rank_series(&profiled, Emotion::Happy).unwrap();
    assert_eq!(fear.points.len(), 100);
    assert!(fear.points.windows(2).all(|w| w[0].0 < w[1].0));
    let direct = |e: Emotion| corpus.records().map(|r| r.cached_profile.unwrap().get(e)).sum::<f64>() / 100.0;
    assert!((fear.mean - direct(Emotion::Fear)).abs() < 1e-12);
    assert!(fear.mean > happy.mean);

    let matrix = genre_emotion_matrix(&profiled);
    let keys: Vec<_> = matrix.rows.keys().cloned().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);

    let dist = emotion_distribution(&profiled, 0.2);
    assert!((dist.values().sum::<f64>() - 1.0).abs() < 1e-9);
    let top = dist.iter().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    assert_eq!(*top.0, Emotion::Fear);
}

#[test]
fn surveyed_correlations_hit_published_targets() {
    #[derive(Deserialize)]
    struct Survey {
        responses: Vec<[u8; 5]>,
    }
    let s: Survey = read("survey_responses.json");
    let m = survey_emotion_correlation(&s.responses).unwrap();
    let (h, su, f) = (Emotion::Happy.index(), Emotion::Surprise.index(), Emotion::Fear.index());
    let Correlation::Value(hs) = m[h][su] else { panic!("undefined") };
    let Correlation::Value(hf) = m[h][f] else { panic!("undefined") };
    assert!(hs > 0.0 && (hs - 0.33).abs() <= 0.02, "{hs}");
    assert!(hf < 0.0 && (hf + 0.77).abs() <= 0.02, "{hf}");
}

#[test]
fn poster_files_decode_exactly() {
    assert_eq!(decode_poster(fixture("posters/red_1x1.ppm")).unwrap().pixels(), &[[255, 0, 0]]);
    assert_eq!(decode_poster(fixture("posters/red_1x1.png")).unwrap().pixels(), &[[255, 0, 0]]);
    for name in ["posters/checker_2x2.ppm", "posters/checker_2x2.png"] {
        let img = decode_poster(fixture(name)).unwrap();
        assert_eq!(img.pixels(), &[[0, 0, 0], [255, 255, 255], [255, 255, 255], [0, 0, 0]], "{name}");
    }
    for name in ["posters/truncated.ppm", "posters/truncated.png"] {
        assert!(matches!(decode_poster(fixture(name)), Err(CatalogError::CorruptImage { .. })), "{name}");
    }
}

#[test]
fn raw_media_movie_profiles_from_all_channels() {
    let kit = Kit::new();
    let r: MovieRecord = read("raw_movie.json");
    let p = movie_profile(&r, &kit.ctx()).unwrap();
    p.validate().unwrap();
    assert!(p.get(Emotion::Fear) > p.get(Emotion::Happy));
    let cached: MovieRecord = read("cached_movie.json");
    let q = movie_profile(&cached, &kit.ctx()).unwrap().rounded();
    assert_eq!(q, EmotionScores::from_array([0.06, 0.30, 0.04, 0.25, 0.47]));
}
