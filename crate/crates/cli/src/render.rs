//! Text tables. Scores are shown at two decimals; structured output keeps
//! full precision.

use std::fmt::Write;

use film_accord::analytics::CorpusStats;
use film_accord::catalog::ChannelScores;
use film_accord::recommender::{AccuracyReport, LabeledScores};
use film_accord::{round_2dp, to_emotion_set, ConsensusReport, Emotion, EmotionScores, FeedbackEntry, MovieRecord};

fn header(first: &str) -> String {
    let mut s = format!("{first:<12}");
    for e in Emotion::ALL {
        write!(s, " {:>8}", e.key()).unwrap();
    }
    s.push('\n');
    s
}

fn row(label: &str, scores: &EmotionScores) -> String {
    let mut s = format!("{label:<12}");
    for (_, v) in scores.iter() {
        write!(s, " {:>8.2}", round_2dp(v)).unwrap();
    }
    s.push('\n');
    s
}

fn csv_row(label: &str, values: impl IntoIterator<Item = f64>) -> String {
    let mut s = label.to_string();
    for v in values {
        write!(s, ",{:.2}", round_2dp(v)).unwrap();
    }
    s.push('\n');
    s
}

fn csv_header(first: &str) -> String {
    let keys: Vec<&str> = Emotion::ALL.iter().map(|e| e.key()).collect();
    format!("{first},{}\n", keys.join(","))
}

pub fn analysis(record: &MovieRecord, channels: Option<&ChannelScores>, profile: &EmotionScores, threshold: f64) -> String {
    let mut s = format!("{}  {}\n", record.id, record.title);
    s += &header("channel");
    if let Some(c) = channels {
        s += &row("poster", &c.poster);
        s += &row("soundtrack", &c.soundtrack);
        s += &row("description", &c.description);
    }
    s += &row("fused", profile);
    writeln!(s, "emotion set (> {threshold}): {}", to_emotion_set(profile, threshold)).unwrap();
    s
}

pub fn consensus(entries: &[FeedbackEntry], report: &ConsensusReport) -> String {
    let mut s = format!("{:<16} {:>9} {:>10} {:>8}\n", "participant", "agreement", "confidence", "value");
    for (e, v) in entries.iter().zip(&report.feedback_values) {
        writeln!(
            s,
            "{:<16} {:>9} {:>10} {:>8.2}",
            e.participant,
            e.agreement,
            e.confidence,
            round_2dp(*v)
        )
        .unwrap();
    }
    writeln!(s, "{report}").unwrap();
    s
}

pub fn accuracy(movies: &[LabeledScores], report: &AccuracyReport) -> String {
    let width = movies
        .iter()
        .map(|m| m.title.as_deref().unwrap_or(&m.id).len())
        .max()
        .unwrap_or(5)
        .max(5);
    let mut s = format!("{:<width$}  {:>7}\n", "movie", "jaccard");
    for (m, j) in movies.iter().zip(&report.per_movie) {
        writeln!(s, "{:<width$}  {:>7.2}", m.title.as_deref().unwrap_or(&m.id), round_2dp(*j)).unwrap();
    }
    writeln!(s, "mean: {:.2}", round_2dp(report.mean)).unwrap();
    s
}

pub fn corpus(stats: &CorpusStats) -> String {
    let mut s = format!("movies: {}\n", stats.movies);
    if !stats.rank_series.is_empty() {
        s += "\n# rank series\n";
        s += &csv_header("rank");
        let ranks = stats.rank_series[0].points.iter().map(|&(r, _)| r);
        for (i, rank) in ranks.enumerate() {
            s += &csv_row(&rank.to_string(), stats.rank_series.iter().map(|series| series.points[i].1));
        }
        s += &csv_row("mean", stats.rank_series.iter().map(|series| series.mean));
    }
    s += "\n# genre matrix\n";
    s += &csv_header("genre");
    for (genre, scores) in &stats.genre_matrix.rows {
        s += &csv_row(genre, scores.iter().map(|(_, v)| v));
    }
    writeln!(s, "\n# distribution (score > {})", stats.threshold).unwrap();
    s += "emotion,proportion\n";
    for (e, p) in &stats.distribution {
        writeln!(s, "{},{:.2}", e.key(), round_2dp(*p)).unwrap();
    }
    if let Some(m) = &stats.survey {
        s += "\n# survey correlation\n";
        s += &csv_header("emotion");
        for (e, cells) in Emotion::ALL.iter().zip(m) {
            let cells: Vec<String> = cells.iter().map(ToString::to_string).collect();
            writeln!(s, "{},{}", e.key(), cells.join(",")).unwrap();
        }
    }
    s
}
