//! `film-accord`: batch entry points for every pipeline stage.

mod error;
mod render;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use film_accord::analytics::{corpus_stats, profile_corpus, survey_emotion_correlation, SurveyFile};
use film_accord::catalog::{HttpMetadataClient, MetadataSource};
use film_accord::channels::{ColorEmotionKb, EmotionLexicon};
use film_accord::consensus::{feedback_value, DEFAULT_MEAN_THRESHOLD};
use film_accord::recommender::{channel_scores, labeled_accuracy, GroupRequestFile, LabeledScoresFile};
use film_accord::{
    evaluate_consensus, load_catalog, movie_profile, recommend, save_catalog, Catalog,
    ChannelWeights, FeedbackFile, FuzzySystem, IqrBands, MovieRecord, ProfileContext,
    DEFAULT_THRESHOLD,
};
use film_accord::catalog::ChannelScores;
use serde::Serialize;

use crate::error::{read_json, read_text, CliError, EXIT_IO, EXIT_VALIDATION};

#[derive(Parser)]
#[command(name = "film-accord", version, about = "Emotion-aware group movie recommendation")]
struct Cli {
    /// Output style. `structured` prints JSON at full precision.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(flatten)]
    models: ModelArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Args)]
struct ModelArgs {
    /// Fuzzy system definition (JSON) replacing the bundled one.
    #[arg(long, global = true)]
    fis: Option<PathBuf>,
    /// Emotion lexicon (CSV: token,emotion,weight).
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    /// Color-emotion knowledge base (JSON).
    #[arg(long, global = true)]
    color_kb: Option<PathBuf>,
    /// Channel weights as poster,soundtrack,description.
    #[arg(long, global = true)]
    weights: Option<ChannelWeights>,
}

#[derive(Subcommand)]
enum Command {
    /// Channel scores, fused profile and emotion set of one movie record.
    Analyze {
        movie: PathBuf,
        /// Directory for relative poster paths; defaults to the movie file's directory.
        #[arg(long)]
        media_root: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Rank candidates for a group by mean Jaccard similarity.
    Recommend {
        #[arg(long)]
        group: PathBuf,
        /// Catalog file; repeat to merge several.
        #[arg(long, required = true)]
        catalog: Vec<PathBuf>,
        /// Print only the first N items.
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        media_root: Option<PathBuf>,
    },
    /// Fuzzy feedback values and the group consensus verdict.
    Consensus {
        #[arg(long)]
        feedback: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MEAN_THRESHOLD)]
        mean_threshold: f64,
        /// Largest IQR still counted as high consensus.
        #[arg(long, default_value_t = IqrBands::default().high_max)]
        high_max: f64,
        /// Largest IQR still counted as medium consensus.
        #[arg(long, default_value_t = IqrBands::default().medium_max)]
        medium_max: f64,
    },
    /// Jaccard agreement between predicted and human emotion labels.
    Accuracy {
        #[arg(long)]
        predicted: PathBuf,
        #[arg(long)]
        human: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Rank series, genre matrix and emotion distribution of a corpus.
    CorpusStats {
        #[arg(long, required = true)]
        catalog: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.2)]
        threshold: f64,
        /// Survey responses for the emotion correlation matrix.
        #[arg(long)]
        survey: Option<PathBuf>,
        #[arg(long)]
        media_root: Option<PathBuf>,
    },
    /// Run the HTTP session service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, required = true)]
        catalog: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = DEFAULT_MEAN_THRESHOLD)]
        mean_threshold: f64,
        /// Session snapshot loaded on start and written on shutdown.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Browser origin allowed by CORS; any origin when omitted.
        #[arg(long)]
        cors_origin: Option<String>,
        #[arg(long)]
        media_root: Option<PathBuf>,
    },
    /// Fetch one record from a metadata service (needs FILM_ACCORD_API_KEY).
    Fetch {
        /// Title to search for.
        query: String,
        /// Base URL of the metadata service.
        #[arg(long)]
        base: String,
        /// Catalog to add the record to; created when missing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Models {
    fis: FuzzySystem,
    lexicon: EmotionLexicon,
    kb: ColorEmotionKb,
    weights: ChannelWeights,
    weights_given: bool,
}

impl ModelArgs {
    fn load(&self) -> Result<Models, CliError> {
        let fis = match &self.fis {
            Some(p) => FuzzySystem::from_json_str(&read_text(p)?).map_err(|e| CliError::at(p, &e))?,
            None => FuzzySystem::builtin(),
        };
        let lexicon = match &self.lexicon {
            Some(p) => EmotionLexicon::parse(&read_text(p)?).map_err(|e| CliError::at(p, &e))?,
            None => EmotionLexicon::builtin(),
        };
        let kb = match &self.color_kb {
            Some(p) => ColorEmotionKb::from_json_str(&read_text(p)?).map_err(|e| CliError::at(p, &e))?,
            None => ColorEmotionKb::builtin(),
        };
        Ok(Models {
            fis,
            lexicon,
            kb,
            weights: self.weights.unwrap_or_default(),
            weights_given: self.weights.is_some(),
        })
    }
}

fn load_catalogs(paths: &[PathBuf]) -> Result<Catalog, CliError> {
    let mut merged = Catalog::new();
    for p in paths {
        let c = load_catalog(p).map_err(|e| CliError::at(p, &e))?;
        merged.extend(c).map_err(|e| CliError::at(p, &e))?;
    }
    Ok(merged)
}

fn emit<T: Serialize>(format: Format, value: &T, text: impl FnOnce() -> String) {
    match format {
        Format::Structured => println!("{}", serde_json::to_string_pretty(value).expect("output serializes")),
        Format::Text => print!("{}", text()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let models = cli.models.load()?;
    let ctx = ProfileContext::new(models.weights, &models.lexicon, &models.kb);
    let format = cli.format;
    match cli.command {
        Command::Analyze {
            movie,
            media_root,
            threshold,
        } => {
            let mut record: MovieRecord = read_json(&movie)?;
            record.validate().map_err(|e| CliError::at(&movie, &e))?;
            let root = media_root.unwrap_or_else(|| parent_dir(&movie));
            let ctx = ctx.with_media_root(root);
            let channels = match (&record.cached_profile, &record.cached_channels) {
                (Some(_), c) => *c,
                _ => {
                    let [poster, soundtrack, description] =
                        channel_scores(&record, &ctx).map_err(|e| CliError::at(&movie, &e))?;
                    Some(ChannelScores {
                        poster,
                        soundtrack,
                        description,
                    })
                }
            };
            let profile = movie_profile(&record, &ctx).map_err(|e| CliError::at(&movie, &e))?;
            record.cached_channels = channels;
            record.cached_profile = Some(profile);
            emit(format, &record, || render::analysis(&record, channels.as_ref(), &profile, threshold));
        }
        Command::Recommend {
            group,
            catalog,
            top,
            media_root,
        } => {
            let catalog = load_catalogs(&catalog)?;
            let file: GroupRequestFile = read_json(&group)?;
            let mut req = file.resolve(&catalog).map_err(|e| CliError::at(&group, &e))?;
            if file.weights.is_none() && models.weights_given {
                req.weights = models.weights;
            }
            let ctx = match media_root {
                Some(root) => ctx.with_media_root(root),
                None => ctx,
            };
            let mut ranked = recommend(&req, &ctx).map_err(|e| CliError::at(&group, &e))?;
            if let Some(n) = top {
                ranked.items.truncate(n);
            }
            emit(format, &ranked, || ranked.to_string());
        }
        Command::Consensus {
            feedback,
            mean_threshold,
            high_max,
            medium_max,
        } => {
            let file: FeedbackFile = read_json(&feedback)?;
            if high_max.partial_cmp(&medium_max).is_none_or(|o| o.is_gt()) {
                return Err(CliError::validation(format!(
                    "--high-max {high_max} must not exceed --medium-max {medium_max}"
                )));
            }
            let bands = IqrBands { high_max, medium_max };
            let mut values = Vec::with_capacity(file.feedback.len());
            for (n, entry) in file.feedback.iter().enumerate() {
                let v = feedback_value(entry, &models.fis).map_err(|e| {
                    CliError::validation(format!("{}: feedback[{n}] (`{}`): {e}", feedback.display(), entry.participant))
                })?;
                values.push(v);
            }
            let report = evaluate_consensus(&values, &bands, mean_threshold).map_err(|e| CliError::at(&feedback, &e))?;
            emit(format, &report, || render::consensus(&file.feedback, &report));
        }
        Command::Accuracy {
            predicted,
            human,
            threshold,
        } => {
            let p: LabeledScoresFile = read_json(&predicted)?;
            let h: LabeledScoresFile = read_json(&human)?;
            let report = labeled_accuracy(&p.movies, &h.movies, threshold).map_err(|e| {
                CliError::validation(format!("{} vs {}: {e}", predicted.display(), human.display()))
            })?;
            emit(format, &report, || render::accuracy(&p.movies, &report));
        }
        Command::CorpusStats {
            catalog,
            threshold,
            survey,
            media_root,
        } => {
            let label = catalog.first().cloned().unwrap_or_default();
            let corpus = load_catalogs(&catalog)?;
            let ctx = match media_root {
                Some(root) => ctx.with_media_root(root),
                None => ctx,
            };
            let profiled = profile_corpus(&corpus, &ctx).map_err(|e| CliError::at(&label, &e))?;
            let mut stats = corpus_stats(&profiled, threshold).map_err(|e| CliError::at(&label, &e))?;
            if let Some(path) = &survey {
                let file: SurveyFile = read_json(path)?;
                if file.emotions != film_accord::Emotion::ALL {
                    return Err(CliError::validation(format!(
                        "{}: `emotions` must list happy, angry, surprise, sad, fear in that order",
                        path.display()
                    )));
                }
                stats.survey = Some(survey_emotion_correlation(&file.responses).map_err(|e| CliError::at(path, &e))?);
            }
            emit(format, &stats, || render::corpus(&stats));
        }
        Command::Serve {
            listen,
            catalog,
            threshold,
            mean_threshold,
            snapshot,
            cors_origin,
            media_root,
        } => {
            let mut config = film_accord_service::ServiceConfig::new(load_catalogs(&catalog)?);
            config.fis = models.fis;
            config.lexicon = models.lexicon;
            config.kb = models.kb;
            config.weights = models.weights;
            config.threshold = threshold;
            config.mean_threshold = mean_threshold;
            config.snapshot = snapshot;
            config.cors_origin = cors_origin;
            config.media_root = media_root;
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError {
                code: EXIT_IO,
                message: format!("cannot start runtime: {e}"),
            })?;
            rt.block_on(film_accord_service::serve(config, listen)).map_err(|e| CliError {
                code: EXIT_IO,
                message: format!("serve {listen}: {e}"),
            })?;
        }
        Command::Fetch { query, base, out } => {
            let client = HttpMetadataClient::from_env(base).map_err(|e| CliError::validation(e.to_string()))?;
            let (record, provenance) = client.fetch_movie(&query).map_err(|e| CliError {
                code: match e {
                    film_accord::catalog::FetchError::Network(_) => EXIT_IO,
                    _ => EXIT_VALIDATION,
                },
                message: format!("fetch `{query}`: {e}"),
            })?;
            match out {
                Some(path) => {
                    let mut catalog = if path.exists() {
                        load_catalog(&path).map_err(|e| CliError::at(&path, &e))?
                    } else {
                        Catalog::new()
                    };
                    let id = record.id.clone();
                    catalog.insert(record, provenance).map_err(|e| CliError::at(&path, &e))?;
                    save_catalog(&catalog, &path).map_err(|e| CliError::at(&path, &e))?;
                    log::info!("added `{id}` to {}", path.display());
                }
                None => emit(format, &record, || format!("{}\t{}\t{provenance}\n", record.id, record.title)),
            }
        }
    }
    Ok(())
}

fn parent_dir(path: &Path) -> PathBuf {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
