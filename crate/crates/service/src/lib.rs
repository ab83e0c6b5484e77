//! HTTP session service under `/v1`: catalog queries, group sessions,
//! recommendation, live feedback and the consensus verdict.

mod error;
mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use film_accord::catalog::ChannelScores;
use film_accord::channels::{ColorEmotionKb, EmotionLexicon};
use film_accord::consensus::{feedback_value, DEFAULT_MEAN_THRESHOLD};
use film_accord::recommender::{channel_scores, Participant};
use film_accord::{
    evaluate_consensus, movie_profile, recommend, to_emotion_set, Catalog, ChannelWeights,
    ConsensusError, ConsensusLevel, EmotionScores, EmotionSet, FeedbackEntry, FuzzySystem,
    GroupRequest, IqrBands, ProfileContext, RankedRecommendation, RecommendError, Verdict,
    DEFAULT_THRESHOLD,
};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use error::{parse_body, ApiError};
pub use session::{Session, SessionParticipant, SessionState};

pub struct ServiceConfig {
    pub catalog: Catalog,
    pub fis: FuzzySystem,
    pub lexicon: EmotionLexicon,
    pub kb: ColorEmotionKb,
    pub weights: ChannelWeights,
    pub threshold: f64,
    pub mean_threshold: f64,
    pub bands: IqrBands,
    pub media_root: Option<PathBuf>,
    /// Allowed browser origin; `None` allows any.
    pub cors_origin: Option<String>,
    pub snapshot: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn new(catalog: Catalog) -> Self {
        ServiceConfig {
            catalog,
            fis: FuzzySystem::builtin(),
            lexicon: EmotionLexicon::builtin(),
            kb: ColorEmotionKb::builtin(),
            weights: ChannelWeights::default(),
            threshold: DEFAULT_THRESHOLD,
            mean_threshold: DEFAULT_MEAN_THRESHOLD,
            bands: IqrBands::default(),
            media_root: None,
            cors_origin: None,
            snapshot: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct MovieEmotions {
    id: String,
    title: String,
    genres: Vec<String>,
    channels: Option<ChannelScores>,
    profile: Option<EmotionScores>,
    emotion_set: Option<EmotionSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile_error: Option<String>,
}

type SessionMap = HashMap<String, Arc<Mutex<Session>>>;

pub struct AppState {
    config: ServiceConfig,
    movies: HashMap<String, MovieEmotions>,
    sessions: RwLock<SessionMap>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        let movies = {
            let ctx = profile_context(&config);
            config
                .catalog
                .records()
                .map(|r| {
                    let channels = channel_scores(r, &ctx)
                        .ok()
                        .map(|[poster, soundtrack, description]| ChannelScores { poster, soundtrack, description });
                    let (profile, profile_error) = match movie_profile(r, &ctx) {
                        Ok(p) => (Some(p), None),
                        Err(e) => (None, Some(e.to_string())),
                    };
                    let body = MovieEmotions {
                        id: r.id.clone(),
                        title: r.title.clone(),
                        genres: r.genres.clone(),
                        channels,
                        profile,
                        emotion_set: profile.map(|p| to_emotion_set(&p, config.threshold)),
                        profile_error,
                    };
                    (r.id.clone(), body)
                })
                .collect()
        };
        AppState {
            config,
            movies,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session `{id}`")))
    }

    pub async fn snapshot(&self) -> Vec<Session> {
        let handles: Vec<_> = self.sessions.read().unwrap().values().cloned().collect();
        let mut out = Vec::with_capacity(handles.len());
        for h in handles {
            out.push(h.lock().await.clone());
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }

    pub fn restore(&self, sessions: Vec<Session>) {
        let mut map = self.sessions.write().unwrap();
        for s in sessions {
            map.insert(s.id.clone(), Arc::new(Mutex::new(s)));
        }
    }

    pub async fn save_snapshot(&self, path: &std::path::Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(&self.snapshot().await)?;
        std::fs::write(path, text + "\n")
    }

    pub fn load_snapshot(&self, path: &std::path::Path) -> std::io::Result<usize> {
        let text = std::fs::read_to_string(path)?;
        let sessions: Vec<Session> = serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        let n = sessions.len();
        self.restore(sessions);
        Ok(n)
    }
}

fn profile_context(config: &ServiceConfig) -> ProfileContext<'_> {
    let ctx = ProfileContext::new(config.weights, &config.lexicon, &config.kb);
    match &config.media_root {
        Some(root) => ctx.with_media_root(root.clone()),
        None => ctx,
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = match &state.config.cors_origin {
        Some(origin) => match HeaderValue::from_str(origin) {
            Ok(v) => CorsLayer::new().allow_origin(AllowOrigin::exact(v)),
            Err(_) => CorsLayer::new(),
        },
        None => CorsLayer::new().allow_origin(AllowOrigin::any()),
    }
    .allow_methods([axum::http::Method::GET, axum::http::Method::POST])
    .allow_headers([axum::http::header::CONTENT_TYPE]);

    let v1 = Router::new()
        .route("/health", get(|| async { Json(serde_json::json!({ "status": "ok" })) }))
        .route("/movies", get(list_movies))
        .route("/movies/{id}/emotions", get(movie_emotions))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/participants", post(add_participant))
        .route("/sessions/{id}/recommend", post(run_recommend))
        .route("/sessions/{id}/feedback", post(submit_feedback))
        .route("/sessions/{id}/consensus", get(consensus));
    Router::new().nest("/v1", v1).layer(cors).with_state(state)
}

/// Binds, serves until ctrl-c, and writes the snapshot on the way out.
pub async fn serve(config: ServiceConfig, addr: SocketAddr) -> std::io::Result<()> {
    let snapshot = config.snapshot.clone();
    let state = Arc::new(AppState::new(config));
    if let Some(path) = snapshot.as_deref().filter(|p| p.exists()) {
        let n = state.load_snapshot(path)?;
        log::info!("restored {n} sessions from {}", path.display());
    }
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}/v1", listener.local_addr()?);
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    if let Some(path) = snapshot {
        state.save_snapshot(&path).await?;
        log::info!("wrote session snapshot to {}", path.display());
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MovieQuery {
    q: Option<String>,
    genre: Option<String>,
}

async fn list_movies(State(state): State<Arc<AppState>>, Query(query): Query<MovieQuery>) -> Json<Vec<MovieEmotions>> {
    let q = query.q.map(|s| s.to_lowercase());
    let movies = state
        .config
        .catalog
        .records()
        .filter(|r| q.as_ref().is_none_or(|q| r.title.to_lowercase().contains(q)))
        .filter(|r| query.genre.as_ref().is_none_or(|g| r.has_genre(g)))
        .map(|r| state.movies[&r.id].clone())
        .collect();
    Json(movies)
}

async fn movie_emotions(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<MovieEmotions>, ApiError> {
    state
        .movies
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no movie `{id}`")))
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    candidates: Option<Vec<String>>,
    #[serde(default)]
    genre_filter: bool,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<(StatusCode, Json<Session>), ApiError> {
    let req: CreateSession = parse_body(&body)?;
    let catalog = &state.config.catalog;
    let candidates = match req.candidates {
        Some(list) => {
            if list.is_empty() {
                return Err(ApiError::invalid("candidates", "candidate pool is empty"));
            }
            for (i, id) in list.iter().enumerate() {
                if catalog.get(id).is_none() {
                    return Err(ApiError::invalid(format!("candidates[{i}]"), format!("no movie `{id}`")));
                }
                if list[..i].contains(id) {
                    return Err(ApiError::invalid(format!("candidates[{i}]"), format!("`{id}` listed twice")));
                }
            }
            list
        }
        None => catalog.ids().map(str::to_string).collect(),
    };
    let id = uuid::Uuid::new_v4().to_string();
    let session = Session::new(id.clone(), candidates, req.genre_filter);
    state
        .sessions
        .write()
        .unwrap()
        .insert(id, Arc::new(Mutex::new(session.clone())));
    Ok((StatusCode::CREATED, Json(session)))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Session>, ApiError> {
    let handle = state.session(&id)?;
    let s = handle.lock().await;
    Ok(Json(s.clone()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AddParticipant {
    id: String,
    name: Option<String>,
    favorite: String,
}

async fn add_participant(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Session>, ApiError> {
    let req: AddParticipant = parse_body(&body)?;
    if req.id.trim().is_empty() {
        return Err(ApiError::invalid("id", "participant id must not be empty"));
    }
    if state.config.catalog.get(&req.favorite).is_none() {
        return Err(ApiError::invalid("favorite", format!("no movie `{}`", req.favorite)));
    }
    let handle = state.session(&id)?;
    let mut s = handle.lock().await;
    if !s.can_edit_participants() {
        return Err(ApiError::conflict(format!("participants cannot change in state {}", s.state)));
    }
    let name = req.name.unwrap_or_else(|| req.id.clone());
    s.upsert_participant(SessionParticipant {
        id: req.id,
        name,
        favorite: req.favorite,
    });
    Ok(Json(s.clone()))
}

async fn run_recommend(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<RankedRecommendation>, ApiError> {
    let handle = state.session(&id)?;
    let mut s = handle.lock().await;
    if !s.can_recommend() {
        return Err(ApiError::conflict(format!("cannot recommend in state {}", s.state)));
    }
    if s.participants.is_empty() {
        return Err(ApiError::conflict("session has no participants"));
    }
    let catalog = &state.config.catalog;
    let participants = s
        .participants
        .iter()
        .map(|p| Participant {
            id: p.id.clone(),
            favorite: catalog.get(&p.favorite).expect("favorite checked on join").clone(),
        })
        .collect();
    let candidates = s
        .candidates
        .iter()
        .map(|c| catalog.get(c).expect("candidate checked on create").clone())
        .collect();
    let mut req = GroupRequest::new(participants, candidates);
    req.threshold = state.config.threshold;
    req.weights = state.config.weights;
    req.genre_filter = s.genre_filter;
    let ranked = recommend(&req, &profile_context(&state.config)).map_err(|e| match e {
        RecommendError::Profile { movie, source } => {
            ApiError::invalid("candidates", format!("movie `{movie}`: {source}"))
        }
        other => ApiError::invalid("session", other.to_string()),
    })?;
    s.set_recommendation(ranked.clone());
    Ok(Json(ranked))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmitFeedback {
    participant: String,
    agreement: f64,
    confidence: f64,
}

async fn submit_feedback(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Session>, ApiError> {
    let req: SubmitFeedback = parse_body(&body)?;
    let entry = FeedbackEntry {
        participant: req.participant,
        agreement: req.agreement,
        confidence: req.confidence,
    };
    if let Err(ConsensusError::OutOfRange { field, value, .. }) = entry.validate() {
        return Err(ApiError::invalid(field, format!("{value} is outside [0, 10]")));
    }
    let handle = state.session(&id)?;
    let mut s = handle.lock().await;
    if s.state != SessionState::Recommended {
        return Err(ApiError::conflict(format!("feedback is accepted only after a recommendation (state {})", s.state)));
    }
    if s.participant(&entry.participant).is_none() {
        return Err(ApiError::invalid("participant", format!("`{}` is not in this session", entry.participant)));
    }
    s.feedback.insert(entry.participant.clone(), entry);
    Ok(Json(s.clone()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConsensusQuery {
    #[serde(default)]
    partial: bool,
}

#[derive(Debug, Clone, Serialize)]
struct ParticipantFeedback {
    participant: String,
    agreement: f64,
    confidence: f64,
    feedback_value: f64,
}

#[derive(Debug, Clone, Serialize)]
struct ConsensusBody {
    state: SessionState,
    partial: bool,
    participants: Vec<ParticipantFeedback>,
    feedback_values: Vec<f64>,
    iqr: f64,
    mean: f64,
    level: ConsensusLevel,
    verdict: Verdict,
}

/// Completed rounds move the session to `ConsensusReached` or
/// `ReEvaluating`; partial reads leave it in `Recommended`.
async fn consensus(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(query): Query<ConsensusQuery>,
) -> Result<Json<ConsensusBody>, ApiError> {
    let handle = state.session(&id)?;
    let mut s = handle.lock().await;
    let settled = matches!(s.state, SessionState::ConsensusReached | SessionState::ReEvaluating);
    if !settled && s.state != SessionState::Recommended {
        return Err(ApiError::conflict(format!("no recommendation to evaluate (state {})", s.state)));
    }
    if s.feedback.is_empty() {
        return Err(ApiError::conflict("no feedback submitted yet"));
    }
    let partial = !settled && query.partial;
    if !settled && !partial {
        let missing = s.missing_feedback();
        if !missing.is_empty() {
            return Err(ApiError::conflict(format!("waiting for feedback from: {}", missing.join(", "))));
        }
    }
    let fis = &state.config.fis;
    let participants = s
        .ordered_feedback()
        .into_iter()
        .map(|e| {
            Ok(ParticipantFeedback {
                participant: e.participant.clone(),
                agreement: e.agreement,
                confidence: e.confidence,
                feedback_value: feedback_value(e, fis).map_err(|err| ApiError::internal(err.to_string()))?,
            })
        })
        .collect::<Result<Vec<_>, ApiError>>()?;
    let values: Vec<f64> = participants.iter().map(|p| p.feedback_value).collect();
    let report = evaluate_consensus(&values, &state.config.bands, state.config.mean_threshold).map_err(|e| match e {
        ConsensusError::InsufficientFeedback(n) => {
            ApiError::conflict(format!("need at least 2 feedback entries, have {n}"))
        }
        other => ApiError::internal(other.to_string()),
    })?;
    if !partial && !settled {
        s.state = match report.verdict {
            Verdict::Accepted => SessionState::ConsensusReached,
            Verdict::ReEvaluate => SessionState::ReEvaluating,
        };
        s.consensus = Some(report.clone());
    }
    Ok(Json(ConsensusBody {
        state: s.state,
        partial,
        participants,
        feedback_values: report.feedback_values,
        iqr: report.iqr,
        mean: report.mean,
        level: report.level,
        verdict: report.verdict,
    }))
}
