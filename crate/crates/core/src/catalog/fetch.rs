use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use thiserror::Error;

use super::{CatalogError, MovieRecord, Provenance, TrackRef};

pub const API_KEY_ENV: &str = "FILM_ACCORD_API_KEY";
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("environment variable {API_KEY_ENV} is not set")]
    MissingCredential,
    #[error("network error: {0}")]
    Network(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("rate limited by metadata service{}", .retry_after.map(|s| format!(" (retry after {s}s)")).unwrap_or_default())]
    RateLimited { retry_after: Option<u64> },
    #[error("metadata service returned HTTP {status}")]
    Status { status: u16 },
    #[error("response body: field `{field}`: {message}")]
    Decode { field: String, message: String },
    #[error(transparent)]
    Invalid(#[from] CatalogError),
}

/// Anything that can produce a movie record from a title query.
pub trait MetadataSource {
    fn movie(&self, id: &str) -> Result<MovieRecord, FetchError>;
    fn search(&self, title_query: &str) -> Result<Vec<SearchHit>, FetchError>;

    /// First search hit, resolved to a full record.
    fn fetch_movie(&self, title_query: &str) -> Result<(MovieRecord, Provenance), FetchError> {
        let hits = self.search(title_query)?;
        let hit = hits
            .first()
            .ok_or_else(|| FetchError::NotFound(format!("no movie matches `{title_query}`")))?;
        let record = self.movie(&hit.id)?;
        record.validate()?;
        Ok((record, Provenance::Fetched))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchHit {
    pub id: String,
    pub title: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IdValue {
    Num(u64),
    Text(String),
}

impl IdValue {
    fn into_string(self) -> String {
        match self {
            IdValue::Num(n) => n.to_string(),
            IdValue::Text(s) => s,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GenreValue {
    Name(String),
    Object { name: String },
}

#[derive(Deserialize)]
struct MovieBody {
    id: IdValue,
    title: String,
    overview: String,
    genres: Vec<GenreValue>,
    track: Option<String>,
    performer: Option<String>,
}

#[derive(Deserialize)]
struct SearchBody {
    results: Vec<SearchEntry>,
}

#[derive(Deserialize)]
struct SearchEntry {
    id: IdValue,
    title: String,
}

fn decode<T: DeserializeOwned>(body: &str) -> Result<T, FetchError> {
    let de = &mut serde_json::Deserializer::from_str(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        let field = message
            .strip_prefix("missing field `")
            .and_then(|rest| rest.split('`').next())
            .map(|name| if path == "." { name.to_string() } else { format!("{path}.{name}") })
            .unwrap_or(path);
        FetchError::Decode { field, message }
    })
}

fn movie_from_body(body: MovieBody) -> MovieRecord {
    let mut record = MovieRecord::new(
        body.id.into_string(),
        body.title,
        body.genres
            .into_iter()
            .map(|g| match g {
                GenreValue::Name(n) | GenreValue::Object { name: n } => n,
            })
            .collect(),
    );
    record.overview = body.overview;
    if let (Some(title), Some(performer)) = (body.track, body.performer) {
        record.soundtrack = Some(TrackRef { title, performer });
    }
    record
}

/// Caps concurrent requests per host.
#[derive(Debug)]
pub struct HostThrottle {
    ceiling: usize,
    in_flight: Mutex<HashMap<String, usize>>,
    freed: Condvar,
}

impl HostThrottle {
    pub fn new(ceiling: usize) -> Self {
        HostThrottle {
            ceiling: ceiling.max(1),
            in_flight: Mutex::new(HashMap::new()),
            freed: Condvar::new(),
        }
    }

    pub fn ceiling(&self) -> usize {
        self.ceiling
    }

    fn acquire(&self, host: &str) -> Permit<'_> {
        let mut map = self.in_flight.lock().unwrap();
        while map.get(host).copied().unwrap_or(0) >= self.ceiling {
            map = self.freed.wait(map).unwrap();
        }
        *map.entry(host.to_string()).or_insert(0) += 1;
        Permit {
            throttle: self,
            host: host.to_string(),
        }
    }
}

struct Permit<'a> {
    throttle: &'a HostThrottle,
    host: String,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut map = self.throttle.in_flight.lock().unwrap();
        if let Some(n) = map.get_mut(&self.host) {
            *n -= 1;
        }
        self.throttle.freed.notify_all();
    }
}

/// Blocking client for a TMDB-style JSON API.
#[derive(Debug, Clone)]
pub struct HttpMetadataClient {
    base: String,
    host: String,
    api_key: Option<String>,
    agent: ureq::Agent,
    throttle: Arc<HostThrottle>,
}

impl HttpMetadataClient {
    pub fn new(base: impl Into<String>, api_key: Option<String>) -> Self {
        let base = base.into().trim_end_matches('/').to_string();
        let host = base
            .split("://")
            .nth(1)
            .unwrap_or(&base)
            .split('/')
            .next()
            .unwrap_or_default()
            .to_string();
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .new_agent();
        HttpMetadataClient {
            base,
            host,
            api_key,
            agent,
            throttle: Arc::new(HostThrottle::new(DEFAULT_MAX_IN_FLIGHT)),
        }
    }

    /// Reads the credential from `FILM_ACCORD_API_KEY`.
    pub fn from_env(base: impl Into<String>) -> Result<Self, FetchError> {
        let key = std::env::var(API_KEY_ENV).map_err(|_| FetchError::MissingCredential)?;
        Ok(Self::new(base, Some(key)))
    }

    pub fn with_throttle(mut self, throttle: Arc<HostThrottle>) -> Self {
        self.throttle = throttle;
        self
    }

    pub fn with_max_in_flight(self, ceiling: usize) -> Self {
        self.with_throttle(Arc::new(HostThrottle::new(ceiling)))
    }

    fn get(&self, path: &str, query: Option<(&str, &str)>, what: &str) -> Result<String, FetchError> {
        let _permit = self.throttle.acquire(&self.host);
        let mut req = self.agent.get(format!("{}{}", self.base, path));
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        if let Some((k, v)) = query {
            req = req.query(k, v);
        }
        let mut resp = req.call().map_err(|e| FetchError::Network(e.to_string()))?;
        match resp.status().as_u16() {
            200..=299 => resp
                .body_mut()
                .read_to_string()
                .map_err(|e| FetchError::Network(e.to_string())),
            404 => Err(FetchError::NotFound(what.to_string())),
            429 => Err(FetchError::RateLimited {
                retry_after: resp
                    .headers()
                    .get("retry-after")
                    .and_then(|v| v.to_str().ok())
                    .and_then(|v| v.trim().parse().ok()),
            }),
            status => Err(FetchError::Status { status }),
        }
    }
}

impl MetadataSource for HttpMetadataClient {
    fn movie(&self, id: &str) -> Result<MovieRecord, FetchError> {
        let body = self.get(&format!("/movie/{id}"), None, &format!("movie `{id}`"))?;
        let record = movie_from_body(decode(&body)?);
        record.validate()?;
        Ok(record)
    }

    fn search(&self, title_query: &str) -> Result<Vec<SearchHit>, FetchError> {
        let body = self.get("/search", Some(("q", title_query)), &format!("search `{title_query}`"))?;
        let parsed: SearchBody = decode(&body)?;
        Ok(parsed
            .results
            .into_iter()
            .map(|e| SearchHit {
                id: e.id.into_string(),
                title: e.title,
            })
            .collect())
    }
}
