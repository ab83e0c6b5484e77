//! Movie records, catalog files, poster decoding and the metadata fetch
//! client.

mod fetch;
mod record;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::PosterImage;

pub use fetch::{
    FetchError, HostThrottle, HttpMetadataClient, MetadataSource, SearchHit, API_KEY_ENV,
    DEFAULT_MAX_IN_FLIGHT,
};
pub use record::{ChannelScores, MovieRecord, PosterRef, Swatch, TrackRef};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}, column {column}: at `{at}`: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        at: String,
        message: String,
    },
    #[error("unsupported catalog schema {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("record `{record}`: field `{field}`: {message}")]
    Invalid {
        record: String,
        field: &'static str,
        message: String,
    },
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
    #[error("popularity rank {rank} used by both `{first}` and `{second}`")]
    DuplicateRank {
        rank: u32,
        first: String,
        second: String,
    },
    #[error("no record with id `{0}`")]
    UnknownMovie(String),
    #[error("{path}: unsupported image format")]
    UnsupportedImage { path: String },
    #[error("{path}: corrupt image: {message}")]
    CorruptImage { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    File,
    Fetched,
    SyntheticFixture,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::File => "file",
            Provenance::Fetched => "fetched",
            Provenance::SyntheticFixture => "synthetic-fixture",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub provenance: Provenance,
    pub record: MovieRecord,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    schema: u32,
    records: Vec<CatalogEntry>,
}

/// Id-keyed movie collection that keeps file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    entries: Vec<CatalogEntry>,
    index: HashMap<String, usize>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: Vec<CatalogEntry>) -> Result<Self, CatalogError> {
        let mut catalog = Catalog::new();
        for entry in entries {
            catalog.insert(entry.record, entry.provenance)?;
        }
        catalog.check_ranks()?;
        Ok(catalog)
    }

    pub fn insert(&mut self, record: MovieRecord, provenance: Provenance) -> Result<(), CatalogError> {
        record.validate()?;
        if self.index.contains_key(&record.id) {
            return Err(CatalogError::DuplicateId(record.id));
        }
        self.index.insert(record.id.clone(), self.entries.len());
        self.entries.push(CatalogEntry { provenance, record });
        Ok(())
    }

    /// Appends every record of `other`, keeping its provenance.
    pub fn extend(&mut self, other: Catalog) -> Result<(), CatalogError> {
        for e in other.entries {
            self.insert(e.record, e.provenance)?;
        }
        self.check_ranks()
    }

    fn check_ranks(&self) -> Result<(), CatalogError> {
        let mut seen: HashMap<u32, &str> = HashMap::new();
        for e in &self.entries {
            if let Some(rank) = e.record.popularity_rank {
                if let Some(first) = seen.insert(rank, &e.record.id) {
                    return Err(CatalogError::DuplicateRank {
                        rank,
                        first: first.to_string(),
                        second: e.record.id.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&MovieRecord> {
        self.index.get(id).map(|&i| &self.entries[i].record)
    }

    pub fn require(&self, id: &str) -> Result<&MovieRecord, CatalogError> {
        self.get(id).ok_or_else(|| CatalogError::UnknownMovie(id.to_string()))
    }

    pub fn provenance(&self, id: &str) -> Option<Provenance> {
        self.index.get(id).map(|&i| self.entries[i].provenance)
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn records(&self) -> impl Iterator<Item = &MovieRecord> {
        self.entries.iter().map(|e| &e.record)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.record.id.as_str())
    }

    pub fn from_json_str(text: &str, origin: &str) -> Result<Self, CatalogError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: CatalogFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let at = e.path().to_string();
            let inner = e.into_inner();
            CatalogError::Parse {
                path: origin.to_string(),
                line: inner.line(),
                column: inner.column(),
                at,
                message: inner.to_string(),
            }
        })?;
        if file.schema != SCHEMA_VERSION {
            return Err(CatalogError::Schema(file.schema));
        }
        Catalog::from_entries(file.records)
    }

    pub fn to_json_string(&self) -> String {
        let file = CatalogFile {
            schema: SCHEMA_VERSION,
            records: self.entries.clone(),
        };
        serde_json::to_string_pretty(&file).expect("catalog serializes")
    }
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog, CatalogError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Catalog::from_json_str(&text, &path.display().to_string())
}

pub fn save_catalog(catalog: &Catalog, path: impl AsRef<Path>) -> Result<(), CatalogError> {
    let path = path.as_ref();
    std::fs::write(path, catalog.to_json_string() + "\n").map_err(|source| CatalogError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Decodes PNG or plain-text PPM (`P3`) into exact RGB pixels.
pub fn decode_poster(path: impl AsRef<Path>) -> Result<PosterImage, CatalogError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| CatalogError::Io {
        path: shown.clone(),
        source,
    })?;
    decode_poster_bytes(&bytes, &shown)
}

pub fn decode_poster_bytes(bytes: &[u8], origin: &str) -> Result<PosterImage, CatalogError> {
    use image::ImageFormat;
    let format = image::guess_format(bytes).map_err(|_| CatalogError::UnsupportedImage {
        path: origin.to_string(),
    })?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Pnm) {
        return Err(CatalogError::UnsupportedImage {
            path: origin.to_string(),
        });
    }
    let img = image::load_from_memory_with_format(bytes, format).map_err(|e| match e {
        image::ImageError::Unsupported(_) => CatalogError::UnsupportedImage {
            path: origin.to_string(),
        },
        other => CatalogError::CorruptImage {
            path: origin.to_string(),
            message: other.to_string(),
        },
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    let pixels = rgb.pixels().map(|p| p.0).collect();
    PosterImage::new(w, h, pixels).map_err(|e| CatalogError::CorruptImage {
        path: origin.to_string(),
        message: e.to_string(),
    })
}

/// Ids present in more than one of the given lists, for diagnostics.
pub fn duplicated_ids<'a>(ids: impl IntoIterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen = HashSet::new();
    let mut dups = Vec::new();
    for id in ids {
        if !seen.insert(id) && !dups.contains(&id) {
            dups.push(id);
        }
    }
    dups
}
