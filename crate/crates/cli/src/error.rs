use std::error::Error as StdError;
use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;

pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;

/// A failure tied to the input file it came from.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    /// Wraps a library error, prefixing the file unless the message already
    /// starts with it. Any I/O error in the source chain maps to exit code 2.
    pub fn at(path: &Path, err: &(dyn StdError + 'static)) -> Self {
        let shown = path.display().to_string();
        let text = err.to_string();
        let message = if text.starts_with(&shown) { text } else { format!("{shown}: {text}") };
        let code = if has_io_source(err) { EXIT_IO } else { EXIT_VALIDATION };
        CliError { code, message }
    }
}

fn has_io_source(err: &(dyn StdError + 'static)) -> bool {
    let mut cur = Some(err);
    while let Some(e) = cur {
        if e.is::<std::io::Error>() {
            return true;
        }
        cur = e.source();
    }
    false
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::at(path, &e))
}

/// Reads a JSON file, naming the offending field path on failure.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_text(path)?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        CliError::validation(format!("{}: at `{at}`: {}", path.display(), e.inner()))
    })
}
