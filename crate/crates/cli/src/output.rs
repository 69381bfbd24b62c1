//! Exit codes and CSV emission.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use heston_fisher::Error;
use sha2::{Digest, Sha256};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_EMPTY: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn empty(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_EMPTY,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) | Error::Schema { .. } | Error::Io(_) | Error::InvalidNoise(_) => EXIT_CONFIG,
            Error::EmptyPanel | Error::NoQuotes | Error::NoCalls(_) | Error::EmptyDay(_) => EXIT_EMPTY,
            _ => EXIT_NUMERICAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// Hex SHA-256 of the canonical config plus the command's own options.
pub fn config_hash(canonical: &str, command: &str) -> String {
    let mut h = Sha256::new();
    h.update(canonical.as_bytes());
    h.update(b"\n");
    h.update(command.as_bytes());
    hex::encode(h.finalize())
}

/// CSV text with a `# config_hash=` line, extra `# key=value` lines, a
/// header and rows.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(hash: &str, meta: &[(&str, String)], header: &[&str]) -> Self {
        let mut text = format!("# config_hash={hash}\n");
        for (k, v) in meta {
            let _ = writeln!(text, "# {k}={v}");
        }
        text.push_str(&header.join(","));
        text.push('\n');
        Table { text }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::config(format!("stdout: {e}")))
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

pub fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}
