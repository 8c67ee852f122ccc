//! Run-configuration plumbing: typed CLI errors with exit codes, the flat
//! key=value config file, and flag/file/default resolution with full
//! resolved-config logging.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Command failures, classified for the process exit code:
/// usage → 1, data → 2, numeric → 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage: {}", msg),
            CliError::Data(msg) => write!(f, "data: {}", msg),
            CliError::Numeric(msg) => write!(f, "numeric: {}", msg),
        }
    }
}

impl From<spts_core::Error> for CliError {
    fn from(e: spts_core::Error) -> Self {
        match e {
            spts_core::Error::NonFinite { .. } | spts_core::Error::Degenerate { .. } => {
                CliError::Numeric(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Values loaded from a `key=value` config file (`#` comments, blank lines
/// ignored). Flags override these; these override built-in defaults.
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("config {}: {}", path.display(), e)))?;
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    CliError::Usage(format!(
                        "config {} line {}: expected key=value",
                        path.display(),
                        i + 1
                    ))
                })?;
                values.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(FileConfig { values })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Resolves each setting as flag > file > default and records the outcome
/// so the run can log its complete effective configuration.
pub struct Resolver {
    file: FileConfig,
    resolved: Vec<(String, String)>,
}

impl Resolver {
    pub fn new(file: FileConfig) -> Self {
        Resolver {
            file,
            resolved: Vec::new(),
        }
    }

    fn from_file<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.file.raw(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                CliError::Usage(format!("config key '{}' has bad value '{}'", key, raw))
            }),
        }
    }

    /// Setting with a built-in default.
    pub fn value<T: FromStr + fmt::Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> CliResult<T> {
        let value = match flag {
            Some(v) => v,
            None => self.from_file(key)?.unwrap_or(default),
        };
        self.resolved.push((key.to_string(), value.to_string()));
        Ok(value)
    }

    /// Setting that must come from a flag or the file.
    pub fn required_path(&mut self, key: &str, flag: Option<PathBuf>) -> CliResult<PathBuf> {
        let value = flag
            .or_else(|| self.file.raw(key).map(PathBuf::from))
            .ok_or_else(|| CliError::Usage(format!("missing required setting '{}'", key)))?;
        self.resolved
            .push((key.to_string(), value.display().to_string()));
        Ok(value)
    }

    /// Setting with no default; absent everywhere stays `None`.
    pub fn optional_value<T: FromStr + fmt::Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> CliResult<Option<T>> {
        let value = match flag {
            Some(v) => Some(v),
            None => self.from_file(key)?,
        };
        self.resolved.push((
            key.to_string(),
            value
                .as_ref()
                .map_or_else(|| "(unset)".to_string(), T::to_string),
        ));
        Ok(value)
    }

    /// Path-valued setting with a computed default.
    pub fn path_or(&mut self, key: &str, flag: Option<PathBuf>, default: PathBuf) -> PathBuf {
        let value = flag
            .or_else(|| self.file.raw(key).map(PathBuf::from))
            .unwrap_or(default);
        self.resolved
            .push((key.to_string(), value.display().to_string()));
        value
    }

    /// Optional path-valued setting.
    pub fn optional_path(&mut self, key: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
        let value = flag.or_else(|| self.file.raw(key).map(PathBuf::from));
        self.resolved.push((
            key.to_string(),
            value
                .as_ref()
                .map_or_else(|| "(unset)".to_string(), |p| p.display().to_string()),
        ));
        value
    }

    /// Multi-path setting: flags win; in the file, paths are
    /// whitespace-separated.
    pub fn paths(&mut self, key: &str, flags: Vec<PathBuf>) -> Vec<PathBuf> {
        let value = if flags.is_empty() {
            self.file
                .raw(key)
                .map(|raw| raw.split_whitespace().map(PathBuf::from).collect())
                .unwrap_or_default()
        } else {
            flags
        };
        let shown: Vec<String> = value.iter().map(|p| p.display().to_string()).collect();
        self.resolved.push((key.to_string(), shown.join(" ")));
        value
    }

    /// Write the fully resolved configuration to stderr.
    pub fn log(&self, command: &str) {
        eprintln!("config: command = {}", command);
        for (key, value) in &self.resolved {
            eprintln!("config: {} = {}", key, value);
        }
    }
}

/// Comma-separated list parse with a uniform usage error.
pub fn parse_list<T: FromStr>(raw: &str, what: &str) -> CliResult<Vec<T>> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad {} entry '{}'", what, tok)))
        })
        .collect()
}
