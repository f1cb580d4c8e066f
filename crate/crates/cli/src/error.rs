use std::path::{Path, PathBuf};

/// Every failure the binary reports, with its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Config(String),
    #[error("checkpoint vocabulary {checkpoint} does not match prepared vocabulary {prepared}")]
    VocabMismatch { checkpoint: String, prepared: String },
    #[error("{0}")]
    Diverged(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Validation(_) => "validation",
            CliError::Config(_) => "config",
            CliError::VocabMismatch { .. } => "vocab-mismatch",
            CliError::Diverged(_) => "diverged",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Diverged(_) => 3,
            _ => 1,
        }
    }

    /// `error: kind=<kind> <message>` on a single line.
    pub fn render(&self) -> String {
        let message = self.to_string().replace(['\n', '\r'], " ");
        format!("error: kind={} {message}", self.kind())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read(path)?).map_err(|_| CliError::Validation(format!("{} is not UTF-8", path.display())))
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}
