use std::path::PathBuf;

use thiserror::Error;

/// Failure of a subcommand, classified by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, unwritable or malformed files.
    #[error("{0}")]
    Io(String),

    /// Bad flags or missing configuration such as a feature sidecar.
    #[error("{0}")]
    Config(String),

    /// Inputs that are individually fine but do not fit together.
    #[error("{0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 2,
            CliError::Config(_) => 3,
            CliError::Mismatch(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl From<vidcut::Error> for CliError {
    fn from(e: vidcut::Error) -> Self {
        use vidcut::Error as E;
        let msg = e.to_string();
        match e {
            E::MissingSidecar(_) | E::InvalidParameter(_) => CliError::Config(msg),
            E::DimensionMismatch(_)
            | E::FrameCountMismatch(..)
            | E::DuplicateVideo(_)
            | E::MissingGroundTruth(_) => CliError::Mismatch(msg),
            _ => CliError::Io(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Files written into a hidden staging directory and moved into place only
/// once the whole command has succeeded. Dropping without [`Staging::commit`]
/// deletes everything staged.
pub struct Staging {
    out: PathBuf,
    dir: tempfile::TempDir,
    files: Vec<PathBuf>,
}

impl Staging {
    pub fn new(out: &std::path::Path) -> CliResult<Self> {
        std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        let dir = tempfile::Builder::new()
            .prefix(".vidcut-staging-")
            .tempdir_in(out)
            .map_err(|e| CliError::io(out, e))?;
        Ok(Self {
            out: out.to_path_buf(),
            dir,
            files: Vec::new(),
        })
    }

    /// Staging location for `rel`, creating parent directories.
    pub fn path(&mut self, rel: &str) -> CliResult<PathBuf> {
        let p = self.dir.path().join(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        self.files.push(PathBuf::from(rel));
        Ok(p)
    }

    /// Moves every staged file to its final place under the output directory.
    pub fn commit(self) -> CliResult<()> {
        for rel in &self.files {
            let from = self.dir.path().join(rel);
            let to = self.out.join(rel);
            if let Some(parent) = to.parent() {
                std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            std::fs::rename(&from, &to).map_err(|e| CliError::io(&to, e))?;
        }
        Ok(())
    }
}
