use std::fmt;
use std::io;
use std::path::Path;

use negproj_core::error::{EngineError, GeometryError, WorldError};
use negproj_core::Error;

/// Failure of a command, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed flags, literals or documents; exit 2.
    Input(String),
    /// A referenced file does not exist; exit 3.
    Missing(String),
    /// A numerical or internal invariant broke; exit 4.
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Missing(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn io(path: &Path, e: io::Error) -> Self {
        let msg = format!("{}: {e}", path.display());
        match e.kind() {
            io::ErrorKind::NotFound => CliError::Missing(msg),
            _ => CliError::Internal(msg),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Missing(m) => write!(f, "missing resource: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

fn non_finite(e: &Error) -> bool {
    let geom = |g: &GeometryError| matches!(g, GeometryError::NonFinite(_));
    let engine = |e: &EngineError| matches!(e, EngineError::Geometry(g) if geom(g));
    match e {
        Error::Geometry(g) => geom(g),
        Error::Engine(en) => engine(en),
        Error::World(WorldError::Engine(en)) => engine(en),
        _ => false,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if non_finite(&e) {
            return CliError::Internal(e.to_string());
        }
        match e {
            Error::Io { path, source } => CliError::io(Path::new(&path), source),
            other => CliError::Input(other.to_string()),
        }
    }
}

macro_rules! input_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::from(Error::from(e))
            }
        }
    )*};
}

input_from!(
    negproj_core::compiler::CompileError,
    GeometryError,
    WorldError,
    EngineError
);
