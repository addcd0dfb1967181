use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] radpair_core::Error),

    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("could not parse configuration: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(
        "refusing master-equation run: dimension {dim} exceeds the cap {cap} \
         (about {estimated_bytes} bytes per density matrix, {estimated_flops:.1e} flops per \
         right-hand side); raise run.me_dim_cap to override"
    )]
    DimensionCap {
        dim: usize,
        cap: usize,
        estimated_bytes: u128,
        estimated_flops: f64,
    },

    #[error("trajectory {index} failed: {source}")]
    Worker {
        index: u64,
        #[source]
        source: radpair_core::Error,
    },

    #[error("{0}")]
    Other(String),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
