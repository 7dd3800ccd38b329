use std::fmt;

/// Errors produced anywhere in the toolkit.
///
/// The variants line up with the categories a caller needs to react to
/// differently: malformed input, an effect that the available data cannot
/// identify, numerical breakdown, and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("not identifiable: no valid intervention witness for treatments {missing:?}{}", detail_suffix(.detail))]
    Identifiability { missing: Vec<usize>, detail: String },

    #[error("singular fit for {target}: rank-deficient features {features:?}")]
    SingularFit { target: String, features: Vec<String> },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
}

fn detail_suffix(detail: &str) -> String {
    if detail.is_empty() {
        String::new()
    } else {
        format!(" ({detail})")
    }
}

impl Error {
    pub fn usage(msg: impl fmt::Display) -> Self {
        Error::Usage(msg.to_string())
    }

    pub fn graph(msg: impl fmt::Display) -> Self {
        Error::Graph(msg.to_string())
    }

    pub fn numerical(msg: impl fmt::Display) -> Self {
        Error::Numerical(msg.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
