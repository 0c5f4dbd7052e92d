use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("numeric error at layer {layer}: {msg}")]
    Numeric { layer: usize, msg: String },

    #[error("parse error{}: {msg}", fmt_layer(.layer))]
    Parse { layer: Option<usize>, msg: String },

    /// A resource cap would be exceeded; the work was refused, not attempted.
    #[error("refused: {0}")]
    Refused(String),

    /// A pipeline stage failed after exhausting its retries.
    #[error("stage `{stage}` failed: {msg}")]
    Stage { stage: String, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn fmt_layer(layer: &Option<usize>) -> String {
    match layer {
        Some(k) => format!(" in layer {k}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn parse(layer: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Parse {
            layer,
            msg: msg.into(),
        }
    }
}
