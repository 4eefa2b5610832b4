use std::time::Duration;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, TransportError>;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("request to {url} timed out after {timeout:?}")]
    Timeout { url: String, timeout: Duration },

    #[error("cannot connect to {url}: {msg}")]
    Connect { url: String, msg: String },

    #[error("{url} answered {status}: {message}")]
    Status {
        url: String,
        status: u16,
        message: String,
    },

    #[error("request body of {size} bytes exceeds the {limit}-byte limit")]
    BodyTooLarge { size: usize, limit: usize },

    #[error("cannot decode response from {url}: {msg}")]
    Decode { url: String, msg: String },

    #[error("http error talking to {url}: {msg}")]
    Http { url: String, msg: String },

    #[error("invalid address {0:?}")]
    Address(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] prunesearch_core::Error),
}

impl TransportError {
    pub fn status(&self) -> Option<u16> {
        match self {
            Self::Status { status, .. } => Some(*status),
            _ => None,
        }
    }

    pub(crate) fn from_ureq(url: &str, timeout: Duration, e: ureq::Error) -> Self {
        let url = url.to_string();
        match e {
            ureq::Error::Timeout(_) => Self::Timeout { url, timeout },
            ureq::Error::ConnectionFailed | ureq::Error::HostNotFound => Self::Connect {
                url,
                msg: e.to_string(),
            },
            ureq::Error::Io(io) if is_connect_error(&io) => Self::Connect {
                url,
                msg: io.to_string(),
            },
            ureq::Error::StatusCode(status) => Self::Status {
                url,
                status,
                message: String::new(),
            },
            other => Self::Http {
                url,
                msg: other.to_string(),
            },
        }
    }
}

fn is_connect_error(e: &std::io::Error) -> bool {
    use std::io::ErrorKind::*;
    matches!(
        e.kind(),
        ConnectionRefused | ConnectionReset | ConnectionAborted | NotConnected | AddrNotAvailable
    )
}

impl From<TransportError> for prunesearch_core::Error {
    fn from(e: TransportError) -> Self {
        match e {
            TransportError::Core(inner) => inner,
            other => prunesearch_core::Error::Backend(other.to_string()),
        }
    }
}
