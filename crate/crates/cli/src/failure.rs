use std::fmt;

use serde::Serialize;

/// Error categories reported in the JSON error object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Usage,
    Io,
    Parse,
    Config,
    InvalidInput,
    Compute,
}

/// A command failure; printed to stderr as `{"error": {"kind": ..., "message": ...}}`.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

impl Failure {
    pub fn new(kind: Kind, message: impl Into<String>) -> Failure {
        Failure {
            kind,
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            Kind::Usage => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

impl From<fermat_core::Error> for Failure {
    fn from(e: fermat_core::Error) -> Failure {
        use fermat_core::Error as E;
        let kind = match e {
            E::InvalidParameter(_) => Kind::Config,
            E::VertexOutOfRange { .. }
            | E::SelfLoop(_)
            | E::DimensionMismatch { .. }
            | E::Asymmetric { .. }
            | E::Cyclic
            | E::ConstantColumn(_)
            | E::InvalidData(_)
            | E::TooLarge { .. } => Kind::InvalidInput,
            _ => Kind::Compute,
        };
        Failure::new(kind, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Failure {
        Failure::new(Kind::Config, e.to_string())
    }
}
