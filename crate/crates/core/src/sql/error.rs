use thiserror::Error;

/// Rejection of requester SQL. `statement` is the zero-based statement index; messages print it one-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SqlError {
    #[error("request contains no SQL statement")]
    Empty,
    #[error("statement {}: {message} (at `{token}`)", statement + 1)]
    Syntax {
        statement: usize,
        token: String,
        offset: usize,
        message: String,
    },
    #[error("statement {}: {message} (at `{token}`)", statement + 1)]
    Unsupported {
        statement: usize,
        token: String,
        offset: usize,
        message: String,
    },
    #[error("statement {}: session variable {token} is reserved for the gateway", statement + 1)]
    ReservedVariable {
        statement: usize,
        token: String,
        offset: usize,
    },
}

impl SqlError {
    pub fn code(&self) -> &'static str {
        match self {
            SqlError::Empty | SqlError::Syntax { .. } => "SyntaxError",
            SqlError::Unsupported { .. } => "UnsupportedStatement",
            SqlError::ReservedVariable { .. } => "ReservedVariable",
        }
    }

    pub fn statement_index(&self) -> Option<usize> {
        match self {
            SqlError::Empty => None,
            SqlError::Syntax { statement, .. }
            | SqlError::Unsupported { statement, .. }
            | SqlError::ReservedVariable { statement, .. } => Some(*statement),
        }
    }

    pub fn token(&self) -> Option<&str> {
        match self {
            SqlError::Empty => None,
            SqlError::Syntax { token, .. }
            | SqlError::Unsupported { token, .. }
            | SqlError::ReservedVariable { token, .. } => Some(token),
        }
    }
}
