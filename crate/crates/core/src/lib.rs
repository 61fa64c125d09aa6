//! Policy-enforcing SQL gateway core.
//!
//! Requests carry SQL plus an optional detached PKCS#7 signature. The gateway
//! verifies the signer, checks every touched field against the rule document
//! (the ELA), rewrites the statement so that attached restrictions become
//! sub-query filters, and runs the result in one transaction.

pub mod backend;
pub mod ela;
pub mod gateway;
pub mod identity;
pub mod playground;
pub mod rewriter;
pub mod sql;

pub use backend::{
    Backend, BackendError, Cell, Clock, FixedClock, ResultRelation, Session, Snapshot,
    SqliteBackend, SystemClock,
};
pub use ela::{ElaDocument, ElaError, ElaWarning, LoadedEla};
pub use gateway::{Gateway, ResponseEnvelope, StatementResult};
pub use identity::{IdentityError, RequesterIdentity, SignedRequest, Signer, TrustStore};
pub use rewriter::{Denial, DenialReason, RewriteContext, TransformedScript};
pub use sql::{parse_script, SqlError, SqlScript, StatementKind};
