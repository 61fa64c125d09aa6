//! HTTP/JSON front door: verify, parse, authorize and rewrite, execute.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::{Backend, Cell};
use crate::ela::LoadedEla;
use crate::identity::{verify, RequesterIdentity, SignedRequest, Signer, TrustStore};
use crate::rewriter::{rewrite_script, RewriteContext};
use crate::sql::{parse_script, ColumnCatalog};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementResult {
    #[serde(rename = "ExecutedSQL")]
    pub executed_sql: String,
    #[serde(rename = "RequestedSQL")]
    pub requested_sql: String,
    /// One entry per row, each a list of cells in column order.
    #[serde(rename = "Rows")]
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseEnvelope {
    #[serde(rename = "Results")]
    pub results: Vec<StatementResult>,
    #[serde(rename = "Feedback")]
    pub feedback: String,
    #[serde(rename = "GenerationDate")]
    pub generation_date: String,
    #[serde(rename = "OK")]
    pub ok: bool,
}

impl ResponseEnvelope {
    fn failure(code: &str, detail: impl std::fmt::Display) -> Self {
        ResponseEnvelope {
            results: Vec::new(),
            feedback: format!("{code}: {detail}"),
            generation_date: generation_date(),
            ok: false,
        }
    }

    /// The machine-readable code at the start of `Feedback`.
    pub fn feedback_code(&self) -> &str {
        self.feedback.split(':').next().unwrap_or("")
    }

    /// Rows changed by a successful request, as reported in `Feedback`.
    pub fn affected_rows(&self) -> Option<usize> {
        if !self.ok {
            return None;
        }
        let (_, tail) = self.feedback.rsplit_once(", ")?;
        tail.split(' ').next()?.parse().ok()
    }
}

fn generation_date() -> String {
    chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

fn plural(n: usize, one: &str, many: &str) -> String {
    format!("{n} {}", if n == 1 { one } else { many })
}

/// Shared, immutable request-handling state.
pub struct Gateway {
    ela: LoadedEla,
    trust: TrustStore,
    backend: Arc<dyn Backend>,
    etag: String,
    dev_signer: Option<Signer>,
}

impl Gateway {
    pub fn new(ela: LoadedEla, trust: TrustStore, backend: Arc<dyn Backend>) -> Self {
        let etag = format!("\"{}\"", hex(&Sha256::digest(&ela.bytes)));
        Gateway {
            ela,
            trust,
            backend,
            etag,
            dev_signer: None,
        }
    }

    /// Enables `POST /dev/sign`. The signer's certificate is trusted from here on.
    pub fn with_dev_signer(mut self, signer: Signer) -> Self {
        self.trust.add(signer.certificate().clone());
        self.dev_signer = Some(signer);
        self
    }

    pub fn ela(&self) -> &LoadedEla {
        &self.ela
    }

    pub fn ela_bytes(&self) -> &[u8] {
        &self.ela.bytes
    }

    pub fn etag(&self) -> &str {
        &self.etag
    }

    pub fn backend(&self) -> &Arc<dyn Backend> {
        &self.backend
    }

    pub fn dev_signer(&self) -> Option<&Signer> {
        self.dev_signer.as_ref()
    }

    /// Decodes a request body; `Err` means the body is not a request at all.
    pub fn handle_body(&self, body: &[u8]) -> Result<ResponseEnvelope, ResponseEnvelope> {
        match serde_json::from_slice::<SignedRequest>(body) {
            Ok(req) => Ok(self.handle_request(&req)),
            Err(e) => Err(ResponseEnvelope::failure("MalformedRequest", e)),
        }
    }

    pub fn handle_request(&self, req: &SignedRequest) -> ResponseEnvelope {
        let identity = match verify(req, &self.trust) {
            Ok(id) => id,
            Err(e) => return ResponseEnvelope::failure(e.code(), e),
        };
        let envelope = self.run(&identity, &req.sql);
        tracing::info!(
            requester = %identity,
            ok = envelope.ok,
            feedback = %envelope.feedback,
            "request handled"
        );
        envelope
    }

    fn run(&self, identity: &RequesterIdentity, sql: &str) -> ResponseEnvelope {
        let script = match parse_script(sql) {
            Ok(s) => s,
            Err(e) => return ResponseEnvelope::failure(e.code(), e),
        };
        let write = script.statements.iter().any(|s| s.kind.is_write());
        let mut session = match self.backend.begin_session(write) {
            Ok(s) => s,
            Err(e) => return ResponseEnvelope::failure(e.code(), e),
        };
        let transformed = {
            let catalog: &dyn ColumnCatalog = &*session;
            let ctx = RewriteContext {
                ela: &self.ela.document,
                identity,
                default_schema: self.backend.default_schema(),
                catalog,
            };
            rewrite_script(&ctx, &script)
        };
        let transformed = match transformed {
            Ok(t) => t,
            Err(denial) => {
                let _ = session.rollback();
                return ResponseEnvelope::failure(denial.code(), denial);
            }
        };

        let mut results = Vec::with_capacity(transformed.len());
        let mut affected = 0;
        for (i, t) in transformed.iter().enumerate() {
            match session.execute(t) {
                Ok(out) => {
                    affected += out.affected;
                    results.push(StatementResult {
                        executed_sql: t.executed_sql(),
                        requested_sql: t.requested_sql.clone(),
                        rows: out.relation.rows,
                    });
                }
                Err(e) => {
                    let _ = session.rollback();
                    return ResponseEnvelope::failure(
                        e.code(),
                        format!("statement {}: {e}", i + 1),
                    );
                }
            }
        }
        if let Err(e) = session.commit() {
            return ResponseEnvelope::failure(e.code(), e);
        }
        ResponseEnvelope {
            feedback: format!(
                "OK: {} executed, {} affected",
                plural(results.len(), "statement", "statements"),
                plural(affected, "row", "rows")
            ),
            results,
            generation_date: generation_date(),
            ok: true,
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Body of `POST /dev/sign`.
#[derive(Debug, Deserialize)]
pub struct SignInput {
    #[serde(rename = "SQL")]
    pub sql: String,
    #[serde(rename = "Comment", default)]
    pub comment: Option<String>,
}

pub fn router(gateway: Arc<Gateway>) -> Router {
    let mut router = Router::new()
        .route("/query", post(query))
        .route("/ela", get(ela))
        .route("/health", get(|| async { "ok" }));
    if gateway.dev_signer.is_some() {
        router = router.route("/dev/sign", post(dev_sign));
    }
    router.with_state(gateway)
}

async fn query(State(gw): State<Arc<Gateway>>, body: Bytes) -> Response {
    let outcome = tokio::task::spawn_blocking(move || gw.handle_body(&body)).await;
    match outcome {
        Ok(Ok(envelope)) => Json(envelope).into_response(),
        Ok(Err(envelope)) => (StatusCode::BAD_REQUEST, Json(envelope)).into_response(),
        Err(e) => (
            StatusCode::INTERNAL_SERVER_ERROR,
            Json(ResponseEnvelope::failure("InternalError", e)),
        )
            .into_response(),
    }
}

async fn ela(State(gw): State<Arc<Gateway>>, headers: HeaderMap) -> Response {
    let etag = HeaderValue::from_str(gw.etag()).expect("hex etag is a valid header");
    let matches = headers
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| {
            v.split(',')
                .any(|t| t.trim() == gw.etag() || t.trim() == "*")
        });
    if matches {
        return (StatusCode::NOT_MODIFIED, [(header::ETAG, etag)]).into_response();
    }
    (
        [
            (
                header::CONTENT_TYPE,
                HeaderValue::from_static("application/xml"),
            ),
            (header::ETAG, etag),
        ],
        gw.ela_bytes().to_vec(),
    )
        .into_response()
}

async fn dev_sign(State(gw): State<Arc<Gateway>>, body: Bytes) -> Response {
    let input: SignInput = match serde_json::from_slice(&body) {
        Ok(i) => i,
        Err(e) => return (StatusCode::BAD_REQUEST, e.to_string()).into_response(),
    };
    let signer = gw
        .dev_signer
        .as_ref()
        .expect("route registered only with a signer");
    match signer.sign_request(&input.sql, input.comment) {
        Ok(req) => Json(req).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

/// Serves until the listener fails or the process stops.
pub async fn serve(
    listener: tokio::net::TcpListener,
    gateway: Arc<Gateway>,
) -> std::io::Result<()> {
    axum::serve(listener, router(gateway)).await
}
