#![allow(dead_code)]

pub mod corpus;
pub mod oracle;

use std::sync::Arc;

use secss_core::backend::Backend;
use secss_core::ela::ElaDocument;
use secss_core::playground::{self, pinned_clock};
use secss_core::rewriter::{rewrite_script, RewriteContext};
use secss_core::sql::ColumnCatalog;
use secss_core::{parse_script, RequesterIdentity, Snapshot, SqliteBackend};

pub fn snapshot(backend: &dyn Backend) -> Snapshot {
    let session = backend.begin_session(false).expect("session");
    let snap = session.snapshot().expect("snapshot");
    session.rollback().expect("rollback");
    snap
}

/// Result of running a request inside a transaction that is always rolled back.
#[derive(Debug)]
pub struct DryRun {
    /// `Ok((affected rows, state before rollback))`, or the refusal code.
    pub outcome: Result<(usize, Snapshot), String>,
    /// Whether the state after rollback equals the state before the request.
    pub restored: bool,
}

/// The gateway pipeline for an anonymous requester, ending in a rollback.
pub fn dry_run(backend: &dyn Backend, ela: &ElaDocument, sql: &str) -> DryRun {
    let before = snapshot(backend);
    let outcome = (|| {
        let script = parse_script(sql).map_err(|e| e.code().to_string())?;
        let mut session = backend
            .begin_session(true)
            .map_err(|e| e.code().to_string())?;
        let transformed = {
            let catalog: &dyn ColumnCatalog = &*session;
            let ctx = RewriteContext {
                ela,
                identity: &RequesterIdentity::Anonymous,
                default_schema: backend.default_schema(),
                catalog,
            };
            rewrite_script(&ctx, &script).map_err(|d| d.code().to_string())?
        };
        let mut affected = 0;
        for t in &transformed {
            affected += session
                .execute(t)
                .map_err(|e| e.code().to_string())?
                .affected;
        }
        let after = session.snapshot().map_err(|e| e.code().to_string())?;
        session.rollback().map_err(|e| e.code().to_string())?;
        Ok((affected, after))
    })();
    DryRun {
        outcome,
        restored: snapshot(backend) == before,
    }
}

/// The reduced schema loaded with `rows` (INSERT statements) instead of the stock seed.
pub fn simplified_with(rows: &str) -> SqliteBackend {
    let backend = SqliteBackend::in_memory(playground::SCHEMA, pinned_clock()).expect("backend");
    playground::seed_with(&backend, playground::simplified::SCHEMA_SQL, rows, false).expect("seed");
    backend
}

pub fn simplified_ela() -> ElaDocument {
    ElaDocument::parse(playground::simplified::ELA_XML.as_bytes()).expect("fixture ELA")
}

pub fn shared(backend: SqliteBackend) -> Arc<dyn Backend> {
    Arc::new(backend)
}
