//! The sandbox playground as executable fixtures.

use std::sync::Arc;

use chrono::{NaiveDate, NaiveDateTime};
use serde::Deserialize;
use thiserror::Error;

use crate::backend::{Backend, BackendError, Clock, FixedClock, SqliteBackend};
use crate::ela::{ElaError, LoadedEla};
use crate::gateway::{Gateway, ResponseEnvelope};
use crate::identity::{SignedRequest, TrustStore};

pub const SCHEMA: &str = "playground";
pub const SCHEMA_SQL: &str = include_str!("../fixtures/playground/schema.sql");
pub const SEED_SQL: &str = include_str!("../fixtures/playground/seed.sql");
pub const ELA_XML: &str = include_str!("../fixtures/playground/ela.xml");
pub const SCENARIO_JSON: &str = include_str!("../fixtures/playground/scenario.json");

/// Birthdays in the seed data; no response may ever contain one.
pub const BIRTHDAYS: [&str; 3] = ["2010-03-02", "2006-06-15", "2003-03-10"];

/// The reduced schema of the worked rewriting examples (`sandbox(name, toy)`, `toys(toy, ageLimit)`).
pub mod simplified {
    pub const SCHEMA_SQL: &str = include_str!("../fixtures/simplified/schema.sql");
    pub const SEED_SQL: &str = include_str!("../fixtures/simplified/seed.sql");
    pub const ELA_XML: &str = include_str!("../fixtures/simplified/ela.xml");
}

/// 2012-06-15 12:00:00, the day Ana turns six.
pub fn pinned_now() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2012, 6, 15)
        .and_then(|d| d.and_hms_opt(12, 0, 0))
        .expect("valid date")
}

pub fn pinned_clock() -> Arc<dyn Clock> {
    Arc::new(FixedClock(pinned_now()))
}

#[derive(Debug, Error)]
pub enum SeedError {
    #[error("schema already holds tables ({}); use --force to replace them", .0.join(", "))]
    AlreadySeeded(Vec<String>),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Creates the given schema and rows; refuses to touch a non-empty schema unless `force`.
pub fn seed_with(
    backend: &SqliteBackend,
    schema_sql: &str,
    seed_sql: &str,
    force: bool,
) -> Result<(), SeedError> {
    let existing = backend.tables()?;
    let mut batch = String::from("PRAGMA foreign_keys = OFF;\nBEGIN;\n");
    if !existing.is_empty() {
        if !force {
            return Err(SeedError::AlreadySeeded(existing));
        }
        for t in &existing {
            batch.push_str(&format!(
                "DROP TABLE \"{}\".\"{}\";\n",
                backend.default_schema(),
                t.replace('"', "\"\"")
            ));
        }
    }
    batch.push_str(schema_sql);
    batch.push_str(seed_sql);
    batch.push_str("\nCOMMIT;\nPRAGMA foreign_keys = ON;\n");
    backend.execute_batch(&batch)?;
    Ok(())
}

pub fn seed(backend: &SqliteBackend, force: bool) -> Result<(), SeedError> {
    seed_with(backend, SCHEMA_SQL, SEED_SQL, force)
}

/// A fresh in-memory playground.
pub fn seeded_backend(clock: Arc<dyn Clock>) -> Result<SqliteBackend, SeedError> {
    let backend = SqliteBackend::in_memory(SCHEMA, clock)?;
    seed(&backend, false)?;
    Ok(backend)
}

pub fn simplified_backend(clock: Arc<dyn Clock>) -> Result<SqliteBackend, SeedError> {
    let backend = SqliteBackend::in_memory(SCHEMA, clock)?;
    seed_with(
        &backend,
        simplified::SCHEMA_SQL,
        simplified::SEED_SQL,
        false,
    )?;
    Ok(backend)
}

pub fn playground_ela() -> Result<LoadedEla, ElaError> {
    LoadedEla::from_bytes(ELA_XML.as_bytes().to_vec())
}

/// Gateway over a fresh playground with an empty trust store (anonymous requests only).
pub fn playground_gateway(clock: Arc<dyn Clock>) -> Gateway {
    let backend = seeded_backend(clock).expect("fixture schema loads");
    let ela = playground_ela().expect("fixture ELA is valid");
    Gateway::new(ela, TrustStore::default(), Arc::new(backend))
}

pub fn simplified_gateway(clock: Arc<dyn Clock>) -> Gateway {
    let backend = simplified_backend(clock).expect("fixture schema loads");
    let ela = LoadedEla::from_bytes(simplified::ELA_XML.as_bytes().to_vec())
        .expect("fixture ELA is valid");
    Gateway::new(ela, TrustStore::default(), Arc::new(backend))
}

#[derive(Debug, Clone, Deserialize)]
pub struct Expectation {
    pub ok: bool,
    #[serde(default)]
    pub code: Option<String>,
    #[serde(default)]
    pub affected: Option<usize>,
    #[serde(default)]
    pub rows: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ScenarioStep {
    pub rule: u8,
    pub name: String,
    #[serde(rename = "SQL")]
    pub sql: String,
    pub expect: Expectation,
}

impl ScenarioStep {
    /// Whether the step expects the request to take effect.
    pub fn is_allow(&self) -> bool {
        self.expect.ok && self.expect.affected != Some(0)
    }
}

pub fn scenario_steps() -> Vec<ScenarioStep> {
    serde_json::from_str(SCENARIO_JSON).expect("scenario fixture is valid JSON")
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub step: ScenarioStep,
    pub envelope: ResponseEnvelope,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct ScenarioReport {
    pub outcomes: Vec<StepOutcome>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.failures.is_empty())
    }

    /// Rules lacking an allow case or a deny case.
    pub fn uncovered_rules(&self) -> Vec<u8> {
        (1..=6)
            .filter(|r| {
                let steps: Vec<_> = self.outcomes.iter().filter(|o| o.step.rule == *r).collect();
                !(steps.iter().any(|o| o.step.is_allow())
                    && steps.iter().any(|o| !o.step.is_allow()))
            })
            .collect()
    }

    pub fn failures(&self) -> Vec<String> {
        self.outcomes
            .iter()
            .flat_map(|o| {
                o.failures
                    .iter()
                    .map(move |f| format!("rule {} / {}: {f}", o.step.rule, o.step.name))
            })
            .collect()
    }
}

fn check(step: &ScenarioStep, env: &ResponseEnvelope) -> Vec<String> {
    let mut failures = Vec::new();
    let e = &step.expect;
    if env.ok != e.ok {
        failures.push(format!(
            "expected OK={}, got {} ({})",
            e.ok, env.ok, env.feedback
        ));
    }
    if let Some(code) = &e.code {
        if env.feedback_code() != code {
            failures.push(format!("expected {code}, got {}", env.feedback));
        }
    }
    if let Some(n) = e.affected {
        if env.affected_rows() != Some(n) {
            failures.push(format!("expected {n} affected rows, got {}", env.feedback));
        }
    }
    if let Some(n) = e.rows {
        let got = env.results.last().map_or(0, |r| r.rows.len());
        if got != n {
            failures.push(format!("expected {n} rows, got {got}"));
        }
    }
    let json = serde_json::to_string(env).unwrap_or_default();
    for b in BIRTHDAYS {
        if json.contains(b) {
            failures.push(format!("response reveals birthday {b}"));
        }
    }
    failures
}

/// Runs the scenario steps in order against `gateway`, anonymously.
pub fn run_scenario(gateway: &Gateway, steps: &[ScenarioStep]) -> ScenarioReport {
    let outcomes = steps
        .iter()
        .map(|step| {
            let envelope = gateway.handle_request(&SignedRequest::anonymous(&step.sql));
            StepOutcome {
                failures: check(step, &envelope),
                step: step.clone(),
                envelope,
            }
        })
        .collect();
    ScenarioReport { outcomes }
}
