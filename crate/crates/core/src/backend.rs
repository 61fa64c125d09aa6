//! Transactional execution of rewritten scripts.
//!
//! The reference adapter runs on embedded SQLite. MySQL pieces the rewriter
//! relies on are shimmed: `FROM DUAL` is elided by the SQLite dialect renderer,
//! `@variables` live in a per-session map and are bound as named parameters,
//! and the date functions are registered as scalar functions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use chrono::{Datelike, NaiveDate, NaiveDateTime, Utc};
use rusqlite::functions::{Context, FunctionFlags};
use rusqlite::types::{Value, ValueRef};
use rusqlite::Connection;
use thiserror::Error;

use crate::rewriter::TransformedScript;
use crate::sql::ast::{
    eq_ci, ColumnRef, Expr, Ident, Select, SelectItem, Show, Statement, TableRef, Update,
};
use crate::sql::render::{quote_string, render_select, render_statement};
use crate::sql::{parse_set, parse_statement, ColumnCatalog, Dialect, ParseMode, StatementKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("unknown table {0}")]
    UnknownTable(String),
    #[error("{0}")]
    Sql(String),
    #[error("cannot open backend: {0}")]
    Open(String),
}

impl BackendError {
    pub fn code(&self) -> &'static str {
        match self {
            BackendError::UnknownTable(_) => "UnknownTable",
            BackendError::Sql(_) | BackendError::Open(_) => "BackendError",
        }
    }
}

impl From<rusqlite::Error> for BackendError {
    fn from(e: rusqlite::Error) -> Self {
        let msg = e.to_string();
        match msg.strip_prefix("no such table: ") {
            Some(t) => BackendError::UnknownTable(t.to_string()),
            None => BackendError::Sql(msg),
        }
    }
}

/// Source of `NOW()`.
pub trait Clock: Send + Sync {
    fn now(&self) -> NaiveDateTime;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> NaiveDateTime {
        Utc::now().naive_utc()
    }
}

/// A clock that never moves; makes age arithmetic reproducible.
#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub NaiveDateTime);

impl Clock for FixedClock {
    fn now(&self) -> NaiveDateTime {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendCapabilities {
    pub supports_session_variables: bool,
    pub supports_dual: bool,
    pub date_functions: BTreeSet<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Cell {
    #[serde(rename = "Name")]
    pub name: String,
    #[serde(rename = "Value")]
    pub value: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResultRelation {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExecOutcome {
    pub relation: ResultRelation,
    pub affected: usize,
}

/// Every table of the schema, rows sorted; used to compare database states.
pub type Snapshot = BTreeMap<String, Vec<Vec<Option<String>>>>;

pub trait Backend: Send + Sync {
    fn default_schema(&self) -> &str;
    fn capabilities(&self) -> BackendCapabilities;
    /// Opens a transaction. `write` sessions take the write lock up front.
    fn begin_session(&self, write: bool) -> Result<Box<dyn Session + '_>, BackendError>;

    fn catalog_columns(&self, schema: &str, table: &str) -> Result<Vec<String>, BackendError> {
        let session = self.begin_session(false)?;
        let cols = session
            .columns(Some(schema), table)
            .ok_or_else(|| BackendError::UnknownTable(format!("{schema}.{table}")));
        session.rollback()?;
        cols
    }
}

/// One transaction. Dropping a session without committing rolls it back.
pub trait Session: ColumnCatalog {
    fn execute(&mut self, script: &TransformedScript) -> Result<ExecOutcome, BackendError>;
    fn snapshot(&self) -> Result<Snapshot, BackendError>;
    fn commit(self: Box<Self>) -> Result<(), BackendError>;
    fn rollback(self: Box<Self>) -> Result<(), BackendError>;
}

enum Location {
    Memory(Mutex<Connection>),
    File(PathBuf),
}

/// SQLite adapter. The data lives in a database attached under the schema name.
pub struct SqliteBackend {
    schema: String,
    location: Location,
    clock: Arc<dyn Clock>,
}

impl SqliteBackend {
    /// `memory` / `sqlite::memory:` for a private in-memory database, otherwise a
    /// file path, optionally prefixed with `sqlite:`.
    pub fn open(url: &str, schema: &str, clock: Arc<dyn Clock>) -> Result<Self, BackendError> {
        let url = url.trim();
        if url == "memory" || url == "sqlite::memory:" || url == ":memory:" {
            Self::in_memory(schema, clock)
        } else {
            let path = url.strip_prefix("sqlite:").unwrap_or(url);
            let backend = SqliteBackend {
                schema: schema.to_string(),
                location: Location::File(PathBuf::from(path)),
                clock,
            };
            let conn = backend.connect()?;
            conn.pragma_update(
                Some(rusqlite::DatabaseName::Attached(schema)),
                "journal_mode",
                "WAL",
            )
            .map_err(|e| BackendError::Open(e.to_string()))?;
            Ok(backend)
        }
    }

    pub fn in_memory(schema: &str, clock: Arc<dyn Clock>) -> Result<Self, BackendError> {
        let conn = open_connection(clock.clone())?;
        conn.execute("ATTACH DATABASE ':memory:' AS ?1", [schema])
            .map_err(|e| BackendError::Open(e.to_string()))?;
        Ok(SqliteBackend {
            schema: schema.to_string(),
            location: Location::Memory(Mutex::new(conn)),
            clock,
        })
    }

    fn connect(&self) -> Result<Connection, BackendError> {
        let Location::File(path) = &self.location else {
            unreachable!("only file backends open per-session connections")
        };
        let conn = open_connection(self.clock.clone())?;
        conn.execute(
            "ATTACH DATABASE ?1 AS ?2",
            [path.to_string_lossy().as_ref(), self.schema.as_str()],
        )
        .map_err(|e| BackendError::Open(format!("{}: {e}", path.display())))?;
        conn.busy_timeout(Duration::from_secs(5))?;
        Ok(conn)
    }

    /// Runs raw SQL outside the gateway, e.g. fixture DDL and seed data.
    pub fn execute_batch(&self, sql: &str) -> Result<(), BackendError> {
        match &self.location {
            Location::Memory(m) => lock(m).execute_batch(sql)?,
            Location::File(_) => self.connect()?.execute_batch(sql)?,
        }
        Ok(())
    }

    /// Names of the tables in the schema.
    pub fn tables(&self) -> Result<Vec<String>, BackendError> {
        let session = self.begin_session(false)?;
        let names = session.snapshot()?.into_keys().collect();
        session.rollback()?;
        Ok(names)
    }
}

fn lock(m: &Mutex<Connection>) -> MutexGuard<'_, Connection> {
    // a panic mid-request leaves the connection usable; its transaction was rolled back on drop
    m.lock().unwrap_or_else(|p| p.into_inner())
}

fn open_connection(clock: Arc<dyn Clock>) -> Result<Connection, BackendError> {
    let conn = Connection::open_in_memory().map_err(|e| BackendError::Open(e.to_string()))?;
    conn.pragma_update(None, "foreign_keys", "ON")?;
    register_shims(&conn, clock)?;
    Ok(conn)
}

impl Backend for SqliteBackend {
    fn default_schema(&self) -> &str {
        &self.schema
    }

    fn capabilities(&self) -> BackendCapabilities {
        BackendCapabilities {
            supports_session_variables: true,
            supports_dual: true,
            date_functions: ["YEAR", "FROM_DAYS", "DATEDIFF", "NOW", "DATE"].into(),
        }
    }

    fn begin_session(&self, write: bool) -> Result<Box<dyn Session + '_>, BackendError> {
        let conn = match &self.location {
            Location::Memory(m) => Conn::Shared(lock(m)),
            Location::File(_) => Conn::Owned(self.connect()?),
        };
        conn.execute_batch(if write { "BEGIN IMMEDIATE" } else { "BEGIN" })?;
        Ok(Box::new(SqliteSession {
            conn,
            schema: self.schema.clone(),
            vars: HashMap::new(),
            open: true,
        }))
    }
}

enum Conn<'a> {
    Shared(MutexGuard<'a, Connection>),
    Owned(Connection),
}

impl std::ops::Deref for Conn<'_> {
    type Target = Connection;
    fn deref(&self) -> &Connection {
        match self {
            Conn::Shared(g) => g,
            Conn::Owned(c) => c,
        }
    }
}

struct SqliteSession<'a> {
    conn: Conn<'a>,
    schema: String,
    /// Session variables, keyed by lower-cased name including the `@`.
    vars: HashMap<String, Value>,
    open: bool,
}

impl Drop for SqliteSession<'_> {
    fn drop(&mut self) {
        if self.open {
            let _ = self.conn.execute_batch("ROLLBACK");
        }
    }
}

fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

fn cell_text(v: ValueRef<'_>) -> Option<String> {
    match v {
        ValueRef::Null => None,
        ValueRef::Integer(i) => Some(i.to_string()),
        ValueRef::Real(f) => Some(f.to_string()),
        ValueRef::Text(t) => Some(String::from_utf8_lossy(t).into_owned()),
        ValueRef::Blob(b) => Some(B64.encode(b)),
    }
}

impl SqliteSession<'_> {
    fn schema_matches(&self, schema: Option<&str>) -> bool {
        schema.is_none_or(|s| eq_ci(s, &self.schema))
    }

    fn prepare_bound<'c>(&'c self, sql: &str) -> Result<rusqlite::Statement<'c>, BackendError> {
        let mut stmt = self.conn.prepare(sql)?;
        for i in 1..=stmt.parameter_count() {
            let value = stmt
                .parameter_name(i)
                .and_then(|n| self.vars.get(&n.to_lowercase()))
                .cloned()
                .unwrap_or(Value::Null);
            stmt.raw_bind_parameter(i, value)?;
        }
        Ok(stmt)
    }

    fn query(&self, sql: &str) -> Result<ResultRelation, BackendError> {
        let mut stmt = self.prepare_bound(sql)?;
        let columns: Vec<String> = stmt.column_names().into_iter().map(String::from).collect();
        let mut rows = Vec::new();
        let mut raw = stmt.raw_query();
        while let Some(row) = raw.next()? {
            let mut cells = Vec::with_capacity(columns.len());
            for (i, name) in columns.iter().enumerate() {
                cells.push(Cell {
                    name: name.clone(),
                    value: cell_text(row.get_ref(i)?),
                });
            }
            rows.push(cells);
        }
        Ok(ResultRelation { columns, rows })
    }

    fn modify(&self, sql: &str) -> Result<usize, BackendError> {
        let mut stmt = self.prepare_bound(sql)?;
        Ok(stmt.raw_execute()?)
    }

    /// Evaluates `SET @var = <expr>`. A sub-query yielding no row sets NULL;
    /// more than one row is an error, as in MySQL.
    fn assign(&mut self, text: &str) -> Result<(), BackendError> {
        let set = parse_set(text).map_err(|e| BackendError::Sql(e.to_string()))?;
        let sql = match &set.value {
            Expr::Subquery(select) => render_select(select, Dialect::Sqlite),
            other => render_select(
                &Select {
                    distinct: false,
                    projection: vec![SelectItem::Expr {
                        expr: other.clone(),
                        alias: None,
                    }],
                    from: None,
                    joins: Vec::new(),
                    selection: None,
                    group_by: Vec::new(),
                    having: None,
                    order_by: Vec::new(),
                    limit: None,
                },
                Dialect::Sqlite,
            ),
        };
        let value = {
            let mut stmt = self.prepare_bound(&sql)?;
            let mut rows = stmt.raw_query();
            match rows.next()? {
                None => Value::Null,
                Some(row) => {
                    let v: Value = row.get(0)?;
                    if rows.next()?.is_some() {
                        return Err(BackendError::Sql(format!(
                            "sub-query for {} returns more than 1 row",
                            set.variable
                        )));
                    }
                    v
                }
            }
        };
        self.vars.insert(set.variable.to_lowercase(), value);
        Ok(())
    }

    fn show(&self, show: &Show) -> Result<ResultRelation, BackendError> {
        let schema = quote_ident(&self.schema);
        match show {
            Show::Tables => self.query(&format!(
                "SELECT name AS {} FROM {schema}.sqlite_master \
                 WHERE type = 'table' AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\' ORDER BY name",
                quote_ident(&format!("Tables_in_{}", self.schema))
            )),
            Show::Databases => self.query(&format!(
                "SELECT {} AS Database",
                quote_string(&self.schema)
            )),
            Show::Columns { table } => {
                let table_schema = table.schema.as_ref().map(|s| s.value.as_str());
                if !self.schema_matches(table_schema) {
                    return Err(BackendError::UnknownTable(table.name.value.clone()));
                }
                let rel = self.query(&format!(
                    "SELECT name AS Field, type AS Type, \
                     CASE WHEN \"notnull\" = 1 OR pk > 0 THEN 'NO' ELSE 'YES' END AS \"Null\", \
                     CASE WHEN pk > 0 THEN 'PRI' ELSE '' END AS \"Key\", \
                     dflt_value AS \"Default\", '' AS Extra \
                     FROM pragma_table_info({}, {}) ORDER BY cid",
                    quote_string(&table.name.value),
                    quote_string(&self.schema)
                ))?;
                if rel.rows.is_empty() {
                    return Err(BackendError::UnknownTable(table.name.value.clone()));
                }
                Ok(rel)
            }
        }
    }
}

/// SQLite has no `UPDATE ... JOIN`; the joined form becomes a rowid filter.
fn update_sql(update: &Update) -> String {
    if update.joins.is_empty() {
        return render_statement(&Statement::Update(update.clone()), Dialect::Sqlite);
    }
    let rowid = ColumnRef::qualified(update.table.exposed_name(), "rowid");
    let matched = Select {
        distinct: false,
        projection: vec![SelectItem::Expr {
            expr: Expr::Column(rowid),
            alias: None,
        }],
        from: Some(update.table.clone()),
        joins: update.joins.clone(),
        selection: update.selection.clone(),
        group_by: Vec::new(),
        having: None,
        order_by: Vec::new(),
        limit: None,
    };
    let flat = Update {
        table: TableRef {
            alias: None,
            ..update.table.clone()
        },
        joins: Vec::new(),
        assignments: update.assignments.clone(),
        selection: Some(Expr::InSubquery {
            expr: Box::new(Expr::Column(ColumnRef {
                qualifier: Vec::new(),
                name: Ident::new("rowid"),
            })),
            negated: false,
            subquery: Box::new(matched),
        }),
    };
    render_statement(&Statement::Update(flat), Dialect::Sqlite)
}

impl ColumnCatalog for SqliteSession<'_> {
    fn columns(&self, schema: Option<&str>, table: &str) -> Option<Vec<String>> {
        if !self.schema_matches(schema) {
            return None;
        }
        let mut stmt = self
            .conn
            .prepare("SELECT name FROM pragma_table_info(?1, ?2) ORDER BY cid")
            .ok()?;
        let cols: Vec<String> = stmt
            .query_map([table, self.schema.as_str()], |r| r.get(0))
            .ok()?
            .collect::<Result<_, _>>()
            .ok()?;
        (!cols.is_empty()).then_some(cols)
    }
}

impl Session for SqliteSession<'_> {
    fn execute(&mut self, script: &TransformedScript) -> Result<ExecOutcome, BackendError> {
        for set in &script.set_statements {
            self.assign(set)?;
        }
        let stmt = parse_statement(&script.final_statement, ParseMode::Internal)
            .map_err(|e| BackendError::Sql(e.to_string()))?;
        match (&stmt, script.kind) {
            (Statement::Show(show), _) => Ok(ExecOutcome {
                relation: self.show(show)?,
                affected: 0,
            }),
            (Statement::Select(_), _) => Ok(ExecOutcome {
                relation: self.query(&render_statement(&stmt, Dialect::Sqlite))?,
                affected: 0,
            }),
            (Statement::Insert(_), StatementKind::Insert) => Ok(ExecOutcome {
                relation: ResultRelation::default(),
                affected: self.modify(&render_statement(&stmt, Dialect::Sqlite))?,
            }),
            (Statement::Update(u), StatementKind::Update) => Ok(ExecOutcome {
                relation: ResultRelation::default(),
                affected: self.modify(&update_sql(u))?,
            }),
            _ => Err(BackendError::Sql(format!(
                "final statement does not match declared kind {}",
                script.kind
            ))),
        }
    }

    fn snapshot(&self) -> Result<Snapshot, BackendError> {
        let schema = quote_ident(&self.schema);
        let tables: Vec<String> = {
            let mut stmt = self.conn.prepare(&format!(
                "SELECT name FROM {schema}.sqlite_master WHERE type = 'table' \
                 AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\' ORDER BY name"
            ))?;
            let names = stmt.query_map([], |r| r.get(0))?;
            names.collect::<Result<_, _>>()?
        };
        let mut out = Snapshot::new();
        for t in tables {
            let rel = self.query(&format!("SELECT * FROM {schema}.{}", quote_ident(&t)))?;
            let mut rows: Vec<Vec<Option<String>>> = rel
                .rows
                .into_iter()
                .map(|r| r.into_iter().map(|c| c.value).collect())
                .collect();
            rows.sort();
            out.insert(t, rows);
        }
        Ok(out)
    }

    fn commit(mut self: Box<Self>) -> Result<(), BackendError> {
        self.open = false;
        self.conn.execute_batch("COMMIT").map_err(|e| {
            let _ = self.conn.execute_batch("ROLLBACK");
            e.into()
        })
    }

    fn rollback(mut self: Box<Self>) -> Result<(), BackendError> {
        self.open = false;
        Ok(self.conn.execute_batch("ROLLBACK")?)
    }
}

fn text_arg(ctx: &Context<'_>, i: usize) -> rusqlite::Result<Option<String>> {
    Ok(match ctx.get_raw(i) {
        ValueRef::Null => None,
        v => cell_text(v),
    })
}

fn parse_day(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.get(..10)?, "%Y-%m-%d").ok()
}

/// MySQL `FROM_DAYS`: day 366 is 0001-01-01; anything earlier has no date.
pub fn from_days(n: i64) -> String {
    if n < 366 {
        return "0000-00-00".to_string();
    }
    i32::try_from(n - 365)
        .ok()
        .and_then(NaiveDate::from_num_days_from_ce_opt)
        .map(|d| format!("{:04}-{:02}-{:02}", d.year(), d.month(), d.day()))
        .unwrap_or_else(|| "0000-00-00".to_string())
}

/// MySQL `YEAR` of a `YYYY-MM-DD[...]` string; zero dates give 0.
pub fn year_of(s: &str) -> Option<i64> {
    let digits = s.split('-').next()?;
    if digits.len() != 4 || s.len() < 10 {
        return None;
    }
    digits.parse().ok()
}

/// MySQL `DATEDIFF(a, b)`: whole days from `b` to `a`, time of day ignored.
pub fn datediff(a: &str, b: &str) -> Option<i64> {
    Some((parse_day(a)? - parse_day(b)?).num_days())
}

fn register_shims(conn: &Connection, clock: Arc<dyn Clock>) -> Result<(), BackendError> {
    let pure = FunctionFlags::SQLITE_UTF8 | FunctionFlags::SQLITE_DETERMINISTIC;
    let now_clock = clock.clone();
    conn.create_scalar_function("NOW", 0, FunctionFlags::SQLITE_UTF8, move |_| {
        Ok(now_clock.now().format("%Y-%m-%d %H:%M:%S").to_string())
    })?;
    conn.create_scalar_function("CURDATE", 0, FunctionFlags::SQLITE_UTF8, move |_| {
        Ok(clock.now().format("%Y-%m-%d").to_string())
    })?;
    conn.create_scalar_function("DATEDIFF", 2, pure, |ctx| {
        Ok(match (text_arg(ctx, 0)?, text_arg(ctx, 1)?) {
            (Some(a), Some(b)) => datediff(&a, &b),
            _ => None,
        })
    })?;
    conn.create_scalar_function("FROM_DAYS", 1, pure, |ctx| {
        Ok(match ctx.get_raw(0) {
            ValueRef::Null => None,
            ValueRef::Integer(n) => Some(from_days(n)),
            ValueRef::Real(f) => Some(from_days(f as i64)),
            v => cell_text(v)
                .and_then(|s| s.trim().parse::<i64>().ok())
                .map(from_days),
        })
    })?;
    conn.create_scalar_function("YEAR", 1, pure, |ctx| {
        Ok(text_arg(ctx, 0)?.and_then(|s| year_of(&s)))
    })?;
    conn.create_scalar_function("CONCAT", -1, pure, |ctx| {
        let mut out = String::new();
        for i in 0..ctx.len() {
            match text_arg(ctx, i)? {
                Some(s) => out.push_str(&s),
                None => return Ok(None),
            }
        }
        Ok(Some(out))
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pinned() -> Arc<dyn Clock> {
        Arc::new(FixedClock(
            NaiveDate::from_ymd_opt(2012, 6, 15)
                .unwrap()
                .and_hms_opt(12, 0, 0)
                .unwrap(),
        ))
    }

    fn backend() -> SqliteBackend {
        let b = SqliteBackend::in_memory("playground", pinned()).unwrap();
        b.execute_batch(
            "CREATE TABLE playground.toys (toy TEXT PRIMARY KEY, ageLimit INTEGER);
             CREATE TABLE playground.children (name TEXT PRIMARY KEY, age INTEGER, birthday TEXT);
             CREATE TABLE playground.sandbox (name TEXT REFERENCES children(name), toy TEXT);
             INSERT INTO playground.toys VALUES ('ball', 3), ('kite', 10);
             INSERT INTO playground.children VALUES ('Loys', 5, '2010-03-02'), ('Ana', 2, '2006-06-15');",
        )
        .unwrap();
        b
    }

    fn script(kind: StatementKind, sets: &[&str], final_statement: &str) -> TransformedScript {
        TransformedScript {
            kind,
            requested_sql: String::new(),
            set_statements: sets.iter().map(|s| s.to_string()).collect(),
            final_statement: final_statement.to_string(),
            touched_tables: BTreeSet::new(),
        }
    }

    const INSERT_REWRITE: &str = "INSERT INTO sandbox (name, toy) SELECT @name, @toy FROM DUAL WHERE @toy IN (SELECT t.toy FROM toys t WHERE t.ageLimit < (SELECT c.age FROM children c WHERE c.name = @name));";

    #[test]
    fn from_days_matches_mysql() {
        assert_eq!(from_days(0), "0000-00-00");
        assert_eq!(from_days(365), "0000-00-00");
        assert_eq!(from_days(366), "0001-01-01");
        assert_eq!(from_days(730669), "2000-07-03");
        assert_eq!(from_days(733321), "2007-10-07");
    }

    #[test]
    fn shimmed_age_expression() {
        let b = backend();
        let mut s = b.begin_session(false).unwrap();
        let mut age = |birthday: &str| {
            let sql =
                format!("SELECT YEAR(FROM_DAYS(DATEDIFF(NOW(), DATE('{birthday}')))) AS age;");
            let out = s
                .execute(&script(StatementKind::Select, &[], &sql))
                .unwrap();
            out.relation.rows[0][0].value.clone().unwrap()
        };
        assert_eq!(age("2010-03-02"), "2");
        assert_eq!(age("2006-06-15"), "6");
        assert_eq!(age("2006-06-16"), "5");
        assert_eq!(age("2003-03-10"), "9");
    }

    #[test]
    fn insert_rewrite_inserts_only_when_rule_holds() {
        let b = backend();
        let mut s = b.begin_session(true).unwrap();
        let out = s
            .execute(&script(
                StatementKind::Insert,
                &["SET @name = 'Loys';", "SET @toy = 'ball';"],
                INSERT_REWRITE,
            ))
            .unwrap();
        assert_eq!(out.affected, 1);
        let out = s
            .execute(&script(
                StatementKind::Insert,
                &["SET @name = 'Ana';", "SET @toy = 'ball';"],
                INSERT_REWRITE,
            ))
            .unwrap();
        assert_eq!(out.affected, 0);
        s.commit().unwrap();
        assert_eq!(
            b.begin_session(false).unwrap().snapshot().unwrap()["sandbox"],
            vec![vec![Some("Loys".to_string()), Some("ball".to_string())]]
        );
    }

    #[test]
    fn rollback_restores_state() {
        let b = backend();
        let before = b.begin_session(false).unwrap().snapshot().unwrap();
        let mut s = b.begin_session(true).unwrap();
        s.execute(&script(
            StatementKind::Insert,
            &["SET @name = 'Loys';", "SET @toy = 'kite';"],
            "INSERT INTO sandbox (name, toy) VALUES (@name, @toy);",
        ))
        .unwrap();
        assert_ne!(s.snapshot().unwrap(), before);
        s.rollback().unwrap();
        assert_eq!(b.begin_session(false).unwrap().snapshot().unwrap(), before);
    }

    #[test]
    fn foreign_key_violation_is_an_error() {
        let b = backend();
        let mut s = b.begin_session(true).unwrap();
        let e = s
            .execute(&script(
                StatementKind::Insert,
                &["SET @name = 'Nobody';", "SET @toy = 'kite';"],
                "INSERT INTO sandbox (name, toy) VALUES (@name, @toy);",
            ))
            .unwrap_err();
        assert_eq!(e.code(), "BackendError");
        assert!(e.to_string().contains("FOREIGN KEY"), "{e}");
    }

    #[test]
    fn variables_do_not_leak_between_sessions() {
        let b = backend();
        let mut s = b.begin_session(false).unwrap();
        let r = s
            .execute(&script(
                StatementKind::Select,
                &["SET @name = 'Loys';"],
                "SELECT @name AS v;",
            ))
            .unwrap();
        assert_eq!(r.relation.rows[0][0].value.as_deref(), Some("Loys"));
        s.rollback().unwrap();
        let mut s = b.begin_session(false).unwrap();
        let r = s
            .execute(&script(StatementKind::Select, &[], "SELECT @name AS v;"))
            .unwrap();
        assert_eq!(r.relation.rows[0][0].value, None);
    }

    #[test]
    fn set_from_multi_row_subquery_fails() {
        let b = backend();
        let mut s = b.begin_session(false).unwrap();
        let e = s
            .execute(&script(
                StatementKind::Select,
                &["SET @x = (SELECT t.toy FROM toys t);"],
                "SELECT @x AS v;",
            ))
            .unwrap_err();
        assert!(e.to_string().contains("more than 1 row"));
        let r = s
            .execute(&script(
                StatementKind::Select,
                &["SET @x = (SELECT t.toy FROM toys t WHERE t.toy = 'none');"],
                "SELECT @x AS v;",
            ))
            .unwrap();
        assert_eq!(r.relation.rows[0][0].value, None);
    }

    #[test]
    fn update_with_join() {
        let b = backend();
        b.execute_batch("INSERT INTO playground.sandbox VALUES ('Loys', 'ball'), ('Ana', 'kite');")
            .unwrap();
        let mut s = b.begin_session(true).unwrap();
        let out = s
            .execute(&script(
                StatementKind::Update,
                &["SET @toy = 'doll';"],
                "UPDATE sandbox s LEFT JOIN children c ON s.name = c.name SET s.toy = @toy WHERE (c.age = 5);",
            ))
            .unwrap();
        assert_eq!(out.affected, 1);
        let snap = s.snapshot().unwrap();
        assert!(snap["sandbox"].contains(&vec![Some("Loys".into()), Some("doll".into())]));
    }

    #[test]
    fn catalog_and_show() {
        let b = backend();
        assert_eq!(
            b.catalog_columns("playground", "children").unwrap(),
            ["name", "age", "birthday"]
        );
        assert_eq!(
            b.catalog_columns("playground", "nosuch")
                .unwrap_err()
                .code(),
            "UnknownTable"
        );
        let mut s = b.begin_session(false).unwrap();
        let r = s
            .execute(&script(StatementKind::Show, &[], "SHOW TABLES;"))
            .unwrap();
        assert_eq!(r.relation.columns, ["Tables_in_playground"]);
        assert_eq!(r.relation.rows.len(), 3);
        let r = s
            .execute(&script(StatementKind::Show, &[], "SHOW COLUMNS FROM toys;"))
            .unwrap();
        assert_eq!(
            r.relation.columns,
            ["Field", "Type", "Null", "Key", "Default", "Extra"]
        );
        assert_eq!(r.relation.rows[0][3].value.as_deref(), Some("PRI"));
        let e = s
            .execute(&script(
                StatementKind::Show,
                &[],
                "SHOW COLUMNS FROM nosuch;",
            ))
            .unwrap_err();
        assert_eq!(e.code(), "UnknownTable");
    }

    #[test]
    fn concat_is_null_propagating() {
        let b = backend();
        let mut s = b.begin_session(false).unwrap();
        let r = s
            .execute(&script(
                StatementKind::Select,
                &[],
                "SELECT CONCAT('a', 1, 'b') AS x, CONCAT('a', NULL) AS y;",
            ))
            .unwrap();
        assert_eq!(r.relation.rows[0][0].value.as_deref(), Some("a1b"));
        assert_eq!(r.relation.rows[0][1].value, None);
    }

    #[test]
    fn file_backend_persists_between_sessions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pg.db");
        let url = format!("sqlite:{}", path.display());
        let b = SqliteBackend::open(&url, "playground", pinned()).unwrap();
        b.execute_batch("CREATE TABLE playground.t (a INTEGER);")
            .unwrap();
        let mut s = b.begin_session(true).unwrap();
        s.execute(&script(
            StatementKind::Insert,
            &["SET @a = 7;"],
            "INSERT INTO t (a) VALUES (@a);",
        ))
        .unwrap();
        s.commit().unwrap();
        let again = SqliteBackend::open(&url, "playground", pinned()).unwrap();
        assert_eq!(
            again.begin_session(false).unwrap().snapshot().unwrap()["t"],
            vec![vec![Some("7".to_string())]]
        );
    }
}
