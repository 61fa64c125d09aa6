use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use super::ast::*;
use super::render::{render_expr, render_joins, render_select, Dialect};

/// A column of a table. Names keep their written spelling; equality, ordering and hashing ignore case.
#[derive(Debug, Clone)]
pub struct FieldRef {
    pub schema: Option<String>,
    pub table: String,
    pub field: String,
}

impl FieldRef {
    pub fn new(schema: Option<&str>, table: &str, field: &str) -> Self {
        FieldRef {
            schema: schema.map(str::to_string),
            table: table.to_string(),
            field: field.to_string(),
        }
    }

    fn key(&self) -> (Option<String>, String, String) {
        (
            self.schema.as_ref().map(|s| s.to_lowercase()),
            self.table.to_lowercase(),
            self.field.to_lowercase(),
        )
    }

    /// Fills in the schema when the statement did not name one.
    pub fn with_default_schema(&self, schema: &str) -> FieldRef {
        FieldRef {
            schema: Some(self.schema.clone().unwrap_or_else(|| schema.to_string())),
            ..self.clone()
        }
    }
}

impl PartialEq for FieldRef {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for FieldRef {}

impl Hash for FieldRef {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

impl PartialOrd for FieldRef {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FieldRef {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for FieldRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(s) = &self.schema {
            write!(f, "{s}.")?;
        }
        write!(f, "{}.{}", self.table, self.field)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiteralKind {
    String,
    Number,
    Null,
}

/// Value assigned to a column by INSERT or UPDATE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueExpr {
    Literal {
        text: String,
        kind: LiteralKind,
    },
    /// Canonical text of a scalar sub-query, without the surrounding parentheses.
    Subquery(String),
    /// Only in gateway-generated statements.
    Variable(String),
}

impl ValueExpr {
    pub fn from_expr(expr: &Expr) -> Option<ValueExpr> {
        match expr {
            Expr::Literal(Literal::String(s)) => Some(ValueExpr::Literal {
                text: s.clone(),
                kind: LiteralKind::String,
            }),
            Expr::Literal(Literal::Number(n)) => Some(ValueExpr::Literal {
                text: n.clone(),
                kind: LiteralKind::Number,
            }),
            Expr::Literal(Literal::Null) => Some(ValueExpr::Literal {
                text: "NULL".into(),
                kind: LiteralKind::Null,
            }),
            Expr::Unary {
                op: op @ (UnaryOp::Minus | UnaryOp::Plus),
                expr,
            } => match expr.as_ref() {
                Expr::Literal(Literal::Number(n)) => Some(ValueExpr::Literal {
                    text: if *op == UnaryOp::Minus {
                        format!("-{n}")
                    } else {
                        n.clone()
                    },
                    kind: LiteralKind::Number,
                }),
                _ => None,
            },
            Expr::Subquery(s) => Some(ValueExpr::Subquery(render_select(s, Dialect::Canonical))),
            Expr::Variable(v) => Some(ValueExpr::Variable(v.clone())),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Projection {
    Star { qualifier: Option<String> },
    Field(FieldRef),
    Expr { text: String, fields: Vec<FieldRef> },
}

/// Column lists for tables, used to resolve unqualified columns and expand `*`.
pub trait ColumnCatalog {
    /// `None` when the table is unknown.
    fn columns(&self, schema: Option<&str>, table: &str) -> Option<Vec<String>>;
}

/// Resolves nothing: unqualified columns go to the first table in scope and `*` stays unexpanded.
pub struct NoCatalog;

impl ColumnCatalog for NoCatalog {
    fn columns(&self, _schema: Option<&str>, _table: &str) -> Option<Vec<String>> {
        None
    }
}

impl<F> ColumnCatalog for F
where
    F: Fn(Option<&str>, &str) -> Option<Vec<String>>,
{
    fn columns(&self, schema: Option<&str>, table: &str) -> Option<Vec<String>> {
        self(schema, table)
    }
}

/// One parsed statement plus the structural facts authorization needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementAnalysis {
    pub kind: StatementKind,
    pub statement: Statement,
    pub target_tables: Vec<TableRef>,
    /// Every field read or written, in order of first appearance.
    pub accessed_fields: Vec<FieldRef>,
    /// Fields whose values the statement reads (projection, predicates, sub-queries).
    pub read_fields: Vec<FieldRef>,
    /// Fields the statement writes (INSERT columns, UPDATE targets).
    pub written_fields: Vec<FieldRef>,
    pub assignments: Vec<(FieldRef, ValueExpr)>,
    pub where_text: Option<String>,
    pub join_text: Option<String>,
    pub projection: Option<Vec<Projection>>,
    /// Tables whose `*` could not be expanded for lack of a catalog entry.
    pub unexpanded_stars: Vec<TableRef>,
}

fn push_unique(list: &mut Vec<FieldRef>, f: FieldRef) {
    if !list.contains(&f) {
        list.push(f);
    }
}

struct Collector<'c> {
    catalog: &'c dyn ColumnCatalog,
    reads: Vec<FieldRef>,
    unexpanded: Vec<TableRef>,
}

fn field_of(table: &TableRef, column: &str) -> FieldRef {
    FieldRef::new(
        table.schema.as_ref().map(|s| s.value.as_str()),
        &table.name.value,
        column,
    )
}

fn find_table<'a>(scopes: &[Vec<&'a TableRef>], qualifier: &Ident) -> Option<&'a TableRef> {
    for scope in scopes.iter().rev() {
        if let Some(t) = scope.iter().find(|t| {
            t.alias
                .as_ref()
                .is_some_and(|a| a.matches(&qualifier.value))
        }) {
            return Some(t);
        }
        if let Some(t) = scope
            .iter()
            .find(|t| t.alias.is_none() && t.name.matches(&qualifier.value))
        {
            return Some(t);
        }
    }
    None
}

impl<'c> Collector<'c> {
    fn table_columns(&self, t: &TableRef) -> Option<Vec<String>> {
        self.catalog
            .columns(t.schema.as_ref().map(|s| s.value.as_str()), &t.name.value)
    }

    /// Fields a column reference may denote. Ambiguous unqualified names resolve to every candidate.
    fn resolve(&self, col: &ColumnRef, scopes: &[Vec<&TableRef>]) -> Vec<FieldRef> {
        match col.qualifier.len() {
            2 => vec![FieldRef::new(
                Some(&col.qualifier[0].value),
                &col.qualifier[1].value,
                &col.name.value,
            )],
            1 => match find_table(scopes, &col.qualifier[0]) {
                Some(t) => vec![field_of(t, &col.name.value)],
                None => vec![FieldRef::new(
                    None,
                    &col.qualifier[0].value,
                    &col.name.value,
                )],
            },
            _ => {
                for scope in scopes.iter().rev() {
                    let mut candidates = Vec::new();
                    for t in scope {
                        match self.table_columns(t) {
                            Some(cols) if cols.iter().any(|c| col.name.matches(c)) => {
                                candidates.push(field_of(t, &col.name.value))
                            }
                            Some(_) => {}
                            None => candidates.push(field_of(t, &col.name.value)),
                        }
                    }
                    let all_unknown = scope.iter().all(|t| self.table_columns(t).is_none());
                    if !candidates.is_empty() {
                        if all_unknown {
                            // no catalog: attribute to the first table in scope
                            return candidates.into_iter().take(1).collect();
                        }
                        return candidates;
                    }
                }
                match scopes.iter().rev().find_map(|s| s.first()) {
                    Some(t) => vec![field_of(t, &col.name.value)],
                    None => vec![FieldRef::new(None, "", &col.name.value)],
                }
            }
        }
    }

    fn star(&mut self, tables: &[&TableRef], out: &mut Vec<FieldRef>) {
        for t in tables {
            match self.table_columns(t) {
                Some(cols) => {
                    for c in cols {
                        let f = field_of(t, &c);
                        push_unique(out, f);
                    }
                }
                None => {
                    if !self.unexpanded.contains(t) {
                        self.unexpanded.push((*t).clone());
                    }
                }
            }
        }
    }

    fn expr(&mut self, e: &Expr, scopes: &[Vec<&TableRef>], aliases: &[&Ident]) {
        let mut cols: Vec<&ColumnRef> = Vec::new();
        let mut star_fn = false;
        e.walk(&mut |x| match x {
            Expr::Column(c) => cols.push(c),
            Expr::Function {
                args: FunctionArgs::Star,
                ..
            } => star_fn = true,
            _ => {}
        });
        for c in cols {
            if c.qualifier.is_empty() && aliases.iter().any(|a| a.matches(&c.name.value)) {
                continue;
            }
            for f in self.resolve(c, scopes) {
                push_unique(&mut self.reads, f);
            }
        }
        if star_fn {
            // COUNT(*) and friends observe every column of the rows they count
            if let Some(scope) = scopes.last() {
                let scope = scope.clone();
                let mut fields = Vec::new();
                self.star(&scope, &mut fields);
                for f in fields {
                    push_unique(&mut self.reads, f);
                }
            }
        }
        for sub in e.subqueries() {
            self.select(sub, scopes);
        }
    }

    fn select(&mut self, s: &Select, outer: &[Vec<&TableRef>]) -> Vec<Projection> {
        let mut scopes: Vec<Vec<&TableRef>> = outer.to_vec();
        scopes.push(s.scope());
        let aliases: Vec<&Ident> = s
            .projection
            .iter()
            .filter_map(|p| match p {
                SelectItem::Expr { alias, .. } => alias.as_ref(),
                _ => None,
            })
            .collect();

        let mut projection = Vec::new();
        for item in &s.projection {
            match item {
                SelectItem::Wildcard => {
                    let scope = scopes.last().cloned().unwrap_or_default();
                    let mut fields = Vec::new();
                    self.star(&scope, &mut fields);
                    for f in fields {
                        push_unique(&mut self.reads, f);
                    }
                    projection.push(Projection::Star { qualifier: None });
                }
                SelectItem::QualifiedWildcard(q) => {
                    match find_table(&scopes, q) {
                        Some(t) => {
                            let mut fields = Vec::new();
                            self.star(&[t], &mut fields);
                            for f in fields {
                                push_unique(&mut self.reads, f);
                            }
                        }
                        None => {
                            let t = TableRef::named(&q.value);
                            if !self.unexpanded.contains(&t) {
                                self.unexpanded.push(t);
                            }
                        }
                    }
                    projection.push(Projection::Star {
                        qualifier: Some(q.value.clone()),
                    });
                }
                SelectItem::Expr { expr, .. } => {
                    let mut local = Collector {
                        catalog: self.catalog,
                        reads: Vec::new(),
                        unexpanded: Vec::new(),
                    };
                    local.expr(expr, &scopes, &[]);
                    for t in local.unexpanded {
                        if !self.unexpanded.contains(&t) {
                            self.unexpanded.push(t);
                        }
                    }
                    for f in &local.reads {
                        push_unique(&mut self.reads, f.clone());
                    }
                    match expr {
                        Expr::Column(_) if local.reads.len() == 1 => {
                            projection.push(Projection::Field(local.reads[0].clone()))
                        }
                        _ => projection.push(Projection::Expr {
                            text: render_expr(expr, Dialect::Canonical),
                            fields: local.reads,
                        }),
                    }
                }
            }
        }
        for j in &s.joins {
            if let Some(on) = &j.on {
                self.expr(on, &scopes, &[]);
            }
        }
        if let Some(w) = &s.selection {
            self.expr(w, &scopes, &[]);
        }
        for g in &s.group_by {
            self.expr(g, &scopes, &aliases);
        }
        if let Some(h) = &s.having {
            self.expr(h, &scopes, &aliases);
        }
        for o in &s.order_by {
            self.expr(&o.expr, &scopes, &aliases);
        }
        if let Some(l) = &s.limit {
            self.expr(&l.count, &scopes, &[]);
            if let Some(o) = &l.offset {
                self.expr(o, &scopes, &[]);
            }
        }
        projection
    }
}

impl StatementAnalysis {
    /// Analyzes a statement, resolving columns against `catalog` where it has an answer.
    pub fn analyze(statement: Statement, catalog: &dyn ColumnCatalog) -> StatementAnalysis {
        let mut c = Collector {
            catalog,
            reads: Vec::new(),
            unexpanded: Vec::new(),
        };
        let mut written = Vec::new();
        let mut assignments = Vec::new();
        let mut target_tables = Vec::new();
        let mut where_text = None;
        let mut join_text = None;
        let mut projection = None;

        match &statement {
            Statement::Show(Show::Columns { table }) => target_tables.push(table.clone()),
            Statement::Show(_) => {}
            Statement::Select(s) => {
                target_tables.extend(s.scope().into_iter().cloned());
                projection = Some(c.select(s, &[]));
                where_text = s
                    .selection
                    .as_ref()
                    .map(|w| render_expr(w, Dialect::Canonical));
                if !s.joins.is_empty() {
                    join_text = Some(render_joins(&s.joins, Dialect::Canonical));
                }
            }
            Statement::Insert(i) => {
                target_tables.push(i.table.clone());
                for col in &i.columns {
                    push_unique(&mut written, field_of(&i.table, &col.value));
                }
                match &i.source {
                    InsertSource::Values(values) => {
                        for (col, v) in i.columns.iter().zip(values) {
                            if let Some(value) = ValueExpr::from_expr(v) {
                                assignments.push((field_of(&i.table, &col.value), value));
                            }
                            c.expr(v, &[], &[]);
                        }
                    }
                    InsertSource::Select(s) => {
                        c.select(s, &[]);
                    }
                }
            }
            Statement::Update(u) => {
                target_tables.push(u.table.clone());
                target_tables.extend(u.joins.iter().map(|j| j.table.clone()));
                let scope: Vec<&TableRef> = std::iter::once(&u.table)
                    .chain(u.joins.iter().map(|j| &j.table))
                    .collect();
                let scopes = vec![scope];
                for a in &u.assignments {
                    let targets = match a.target.qualifier.len() {
                        0 => vec![field_of(&u.table, &a.target.name.value)],
                        _ => c.resolve(&a.target, &scopes),
                    };
                    for f in &targets {
                        push_unique(&mut written, f.clone());
                    }
                    if let (Some(f), Some(value)) =
                        (targets.first(), ValueExpr::from_expr(&a.value))
                    {
                        assignments.push((f.clone(), value));
                    }
                    c.expr(&a.value, &scopes, &[]);
                }
                for j in &u.joins {
                    if let Some(on) = &j.on {
                        c.expr(on, &scopes, &[]);
                    }
                }
                if let Some(w) = &u.selection {
                    c.expr(w, &scopes, &[]);
                    where_text = Some(render_expr(w, Dialect::Canonical));
                }
                if !u.joins.is_empty() {
                    join_text = Some(render_joins(&u.joins, Dialect::Canonical));
                }
            }
        }

        let mut accessed = written.clone();
        for f in &c.reads {
            push_unique(&mut accessed, f.clone());
        }
        StatementAnalysis {
            kind: statement.kind(),
            statement,
            target_tables,
            accessed_fields: accessed,
            read_fields: c.reads,
            written_fields: written,
            assignments,
            where_text,
            join_text,
            projection,
            unexpanded_stars: c.unexpanded,
        }
    }

    /// Re-runs the analysis with a catalog (column resolution and `*` expansion).
    pub fn reanalyze(&self, catalog: &dyn ColumnCatalog) -> StatementAnalysis {
        StatementAnalysis::analyze(self.statement.clone(), catalog)
    }
}
