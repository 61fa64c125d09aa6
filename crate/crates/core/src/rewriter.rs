//! Authorization and rewriting of analyzed statements.
//!
//! Every assigned value is bound to a session variable with `SET`, and every
//! applicable restriction is conjoined to the statement as
//! `<field> [NOT] IN (<sub-query>)`. INSERTs that carry restrictions become
//! `INSERT ... SELECT <vars> FROM DUAL WHERE ...` so that a failed rule simply
//! produces no row.

use std::collections::BTreeSet;
use std::fmt;

use crate::ela::{ElaDocument, PermissionKind, Restriction, RestrictionType, VarBinding};
use crate::identity::RequesterIdentity;
use crate::sql::ast::{
    eq_ci, select_variables, BinaryOp, ColumnRef, Expr, Ident, Insert, InsertSource, Literal,
    Select, SelectItem, Statement, TableRef, UnaryOp, Update,
};
use crate::sql::render::{render_expr, render_statement};
use crate::sql::{ColumnCatalog, Dialect, FieldRef, SqlScript, StatementAnalysis, StatementKind};

/// Output of the rewriter for one statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformedScript {
    pub kind: StatementKind,
    /// The statement as the requester wrote it.
    pub requested_sql: String,
    /// `SET @var = <expr>;` statements, in execution order.
    pub set_statements: Vec<String>,
    pub final_statement: String,
    pub touched_tables: BTreeSet<String>,
}

impl TransformedScript {
    /// Everything that is executed, in order, separated by single spaces.
    pub fn executed_sql(&self) -> String {
        let mut parts = self.set_statements.clone();
        parts.push(self.final_statement.clone());
        parts.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DenialReason {
    NoPermission(FieldRef),
    UnsupportedKind(String),
    UnresolvableVariable(String),
    /// A rule guards a table the statement reads only inside a sub-query.
    UnappliableRestriction(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Denial {
    pub statement_index: usize,
    pub reason: DenialReason,
    pub detail: String,
}

impl Denial {
    pub fn code(&self) -> &'static str {
        match self.reason {
            DenialReason::NoPermission(_) => "NoPermission",
            DenialReason::UnsupportedKind(_) => "UnsupportedKind",
            DenialReason::UnresolvableVariable(_) => "UnresolvableVariable",
            DenialReason::UnappliableRestriction(_) => "UnappliableRestriction",
        }
    }
}

impl fmt::Display for Denial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "statement {}: {}", self.statement_index + 1, self.detail)
    }
}

impl std::error::Error for Denial {}

/// Everything the rewriter consults besides the statement itself.
pub struct RewriteContext<'a> {
    pub ela: &'a ElaDocument,
    pub identity: &'a RequesterIdentity,
    /// Schema assumed for unqualified table names.
    pub default_schema: &'a str,
    pub catalog: &'a dyn ColumnCatalog,
}

impl RewriteContext<'_> {
    fn require(
        &self,
        index: usize,
        kind: PermissionKind,
        fields: &[FieldRef],
    ) -> Result<(), Denial> {
        for f in fields {
            if self
                .ela
                .lookup_permission(self.identity, kind, f, self.default_schema)
                .is_none()
            {
                let shown = f.with_default_schema(self.default_schema);
                return Err(Denial {
                    statement_index: index,
                    reason: DenialReason::NoPermission(shown.clone()),
                    detail: format!("no {kind} permission for {} on {shown}", self.identity),
                });
            }
        }
        Ok(())
    }

    fn restrictions(&self, kind: PermissionKind, fields: &[FieldRef]) -> Vec<&Restriction> {
        self.ela
            .collect_restrictions(self.identity, kind, fields, self.default_schema)
    }
}

fn unresolvable(index: usize, var: &str, detail: String) -> Denial {
    Denial {
        statement_index: index,
        reason: DenialReason::UnresolvableVariable(var.to_string()),
        detail,
    }
}

/// Rewrites every statement of a script; stops at the first denial.
pub fn rewrite_script(
    ctx: &RewriteContext,
    script: &SqlScript,
) -> Result<Vec<TransformedScript>, Denial> {
    script
        .statements
        .iter()
        .enumerate()
        .map(|(i, stmt)| {
            let source = script.sources.get(i).cloned().unwrap_or_default();
            rewrite(ctx, i, stmt, &source)
        })
        .collect()
}

pub fn rewrite(
    ctx: &RewriteContext,
    index: usize,
    stmt: &StatementAnalysis,
    requested_sql: &str,
) -> Result<TransformedScript, Denial> {
    match stmt.kind {
        StatementKind::Show => Ok(rewrite_show(stmt, requested_sql)),
        StatementKind::Select => rewrite_select(ctx, index, stmt, requested_sql),
        StatementKind::Insert => rewrite_insert(ctx, index, stmt, requested_sql),
        StatementKind::Update => rewrite_update(ctx, index, stmt, requested_sql),
    }
}

pub fn rewrite_show(stmt: &StatementAnalysis, requested_sql: &str) -> TransformedScript {
    TransformedScript {
        kind: StatementKind::Show,
        requested_sql: requested_sql.to_string(),
        set_statements: Vec::new(),
        final_statement: render_statement(&stmt.statement, Dialect::Canonical),
        touched_tables: BTreeSet::new(),
    }
}

fn expand_stars(
    select: &mut Select,
    catalog: &dyn ColumnCatalog,
    index: usize,
) -> Result<(), Denial> {
    let scope: Vec<TableRef> = select.scope().into_iter().cloned().collect();
    let qualify = scope.len() > 1;
    let columns_of = |t: &TableRef| {
        catalog
            .columns(t.schema.as_ref().map(|s| s.value.as_str()), &t.name.value)
            .ok_or_else(|| {
                let f = FieldRef::new(
                    t.schema.as_ref().map(|s| s.value.as_str()),
                    &t.name.value,
                    "*",
                );
                Denial {
                    statement_index: index,
                    detail: format!("cannot expand * for unknown table {}", t.name),
                    reason: DenialReason::NoPermission(f),
                }
            })
    };
    let mut projection = Vec::new();
    for item in std::mem::take(&mut select.projection) {
        match item {
            SelectItem::Wildcard => {
                for t in &scope {
                    for c in columns_of(t)? {
                        let col = if qualify {
                            ColumnRef::qualified(t.exposed_name(), &c)
                        } else {
                            ColumnRef::bare(&c)
                        };
                        projection.push(SelectItem::Expr {
                            expr: Expr::Column(col),
                            alias: None,
                        });
                    }
                }
            }
            SelectItem::QualifiedWildcard(q) => {
                let t = scope
                    .iter()
                    .find(|t| t.exposed_name().matches(&q.value))
                    .cloned()
                    .unwrap_or_else(|| TableRef::named(&q.value));
                for c in columns_of(&t)? {
                    projection.push(SelectItem::Expr {
                        expr: Expr::Column(ColumnRef::qualified(&q, &c)),
                        alias: None,
                    });
                }
            }
            other => projection.push(other),
        }
    }
    select.projection = projection;
    Ok(())
}

fn conjoin(original: Option<Expr>, predicates: Vec<Expr>) -> Option<Expr> {
    let mut acc = original.map(Expr::nested);
    for p in predicates {
        acc = Some(match acc {
            Some(a) => a.and(p),
            None => p,
        });
    }
    acc
}

fn restriction_predicate(r: &Restriction, subject: Expr) -> Expr {
    Expr::InSubquery {
        expr: Box::new(subject),
        negated: r.use_clause.negated(),
        subquery: Box::new(r.select.clone()),
    }
}

fn collect_tables(select: &Select, out: &mut BTreeSet<String>) {
    for t in select.scope() {
        out.insert(t.name.value.clone());
    }
    let mut exprs: Vec<&Expr> = Vec::new();
    for item in &select.projection {
        if let SelectItem::Expr { expr, .. } = item {
            exprs.push(expr);
        }
    }
    exprs.extend(select.joins.iter().filter_map(|j| j.on.as_ref()));
    exprs.extend(select.selection.iter());
    exprs.extend(select.having.iter());
    for e in exprs {
        collect_expr_tables(e, out);
    }
}

fn collect_expr_tables(expr: &Expr, out: &mut BTreeSet<String>) {
    for sub in expr.subqueries() {
        collect_tables(sub, out);
    }
}

pub fn rewrite_select(
    ctx: &RewriteContext,
    index: usize,
    stmt: &StatementAnalysis,
    requested_sql: &str,
) -> Result<TransformedScript, Denial> {
    let Statement::Select(original) = &stmt.statement else {
        return Err(unsupported(index, stmt.kind));
    };
    let mut select = original.clone();
    expand_stars(&mut select, ctx.catalog, index)?;
    let analysis = StatementAnalysis::analyze(Statement::Select(select.clone()), ctx.catalog);
    ctx.require(index, PermissionKind::Select, &analysis.read_fields)?;

    let mut predicates = Vec::new();
    for r in ctx.restrictions(PermissionKind::Select, &analysis.read_fields) {
        if r.rtype != RestrictionType::Select {
            continue;
        }
        let guarded: Vec<&TableRef> = select
            .scope()
            .into_iter()
            .filter(|t| r.targets(&t.name.value))
            .collect();
        if guarded.is_empty() {
            return Err(Denial {
                statement_index: index,
                reason: DenialReason::UnappliableRestriction(r.id.clone()),
                detail: format!(
                    "restriction #{} guards {} but the statement reads it only inside a sub-query",
                    r.id, r.table
                ),
            });
        }
        for t in guarded {
            let column = Expr::Column(ColumnRef::qualified(t.exposed_name(), &r.field));
            predicates.push(restriction_predicate(r, column));
        }
    }
    select.selection = conjoin(select.selection.take(), predicates);

    let mut touched = BTreeSet::new();
    collect_tables(&select, &mut touched);
    Ok(TransformedScript {
        kind: StatementKind::Select,
        requested_sql: requested_sql.to_string(),
        set_statements: Vec::new(),
        final_statement: render_statement(&Statement::Select(select), Dialect::Canonical),
        touched_tables: touched,
    })
}

fn unsupported(index: usize, kind: StatementKind) -> Denial {
    Denial {
        statement_index: index,
        reason: DenialReason::UnsupportedKind(kind.to_string()),
        detail: format!("{kind} cannot be rewritten here"),
    }
}

/// Variable names chosen for one statement.
struct VarPlan {
    /// (variable, bound column) for every variable the restrictions reference, in order.
    restriction_vars: Vec<(String, String)>,
    /// Variable for each assigned column, aligned with the statement's assignments.
    assigned: Vec<String>,
}

fn sanitize(column: &str) -> String {
    let body: String = column
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("@{body}")
}

/// Variables referenced by a restriction (its field plus its sub-query), in declaration order.
fn referenced_vars(r: &Restriction) -> Vec<&VarBinding> {
    let mut used = Vec::new();
    select_variables(&r.select, &mut used);
    if r.field.starts_with('@') {
        used.push(r.field.clone());
    }
    r.vars
        .iter()
        .filter(|v| used.iter().any(|u| eq_ci(u, &v.name)))
        .collect()
}

fn plan_variables(
    index: usize,
    table: &TableRef,
    restrictions: &[&Restriction],
    assigned_columns: &[String],
) -> Result<VarPlan, Denial> {
    let mut restriction_vars: Vec<(String, String)> = Vec::new();
    for r in restrictions {
        for v in referenced_vars(r) {
            if !r.targets(&table.name.value) {
                return Err(unresolvable(
                    index,
                    &v.name,
                    format!(
                        "restriction #{} binds {} to {}.{}, which this statement does not address",
                        r.id, v.name, r.table, v.field
                    ),
                ));
            }
            if !restriction_vars.iter().any(|(n, _)| eq_ci(n, &v.name)) {
                restriction_vars.push((v.name.clone(), v.field.clone()));
            }
        }
    }
    let mut taken: Vec<String> = restriction_vars.iter().map(|(n, _)| n.clone()).collect();
    let mut assigned = Vec::new();
    for col in assigned_columns {
        let bound = restriction_vars
            .iter()
            .find(|(_, f)| eq_ci(f, col))
            .map(|(n, _)| n.clone());
        let name = match bound {
            Some(n) if !assigned.iter().any(|a: &String| eq_ci(a, &n)) => n,
            _ => {
                let base = sanitize(col);
                let mut name = base.clone();
                let mut k = 2;
                while taken.iter().any(|t| eq_ci(t, &name)) {
                    name = format!("{base}_{k}");
                    k += 1;
                }
                name
            }
        };
        taken.push(name.clone());
        assigned.push(name);
    }
    Ok(VarPlan {
        restriction_vars,
        assigned,
    })
}

fn set_statement(var: &str, value: &Expr) -> String {
    format!("SET {var} = {};", render_expr(value, Dialect::Canonical))
}

/// SET statements in order: restriction variables first, then the other assigned columns.
fn order_sets(plan: &VarPlan, assigned_values: &[Expr], derived: &[(String, Expr)]) -> Vec<String> {
    let mut out = Vec::new();
    let mut emitted: Vec<&str> = Vec::new();
    for (name, _) in &plan.restriction_vars {
        if let Some(pos) = plan.assigned.iter().position(|a| eq_ci(a, name)) {
            out.push(set_statement(name, &assigned_values[pos]));
            emitted.push(name);
        } else if let Some((_, value)) = derived.iter().find(|(n, _)| eq_ci(n, name)) {
            out.push(set_statement(name, value));
            emitted.push(name);
        }
    }
    for (name, value) in plan.assigned.iter().zip(assigned_values) {
        if !emitted.iter().any(|e| eq_ci(e, name)) {
            out.push(set_statement(name, value));
        }
    }
    out
}

pub fn rewrite_insert(
    ctx: &RewriteContext,
    index: usize,
    stmt: &StatementAnalysis,
    requested_sql: &str,
) -> Result<TransformedScript, Denial> {
    let Statement::Insert(insert) = &stmt.statement else {
        return Err(unsupported(index, stmt.kind));
    };
    let InsertSource::Values(values) = &insert.source else {
        return Err(unsupported(index, stmt.kind));
    };
    let stmt = stmt.reanalyze(ctx.catalog);
    ctx.require(index, PermissionKind::Insert, &stmt.written_fields)?;
    ctx.require(index, PermissionKind::Select, &stmt.read_fields)?;

    let restrictions: Vec<&Restriction> = ctx
        .restrictions(PermissionKind::Insert, &stmt.written_fields)
        .into_iter()
        .filter(|r| r.rtype == RestrictionType::InsertUpdate)
        .collect();
    let columns: Vec<String> = insert.columns.iter().map(|c| c.value.clone()).collect();
    let plan = plan_variables(index, &insert.table, &restrictions, &columns)?;
    for (name, field) in &plan.restriction_vars {
        if !columns.iter().any(|c| eq_ci(c, field)) {
            return Err(unresolvable(
                index,
                name,
                format!(
                    "{name} needs a value for {}.{field}, which the INSERT does not assign",
                    insert.table.name
                ),
            ));
        }
    }

    let set_statements = order_sets(&plan, values, &[]);
    let vars: Vec<Expr> = plan
        .assigned
        .iter()
        .map(|v| Expr::Variable(v.clone()))
        .collect();
    let source = if restrictions.is_empty() {
        InsertSource::Values(vars)
    } else {
        let predicates = restrictions
            .iter()
            .map(|r| restriction_predicate(r, Expr::Variable(r.field.clone())))
            .collect();
        InsertSource::Select(Box::new(Select {
            distinct: false,
            projection: vars
                .into_iter()
                .map(|expr| SelectItem::Expr { expr, alias: None })
                .collect(),
            from: Some(TableRef::named("DUAL")),
            joins: Vec::new(),
            selection: conjoin(None, predicates),
            group_by: Vec::new(),
            having: None,
            order_by: Vec::new(),
            limit: None,
        }))
    };
    let rewritten = Insert {
        table: insert.table.clone(),
        columns: insert.columns.clone(),
        source,
    };

    let mut touched = BTreeSet::from([insert.table.name.value.clone()]);
    for v in values {
        collect_expr_tables(v, &mut touched);
    }
    for r in &restrictions {
        collect_tables(&r.select, &mut touched);
    }
    Ok(TransformedScript {
        kind: StatementKind::Insert,
        requested_sql: requested_sql.to_string(),
        set_statements,
        final_statement: render_statement(&Statement::Insert(rewritten), Dialect::Canonical),
        touched_tables: touched,
    })
}

/// How a restriction variable that the UPDATE does not assign gets its value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Derivation {
    /// The WHERE clause pins the column to a literal; the literal is bound and
    /// replaced by the variable in the WHERE clause.
    WhereEquality(Expr),
    /// Scalar sub-query evaluated before the UPDATE.
    Subquery(Expr),
}

impl Derivation {
    pub fn value(&self) -> &Expr {
        match self {
            Derivation::WhereEquality(e) | Derivation::Subquery(e) => e,
        }
    }
}

fn conjuncts(expr: &Expr) -> Vec<&Expr> {
    match expr {
        Expr::Binary {
            left,
            op: BinaryOp::And,
            right,
        } => {
            let mut out = conjuncts(left);
            out.extend(conjuncts(right));
            out
        }
        Expr::Nested(inner) => conjuncts(inner),
        other => vec![other],
    }
}

fn literal_value(expr: &Expr) -> Option<&Expr> {
    match expr {
        Expr::Literal(Literal::String(_) | Literal::Number(_)) => Some(expr),
        Expr::Unary {
            op: UnaryOp::Minus | UnaryOp::Plus,
            expr: inner,
        } if matches!(inner.as_ref(), Expr::Literal(Literal::Number(_))) => Some(expr),
        _ => None,
    }
}

/// Whether `col` names `field` of the UPDATE's target table.
fn is_target_column(
    col: &ColumnRef,
    update: &Update,
    field: &str,
    catalog: &dyn ColumnCatalog,
) -> bool {
    if !col.name.matches(field) {
        return false;
    }
    match col.qualifier.last() {
        Some(q) => q.matches(&update.table.exposed_name().value),
        None => {
            update.joins.is_empty()
                || update.joins.iter().all(|j| {
                    catalog
                        .columns(
                            j.table.schema.as_ref().map(|s| s.value.as_str()),
                            &j.table.name.value,
                        )
                        .is_some_and(|cols| !cols.iter().any(|c| eq_ci(c, field)))
                })
        }
    }
}

fn where_equality<'e>(
    selection: &'e Expr,
    update: &Update,
    field: &str,
    catalog: &dyn ColumnCatalog,
) -> Option<&'e Expr> {
    conjuncts(selection).into_iter().find_map(|c| match c {
        Expr::Binary {
            left,
            op: BinaryOp::Eq,
            right,
        } => match (left.as_ref(), right.as_ref()) {
            (Expr::Column(col), other) | (other, Expr::Column(col))
                if is_target_column(col, update, field, catalog) =>
            {
                literal_value(other)
            }
            _ => None,
        },
        _ => None,
    })
}

/// Replaces the literal of the first top-level `column = literal` conjunct on `field` by `var`.
fn substitute_equality(
    expr: &mut Expr,
    update: &Update,
    field: &str,
    var: &str,
    catalog: &dyn ColumnCatalog,
) -> bool {
    match expr {
        Expr::Binary {
            left,
            op: BinaryOp::And,
            right,
        } => {
            substitute_equality(left, update, field, var, catalog)
                || substitute_equality(right, update, field, var, catalog)
        }
        Expr::Nested(inner) => substitute_equality(inner, update, field, var, catalog),
        Expr::Binary {
            left,
            op: BinaryOp::Eq,
            right,
        } => {
            let left_is_col = matches!(left.as_ref(), Expr::Column(c) if is_target_column(c, update, field, catalog));
            let right_is_col = matches!(right.as_ref(), Expr::Column(c) if is_target_column(c, update, field, catalog));
            if left_is_col && literal_value(right).is_some() {
                **right = Expr::Variable(var.to_string());
                true
            } else if right_is_col && literal_value(left).is_some() {
                **left = Expr::Variable(var.to_string());
                true
            } else {
                false
            }
        }
        _ => false,
    }
}

fn qualifier_of(col: &ColumnRef) -> Option<&Ident> {
    col.qualifier.last()
}

/// Column of a joined table equated to `target.field` in a JOIN ... ON clause.
fn join_source<'u>(update: &'u Update, field: &str) -> Option<(&'u TableRef, Ident)> {
    let target = update.table.exposed_name();
    for j in &update.joins {
        let Some(on) = &j.on else { continue };
        let joined = j.table.exposed_name();
        for c in conjuncts(on) {
            let Expr::Binary {
                left,
                op: BinaryOp::Eq,
                right,
            } = c
            else {
                continue;
            };
            let (Expr::Column(a), Expr::Column(b)) = (left.as_ref(), right.as_ref()) else {
                continue;
            };
            for (mine, theirs) in [(a, b), (b, a)] {
                let mine_ok = mine.name.matches(field)
                    && qualifier_of(mine).is_some_and(|q| q.matches(&target.value));
                let theirs_ok = qualifier_of(theirs).is_some_and(|q| q.matches(&joined.value));
                if mine_ok && theirs_ok {
                    return Some((&j.table, theirs.name.clone()));
                }
            }
        }
    }
    None
}

/// Whether every column in `expr` is qualified with `alias` and it has no sub-queries.
fn only_references(expr: &Expr, alias: &Ident) -> bool {
    let mut ok = expr.subqueries().is_empty();
    expr.walk(&mut |e| {
        if let Expr::Column(c) = e {
            if !qualifier_of(c).is_some_and(|q| q.matches(&alias.value)) {
                ok = false;
            }
        }
    });
    ok
}

fn scalar_select(
    column: Expr,
    from: TableRef,
    joins: Vec<crate::sql::ast::Join>,
    selection: Expr,
    distinct: bool,
) -> Expr {
    Expr::Subquery(Box::new(Select {
        distinct,
        projection: vec![SelectItem::Expr {
            expr: column,
            alias: None,
        }],
        from: Some(from),
        joins,
        selection: Some(selection),
        group_by: Vec::new(),
        having: None,
        order_by: Vec::new(),
        limit: None,
    }))
}

/// Derives a value for the restriction variable `var`, bound to a column of the
/// UPDATE's target table that the statement does not assign.
pub fn derive_for_update(
    update: &Update,
    var: &VarBinding,
    catalog: &dyn ColumnCatalog,
) -> Option<Derivation> {
    let selection = update.selection.as_ref()?;
    if let Some(lit) = where_equality(selection, update, &var.field, catalog) {
        return Some(Derivation::WhereEquality(lit.clone()));
    }
    if let Some((joined, column)) = join_source(update, &var.field) {
        let alias = joined.exposed_name();
        if only_references(selection, alias) {
            let col = Expr::Column(ColumnRef::qualified(alias, &column.value));
            return Some(Derivation::Subquery(scalar_select(
                col,
                joined.clone(),
                Vec::new(),
                selection.clone(),
                false,
            )));
        }
    }
    let col = Expr::Column(ColumnRef::qualified(
        update.table.exposed_name(),
        &var.field,
    ));
    Some(Derivation::Subquery(scalar_select(
        col,
        update.table.clone(),
        update.joins.clone(),
        selection.clone(),
        true,
    )))
}

/// The SET statement that gives `var` its value for this UPDATE.
pub fn derive_variable(
    stmt: &StatementAnalysis,
    var: &VarBinding,
    catalog: &dyn ColumnCatalog,
) -> Result<String, Denial> {
    let Statement::Update(update) = &stmt.statement else {
        return Err(unresolvable(
            0,
            &var.name,
            "derivation applies to UPDATE only".into(),
        ));
    };
    derive_for_update(update, var, catalog)
        .map(|d| set_statement(&var.name, d.value()))
        .ok_or_else(|| {
            unresolvable(
                0,
                &var.name,
                format!(
                    "{} has no value and the UPDATE has no WHERE clause to derive it from",
                    var.name
                ),
            )
        })
}

pub fn rewrite_update(
    ctx: &RewriteContext,
    index: usize,
    stmt: &StatementAnalysis,
    requested_sql: &str,
) -> Result<TransformedScript, Denial> {
    let Statement::Update(update) = &stmt.statement else {
        return Err(unsupported(index, stmt.kind));
    };
    let stmt = stmt.reanalyze(ctx.catalog);
    ctx.require(index, PermissionKind::Update, &stmt.written_fields)?;
    ctx.require(index, PermissionKind::Select, &stmt.read_fields)?;

    let restrictions: Vec<&Restriction> = ctx
        .restrictions(PermissionKind::Update, &stmt.written_fields)
        .into_iter()
        .filter(|r| r.rtype == RestrictionType::InsertUpdate)
        .collect();
    let columns: Vec<String> = update
        .assignments
        .iter()
        .map(|a| a.target.name.value.clone())
        .collect();
    let plan = plan_variables(index, &update.table, &restrictions, &columns)?;

    let mut rewritten = update.clone();
    let mut derived: Vec<(String, Expr)> = Vec::new();
    for (name, field) in &plan.restriction_vars {
        if columns.iter().any(|c| eq_ci(c, field)) {
            continue;
        }
        let binding = VarBinding {
            field: field.clone(),
            name: name.clone(),
        };
        match derive_for_update(update, &binding, ctx.catalog) {
            Some(Derivation::WhereEquality(lit)) => {
                if let Some(sel) = rewritten.selection.as_mut() {
                    substitute_equality(sel, update, field, name, ctx.catalog);
                }
                derived.push((name.clone(), lit));
            }
            Some(Derivation::Subquery(q)) => derived.push((name.clone(), q)),
            None => {
                return Err(unresolvable(
                    index,
                    name,
                    format!(
                        "{name} needs {}.{field}, which the UPDATE neither assigns nor selects with a WHERE clause",
                        update.table.name
                    ),
                ))
            }
        }
    }

    let values: Vec<Expr> = update.assignments.iter().map(|a| a.value.clone()).collect();
    let set_statements = order_sets(&plan, &values, &derived);
    for (a, var) in rewritten.assignments.iter_mut().zip(&plan.assigned) {
        a.value = Expr::Variable(var.clone());
    }
    let predicates = restrictions
        .iter()
        .map(|r| restriction_predicate(r, Expr::Variable(r.field.clone())))
        .collect();
    rewritten.selection = conjoin(rewritten.selection.take(), predicates);

    let mut touched = BTreeSet::from([update.table.name.value.clone()]);
    for j in &update.joins {
        touched.insert(j.table.name.value.clone());
    }
    for v in values.iter().chain(derived.iter().map(|(_, e)| e)) {
        collect_expr_tables(v, &mut touched);
    }
    if let Some(sel) = &update.selection {
        collect_expr_tables(sel, &mut touched);
    }
    for r in &restrictions {
        collect_tables(&r.select, &mut touched);
    }
    Ok(TransformedScript {
        kind: StatementKind::Update,
        requested_sql: requested_sql.to_string(),
        set_statements,
        final_statement: render_statement(&Statement::Update(rewritten), Dialect::Canonical),
        touched_tables: touched,
    })
}
