//! Canonical SQL text from the syntax tree.
//!
//! Tokens are separated by single spaces, keywords are upper case, string
//! literals are single-quoted with `''` escaping. The `Sqlite` dialect is the
//! backend-facing variant: no `FROM DUAL`, double-quoted identifiers and
//! unqualified assignment targets.

use std::fmt::Write;

use super::ast::*;
use super::parser::is_reserved;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dialect {
    Canonical,
    Sqlite,
}

pub fn render_statement(stmt: &Statement, dialect: Dialect) -> String {
    let mut r = Renderer::new(dialect);
    r.statement(stmt);
    r.out.push(';');
    r.out
}

pub fn render_select(select: &Select, dialect: Dialect) -> String {
    let mut r = Renderer::new(dialect);
    r.select(select);
    r.out
}

pub fn render_expr(expr: &Expr, dialect: Dialect) -> String {
    let mut r = Renderer::new(dialect);
    r.expr(expr);
    r.out
}

pub fn render_joins(joins: &[Join], dialect: Dialect) -> String {
    let mut r = Renderer::new(dialect);
    for (i, j) in joins.iter().enumerate() {
        if i > 0 && j.kind != JoinKind::Comma {
            r.out.push(' ');
        }
        r.join(j);
    }
    r.out
}

pub fn quote_string(value: &str) -> String {
    format!("'{}'", value.replace('\'', "''"))
}

fn is_bare_identifier(value: &str) -> bool {
    let mut chars = value.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' || !c.is_ascii() => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$' || !c.is_ascii())
        && !is_reserved(value)
}

struct Renderer {
    dialect: Dialect,
    out: String,
}

impl Renderer {
    fn new(dialect: Dialect) -> Self {
        Renderer {
            dialect,
            out: String::new(),
        }
    }

    fn ident(&mut self, ident: &Ident) {
        if !ident.quoted && is_bare_identifier(&ident.value) {
            self.out.push_str(&ident.value);
            return;
        }
        let q = match self.dialect {
            Dialect::Canonical => '`',
            Dialect::Sqlite => '"',
        };
        self.out.push(q);
        for c in ident.value.chars() {
            if c == q {
                self.out.push(q);
            }
            self.out.push(c);
        }
        self.out.push(q);
    }

    fn table_name(&mut self, t: &TableRef) {
        if let Some(s) = &t.schema {
            self.ident(s);
            self.out.push('.');
        }
        self.ident(&t.name);
    }

    fn table_ref(&mut self, t: &TableRef) {
        self.table_name(t);
        if let Some(a) = &t.alias {
            self.out.push(' ');
            self.ident(a);
        }
    }

    fn statement(&mut self, stmt: &Statement) {
        match stmt {
            Statement::Show(Show::Tables) => self.out.push_str("SHOW TABLES"),
            Statement::Show(Show::Databases) => self.out.push_str("SHOW DATABASES"),
            Statement::Show(Show::Columns { table }) => {
                self.out.push_str("SHOW COLUMNS FROM ");
                self.table_name(table);
            }
            Statement::Select(s) => self.select(s),
            Statement::Insert(i) => self.insert(i),
            Statement::Update(u) => self.update(u),
        }
    }

    fn insert(&mut self, i: &Insert) {
        self.out.push_str("INSERT INTO ");
        self.table_name(&i.table);
        self.out.push_str(" (");
        for (n, c) in i.columns.iter().enumerate() {
            if n > 0 {
                self.out.push_str(", ");
            }
            self.ident(c);
        }
        self.out.push_str(") ");
        match &i.source {
            InsertSource::Values(values) => {
                self.out.push_str("VALUES (");
                self.list(values);
                self.out.push(')');
            }
            InsertSource::Select(s) => self.select(s),
        }
    }

    fn update(&mut self, u: &Update) {
        self.out.push_str("UPDATE ");
        self.table_name(&u.table);
        if let Some(a) = &u.table.alias {
            self.out.push_str(if self.dialect == Dialect::Sqlite {
                " AS "
            } else {
                " "
            });
            self.ident(a);
        }
        for j in &u.joins {
            self.out.push(' ');
            self.join(j);
        }
        self.out.push_str(" SET ");
        for (n, a) in u.assignments.iter().enumerate() {
            if n > 0 {
                self.out.push_str(", ");
            }
            if self.dialect == Dialect::Sqlite {
                self.ident(&a.target.name);
            } else {
                self.column(&a.target);
            }
            self.out.push_str(" = ");
            self.expr(&a.value);
        }
        if let Some(w) = &u.selection {
            self.out.push_str(" WHERE ");
            self.expr(w);
        }
    }

    fn join(&mut self, j: &Join) {
        let kw = match j.kind {
            JoinKind::Inner => "JOIN ",
            JoinKind::Left => "LEFT JOIN ",
            JoinKind::Right => "RIGHT JOIN ",
            JoinKind::Cross => "CROSS JOIN ",
            JoinKind::Comma => ", ",
        };
        self.out.push_str(kw);
        self.table_ref(&j.table);
        if let Some(on) = &j.on {
            self.out.push_str(" ON ");
            self.expr(on);
        }
    }

    fn select(&mut self, s: &Select) {
        self.out.push_str("SELECT ");
        if s.distinct {
            self.out.push_str("DISTINCT ");
        }
        for (n, item) in s.projection.iter().enumerate() {
            if n > 0 {
                self.out.push_str(", ");
            }
            match item {
                SelectItem::Wildcard => self.out.push('*'),
                SelectItem::QualifiedWildcard(q) => {
                    self.ident(q);
                    self.out.push_str(".*");
                }
                SelectItem::Expr { expr, alias } => {
                    self.expr(expr);
                    if let Some(a) = alias {
                        self.out.push_str(" AS ");
                        self.ident(a);
                    }
                }
            }
        }
        if let Some(from) = &s.from {
            let elide = self.dialect == Dialect::Sqlite && from.is_dual() && s.joins.is_empty();
            if !elide {
                self.out.push_str(" FROM ");
                self.table_ref(from);
                for j in &s.joins {
                    if j.kind != JoinKind::Comma {
                        self.out.push(' ');
                    }
                    self.join(j);
                }
            }
        }
        if let Some(w) = &s.selection {
            self.out.push_str(" WHERE ");
            self.expr(w);
        }
        if !s.group_by.is_empty() {
            self.out.push_str(" GROUP BY ");
            self.list(&s.group_by);
        }
        if let Some(h) = &s.having {
            self.out.push_str(" HAVING ");
            self.expr(h);
        }
        if !s.order_by.is_empty() {
            self.out.push_str(" ORDER BY ");
            for (n, o) in s.order_by.iter().enumerate() {
                if n > 0 {
                    self.out.push_str(", ");
                }
                self.expr(&o.expr);
                match o.descending {
                    Some(true) => self.out.push_str(" DESC"),
                    Some(false) => self.out.push_str(" ASC"),
                    None => {}
                }
            }
        }
        if let Some(l) = &s.limit {
            self.out.push_str(" LIMIT ");
            self.expr(&l.count);
            if let Some(o) = &l.offset {
                self.out.push_str(" OFFSET ");
                self.expr(o);
            }
        }
    }

    fn list(&mut self, items: &[Expr]) {
        for (n, e) in items.iter().enumerate() {
            if n > 0 {
                self.out.push_str(", ");
            }
            self.expr(e);
        }
    }

    fn column(&mut self, c: &ColumnRef) {
        for q in &c.qualifier {
            self.ident(q);
            self.out.push('.');
        }
        self.ident(&c.name);
    }

    fn not(&mut self, negated: bool) {
        if negated {
            self.out.push_str("NOT ");
        }
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Column(c) => self.column(c),
            Expr::Literal(Literal::String(s)) => self.out.push_str(&quote_string(s)),
            Expr::Literal(Literal::Number(n)) => self.out.push_str(n),
            Expr::Literal(Literal::Null) => self.out.push_str("NULL"),
            Expr::Literal(Literal::Bool(b)) => self.out.push_str(if *b { "TRUE" } else { "FALSE" }),
            Expr::Variable(v) => self.out.push_str(v),
            Expr::Unary { op, expr } => {
                match op {
                    UnaryOp::Not => self.out.push_str("NOT "),
                    UnaryOp::Minus => self.out.push('-'),
                    UnaryOp::Plus => self.out.push('+'),
                }
                // "--" would open a comment
                if *op != UnaryOp::Not
                    && matches!(
                        expr.as_ref(),
                        Expr::Unary {
                            op: UnaryOp::Minus | UnaryOp::Plus,
                            ..
                        }
                    )
                {
                    self.out.push(' ');
                }
                self.expr(expr);
            }
            Expr::Binary { left, op, right } => {
                self.expr(left);
                let _ = write!(self.out, " {} ", op.as_str());
                self.expr(right);
            }
            Expr::InList {
                expr,
                negated,
                list,
            } => {
                self.expr(expr);
                self.out.push(' ');
                self.not(*negated);
                self.out.push_str("IN (");
                self.list(list);
                self.out.push(')');
            }
            Expr::InSubquery {
                expr,
                negated,
                subquery,
            } => {
                self.expr(expr);
                self.out.push(' ');
                self.not(*negated);
                self.out.push_str("IN (");
                self.select(subquery);
                self.out.push(')');
            }
            Expr::Between {
                expr,
                negated,
                low,
                high,
            } => {
                self.expr(expr);
                self.out.push(' ');
                self.not(*negated);
                self.out.push_str("BETWEEN ");
                self.expr(low);
                self.out.push_str(" AND ");
                self.expr(high);
            }
            Expr::IsNull { expr, negated } => {
                self.expr(expr);
                self.out
                    .push_str(if *negated { " IS NOT NULL" } else { " IS NULL" });
            }
            Expr::Like {
                expr,
                negated,
                pattern,
            } => {
                self.expr(expr);
                self.out.push(' ');
                self.not(*negated);
                self.out.push_str("LIKE ");
                self.expr(pattern);
            }
            Expr::Exists { negated, subquery } => {
                self.not(*negated);
                self.out.push_str("EXISTS (");
                self.select(subquery);
                self.out.push(')');
            }
            Expr::Subquery(s) => {
                self.out.push('(');
                self.select(s);
                self.out.push(')');
            }
            Expr::Function {
                name,
                distinct,
                args,
            } => {
                self.out.push_str(&name.value);
                self.out.push('(');
                match args {
                    FunctionArgs::Star => self.out.push('*'),
                    FunctionArgs::List(args) => {
                        if *distinct {
                            self.out.push_str("DISTINCT ");
                        }
                        self.list(args);
                    }
                }
                self.out.push(')');
            }
            Expr::Case {
                operand,
                branches,
                otherwise,
            } => {
                self.out.push_str("CASE");
                if let Some(o) = operand {
                    self.out.push(' ');
                    self.expr(o);
                }
                for (w, t) in branches {
                    self.out.push_str(" WHEN ");
                    self.expr(w);
                    self.out.push_str(" THEN ");
                    self.expr(t);
                }
                if let Some(o) = otherwise {
                    self.out.push_str(" ELSE ");
                    self.expr(o);
                }
                self.out.push_str(" END");
            }
            Expr::Nested(inner) => {
                self.out.push('(');
                self.expr(inner);
                self.out.push(')');
            }
        }
    }
}
