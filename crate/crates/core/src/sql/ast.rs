//! Syntax tree for the supported SQL subset.
//!
//! Identifiers keep the spelling they were written with. Keywords are not
//! stored; the renderer emits them in upper case.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ident {
    pub value: String,
    pub quoted: bool,
}

impl Ident {
    pub fn new(value: impl Into<String>) -> Self {
        Ident {
            value: value.into(),
            quoted: false,
        }
    }

    /// Case-insensitive comparison against a plain name.
    pub fn matches(&self, name: &str) -> bool {
        eq_ci(&self.value, name)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.value)
    }
}

pub(crate) fn eq_ci(a: &str, b: &str) -> bool {
    a.eq_ignore_ascii_case(b) || a.to_lowercase() == b.to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRef {
    pub schema: Option<Ident>,
    pub name: Ident,
    pub alias: Option<Ident>,
}

impl TableRef {
    pub fn named(name: &str) -> Self {
        TableRef {
            schema: None,
            name: Ident::new(name),
            alias: None,
        }
    }

    /// Name used to qualify columns of this table in the enclosing statement.
    pub fn exposed_name(&self) -> &Ident {
        self.alias.as_ref().unwrap_or(&self.name)
    }

    pub fn is_dual(&self) -> bool {
        self.schema.is_none() && !self.name.quoted && self.name.matches("DUAL")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinKind {
    Inner,
    Left,
    Right,
    Cross,
    /// `FROM a, b`
    Comma,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Join {
    pub kind: JoinKind,
    pub table: TableRef,
    pub on: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnRef {
    /// Zero, one (`t.col`) or two (`schema.t.col`) qualifiers.
    pub qualifier: Vec<Ident>,
    pub name: Ident,
}

impl ColumnRef {
    pub fn bare(name: &str) -> Self {
        ColumnRef {
            qualifier: Vec::new(),
            name: Ident::new(name),
        }
    }

    pub fn qualified(qualifier: &Ident, name: &str) -> Self {
        ColumnRef {
            qualifier: vec![qualifier.clone()],
            name: Ident::new(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    String(String),
    Number(String),
    Null,
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Column(ColumnRef),
    Literal(Literal),
    Variable(String),
    Unary {
        op: UnaryOp,
        expr: Box<Expr>,
    },
    Binary {
        left: Box<Expr>,
        op: BinaryOp,
        right: Box<Expr>,
    },
    InList {
        expr: Box<Expr>,
        negated: bool,
        list: Vec<Expr>,
    },
    InSubquery {
        expr: Box<Expr>,
        negated: bool,
        subquery: Box<Select>,
    },
    Between {
        expr: Box<Expr>,
        negated: bool,
        low: Box<Expr>,
        high: Box<Expr>,
    },
    IsNull {
        expr: Box<Expr>,
        negated: bool,
    },
    Like {
        expr: Box<Expr>,
        negated: bool,
        pattern: Box<Expr>,
    },
    Exists {
        negated: bool,
        subquery: Box<Select>,
    },
    Subquery(Box<Select>),
    Function {
        name: Ident,
        distinct: bool,
        args: FunctionArgs,
    },
    Case {
        operand: Option<Box<Expr>>,
        branches: Vec<(Expr, Expr)>,
        otherwise: Option<Box<Expr>>,
    },
    /// Parenthesized expression, kept so rendering preserves the grouping as written.
    Nested(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunctionArgs {
    Star,
    List(Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Minus,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Plus,
    Minus,
    Mul,
    Div,
    Mod,
    Concat,
}

impl BinaryOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BinaryOp::Or => "OR",
            BinaryOp::And => "AND",
            BinaryOp::Eq => "=",
            BinaryOp::NotEq => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::LtEq => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::GtEq => ">=",
            BinaryOp::Plus => "+",
            BinaryOp::Minus => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::Concat => "||",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SelectItem {
    Wildcard,
    QualifiedWildcard(Ident),
    Expr { expr: Expr, alias: Option<Ident> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderItem {
    pub expr: Expr,
    pub descending: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Limit {
    pub count: Expr,
    pub offset: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Select {
    pub distinct: bool,
    pub projection: Vec<SelectItem>,
    pub from: Option<TableRef>,
    pub joins: Vec<Join>,
    pub selection: Option<Expr>,
    pub group_by: Vec<Expr>,
    pub having: Option<Expr>,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<Limit>,
}

impl Select {
    /// Tables in scope for column resolution, DUAL excluded.
    pub fn scope(&self) -> Vec<&TableRef> {
        self.from
            .iter()
            .chain(self.joins.iter().map(|j| &j.table))
            .filter(|t| !t.is_dual())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Show {
    Tables,
    Databases,
    Columns { table: TableRef },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InsertSource {
    Values(Vec<Expr>),
    /// Only produced by the rewriter (`INSERT ... SELECT ... FROM DUAL WHERE ...`).
    Select(Box<Select>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Insert {
    pub table: TableRef,
    pub columns: Vec<Ident>,
    pub source: InsertSource,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub target: ColumnRef,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Update {
    pub table: TableRef,
    pub joins: Vec<Join>,
    pub assignments: Vec<Assignment>,
    pub selection: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
// Scripts hold a handful of statements; boxing Select buys nothing.
#[allow(clippy::large_enum_variant)]
pub enum Statement {
    Show(Show),
    Select(Select),
    Insert(Insert),
    Update(Update),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StatementKind {
    Show,
    Select,
    Insert,
    Update,
}

impl StatementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StatementKind::Show => "SHOW",
            StatementKind::Select => "SELECT",
            StatementKind::Insert => "INSERT",
            StatementKind::Update => "UPDATE",
        }
    }

    pub fn is_write(self) -> bool {
        matches!(self, StatementKind::Insert | StatementKind::Update)
    }
}

impl fmt::Display for StatementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Statement {
    pub fn kind(&self) -> StatementKind {
        match self {
            Statement::Show(_) => StatementKind::Show,
            Statement::Select(_) => StatementKind::Select,
            Statement::Insert(_) => StatementKind::Insert,
            Statement::Update(_) => StatementKind::Update,
        }
    }
}

impl Expr {
    pub fn and(self, other: Expr) -> Expr {
        Expr::Binary {
            left: Box::new(self),
            op: BinaryOp::And,
            right: Box::new(other),
        }
    }

    pub fn nested(self) -> Expr {
        Expr::Nested(Box::new(self))
    }

    /// Calls `f` on this expression and every sub-expression, not descending into sub-queries.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Column(_) | Expr::Literal(_) | Expr::Variable(_) => {}
            Expr::Unary { expr, .. } | Expr::IsNull { expr, .. } | Expr::Nested(expr) => {
                expr.walk(f)
            }
            Expr::Binary { left, right, .. } => {
                left.walk(f);
                right.walk(f);
            }
            Expr::InList { expr, list, .. } => {
                expr.walk(f);
                list.iter().for_each(|e| e.walk(f));
            }
            Expr::InSubquery { expr, .. } => expr.walk(f),
            Expr::Between {
                expr, low, high, ..
            } => {
                expr.walk(f);
                low.walk(f);
                high.walk(f);
            }
            Expr::Like { expr, pattern, .. } => {
                expr.walk(f);
                pattern.walk(f);
            }
            Expr::Exists { .. } | Expr::Subquery(_) => {}
            Expr::Function { args, .. } => {
                if let FunctionArgs::List(args) = args {
                    args.iter().for_each(|e| e.walk(f));
                }
            }
            Expr::Case {
                operand,
                branches,
                otherwise,
            } => {
                if let Some(o) = operand {
                    o.walk(f);
                }
                for (w, t) in branches {
                    w.walk(f);
                    t.walk(f);
                }
                if let Some(o) = otherwise {
                    o.walk(f);
                }
            }
        }
    }

    /// Direct sub-queries of this expression tree (not nested deeper than one level).
    pub fn subqueries(&self) -> Vec<&Select> {
        let mut out = Vec::new();
        self.walk(&mut |e| match e {
            Expr::InSubquery { subquery, .. }
            | Expr::Exists { subquery, .. }
            | Expr::Subquery(subquery) => out.push(subquery.as_ref()),
            _ => {}
        });
        out
    }

    /// Mutable pre-order traversal, not descending into sub-queries.
    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        f(self);
        match self {
            Expr::Column(_) | Expr::Literal(_) | Expr::Variable(_) => {}
            Expr::Unary { expr, .. } | Expr::IsNull { expr, .. } | Expr::Nested(expr) => {
                expr.walk_mut(f)
            }
            Expr::Binary { left, right, .. } => {
                left.walk_mut(f);
                right.walk_mut(f);
            }
            Expr::InList { expr, list, .. } => {
                expr.walk_mut(f);
                list.iter_mut().for_each(|e| e.walk_mut(f));
            }
            Expr::InSubquery { expr, .. } => expr.walk_mut(f),
            Expr::Between {
                expr, low, high, ..
            } => {
                expr.walk_mut(f);
                low.walk_mut(f);
                high.walk_mut(f);
            }
            Expr::Like { expr, pattern, .. } => {
                expr.walk_mut(f);
                pattern.walk_mut(f);
            }
            Expr::Exists { .. } | Expr::Subquery(_) => {}
            Expr::Function { args, .. } => {
                if let FunctionArgs::List(args) = args {
                    args.iter_mut().for_each(|e| e.walk_mut(f));
                }
            }
            Expr::Case {
                operand,
                branches,
                otherwise,
            } => {
                if let Some(o) = operand {
                    o.walk_mut(f);
                }
                for (w, t) in branches {
                    w.walk_mut(f);
                    t.walk_mut(f);
                }
                if let Some(o) = otherwise {
                    o.walk_mut(f);
                }
            }
        }
    }
}

/// Every session variable referenced anywhere in a SELECT, sub-queries included.
pub fn select_variables(select: &Select, out: &mut Vec<String>) {
    let mut exprs: Vec<&Expr> = Vec::new();
    for item in &select.projection {
        if let SelectItem::Expr { expr, .. } = item {
            exprs.push(expr);
        }
    }
    exprs.extend(select.joins.iter().filter_map(|j| j.on.as_ref()));
    exprs.extend(select.selection.iter());
    exprs.extend(select.group_by.iter());
    exprs.extend(select.having.iter());
    exprs.extend(select.order_by.iter().map(|o| &o.expr));
    if let Some(limit) = &select.limit {
        exprs.push(&limit.count);
        exprs.extend(limit.offset.iter());
    }
    for e in exprs {
        expr_variables(e, out);
    }
}

pub fn expr_variables(expr: &Expr, out: &mut Vec<String>) {
    expr.walk(&mut |e| {
        if let Expr::Variable(v) = e {
            if !out.iter().any(|o| eq_ci(o, v)) {
                out.push(v.clone());
            }
        }
    });
    for sub in expr.subqueries() {
        select_variables(sub, out);
    }
}

pub fn statement_variables(stmt: &Statement) -> Vec<String> {
    let mut out = Vec::new();
    match stmt {
        Statement::Show(_) => {}
        Statement::Select(s) => select_variables(s, &mut out),
        Statement::Insert(i) => match &i.source {
            InsertSource::Values(values) => values.iter().for_each(|v| expr_variables(v, &mut out)),
            InsertSource::Select(s) => select_variables(s, &mut out),
        },
        Statement::Update(u) => {
            for j in &u.joins {
                if let Some(on) = &j.on {
                    expr_variables(on, &mut out);
                }
            }
            for a in &u.assignments {
                expr_variables(&a.value, &mut out);
            }
            if let Some(w) = &u.selection {
                expr_variables(w, &mut out);
            }
        }
    }
    out
}
