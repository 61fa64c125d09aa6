use super::ast::*;
use super::error::SqlError;
use super::lexer::{Token, TokenKind};

/// Words that can never be used as bare identifiers or aliases.
const RESERVED: &[&str] = &[
    "ALL",
    "ALTER",
    "AND",
    "AS",
    "ASC",
    "BETWEEN",
    "BY",
    "CASE",
    "CREATE",
    "CROSS",
    "DELETE",
    "DESC",
    "DISTINCT",
    "DROP",
    "ELSE",
    "END",
    "EXCEPT",
    "EXISTS",
    "FALSE",
    "FROM",
    "FULL",
    "GRANT",
    "GROUP",
    "HAVING",
    "IN",
    "INNER",
    "INSERT",
    "INTERSECT",
    "INTO",
    "IS",
    "JOIN",
    "LEFT",
    "LIKE",
    "LIMIT",
    "NATURAL",
    "NOT",
    "NULL",
    "OFFSET",
    "ON",
    "OR",
    "ORDER",
    "OUTER",
    "REPLACE",
    "REVOKE",
    "RIGHT",
    "SELECT",
    "SET",
    "SHOW",
    "THEN",
    "TRUE",
    "TRUNCATE",
    "UNION",
    "UPDATE",
    "USING",
    "VALUES",
    "WHEN",
    "WHERE",
];

/// Functions callable from requester SQL. Internal SQL (rules, rewritten statements) is not limited.
const USER_FUNCTIONS: &[&str] = &[
    "ABS",
    "AVG",
    "COALESCE",
    "CONCAT",
    "COUNT",
    "DATE",
    "DATEDIFF",
    "FROM_DAYS",
    "IFNULL",
    "LENGTH",
    "LOWER",
    "MAX",
    "MIN",
    "NOW",
    "ROUND",
    "SUBSTR",
    "SUBSTRING",
    "SUM",
    "TRIM",
    "UPPER",
    "YEAR",
];

const MAX_DEPTH: usize = 64;

pub(crate) fn is_reserved(word: &str) -> bool {
    RESERVED.iter().any(|r| r.eq_ignore_ascii_case(word))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    /// Requester-supplied SQL: no session variables, no `INSERT ... SELECT`, allow-listed functions.
    Requester,
    /// SQL authored by the gateway itself or by the rule document.
    Internal,
}

pub(crate) struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    mode: ParseMode,
    statement: usize,
    depth: usize,
    end_offset: usize,
}

type PResult<T> = Result<T, SqlError>;

impl<'t> Parser<'t> {
    pub fn new(tokens: &'t [Token], mode: ParseMode, statement: usize, end_offset: usize) -> Self {
        Parser {
            tokens,
            pos: 0,
            mode,
            statement,
            depth: 0,
            end_offset,
        }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'t Token> {
        self.tokens.get(self.pos + n)
    }

    fn peek_word(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_word(kw))
    }

    fn eat_word(&mut self, kw: &str) -> bool {
        if self.peek_word(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kind(&mut self, kind: TokenKind) -> bool {
        if self.peek().is_some_and(|t| t.kind == kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn syntax(&self, message: impl Into<String>) -> SqlError {
        let (token, offset) = match self.peek() {
            Some(t) => (t.display(), t.span.start),
            None => ("end of input".to_string(), self.end_offset),
        };
        SqlError::Syntax {
            statement: self.statement,
            token,
            offset,
            message: message.into(),
        }
    }

    pub fn unsupported(&self, message: impl Into<String>) -> SqlError {
        let (token, offset) = match self.peek() {
            Some(t) => (t.display(), t.span.start),
            None => ("end of input".to_string(), self.end_offset),
        };
        SqlError::Unsupported {
            statement: self.statement,
            token,
            offset,
            message: message.into(),
        }
    }

    fn expect_word(&mut self, kw: &str) -> PResult<()> {
        if self.eat_word(kw) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected {kw}")))
        }
    }

    fn expect_kind(&mut self, kind: TokenKind, what: &str) -> PResult<()> {
        if self.eat_kind(kind) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected {what}")))
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.syntax("nesting too deep"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Word && !is_reserved(&t.text) => {
                self.pos += 1;
                Ok(Ident::new(t.text.clone()))
            }
            Some(t) if t.kind == TokenKind::QuotedIdent => {
                self.pos += 1;
                Ok(Ident {
                    value: t.text.clone(),
                    quoted: true,
                })
            }
            _ => Err(self.syntax("expected identifier")),
        }
    }

    fn at_ident(&self) -> bool {
        matches!(self.peek(), Some(t) if (t.kind == TokenKind::Word && !is_reserved(&t.text)) || t.kind == TokenKind::QuotedIdent)
    }

    // ---------------------------------------------------------------- statements

    pub fn statement(&mut self) -> PResult<Statement> {
        let first = match self.peek() {
            Some(t) => t,
            None => return Err(self.syntax("empty statement")),
        };
        if first.kind != TokenKind::Word {
            return Err(self.syntax("expected a statement keyword"));
        }
        let kw = first.text.to_ascii_uppercase();
        match kw.as_str() {
            "SHOW" => self.show().map(Statement::Show),
            "SELECT" => self.select().map(Statement::Select),
            "INSERT" => self.insert().map(Statement::Insert),
            "UPDATE" => self.update().map(Statement::Update),
            _ => Err(self.unsupported(format!("statement kind {kw} is not supported"))),
        }
    }

    fn show(&mut self) -> PResult<Show> {
        self.expect_word("SHOW")?;
        if self.eat_word("TABLES") {
            Ok(Show::Tables)
        } else if self.eat_word("DATABASES") {
            Ok(Show::Databases)
        } else if self.eat_word("COLUMNS") {
            if !self.eat_word("FROM") {
                self.expect_word("IN")?;
            }
            let table = self.table_name()?;
            Ok(Show::Columns { table })
        } else {
            Err(self.unsupported("only SHOW TABLES, SHOW DATABASES and SHOW COLUMNS are supported"))
        }
    }

    fn table_name(&mut self) -> PResult<TableRef> {
        let first = self.ident()?;
        if self.eat_kind(TokenKind::Dot) {
            let name = self.ident()?;
            Ok(TableRef {
                schema: Some(first),
                name,
                alias: None,
            })
        } else {
            Ok(TableRef {
                schema: None,
                name: first,
                alias: None,
            })
        }
    }

    fn table_ref(&mut self) -> PResult<TableRef> {
        let mut t = self.table_name()?;
        if self.eat_word("AS") || self.at_ident() {
            t.alias = Some(self.ident()?);
        }
        Ok(t)
    }

    fn joins(&mut self) -> PResult<Vec<Join>> {
        let mut joins = Vec::new();
        loop {
            let kind = if self.eat_kind(TokenKind::Comma) {
                JoinKind::Comma
            } else if self.eat_word("JOIN") {
                JoinKind::Inner
            } else if self.eat_word("INNER") {
                self.expect_word("JOIN")?;
                JoinKind::Inner
            } else if self.eat_word("LEFT") {
                self.eat_word("OUTER");
                self.expect_word("JOIN")?;
                JoinKind::Left
            } else if self.eat_word("RIGHT") {
                self.eat_word("OUTER");
                self.expect_word("JOIN")?;
                JoinKind::Right
            } else if self.eat_word("CROSS") {
                self.expect_word("JOIN")?;
                JoinKind::Cross
            } else if self.peek_word("NATURAL") || self.peek_word("FULL") {
                return Err(self.unsupported("NATURAL and FULL joins are not supported"));
            } else {
                break;
            };
            let table = self.table_ref()?;
            let on = match kind {
                JoinKind::Inner | JoinKind::Left | JoinKind::Right => {
                    if self.peek_word("USING") {
                        return Err(self.unsupported("JOIN ... USING is not supported"));
                    }
                    if kind == JoinKind::Inner && !self.peek_word("ON") {
                        None
                    } else {
                        self.expect_word("ON")?;
                        Some(self.expr()?)
                    }
                }
                JoinKind::Cross | JoinKind::Comma => None,
            };
            joins.push(Join { kind, table, on });
        }
        Ok(joins)
    }

    pub fn select(&mut self) -> PResult<Select> {
        self.enter()?;
        self.expect_word("SELECT")?;
        let distinct = if self.eat_word("DISTINCT") {
            true
        } else {
            self.eat_word("ALL");
            false
        };
        let mut projection = vec![self.select_item()?];
        while self.eat_kind(TokenKind::Comma) {
            projection.push(self.select_item()?);
        }
        let (from, joins) = if self.eat_word("FROM") {
            let from = self.table_ref()?;
            let joins = self.joins()?;
            (Some(from), joins)
        } else {
            (None, Vec::new())
        };
        let selection = if self.eat_word("WHERE") {
            Some(self.expr()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_word("GROUP") {
            self.expect_word("BY")?;
            group_by.push(self.expr()?);
            while self.eat_kind(TokenKind::Comma) {
                group_by.push(self.expr()?);
            }
        }
        let having = if self.eat_word("HAVING") {
            Some(self.expr()?)
        } else {
            None
        };
        let mut order_by = Vec::new();
        if self.eat_word("ORDER") {
            self.expect_word("BY")?;
            loop {
                let expr = self.expr()?;
                let descending = if self.eat_word("DESC") {
                    Some(true)
                } else if self.eat_word("ASC") {
                    Some(false)
                } else {
                    None
                };
                order_by.push(OrderItem { expr, descending });
                if !self.eat_kind(TokenKind::Comma) {
                    break;
                }
            }
        }
        let limit = if self.eat_word("LIMIT") {
            let first = self.expr()?;
            if self.eat_kind(TokenKind::Comma) {
                let count = self.expr()?;
                Some(Limit {
                    count,
                    offset: Some(first),
                })
            } else if self.eat_word("OFFSET") {
                let offset = self.expr()?;
                Some(Limit {
                    count: first,
                    offset: Some(offset),
                })
            } else {
                Some(Limit {
                    count: first,
                    offset: None,
                })
            }
        } else {
            None
        };
        if self.peek_word("UNION") || self.peek_word("INTERSECT") || self.peek_word("EXCEPT") {
            return Err(self.unsupported("set operations are not supported"));
        }
        self.leave();
        Ok(Select {
            distinct,
            projection,
            from,
            joins,
            selection,
            group_by,
            having,
            order_by,
            limit,
        })
    }

    fn select_item(&mut self) -> PResult<SelectItem> {
        if self.peek().is_some_and(|t| t.is_op("*")) {
            self.pos += 1;
            return Ok(SelectItem::Wildcard);
        }
        if self.at_ident()
            && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Dot)
            && self.peek_at(2).is_some_and(|t| t.is_op("*"))
        {
            let q = self.ident()?;
            self.pos += 2;
            return Ok(SelectItem::QualifiedWildcard(q));
        }
        let expr = self.expr()?;
        let alias = if self.eat_word("AS") || self.at_ident() {
            Some(self.ident()?)
        } else {
            None
        };
        Ok(SelectItem::Expr { expr, alias })
    }

    fn insert(&mut self) -> PResult<Insert> {
        self.expect_word("INSERT")?;
        self.expect_word("INTO")?;
        let table = self.table_name()?;
        if !self.peek().is_some_and(|t| t.kind == TokenKind::LParen) {
            return Err(self.unsupported("INSERT requires an explicit column list"));
        }
        self.pos += 1;
        let mut columns = vec![self.ident()?];
        while self.eat_kind(TokenKind::Comma) {
            columns.push(self.ident()?);
        }
        self.expect_kind(TokenKind::RParen, "')'")?;
        let source = if self.eat_word("VALUES") {
            self.expect_kind(TokenKind::LParen, "'('")?;
            let mut values = vec![self.value()?];
            while self.eat_kind(TokenKind::Comma) {
                values.push(self.value()?);
            }
            self.expect_kind(TokenKind::RParen, "')'")?;
            if self.peek().is_some_and(|t| t.kind == TokenKind::Comma) {
                return Err(self.unsupported("multi-row INSERT is not supported"));
            }
            if values.len() != columns.len() {
                return Err(self.syntax(format!(
                    "INSERT lists {} columns but {} values",
                    columns.len(),
                    values.len()
                )));
            }
            InsertSource::Values(values)
        } else if self.peek_word("SELECT") {
            if self.mode == ParseMode::Requester {
                return Err(self.unsupported("INSERT ... SELECT is not supported"));
            }
            InsertSource::Select(Box::new(self.select()?))
        } else {
            return Err(self.syntax("expected VALUES"));
        };
        if self.peek_word("ON") {
            return Err(self.unsupported("ON DUPLICATE KEY is not supported"));
        }
        Ok(Insert {
            table,
            columns,
            source,
        })
    }

    fn update(&mut self) -> PResult<Update> {
        self.expect_word("UPDATE")?;
        let table = self.table_ref()?;
        let joins = self.joins()?;
        if joins.iter().any(|j| j.kind == JoinKind::Comma) {
            return Err(self.unsupported("comma-separated multi-table UPDATE is not supported"));
        }
        self.expect_word("SET")?;
        let mut assignments = Vec::new();
        loop {
            let target = self.column_ref()?;
            if !self.peek().is_some_and(|t| t.is_op("=")) {
                return Err(self.syntax("expected '='"));
            }
            self.pos += 1;
            let value = self.value()?;
            assignments.push(Assignment { target, value });
            if !self.eat_kind(TokenKind::Comma) {
                break;
            }
        }
        for a in &assignments {
            let on_target = match a.target.qualifier.as_slice() {
                [] => true,
                [q] => table.exposed_name().matches(&q.value),
                [s, t] => {
                    t.matches(&table.name.value)
                        && table
                            .schema
                            .as_ref()
                            .is_none_or(|ts| ts.matches(&s.value))
                }
                _ => false,
            };
            if !on_target {
                return Err(self.unsupported(format!(
                    "UPDATE may only assign columns of {}",
                    table.name.value
                )));
            }
        }
        let selection = if self.eat_word("WHERE") {
            Some(self.expr()?)
        } else {
            None
        };
        if self.peek_word("ORDER") || self.peek_word("LIMIT") {
            return Err(self.unsupported("UPDATE with ORDER BY or LIMIT is not supported"));
        }
        Ok(Update {
            table,
            joins,
            assignments,
            selection,
        })
    }

    fn column_ref(&mut self) -> PResult<ColumnRef> {
        let mut parts = vec![self.ident()?];
        while self.peek().is_some_and(|t| t.kind == TokenKind::Dot) {
            self.pos += 1;
            parts.push(self.ident()?);
        }
        if parts.len() > 3 {
            return Err(self.syntax("too many qualifiers"));
        }
        let name = parts.pop().expect("non-empty");
        Ok(ColumnRef {
            qualifier: parts,
            name,
        })
    }

    /// An assigned value: a literal, a scalar sub-query or (internal SQL only) a variable.
    fn value(&mut self) -> PResult<Expr> {
        let start = self.pos;
        let expr = self.expr()?;
        let ok = match &expr {
            Expr::Literal(Literal::Bool(_)) => false,
            Expr::Literal(_) | Expr::Subquery(_) | Expr::Variable(_) => true,
            Expr::Unary {
                op: UnaryOp::Minus | UnaryOp::Plus,
                expr,
            } => matches!(expr.as_ref(), Expr::Literal(Literal::Number(_))),
            _ => self.mode == ParseMode::Internal,
        };
        if !ok {
            self.pos = start;
            return Err(self.syntax("assigned values must be literals or scalar sub-queries"));
        }
        Ok(expr)
    }

    // ---------------------------------------------------------------- expressions

    pub fn expr(&mut self) -> PResult<Expr> {
        self.enter()?;
        let r = self.or_expr();
        self.leave();
        r
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut left = self.and_expr()?;
        while self.eat_word("OR") {
            let right = self.and_expr()?;
            left = Expr::Binary {
                left: Box::new(left),
                op: BinaryOp::Or,
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut left = self.not_expr()?;
        while self.eat_word("AND") {
            let right = self.not_expr()?;
            left = Expr::Binary {
                left: Box::new(left),
                op: BinaryOp::And,
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_word("NOT") {
            self.enter()?;
            let expr = self.not_expr()?;
            self.leave();
            return Ok(Expr::Unary {
                op: UnaryOp::Not,
                expr: Box::new(expr),
            });
        }
        self.predicate()
    }

    fn predicate(&mut self) -> PResult<Expr> {
        let left = self.additive()?;
        let tok = match self.peek() {
            Some(t) => t,
            None => return Ok(left),
        };
        if tok.kind == TokenKind::Op {
            let op = match tok.text.as_str() {
                "=" => Some(BinaryOp::Eq),
                "<>" | "!=" => Some(BinaryOp::NotEq),
                "<" => Some(BinaryOp::Lt),
                "<=" => Some(BinaryOp::LtEq),
                ">" => Some(BinaryOp::Gt),
                ">=" => Some(BinaryOp::GtEq),
                _ => None,
            };
            if let Some(op) = op {
                self.pos += 1;
                let right = self.additive()?;
                return Ok(Expr::Binary {
                    left: Box::new(left),
                    op,
                    right: Box::new(right),
                });
            }
            return Ok(left);
        }
        if self.eat_word("IS") {
            let negated = self.eat_word("NOT");
            self.expect_word("NULL")?;
            return Ok(Expr::IsNull {
                expr: Box::new(left),
                negated,
            });
        }
        let negated = if self.peek_word("NOT")
            && self
                .peek_at(1)
                .is_some_and(|t| t.is_word("IN") || t.is_word("LIKE") || t.is_word("BETWEEN"))
        {
            self.pos += 1;
            true
        } else {
            false
        };
        if self.eat_word("IN") {
            self.expect_kind(TokenKind::LParen, "'(' after IN")?;
            if self.peek_word("SELECT") {
                let subquery = self.select()?;
                self.expect_kind(TokenKind::RParen, "')'")?;
                return Ok(Expr::InSubquery {
                    expr: Box::new(left),
                    negated,
                    subquery: Box::new(subquery),
                });
            }
            let mut list = vec![self.expr()?];
            while self.eat_kind(TokenKind::Comma) {
                list.push(self.expr()?);
            }
            self.expect_kind(TokenKind::RParen, "')'")?;
            return Ok(Expr::InList {
                expr: Box::new(left),
                negated,
                list,
            });
        }
        if self.eat_word("LIKE") {
            let pattern = self.additive()?;
            return Ok(Expr::Like {
                expr: Box::new(left),
                negated,
                pattern: Box::new(pattern),
            });
        }
        if self.eat_word("BETWEEN") {
            let low = self.additive()?;
            self.expect_word("AND")?;
            let high = self.additive()?;
            return Ok(Expr::Between {
                expr: Box::new(left),
                negated,
                low: Box::new(low),
                high: Box::new(high),
            });
        }
        if negated {
            return Err(self.syntax("expected IN, LIKE or BETWEEN after NOT"));
        }
        Ok(left)
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut left = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Some(t) if t.is_op("+") => BinaryOp::Plus,
                Some(t) if t.is_op("-") => BinaryOp::Minus,
                Some(t) if t.is_op("||") => BinaryOp::Concat,
                _ => break,
            };
            self.pos += 1;
            let right = self.multiplicative()?;
            left = Expr::Binary {
                left: Box::new(left),
                op,
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut left = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(t) if t.is_op("*") => BinaryOp::Mul,
                Some(t) if t.is_op("/") => BinaryOp::Div,
                Some(t) if t.is_op("%") => BinaryOp::Mod,
                _ => break,
            };
            self.pos += 1;
            let right = self.unary()?;
            left = Expr::Binary {
                left: Box::new(left),
                op,
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let op = match self.peek() {
            Some(t) if t.is_op("-") => Some(UnaryOp::Minus),
            Some(t) if t.is_op("+") => Some(UnaryOp::Plus),
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            self.enter()?;
            let expr = self.unary()?;
            self.leave();
            return Ok(Expr::Unary {
                op,
                expr: Box::new(expr),
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let tok = match self.peek() {
            Some(t) => t,
            None => return Err(self.syntax("expected expression")),
        };
        match tok.kind {
            TokenKind::Number => {
                self.pos += 1;
                Ok(Expr::Literal(Literal::Number(tok.text.clone())))
            }
            TokenKind::String => {
                self.pos += 1;
                Ok(Expr::Literal(Literal::String(tok.text.clone())))
            }
            TokenKind::Variable => {
                if self.mode == ParseMode::Requester {
                    return Err(SqlError::ReservedVariable {
                        statement: self.statement,
                        token: tok.text.clone(),
                        offset: tok.span.start,
                    });
                }
                self.pos += 1;
                Ok(Expr::Variable(tok.text.clone()))
            }
            TokenKind::LParen => {
                self.pos += 1;
                if self.peek_word("SELECT") {
                    let sub = self.select()?;
                    self.expect_kind(TokenKind::RParen, "')'")?;
                    Ok(Expr::Subquery(Box::new(sub)))
                } else {
                    let inner = self.expr()?;
                    self.expect_kind(TokenKind::RParen, "')'")?;
                    Ok(Expr::Nested(Box::new(inner)))
                }
            }
            TokenKind::Word if tok.is_word("NULL") => {
                self.pos += 1;
                Ok(Expr::Literal(Literal::Null))
            }
            TokenKind::Word if tok.is_word("TRUE") || tok.is_word("FALSE") => {
                self.pos += 1;
                Ok(Expr::Literal(Literal::Bool(tok.is_word("TRUE"))))
            }
            TokenKind::Word if tok.is_word("EXISTS") => {
                self.pos += 1;
                self.expect_kind(TokenKind::LParen, "'(' after EXISTS")?;
                let sub = self.select()?;
                self.expect_kind(TokenKind::RParen, "')'")?;
                Ok(Expr::Exists {
                    negated: false,
                    subquery: Box::new(sub),
                })
            }
            TokenKind::Word if tok.is_word("CASE") => self.case_expr(),
            TokenKind::Word | TokenKind::QuotedIdent if self.at_ident() => {
                if tok.kind == TokenKind::Word
                    && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::LParen)
                {
                    return self.function();
                }
                self.column_ref().map(Expr::Column)
            }
            _ => Err(self.syntax("expected expression")),
        }
    }

    fn function(&mut self) -> PResult<Expr> {
        let name = self.ident()?;
        if self.mode == ParseMode::Requester
            && !USER_FUNCTIONS
                .iter()
                .any(|f| f.eq_ignore_ascii_case(&name.value))
        {
            self.pos -= 1;
            return Err(self.unsupported(format!("function {} is not supported", name.value)));
        }
        self.expect_kind(TokenKind::LParen, "'('")?;
        if self.peek().is_some_and(|t| t.is_op("*")) {
            self.pos += 1;
            self.expect_kind(TokenKind::RParen, "')'")?;
            return Ok(Expr::Function {
                name,
                distinct: false,
                args: FunctionArgs::Star,
            });
        }
        let distinct = self.eat_word("DISTINCT");
        let mut args = Vec::new();
        if !self.eat_kind(TokenKind::RParen) {
            args.push(self.expr()?);
            while self.eat_kind(TokenKind::Comma) {
                args.push(self.expr()?);
            }
            self.expect_kind(TokenKind::RParen, "')'")?;
        }
        Ok(Expr::Function {
            name,
            distinct,
            args: FunctionArgs::List(args),
        })
    }

    fn case_expr(&mut self) -> PResult<Expr> {
        self.expect_word("CASE")?;
        let operand = if self.peek_word("WHEN") {
            None
        } else {
            Some(Box::new(self.expr()?))
        };
        let mut branches = Vec::new();
        while self.eat_word("WHEN") {
            let cond = self.expr()?;
            self.expect_word("THEN")?;
            let then = self.expr()?;
            branches.push((cond, then));
        }
        if branches.is_empty() {
            return Err(self.syntax("CASE requires at least one WHEN"));
        }
        let otherwise = if self.eat_word("ELSE") {
            Some(Box::new(self.expr()?))
        } else {
            None
        };
        self.expect_word("END")?;
        Ok(Expr::Case {
            operand,
            branches,
            otherwise,
        })
    }
}
