//! SQL frontend: tokenizer, parser for the supported statement subset, canonical
//! renderer and the per-statement analysis consumed by the rewriter.

pub mod analysis;
pub mod ast;
mod error;
mod lexer;
mod parser;
pub mod render;

pub use analysis::{
    ColumnCatalog, FieldRef, LiteralKind, NoCatalog, Projection, StatementAnalysis, ValueExpr,
};
pub use ast::{Statement, StatementKind};
pub use error::SqlError;
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::ParseMode;
pub use render::Dialect;

use ast::Select;
use parser::Parser;

/// A parsed request: the raw text and one analysis per statement.
#[derive(Debug, Clone)]
pub struct SqlScript {
    pub raw_text: String,
    pub statements: Vec<StatementAnalysis>,
    /// Verbatim source text of each statement, without the terminating semicolon.
    pub sources: Vec<String>,
}

impl PartialEq for SqlScript {
    fn eq(&self, other: &Self) -> bool {
        self.statements == other.statements
    }
}

impl SqlScript {
    /// Canonical text of the whole script.
    pub fn render(&self) -> String {
        self.statements
            .iter()
            .map(render)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn statement_index_at(tokens: &[Token], offset: usize) -> usize {
    tokens
        .iter()
        .take_while(|t| t.span.start < offset)
        .filter(|t| t.kind == TokenKind::Semicolon)
        .count()
}

/// Parses requester SQL: one or more `;`-separated SHOW/SELECT/INSERT/UPDATE statements.
pub fn parse_script(text: &str) -> Result<SqlScript, SqlError> {
    parse_script_with(text, ParseMode::Requester)
}

pub fn parse_script_with(text: &str, mode: ParseMode) -> Result<SqlScript, SqlError> {
    if text.trim().is_empty() {
        return Err(SqlError::Empty);
    }
    let tokens = tokenize(text).map_err(|e| {
        // statement index is approximate here: count separators lexed so far
        let partial = tokenize(&text[..e.offset]).unwrap_or_default();
        SqlError::Syntax {
            statement: statement_index_at(&partial, e.offset),
            token: text[e.offset..].chars().take(12).collect(),
            offset: e.offset,
            message: e.message,
        }
    })?;

    let mut statements = Vec::new();
    let mut sources = Vec::new();
    let mut rest: &[Token] = &tokens;
    let mut index = 0;
    while !rest.is_empty() {
        if rest[0].kind == TokenKind::Semicolon {
            rest = &rest[1..];
            continue;
        }
        let mut parser = Parser::new(rest, mode, index, text.len());
        let stmt = parser.statement()?;
        let used = parser.position();
        match rest.get(used) {
            None => {}
            Some(t) if t.kind == TokenKind::Semicolon => {}
            Some(t) => {
                let kw = t.text.to_ascii_uppercase();
                let err = if ["UNION", "INTERSECT", "EXCEPT"].contains(&kw.as_str()) {
                    parser.unsupported("set operations are not supported")
                } else {
                    parser.syntax("unexpected token after end of statement")
                };
                return Err(err);
            }
        }
        let start = rest[0].span.start;
        let end = rest[used - 1].span.end;
        sources.push(text[start..end].to_string());
        statements.push(StatementAnalysis::analyze(stmt, &NoCatalog));
        rest = &rest[used..];
        index += 1;
    }
    if statements.is_empty() {
        return Err(SqlError::Empty);
    }
    Ok(SqlScript {
        raw_text: text.to_string(),
        statements,
        sources,
    })
}

/// Parses exactly one statement (a trailing `;` is allowed).
pub fn parse_statement(text: &str, mode: ParseMode) -> Result<Statement, SqlError> {
    let script = parse_script_with(text, mode)?;
    if script.statements.len() != 1 {
        return Err(SqlError::Syntax {
            statement: 1,
            token: String::new(),
            offset: 0,
            message: "expected a single statement".into(),
        });
    }
    Ok(script.statements.into_iter().next().expect("one").statement)
}

/// Parses a single SELECT, e.g. the body of a rule sub-query.
pub fn parse_select(text: &str, mode: ParseMode) -> Result<Select, SqlError> {
    match parse_statement(text, mode)? {
        Statement::Select(s) => Ok(s),
        other => Err(SqlError::Syntax {
            statement: 0,
            token: other.kind().to_string(),
            offset: 0,
            message: "expected a SELECT statement".into(),
        }),
    }
}

/// `SET @var = <expr>;` as emitted by the rewriter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetStatement {
    pub variable: String,
    pub value: ast::Expr,
}

impl SetStatement {
    pub fn render(&self, dialect: Dialect) -> String {
        format!(
            "SET {} = {};",
            self.variable,
            render::render_expr(&self.value, dialect)
        )
    }
}

pub fn parse_set(text: &str) -> Result<SetStatement, SqlError> {
    let syntax = |offset: usize, message: &str| SqlError::Syntax {
        statement: 0,
        token: text.get(offset..).unwrap_or("").chars().take(12).collect(),
        offset,
        message: message.into(),
    };
    let tokens = tokenize(text).map_err(|e| syntax(e.offset, &e.message))?;
    let head_ok = tokens.len() > 3
        && tokens[0].is_word("SET")
        && tokens[1].kind == TokenKind::Variable
        && tokens[2].is_op("=");
    if !head_ok {
        return Err(syntax(0, "expected SET @variable = expression"));
    }
    let rest = &tokens[3..];
    let mut parser = Parser::new(rest, ParseMode::Internal, 0, text.len());
    let value = parser.expr()?;
    let used = parser.position();
    match &rest[used..] {
        [] => {}
        [t] if t.kind == TokenKind::Semicolon => {}
        [t, ..] => {
            return Err(syntax(
                t.span.start,
                "unexpected token after SET expression",
            ))
        }
    }
    Ok(SetStatement {
        variable: tokens[1].text.clone(),
        value,
    })
}

/// Canonical text of an analyzed statement, terminated by a single semicolon.
pub fn render(stmt: &StatementAnalysis) -> String {
    render::render_statement(&stmt.statement, Dialect::Canonical)
}

/// Token sequence of SQL text with keyword case folded, for whitespace-insensitive comparison.
pub fn normalized_tokens(text: &str) -> Result<Vec<String>, SqlError> {
    let tokens = tokenize(text).map_err(|e| SqlError::Syntax {
        statement: 0,
        token: String::new(),
        offset: e.offset,
        message: e.message,
    })?;
    Ok(tokens
        .into_iter()
        .map(|t| match t.kind {
            TokenKind::Word if parser::is_reserved(&t.text) => t.text.to_ascii_uppercase(),
            _ => t.display(),
        })
        .collect())
}
