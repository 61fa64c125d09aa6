use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    /// Bare word: keyword or identifier.
    Word,
    /// Back-tick or double-quoted identifier, `text` holds the unquoted name.
    QuotedIdent,
    /// Single-quoted string literal, `text` holds the unescaped value.
    String,
    Number,
    /// `@name` session variable, `text` includes the `@`.
    Variable,
    Op,
    LParen,
    RParen,
    Comma,
    Dot,
    Semicolon,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Range<usize>,
}

impl Token {
    pub fn is_word(&self, kw: &str) -> bool {
        self.kind == TokenKind::Word && self.text.eq_ignore_ascii_case(kw)
    }

    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokenKind::Op && self.text == op
    }

    /// Text as it would appear in SQL, used in error messages.
    pub fn display(&self) -> String {
        match self.kind {
            TokenKind::String => format!("'{}'", self.text.replace('\'', "''")),
            TokenKind::QuotedIdent => format!("`{}`", self.text),
            _ => self.text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub offset: usize,
    pub message: String,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || (!c.is_ascii() && !c.is_whitespace())
}

fn is_ident_char(c: char) -> bool {
    is_ident_start(c) || c.is_ascii_digit() || c == '$'
}

/// Splits SQL text into tokens. Comments (`--`, `#`, `/* */`) and whitespace are dropped.
pub fn tokenize(input: &str) -> Result<Vec<Token>, LexError> {
    let mut tokens = Vec::new();
    let mut chars = input.char_indices().peekable();

    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        // comments
        if c == '-' && input[start..].starts_with("--") || c == '#' {
            while let Some(&(_, c)) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
            continue;
        }
        if c == '/' && input[start..].starts_with("/*") {
            match input[start + 2..].find("*/") {
                Some(end) => {
                    let stop = start + 2 + end + 2;
                    while let Some(&(i, _)) = chars.peek() {
                        if i >= stop {
                            break;
                        }
                        chars.next();
                    }
                    continue;
                }
                None => {
                    return Err(LexError {
                        offset: start,
                        message: "unterminated comment".into(),
                    })
                }
            }
        }

        let simple = |kind: TokenKind, len: usize| Token {
            kind,
            text: input[start..start + len].to_string(),
            span: start..start + len,
        };

        match c {
            '(' => {
                chars.next();
                tokens.push(simple(TokenKind::LParen, 1));
            }
            ')' => {
                chars.next();
                tokens.push(simple(TokenKind::RParen, 1));
            }
            ',' => {
                chars.next();
                tokens.push(simple(TokenKind::Comma, 1));
            }
            ';' => {
                chars.next();
                tokens.push(simple(TokenKind::Semicolon, 1));
            }
            '.' if !matches!(input[start + 1..].chars().next(), Some(d) if d.is_ascii_digit()) => {
                chars.next();
                tokens.push(simple(TokenKind::Dot, 1));
            }
            '\'' => {
                chars.next();
                let mut value = String::new();
                let mut closed = false;
                while let Some((_, c)) = chars.next() {
                    if c == '\'' {
                        if matches!(chars.peek(), Some(&(_, '\''))) {
                            chars.next();
                            value.push('\'');
                        } else {
                            closed = true;
                            break;
                        }
                    } else {
                        value.push(c);
                    }
                }
                if !closed {
                    return Err(LexError {
                        offset: start,
                        message: "unterminated string literal".into(),
                    });
                }
                let end = chars.peek().map_or(input.len(), |&(i, _)| i);
                tokens.push(Token {
                    kind: TokenKind::String,
                    text: value,
                    span: start..end,
                });
            }
            '`' | '"' => {
                let quote = c;
                chars.next();
                let mut value = String::new();
                let mut closed = false;
                while let Some((_, c)) = chars.next() {
                    if c == quote {
                        if matches!(chars.peek(), Some(&(_, q)) if q == quote) {
                            chars.next();
                            value.push(quote);
                        } else {
                            closed = true;
                            break;
                        }
                    } else {
                        value.push(c);
                    }
                }
                if !closed || value.is_empty() {
                    return Err(LexError {
                        offset: start,
                        message: "unterminated or empty quoted identifier".into(),
                    });
                }
                let end = chars.peek().map_or(input.len(), |&(i, _)| i);
                tokens.push(Token {
                    kind: TokenKind::QuotedIdent,
                    text: value,
                    span: start..end,
                });
            }
            '@' => {
                chars.next();
                let mut end = start + 1;
                while let Some(&(i, c)) = chars.peek() {
                    if is_ident_char(c) {
                        chars.next();
                        end = i + c.len_utf8();
                    } else {
                        break;
                    }
                }
                if end == start + 1 {
                    return Err(LexError {
                        offset: start,
                        message: "expected variable name after '@'".into(),
                    });
                }
                tokens.push(simple(TokenKind::Variable, end - start));
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut end = start;
                let mut seen_dot = false;
                let mut seen_exp = false;
                while let Some(&(i, c)) = chars.peek() {
                    let accept = c.is_ascii_digit()
                        || (c == '.' && !seen_dot && !seen_exp)
                        || ((c == 'e' || c == 'E') && !seen_exp);
                    if !accept {
                        break;
                    }
                    if c == '.' {
                        seen_dot = true;
                    }
                    if c == 'e' || c == 'E' {
                        seen_exp = true;
                        chars.next();
                        end = i + 1;
                        if let Some(&(j, s)) = chars.peek() {
                            if s == '+' || s == '-' {
                                chars.next();
                                end = j + 1;
                            }
                        }
                        continue;
                    }
                    chars.next();
                    end = i + 1;
                }
                if let Some(&(_, c)) = chars.peek() {
                    if is_ident_start(c) {
                        return Err(LexError {
                            offset: start,
                            message: "malformed number".into(),
                        });
                    }
                }
                tokens.push(simple(TokenKind::Number, end - start));
            }
            c if is_ident_start(c) => {
                let mut end = start;
                while let Some(&(i, c)) = chars.peek() {
                    if is_ident_char(c) {
                        chars.next();
                        end = i + c.len_utf8();
                    } else {
                        break;
                    }
                }
                tokens.push(simple(TokenKind::Word, end - start));
            }
            _ => {
                let two = input[start..].get(..2).unwrap_or("");
                let len = match two {
                    "<=" | ">=" | "<>" | "!=" | "||" => 2,
                    _ => match c {
                        '=' | '<' | '>' | '+' | '-' | '*' | '/' | '%' => 1,
                        _ => {
                            return Err(LexError {
                                offset: start,
                                message: format!("unexpected character '{c}'"),
                            })
                        }
                    },
                };
                for _ in 0..len {
                    chars.next();
                }
                tokens.push(simple(TokenKind::Op, len));
            }
        }
    }
    Ok(tokens)
}
