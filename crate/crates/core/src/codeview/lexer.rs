//! Token-level reading of Python code cells.
//!
//! This is not a parser. It splits a cell into logical lines (joining
//! bracketed and backslash-continued physical lines), records indentation,
//! and produces names, strings, numbers and operators. IPython magics and
//! shell escapes (`%`, `!`, `?` at the start of a statement) are skipped.

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Number,
    /// String literal. For f-strings, the tokens of the embedded expressions.
    Str(Vec<Tok>),
    Op(String),
}

impl Tok {
    pub fn is_op(&self, op: &str) -> bool {
        matches!(self, Tok::Op(o) if o == op)
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Tok::Name(n) => Some(n),
            _ => None,
        }
    }

    pub fn is_name(&self, word: &str) -> bool {
        self.name() == Some(word)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogicalLine {
    pub indent: usize,
    /// 1-based physical line where the statement starts.
    pub line: usize,
    pub tokens: Vec<Tok>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {reason}")]
pub struct LexError {
    pub line: usize,
    pub reason: String,
}

pub const KEYWORDS: [&str; 35] = [
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

const MULTI_OPS: [&str; 25] = [
    "**=", "//=", ">>=", "<<=", "...", "!=", "==", "<=", ">=", "->", ":=", "+=", "-=", "*=", "/=", "%=", "&=", "|=",
    "^=", "@=", "**", "//", "<<", ">>", "<>",
];

const STRING_PREFIXES: [&str; 8] = ["r", "u", "b", "f", "br", "rb", "fr", "rf"];

pub fn lex(source: &str) -> Result<Vec<LogicalLine>, LexError> {
    Lexer::new(source).run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    depth: usize,
    at_line_start: bool,
    lines: Vec<LogicalLine>,
    current: Vec<Tok>,
    current_indent: usize,
    current_line: usize,
}

impl Lexer {
    fn new(source: &str) -> Self {
        Lexer {
            chars: source.chars().collect(),
            pos: 0,
            line: 1,
            depth: 0,
            at_line_start: true,
            lines: Vec::new(),
            current: Vec::new(),
            current_indent: 0,
            current_line: 1,
        }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn err(&self, reason: impl Into<String>) -> LexError {
        LexError { line: self.line, reason: reason.into() }
    }

    fn skip_to_eol(&mut self) {
        while let Some(c) = self.peek(0) {
            if c == '\n' {
                break;
            }
            self.pos += 1;
        }
    }

    fn finish_line(&mut self) {
        if !self.current.is_empty() {
            self.lines.push(LogicalLine {
                indent: self.current_indent,
                line: self.current_line,
                tokens: std::mem::take(&mut self.current),
            });
        }
    }

    fn run(mut self) -> Result<Vec<LogicalLine>, LexError> {
        loop {
            if self.at_line_start && self.depth == 0 {
                let mut indent = 0;
                while let Some(c) = self.peek(0) {
                    match c {
                        ' ' => indent += 1,
                        '\t' => indent = (indent / 8 + 1) * 8,
                        '\x0c' | '\r' => {}
                        _ => break,
                    }
                    self.pos += 1;
                }
                match self.peek(0) {
                    None => break,
                    Some('\n') => {
                        self.pos += 1;
                        self.line += 1;
                        continue;
                    }
                    Some('#') => {
                        self.skip_to_eol();
                        continue;
                    }
                    Some('%' | '!' | '?') => {
                        self.skip_to_eol();
                        continue;
                    }
                    Some(_) => {}
                }
                self.current_indent = indent;
                self.current_line = self.line;
                self.at_line_start = false;
            }

            let Some(c) = self.peek(0) else { break };
            match c {
                '\n' => {
                    self.pos += 1;
                    self.line += 1;
                    if self.depth == 0 {
                        self.finish_line();
                        self.at_line_start = true;
                    }
                }
                ' ' | '\t' | '\r' | '\x0c' => self.pos += 1,
                '#' => self.skip_to_eol(),
                '\\' => {
                    self.pos += 1;
                    if self.peek(0) == Some('\r') {
                        self.pos += 1;
                    }
                    if self.peek(0) == Some('\n') {
                        self.pos += 1;
                        self.line += 1;
                    } else {
                        return Err(self.err("stray backslash"));
                    }
                }
                '"' | '\'' => {
                    let tok = self.string(false, false)?;
                    self.current.push(tok);
                }
                c if c.is_ascii_digit() || (c == '.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) => {
                    self.number();
                }
                c if c.is_alphabetic() || c == '_' => {
                    let word = self.word();
                    let lower = word.to_ascii_lowercase();
                    if STRING_PREFIXES.contains(&lower.as_str()) && matches!(self.peek(0), Some('"' | '\'')) {
                        let tok = self.string(lower.contains('r'), lower.contains('f'))?;
                        self.current.push(tok);
                    } else {
                        self.current.push(Tok::Name(word));
                    }
                }
                _ => self.op()?,
            }
        }
        if self.depth > 0 {
            return Err(self.err("unclosed bracket at end of cell"));
        }
        self.finish_line();
        Ok(self.lines)
    }

    fn word(&mut self) -> String {
        let start = self.pos;
        while self.peek(0).is_some_and(|c| c.is_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn number(&mut self) {
        while let Some(c) = self.peek(0) {
            if c.is_alphanumeric() || c == '_' || c == '.' {
                self.pos += 1;
                if matches!(c, 'e' | 'E') && matches!(self.peek(0), Some('+' | '-')) {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
        self.current.push(Tok::Number);
    }

    fn op(&mut self) -> Result<(), LexError> {
        for op in MULTI_OPS {
            let n = op.chars().count();
            if self.chars.len() >= self.pos + n && self.chars[self.pos..self.pos + n].iter().copied().eq(op.chars()) {
                self.pos += n;
                self.current.push(Tok::Op(op.to_owned()));
                return Ok(());
            }
        }
        let c = self.chars[self.pos];
        self.pos += 1;
        match c {
            '(' | '[' | '{' => self.depth += 1,
            ')' | ']' | '}' => {
                if self.depth == 0 {
                    return Err(self.err(format!("unbalanced `{c}`")));
                }
                self.depth -= 1;
            }
            _ => {}
        }
        self.current.push(Tok::Op(c.to_string()));
        Ok(())
    }

    fn string(&mut self, _raw: bool, fstring: bool) -> Result<Tok, LexError> {
        let quote = self.chars[self.pos];
        let triple = self.peek(1) == Some(quote) && self.peek(2) == Some(quote);
        self.pos += if triple { 3 } else { 1 };
        let start_line = self.line;
        let mut body = String::new();
        loop {
            let Some(c) = self.peek(0) else {
                return Err(LexError { line: start_line, reason: "unterminated string".into() });
            };
            match c {
                '\\' => {
                    body.push(c);
                    self.pos += 1;
                    if let Some(next) = self.peek(0) {
                        if next == '\n' {
                            self.line += 1;
                        }
                        body.push(next);
                        self.pos += 1;
                    }
                }
                '\n' if !triple => {
                    return Err(LexError { line: start_line, reason: "unterminated string".into() });
                }
                '\n' => {
                    self.line += 1;
                    body.push(c);
                    self.pos += 1;
                }
                c if c == quote => {
                    if !triple {
                        self.pos += 1;
                        break;
                    }
                    if self.peek(1) == Some(quote) && self.peek(2) == Some(quote) {
                        self.pos += 3;
                        break;
                    }
                    body.push(c);
                    self.pos += 1;
                }
                _ => {
                    body.push(c);
                    self.pos += 1;
                }
            }
        }
        let inner = if fstring { fstring_tokens(&body) } else { Vec::new() };
        Ok(Tok::Str(inner))
    }
}

/// Tokens of the replacement fields of an f-string body. Format specs are
/// dropped except for their own nested fields. Fields that fail to lex are
/// ignored.
fn fstring_tokens(body: &str) -> Vec<Tok> {
    let mut out = Vec::new();
    for expr in fstring_fields(body) {
        if let Ok(lines) = lex(&expr) {
            for line in lines {
                out.extend(line.tokens);
            }
        }
    }
    out
}

fn fstring_fields(body: &str) -> Vec<String> {
    let chars: Vec<char> = body.chars().collect();
    let mut fields = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        match chars[i] {
            '{' if chars.get(i + 1) == Some(&'{') => i += 2,
            '{' => {
                let mut depth = 1;
                let mut j = i + 1;
                let mut cut: Option<usize> = None;
                while j < chars.len() && depth > 0 {
                    match chars[j] {
                        '{' | '[' | '(' => depth += 1,
                        '}' | ']' | ')' => depth -= 1,
                        ':' if depth == 1 && cut.is_none() && chars.get(j + 1) != Some(&'=') => cut = Some(j),
                        '!' if depth == 1 && cut.is_none() && chars.get(j + 1) != Some(&'=') => cut = Some(j),
                        _ => {}
                    }
                    j += 1;
                }
                let end = j.saturating_sub(1).max(i + 1);
                let expr_end = cut.unwrap_or(end).min(end);
                fields.push(chars[i + 1..expr_end].iter().collect());
                if let Some(c) = cut {
                    let spec: String = chars[c + 1..end].iter().collect();
                    fields.extend(fstring_fields(&spec));
                }
                i = j;
            }
            _ => i += 1,
        }
    }
    fields
}
