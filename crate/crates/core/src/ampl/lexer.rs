use super::error::{CompileError, CompileErrorKind, Location};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    Semi,
    Colon,
    Assign,
    Comma,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Ge,
    Le,
    Eq,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Str(s) => format!("string '{s}'"),
            Tok::Semi => "';'".into(),
            Tok::Colon => "':'".into(),
            Tok::Assign => "':='".into(),
            Tok::Comma => "','".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Ge => "'>='".into(),
            Tok::Le => "'<='".into(),
            Tok::Eq => "'='".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub loc: Location,
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn rest(&mut self) -> &'a str {
        match self.chars.peek() {
            Some(&(i, _)) => &self.src[i..],
            None => "",
        }
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn loc(&self) -> Location {
        Location {
            line: self.line,
            column: self.column,
        }
    }
}

/// Tokenizes a model or data document. `#` starts a comment running to end of line.
pub fn tokenize(src: &str) -> Result<Vec<Token>, CompileError> {
    let mut cur = Cursor {
        chars: src.char_indices().peekable(),
        src,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        while let Some(c) = cur.peek() {
            if c.is_whitespace() {
                cur.bump();
            } else if c == '#' {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            } else {
                break;
            }
        }
        let loc = cur.loc();
        let Some(c) = cur.peek() else {
            out.push(Token { tok: Tok::Eof, loc });
            return Ok(out);
        };
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            if cur.rest().starts_with("s.t.") {
                for _ in 0..4 {
                    cur.bump();
                }
                Tok::Ident("s.t.".into())
            } else {
                let mut s = String::new();
                while let Some(c) = cur.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
        } else if c.is_ascii_digit() || (c == '.' && cur.rest()[1..].starts_with(|d: char| d.is_ascii_digit())) {
            lex_number(&mut cur, loc)?
        } else if c == '\'' || c == '"' {
            cur.bump();
            let mut s = String::new();
            loop {
                match cur.bump() {
                    Some(q) if q == c => break,
                    Some('\n') | None => {
                        return Err(CompileError::at(CompileErrorKind::Lex, loc, "unterminated string literal"))
                    }
                    Some(ch) => s.push(ch),
                }
            }
            Tok::Str(s)
        } else {
            cur.bump();
            match c {
                ';' => Tok::Semi,
                ':' => {
                    if cur.peek() == Some('=') {
                        cur.bump();
                        Tok::Assign
                    } else {
                        Tok::Colon
                    }
                }
                ',' => Tok::Comma,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '>' | '<' => {
                    if cur.peek() == Some('=') {
                        cur.bump();
                        if c == '>' {
                            Tok::Ge
                        } else {
                            Tok::Le
                        }
                    } else {
                        return Err(CompileError::at(
                            CompileErrorKind::Lex,
                            loc,
                            format!("strict inequality '{c}' is not supported; use '{c}='"),
                        ));
                    }
                }
                '=' => {
                    if cur.peek() == Some('=') {
                        cur.bump();
                    }
                    Tok::Eq
                }
                other => {
                    return Err(CompileError::at(
                        CompileErrorKind::Lex,
                        loc,
                        format!("unexpected character '{other}'"),
                    ))
                }
            }
        };
        out.push(Token { tok, loc });
    }
}

fn lex_number(cur: &mut Cursor<'_>, loc: Location) -> Result<Tok, CompileError> {
    let mut s = String::new();
    while let Some(c) = cur.peek() {
        if c.is_ascii_digit() || c == '.' {
            s.push(c);
            cur.bump();
        } else {
            break;
        }
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let rest = cur.rest();
        let after = &rest[1..];
        let exp_ok = after.starts_with(|d: char| d.is_ascii_digit())
            || ((after.starts_with('+') || after.starts_with('-'))
                && after[1..].starts_with(|d: char| d.is_ascii_digit()));
        if exp_ok {
            s.push('e');
            cur.bump();
            if let Some(sign @ ('+' | '-')) = cur.peek() {
                s.push(sign);
                cur.bump();
            }
            while let Some(c) = cur.peek() {
                if c.is_ascii_digit() {
                    s.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
        }
    }
    if let Some(c) = cur.peek() {
        if c.is_ascii_alphabetic() || c == '_' {
            return Err(CompileError::at(
                CompileErrorKind::Lex,
                loc,
                format!("malformed number '{s}{c}...'"),
            ));
        }
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Tok::Number(v)),
        _ => Err(CompileError::at(CompileErrorKind::Lex, loc, format!("malformed number '{s}'"))),
    }
}
