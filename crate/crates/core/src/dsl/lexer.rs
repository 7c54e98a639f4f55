use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::DslError;

/// 1-based line/column of a token's first character; `len` is in chars.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
    pub len: usize,
}

impl Span {
    /// Whether a location falls inside this span. Zero-width spans (end of
    /// input) contain only their own start.
    pub fn contains(&self, line: usize, column: usize) -> bool {
        line == self.line && column >= self.column && column < self.column + self.len.max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Var,
    Input,
    Output,
    Range,
    Resolution,
    Rule,
    If,
    Is,
    And,
    Then,
}

pub const KEYWORDS: &[(&str, Keyword)] = &[
    ("var", Keyword::Var),
    ("input", Keyword::Input),
    ("output", Keyword::Output),
    ("range", Keyword::Range),
    ("resolution", Keyword::Resolution),
    ("rule", Keyword::Rule),
    ("IF", Keyword::If),
    ("IS", Keyword::Is),
    ("AND", Keyword::And),
    ("THEN", Keyword::Then),
];

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    Kw(Keyword),
    Colon,
    LBrace,
    RBrace,
    Equals,
    LParen,
    RParen,
    Comma,
    Newline,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Number(n) => write!(f, "number `{n}`"),
            Tok::Kw(k) => {
                let word = KEYWORDS.iter().find(|(_, kw)| kw == k).map(|(w, _)| *w).unwrap_or("?");
                write!(f, "`{word}`")
            }
            Tok::Colon => f.write_str("`:`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Equals => f.write_str("`=`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Newline => f.write_str("end of line"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// `[a-z_][a-z0-9_]*`, not a keyword.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    let head_ok = matches!(chars.next(), Some('a'..='z' | '_'));
    head_ok && chars.all(|c| matches!(c, 'a'..='z' | '0'..='9' | '_')) && !KEYWORDS.iter().any(|(w, _)| *w == s)
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        let start = Span { line, column: col, len: 1 };
        match c {
            '\n' => {
                out.push(Token { tok: Tok::Newline, span: start });
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            ' ' | '\t' | '\r' => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                    col += 1;
                }
                continue;
            }
            ':' | '{' | '}' | '=' | '(' | ')' | ',' => {
                let tok = match c {
                    ':' => Tok::Colon,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '=' => Tok::Equals,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    _ => Tok::Comma,
                };
                out.push(Token { tok, span: start });
            }
            '-' | '0'..='9' => {
                let mut j = i;
                if chars[j] == '-' {
                    j += 1;
                }
                let int_start = j;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let mut ok = j > int_start;
                if ok && j < chars.len() && chars[j] == '.' {
                    let frac_start = j + 1;
                    j = frac_start;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    ok = j > frac_start;
                }
                let text: String = chars[i..j].iter().collect();
                let span = Span { len: j - i, ..start };
                let value = if ok { text.parse::<f64>().ok() } else { None };
                match value {
                    Some(v) => out.push(Token { tok: Tok::Number(v), span }),
                    None => {
                        return Err(DslError::Syntax {
                            line: span.line,
                            column: span.column,
                            expected: alloc::vec!["number"],
                            found: alloc::format!("`{text}`"),
                        })
                    }
                }
                col += j - i;
                i = j;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let span = Span { len: j - i, ..start };
                let tok = if let Some((_, kw)) = KEYWORDS.iter().find(|(w, _)| *w == word) {
                    Tok::Kw(*kw)
                } else if is_identifier(&word) {
                    Tok::Ident(word)
                } else {
                    return Err(DslError::Syntax {
                        line: span.line,
                        column: span.column,
                        expected: alloc::vec!["identifier matching [a-z_][a-z0-9_]*"],
                        found: alloc::format!("`{word}`"),
                    });
                };
                out.push(Token { tok, span });
                col += j - i;
                i = j;
                continue;
            }
            other => {
                return Err(DslError::Syntax {
                    line,
                    column: col,
                    expected: alloc::vec!["token"],
                    found: alloc::format!("`{other}`"),
                })
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Token { tok: Tok::Eof, span: Span { line, column: col, len: 0 } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_rule_line() {
        let toks = tokenize("rule: IF ph IS normal THEN ab_mix IS fast\n").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(
            kinds,
            alloc::vec![
                Tok::Kw(Keyword::Rule),
                Tok::Colon,
                Tok::Kw(Keyword::If),
                Tok::Ident("ph".into()),
                Tok::Kw(Keyword::Is),
                Tok::Ident("normal".into()),
                Tok::Kw(Keyword::Then),
                Tok::Ident("ab_mix".into()),
                Tok::Kw(Keyword::Is),
                Tok::Ident("fast".into()),
                Tok::Newline,
                Tok::Eof,
            ]
        );
        assert_eq!(toks[3].span, Span { line: 1, column: 10, len: 2 });
    }

    #[test]
    fn numbers() {
        let toks = tokenize("5.5 -3 1400").unwrap();
        assert_eq!(toks[0].tok, Tok::Number(5.5));
        assert_eq!(toks[1].tok, Tok::Number(-3.0));
        assert_eq!(toks[2].tok, Tok::Number(1400.0));
        assert!(tokenize("5.").is_err());
        assert!(tokenize("-x").is_err());
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("# header\n  var").unwrap();
        assert_eq!(toks[1].span, Span { line: 2, column: 3, len: 3 });
    }

    #[test]
    fn rejects_bad_identifiers() {
        let err = tokenize("var pH").unwrap_err();
        assert_eq!(err.location(), Some((1, 5)));
    }

    #[test]
    fn identifier_rule() {
        assert!(is_identifier("very_low"));
        assert!(is_identifier("_x1"));
        assert!(!is_identifier("1x"));
        assert!(!is_identifier("Normal"));
        assert!(!is_identifier("range"));
        assert!(!is_identifier(""));
    }
}
