//! Lexer. The concatenation of lexemes plus skipped whitespace and comments
//! reproduces the input exactly.

use crate::ast::Capability;
use crate::diag::{codes, Diagnostic};
use crate::span::Span;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Tok {
    /// PascalCase identifier: trait names and type variables.
    UpIdent(String),
    /// camelCase identifier (or `_`): variables.
    LowIdent(String),
    /// Dot-prefixed method name, stored with the dot (".age").
    DotIdent(String),
    /// Operator-symbol method name ("+", "<=", "#"). "->" and "=" are
    /// lexed here too and given special meaning by the parser.
    Op(String),
    Num(String),
    /// String literal, raw lexeme including quotes and escapes.
    Str(String),
    Cap(Capability),
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Comma,
    Colon,
    /// `'` introducing an explicit self-name.
    Tick,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::UpIdent(s) | Tok::LowIdent(s) | Tok::DotIdent(s) | Tok::Op(s) | Tok::Num(s) => {
                format!("`{s}`")
            }
            Tok::Str(_) => "string".into(),
            Tok::Cap(c) => format!("`{}`", c.keyword()),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrack => "`[`".into(),
            Tok::RBrack => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Tick => "`'`".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const OP_CHARS: &str = "+-*/<>=!&|^~?%#";

fn is_op_char(c: char) -> bool {
    OP_CHARS.contains(c)
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn tokenize(file: u16, text: &str) -> Result<Vec<Token>, Diagnostic> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    while i < bytes.len() {
        let c = text[i..].chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c == '/' && text[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let lo = i;
        let tok = match c {
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            '[' => {
                i += 1;
                Tok::LBrack
            }
            ']' => {
                i += 1;
                Tok::RBrack
            }
            '{' => {
                i += 1;
                Tok::LBrace
            }
            '}' => {
                i += 1;
                Tok::RBrace
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            ':' => {
                i += 1;
                Tok::Colon
            }
            '\'' => {
                i += 1;
                Tok::Tick
            }
            '"' => {
                i += 1;
                loop {
                    if i >= bytes.len() || bytes[i] == b'\n' {
                        return Err(Diagnostic::error(
                            codes::E_LEX_STR,
                            Span::new(file, lo, i),
                            "unterminated string literal",
                        ));
                    }
                    match bytes[i] {
                        b'"' => {
                            i += 1;
                            break;
                        }
                        b'\\' => {
                            if i + 1 >= bytes.len() {
                                return Err(Diagnostic::error(
                                    codes::E_LEX_STR,
                                    Span::new(file, lo, i),
                                    "unterminated string escape",
                                ));
                            }
                            match bytes[i + 1] {
                                b'"' | b'\\' | b'n' | b't' => i += 2,
                                other => {
                                    return Err(Diagnostic::error(
                                        codes::E_LEX_STR,
                                        Span::new(file, i, i + 2),
                                        format!(
                                            "unknown string escape `\\{}`",
                                            other as char
                                        ),
                                    ))
                                }
                            }
                        }
                        _ => i += 1,
                    }
                }
                Tok::Str(text[lo..i].to_string())
            }
            '.' => {
                i += 1;
                if i < bytes.len() && is_ident_start(text[i..].chars().next().unwrap()) {
                    while i < bytes.len() && is_ident_continue(text[i..].chars().next().unwrap())
                    {
                        i += 1;
                    }
                    Tok::DotIdent(text[lo..i].to_string())
                } else {
                    return Err(Diagnostic::error(
                        codes::E_LEX_CHAR,
                        Span::new(file, lo, i),
                        "`.` must be followed by a method name",
                    ));
                }
            }
            c if c.is_ascii_digit() => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                Tok::Num(text[lo..i].to_string())
            }
            c if is_ident_start(c) => {
                while i < bytes.len() && is_ident_continue(text[i..].chars().next().unwrap()) {
                    i += 1;
                }
                let word = &text[lo..i];
                if let Some(cap) = Capability::from_keyword(word) {
                    Tok::Cap(cap)
                } else if word.chars().next().unwrap().is_ascii_uppercase() {
                    Tok::UpIdent(word.to_string())
                } else {
                    Tok::LowIdent(word.to_string())
                }
            }
            c if is_op_char(c) => {
                while i < bytes.len() && is_op_char(text[i..].chars().next().unwrap()) {
                    i += 1;
                }
                Tok::Op(text[lo..i].to_string())
            }
            other => {
                return Err(Diagnostic::error(
                    codes::E_LEX_CHAR,
                    Span::new(file, lo, lo + other.len_utf8()),
                    format!("unexpected character `{other}`"),
                ))
            }
        };
        toks.push(Token { tok, span: Span::new(file, lo, i) });
    }
    Ok(toks)
}

/// Unescapes the payload of a string lexeme (quotes included).
pub fn unescape_str(raw: &str) -> String {
    let inner = &raw[1..raw.len() - 1];
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => {}
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Escapes a payload back into a string lexeme.
pub fn escape_str(payload: &str) -> String {
    let mut out = String::with_capacity(payload.len() + 2);
    out.push('"');
    for c in payload.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(0, src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn bool_call_tokens() {
        assert_eq!(
            kinds("True.and(False)"),
            vec![
                Tok::UpIdent("True".into()),
                Tok::DotIdent(".and".into()),
                Tok::LParen,
                Tok::UpIdent("False".into()),
                Tok::RParen,
            ]
        );
    }

    #[test]
    fn arithmetic_tokens() {
        assert_eq!(
            kinds("1 + 2 * 3"),
            vec![
                Tok::Num("1".into()),
                Tok::Op("+".into()),
                Tok::Num("2".into()),
                Tok::Op("*".into()),
                Tok::Num("3".into()),
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert_eq!(kinds(""), vec![]);
    }

    #[test]
    fn lexemes_reconstruct_input() {
        let src = "A[T]: B { 'x .m(a: Num): T -> a + 1, // c\n }";
        let toks = tokenize(0, src).unwrap();
        let mut rebuilt = String::new();
        let mut pos = 0usize;
        for t in &toks {
            rebuilt.push_str(&src[pos..t.span.lo as usize]);
            rebuilt.push_str(&src[t.span.lo as usize..t.span.hi as usize]);
            pos = t.span.hi as usize;
        }
        rebuilt.push_str(&src[pos..]);
        assert_eq!(rebuilt, src);
    }

    #[test]
    fn maximal_munch_operators() {
        assert_eq!(
            kinds("a <= b"),
            vec![
                Tok::LowIdent("a".into()),
                Tok::Op("<=".into()),
                Tok::LowIdent("b".into()),
            ]
        );
        // `#(` splits after the operator run
        assert_eq!(
            kinds("#("),
            vec![Tok::Op("#".into()), Tok::LParen]
        );
    }

    #[test]
    fn unterminated_string_is_an_error() {
        assert!(tokenize(0, "\"abc").is_err());
    }

    #[test]
    fn string_escapes_round_trip() {
        let raw = "\"a\\n\\\"b\\\\\"";
        let payload = unescape_str(raw);
        assert_eq!(payload, "a\n\"b\\");
        assert_eq!(escape_str(&payload), raw);
    }

    #[test]
    fn capability_keywords() {
        assert_eq!(
            kinds("imm iso read mut"),
            vec![
                Tok::Cap(Capability::Imm),
                Tok::Cap(Capability::Iso),
                Tok::Cap(Capability::Read),
                Tok::Cap(Capability::Mut),
            ]
        );
    }
}
