//! Recursive-descent parser producing the sugared surface tree.
//!
//! Method calls are left-associative with a single precedence level, for
//! dot-named and operator-named methods alike. Parentheses restore grouping.

use crate::ast::Capability;
use crate::diag::{codes, Diagnostic};
use crate::lex::{Tok, Token};
use crate::span::Span;

// ---------------------------------------------------------------------------
// Surface AST
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SProgram {
    pub decls: Vec<SLit>,
}

#[derive(Clone, Debug)]
pub struct SType {
    pub rc: Option<Capability>,
    /// Trait name, type variable, numeral, or string lexeme.
    pub name: String,
    pub args: Vec<SType>,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct SParam {
    pub name: String,
    pub ty: Option<SType>,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct SSig {
    pub recv_rc: Option<Capability>,
    pub name: String,
    pub type_params: Vec<String>,
    pub params: Vec<SParam>,
    pub ret: Option<SType>,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct SMethod {
    pub sig: SSig,
    pub body: Option<SExpr>,
}

#[derive(Clone, Debug)]
pub struct SHead {
    pub name: String,
    pub type_params: Vec<String>,
    pub supers: Vec<SType>,
}

#[derive(Clone, Debug)]
pub enum SLitBody {
    Methods(Vec<SMethod>),
    /// `{x, y -> e}` or `{e}`: implements the target's inferred method.
    Lambda { params: Vec<String>, body: Box<SExpr> },
}

#[derive(Clone, Debug)]
pub struct SLit {
    pub rc: Option<Capability>,
    pub head: Option<SHead>,
    pub self_name: Option<String>,
    pub body: SLitBody,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub enum SExpr {
    Var {
        name: String,
        span: Span,
    },
    /// Placeholder for the continuation receiver introduced by the `=` sugar.
    SelfHole {
        span: Span,
    },
    /// Bare reference to a trait (`FPerson`, `List[Num]`).
    Ref {
        rc: Option<Capability>,
        name: String,
        targs: Vec<SType>,
        span: Span,
    },
    Num {
        text: String,
        span: Span,
    },
    Str {
        text: String,
        span: Span,
    },
    Call {
        recv: Box<SExpr>,
        meth: String,
        targs: Vec<SType>,
        args: Vec<SExpr>,
        span: Span,
    },
    /// `e.m[Ts] x = init rest...` prior to desugaring.
    Bind {
        recv: Box<SExpr>,
        meth: String,
        targs: Vec<SType>,
        binder: String,
        init: Box<SExpr>,
        cont: Box<SExpr>,
        span: Span,
    },
    Lit(SLit),
}

impl SExpr {
    pub fn span(&self) -> Span {
        match self {
            SExpr::Var { span, .. }
            | SExpr::SelfHole { span }
            | SExpr::Ref { span, .. }
            | SExpr::Num { span, .. }
            | SExpr::Str { span, .. }
            | SExpr::Call { span, .. }
            | SExpr::Bind { span, .. } => *span,
            SExpr::Lit(l) => l.span,
        }
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

pub fn parse_program(tokens: &[Token], file: u16) -> Result<SProgram, Diagnostic> {
    let mut p = Parser { toks: tokens, pos: 0, file };
    let mut decls = Vec::new();
    while !p.at_end() {
        decls.push(p.top_decl()?);
    }
    Ok(SProgram { decls })
}

/// Parses a single expression; used by the AST dump command.
pub fn parse_expression(tokens: &[Token], file: u16) -> Result<SExpr, Diagnostic> {
    let mut p = Parser { toks: tokens, pos: 0, file };
    let e = p.expr()?;
    if !p.at_end() {
        return Err(p.err_here("expected end of input"));
    }
    Ok(e)
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    file: u16,
}

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, n: usize) -> Option<&Tok> {
        self.toks.get(self.pos + n).map(|t| &t.tok)
    }

    fn here(&self) -> Span {
        self.toks
            .get(self.pos)
            .map(|t| t.span)
            .unwrap_or_else(|| {
                let end = self.toks.last().map(|t| t.span.hi as usize).unwrap_or(0);
                Span::new(self.file, end, end)
            })
    }

    fn err_here(&self, msg: impl Into<String>) -> Diagnostic {
        let found = self
            .peek()
            .map(|t| format!(", found {}", t.describe()))
            .unwrap_or_else(|| ", found end of input".to_string());
        Diagnostic::error(codes::E_PARSE, self.here(), format!("{}{}", msg.into(), found))
    }

    fn bump(&mut self) -> &'a Token {
        let t = &self.toks[self.pos];
        self.pos += 1;
        t
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == Some(want) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Span, Diagnostic> {
        if self.peek() == Some(&want) {
            Ok(self.bump().span)
        } else {
            Err(self.err_here(format!("expected {what}")))
        }
    }

    // -- declarations -------------------------------------------------------

    fn top_decl(&mut self) -> Result<SLit, Diagnostic> {
        let start = self.here();
        let name = match self.peek() {
            Some(Tok::UpIdent(s)) | Some(Tok::Num(s)) | Some(Tok::Str(s)) => {
                let s = s.clone();
                self.bump();
                s
            }
            _ => return Err(self.err_here("expected a trait declaration name")),
        };
        let type_params = if self.peek() == Some(&Tok::LBrack) {
            self.type_param_list()?
        } else {
            Vec::new()
        };
        let mut supers = Vec::new();
        if self.eat(&Tok::Colon) {
            while self.peek() != Some(&Tok::LBrace) {
                supers.push(self.stype()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::LBrace, "`{` opening the declaration body")?;
        let (self_name, body) = self.lit_inner()?;
        let end = self.expect(Tok::RBrace, "`}` closing the declaration body")?;
        Ok(SLit {
            rc: None,
            head: Some(SHead { name, type_params, supers }),
            self_name,
            body,
            span: start.join(end),
        })
    }

    fn type_param_list(&mut self) -> Result<Vec<String>, Diagnostic> {
        self.expect(Tok::LBrack, "`[`")?;
        let mut out = Vec::new();
        while self.peek() != Some(&Tok::RBrack) {
            match self.peek() {
                Some(Tok::UpIdent(s)) => {
                    out.push(s.clone());
                    self.bump();
                }
                _ => return Err(self.err_here("expected a type parameter name")),
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrack, "`]`")?;
        Ok(out)
    }

    fn stype(&mut self) -> Result<SType, Diagnostic> {
        let start = self.here();
        let rc = match self.peek() {
            Some(Tok::Cap(c)) => {
                let c = *c;
                self.bump();
                Some(c)
            }
            _ => None,
        };
        let name = match self.peek() {
            Some(Tok::UpIdent(s)) | Some(Tok::Num(s)) | Some(Tok::Str(s)) => {
                let s = s.clone();
                self.bump();
                s
            }
            _ => return Err(self.err_here("expected a type name")),
        };
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::LBrack) {
            self.bump();
            while self.peek() != Some(&Tok::RBrack) {
                args.push(self.stype()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBrack, "`]` closing type arguments")?;
        }
        let end = self
            .toks
            .get(self.pos.saturating_sub(1))
            .map(|t| t.span)
            .unwrap_or(start);
        Ok(SType { rc, name, args, span: start.join(end) })
    }

    // -- literal bodies -----------------------------------------------------

    fn lit_inner(&mut self) -> Result<(Option<String>, SLitBody), Diagnostic> {
        let mut self_name = None;
        if self.peek() == Some(&Tok::Tick) {
            self.bump();
            match self.peek() {
                Some(Tok::LowIdent(s)) => {
                    self_name = Some(s.clone());
                    self.bump();
                }
                _ => return Err(self.err_here("expected a self name after `'`")),
            }
        }
        if self.peek() == Some(&Tok::RBrace) {
            return Ok((self_name, SLitBody::Methods(Vec::new())));
        }
        if self.starts_method() {
            let mut methods = Vec::new();
            loop {
                methods.push(self.method()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
                if self.peek() == Some(&Tok::RBrace) {
                    break; // trailing comma
                }
            }
            return Ok((self_name, SLitBody::Methods(methods)));
        }
        // Lambda form: optional parameter list, then an expression.
        let params = self.lambda_params();
        let body = self.expr()?;
        Ok((self_name, SLitBody::Lambda { params, body: Box::new(body) }))
    }

    fn starts_method(&self) -> bool {
        match self.peek() {
            Some(Tok::DotIdent(_)) => true,
            Some(Tok::Op(s)) => s != "->" && s != "=",
            Some(Tok::Cap(_)) => matches!(
                self.peek_at(1),
                Some(Tok::DotIdent(_)) | Some(Tok::Op(_))
            ),
            _ => false,
        }
    }

    /// Consumes `x, y ->` if present; otherwise consumes nothing.
    fn lambda_params(&mut self) -> Vec<String> {
        let mut look = 0usize;
        loop {
            match self.peek_at(look) {
                Some(Tok::LowIdent(_)) => {}
                _ => return Vec::new(),
            }
            match self.peek_at(look + 1) {
                Some(Tok::Comma) => look += 2,
                Some(Tok::Op(s)) if s == "->" => break,
                _ => return Vec::new(),
            }
        }
        let mut params = Vec::new();
        loop {
            match self.bump().tok.clone() {
                Tok::LowIdent(s) => params.push(s),
                _ => unreachable!(),
            }
            match self.peek() {
                Some(Tok::Comma) => {
                    self.bump();
                }
                _ => break,
            }
        }
        self.bump(); // the arrow
        params
    }

    fn method(&mut self) -> Result<SMethod, Diagnostic> {
        let start = self.here();
        let recv_rc = match self.peek() {
            Some(Tok::Cap(c)) => {
                let c = *c;
                self.bump();
                Some(c)
            }
            _ => None,
        };
        let name = match self.peek() {
            Some(Tok::DotIdent(s)) => {
                let s = s.clone();
                self.bump();
                s
            }
            Some(Tok::Op(s)) if s != "->" && s != "=" => {
                let s = s.clone();
                self.bump();
                s
            }
            _ => return Err(self.err_here("expected a method name")),
        };
        let type_params = if self.peek() == Some(&Tok::LBrack) {
            self.type_param_list()?
        } else {
            Vec::new()
        };
        let mut params = Vec::new();
        let mut explicit = false;
        if self.eat(&Tok::LParen) {
            explicit = true;
            while self.peek() != Some(&Tok::RParen) {
                let pstart = self.here();
                let pname = match self.peek() {
                    Some(Tok::LowIdent(s)) => {
                        let s = s.clone();
                        self.bump();
                        s
                    }
                    _ => return Err(self.err_here("expected a parameter name")),
                };
                let ty = if self.eat(&Tok::Colon) {
                    Some(self.stype()?)
                } else {
                    None
                };
                params.push(SParam { name: pname, ty, span: pstart });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen, "`)` closing the parameter list")?;
        }
        let _ = explicit;
        let ret = if self.eat(&Tok::Colon) {
            Some(self.stype()?)
        } else {
            None
        };
        let body = if matches!(self.peek(), Some(Tok::Op(s)) if s == "->") {
            self.bump();
            Some(self.expr()?)
        } else {
            None
        };
        let end = body
            .as_ref()
            .map(|b| b.span())
            .or_else(|| ret.as_ref().map(|r| r.span))
            .unwrap_or(start);
        Ok(SMethod {
            sig: SSig { recv_rc, name, type_params, params, ret, span: start.join(end) },
            body,
        })
    }

    // -- expressions --------------------------------------------------------

    fn expr(&mut self) -> Result<SExpr, Diagnostic> {
        let head = self.primary()?;
        self.segments(head)
    }

    fn segments(&mut self, mut acc: SExpr) -> Result<SExpr, Diagnostic> {
        loop {
            let meth = match self.peek() {
                Some(Tok::DotIdent(s)) => s.clone(),
                Some(Tok::Op(s)) if s != "->" && s != "=" => s.clone(),
                _ => return Ok(acc),
            };
            let mstart = self.here();
            self.bump();
            let targs = if self.peek() == Some(&Tok::LBrack) {
                self.bump();
                let mut ts = Vec::new();
                while self.peek() != Some(&Tok::RBrack) {
                    ts.push(self.stype()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrack, "`]` closing type arguments")?;
                ts
            } else {
                Vec::new()
            };
            // `e.m x = init rest...`: the rest of the chain becomes the
            // continuation body, receiving a fresh self.
            if let (Some(Tok::LowIdent(binder)), Some(Tok::Op(eq))) =
                (self.peek(), self.peek_at(1))
            {
                if eq == "=" {
                    let binder = binder.clone();
                    self.bump();
                    self.bump();
                    let init = self.primary()?;
                    let hole = SExpr::SelfHole { span: self.here() };
                    let cont = self.segments(hole)?;
                    let span = acc.span().join(cont.span());
                    return Ok(SExpr::Bind {
                        recv: Box::new(acc),
                        meth,
                        targs,
                        binder,
                        init: Box::new(init),
                        cont: Box::new(cont),
                        span,
                    });
                }
            }
            let mut args = Vec::new();
            if self.eat(&Tok::LParen) {
                while self.peek() != Some(&Tok::RParen) {
                    args.push(self.expr()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RParen, "`)` closing the argument list")?;
            } else if self.starts_primary() {
                args.push(self.primary()?);
            }
            let span = acc.span().join(
                args.last().map(|a| a.span()).unwrap_or(mstart),
            );
            acc = SExpr::Call { recv: Box::new(acc), meth, targs, args, span };
        }
    }

    fn starts_primary(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::LowIdent(_))
                | Some(Tok::UpIdent(_))
                | Some(Tok::Num(_))
                | Some(Tok::Str(_))
                | Some(Tok::LParen)
                | Some(Tok::LBrace)
                | Some(Tok::Cap(_))
        )
    }

    fn primary(&mut self) -> Result<SExpr, Diagnostic> {
        let start = self.here();
        match self.peek() {
            Some(Tok::LowIdent(s)) => {
                let name = s.clone();
                self.bump();
                Ok(SExpr::Var { name, span: start })
            }
            Some(Tok::Num(s)) => {
                let text = s.clone();
                self.bump();
                Ok(SExpr::Num { text, span: start })
            }
            Some(Tok::Str(s)) => {
                let text = s.clone();
                self.bump();
                Ok(SExpr::Str { text, span: start })
            }
            Some(Tok::LParen) => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::LBrace) => self.anon_lit(None, start),
            Some(Tok::Cap(c)) => {
                let rc = *c;
                self.bump();
                match self.peek() {
                    Some(Tok::LBrace) => self.anon_lit(Some(rc), start),
                    Some(Tok::UpIdent(_)) | Some(Tok::Num(_)) | Some(Tok::Str(_)) => {
                        self.named_ref_or_lit(Some(rc), start)
                    }
                    _ => Err(self.err_here("expected a literal or trait name after capability")),
                }
            }
            Some(Tok::UpIdent(_)) => self.named_ref_or_lit(None, start),
            _ => Err(self.err_here("expected an expression")),
        }
    }

    fn anon_lit(&mut self, rc: Option<Capability>, start: Span) -> Result<SExpr, Diagnostic> {
        self.expect(Tok::LBrace, "`{`")?;
        let (self_name, body) = self.lit_inner()?;
        let end = self.expect(Tok::RBrace, "`}` closing the literal")?;
        Ok(SExpr::Lit(SLit { rc, head: None, self_name, body, span: start.join(end) }))
    }

    /// `Name`, `Name[Ts]`, `Name[Xs]: Sups {...}`, or `Name {...}`.
    fn named_ref_or_lit(
        &mut self,
        rc: Option<Capability>,
        start: Span,
    ) -> Result<SExpr, Diagnostic> {
        let name = match self.bump().tok.clone() {
            Tok::UpIdent(s) | Tok::Num(s) | Tok::Str(s) => s,
            _ => unreachable!(),
        };
        // Scan past a bracket group to see whether a declaration head follows.
        let mut look = 0usize;
        if self.peek() == Some(&Tok::LBrack) {
            let mut depth = 0usize;
            loop {
                match self.peek_at(look) {
                    Some(Tok::LBrack) => depth += 1,
                    Some(Tok::RBrack) => {
                        depth -= 1;
                        if depth == 0 {
                            look += 1;
                            break;
                        }
                    }
                    None => break,
                    _ => {}
                }
                look += 1;
            }
        }
        let headed = matches!(self.peek_at(look), Some(Tok::Colon) | Some(Tok::LBrace));
        if headed {
            let type_params = if self.peek() == Some(&Tok::LBrack) {
                self.type_param_list()?
            } else {
                Vec::new()
            };
            let mut supers = Vec::new();
            if self.eat(&Tok::Colon) {
                while self.peek() != Some(&Tok::LBrace) {
                    supers.push(self.stype()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            self.expect(Tok::LBrace, "`{` opening the literal body")?;
            let (self_name, body) = self.lit_inner()?;
            let end = self.expect(Tok::RBrace, "`}` closing the literal")?;
            Ok(SExpr::Lit(SLit {
                rc,
                head: Some(SHead { name, type_params, supers }),
                self_name,
                body,
                span: start.join(end),
            }))
        } else {
            let mut targs = Vec::new();
            if self.peek() == Some(&Tok::LBrack) {
                self.bump();
                while self.peek() != Some(&Tok::RBrack) {
                    targs.push(self.stype()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrack, "`]` closing type arguments")?;
            }
            let end = self
                .toks
                .get(self.pos.saturating_sub(1))
                .map(|t| t.span)
                .unwrap_or(start);
            Ok(SExpr::Ref { rc, name, targs, span: start.join(end) })
        }
    }
}
