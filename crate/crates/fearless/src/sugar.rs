//! Desugaring: self-name defaulting, `_` parameters, bare trait references,
//! the `=` sugar, and numeral/string literals.
//!
//! Fresh names are drawn against the set of every identifier in the program,
//! so generated names never collide with user names or each other.

use std::collections::BTreeSet;

use crate::ast::fresh_name;
use crate::parse::{
    SExpr, SHead, SLit, SLitBody, SMethod, SParam, SProgram, SSig, SType,
};
use crate::span::Span;

pub fn apply_sugar(p: SProgram) -> SProgram {
    let mut s = Sugarer::collect(&p);
    let mut decls: Vec<SLit> = p
        .decls
        .into_iter()
        .map(|d| s.decl(d, true))
        .collect();
    for (text, span) in std::mem::take(&mut s.synth) {
        decls.push(s.synthetic_decl(&text, span));
    }
    SProgram { decls }
}

struct Sugarer {
    used: BTreeSet<String>,
    declared: BTreeSet<String>,
    synth: Vec<(String, Span)>,
}

impl Sugarer {
    fn collect(p: &SProgram) -> Sugarer {
        let mut used = BTreeSet::new();
        let mut declared = BTreeSet::new();
        for d in &p.decls {
            if let Some(h) = &d.head {
                declared.insert(h.name.clone());
            }
            collect_lit(d, &mut used);
        }
        Sugarer { used, declared, synth: Vec::new() }
    }

    fn fresh(&mut self, base: &str) -> String {
        let name = fresh_name(base, &self.used);
        self.used.insert(name.clone());
        name
    }

    /// Registers a numeral or string token as needing a synthetic trait,
    /// unless the program already declares one with that name.
    fn register(&mut self, text: &str, span: Span) {
        if self.declared.contains(text) {
            return;
        }
        self.declared.insert(text.to_string());
        self.synth.push((text.to_string(), span));
    }

    fn stype(&mut self, t: &SType) {
        if t.name.starts_with(|c: char| c.is_ascii_digit() || c == '"') {
            self.register(&t.name, t.span);
        }
        for a in &t.args {
            self.stype(a);
        }
    }

    fn decl(&mut self, mut d: SLit, top_level: bool) -> SLit {
        if d.self_name.is_none() {
            d.self_name = Some(if top_level {
                "this".to_string()
            } else {
                self.fresh("self")
            });
        }
        if let Some(h) = &d.head {
            for sup in &h.supers {
                self.stype(sup);
            }
        }
        d.body = match d.body {
            SLitBody::Methods(ms) => {
                SLitBody::Methods(ms.into_iter().map(|m| self.method(m)).collect())
            }
            SLitBody::Lambda { params, body } => {
                let params = params
                    .into_iter()
                    .map(|p| if p == "_" { self.fresh("fresh") } else { p })
                    .collect();
                SLitBody::Lambda { params, body: Box::new(self.expr(*body)) }
            }
        };
        d
    }

    fn method(&mut self, mut m: SMethod) -> SMethod {
        let SSig { recv_rc, name, type_params, params, ret, span } = m.sig;
        let params = params
            .into_iter()
            .map(|p| {
                if let Some(t) = &p.ty {
                    self.stype(t);
                }
                if p.name == "_" {
                    SParam { name: self.fresh("fresh"), ty: p.ty, span: p.span }
                } else {
                    p
                }
            })
            .collect();
        if let Some(r) = &ret {
            self.stype(r);
        }
        m.sig = SSig { recv_rc, name, type_params, params, ret, span };
        m.body = m.body.map(|b| self.expr(b));
        m
    }

    fn expr(&mut self, e: SExpr) -> SExpr {
        match e {
            SExpr::Var { .. } | SExpr::SelfHole { .. } => e,
            SExpr::Ref { rc, name, targs, span } => {
                for t in &targs {
                    self.stype(t);
                }
                if name.starts_with(|c: char| c.is_ascii_digit() || c == '"') {
                    self.register(&name, span);
                }
                self.wrapper_lit(rc, name, targs, span)
            }
            SExpr::Num { text, span } => {
                self.register(&text, span);
                self.wrapper_lit(None, text, Vec::new(), span)
            }
            SExpr::Str { text, span } => {
                self.register(&text, span);
                self.wrapper_lit(None, text, Vec::new(), span)
            }
            SExpr::Call { recv, meth, targs, args, span } => {
                for t in &targs {
                    self.stype(t);
                }
                SExpr::Call {
                    recv: Box::new(self.expr(*recv)),
                    meth,
                    targs,
                    args: args.into_iter().map(|a| self.expr(a)).collect(),
                    span,
                }
            }
            SExpr::Bind { recv, meth, targs, binder, init, cont, span } => {
                for t in &targs {
                    self.stype(t);
                }
                let recv = self.expr(*recv);
                let init = self.expr(*init);
                // Inner binds first, so the remaining holes are ours.
                let cont = self.expr(*cont);
                let cont_self = self.fresh("self");
                let cont = fill_self_holes(cont, &cont_self);
                let lambda = SLit {
                    rc: None,
                    head: None,
                    self_name: Some(self.fresh("self")),
                    body: SLitBody::Lambda {
                        params: vec![binder, cont_self],
                        body: Box::new(cont),
                    },
                    span,
                };
                SExpr::Call {
                    recv: Box::new(recv),
                    meth,
                    targs,
                    args: vec![init, SExpr::Lit(lambda)],
                    span,
                }
            }
            SExpr::Lit(l) => SExpr::Lit(self.decl(l, false)),
        }
    }

    /// `D[Ts]` in expression position becomes `Fresh[]: D[Ts] {}`.
    fn wrapper_lit(
        &mut self,
        rc: Option<crate::ast::Capability>,
        name: String,
        targs: Vec<SType>,
        span: Span,
    ) -> SExpr {
        let fresh = self.fresh("Fresh");
        SExpr::Lit(SLit {
            rc,
            head: Some(SHead {
                name: fresh,
                type_params: Vec::new(),
                supers: vec![SType { rc: None, name, args: targs, span }],
            }),
            self_name: Some(self.fresh("self")),
            body: SLitBody::Methods(Vec::new()),
            span,
        })
    }

    /// The trait backing a numeral or string literal: all of its magic
    /// methods are given self-calling bodies so the trait is complete as far
    /// as the type system is concerned; the interpreter intercepts them.
    fn synthetic_decl(&mut self, text: &str, span: Span) -> SLit {
        let is_str = text.starts_with('"');
        let ty = |n: &str| SType { rc: None, name: n.into(), args: vec![], span };
        let sig = |name: &str, params: Vec<(&str, &str)>, ret: &str| SSig {
            recv_rc: None,
            name: name.to_string(),
            type_params: vec![],
            params: params
                .iter()
                .map(|(p, t)| SParam { name: p.to_string(), ty: Some(ty(t)), span })
                .collect(),
            ret: Some(ty(ret)),
            span,
        };
        let self_call = |name: &str, args: Vec<&str>| SExpr::Call {
            recv: Box::new(SExpr::Var { name: "this".into(), span }),
            meth: name.to_string(),
            targs: vec![],
            args: args
                .iter()
                .map(|a| SExpr::Var { name: a.to_string(), span })
                .collect(),
            span,
        };
        let m = |name: &str, params: Vec<(&str, &str)>, ret: &str| {
            let args: Vec<&str> = params.iter().map(|(p, _)| *p).collect();
            SMethod { sig: sig(name, params, ret), body: Some(self_call(name, args)) }
        };
        let methods = if is_str {
            vec![
                m("+", vec![("s", "Str")], "Str"),
                m(".upperCase", vec![], "Str"),
                m("==", vec![("s", "Str")], "Bool"),
            ]
        } else {
            vec![
                m("+", vec![("n", "Num")], "Num"),
                m("-", vec![("n", "Num")], "Num"),
                m("*", vec![("n", "Num")], "Num"),
                m("<", vec![("n", "Num")], "Bool"),
                m("==", vec![("n", "Num")], "Bool"),
                m(".str", vec![], "Str"),
            ]
        };
        SLit {
            rc: None,
            head: Some(SHead {
                name: text.to_string(),
                type_params: vec![],
                supers: vec![ty(if is_str { "Str" } else { "Num" })],
            }),
            self_name: Some("this".into()),
            body: SLitBody::Methods(methods),
            span,
        }
    }
}

fn fill_self_holes(e: SExpr, name: &str) -> SExpr {
    match e {
        SExpr::SelfHole { span } => SExpr::Var { name: name.to_string(), span },
        SExpr::Call { recv, meth, targs, args, span } => SExpr::Call {
            recv: Box::new(fill_self_holes(*recv, name)),
            meth,
            targs,
            args: args.into_iter().map(|a| fill_self_holes(a, name)).collect(),
            span,
        },
        SExpr::Lit(mut l) => {
            l.body = match l.body {
                SLitBody::Methods(ms) => SLitBody::Methods(
                    ms.into_iter()
                        .map(|mut m| {
                            m.body = m.body.map(|b| fill_self_holes(b, name));
                            m
                        })
                        .collect(),
                ),
                SLitBody::Lambda { params, body } => SLitBody::Lambda {
                    params,
                    body: Box::new(fill_self_holes(*body, name)),
                },
            };
            SExpr::Lit(l)
        }
        other => other,
    }
}

/// Every identifier appearing anywhere in the program; fresh names are
/// allocated against this set.
pub fn collect_identifiers(p: &SProgram) -> BTreeSet<String> {
    let mut used = BTreeSet::new();
    for d in &p.decls {
        collect_lit(d, &mut used);
    }
    used
}

fn collect_lit(d: &SLit, used: &mut BTreeSet<String>) {
    if let Some(h) = &d.head {
        used.insert(h.name.clone());
        for tp in &h.type_params {
            used.insert(tp.clone());
        }
        for s in &h.supers {
            collect_stype(s, used);
        }
    }
    if let Some(s) = &d.self_name {
        used.insert(s.clone());
    }
    match &d.body {
        SLitBody::Methods(ms) => {
            for m in ms {
                for tp in &m.sig.type_params {
                    used.insert(tp.clone());
                }
                for p in &m.sig.params {
                    used.insert(p.name.clone());
                    if let Some(t) = &p.ty {
                        collect_stype(t, used);
                    }
                }
                if let Some(r) = &m.sig.ret {
                    collect_stype(r, used);
                }
                if let Some(b) = &m.body {
                    collect_expr(b, used);
                }
            }
        }
        SLitBody::Lambda { params, body } => {
            for p in params {
                used.insert(p.clone());
            }
            collect_expr(body, used);
        }
    }
}

fn collect_stype(t: &SType, used: &mut BTreeSet<String>) {
    used.insert(t.name.clone());
    for a in &t.args {
        collect_stype(a, used);
    }
}

fn collect_expr(e: &SExpr, used: &mut BTreeSet<String>) {
    match e {
        SExpr::Var { name, .. } => {
            used.insert(name.clone());
        }
        SExpr::SelfHole { .. } | SExpr::Num { .. } | SExpr::Str { .. } => {}
        SExpr::Ref { name, targs, .. } => {
            used.insert(name.clone());
            for t in targs {
                collect_stype(t, used);
            }
        }
        SExpr::Call { recv, targs, args, .. } => {
            collect_expr(recv, used);
            for t in targs {
                collect_stype(t, used);
            }
            for a in args {
                collect_expr(a, used);
            }
        }
        SExpr::Bind { recv, targs, binder, init, cont, .. } => {
            collect_expr(recv, used);
            for t in targs {
                collect_stype(t, used);
            }
            used.insert(binder.clone());
            collect_expr(init, used);
            collect_expr(cont, used);
        }
        SExpr::Lit(l) => collect_lit(l, used),
    }
}
