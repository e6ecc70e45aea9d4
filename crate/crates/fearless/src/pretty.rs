//! Pretty printer for elaborated programs: fully explicit concrete syntax
//! that re-parses and re-elaborates to a structurally equal program.

use crate::ast::{Expr, Method, Mode, Program, Sig, TraitDecl, TypeRef};

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for d in &p.top_level {
        print_decl(&mut out, d, 0);
        out.push('\n');
    }
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn print_decl(out: &mut String, d: &TraitDecl, depth: usize) {
    out.push_str(&d.name.base);
    out.push('[');
    out.push_str(&d.type_params.join(", "));
    out.push_str("]: ");
    for (i, s) in d.supers.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        print_type(out, s);
        out.push(' ');
    }
    print_body(out, d, depth);
}

fn print_body(out: &mut String, d: &TraitDecl, depth: usize) {
    out.push_str("{ '");
    out.push_str(&d.self_name);
    if d.methods.is_empty() {
        out.push_str(" }");
        return;
    }
    out.push('\n');
    for m in &d.methods {
        indent(out, depth + 1);
        print_method(out, m, depth + 1);
        out.push_str(",\n");
    }
    indent(out, depth);
    out.push('}');
}

fn print_method(out: &mut String, m: &Method, depth: usize) {
    print_sig(out, &m.sig);
    if let Some(b) = &m.body {
        out.push_str(" -> ");
        print_expr(out, b, depth);
    }
}

fn print_sig(out: &mut String, sig: &Sig) {
    if let Some(rc) = sig.recv_rc {
        out.push_str(rc.keyword());
        out.push(' ');
    }
    out.push_str(&sig.name.base);
    if !sig.type_params.is_empty() {
        out.push('[');
        out.push_str(&sig.type_params.join(", "));
        out.push(']');
    }
    out.push('(');
    for (i, (n, t)) in sig.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(n);
        out.push_str(": ");
        print_type(out, t);
    }
    out.push_str("): ");
    print_type(out, &sig.ret);
}

fn print_type(out: &mut String, t: &TypeRef) {
    match t {
        TypeRef::Concrete { rc, name, args } => {
            if let Some(rc) = rc {
                out.push_str(rc.keyword());
                out.push(' ');
            }
            out.push_str(&name.base);
            if !args.is_empty() {
                out.push('[');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    print_type(out, a);
                }
                out.push(']');
            }
        }
        TypeRef::Var(x) => out.push_str(x),
        TypeRef::CapVar { rc, var } => {
            out.push_str(rc.keyword());
            out.push(' ');
            out.push_str(var);
        }
    }
}

fn print_expr(out: &mut String, e: &Expr, depth: usize) {
    match e {
        Expr::Var { name, .. } => out.push_str(name),
        Expr::Call { recv, meth, targs, args, .. } => {
            print_expr(out, recv, depth);
            if meth.base.starts_with('.') {
                out.push_str(&meth.base);
            } else {
                out.push(' ');
                out.push_str(&meth.base);
            }
            if !targs.is_empty() {
                out.push('[');
                for (i, t) in targs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    print_type(out, t);
                }
                out.push(']');
            }
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    print_expr(out, a, depth);
                }
                out.push(')');
            }
        }
        Expr::Lit { rc, decl, .. } => {
            if let Some(rc) = rc {
                out.push_str(rc.keyword());
                out.push(' ');
            }
            print_decl(out, decl, depth);
        }
    }
}

/// Strips every capability, turning an rc-mode program into its heart-mode
/// erasure.
pub fn erase_capabilities(p: &Program) -> Program {
    let tops = p.top_level.iter().map(erase_decl).collect();
    Program::assemble(tops, Mode::Heart)
}

fn erase_decl(d: &TraitDecl) -> TraitDecl {
    TraitDecl {
        name: d.name.clone(),
        type_params: d.type_params.clone(),
        supers: d.supers.iter().map(erase_type).collect(),
        self_name: d.self_name.clone(),
        methods: d
            .methods
            .iter()
            .map(|m| Method {
                sig: Sig {
                    recv_rc: None,
                    name: m.sig.name.clone(),
                    type_params: m.sig.type_params.clone(),
                    params: m
                        .sig
                        .params
                        .iter()
                        .map(|(n, t)| (n.clone(), erase_type(t)))
                        .collect(),
                    ret: erase_type(&m.sig.ret),
                    span: m.sig.span,
                },
                body: m.body.as_ref().map(erase_expr),
            })
            .collect(),
        body_declared: d.body_declared,
        span: d.span,
    }
}

pub fn erase_type(t: &TypeRef) -> TypeRef {
    match t {
        TypeRef::Concrete { name, args, .. } => TypeRef::Concrete {
            rc: None,
            name: name.clone(),
            args: args.iter().map(erase_type).collect(),
        },
        TypeRef::Var(x) => TypeRef::Var(x.clone()),
        TypeRef::CapVar { var, .. } => TypeRef::Var(var.clone()),
    }
}

pub fn erase_expr(e: &Expr) -> Expr {
    match e {
        Expr::Var { .. } => e.clone(),
        Expr::Call { recv, meth, targs, args, span } => Expr::Call {
            recv: Box::new(erase_expr(recv)),
            meth: meth.clone(),
            targs: targs.iter().map(erase_type).collect(),
            args: args.iter().map(erase_expr).collect(),
            span: *span,
        },
        Expr::Lit { targs, decl, span, .. } => Expr::Lit {
            rc: None,
            targs: targs.iter().map(erase_type).collect(),
            decl: Box::new(erase_decl(decl)),
            span: *span,
        },
    }
}
