//! Deterministic JSON renderings of surface and core trees. Spans are
//! omitted so output is byte-stable across pipelines; keys are ordered by
//! serde_json's map (alphabetical), which is stable.

use serde_json::{json, Value};

use crate::ast::{Expr, Method, Program, Sig, TraitDecl, TypeRef};
use crate::parse::{SExpr, SLit, SLitBody, SMethod, SProgram, SType};

// -- core ---------------------------------------------------------------

pub fn program_json(p: &Program) -> Value {
    json!({
        "kind": "program",
        "mode": match p.mode { crate::ast::Mode::Heart => "heart", crate::ast::Mode::Rc => "rc" },
        "decls": p.top_level.iter().map(decl_json).collect::<Vec<_>>(),
    })
}

pub fn decl_json(d: &TraitDecl) -> Value {
    json!({
        "kind": "decl",
        "name": d.name.to_string(),
        "typeParams": d.type_params,
        "supers": d.supers.iter().map(type_json).collect::<Vec<_>>(),
        "self": d.self_name,
        "bodyDeclared": d.body_declared,
        "methods": d.methods.iter().map(method_json).collect::<Vec<_>>(),
    })
}

fn method_json(m: &Method) -> Value {
    json!({
        "kind": "method",
        "sig": sig_json(&m.sig),
        "body": m.body.as_ref().map(expr_json),
    })
}

fn sig_json(s: &Sig) -> Value {
    json!({
        "kind": "sig",
        "recvRc": s.recv_rc.map(|c| c.keyword()),
        "name": s.name.to_string(),
        "typeParams": s.type_params,
        "params": s.params.iter().map(|(n, t)| json!({"name": n, "type": type_json(t)})).collect::<Vec<_>>(),
        "ret": type_json(&s.ret),
    })
}

pub fn type_json(t: &TypeRef) -> Value {
    match t {
        TypeRef::Concrete { rc, name, args } => json!({
            "kind": "concrete",
            "rc": rc.map(|c| c.keyword()),
            "name": name.to_string(),
            "args": args.iter().map(type_json).collect::<Vec<_>>(),
        }),
        TypeRef::Var(x) => json!({"kind": "tvar", "name": x}),
        TypeRef::CapVar { rc, var } => json!({
            "kind": "captvar",
            "rc": rc.keyword(),
            "name": var,
        }),
    }
}

pub fn expr_json(e: &Expr) -> Value {
    match e {
        Expr::Var { name, .. } => json!({"kind": "var", "name": name}),
        Expr::Call { recv, meth, targs, args, .. } => json!({
            "kind": "call",
            "recv": expr_json(recv),
            "meth": meth.to_string(),
            "targs": targs.iter().map(type_json).collect::<Vec<_>>(),
            "args": args.iter().map(expr_json).collect::<Vec<_>>(),
        }),
        Expr::Lit { rc, targs, decl, .. } => json!({
            "kind": "lit",
            "rc": rc.map(|c| c.keyword()),
            "targs": targs.iter().map(type_json).collect::<Vec<_>>(),
            "decl": decl_json(decl),
        }),
    }
}

// -- surface ------------------------------------------------------------

pub fn surface_program_json(p: &SProgram) -> Value {
    json!({
        "kind": "program",
        "decls": p.decls.iter().map(surface_lit_json).collect::<Vec<_>>(),
    })
}

fn surface_lit_json(l: &SLit) -> Value {
    let head = l.head.as_ref().map(|h| {
        json!({
            "name": format!("{}/{}", h.name, h.type_params.len()),
            "typeParams": h.type_params,
            "supers": h.supers.iter().map(surface_type_json).collect::<Vec<_>>(),
        })
    });
    let body = match &l.body {
        SLitBody::Methods(ms) => json!({
            "kind": "methods",
            "methods": ms.iter().map(surface_method_json).collect::<Vec<_>>(),
        }),
        SLitBody::Lambda { params, body } => json!({
            "kind": "lambda",
            "params": params,
            "body": surface_expr_json(body),
        }),
    };
    json!({
        "kind": "lit",
        "rc": l.rc.map(|c| c.keyword()),
        "head": head,
        "self": l.self_name,
        "body": body,
    })
}

fn surface_method_json(m: &SMethod) -> Value {
    json!({
        "kind": "method",
        "recvRc": m.sig.recv_rc.map(|c| c.keyword()),
        "name": format!("{}/{}", m.sig.name, m.sig.params.len()),
        "typeParams": m.sig.type_params,
        "params": m.sig.params.iter().map(|p| json!({
            "name": p.name,
            "type": p.ty.as_ref().map(surface_type_json),
        })).collect::<Vec<_>>(),
        "ret": m.sig.ret.as_ref().map(surface_type_json),
        "body": m.body.as_ref().map(surface_expr_json),
    })
}

fn surface_type_json(t: &SType) -> Value {
    json!({
        "kind": "type",
        "rc": t.rc.map(|c| c.keyword()),
        "name": format!("{}/{}", t.name, t.args.len()),
        "args": t.args.iter().map(surface_type_json).collect::<Vec<_>>(),
    })
}

pub fn surface_expr_json(e: &SExpr) -> Value {
    match e {
        SExpr::Var { name, .. } => json!({"kind": "var", "name": name}),
        SExpr::SelfHole { .. } => json!({"kind": "selfHole"}),
        SExpr::Ref { rc, name, targs, .. } => json!({
            "kind": "ref",
            "rc": rc.map(|c| c.keyword()),
            "name": format!("{}/{}", name, targs.len()),
            "targs": targs.iter().map(surface_type_json).collect::<Vec<_>>(),
        }),
        SExpr::Num { text, .. } => json!({"kind": "num", "text": text}),
        SExpr::Str { text, .. } => json!({"kind": "str", "text": text}),
        SExpr::Call { recv, meth, targs, args, .. } => json!({
            "kind": "call",
            "recv": surface_expr_json(recv),
            "meth": format!("{}/{}", meth, args.len()),
            "targs": targs.iter().map(surface_type_json).collect::<Vec<_>>(),
            "args": args.iter().map(surface_expr_json).collect::<Vec<_>>(),
        }),
        SExpr::Bind { recv, meth, targs, binder, init, cont, .. } => json!({
            "kind": "bind",
            "recv": surface_expr_json(recv),
            "meth": meth,
            "targs": targs.iter().map(surface_type_json).collect::<Vec<_>>(),
            "binder": binder,
            "init": surface_expr_json(init),
            "cont": surface_expr_json(cont),
        }),
        SExpr::Lit(l) => surface_lit_json(l),
    }
}
