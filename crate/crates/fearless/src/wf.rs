//! Syntactic well-formedness, checked after elaboration and before typing.

use std::collections::BTreeSet;

use crate::ast::{
    all_ls_decl, Capability, DeclName, Expr, Method, Mode, Program, Sig, TraitDecl, TypeRef,
};
use crate::diag::{codes, sort_diagnostics, Diagnostic};
use crate::par::pmap;
use crate::span::Span;

pub fn check_well_formed(p: &Program) -> Vec<Diagnostic> {
    let mut diags = global_checks(p);
    let per_decl = pmap(&p.top_level, |d| {
        let mut ck = Wf { mode: p.mode, diags: Vec::new() };
        ck.decl(d, true, &BTreeSet::new(), &BTreeSet::new());
        ck.diags
    });
    diags.extend(per_decl.into_iter().flatten());
    sort_diagnostics(&mut diags);
    diags
}

fn global_checks(p: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    for (name, span) in crate::heart::duplicate_decl_names(p) {
        diags.push(Diagnostic::error(
            codes::E_WF_DUP_DECL,
            span,
            format!("declaration name {name} is declared more than once"),
        ));
    }
    if let Err(d) = inheritance_order(p) {
        diags.push(d);
    }
    // Body-declared literals are final types: nobody may implement them.
    let mut body_declared = BTreeSet::new();
    for d in &p.top_level {
        for l in all_ls_decl(d) {
            if l.body_declared {
                body_declared.insert(l.name.clone());
            }
        }
    }
    for d in &p.top_level {
        for l in all_ls_decl(d) {
            for sup in &l.supers {
                if let TypeRef::Concrete { name, .. } = sup {
                    if body_declared.contains(name) && name != &l.name {
                        diags.push(Diagnostic::error(
                            codes::E_WF_FINAL_IMPL,
                            l.span,
                            format!(
                                "{} is declared inside a method body and cannot be implemented",
                                name
                            ),
                        ));
                    }
                }
            }
        }
    }
    diags
}

/// A topological order of the implements relation, supertypes first, or the
/// first detected cycle.
pub fn inheritance_order(p: &Program) -> Result<Vec<DeclName>, Diagnostic> {
    let names: Vec<&DeclName> = p.table.keys().collect();
    let index: std::collections::BTreeMap<&DeclName, usize> =
        names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut deps: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); names.len()];
    let mut rdeps: Vec<Vec<usize>> = vec![Vec::new(); names.len()];
    for (i, name) in names.iter().enumerate() {
        for sup in &p.table[*name].supers {
            if let TypeRef::Concrete { name: sname, .. } = sup {
                if let Some(&j) = index.get(sname) {
                    if i != j && deps[i].insert(j) {
                        rdeps[j].push(i);
                    }
                }
            }
        }
    }
    let mut ready: Vec<usize> = (0..names.len()).filter(|i| deps[*i].is_empty()).collect();
    ready.sort();
    let mut order = Vec::new();
    let mut done = vec![false; names.len()];
    while let Some(i) = ready.pop() {
        order.push(names[i].clone());
        done[i] = true;
        for &j in &rdeps[i] {
            deps[j].remove(&i);
            if deps[j].is_empty() && !done[j] {
                ready.push(j);
            }
        }
        ready.sort();
        ready.dedup();
    }
    if order.len() != names.len() {
        let members: Vec<String> = (0..names.len())
            .filter(|i| !done[*i])
            .map(|i| names[i].to_string())
            .collect();
        let span = (0..names.len())
            .find(|i| !done[*i])
            .map(|i| p.table[names[i]].span)
            .unwrap_or_default();
        return Err(Diagnostic::error(
            codes::E_WF_CYCLE,
            span,
            format!("inheritance cycle involving {}", members.join(", ")),
        ));
    }
    Ok(order)
}

struct Wf {
    mode: Mode,
    diags: Vec<Diagnostic>,
}

impl Wf {
    fn err(&mut self, code: &'static str, span: Span, msg: String) {
        self.diags.push(Diagnostic::error(code, span, msg));
    }

    fn decl(
        &mut self,
        d: &TraitDecl,
        top_level: bool,
        tvars_in_scope: &BTreeSet<String>,
        vars_in_scope: &BTreeSet<String>,
    ) {
        if top_level && d.self_name != "this" {
            self.err(
                codes::E_WF_SELF,
                d.span,
                format!(
                    "the self-name of a top-level declaration must be `this`, not `{}`",
                    d.self_name
                ),
            );
        }
        let mut seen_tp = BTreeSet::new();
        for tp in &d.type_params {
            if !seen_tp.insert(tp.clone()) {
                self.err(
                    codes::E_WF_DUP_PARAM,
                    d.span,
                    format!("type parameter `{tp}` is declared twice on {}", d.name),
                );
            }
        }
        if !top_level {
            // Funnelling: the declaration's own type parameters must come
            // from the enclosing scope, and it may not use anything else.
            for tp in &d.type_params {
                if !tvars_in_scope.contains(tp) {
                    self.err(
                        codes::E_WF_FUNNEL,
                        d.span,
                        format!(
                            "type parameter `{tp}` of {} is not in scope at its declaration",
                            d.name
                        ),
                    );
                }
            }
            let own: BTreeSet<String> = d.type_params.iter().cloned().collect();
            for x in free_type_vars_of_decl(d) {
                if !own.contains(&x) {
                    self.err(
                        codes::E_WF_FUNNEL,
                        d.span,
                        format!(
                            "{} uses type variable `{x}` without redeclaring it in its type parameters",
                            d.name
                        ),
                    );
                }
            }
        }
        if vars_in_scope.contains(&d.self_name) {
            self.err(
                codes::E_WF_SHADOW,
                d.span,
                format!("self-name `{}` shadows a variable in scope", d.self_name),
            );
        }
        let mut meth_names = BTreeSet::new();
        for m in &d.methods {
            if !meth_names.insert(m.sig.name.clone()) {
                self.err(
                    codes::E_WF_DUP_METH,
                    m.sig.span,
                    format!("method {} is declared twice in {}", m.sig.name, d.name),
                );
            }
        }
        let mut lit_tvars: BTreeSet<String> = tvars_in_scope.clone();
        lit_tvars.extend(d.type_params.iter().cloned());
        let mut lit_vars = vars_in_scope.clone();
        lit_vars.insert(d.self_name.clone());
        for sup in &d.supers {
            self.typeref(sup, d.span);
        }
        for m in &d.methods {
            self.method(d, m, &lit_tvars, &lit_vars);
        }
    }

    fn method(
        &mut self,
        d: &TraitDecl,
        m: &Method,
        tvars: &BTreeSet<String>,
        vars: &BTreeSet<String>,
    ) {
        let sig = &m.sig;
        let mut seen = BTreeSet::new();
        for tp in &sig.type_params {
            if !seen.insert(tp.clone()) {
                self.err(
                    codes::E_WF_DUP_PARAM,
                    sig.span,
                    format!("type parameter `{tp}` is declared twice on {}", sig.name),
                );
            }
            if tvars.contains(tp) {
                self.err(
                    codes::E_WF_SHADOW,
                    sig.span,
                    format!("type parameter `{tp}` of {} shadows one in scope", sig.name),
                );
            }
        }
        let mut seen_p = BTreeSet::new();
        for (pname, pty) in &sig.params {
            if !seen_p.insert(pname.clone()) {
                self.err(
                    codes::E_WF_DUP_PARAM,
                    sig.span,
                    format!("parameter `{pname}` is declared twice on {}", sig.name),
                );
            }
            if vars.contains(pname) {
                self.err(
                    codes::E_WF_SHADOW,
                    sig.span,
                    format!("parameter `{pname}` of {} shadows a variable in scope", sig.name),
                );
            }
            self.typeref(pty, sig.span);
        }
        self.typeref(&sig.ret, sig.span);
        if self.mode == Mode::Heart && sig.recv_rc.is_some() {
            self.err(
                codes::E_WF_MODE,
                sig.span,
                "capabilities cannot appear in a heart-mode program".into(),
            );
        }
        let Some(body) = &m.body else { return };
        if self.mode == Mode::Rc {
            self.iso_affine(sig, body);
        }
        let mut tvars2 = tvars.clone();
        tvars2.extend(sig.type_params.iter().cloned());
        let mut vars2 = vars.clone();
        vars2.extend(sig.params.iter().map(|(n, _)| n.clone()));
        self.expr(body, &tvars2, &vars2);
        let _ = d;
    }

    fn expr(&mut self, e: &Expr, tvars: &BTreeSet<String>, vars: &BTreeSet<String>) {
        match e {
            Expr::Var { .. } => {}
            Expr::Call { recv, targs, args, span, .. } => {
                for t in targs {
                    self.typeref(t, *span);
                }
                self.expr(recv, tvars, vars);
                for a in args {
                    self.expr(a, tvars, vars);
                }
            }
            Expr::Lit { rc, targs, decl, span } => {
                if self.mode == Mode::Heart && rc.is_some() {
                    self.err(
                        codes::E_WF_MODE,
                        *span,
                        "capabilities cannot appear in a heart-mode program".into(),
                    );
                }
                for t in targs {
                    self.typeref(t, *span);
                }
                self.decl(decl, false, tvars, vars);
            }
        }
    }

    /// In a valid instantiation `D[Ts]`, no argument is iso-qualified.
    fn typeref(&mut self, t: &TypeRef, span: Span) {
        match t {
            TypeRef::Concrete { rc, args, name } => {
                if self.mode == Mode::Heart && rc.is_some() {
                    self.err(
                        codes::E_WF_MODE,
                        span,
                        "capabilities cannot appear in a heart-mode program".into(),
                    );
                }
                for a in args {
                    if self.mode == Mode::Rc && a.rc() == Some(Capability::Iso) {
                        self.err(
                            codes::E_WF_ISO_TARG,
                            span,
                            format!("a type argument of {name} is iso-qualified; iso cannot instantiate generics"),
                        );
                    }
                    self.typeref(a, span);
                }
            }
            TypeRef::Var(_) => {}
            TypeRef::CapVar { .. } => {
                if self.mode == Mode::Heart {
                    self.err(
                        codes::E_WF_MODE,
                        span,
                        "capabilities cannot appear in a heart-mode program".into(),
                    );
                }
            }
        }
    }

    /// Each iso-typed parameter either occurs at most once in the body, or
    /// every occurrence lies inside some nested literal. The self-name is
    /// not tracked.
    fn iso_affine(&mut self, sig: &Sig, body: &Expr) {
        for (pname, pty) in &sig.params {
            if pty.rc() != Some(Capability::Iso) {
                continue;
            }
            let mut top = 0usize;
            let mut nested = 0usize;
            count_var(body, pname, false, &mut top, &mut nested);
            let ok = top + nested <= 1 || top == 0;
            if !ok {
                self.err(
                    codes::E_WF_ISO_AFFINE,
                    sig.span,
                    format!(
                        "iso parameter `{pname}` of {} is used {} times outside object literals; it may be used once, or any number of times inside literals",
                        sig.name,
                        top
                    ),
                );
            }
        }
    }
}

fn count_var(e: &Expr, name: &str, inside_lit: bool, top: &mut usize, nested: &mut usize) {
    match e {
        Expr::Var { name: n, .. } => {
            if n == name {
                if inside_lit {
                    *nested += 1;
                } else {
                    *top += 1;
                }
            }
        }
        Expr::Call { recv, args, .. } => {
            count_var(recv, name, inside_lit, top, nested);
            for a in args {
                count_var(a, name, inside_lit, top, nested);
            }
        }
        Expr::Lit { decl, .. } => {
            for m in &decl.methods {
                if let Some(b) = &m.body {
                    count_var(b, name, true, top, nested);
                }
            }
        }
    }
}

/// Free type variables of a declaration: everything used in supers,
/// signatures, and bodies, minus the binders that introduce them.
fn free_type_vars_of_decl(d: &TraitDecl) -> Vec<String> {
    let mut out = Vec::new();
    let own: BTreeSet<String> = d.type_params.iter().cloned().collect();
    for sup in &d.supers {
        let mut vs = Vec::new();
        sup.free_type_vars(&mut vs);
        out.extend(vs);
    }
    for m in &d.methods {
        let bound: BTreeSet<String> =
            own.iter().chain(m.sig.type_params.iter()).cloned().collect();
        let mut vs = Vec::new();
        for (_, t) in &m.sig.params {
            t.free_type_vars(&mut vs);
        }
        m.sig.ret.free_type_vars(&mut vs);
        if let Some(b) = &m.body {
            free_type_vars_of_expr(b, &mut vs);
        }
        out.extend(vs.into_iter().filter(|v| !bound.contains(v) || own.contains(v)));
    }
    let mut dedup = Vec::new();
    for v in out {
        if !dedup.contains(&v) {
            dedup.push(v);
        }
    }
    dedup
}

fn free_type_vars_of_expr(e: &Expr, out: &mut Vec<String>) {
    match e {
        Expr::Var { .. } => {}
        Expr::Call { recv, targs, args, .. } => {
            for t in targs {
                t.free_type_vars(out);
            }
            free_type_vars_of_expr(recv, out);
            for a in args {
                free_type_vars_of_expr(a, out);
            }
        }
        Expr::Lit { targs, .. } => {
            // The literal's internals redeclare their own variables; only
            // its instantiation can mention ours.
            for t in targs {
                t.free_type_vars(out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Program;

    fn decl(name: &str, supers: &[&str]) -> TraitDecl {
        TraitDecl {
            name: DeclName::new(name, 0),
            type_params: vec![],
            supers: supers
                .iter()
                .map(|s| TypeRef::Concrete { rc: None, name: DeclName::new(*s, 0), args: vec![] })
                .collect(),
            self_name: "this".into(),
            methods: vec![],
            body_declared: false,
            span: Span::default(),
        }
    }

    #[test]
    fn inheritance_order_puts_supertypes_first() {
        let p = Program::assemble(vec![decl("True", &["Bool"]), decl("Bool", &[])], Mode::Heart);
        let order = inheritance_order(&p).unwrap();
        assert_eq!(order, vec![DeclName::new("Bool", 0), DeclName::new("True", 0)]);
    }

    #[test]
    fn inheritance_order_single_declaration() {
        let p = Program::assemble(vec![decl("A", &[])], Mode::Heart);
        assert_eq!(inheritance_order(&p).unwrap(), vec![DeclName::new("A", 0)]);
    }

    #[test]
    fn inheritance_cycle_reports_all_members() {
        let p = Program::assemble(
            vec![decl("A", &["B"]), decl("B", &["C"]), decl("C", &["A"])],
            Mode::Heart,
        );
        let err = inheritance_order(&p).unwrap_err();
        assert_eq!(err.code, codes::E_WF_CYCLE);
        for n in ["A/0", "B/0", "C/0"] {
            assert!(err.message.contains(n), "{} missing from {}", n, err.message);
        }
    }
}
