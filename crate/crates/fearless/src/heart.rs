//! The capability-free type system: program, literal, method, and
//! expression judgements.
//!
//! Checking is synthesis-first: `type_of` synthesizes, and the caller
//! compares against the expected type where one exists (method returns,
//! argument positions), which is where subsumption happens.

use std::collections::BTreeSet;

use crate::ast::{
    all_ls_decl, subst_type_in_sig, DeclName, Expr, Program, TraitDecl, TypeRef, TypeSubst,
};
use crate::diag::{codes, sort_diagnostics, Diagnostic};
use crate::par::pmap;
use crate::traits::{self, Table};

/// The ordered variable environment. No shadowing exists after
/// well-formedness, so first match is the only match.
#[derive(Clone, Debug, Default)]
pub struct TypeEnv {
    pub vars: Vec<(String, TypeRef)>,
}

impl TypeEnv {
    pub fn get(&self, name: &str) -> Option<&TypeRef> {
        // Innermost binding wins (relevant only before shadowing is rejected).
        self.vars.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn with(&self, name: impl Into<String>, ty: TypeRef) -> TypeEnv {
        let mut v = self.clone();
        v.vars.push((name.into(), ty));
        v
    }
}

pub fn check_program(p: &Program) -> Vec<Diagnostic> {
    let results = pmap(&p.top_level, |d| check_top_decl(p, d));
    let mut diags: Vec<Diagnostic> = results.into_iter().flatten().collect();
    sort_diagnostics(&mut diags);
    diags
}

/// Sequential twin of `check_program`, kept for benchmarking.
pub fn check_program_sequential(p: &Program) -> Vec<Diagnostic> {
    let results = crate::par::seq_map(&p.top_level, |d| check_top_decl(p, d));
    let mut diags: Vec<Diagnostic> = results.into_iter().flatten().collect();
    sort_diagnostics(&mut diags);
    diags
}

fn check_top_decl(p: &Program, d: &TraitDecl) -> Vec<Diagnostic> {
    let mut ck = Checker { table: &p.table, diags: Vec::new(), local: Vec::new() };
    let env = TypeEnv::default();
    let tvars = BTreeSet::new();
    ck.check_lit(&env, &tvars, d, &d.identity_targs());
    ck.diags
}

/// Synthesizes the type of a closed expression; used by the metatheory
/// suite on mid-reduction terms. The table is augmented with the literals
/// the expression itself carries, which is what lets reduction-synthesized
/// declarations participate in subtyping.
pub fn type_of_closed(p: &Program, e: &Expr) -> Result<TypeRef, Vec<Diagnostic>> {
    let table = closed_expr_table(p, e);
    let mut ck = Checker { table: &table, diags: Vec::new(), local: Vec::new() };
    let env = TypeEnv::default();
    let tvars = BTreeSet::new();
    match ck.type_of(&env, &tvars, e) {
        Some(t) if ck.diags.is_empty() => Ok(t),
        _ => Err(ck.diags),
    }
}

/// The program table extended with the literals carried by `e` itself.
pub fn closed_expr_table(p: &Program, e: &Expr) -> Table {
    let mut table = p.table.clone();
    let mut ls = Vec::new();
    crate::ast::all_ls_expr(e, &mut ls);
    for d in ls {
        table.entry(d.name.clone()).or_insert_with(|| d.clone());
    }
    table
}

pub(crate) struct Checker<'a> {
    pub table: &'a Table,
    pub diags: Vec<Diagnostic>,
    /// Declarations under check that are not table entries (literals
    /// synthesized at runtime); self-typed lookups resolve through them.
    pub local: Vec<TraitDecl>,
}

impl<'a> Checker<'a> {
    fn err(&mut self, code: &'static str, span: crate::span::Span, msg: String) {
        self.diags.push(Diagnostic::error(code, span, msg));
    }

    /// LIT-OK: each method body checks under the captured environment plus
    /// the self binding and the method's own binders; override and
    /// implementation compatibility hold for the instantiation.
    pub fn check_lit(
        &mut self,
        env: &TypeEnv,
        tvars: &BTreeSet<String>,
        decl: &TraitDecl,
        targs: &[TypeRef],
    ) {
        let t = TypeRef::Concrete { rc: None, name: decl.name.clone(), args: targs.to_vec() };
        if !self.composition_ok(&t, decl) {
            return;
        }
        let local_pushed = !self.in_table(decl);
        if local_pushed {
            self.local.push(decl.clone());
        }
        let is_identity = targs == decl.identity_targs().as_slice();
        let mut tvars2 = tvars.clone();
        if is_identity {
            tvars2.extend(decl.type_params.iter().cloned());
        }
        let subst: TypeSubst = decl
            .type_params
            .iter()
            .cloned()
            .zip(targs.iter().cloned())
            .collect();
        for m in &decl.methods {
            let Some(body) = &m.body else { continue };
            let sig = subst_type_in_sig(&m.sig, &subst);
            let mut env2 = env.with(decl.self_name.clone(), t.clone());
            for (pname, pty) in &sig.params {
                env2 = env2.with(pname.clone(), pty.clone());
            }
            let mut tvars3 = tvars2.clone();
            tvars3.extend(sig.type_params.iter().cloned());
            if let Some(bt) = self.type_of(&env2, &tvars3, body) {
                if !traits::is_subtype(self.table, &bt, &sig.ret) {
                    self.err(
                        codes::E_TY_BODY,
                        body.span(),
                        format!(
                            "method {} body has type {bt}, which is not a subtype of the declared return type {}",
                            sig.name, sig.ret
                        ),
                    );
                }
            }
        }
        if local_pushed {
            self.local.pop();
        }
    }

    /// overrideOk and implementOk for one instantiation. Returns false when
    /// composition failed badly enough that `meths` would be meaningless.
    pub fn composition_ok(&mut self, t: &TypeRef, decl: &TraitDecl) -> bool {
        let mut ok = true;
        for (a, b) in self.dm_override_violations(t, decl) {
            ok = false;
            self.err(
                codes::E_TY_OVERRIDE,
                decl.span,
                format!(
                    "incompatible signatures for {} inherited from {} and {}",
                    a.name(),
                    a.origin,
                    b.origin
                ),
            );
        }
        for (a, b) in self.dm_implement_violations(t, decl) {
            ok = false;
            self.err(
                codes::E_TY_CONFLICT,
                decl.span,
                format!(
                    "conflicting implementations of {} from {} and {}; an explicit override is required",
                    a.name(),
                    a.origin,
                    b.origin
                ),
            );
        }
        ok
    }

    fn dm_override_violations(
        &self,
        t: &TypeRef,
        decl: &TraitDecl,
    ) -> Vec<(traits::DM, traits::DM)> {
        if self.in_table(decl) {
            traits::override_violations(self.table, t)
        } else {
            let targs = match t {
                TypeRef::Concrete { args, .. } => args.clone(),
                _ => vec![],
            };
            match traits::dmeths_of_decl(self.table, decl, &targs) {
                Some(dms) => {
                    let mut out = Vec::new();
                    for (i, a) in dms.iter().enumerate() {
                        for b in &dms[i + 1..] {
                            if a.name() == b.name()
                                && !crate::ast::alpha_eq_mtype(&a.mtype(), &b.mtype())
                            {
                                out.push((a.clone(), b.clone()));
                            }
                        }
                    }
                    out
                }
                None => Vec::new(),
            }
        }
    }

    fn dm_implement_violations(
        &self,
        t: &TypeRef,
        decl: &TraitDecl,
    ) -> Vec<(traits::DM, traits::DM)> {
        if self.in_table(decl) {
            traits::implement_violations(self.table, t)
        } else {
            Vec::new()
        }
    }

    fn in_table(&self, decl: &TraitDecl) -> bool {
        self.table.contains_key(&decl.name)
    }

    pub fn effective_meths(&self, decl: &TraitDecl, targs: &[TypeRef]) -> Vec<traits::DM> {
        let t = TypeRef::Concrete { rc: None, name: decl.name.clone(), args: targs.to_vec() };
        if self.in_table(decl) {
            traits::meths(self.table, &t).unwrap_or_default()
        } else {
            traits::meths_of_decl(self.table, decl, targs).unwrap_or_default()
        }
    }

    /// VAR-T, CALL-T, LIT-T.
    pub fn type_of(
        &mut self,
        env: &TypeEnv,
        tvars: &BTreeSet<String>,
        e: &Expr,
    ) -> Option<TypeRef> {
        match e {
            Expr::Var { name, span } => match env.get(name) {
                Some(t) => Some(t.clone()),
                None => {
                    self.err(
                        codes::E_TY_UNBOUND_VAR,
                        *span,
                        format!("variable `{name}` is not in scope"),
                    );
                    None
                }
            },
            Expr::Lit { targs, decl, span, .. } => {
                let mut free = Vec::new();
                for t in targs {
                    t.free_type_vars(&mut free);
                }
                if let Some(x) = free.iter().find(|x| !tvars.contains(x.as_str())) {
                    self.err(
                        codes::E_WF_FUNNEL,
                        *span,
                        format!("type variable `{x}` is not in scope here"),
                    );
                    return None;
                }
                // Every effective method must be implemented somewhere.
                for dm in self.effective_meths(decl, targs) {
                    if dm.method.is_abstract() {
                        self.err(
                            codes::E_TY_ABSTRACT,
                            *span,
                            format!(
                                "cannot instantiate {}: method {} from {} is abstract",
                                decl.name,
                                dm.name(),
                                dm.origin
                            ),
                        );
                    }
                }
                self.check_lit(env, tvars, decl, targs);
                Some(TypeRef::Concrete {
                    rc: None,
                    name: decl.name.clone(),
                    args: targs.clone(),
                })
            }
            Expr::Call { recv, meth, targs, args, span } => {
                let t0 = self.type_of(env, tvars, recv)?;
                let TypeRef::Concrete { .. } = &t0 else {
                    self.err(
                        codes::E_TY_NO_METHOD,
                        *span,
                        format!("type {t0} has no methods (type variables cannot be receivers)"),
                    );
                    return None;
                };
                let dm = match self.lookup_meth(recv, &t0, meth) {
                    Some(dm) => dm,
                    None => {
                        self.err(
                            codes::E_TY_NO_METHOD,
                            *span,
                            format!("no method {meth} on {t0}"),
                        );
                        return None;
                    }
                };
                let sig = &dm.method.sig;
                if sig.type_params.len() != targs.len() {
                    self.err(
                        codes::E_TY_ARG,
                        *span,
                        format!(
                            "{} expects {} type arguments, got {}",
                            meth,
                            sig.type_params.len(),
                            targs.len()
                        ),
                    );
                    return None;
                }
                let sig = crate::ast::instantiate_sig(sig, targs);
                for (arg, (_, pty)) in args.iter().zip(&sig.params) {
                    if let Some(at) = self.type_of(env, tvars, arg) {
                        if !traits::is_subtype(self.table, &at, pty) {
                            self.err(
                                codes::E_TY_ARG,
                                arg.span(),
                                format!(
                                    "argument has type {at}, but {} expects {pty}",
                                    sig.name
                                ),
                            );
                        }
                    }
                }
                Some(sig.ret.clone())
            }
        }
    }

    /// Finds a method on the receiver type; falls back to the receiver
    /// literal's embedded declaration when its name is not a table entry
    /// (runtime-synthesized literals).
    fn lookup_meth(
        &self,
        recv: &Expr,
        t0: &TypeRef,
        meth: &crate::ast::MethName,
    ) -> Option<traits::DM> {
        let TypeRef::Concrete { name, args, .. } = t0 else {
            return None;
        };
        if self.table.contains_key(name) {
            traits::find_meth(self.table, t0, meth)
        } else if let Expr::Lit { decl, .. } = recv {
            traits::meths_of_decl(self.table, decl, args)?
                .into_iter()
                .find(|dm| dm.name() == meth)
        } else if let Some(d) = self.local.iter().rev().find(|d| &d.name == name) {
            traits::meths_of_decl(self.table, &d.clone(), args)?
                .into_iter()
                .find(|dm| dm.name() == meth)
        } else {
            None
        }
    }
}

/// Checks whether declaration `name` transitively implements `of`.
pub fn implements(table: &Table, name: &DeclName, of: &DeclName) -> bool {
    let Some(decl) = table.get(name) else {
        return false;
    };
    let t = TypeRef::Concrete { rc: None, name: decl.name.clone(), args: decl.identity_targs() };
    traits::supers_closure(table, &t)
        .iter()
        .any(|s| matches!(s, TypeRef::Concrete { name: n, .. } if n == of))
}

/// Collects the duplicate-name pairs in the full literal set of a program.
pub fn duplicate_decl_names(p: &Program) -> Vec<(DeclName, crate::span::Span)> {
    let mut seen = BTreeSet::new();
    let mut dups = Vec::new();
    for d in &p.top_level {
        for l in all_ls_decl(d) {
            if !seen.insert(l.name.clone()) {
                dups.push((l.name.clone(), l.span));
            }
        }
    }
    dups
}
