//! Elaboration: from the desugared surface tree to the fully explicit core
//! program.
//!
//! Bidirectional and deliberately modest: literals lacking a declared trait
//! take the target type's trait; a literal body implementing the target's
//! inferred method copies its signature; omitted generic arguments at call
//! sites are solved by first-order unification of declared parameter types
//! against synthesized argument types, then the expected return type. In rc
//! mode, omitted capabilities become imm and literals take the expected
//! capability.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::{
    fresh_name, subst_type_in_sig, Capability, DeclName, Expr, Method, MethName, Mode, Program,
    Sig, TraitDecl, TypeRef, TypeSubst,
};
use crate::diag::{codes, sort_diagnostics, Diagnostic};
use crate::heart::TypeEnv;
use crate::parse::{SExpr, SLit, SLitBody, SMethod, SProgram, SType};
use crate::rc::adapt_env;
use crate::span::Span;
use crate::sugar::collect_identifiers;
use crate::traits::{self, Table};

pub fn elaborate(sp: &SProgram, mode: Mode) -> Result<Program, Vec<Diagnostic>> {
    let mut e = Elab {
        mode,
        table: Table::new(),
        known: BTreeSet::new(),
        used: collect_identifiers(sp),
        diags: Vec::new(),
    };
    e.pass1(sp)?;
    let tops = e.pass2(sp);
    if e.diags.is_empty() {
        Ok(Program::assemble(tops, mode))
    } else {
        sort_diagnostics(&mut e.diags);
        Err(e.diags)
    }
}

struct Elab {
    mode: Mode,
    /// Provisional declarations: resolved signatures, placeholder bodies.
    table: Table,
    known: BTreeSet<DeclName>,
    used: BTreeSet<String>,
    diags: Vec<Diagnostic>,
}

/// Placeholder body marking a method as concrete before its body exists.
fn placeholder_body(span: Span) -> Expr {
    Expr::Var { name: "#body".into(), span }
}

fn err_type() -> TypeRef {
    TypeRef::Concrete { rc: None, name: DeclName::new("#Err", 0), args: vec![] }
}

impl Elab {
    fn err(&mut self, code: &'static str, span: Span, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, span, msg.into()));
    }

    fn fresh(&mut self, base: &str) -> String {
        let name = fresh_name(base, &self.used);
        self.used.insert(name.clone());
        name
    }

    // -- pass 1: headers and signatures, in inheritance order ----------------

    fn pass1(&mut self, sp: &SProgram) -> Result<(), Vec<Diagnostic>> {
        let mut named: Vec<(DeclName, &SLit, BTreeSet<String>)> = Vec::new();
        for d in &sp.decls {
            collect_named(d, &BTreeSet::new(), &mut named);
        }
        for (n, _, _) in &named {
            self.known.insert(n.clone());
        }
        // Kahn's algorithm over the implements edges among named decls.
        let index: BTreeMap<DeclName, usize> =
            named.iter().enumerate().map(|(i, (n, _, _))| (n.clone(), i)).collect();
        let mut deps: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); named.len()];
        let mut rdeps: Vec<Vec<usize>> = vec![Vec::new(); named.len()];
        for (i, (_, sl, _)) in named.iter().enumerate() {
            let head = sl.head.as_ref().unwrap();
            for sup in &head.supers {
                let dn = DeclName::new(sup.name.clone(), sup.args.len());
                if let Some(&j) = index.get(&dn) {
                    if i != j && deps[i].insert(j) {
                        rdeps[j].push(i);
                    }
                }
            }
        }
        let mut ready: Vec<usize> =
            (0..named.len()).filter(|i| deps[*i].is_empty()).collect();
        let mut order = Vec::new();
        while let Some(i) = ready.pop() {
            order.push(i);
            for &j in &rdeps[i].clone() {
                deps[j].remove(&i);
                if deps[j].is_empty() {
                    ready.push(j);
                }
            }
            ready.sort();
        }
        if order.len() != named.len() {
            let cycle: Vec<String> = (0..named.len())
                .filter(|i| !order.contains(i))
                .map(|i| named[i].0.to_string())
                .collect();
            let span = named
                .iter()
                .enumerate()
                .find(|(i, _)| !order.contains(i))
                .map(|(_, (_, sl, _))| sl.span)
                .unwrap_or_default();
            return Err(vec![Diagnostic::error(
                codes::E_WF_CYCLE,
                span,
                format!("inheritance cycle involving {}", cycle.join(", ")),
            )]);
        }
        for i in order {
            let (name, sl) = (named[i].0.clone(), named[i].1);
            if self.table.contains_key(&name) {
                continue; // duplicate declaration; well-formedness reports it
            }
            let enclosing = named[i].2.clone();
            let decl = self.header_decl(&name, sl, &enclosing);
            self.table.insert(name, decl);
        }
        Ok(())
    }

    /// Resolves a declaration header. Type variables from the enclosing
    /// lexical scope resolve leniently so the funnelling rule, not name
    /// resolution, reports a literal using them without redeclaration.
    fn header_decl(
        &mut self,
        name: &DeclName,
        sl: &SLit,
        enclosing_tvars: &BTreeSet<String>,
    ) -> TraitDecl {
        let head = sl.head.as_ref().unwrap();
        let mut tvars: BTreeSet<String> = head.type_params.iter().cloned().collect();
        tvars.extend(enclosing_tvars.iter().cloned());
        let supers: Vec<TypeRef> = head
            .supers
            .iter()
            .filter_map(|s| self.resolve_super(s, &tvars))
            .collect();
        let methods = match &sl.body {
            SLitBody::Methods(ms) => ms
                .iter()
                .map(|m| {
                    let sig = self.resolve_sig(&tvars, &supers, m);
                    Method {
                        body: m.body.as_ref().map(|b| placeholder_body(b.span())),
                        sig,
                    }
                })
                .collect(),
            SLitBody::Lambda { params, body } => {
                let sig = self.sam_sig(name, &tvars, &supers, params, sl.span);
                vec![Method { sig, body: Some(placeholder_body(body.span())) }]
            }
        };
        TraitDecl {
            name: name.clone(),
            type_params: head.type_params.clone(),
            supers,
            self_name: sl.self_name.clone().unwrap_or_else(|| "this".into()),
            methods,
            body_declared: false, // refined in pass 2
            span: sl.span,
        }
    }

    /// Resolves a surface type. Names in `tvars` become type variables;
    /// anything else must be a known declaration. In heart mode all
    /// capabilities are erased; in rc mode omitted ones become imm.
    fn resolve_stype(&mut self, st: &SType, tvars: &BTreeSet<String>) -> Option<TypeRef> {
        if tvars.contains(&st.name) {
            if !st.args.is_empty() {
                self.err(
                    codes::E_ELAB_UNKNOWN,
                    st.span,
                    format!("type variable `{}` cannot take type arguments", st.name),
                );
                return None;
            }
            return Some(match (self.mode, st.rc) {
                (Mode::Heart, _) | (Mode::Rc, None) => TypeRef::Var(st.name.clone()),
                (Mode::Rc, Some(rc)) => TypeRef::CapVar { rc, var: st.name.clone() },
            });
        }
        let dn = DeclName::new(st.name.clone(), st.args.len());
        if !self.known.contains(&dn) {
            self.err(
                codes::E_ELAB_UNKNOWN,
                st.span,
                format!("unknown trait `{dn}`"),
            );
            return None;
        }
        let args: Vec<TypeRef> = st
            .args
            .iter()
            .map(|a| self.resolve_stype(a, tvars).unwrap_or_else(err_type))
            .collect();
        let rc = match self.mode {
            Mode::Heart => None,
            Mode::Rc => Some(st.rc.unwrap_or(Capability::Imm)),
        };
        Some(TypeRef::Concrete { rc, name: dn, args })
    }

    /// Implemented traits carry no capability and must be concrete.
    fn resolve_super(&mut self, st: &SType, tvars: &BTreeSet<String>) -> Option<TypeRef> {
        if st.rc.is_some() {
            self.err(
                codes::E_ELAB_SUPER,
                st.span,
                "an implemented trait cannot carry a reference capability",
            );
        }
        if tvars.contains(&st.name) {
            self.err(
                codes::E_ELAB_SUPER,
                st.span,
                format!("`{}` is a type variable and cannot be implemented", st.name),
            );
            return None;
        }
        let mut t = self.resolve_stype(st, tvars)?;
        if let TypeRef::Concrete { rc, .. } = &mut t {
            *rc = None;
        }
        Some(t)
    }

    /// Resolves one method signature, copying whatever the user omitted from
    /// the equally named inherited method.
    fn resolve_sig(
        &mut self,
        decl_tvars: &BTreeSet<String>,
        supers: &[TypeRef],
        m: &SMethod,
    ) -> Sig {
        let s = &m.sig;
        let meth_name = MethName::new(s.name.clone(), s.params.len());
        let complete = s.ret.is_some() && s.params.iter().all(|p| p.ty.is_some());
        let inherited = if complete {
            None
        } else {
            match self.find_inherited(supers, &meth_name) {
                Some(sig) => Some(self.rename_sig_tparams(sig)),
                None => {
                    self.err(
                        codes::E_ELAB_INFER,
                        s.span,
                        format!(
                            "cannot infer the signature of {meth_name}: no implemented trait declares it; write the full signature"
                        ),
                    );
                    None
                }
            }
        };
        let type_params: Vec<String> = if !s.type_params.is_empty() {
            s.type_params.clone()
        } else {
            inherited.as_ref().map(|i| i.type_params.clone()).unwrap_or_default()
        };
        let mut tvars = decl_tvars.clone();
        tvars.extend(type_params.iter().cloned());
        let params: Vec<(String, TypeRef)> = s
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let ty = match (&p.ty, &inherited) {
                    (Some(st), _) => self.resolve_stype(st, &tvars).unwrap_or_else(err_type),
                    (None, Some(inh)) => inh
                        .params
                        .get(i)
                        .map(|(_, t)| t.clone())
                        .unwrap_or_else(err_type),
                    (None, None) => err_type(),
                };
                (p.name.clone(), ty)
            })
            .collect();
        let ret = match (&s.ret, &inherited) {
            (Some(st), _) => self.resolve_stype(st, &tvars).unwrap_or_else(err_type),
            (None, Some(inh)) => inh.ret.clone(),
            (None, None) => err_type(),
        };
        let recv_rc = match self.mode {
            Mode::Heart => None,
            Mode::Rc => Some(
                s.recv_rc
                    .or(inherited.as_ref().and_then(|i| i.recv_rc))
                    .unwrap_or(Capability::Imm),
            ),
        };
        Sig { recv_rc, name: meth_name, type_params, params, ret, span: s.span }
    }

    /// The method a lambda-bodied literal implements: among the inherited
    /// effective methods of matching parameter arity, the unique abstract
    /// one, else the unique method, else the first in collection order.
    fn sam_sig(
        &mut self,
        name: &DeclName,
        decl_tvars: &BTreeSet<String>,
        supers: &[TypeRef],
        params: &[String],
        span: Span,
    ) -> Sig {
        let probe = TraitDecl {
            name: name.clone(),
            type_params: decl_tvars.iter().cloned().collect(),
            supers: supers.to_vec(),
            self_name: "this".into(),
            methods: vec![],
            body_declared: false,
            span,
        };
        let targs: Vec<TypeRef> = probe.identity_targs();
        let all = traits::meths_of_decl(&self.table, &probe, &targs).unwrap_or_default();
        let candidates: Vec<&traits::DM> =
            all.iter().filter(|dm| dm.name().arity == params.len()).collect();
        let abstracts: Vec<&&traits::DM> =
            candidates.iter().filter(|dm| dm.method.is_abstract()).collect();
        let chosen: Option<&traits::DM> = if abstracts.len() == 1 {
            Some(*abstracts[0])
        } else if candidates.len() == 1 {
            Some(candidates[0])
        } else {
            candidates.first().copied()
        };
        let Some(dm) = chosen.cloned() else {
            self.err(
                codes::E_ELAB_INFER,
                span,
                format!(
                    "cannot infer which method this literal implements: no inherited method takes {} parameters",
                    params.len()
                ),
            );
            return Sig {
                recv_rc: (self.mode == Mode::Rc).then_some(Capability::Imm),
                name: MethName::new("#err", params.len()),
                type_params: vec![],
                params: params.iter().map(|p| (p.clone(), err_type())).collect(),
                ret: err_type(),
                span,
            };
        };
        let inh = self.rename_sig_tparams(dm.method.sig.clone());
        Sig {
            recv_rc: match self.mode {
                Mode::Heart => None,
                Mode::Rc => Some(inh.recv_rc.unwrap_or(Capability::Imm)),
            },
            name: inh.name.clone(),
            type_params: inh.type_params.clone(),
            params: params
                .iter()
                .cloned()
                .zip(inh.params.iter().map(|(_, t)| t.clone()))
                .collect(),
            ret: inh.ret.clone(),
            span,
        }
    }

    fn find_inherited(&self, supers: &[TypeRef], name: &MethName) -> Option<Sig> {
        for sup in supers {
            if let Some(dms) = traits::dmeths(&self.table, sup) {
                if let Some(dm) = dms.into_iter().find(|dm| dm.name() == name) {
                    return Some(dm.method.sig);
                }
            }
        }
        None
    }

    /// Copied signatures get globally fresh type parameters, so they can
    /// never shadow anything in scope.
    fn rename_sig_tparams(&mut self, sig: Sig) -> Sig {
        if sig.type_params.is_empty() {
            return sig;
        }
        let mut subst = TypeSubst::new();
        let mut new_params = Vec::new();
        for tp in &sig.type_params {
            let fresh = self.fresh(tp);
            subst.insert(tp.clone(), TypeRef::Var(fresh.clone()));
            new_params.push(fresh);
        }
        let renamed = Sig {
            recv_rc: sig.recv_rc,
            name: sig.name.clone(),
            type_params: vec![],
            params: sig.params.clone(),
            ret: sig.ret.clone(),
            span: sig.span,
        };
        let mut renamed = subst_type_in_sig(&renamed, &subst);
        renamed.type_params = new_params;
        renamed
    }

    // -- pass 2: bodies -------------------------------------------------------

    fn pass2(&mut self, sp: &SProgram) -> Vec<TraitDecl> {
        let env = TypeEnv::default();
        let tvars = BTreeSet::new();
        sp.decls
            .iter()
            .map(|sl| {
                let lit_rc = match self.mode {
                    Mode::Heart => None,
                    Mode::Rc => Some(Capability::Mut),
                };
                self.elab_decl(sl, lit_rc, &env, &tvars, false)
            })
            .collect()
    }

    /// Elaborates the bodies of a named literal whose header is in the table.
    fn elab_decl(
        &mut self,
        sl: &SLit,
        lit_rc: Option<Capability>,
        env: &TypeEnv,
        enclosing_tvars: &BTreeSet<String>,
        body_declared: bool,
    ) -> TraitDecl {
        let head = sl.head.as_ref().unwrap();
        let name = DeclName::new(head.name.clone(), head.type_params.len());
        let prov = self.table.get(&name).cloned().unwrap_or_else(|| TraitDecl {
            name: name.clone(),
            type_params: head.type_params.clone(),
            supers: vec![],
            self_name: "this".into(),
            methods: vec![],
            body_declared,
            span: sl.span,
        });
        let surface_bodies: Vec<Option<&SExpr>> = match &sl.body {
            SLitBody::Methods(ms) => ms.iter().map(|m| m.body.as_ref()).collect(),
            SLitBody::Lambda { body, .. } => vec![Some(&**body)],
        };
        let methods =
            self.elab_method_bodies(&prov, lit_rc, env, enclosing_tvars, &surface_bodies);
        TraitDecl {
            name: prov.name,
            type_params: prov.type_params,
            supers: prov.supers,
            self_name: prov.self_name,
            methods,
            body_declared,
            span: sl.span,
        }
    }

    fn elab_method_bodies(
        &mut self,
        prov: &TraitDecl,
        lit_rc: Option<Capability>,
        env: &TypeEnv,
        enclosing_tvars: &BTreeSet<String>,
        surface_bodies: &[Option<&SExpr>],
    ) -> Vec<Method> {
        let identity = prov.identity_targs();
        let self_ty = TypeRef::Concrete {
            rc: lit_rc,
            name: prov.name.clone(),
            args: identity,
        };
        let mut out = Vec::new();
        for (i, m) in prov.methods.iter().enumerate() {
            let body = surface_bodies.get(i).copied().flatten();
            let Some(body) = body else {
                out.push(Method { sig: m.sig.clone(), body: None });
                continue;
            };
            let mut tvars = enclosing_tvars.clone();
            tvars.extend(prov.type_params.iter().cloned());
            tvars.extend(m.sig.type_params.iter().cloned());
            let captured = env.with(prov.self_name.clone(), self_ty.clone());
            let mut env2 = match (self.mode, lit_rc, m.sig.recv_rc) {
                (Mode::Rc, Some(lrc), Some(mrc)) => adapt_env(&captured, lrc, mrc).to_type_env(),
                _ => captured,
            };
            for (pname, pty) in &m.sig.params {
                env2 = env2.with(pname.clone(), pty.clone());
            }
            let elaborated = self
                .expr(&env2, &tvars, body, Some(&m.sig.ret))
                .map(|(e, _)| e)
                .unwrap_or_else(|| placeholder_body(body.span()));
            out.push(Method { sig: m.sig.clone(), body: Some(elaborated) });
        }
        out
    }

    // -- expressions ----------------------------------------------------------

    fn expr(
        &mut self,
        env: &TypeEnv,
        tvars: &BTreeSet<String>,
        e: &SExpr,
        expected: Option<&TypeRef>,
    ) -> Option<(Expr, TypeRef)> {
        match e {
            SExpr::Var { name, span } => match env.get(name) {
                Some(t) => Some((Expr::Var { name: name.clone(), span: *span }, t.clone())),
                None => {
                    self.err(
                        codes::E_TY_UNBOUND_VAR,
                        *span,
                        format!("variable `{name}` is not in scope (it may not be capturable here)"),
                    );
                    None
                }
            },
            SExpr::Lit(sl) => self.lit(env, tvars, sl, expected),
            SExpr::Call { recv, meth, targs, args, span } => {
                self.call(env, tvars, recv, meth, targs, args, *span, expected)
            }
            SExpr::Num { span, .. }
            | SExpr::Str { span, .. }
            | SExpr::Ref { span, .. }
            | SExpr::Bind { span, .. }
            | SExpr::SelfHole { span } => {
                self.err(codes::E_PARSE, *span, "expression form not eliminated by desugaring");
                None
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn call(
        &mut self,
        env: &TypeEnv,
        tvars: &BTreeSet<String>,
        recv: &SExpr,
        meth: &str,
        stargs: &[SType],
        args: &[SExpr],
        span: Span,
        expected: Option<&TypeRef>,
    ) -> Option<(Expr, TypeRef)> {
        let (recv_e, recv_t) = self.expr(env, tvars, recv, None)?;
        let meth_name = MethName::new(meth, args.len());
        let TypeRef::Concrete { .. } = &recv_t else {
            self.err(
                codes::E_TY_NO_METHOD,
                span,
                format!("type {recv_t} has no methods (type variables cannot be receivers)"),
            );
            return None;
        };
        let Some(dm) = traits::find_meth(&self.table, &recv_t, &meth_name) else {
            self.err(codes::E_TY_NO_METHOD, span, format!("no method {meth_name} on {recv_t}"));
            return None;
        };
        let sig = dm.method.sig;

        // Solve the method's type arguments.
        let mut synth_cache: Vec<Option<(Expr, TypeRef)>> = vec![None; args.len()];
        let targs: Vec<TypeRef> = if !stargs.is_empty() {
            if stargs.len() != sig.type_params.len() {
                self.err(
                    codes::E_TY_ARG,
                    span,
                    format!(
                        "{} expects {} type arguments, got {}",
                        meth_name,
                        sig.type_params.len(),
                        stargs.len()
                    ),
                );
                return None;
            }
            stargs
                .iter()
                .map(|t| self.resolve_stype(t, tvars).unwrap_or_else(err_type))
                .collect()
        } else if sig.type_params.is_empty() {
            Vec::new()
        } else {
            let tps: BTreeSet<String> = sig.type_params.iter().cloned().collect();
            let mut full = BTreeMap::new();
            let mut shape = BTreeMap::new();
            for (i, arg) in args.iter().enumerate() {
                if !synthesizable(arg) {
                    continue;
                }
                let ckpt = self.diags.len();
                match self.expr(env, tvars, arg, None) {
                    Some((e, t)) => {
                        self.unify(&sig.params[i].1, &t, &tps, &mut full, &mut shape);
                        synth_cache[i] = Some((e, t));
                    }
                    None => {
                        self.diags.truncate(ckpt);
                    }
                }
            }
            if let Some(exp) = expected {
                self.unify(&sig.ret, exp, &tps, &mut full, &mut shape);
            }
            let mut out = Vec::new();
            for tp in &sig.type_params {
                match full.get(tp).or_else(|| shape.get(tp)) {
                    Some(t) => out.push(t.clone()),
                    None => {
                        self.err(
                            codes::E_ELAB_INFER,
                            span,
                            format!(
                                "cannot infer type argument `{tp}` of {meth_name}; provide explicit type arguments"
                            ),
                        );
                        return None;
                    }
                }
            }
            out
        };

        let sig = crate::ast::instantiate_sig(&sig, &targs);
        let mut arg_es = Vec::new();
        for (i, arg) in args.iter().enumerate() {
            let elaborated = match synth_cache[i].take() {
                Some((e, _)) => Some(e),
                None => self
                    .expr(env, tvars, arg, Some(&sig.params[i].1))
                    .map(|(e, _)| e),
            };
            arg_es.push(elaborated.unwrap_or_else(|| placeholder_body(arg.span())));
        }
        Some((
            Expr::Call {
                recv: Box::new(recv_e),
                meth: meth_name,
                targs,
                args: arg_es,
                span,
            },
            sig.ret.clone(),
        ))
    }

    /// First-order unification binding only the method's type parameters.
    /// Bare-variable positions bind the whole actual type; capability-
    /// qualified positions bind its shape (the explicit capability overrides
    /// anyway, so an unconstrained capability defaults to imm). Rigid heads
    /// are matched through the actual type's supertypes.
    fn unify(
        &mut self,
        pattern: &TypeRef,
        actual: &TypeRef,
        tps: &BTreeSet<String>,
        full: &mut BTreeMap<String, TypeRef>,
        shape: &mut BTreeMap<String, TypeRef>,
    ) {
        match pattern {
            TypeRef::Var(x) if tps.contains(x) => {
                full.entry(x.clone()).or_insert_with(|| actual.clone());
            }
            TypeRef::CapVar { var, .. } if tps.contains(var) => {
                let norm = match self.mode {
                    Mode::Rc => actual.viewed(Capability::Imm),
                    Mode::Heart => actual.clone(),
                };
                shape.entry(var.clone()).or_insert(norm);
            }
            TypeRef::Concrete { name: pn, args: pargs, .. } => {
                let actual_args = match actual {
                    TypeRef::Concrete { name, args, .. } if name == pn => Some(args.clone()),
                    TypeRef::Concrete { .. } => traits::supers_closure(&self.table, actual)
                        .into_iter()
                        .find_map(|s| match s {
                            TypeRef::Concrete { name, args, .. } if &name == pn => Some(args),
                            _ => None,
                        }),
                    _ => None,
                };
                if let Some(aargs) = actual_args {
                    for (p, a) in pargs.iter().zip(aargs.iter()) {
                        self.unify(p, a, tps, full, shape);
                    }
                }
            }
            _ => {}
        }
    }

    fn lit(
        &mut self,
        env: &TypeEnv,
        tvars: &BTreeSet<String>,
        sl: &SLit,
        expected: Option<&TypeRef>,
    ) -> Option<(Expr, TypeRef)> {
        if let Some(head) = &sl.head {
            let name = DeclName::new(head.name.clone(), head.type_params.len());
            let Some(prov) = self.table.get(&name).cloned() else {
                self.err(
                    codes::E_ELAB_UNKNOWN,
                    sl.span,
                    format!("unknown trait `{name}`"),
                );
                return None;
            };
            let lit_rc = self.lit_rc(sl.rc, expected, &prov.methods);
            let decl = self.elab_decl(sl, lit_rc, env, tvars, true);
            let targs = decl.identity_targs();
            let ty = TypeRef::Concrete { rc: lit_rc, name: name.clone(), args: targs.clone() };
            // A pure wrapper around a numeral or string reports the magic
            // type, which is what inference wants to see.
            let synth_ty = self.magic_view(&decl).unwrap_or(ty);
            return Some((
                Expr::Lit { rc: lit_rc, targs, decl: Box::new(decl), span: sl.span },
                synth_ty,
            ));
        }
        // Anonymous literal: everything comes from the target type.
        let Some(expected) = expected else {
            self.err(
                codes::E_ELAB_INFER,
                sl.span,
                "cannot infer the trait this literal implements; annotate it or add a type",
            );
            return None;
        };
        let TypeRef::Concrete { name: target_name, args: target_args, .. } = expected
        else {
            self.err(
                codes::E_ELAB_INFER,
                sl.span,
                format!("cannot infer a literal against the type {expected}; annotate it"),
            );
            return None;
        };
        let mut funnel: Vec<String> = Vec::new();
        for a in target_args {
            a.free_type_vars(&mut funnel);
        }
        let fresh = self.fresh("Fresh");
        let name = DeclName::new(fresh, funnel.len());
        let target = TypeRef::Concrete {
            rc: None,
            name: target_name.clone(),
            args: target_args.clone(),
        };
        let target_meths = traits::meths(&self.table, &target).unwrap_or_default();
        let methods: Vec<Method> = match &sl.body {
            SLitBody::Methods(ms) => ms
                .iter()
                .map(|m| {
                    let sig = self.target_sig(&funnel, &target_meths, m, expected);
                    Method {
                        body: m.body.as_ref().map(|b| placeholder_body(b.span())),
                        sig,
                    }
                })
                .collect(),
            SLitBody::Lambda { params, body } => {
                let sig = self.target_sam_sig(&target_meths, params, sl.span);
                vec![Method { sig, body: Some(placeholder_body(body.span())) }]
            }
        };
        let lit_rc = self.lit_rc(sl.rc, Some(expected), &methods);
        let decl = TraitDecl {
            name: name.clone(),
            type_params: funnel.clone(),
            supers: vec![target],
            self_name: sl.self_name.clone().unwrap_or_else(|| "this".into()),
            methods,
            body_declared: true,
            span: sl.span,
        };
        self.known.insert(name.clone());
        self.table.insert(name.clone(), decl.clone());
        let surface_bodies: Vec<Option<&SExpr>> = match &sl.body {
            SLitBody::Methods(ms) => ms.iter().map(|m| m.body.as_ref()).collect(),
            SLitBody::Lambda { body, .. } => vec![Some(&**body)],
        };
        let decl = {
            let methods =
                self.elab_method_bodies(&decl, lit_rc, env, tvars, &surface_bodies);
            TraitDecl { methods, ..decl }
        };
        let targs = decl.identity_targs();
        let ty = TypeRef::Concrete { rc: lit_rc, name, args: targs.clone() };
        Some((Expr::Lit { rc: lit_rc, targs, decl: Box::new(decl), span: sl.span }, ty))
    }

    /// The capability a literal is formed at. Explicit wins; otherwise the
    /// expected capability, except that a read expectation over a literal
    /// defining mut or iso methods forms at mut (and reaches read by
    /// subsumption, since such methods cannot be defined by a read literal).
    fn lit_rc(
        &mut self,
        explicit: Option<Capability>,
        expected: Option<&TypeRef>,
        methods: &[Method],
    ) -> Option<Capability> {
        if self.mode == Mode::Heart {
            return None;
        }
        if let Some(rc) = explicit {
            return Some(rc);
        }
        let exp_rc = expected.and_then(|t| t.rc());
        Some(match exp_rc {
            Some(Capability::Read) => {
                let defines_mut = methods.iter().any(|m| {
                    matches!(
                        m.sig.recv_rc,
                        Some(Capability::Mut) | Some(Capability::Iso)
                    )
                });
                if defines_mut {
                    Capability::Mut
                } else {
                    Capability::Read
                }
            }
            Some(rc) => rc,
            None => Capability::Imm,
        })
    }

    /// For a pure wrapper literal around a numeral or string trait, the
    /// useful synthesized type is the magic supertype.
    fn magic_view(&self, decl: &TraitDecl) -> Option<TypeRef> {
        if !decl.methods.is_empty() || !decl.type_params.is_empty() || decl.supers.len() != 1 {
            return None;
        }
        let TypeRef::Concrete { name, .. } = &decl.supers[0] else {
            return None;
        };
        let first = name.base.chars().next()?;
        let magic = if first.is_ascii_digit() {
            DeclName::new("Num", 0)
        } else if first == '"' {
            DeclName::new("Str", 0)
        } else {
            return None;
        };
        if !self.known.contains(&magic) {
            return None;
        }
        let rc = (self.mode == Mode::Rc).then_some(Capability::Imm);
        Some(TypeRef::Concrete { rc, name: magic, args: vec![] })
    }

    /// Signature for a named method of an anonymous literal: copied from the
    /// target's effective method of the same name, user-provided parts kept.
    fn target_sig(
        &mut self,
        funnel: &[String],
        target_meths: &[traits::DM],
        m: &SMethod,
        expected: &TypeRef,
    ) -> Sig {
        let s = &m.sig;
        let meth_name = MethName::new(s.name.clone(), s.params.len());
        let inherited = target_meths
            .iter()
            .find(|dm| dm.name() == &meth_name)
            .map(|dm| self.rename_sig_tparams(dm.method.sig.clone()));
        let complete = s.ret.is_some() && s.params.iter().all(|p| p.ty.is_some());
        if inherited.is_none() && !complete {
            self.err(
                codes::E_ELAB_INFER,
                s.span,
                format!(
                    "cannot infer the signature of {meth_name}: {expected} does not declare it"
                ),
            );
        }
        let type_params: Vec<String> = if !s.type_params.is_empty() {
            s.type_params.clone()
        } else {
            inherited.as_ref().map(|i| i.type_params.clone()).unwrap_or_default()
        };
        let mut tvars: BTreeSet<String> = funnel.iter().cloned().collect();
        tvars.extend(type_params.iter().cloned());
        let params: Vec<(String, TypeRef)> = s
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let ty = match (&p.ty, &inherited) {
                    (Some(st), _) => self.resolve_stype(st, &tvars).unwrap_or_else(err_type),
                    (None, Some(inh)) => inh
                        .params
                        .get(i)
                        .map(|(_, t)| t.clone())
                        .unwrap_or_else(err_type),
                    (None, None) => err_type(),
                };
                (p.name.clone(), ty)
            })
            .collect();
        let ret = match (&s.ret, &inherited) {
            (Some(st), _) => self.resolve_stype(st, &tvars).unwrap_or_else(err_type),
            (None, Some(inh)) => inh.ret.clone(),
            (None, None) => err_type(),
        };
        let recv_rc = match self.mode {
            Mode::Heart => None,
            Mode::Rc => Some(
                s.recv_rc
                    .or(inherited.as_ref().and_then(|i| i.recv_rc))
                    .unwrap_or(Capability::Imm),
            ),
        };
        Sig { recv_rc, name: meth_name, type_params, params, ret, span: s.span }
    }

    fn target_sam_sig(
        &mut self,
        target_meths: &[traits::DM],
        params: &[String],
        span: Span,
    ) -> Sig {
        let candidates: Vec<&traits::DM> = target_meths
            .iter()
            .filter(|dm| dm.name().arity == params.len())
            .collect();
        let abstracts: Vec<&&traits::DM> =
            candidates.iter().filter(|dm| dm.method.is_abstract()).collect();
        let chosen: Option<&traits::DM> = if abstracts.len() == 1 {
            Some(*abstracts[0])
        } else if candidates.len() == 1 {
            Some(candidates[0])
        } else {
            candidates.first().copied()
        };
        let Some(dm) = chosen.cloned() else {
            self.err(
                codes::E_ELAB_INFER,
                span,
                format!(
                    "cannot infer which method this literal implements: the target has no method of {} parameters",
                    params.len()
                ),
            );
            return Sig {
                recv_rc: (self.mode == Mode::Rc).then_some(Capability::Imm),
                name: MethName::new("#err", params.len()),
                type_params: vec![],
                params: params.iter().map(|p| (p.clone(), err_type())).collect(),
                ret: err_type(),
                span,
            };
        };
        let inh = self.rename_sig_tparams(dm.method.sig.clone());
        Sig {
            recv_rc: match self.mode {
                Mode::Heart => None,
                Mode::Rc => Some(inh.recv_rc.unwrap_or(Capability::Imm)),
            },
            name: inh.name.clone(),
            type_params: inh.type_params.clone(),
            params: params
                .iter()
                .cloned()
                .zip(inh.params.iter().map(|(_, t)| t.clone()))
                .collect(),
            ret: inh.ret.clone(),
            span,
        }
    }
}

/// An argument whose type can be synthesized without a target: contains no
/// anonymous literal anywhere.
fn synthesizable(e: &SExpr) -> bool {
    match e {
        SExpr::Var { .. } | SExpr::Num { .. } | SExpr::Str { .. } | SExpr::Ref { .. } => true,
        SExpr::SelfHole { .. } | SExpr::Bind { .. } => false,
        SExpr::Call { recv, args, .. } => {
            synthesizable(recv) && args.iter().all(synthesizable)
        }
        SExpr::Lit(l) => {
            if l.head.is_none() {
                return false;
            }
            match &l.body {
                SLitBody::Methods(ms) => ms
                    .iter()
                    .all(|m| m.body.as_ref().map(synthesizable).unwrap_or(true)),
                SLitBody::Lambda { body, .. } => synthesizable(body),
            }
        }
    }
}

fn collect_named<'a>(
    sl: &'a SLit,
    scope: &BTreeSet<String>,
    out: &mut Vec<(DeclName, &'a SLit, BTreeSet<String>)>,
) {
    if let Some(h) = &sl.head {
        out.push((
            DeclName::new(h.name.clone(), h.type_params.len()),
            sl,
            scope.clone(),
        ));
    }
    let mut inner = scope.clone();
    if let Some(h) = &sl.head {
        inner.extend(h.type_params.iter().cloned());
    }
    match &sl.body {
        SLitBody::Methods(ms) => {
            for m in ms {
                if let Some(b) = &m.body {
                    let mut mscope = inner.clone();
                    mscope.extend(m.sig.type_params.iter().cloned());
                    collect_named_expr(b, &mscope, out);
                }
            }
        }
        SLitBody::Lambda { body, .. } => collect_named_expr(body, &inner, out),
    }
}

fn collect_named_expr<'a>(
    e: &'a SExpr,
    scope: &BTreeSet<String>,
    out: &mut Vec<(DeclName, &'a SLit, BTreeSet<String>)>,
) {
    match e {
        SExpr::Var { .. }
        | SExpr::SelfHole { .. }
        | SExpr::Ref { .. }
        | SExpr::Num { .. }
        | SExpr::Str { .. } => {}
        SExpr::Call { recv, args, .. } => {
            collect_named_expr(recv, scope, out);
            for a in args {
                collect_named_expr(a, scope, out);
            }
        }
        SExpr::Bind { recv, init, cont, .. } => {
            collect_named_expr(recv, scope, out);
            collect_named_expr(init, scope, out);
            collect_named_expr(cont, scope, out);
        }
        SExpr::Lit(l) => collect_named(l, scope, out),
    }
}
