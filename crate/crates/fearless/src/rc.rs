//! The capability-aware type system: environment adaptation for captures,
//! callable filtering, capability subtyping, and promotion.

use std::collections::{BTreeSet, HashMap};

use crate::ast::{
    subst_type_in_sig, Capability, Expr, Program, TraitDecl, TypeRef, TypeSubst,
};
use crate::diag::{codes, sort_diagnostics, Diagnostic};
use crate::heart::TypeEnv;
use crate::par::pmap;
use crate::span::Span;
use crate::traits::{self, Table};

// ---------------------------------------------------------------------------
// Environment adaptation
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Provenance {
    Kept,
    ViewedImm,
    ViewedRead,
    Dropped,
}

/// The result of `Γ[R0,R1]`: per binding, the first matching case decides
/// how a method of a literal sees a captured variable. Dropped bindings are
/// absent from lookups; the note remains for introspection.
#[derive(Clone, Debug)]
pub struct AdaptedEnv {
    pub bindings: Vec<(String, TypeRef, Provenance)>,
}

impl AdaptedEnv {
    pub fn to_type_env(&self) -> TypeEnv {
        TypeEnv {
            vars: self
                .bindings
                .iter()
                .filter(|(_, _, p)| *p != Provenance::Dropped)
                .map(|(n, t, _)| (n.clone(), t.clone()))
                .collect(),
        }
    }
}

/// First matching case wins:
/// 1. iso- or imm-typed bindings are seen as imm;
/// 2. if both the literal and the method are iso/mut, the binding is kept;
/// 3. an imm method of an iso/mut/read literal sees bindings as imm;
/// 4. a read method of an iso/mut/read literal sees bindings as read;
///
/// otherwise the binding is dropped.
pub fn adapt_env(env: &TypeEnv, lit_rc: Capability, meth_rc: Capability) -> AdaptedEnv {
    use Capability::*;
    let bindings = env
        .vars
        .iter()
        .map(|(name, t)| {
            let (t2, prov) = if matches!(t.rc(), Some(Iso) | Some(Imm)) {
                let t2 = t.viewed(Imm);
                let prov = if &t2 == t { Provenance::Kept } else { Provenance::ViewedImm };
                (t2, prov)
            } else if matches!(lit_rc, Iso | Mut) && matches!(meth_rc, Iso | Mut) {
                (t.clone(), Provenance::Kept)
            } else if meth_rc == Imm && matches!(lit_rc, Iso | Mut | Read) {
                (t.viewed(Imm), Provenance::ViewedImm)
            } else if meth_rc == Read && matches!(lit_rc, Iso | Mut | Read) {
                (t.viewed(Read), Provenance::ViewedRead)
            } else {
                (t.clone(), Provenance::Dropped)
            };
            (name.clone(), t2, prov)
        })
        .collect();
    AdaptedEnv { bindings }
}

/// `callable(R, M)`: an imm or read reference can only call imm and read
/// methods; mut and iso references can call everything.
pub fn callable(recv_rc: Capability, meth_rc: Capability) -> bool {
    use Capability::*;
    !(matches!(recv_rc, Imm | Read) && matches!(meth_rc, Mut | Iso))
}

// ---------------------------------------------------------------------------
// Promotion
// ---------------------------------------------------------------------------

/// mut promotes to iso, read to imm.
pub fn prom(rc: Capability) -> Capability {
    match rc {
        Capability::Mut => Capability::Iso,
        Capability::Read => Capability::Imm,
        other => other,
    }
}

/// Parameter-side promotion; bare type variables are pinned to iso.
pub fn prom_param(t: &TypeRef) -> TypeRef {
    match t {
        TypeRef::Concrete { rc, name, args } => TypeRef::Concrete {
            rc: rc.map(prom),
            name: name.clone(),
            args: args.clone(),
        },
        TypeRef::CapVar { rc, var } => TypeRef::CapVar { rc: prom(*rc), var: var.clone() },
        TypeRef::Var(x) => TypeRef::CapVar { rc: Capability::Iso, var: x.clone() },
    }
}

/// Return-side promotion; bare type variables are pinned to imm.
pub fn prom_ret(t: &TypeRef) -> TypeRef {
    match t {
        TypeRef::Concrete { rc, name, args } => TypeRef::Concrete {
            rc: rc.map(prom),
            name: name.clone(),
            args: args.clone(),
        },
        TypeRef::CapVar { rc, var } => TypeRef::CapVar { rc: prom(*rc), var: var.clone() },
        TypeRef::Var(x) => TypeRef::CapVar { rc: Capability::Imm, var: x.clone() },
    }
}

// ---------------------------------------------------------------------------
// Checking
// ---------------------------------------------------------------------------

/// A record of one method's adapted environment, for introspection.
#[derive(Clone, Debug)]
pub struct AdaptationRecord {
    pub lit: crate::ast::DeclName,
    pub lit_rc: Capability,
    pub meth: crate::ast::MethName,
    pub meth_rc: Capability,
    pub env: AdaptedEnv,
}

#[derive(Default)]
pub struct RcOutcome {
    pub diags: Vec<Diagnostic>,
    pub adaptations: Vec<AdaptationRecord>,
}

pub fn check_program(p: &Program) -> Vec<Diagnostic> {
    check_program_recording(p, false).diags
}

pub fn check_program_sequential(p: &Program) -> Vec<Diagnostic> {
    let results = crate::par::seq_map(&p.top_level, |d| check_top_decl(p, d, false));
    finish(results).diags
}

/// Every top-level literal checks as a mut literal under the empty
/// environment. Optionally records every adapted environment built.
pub fn check_program_recording(p: &Program, record: bool) -> RcOutcome {
    let results = pmap(&p.top_level, |d| check_top_decl(p, d, record));
    finish(results)
}

fn finish(results: Vec<RcOutcome>) -> RcOutcome {
    let mut out = RcOutcome::default();
    for r in results {
        out.diags.extend(r.diags);
        out.adaptations.extend(r.adaptations);
    }
    sort_diagnostics(&mut out.diags);
    out
}

fn check_top_decl(p: &Program, d: &TraitDecl, record: bool) -> RcOutcome {
    let mut ck = RcChecker {
        table: &p.table,
        diags: Vec::new(),
        memo: HashMap::new(),
        record,
        adaptations: Vec::new(),
    };
    let env = TypeEnv::default();
    let tvars = BTreeSet::new();
    ck.check_lit(&env, &tvars, Capability::Mut, d, &d.identity_targs());
    RcOutcome { diags: ck.diags, adaptations: ck.adaptations }
}

type MemoKey = (usize, Option<TypeRef>);

struct RcChecker<'a> {
    table: &'a Table,
    diags: Vec<Diagnostic>,
    /// Successful results per (expression identity, expected type); bounds
    /// the plain-then-promoted resolution, which would otherwise re-check
    /// shared subterms exponentially often.
    memo: HashMap<MemoKey, TypeRef>,
    record: bool,
    adaptations: Vec<AdaptationRecord>,
}

struct Expectation<'e> {
    ty: &'e TypeRef,
    code: &'static str,
}

impl<'a> RcChecker<'a> {
    fn err(&mut self, code: &'static str, span: Span, msg: String) {
        self.diags.push(Diagnostic::error(code, span, msg));
    }

    /// R-LIT-OK: methods check under the adapted environment; override and
    /// implementation compatibility hold.
    fn check_lit(
        &mut self,
        env: &TypeEnv,
        tvars: &BTreeSet<String>,
        lit_rc: Capability,
        decl: &TraitDecl,
        targs: &[TypeRef],
    ) {
        let bare = TypeRef::Concrete { rc: None, name: decl.name.clone(), args: targs.to_vec() };
        if self.table.contains_key(&decl.name) {
            let mut ok = true;
            for (a, b) in traits::override_violations(self.table, &bare) {
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
            for (a, b) in traits::implement_violations(self.table, &bare) {
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
            if !ok {
                return;
            }
        }
        let self_ty =
            TypeRef::Concrete { rc: Some(lit_rc), name: decl.name.clone(), args: targs.to_vec() };
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
            let meth_rc = sig.recv_rc.unwrap_or(Capability::Imm);
            let captured = env.with(decl.self_name.clone(), self_ty.clone());
            let adapted = adapt_env(&captured, lit_rc, meth_rc);
            if self.record {
                self.adaptations.push(AdaptationRecord {
                    lit: decl.name.clone(),
                    lit_rc,
                    meth: sig.name.clone(),
                    meth_rc,
                    env: adapted.clone(),
                });
            }
            let mut env2 = adapted.to_type_env();
            for (pname, pty) in &sig.params {
                env2 = env2.with(pname.clone(), pty.clone());
            }
            let mut tvars3 = tvars2.clone();
            tvars3.extend(sig.type_params.iter().cloned());
            let saved_memo = std::mem::take(&mut self.memo);
            self.type_of(
                &env2,
                &tvars3,
                body,
                Some(&Expectation { ty: &sig.ret, code: codes::E_TY_SUBSUME }),
            );
            self.memo = saved_memo;
        }
    }

    /// VAR-T / R-LIT-T / CALL-T / PROM-CALL-T, with subsumption against the
    /// expectation where one is given.
    fn type_of(
        &mut self,
        env: &TypeEnv,
        tvars: &BTreeSet<String>,
        e: &Expr,
        expected: Option<&Expectation<'_>>,
    ) -> Option<TypeRef> {
        let key: MemoKey = (e as *const Expr as usize, expected.map(|x| x.ty.clone()));
        if let Some(t) = self.memo.get(&key) {
            return Some(t.clone());
        }
        let t = self.type_of_uncached(env, tvars, e, expected)?;
        self.memo.insert(key, t.clone());
        Some(t)
    }

    fn subsume(&mut self, t: &TypeRef, expected: Option<&Expectation<'_>>, span: Span) -> bool {
        match expected {
            None => true,
            Some(exp) => {
                if traits::is_subtype(self.table, t, exp.ty) {
                    true
                } else {
                    self.err(
                        exp.code,
                        span,
                        format!("found type {t}, which is not a subtype of {}", exp.ty),
                    );
                    false
                }
            }
        }
    }

    fn type_of_uncached(
        &mut self,
        env: &TypeEnv,
        tvars: &BTreeSet<String>,
        e: &Expr,
        expected: Option<&Expectation<'_>>,
    ) -> Option<TypeRef> {
        match e {
            Expr::Var { name, span } => {
                let t = match env.get(name) {
                    Some(t) => t.clone(),
                    None => {
                        self.err(
                            codes::E_TY_UNBOUND_VAR,
                            *span,
                            format!("variable `{name}` is not in scope (it may not be capturable here)"),
                        );
                        return None;
                    }
                };
                self.subsume(&t, expected, *span).then_some(t)
            }
            Expr::Lit { rc, targs, decl, span } => {
                let lit_rc = rc.unwrap_or(Capability::Imm);
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
                // Defined methods must be callable at the literal capability;
                // callable inherited methods must not stay abstract.
                for m in &decl.methods {
                    let m_rc = m.sig.recv_rc.unwrap_or(Capability::Imm);
                    if !callable(lit_rc, m_rc) {
                        self.err(
                            codes::E_TY_DEAD_METHOD,
                            m.sig.span,
                            format!(
                                "method {} has receiver capability {} and can never be called on this {} literal",
                                m.sig.name,
                                m_rc,
                                lit_rc
                            ),
                        );
                    }
                }
                for dm in self.effective_meths(decl, targs) {
                    let m_rc = dm.method.sig.recv_rc.unwrap_or(Capability::Imm);
                    if callable(lit_rc, m_rc) && dm.method.is_abstract() {
                        self.err(
                            codes::E_TY_ABSTRACT,
                            *span,
                            format!(
                                "cannot instantiate {}: callable method {} from {} is abstract",
                                decl.name,
                                dm.name(),
                                dm.origin
                            ),
                        );
                    }
                }
                self.check_lit(env, tvars, lit_rc, decl, targs);
                let t = TypeRef::Concrete {
                    rc: Some(lit_rc),
                    name: decl.name.clone(),
                    args: targs.clone(),
                };
                self.subsume(&t, expected, *span).then_some(t)
            }
            Expr::Call { recv, meth, targs, args, span } => {
                let t0 = self.type_of(env, tvars, recv, None)?;
                let TypeRef::Concrete { rc: Some(r0), .. } = &t0 else {
                    self.err(
                        codes::E_TY_NO_METHOD,
                        *span,
                        format!("type {t0} has no methods (type variables cannot be receivers)"),
                    );
                    return None;
                };
                let r0 = *r0;
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
                let meth_rc = sig.recv_rc.unwrap_or(Capability::Imm);
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

                // Plain rule first; on failure the promoted rule, applicable
                // to imm and iso receivers only. If neither fits, the plain
                // attempt's diagnostics stand.
                let ckpt = self.diags.len();
                if let Some(t) =
                    self.plain_call(env, tvars, r0, meth_rc, &sig, args, expected, *span)
                {
                    return Some(t);
                }
                let plain_diags: Vec<Diagnostic> = self.diags.drain(ckpt..).collect();
                let promotable = matches!(r0, Capability::Imm | Capability::Iso)
                    && traits::cap_le(r0, meth_rc);
                if promotable {
                    let ckpt2 = self.diags.len();
                    if let Some(t) =
                        self.promoted_call(env, tvars, &sig, args, expected, *span)
                    {
                        return Some(t);
                    }
                    self.diags.truncate(ckpt2);
                }
                self.diags.extend(plain_diags);
                None
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn plain_call(
        &mut self,
        env: &TypeEnv,
        tvars: &BTreeSet<String>,
        r0: Capability,
        meth_rc: Capability,
        sig: &crate::ast::Sig,
        args: &[Expr],
        expected: Option<&Expectation<'_>>,
        span: Span,
    ) -> Option<TypeRef> {
        if !traits::cap_le(r0, meth_rc) {
            self.err(
                codes::E_TY_CALLABLE,
                span,
                format!(
                    "cannot call {} method {} on a {} receiver",
                    meth_rc, sig.name, r0
                ),
            );
            return None;
        }
        let mut ok = true;
        for (arg, (_, pty)) in args.iter().zip(&sig.params) {
            let exp = Expectation { ty: pty, code: codes::E_TY_ARG };
            if self.type_of(env, tvars, arg, Some(&exp)).is_none() {
                ok = false;
            }
        }
        if !ok {
            return None;
        }
        let ret = sig.ret.clone();
        self.subsume(&ret, expected, span).then_some(ret)
    }

    fn promoted_call(
        &mut self,
        env: &TypeEnv,
        tvars: &BTreeSet<String>,
        sig: &crate::ast::Sig,
        args: &[Expr],
        expected: Option<&Expectation<'_>>,
        span: Span,
    ) -> Option<TypeRef> {
        let mut ok = true;
        for (arg, (_, pty)) in args.iter().zip(&sig.params) {
            let pty = prom_param(pty);
            let exp = Expectation { ty: &pty, code: codes::E_TY_ARG };
            if self.type_of(env, tvars, arg, Some(&exp)).is_none() {
                ok = false;
            }
        }
        if !ok {
            return None;
        }
        let ret = prom_ret(&sig.ret);
        self.subsume(&ret, expected, span).then_some(ret)
    }

    fn effective_meths(&self, decl: &TraitDecl, targs: &[TypeRef]) -> Vec<traits::DM> {
        let t = TypeRef::Concrete { rc: None, name: decl.name.clone(), args: targs.to_vec() };
        if self.table.contains_key(&decl.name) {
            traits::meths(self.table, &t).unwrap_or_default()
        } else {
            traits::meths_of_decl(self.table, decl, targs).unwrap_or_default()
        }
    }

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
        } else {
            None
        }
    }
}
