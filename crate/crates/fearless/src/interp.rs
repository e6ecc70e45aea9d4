//! Small-step, call-by-value interpreter: the four reduction rules plus a
//! store-backed magic layer for mutable cells, the system capability,
//! iso pods, numerals, and strings.
//!
//! Values are object literals. Magic values are literals with reserved
//! declaration names (`#cell:n`, `#pod:n`, `#system`) or literals reaching a
//! numeral- or string-named trait, so substitution works uniformly.
//! Capabilities are erased at runtime.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use crate::ast::{
    subst_type_in_expr, subst_vars, DeclName, Expr, Method, MethName, Program, TraitDecl,
    TypeRef, TypeSubst, VarSubst,
};
use crate::diag::codes;
use crate::lex::{escape_str, unescape_str};
use crate::span::Span;
use crate::traits;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Rule {
    CtxRecv,
    CtxArg,
    CallLit,
    CallTop,
    Magic,
}

#[derive(Clone, Debug)]
pub struct RtError {
    pub code: &'static str,
    pub message: String,
}

impl RtError {
    fn new(code: &'static str, message: impl Into<String>) -> RtError {
        RtError { code, message: message.into() }
    }
}

/// Classification of a runtime value.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Plain(Expr),
    Num(BigInt),
    Str(String),
    RefCell(u64),
    System,
    IsoPod(u64),
}

/// Interpreter state shared across steps of one evaluation.
pub struct Interp<'a> {
    pub program: &'a Program,
    pub store: BTreeMap<u64, Expr>,
    pub output: Vec<u8>,
    pub steps: u64,
    next_cell: u64,
}

pub enum StepOut {
    /// The expression is a value.
    Done(Expr),
    Next(Expr, Rule),
}

impl<'a> Interp<'a> {
    pub fn new(program: &'a Program) -> Interp<'a> {
        Interp { program, store: BTreeMap::new(), output: Vec::new(), steps: 0, next_cell: 0 }
    }

    pub fn classify(&self, e: &Expr) -> Option<Value> {
        let Expr::Lit { decl, .. } = e else { return None };
        let base = &decl.name.base;
        if let Some(id) = base.strip_prefix("#cell:") {
            return id.parse().ok().map(Value::RefCell);
        }
        if let Some(id) = base.strip_prefix("#pod:") {
            return id.parse().ok().map(Value::IsoPod);
        }
        if base == "#system" {
            return Some(Value::System);
        }
        if let Some(v) = magic_payload(base) {
            return Some(v);
        }
        // Wrappers reach the numeral or string trait through their supers.
        let targs: Vec<TypeRef> = match e {
            Expr::Lit { targs, .. } => targs.clone(),
            _ => vec![],
        };
        for s in traits::supers_closure_of_decl(&self.program.table, decl, &targs) {
            if let TypeRef::Concrete { name, .. } = s {
                if let Some(v) = magic_payload(&name.base) {
                    return Some(v);
                }
            }
        }
        Some(Value::Plain(e.clone()))
    }

    /// One reduction step: leftmost-innermost. The returned rule is the one
    /// applied at the root.
    pub fn step(&mut self, e: Expr) -> Result<StepOut, RtError> {
        if e.is_value() {
            return Ok(StepOut::Done(e));
        }
        let Expr::Call { recv, meth, targs, args, span } = e else {
            return Err(RtError::new(
                codes::E_RT_STUCK,
                "a free variable reached reduction; the expression is open",
            ));
        };
        if !recv.is_value() {
            return match self.step(*recv)? {
                StepOut::Next(r2, _) => Ok(StepOut::Next(
                    Expr::Call { recv: Box::new(r2), meth, targs, args, span },
                    Rule::CtxRecv,
                )),
                StepOut::Done(_) => unreachable!("non-value cannot be done"),
            };
        }
        if let Some(i) = args.iter().position(|a| !a.is_value()) {
            let mut args = args;
            let stepped = match self.step(args[i].clone())? {
                StepOut::Next(a2, _) => a2,
                StepOut::Done(_) => unreachable!("non-value cannot be done"),
            };
            args[i] = stepped;
            return Ok(StepOut::Next(
                Expr::Call { recv, meth, targs, args, span },
                Rule::CtxArg,
            ));
        }
        self.dispatch(*recv, meth, targs, args, span)
    }

    fn dispatch(
        &mut self,
        recv: Expr,
        meth: MethName,
        targs: Vec<TypeRef>,
        args: Vec<Expr>,
        span: Span,
    ) -> Result<StepOut, RtError> {
        let Expr::Lit { decl, targs: lit_targs, .. } = &recv else {
            unreachable!("receiver is a value");
        };
        // CALL-LIT: the method is defined in the literal itself. Self-call
        // stubs on synthesized scalar traits exist only for the type system
        // and are intercepted by the built-in behaviour instead.
        if let Some(m) = decl.find_method(&meth) {
            if is_magic_stub(decl, m) {
                if let Some(out) = self.magic(&recv, &meth, &args, span)? {
                    return Ok(StepOut::Next(out, Rule::Magic));
                }
            }
            let Some(body) = &m.body else {
                return Err(RtError::new(
                    codes::E_RT_STUCK,
                    format!("method {meth} on {} is abstract at runtime", decl.name),
                ));
            };
            let next = instantiate(
                body,
                &decl.type_params,
                lit_targs,
                &m.sig.type_params,
                &targs,
                &decl.self_name,
                &recv,
                &m.sig.params,
                &args,
            );
            return Ok(StepOut::Next(next, Rule::CallLit));
        }
        // Built-in behaviour keyed on the receiver's classification.
        if let Some(out) = self.magic(&recv, &meth, &args, span)? {
            return Ok(StepOut::Next(out, Rule::Magic));
        }
        // CALL-TOP: resolve through the trait table.
        let dm = traits::meths_of_decl(&self.program.table, decl, lit_targs)
            .and_then(|ms| ms.into_iter().find(|dm| dm.name() == &meth));
        let Some(dm) = dm else {
            return Err(RtError::new(
                codes::E_RT_STUCK,
                format!("no method {meth} reachable on {}", decl.name),
            ));
        };
        // Magic factories are intercepted by origin: their in-language
        // bodies exist only to satisfy the type system.
        if let TypeRef::Concrete { name, .. } = &dm.origin {
            if let Some(out) = self.factory(name, &meth, &targs, &args, span)? {
                return Ok(StepOut::Next(out, Rule::Magic));
            }
        }
        let Some(body) = &dm.method.body else {
            return Err(RtError::new(
                codes::E_RT_MAGIC_UNKNOWN,
                format!(
                    "method {meth} of {} has no runtime behaviour (abstract and not magic)",
                    dm.origin
                ),
            ));
        };
        let origin_self = match &dm.origin {
            TypeRef::Concrete { name, .. } => self
                .program
                .table
                .get(name)
                .map(|d| d.self_name.clone())
                .unwrap_or_else(|| "this".to_string()),
            _ => "this".to_string(),
        };
        // dmeths already substituted the declaration's generics.
        let next = instantiate(
            body,
            &[],
            &[],
            &dm.method.sig.type_params,
            &targs,
            &origin_self,
            &recv,
            &dm.method.sig.params,
            &args,
        );
        Ok(StepOut::Next(next, Rule::CallTop))
    }

    /// Built-ins on classified receivers. Methods not in the magic sets fall
    /// through to the ordinary rules (for example `.set` on a cell).
    fn magic(
        &mut self,
        recv: &Expr,
        meth: &MethName,
        args: &[Expr],
        span: Span,
    ) -> Result<Option<Expr>, RtError> {
        let class = self.classify(recv);
        match class {
            Some(Value::Num(a)) => {
                let bin = |this: &Interp<'a>, args: &[Expr]| -> Result<BigInt, RtError> {
                    match this.classify(&args[0]) {
                        Some(Value::Num(b)) => Ok(b),
                        _ => Err(RtError::new(
                            codes::E_RT_MAGIC_UNKNOWN,
                            "numeric operation on a non-numeric value",
                        )),
                    }
                };
                match (meth.base.as_str(), meth.arity) {
                    ("+", 1) => Ok(Some(num_value(a + bin(self, args)?, span))),
                    ("-", 1) => Ok(Some(num_value(a - bin(self, args)?, span))),
                    ("*", 1) => Ok(Some(num_value(a * bin(self, args)?, span))),
                    ("<", 1) => {
                        let b = bin(self, args)?;
                        self.bool_value(a < b, span).map(Some)
                    }
                    ("==", 1) => {
                        let b = bin(self, args)?;
                        self.bool_value(a == b, span).map(Some)
                    }
                    (".str", 0) => Ok(Some(str_value(&a.to_string(), span))),
                    _ => Ok(None),
                }
            }
            Some(Value::Str(a)) => match (meth.base.as_str(), meth.arity) {
                ("+", 1) => match self.classify(&args[0]) {
                    Some(Value::Str(b)) => Ok(Some(str_value(&format!("{a}{b}"), span))),
                    _ => Err(RtError::new(
                        codes::E_RT_MAGIC_UNKNOWN,
                        "string concatenation with a non-string value",
                    )),
                },
                (".upperCase", 0) => Ok(Some(str_value(&a.to_ascii_uppercase(), span))),
                ("==", 1) => match self.classify(&args[0]) {
                    Some(Value::Str(b)) => self.bool_value(a == b, span).map(Some),
                    _ => Err(RtError::new(
                        codes::E_RT_MAGIC_UNKNOWN,
                        "string comparison with a non-string value",
                    )),
                },
                _ => Ok(None),
            },
            Some(Value::RefCell(id)) => match (meth.base.as_str(), meth.arity) {
                (".get", 0) | (".rget", 0) => Ok(Some(self.cell(id)?.clone())),
                (".swap", 1) => {
                    let old = self.cell(id)?.clone();
                    self.store.insert(id, args[0].clone());
                    Ok(Some(old))
                }
                _ => Ok(None),
            },
            Some(Value::System) => match (meth.base.as_str(), meth.arity) {
                (".println", 1) => match self.classify(&args[0]) {
                    Some(Value::Str(s)) => {
                        self.output.extend_from_slice(s.as_bytes());
                        self.output.push(b'\n');
                        self.table_value("Void", span).map(Some)
                    }
                    _ => Err(RtError::new(
                        codes::E_RT_MAGIC_UNKNOWN,
                        "println expects a string value",
                    )),
                },
                _ => Ok(None),
            },
            Some(Value::IsoPod(id)) => match (meth.base.as_str(), meth.arity) {
                // .look(f) applies the closure to the imprisoned value.
                (".look", 1) => {
                    let v = self.cell(id)?.clone();
                    Ok(Some(Expr::Call {
                        recv: Box::new(args[0].clone()),
                        meth: MethName::new("#", 1),
                        targs: vec![],
                        args: vec![v],
                        span,
                    }))
                }
                // .mutate(f) runs the closure for its effects and yields Void.
                (".mutate", 1) => {
                    let v = self.cell(id)?.clone();
                    let apply = Expr::Call {
                        recv: Box::new(args[0].clone()),
                        meth: MethName::new("#", 1),
                        targs: vec![],
                        args: vec![v],
                        span,
                    };
                    self.discard_then_void(apply, span).map(Some)
                }
                // .mutate(a, f) passes an extra isolated argument.
                (".mutate", 2) => {
                    let v = self.cell(id)?.clone();
                    let apply = Expr::Call {
                        recv: Box::new(args[1].clone()),
                        meth: MethName::new("#", 2),
                        targs: vec![],
                        args: vec![v, args[0].clone()],
                        span,
                    };
                    self.discard_then_void(apply, span).map(Some)
                }
                _ => Ok(None),
            },
            _ => Ok(None),
        }
    }

    /// `Ref#` and `IsoPod#` allocate store cells.
    fn factory(
        &mut self,
        origin: &DeclName,
        meth: &MethName,
        targs: &[TypeRef],
        args: &[Expr],
        span: Span,
    ) -> Result<Option<Expr>, RtError> {
        if meth != &MethName::new("#", 1) {
            return Ok(None);
        }
        let kind = match (origin.base.as_str(), origin.arity) {
            ("Ref", 0) => "#cell:",
            ("IsoPod", 0) => "#pod:",
            _ => return Ok(None),
        };
        let id = self.next_cell;
        self.next_cell += 1;
        self.store.insert(id, args[0].clone());
        let sup_name = match kind {
            "#cell:" => DeclName::new("Ref", 1),
            _ => DeclName::new("IsoPod", 1),
        };
        let sup_arg = targs
            .first()
            .cloned()
            .unwrap_or(TypeRef::Concrete { rc: None, name: DeclName::new("Void", 0), args: vec![] });
        Ok(Some(synthetic_value(
            &format!("{kind}{id}"),
            vec![TypeRef::Concrete { rc: None, name: sup_name, args: vec![sup_arg] }],
            span,
        )))
    }

    /// `Block#(effect, Void)`: evaluates `effect` and yields the Void value.
    fn discard_then_void(&mut self, effect: Expr, span: Span) -> Result<Expr, RtError> {
        let block = self.table_value("Block", span)?;
        let void = self.table_value("Void", span)?;
        Ok(Expr::Call {
            recv: Box::new(block),
            meth: MethName::new("#", 2),
            targs: vec![],
            args: vec![effect, void],
            span,
        })
    }

    fn table_value(&self, base: &str, span: Span) -> Result<Expr, RtError> {
        let name = DeclName::new(base, 0);
        let decl = self.program.table.get(&name).ok_or_else(|| {
            RtError::new(
                codes::E_RT_MAGIC_UNKNOWN,
                format!("{name} is not declared; this program needs the standard prelude"),
            )
        })?;
        Ok(Expr::Lit {
            rc: None,
            targs: vec![],
            decl: Box::new(decl.clone()),
            span,
        })
    }

    fn bool_value(&self, b: bool, span: Span) -> Result<Expr, RtError> {
        self.table_value(if b { "True" } else { "False" }, span)
    }

    fn cell(&self, id: u64) -> Result<&Expr, RtError> {
        self.store.get(&id).ok_or_else(|| {
            RtError::new(codes::E_RT_STUCK, format!("store cell {id} does not exist"))
        })
    }
}

/// A body of the exact shape `this.m(p1, ..., pn)` calling the method it
/// belongs to: the marker the desugarer and the runtime use for methods
/// whose real behaviour is built in.
fn is_magic_stub(decl: &TraitDecl, m: &Method) -> bool {
    let Some(Expr::Call { recv, meth, targs, args, .. }) = &m.body else {
        return false;
    };
    meth == &m.sig.name
        && targs.is_empty()
        && matches!(&**recv, Expr::Var { name, .. } if name == &decl.self_name)
        && args.len() == m.sig.params.len()
        && args.iter().zip(&m.sig.params).all(|(a, (p, _))| {
            matches!(a, Expr::Var { name, .. } if name == p)
        })
}

fn magic_payload(base: &str) -> Option<Value> {
    let first = base.chars().next()?;
    if first.is_ascii_digit() {
        base.parse::<BigInt>().ok().map(Value::Num)
    } else if first == '"' {
        Some(Value::Str(unescape_str(base)))
    } else {
        None
    }
}

pub fn num_value(n: BigInt, span: Span) -> Expr {
    Expr::Lit {
        rc: None,
        targs: vec![],
        decl: Box::new(magic_scalar_decl(&n.to_string(), span)),
        span,
    }
}

pub fn str_value(payload: &str, span: Span) -> Expr {
    Expr::Lit {
        rc: None,
        targs: vec![],
        decl: Box::new(magic_scalar_decl(&escape_str(payload), span)),
        span,
    }
}

/// The trait behind a runtime numeral or string: the same shape the
/// desugarer synthesizes for source literals, with self-calling bodies so
/// mid-reduction terms still type-check. The interpreter intercepts the
/// methods before those bodies could ever run.
pub fn magic_scalar_decl(base: &str, span: Span) -> TraitDecl {
    let is_str = base.starts_with('"');
    let conc = |n: &str| TypeRef::Concrete { rc: None, name: DeclName::new(n, 0), args: vec![] };
    let m = |name: &str, params: &[(&str, &str)], ret: &str| Method {
        sig: crate::ast::Sig {
            recv_rc: None,
            name: MethName::new(name, params.len()),
            type_params: vec![],
            params: params.iter().map(|(p, t)| (p.to_string(), conc(t))).collect(),
            ret: conc(ret),
            span,
        },
        body: Some(Expr::Call {
            recv: Box::new(Expr::Var { name: "this".into(), span }),
            meth: MethName::new(name, params.len()),
            targs: vec![],
            args: params
                .iter()
                .map(|(p, _)| Expr::Var { name: p.to_string(), span })
                .collect(),
            span,
        }),
    };
    let methods = if is_str {
        vec![
            m("+", &[("s", "Str")], "Str"),
            m(".upperCase", &[], "Str"),
            m("==", &[("s", "Str")], "Bool"),
        ]
    } else {
        vec![
            m("+", &[("n", "Num")], "Num"),
            m("-", &[("n", "Num")], "Num"),
            m("*", &[("n", "Num")], "Num"),
            m("<", &[("n", "Num")], "Bool"),
            m("==", &[("n", "Num")], "Bool"),
            m(".str", &[], "Str"),
        ]
    };
    TraitDecl {
        name: DeclName::new(base, 0),
        type_params: vec![],
        supers: vec![conc(if is_str { "Str" } else { "Num" })],
        self_name: "this".into(),
        methods,
        body_declared: false,
        span,
    }
}

fn synthetic_value(base: &str, supers: Vec<TypeRef>, span: Span) -> Expr {
    Expr::Lit {
        rc: None,
        targs: vec![],
        decl: Box::new(TraitDecl {
            name: DeclName::new(base, 0),
            type_params: vec![],
            supers,
            self_name: "this".into(),
            methods: vec![],
            body_declared: false,
            span,
        }),
        span,
    }
}

#[allow(clippy::too_many_arguments)]
fn instantiate(
    body: &Expr,
    decl_tps: &[String],
    lit_targs: &[TypeRef],
    meth_tps: &[String],
    call_targs: &[TypeRef],
    self_name: &str,
    recv: &Expr,
    params: &[(String, TypeRef)],
    args: &[Expr],
) -> Expr {
    let mut e = body.clone();
    if !decl_tps.is_empty() {
        let s: TypeSubst =
            decl_tps.iter().cloned().zip(lit_targs.iter().cloned()).collect();
        e = subst_type_in_expr(&e, &s);
    }
    if !meth_tps.is_empty() {
        let s: TypeSubst =
            meth_tps.iter().cloned().zip(call_targs.iter().cloned()).collect();
        e = subst_type_in_expr(&e, &s);
    }
    let mut vs = VarSubst::new();
    vs.insert(self_name.to_string(), recv.clone());
    for ((p, _), a) in params.iter().zip(args.iter()) {
        vs.insert(p.clone(), a.clone());
    }
    subst_vars(&e, &vs)
}

/// Independent re-derivation of which root rules apply to a configuration;
/// the determinism suite asserts exactly one.
pub fn applicable_rules(interp: &Interp<'_>, e: &Expr) -> Vec<Rule> {
    let mut out = Vec::new();
    let Expr::Call { recv, meth, args, .. } = e else {
        return out;
    };
    if !recv.is_value() {
        out.push(Rule::CtxRecv);
    }
    if recv.is_value() && args.iter().any(|a| !a.is_value()) {
        out.push(Rule::CtxArg);
    }
    let ready = recv.is_value() && args.iter().all(|a| a.is_value());
    if ready {
        let Expr::Lit { decl, targs: lit_targs, .. } = &**recv else {
            return out;
        };
        let magic_class = match interp.classify(recv) {
            Some(Value::Num(_)) => matches!(
                (meth.base.as_str(), meth.arity),
                ("+", 1) | ("-", 1) | ("*", 1) | ("<", 1) | ("==", 1) | (".str", 0)
            ),
            Some(Value::Str(_)) => matches!(
                (meth.base.as_str(), meth.arity),
                ("+", 1) | (".upperCase", 0) | ("==", 1)
            ),
            Some(Value::RefCell(_)) => matches!(
                (meth.base.as_str(), meth.arity),
                (".get", 0) | (".rget", 0) | (".swap", 1)
            ),
            Some(Value::System) => (meth.base.as_str(), meth.arity) == (".println", 1),
            Some(Value::IsoPod(_)) => matches!(
                (meth.base.as_str(), meth.arity),
                (".look", 1) | (".mutate", 1) | (".mutate", 2)
            ),
            _ => false,
        };
        if let Some(m) = decl.find_method(meth) {
            if is_magic_stub(decl, m) && magic_class {
                out.push(Rule::Magic);
            } else {
                out.push(Rule::CallLit);
            }
        } else if magic_class {
            out.push(Rule::Magic);
        } else if let Some(dm) = traits::meths_of_decl(&interp.program.table, decl, lit_targs)
            .and_then(|ms| ms.into_iter().find(|dm| dm.name() == meth))
        {
            let factory = matches!(
                &dm.origin,
                TypeRef::Concrete { name, .. }
                    if (name.base == "Ref" || name.base == "IsoPod") && name.arity == 0
            ) && meth == &MethName::new("#", 1);
            out.push(if factory { Rule::Magic } else { Rule::CallTop });
        }
    }
    out
}

/// Runs `entry`'s `.main` with the system capability until a value or the
/// fuel budget is exhausted.
pub fn evaluate(
    p: &Program,
    entry: &DeclName,
    fuel: u64,
) -> (Result<Value, RtError>, Vec<u8>) {
    let mut interp = Interp::new(p);
    let Some(decl) = p.table.get(entry) else {
        return (
            Err(RtError::new(
                codes::E_RT_NO_ENTRY,
                format!("{entry} is not declared"),
            )),
            interp.output,
        );
    };
    if !crate::heart::implements(&p.table, entry, &DeclName::new("Main", 0)) {
        return (
            Err(RtError::new(
                codes::E_RT_NO_ENTRY,
                format!("{entry} does not transitively implement Main"),
            )),
            interp.output,
        );
    }
    if !decl.type_params.is_empty() {
        return (
            Err(RtError::new(
                codes::E_RT_NO_ENTRY,
                format!("{entry} is generic and cannot be an entry point"),
            )),
            interp.output,
        );
    }
    let abstract_left = traits::meths(&p.table, &TypeRef::Concrete {
        rc: None,
        name: entry.clone(),
        args: vec![],
    })
    .map(|ms| ms.iter().any(|dm| dm.method.is_abstract()))
    .unwrap_or(true);
    if abstract_left {
        return (
            Err(RtError::new(
                codes::E_RT_NO_ENTRY,
                format!("{entry} leaves methods abstract and cannot be instantiated"),
            )),
            interp.output,
        );
    }
    let span = decl.span;
    let entry_value = Expr::Lit {
        rc: None,
        targs: vec![],
        decl: Box::new(decl.clone()),
        span,
    };
    let sys = synthetic_value(
        "#system",
        vec![TypeRef::Concrete { rc: None, name: DeclName::new("System", 0), args: vec![] }],
        span,
    );
    let mut e = Expr::Call {
        recv: Box::new(entry_value),
        meth: MethName::new(".main", 1),
        targs: vec![],
        args: vec![sys],
        span,
    };
    for _ in 0..fuel {
        match interp.step(e) {
            Ok(StepOut::Done(v)) => {
                interp.steps += 1;
                let val = interp.classify(&v).unwrap_or(Value::Plain(v));
                return (Ok(val), interp.output);
            }
            Ok(StepOut::Next(e2, _)) => {
                interp.steps += 1;
                e = e2;
            }
            Err(err) => return (Err(err), interp.output),
        }
    }
    (
        Err(RtError::new(
            codes::E_RT_FUEL,
            "evaluation did not finish within the step budget".to_string(),
        )),
        interp.output,
    )
}

pub const DEFAULT_FUEL: u64 = 1_000_000;
