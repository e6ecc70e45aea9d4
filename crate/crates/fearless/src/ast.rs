//! Core abstract syntax shared by every stage, plus substitution and
//! literal collection.
//!
//! Literal expressions carry both their declaration and an explicit
//! instantiation (`targs`). In source programs the instantiation is always
//! the identity over the declaration's own type parameters; reduction may
//! replace it with concrete types, which is the relaxed literal form the
//! interpreter and the metatheory tests rely on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::span::Span;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Capability {
    Imm,
    Iso,
    Read,
    Mut,
}

impl Capability {
    pub const ALL: [Capability; 4] =
        [Capability::Imm, Capability::Iso, Capability::Read, Capability::Mut];

    pub fn keyword(self) -> &'static str {
        match self {
            Capability::Imm => "imm",
            Capability::Iso => "iso",
            Capability::Read => "read",
            Capability::Mut => "mut",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Capability> {
        match s {
            "imm" => Some(Capability::Imm),
            "iso" => Some(Capability::Iso),
            "read" => Some(Capability::Read),
            "mut" => Some(Capability::Mut),
            _ => None,
        }
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Which typing discipline a program is elaborated for.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Heart,
    Rc,
}

/// A declaration name, mangled with its generic arity (`F/2`).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct DeclName {
    pub base: String,
    pub arity: usize,
}

impl DeclName {
    pub fn new(base: impl Into<String>, arity: usize) -> DeclName {
        DeclName { base: base.into(), arity }
    }
}

impl fmt::Display for DeclName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.base, self.arity)
    }
}

/// A method name, mangled with its parameter arity (`.of/2`, `+/1`, `#/0`).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MethName {
    pub base: String,
    pub arity: usize,
}

impl MethName {
    pub fn new(base: impl Into<String>, arity: usize) -> MethName {
        MethName { base: base.into(), arity }
    }
}

impl fmt::Display for MethName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.base, self.arity)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum TypeRef {
    /// `R D[Ts]`; the capability is absent in heart mode.
    Concrete { rc: Option<Capability>, name: DeclName, args: Vec<TypeRef> },
    /// A bare type variable, inheriting the capability of its instantiation.
    Var(String),
    /// A type variable with an explicit capability override.
    CapVar { rc: Capability, var: String },
}

impl TypeRef {
    pub fn concrete(rc: Option<Capability>, name: DeclName, args: Vec<TypeRef>) -> TypeRef {
        TypeRef::Concrete { rc, name, args }
    }

    pub fn rc(&self) -> Option<Capability> {
        match self {
            TypeRef::Concrete { rc, .. } => *rc,
            TypeRef::Var(_) => None,
            TypeRef::CapVar { rc, .. } => Some(*rc),
        }
    }

    /// The viewpoint rewrite `T[R']`: overrides the capability of concrete
    /// types and capability-qualified variables, and qualifies bare variables.
    pub fn viewed(&self, rc: Capability) -> TypeRef {
        match self {
            TypeRef::Concrete { name, args, .. } => {
                TypeRef::Concrete { rc: Some(rc), name: name.clone(), args: args.clone() }
            }
            TypeRef::Var(x) | TypeRef::CapVar { var: x, .. } => {
                TypeRef::CapVar { rc, var: x.clone() }
            }
        }
    }

    pub fn is_iso(&self) -> bool {
        self.rc() == Some(Capability::Iso)
    }

    /// Collects free type variables in first-occurrence order.
    pub fn free_type_vars(&self, out: &mut Vec<String>) {
        match self {
            TypeRef::Concrete { args, .. } => {
                for a in args {
                    a.free_type_vars(out);
                }
            }
            TypeRef::Var(x) | TypeRef::CapVar { var: x, .. } => {
                if !out.iter().any(|y| y == x) {
                    out.push(x.clone());
                }
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Sig {
    pub recv_rc: Option<Capability>,
    pub name: MethName,
    pub type_params: Vec<String>,
    pub params: Vec<(String, TypeRef)>,
    pub ret: TypeRef,
    pub span: Span,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Method {
    pub sig: Sig,
    pub body: Option<Expr>,
}

impl Method {
    pub fn is_abstract(&self) -> bool {
        self.body.is_none()
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TraitDecl {
    pub name: DeclName,
    pub type_params: Vec<String>,
    /// Implemented traits; always `Concrete` and never capability-qualified.
    pub supers: Vec<TypeRef>,
    pub self_name: String,
    pub methods: Vec<Method>,
    /// Declared inside a method body (a final type) rather than at top level.
    pub body_declared: bool,
    pub span: Span,
}

impl TraitDecl {
    /// The identity instantiation `D[Xs]` used by source literals.
    pub fn identity_targs(&self) -> Vec<TypeRef> {
        self.type_params.iter().map(|x| TypeRef::Var(x.clone())).collect()
    }

    pub fn find_method(&self, name: &MethName) -> Option<&Method> {
        self.methods.iter().find(|m| &m.sig.name == name)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Expr {
    Var {
        name: String,
        span: Span,
    },
    Call {
        recv: Box<Expr>,
        meth: MethName,
        targs: Vec<TypeRef>,
        args: Vec<Expr>,
        span: Span,
    },
    Lit {
        /// Absent in heart mode, present after rc elaboration.
        rc: Option<Capability>,
        /// Instantiation of `decl.type_params`; identity in source programs.
        targs: Vec<TypeRef>,
        decl: Box<TraitDecl>,
        span: Span,
    },
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Var { span, .. } | Expr::Call { span, .. } | Expr::Lit { span, .. } => *span,
        }
    }

    pub fn is_value(&self) -> bool {
        matches!(self, Expr::Lit { .. })
    }
}

#[derive(Clone, Debug)]
pub struct Program {
    pub top_level: Vec<TraitDecl>,
    pub table: BTreeMap<DeclName, TraitDecl>,
    pub mode: Mode,
}

impl Program {
    /// Builds the trait table as the image of `allLs` over the whole program.
    /// Duplicate names keep the first occurrence; well-formedness reports them.
    pub fn assemble(top_level: Vec<TraitDecl>, mode: Mode) -> Program {
        let mut table = BTreeMap::new();
        for d in &top_level {
            for l in all_ls_decl(d) {
                table.entry(l.name.clone()).or_insert_with(|| l.clone());
            }
        }
        Program { top_level, table, mode }
    }

    pub fn decl(&self, name: &DeclName) -> Option<&TraitDecl> {
        self.table.get(name)
    }
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

pub type TypeSubst = BTreeMap<String, TypeRef>;

pub fn type_subst(pairs: &[(&str, TypeRef)]) -> TypeSubst {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

pub fn subst_type_in_type(t: &TypeRef, s: &TypeSubst) -> TypeRef {
    match t {
        TypeRef::Concrete { rc, name, args } => TypeRef::Concrete {
            rc: *rc,
            name: name.clone(),
            args: args.iter().map(|a| subst_type_in_type(a, s)).collect(),
        },
        TypeRef::Var(x) => match s.get(x) {
            Some(r) => r.clone(),
            None => t.clone(),
        },
        // An explicit capability overrides whatever the instantiation carries.
        TypeRef::CapVar { rc, var } => match s.get(var) {
            Some(TypeRef::Concrete { name, args, .. }) => {
                TypeRef::Concrete { rc: Some(*rc), name: name.clone(), args: args.clone() }
            }
            Some(TypeRef::Var(y)) | Some(TypeRef::CapVar { var: y, .. }) => {
                TypeRef::CapVar { rc: *rc, var: y.clone() }
            }
            None => t.clone(),
        },
    }
}

fn without_keys(s: &TypeSubst, keys: &[String]) -> TypeSubst {
    let mut s2 = s.clone();
    for k in keys {
        s2.remove(k);
    }
    s2
}

pub fn subst_type_in_sig(sig: &Sig, s: &TypeSubst) -> Sig {
    let s2 = without_keys(s, &sig.type_params);
    Sig {
        recv_rc: sig.recv_rc,
        name: sig.name.clone(),
        type_params: sig.type_params.clone(),
        params: sig
            .params
            .iter()
            .map(|(x, t)| (x.clone(), subst_type_in_type(t, &s2)))
            .collect(),
        ret: subst_type_in_type(&sig.ret, &s2),
        span: sig.span,
    }
}

/// Instantiates a signature at explicit type arguments: substitutes the
/// signature's own type parameters (unlike `subst_type_in_sig`, which
/// protects them as binders). The result has no type parameters left.
pub fn instantiate_sig(sig: &Sig, targs: &[TypeRef]) -> Sig {
    let s: TypeSubst = sig
        .type_params
        .iter()
        .cloned()
        .zip(targs.iter().cloned())
        .collect();
    Sig {
        recv_rc: sig.recv_rc,
        name: sig.name.clone(),
        type_params: Vec::new(),
        params: sig
            .params
            .iter()
            .map(|(x, t)| (x.clone(), subst_type_in_type(t, &s)))
            .collect(),
        ret: subst_type_in_type(&sig.ret, &s),
        span: sig.span,
    }
}

pub fn subst_type_in_method(m: &Method, s: &TypeSubst) -> Method {
    let s2 = without_keys(s, &m.sig.type_params);
    Method {
        sig: subst_type_in_sig(&m.sig, s),
        body: m.body.as_ref().map(|b| subst_type_in_expr(b, &s2)),
    }
}

/// Replaces type variables. Binders that redeclare a mapped variable
/// (funnelling literals, method type parameters) stop the substitution for
/// that variable underneath them; a literal's instantiation slot is outside
/// the binder and is rewritten, which is what instantiates runtime literals.
pub fn subst_type_in_expr(e: &Expr, s: &TypeSubst) -> Expr {
    if s.is_empty() {
        return e.clone();
    }
    match e {
        Expr::Var { .. } => e.clone(),
        Expr::Call { recv, meth, targs, args, span } => Expr::Call {
            recv: Box::new(subst_type_in_expr(recv, s)),
            meth: meth.clone(),
            targs: targs.iter().map(|t| subst_type_in_type(t, s)).collect(),
            args: args.iter().map(|a| subst_type_in_expr(a, s)).collect(),
            span: *span,
        },
        Expr::Lit { rc, targs, decl, span } => {
            let inner = without_keys(s, &decl.type_params);
            Expr::Lit {
                rc: *rc,
                targs: targs.iter().map(|t| subst_type_in_type(t, s)).collect(),
                decl: Box::new(TraitDecl {
                    name: decl.name.clone(),
                    type_params: decl.type_params.clone(),
                    supers: decl
                        .supers
                        .iter()
                        .map(|t| subst_type_in_type(t, &inner))
                        .collect(),
                    self_name: decl.self_name.clone(),
                    methods: decl
                        .methods
                        .iter()
                        .map(|m| subst_type_in_method(m, &inner))
                        .collect(),
                    body_declared: decl.body_declared,
                    span: decl.span,
                }),
                span: *span,
            }
        }
    }
}

pub type VarSubst = BTreeMap<String, Expr>;

/// Replaces free value variables, descending into nested literal bodies;
/// this is how closures capture state. Mapped values must be closed, so
/// removing rebound names at binders is enough to avoid capture.
pub fn subst_vars(e: &Expr, s: &VarSubst) -> Expr {
    if s.is_empty() {
        return e.clone();
    }
    match e {
        Expr::Var { name, .. } => match s.get(name) {
            Some(v) => v.clone(),
            None => e.clone(),
        },
        Expr::Call { recv, meth, targs, args, span } => Expr::Call {
            recv: Box::new(subst_vars(recv, s)),
            meth: meth.clone(),
            targs: targs.clone(),
            args: args.iter().map(|a| subst_vars(a, s)).collect(),
            span: *span,
        },
        Expr::Lit { rc, targs, decl, span } => {
            let mut decl2 = (**decl).clone();
            for m in &mut decl2.methods {
                if let Some(body) = &m.body {
                    let mut s2 = s.clone();
                    s2.remove(&decl2.self_name);
                    for (p, _) in &m.sig.params {
                        s2.remove(p);
                    }
                    m.body = Some(subst_vars(body, &s2));
                }
            }
            Expr::Lit { rc: *rc, targs: targs.clone(), decl: Box::new(decl2), span: *span }
        }
    }
}

// ---------------------------------------------------------------------------
// Literal collection (allLs)
// ---------------------------------------------------------------------------

pub fn all_ls_expr<'a>(e: &'a Expr, out: &mut Vec<&'a TraitDecl>) {
    match e {
        Expr::Var { .. } => {}
        Expr::Call { recv, args, .. } => {
            all_ls_expr(recv, out);
            for a in args {
                all_ls_expr(a, out);
            }
        }
        Expr::Lit { decl, .. } => {
            out.push(decl);
            for m in &decl.methods {
                if let Some(b) = &m.body {
                    all_ls_expr(b, out);
                }
            }
        }
    }
}

pub fn all_ls_method(m: &Method) -> Vec<&TraitDecl> {
    let mut out = Vec::new();
    if let Some(b) = &m.body {
        all_ls_expr(b, &mut out);
    }
    out
}

/// Every literal transitively contained in `d`, including `d` itself,
/// in first-occurrence order.
pub fn all_ls_decl(d: &TraitDecl) -> Vec<&TraitDecl> {
    let mut out = vec![d];
    for m in &d.methods {
        if let Some(b) = &m.body {
            all_ls_expr(b, &mut out);
        }
    }
    out
}

pub fn all_ls_program(p: &Program) -> Vec<&TraitDecl> {
    let mut out = Vec::new();
    for d in &p.top_level {
        out.extend(all_ls_decl(d));
    }
    out
}

// ---------------------------------------------------------------------------
// Method types
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MType {
    pub recv_rc: Option<Capability>,
    pub name: MethName,
    pub type_params: Vec<String>,
    pub param_types: Vec<TypeRef>,
    pub ret: TypeRef,
}

impl From<&Sig> for MType {
    fn from(sig: &Sig) -> MType {
        MType {
            recv_rc: sig.recv_rc,
            name: sig.name.clone(),
            type_params: sig.type_params.clone(),
            param_types: sig.params.iter().map(|(_, t)| t.clone()).collect(),
            ret: sig.ret.clone(),
        }
    }
}

/// `mtype1 ≃ mtype2`: alpha-renaming the type parameters of both to a common
/// fresh sequence must make them syntactically identical. Receiver
/// capabilities count (they are `None` in heart mode, so they never differ).
pub fn alpha_eq_mtype(a: &MType, b: &MType) -> bool {
    if a.name != b.name
        || a.recv_rc != b.recv_rc
        || a.type_params.len() != b.type_params.len()
        || a.param_types.len() != b.param_types.len()
    {
        return false;
    }
    // "#n" is not a lexable identifier, so collisions are impossible.
    let canon = |tps: &[String]| -> TypeSubst {
        tps.iter()
            .enumerate()
            .map(|(i, x)| (x.clone(), TypeRef::Var(format!("#{i}"))))
            .collect()
    };
    let sa = canon(&a.type_params);
    let sb = canon(&b.type_params);
    let ra: Vec<TypeRef> = a.param_types.iter().map(|t| subst_type_in_type(t, &sa)).collect();
    let rb: Vec<TypeRef> = b.param_types.iter().map(|t| subst_type_in_type(t, &sb)).collect();
    ra == rb && subst_type_in_type(&a.ret, &sa) == subst_type_in_type(&b.ret, &sb)
}

// ---------------------------------------------------------------------------
// Fresh names
// ---------------------------------------------------------------------------

/// Smallest free name of the form `base`, `base1`, `base2`, ...
pub fn fresh_name(base: &str, used: &BTreeSet<String>) -> String {
    if !used.contains(base) {
        return base.to_string();
    }
    let mut i = 1usize;
    loop {
        let cand = format!("{base}{i}");
        if !used.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

// ---------------------------------------------------------------------------

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Concrete { rc, name, args } => {
                if let Some(rc) = rc {
                    write!(f, "{rc} ")?;
                }
                write!(f, "{}", name.base)?;
                if !args.is_empty() {
                    write!(f, "[")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, "]")?;
                }
                Ok(())
            }
            TypeRef::Var(x) => f.write_str(x),
            TypeRef::CapVar { rc, var } => write!(f, "{rc} {var}"),
        }
    }
}
