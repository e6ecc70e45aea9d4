//! Trait composition: inherited method collection, conflict detection and
//! resolution, effective method sets, and subtyping.

use std::collections::BTreeSet;

use crate::ast::{
    subst_type_in_method, subst_type_in_type, Capability, DeclName, MType, Method, Program,
    TraitDecl, TypeRef, TypeSubst,
};

pub type Table = std::collections::BTreeMap<DeclName, TraitDecl>;

pub fn table_of(p: &Program) -> &Table {
    &p.table
}

/// A method together with the trait instantiation it comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DM {
    /// Always `Concrete` with no capability (origins are rc-insensitive).
    pub origin: TypeRef,
    pub method: Method,
}

impl DM {
    pub fn name(&self) -> &crate::ast::MethName {
        &self.method.sig.name
    }

    pub fn mtype(&self) -> MType {
        MType::from(&self.method.sig)
    }
}

fn strip_rc(t: &TypeRef) -> TypeRef {
    match t {
        TypeRef::Concrete { name, args, .. } => {
            TypeRef::Concrete { rc: None, name: name.clone(), args: args.clone() }
        }
        other => other.clone(),
    }
}

fn decl_subst(decl: &TraitDecl, args: &[TypeRef]) -> TypeSubst {
    decl.type_params
        .iter()
        .cloned()
        .zip(args.iter().cloned())
        .collect()
}

/// Collects all the (origin, method) pairs of `t`, generics substituted,
/// own methods first and then each super's, depth first. Identical pairs
/// reached through diamond paths count once.
pub fn dmeths(table: &Table, t: &TypeRef) -> Option<Vec<DM>> {
    let mut out = Vec::new();
    let mut visiting = BTreeSet::new();
    dmeths_into(table, t, &mut out, &mut visiting)?;
    Some(out)
}

/// Like `dmeths`, but resolving the head declaration from `decl` rather than
/// the table; used for literals whose declarations are not table entries
/// (wrappers during elaboration, runtime-synthesized literals).
pub fn dmeths_of_decl(table: &Table, decl: &TraitDecl, args: &[TypeRef]) -> Option<Vec<DM>> {
    let mut out = Vec::new();
    let mut visiting = BTreeSet::new();
    collect_decl(table, decl, args, &mut out, &mut visiting)?;
    Some(out)
}

fn dmeths_into(
    table: &Table,
    t: &TypeRef,
    out: &mut Vec<DM>,
    visiting: &mut BTreeSet<DeclName>,
) -> Option<()> {
    let TypeRef::Concrete { name, args, .. } = t else {
        return None;
    };
    if visiting.contains(name) {
        return Some(()); // inheritance cycle; well-formedness reports it
    }
    let decl = table.get(name)?;
    visiting.insert(name.clone());
    let r = collect_decl(table, decl, args, out, visiting);
    visiting.remove(name);
    r
}

fn collect_decl(
    table: &Table,
    decl: &TraitDecl,
    args: &[TypeRef],
    out: &mut Vec<DM>,
    visiting: &mut BTreeSet<DeclName>,
) -> Option<()> {
    let s = decl_subst(decl, args);
    let origin = TypeRef::Concrete { rc: None, name: decl.name.clone(), args: args.to_vec() };
    for m in &decl.methods {
        let dm = DM { origin: origin.clone(), method: subst_type_in_method(m, &s) };
        if !out.contains(&dm) {
            out.push(dm);
        }
    }
    for sup in &decl.supers {
        let sup = subst_type_in_type(sup, &s);
        dmeths_into(table, &sup, out, visiting)?;
    }
    Some(())
}

/// Same name, different origins.
pub fn alternative(a: &DM, b: &DM) -> bool {
    a.origin != b.origin && a.name() == b.name()
}

/// `a` beats `b`: the origin of `a` (transitively) implements the origin of
/// `b`. Capabilities are ignored.
pub fn beats(table: &Table, a: &DM, b: &DM) -> bool {
    decl_subtype(table, &a.origin, &b.origin)
}

/// Conflicts are directional: `a` conflicts with `b` when they are
/// alternatives, `b` is concrete, and `a` does not beat `b`.
pub fn conflict(table: &Table, a: &DM, b: &DM) -> bool {
    alternative(a, b) && !b.method.is_abstract() && !beats(table, a, b)
}

/// Every pair of equally named method types must be alpha-equivalent.
/// Returns the offending pairs.
pub fn override_violations(table: &Table, t: &TypeRef) -> Vec<(DM, DM)> {
    let Some(dms) = dmeths(table, t) else {
        return Vec::new();
    };
    violations_in(&dms)
}

fn violations_in(dms: &[DM]) -> Vec<(DM, DM)> {
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

/// For every conflicting pair there must exist an alternative that beats
/// both. Returns the unresolved conflicting pairs.
pub fn implement_violations(table: &Table, t: &TypeRef) -> Vec<(DM, DM)> {
    let Some(dms) = dmeths(table, t) else {
        return Vec::new();
    };
    unresolved_conflicts(table, &dms)
}

fn unresolved_conflicts(table: &Table, dms: &[DM]) -> Vec<(DM, DM)> {
    let mut out = Vec::new();
    for a in dms {
        for b in dms {
            if conflict(table, a, b) {
                let resolved = dms.iter().any(|c| {
                    alternative(c, a) && beats(table, c, a) && beats(table, c, b)
                });
                if !resolved {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
    }
    out
}

/// The effective method set: per name, the inherited method whose conflict
/// set is empty. Concrete beats abstract; among abstract candidates the one
/// lowest in the hierarchy wins.
pub fn meths(table: &Table, t: &TypeRef) -> Option<Vec<DM>> {
    let dms = dmeths(table, t)?;
    Some(select_meths(table, &dms))
}

pub fn meths_of_decl(table: &Table, decl: &TraitDecl, args: &[TypeRef]) -> Option<Vec<DM>> {
    let dms = dmeths_of_decl(table, decl, args)?;
    Some(select_meths(table, &dms))
}

fn select_meths(table: &Table, dms: &[DM]) -> Vec<DM> {
    let mut names = Vec::new();
    for dm in dms {
        if !names.contains(dm.name()) {
            names.push(dm.name().clone());
        }
    }
    let mut out = Vec::new();
    for name in names {
        let conflict_free: Vec<&DM> = dms
            .iter()
            .filter(|dm| dm.name() == &name)
            .filter(|dm| !dms.iter().any(|other| conflict(table, dm, other)))
            .collect();
        let chosen = conflict_free
            .iter()
            .find(|dm| !dm.method.is_abstract())
            .or_else(|| {
                conflict_free.iter().find(|dm| {
                    conflict_free
                        .iter()
                        .all(|other| beats(table, dm, other))
                })
            })
            .or_else(|| conflict_free.first());
        if let Some(dm) = chosen {
            out.push((*dm).clone());
        }
    }
    out
}

pub fn find_meth(table: &Table, t: &TypeRef, name: &crate::ast::MethName) -> Option<DM> {
    meths(table, t)?.into_iter().find(|dm| dm.name() == name)
}

// ---------------------------------------------------------------------------
// Subtyping
// ---------------------------------------------------------------------------

/// The capability lattice: `iso <= _ <= read`, with `mut` and `imm`
/// incomparable.
pub fn cap_le(a: Capability, b: Capability) -> bool {
    a == b || a == Capability::Iso || b == Capability::Read
}

/// Nominal declaration subtyping, capability-insensitive: reflexive, and
/// through substituted supers transitively. Generic arguments are invariant.
pub fn decl_subtype(table: &Table, t1: &TypeRef, t2: &TypeRef) -> bool {
    let (TypeRef::Concrete { .. }, TypeRef::Concrete { .. }) = (t1, t2) else {
        return false;
    };
    let mut visiting = BTreeSet::new();
    decl_subtype_inner(table, &strip_rc(t1), &strip_rc(t2), &mut visiting)
}

fn decl_subtype_inner(
    table: &Table,
    t1: &TypeRef,
    t2: &TypeRef,
    visiting: &mut BTreeSet<DeclName>,
) -> bool {
    if t1 == t2 {
        return true;
    }
    let TypeRef::Concrete { name, args, .. } = t1 else {
        return false;
    };
    if visiting.contains(name) {
        return false;
    }
    let Some(decl) = table.get(name) else {
        return false;
    };
    visiting.insert(name.clone());
    let s = decl_subst(decl, args);
    let found = decl.supers.iter().any(|sup| {
        let sup = strip_rc(&subst_type_in_type(sup, &s));
        decl_subtype_inner(table, &sup, t2, visiting)
    });
    visiting.remove(name);
    found
}

/// Full subtyping. In heart mode no capabilities appear and this is plain
/// declaration subtyping; in rc mode the capability lattice combines with it.
pub fn is_subtype(table: &Table, t1: &TypeRef, t2: &TypeRef) -> bool {
    match (t1, t2) {
        (TypeRef::Concrete { rc: rc1, .. }, TypeRef::Concrete { rc: rc2, .. }) => {
            let caps_ok = match (rc1, rc2) {
                (None, None) => true,
                (Some(a), Some(b)) => cap_le(*a, *b),
                _ => false,
            };
            caps_ok && decl_subtype(table, t1, t2)
        }
        (TypeRef::Var(x), TypeRef::Var(y)) => x == y,
        (TypeRef::CapVar { rc: r1, var: x }, TypeRef::CapVar { rc: r2, var: y }) => {
            x == y && cap_le(*r1, *r2)
        }
        _ => false,
    }
}

/// All substituted supertypes of a concrete type, including itself,
/// capability-stripped, in breadth-first order.
pub fn supers_closure(table: &Table, t: &TypeRef) -> Vec<TypeRef> {
    let mut out = Vec::new();
    let mut queue = vec![strip_rc(t)];
    while let Some(cur) = queue.pop() {
        if out.contains(&cur) {
            continue;
        }
        if let TypeRef::Concrete { name, args, .. } = &cur {
            if let Some(decl) = table.get(name) {
                let s = decl_subst(decl, args);
                for sup in &decl.supers {
                    queue.push(strip_rc(&subst_type_in_type(sup, &s)));
                }
            }
        }
        out.push(cur);
    }
    out
}

/// Like `supers_closure` but seeded from an out-of-table declaration.
pub fn supers_closure_of_decl(
    table: &Table,
    decl: &TraitDecl,
    args: &[TypeRef],
) -> Vec<TypeRef> {
    let s = decl_subst(decl, args);
    let mut out = vec![TypeRef::Concrete {
        rc: None,
        name: decl.name.clone(),
        args: args.to_vec(),
    }];
    for sup in &decl.supers {
        for t in supers_closure(table, &subst_type_in_type(sup, &s)) {
            if !out.contains(&t) {
                out.push(t);
            }
        }
    }
    out
}
