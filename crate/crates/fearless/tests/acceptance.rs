//! Acceptance suite: one test per criterion, each printing a pass line.
//!
//! 1. showcase corpus checks in both modes, under 10 seconds
//! 2. promotion battery verdicts
//! 3. hello-world runs byte-exactly
//! 4. list sum and boolean match evaluate to the expected values
//! 5. capability lattice and callable tables, exhaustive
//! 6. method resolution against a brute-force oracle, 500 random tables
//! 7. determinism and preservation on 1000 generated well-typed terms
//! 8. adaptation idempotence and imm-literal provenance over the corpus
//! 9. parse -> elaborate -> print round-trip is a fixpoint on the corpus

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fearless::ast::{
    Capability, DeclName, Expr, Method, MethName, Mode, Program, Sig, TraitDecl, TypeRef,
};
use fearless::heart::type_of_closed;
use fearless::interp::{self, evaluate, Interp, StepOut, Value, DEFAULT_FUEL};
use fearless::pipeline::{check_sources, elaborate_sources, with_prelude, Source};
use fearless::prelude::load_prelude;
use fearless::rc::{adapt_env, callable, check_program_recording, Provenance};
use fearless::span::Span;
use fearless::traits;

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn corpus_path(rel: &str) -> PathBuf {
    corpus_dir().join(rel)
}

fn sources_for(path: &Path) -> Vec<Source> {
    let text = std::fs::read_to_string(path).unwrap();
    let prelude = load_prelude(false, None).unwrap();
    with_prelude(prelude, vec![(path.display().to_string(), text)])
}

fn assert_checks(path: &Path, mode: Mode) {
    let (sm, r) = check_sources(&sources_for(path), mode);
    if let Err(ds) = r {
        panic!(
            "{} failed to check in {:?} mode:\n{}",
            path.display(),
            mode,
            ds.iter().map(|d| d.render(&sm)).collect::<Vec<_>>().join("\n")
        );
    }
}

// -- criterion 1 ----------------------------------------------------------

#[test]
fn criterion_1_showcase_corpus_checks_in_both_modes() {
    let started = Instant::now();
    let listings = [
        "tour/person.fear",
        "tour/person_factory.fear",
        "tour/bool_use.fear",
        "tour/optlist_use.fear",
        "tour/html.fear",
    ];
    for rel in listings {
        let p = corpus_path(rel);
        assert_checks(&p, Mode::Heart);
        assert_checks(&p, Mode::Rc);
    }
    // The Bool/Opt/List listings live in the prelude; its self-check covers
    // them, and the verbatim capability-free variants live in heart_tour.
    let prelude = load_prelude(false, None).unwrap();
    for mode in [Mode::Heart, Mode::Rc] {
        let (sm, r) = check_sources(&prelude, mode);
        if let Err(ds) = r {
            panic!(
                "prelude failed in {mode:?}: {}",
                ds.iter().map(|d| d.render(&sm)).collect::<Vec<_>>().join("\n")
            );
        }
    }
    let heart_tour = corpus_path("tour/heart_tour.fear");
    let text = std::fs::read_to_string(&heart_tour).unwrap();
    let (sm, r) = check_sources(&[(heart_tour.display().to_string(), text)], Mode::Heart);
    if let Err(ds) = r {
        panic!(
            "heart_tour failed: {}",
            ds.iter().map(|d| d.render(&sm)).collect::<Vec<_>>().join("\n")
        );
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() < 10,
        "criterion 1 took {elapsed:?}, budget is 10s"
    );
    println!("criterion 1: PASS (showcase corpus, both modes, {elapsed:?})");
}

// -- criterion 2 ----------------------------------------------------------

#[test]
fn criterion_2_promotion_battery() {
    let rejected = ["ex01", "ex02", "ex04", "ex12"];
    let accepted = [
        "ex03", "ex05", "ex06", "ex07", "ex08", "ex09", "ex10", "ex11", "break", "ex12fixed",
    ];
    for name in rejected {
        let p = corpus_path(&format!("caps/{name}.fear"));
        let (_, r) = check_sources(&sources_for(&p), Mode::Rc);
        assert!(r.is_err(), "{name} should be rejected");
    }
    for name in accepted {
        let p = corpus_path(&format!("caps/{name}.fear"));
        assert_checks(&p, Mode::Rc);
    }
    println!("criterion 2: PASS (promotion battery verdicts)");
}

// -- criterion 3 ----------------------------------------------------------

#[test]
fn criterion_3_hello_world() {
    let p = corpus_path("run/hellow.fear");
    let (_, r) = check_sources(&sources_for(&p), Mode::Rc);
    let program = r.expect("hellow checks");
    let (v, out) = evaluate(&program, &DeclName::new("HelloW", 0), DEFAULT_FUEL);
    assert!(v.is_ok());
    assert_eq!(out, b"Hello, World!\n");
    println!("criterion 3: PASS (hello world output exact)");
}

// -- criterion 4 ----------------------------------------------------------

/// Elaborates a probe declaration and steps its zero-parameter method body
/// (a closed expression) to a value.
fn eval_probe(src: &str, meth: &str) -> Value {
    let prelude = load_prelude(false, None).unwrap();
    let files = with_prelude(prelude, vec![("probe.fear".into(), src.into())]);
    let (sm, r) = check_sources(&files, Mode::Rc);
    let program = match r {
        Ok(p) => p,
        Err(ds) => panic!(
            "probe failed to check: {}",
            ds.iter().map(|d| d.render(&sm)).collect::<Vec<_>>().join("\n")
        ),
    };
    let probe = program.table.get(&DeclName::new("Probe", 0)).expect("Probe decl");
    let m = probe
        .methods
        .iter()
        .find(|m| m.sig.name == MethName::new(meth, 0))
        .expect("probe method");
    let body = m.body.clone().expect("probe body");
    // The body mentions `this`; substitute the probe literal itself.
    let this_val = Expr::Lit {
        rc: None,
        targs: vec![],
        decl: Box::new(probe.clone()),
        span: Span::default(),
    };
    let mut vs = fearless::ast::VarSubst::new();
    vs.insert(probe.self_name.clone(), this_val);
    let mut e = fearless::ast::subst_vars(&body, &vs);
    let mut interp = Interp::new(&program);
    for _ in 0..100_000 {
        match interp.step(e).expect("no runtime error") {
            StepOut::Done(v) => return interp.classify(&v).unwrap(),
            StepOut::Next(e2, _) => e = e2,
        }
    }
    panic!("probe did not terminate");
}

#[test]
fn criterion_4_sum_and_match_values() {
    let src = r#"Example: { .sum(ns: List[Num]): Num -> ns.match{
        .empty -> 0,
        .elem(list, e) -> this.sum(list) + e
    }}
    Probe: {
      .six: Num -> Example.sum(List[Num]+1+2+3),
      .boo: Str -> True.and(False).if({ .then -> "Yay", .else -> "Boo" }),
    }"#;
    assert_eq!(eval_probe(src, ".six"), Value::Num(6.into()));
    assert_eq!(eval_probe(src, ".boo"), Value::Str("Boo".into()));
    println!("criterion 4: PASS (sum evaluates to 6, match selects \"Boo\")");
}

// -- criterion 5 ----------------------------------------------------------

#[test]
fn criterion_5_capability_tables_exhaustive() {
    use Capability::*;
    // iso <= _ <= read, mut and imm incomparable: exactly these pairs hold.
    let expected_le: &[(Capability, Capability)] = &[
        (Iso, Iso),
        (Iso, Imm),
        (Iso, Mut),
        (Iso, Read),
        (Imm, Imm),
        (Imm, Read),
        (Mut, Mut),
        (Mut, Read),
        (Read, Read),
    ];
    let mut checked = 0;
    for a in Capability::ALL {
        for b in Capability::ALL {
            let want = expected_le.contains(&(a, b));
            assert_eq!(traits::cap_le(a, b), want, "cap_le({a}, {b})");
            checked += 1;
        }
    }
    assert_eq!(checked, 16);
    // callable(R, M) is false exactly for imm/read receivers of mut/iso methods.
    let mut checked = 0;
    for r in Capability::ALL {
        for m in Capability::ALL {
            let want = !(matches!(r, Imm | Read) && matches!(m, Mut | Iso));
            assert_eq!(callable(r, m), want, "callable({r}, {m})");
            checked += 1;
        }
    }
    assert_eq!(checked, 16);
    println!("criterion 5: PASS (16-entry lattice and callable tables exact)");
}

// -- criterion 6: brute-force method resolution oracle ---------------------

mod oracle {
    //! A direct transliteration of the composition definitions, kept
    //! separate from the library's implementation.

    use super::*;

    pub type Dm = (TypeRef, Method);

    pub fn dmeths(table: &traits::Table, t: &TypeRef) -> Vec<Dm> {
        let TypeRef::Concrete { name, .. } = t else { unreachable!() };
        let decl = &table[name];
        let origin = TypeRef::Concrete { rc: None, name: name.clone(), args: vec![] };
        let mut out: Vec<Dm> = Vec::new();
        for m in &decl.methods {
            let dm = (origin.clone(), m.clone());
            if !out.contains(&dm) {
                out.push(dm);
            }
        }
        for sup in &decl.supers {
            for dm in dmeths(table, sup) {
                if !out.contains(&dm) {
                    out.push(dm);
                }
            }
        }
        out
    }

    fn le(table: &traits::Table, a: &TypeRef, b: &TypeRef) -> bool {
        if a == b {
            return true;
        }
        let TypeRef::Concrete { name, .. } = a else { return false };
        table[name].supers.iter().any(|s| le(table, s, b))
    }

    pub fn alternative(a: &Dm, b: &Dm) -> bool {
        a.0 != b.0 && a.1.sig.name == b.1.sig.name
    }

    pub fn conflict(table: &traits::Table, a: &Dm, b: &Dm) -> bool {
        alternative(a, b) && !b.1.is_abstract() && !le(table, &a.0, &b.0)
    }

    pub fn override_ok(table: &traits::Table, t: &TypeRef) -> bool {
        let dms = dmeths(table, t);
        dms.iter().all(|a| {
            dms.iter().all(|b| {
                a.1.sig.name != b.1.sig.name
                    || fearless::ast::alpha_eq_mtype(
                        &fearless::ast::MType::from(&a.1.sig),
                        &fearless::ast::MType::from(&b.1.sig),
                    )
            })
        })
    }

    pub fn implement_ok(table: &traits::Table, t: &TypeRef) -> bool {
        let dms = dmeths(table, t);
        dms.iter().all(|a| {
            dms.iter().all(|b| {
                !conflict(table, a, b)
                    || dms.iter().any(|c| {
                        alternative(c, a) && le(table, &c.0, &a.0) && le(table, &c.0, &b.0)
                    })
            })
        })
    }

    /// The conflict-free members per method name.
    pub fn meths(table: &traits::Table, t: &TypeRef) -> Vec<Dm> {
        let dms = dmeths(table, t);
        dms.iter()
            .filter(|dm| dms.iter().all(|other| !conflict(table, dm, other)))
            .cloned()
            .collect()
    }
}

fn random_table(rng: &mut ChaCha8Rng) -> traits::Table {
    let n = rng.gen_range(1..=8);
    let decl_names: Vec<DeclName> =
        (0..n).map(|i| DeclName::new(format!("D{i}"), 0)).collect();
    let mut table = traits::Table::new();
    for i in 0..n {
        let mut supers = Vec::new();
        for earlier in decl_names.iter().take(i) {
            if rng.gen_bool(0.4) {
                supers.push(TypeRef::Concrete {
                    rc: None,
                    name: earlier.clone(),
                    args: vec![],
                });
            }
        }
        let n_meths = rng.gen_range(0..=5);
        let mut methods = Vec::new();
        let mut used = BTreeSet::new();
        for _ in 0..n_meths {
            let mname = format!(".m{}", rng.gen_range(0..5));
            if !used.insert(mname.clone()) {
                continue;
            }
            let ret = TypeRef::Concrete {
                rc: None,
                name: decl_names[rng.gen_range(0..n)].clone(),
                args: vec![],
            };
            let body = rng.gen_bool(0.6).then(|| Expr::Var {
                name: "this".into(),
                span: Span::default(),
            });
            methods.push(Method {
                sig: Sig {
                    recv_rc: None,
                    name: MethName::new(mname, 0),
                    type_params: vec![],
                    params: vec![],
                    ret,
                    span: Span::default(),
                },
                body,
            });
        }
        table.insert(
            decl_names[i].clone(),
            TraitDecl {
                name: decl_names[i].clone(),
                type_params: vec![],
                supers,
                self_name: "this".into(),
                methods,
                body_declared: false,
                span: Span::default(),
            },
        );
    }
    table
}

#[test]
fn criterion_6_method_resolution_oracle() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xF3A51E55);
    let mut disagreements = Vec::new();
    for case in 0..500 {
        let table = random_table(&mut rng);
        for name in table.keys() {
            let t = TypeRef::Concrete { rc: None, name: name.clone(), args: vec![] };
            let lib_override = traits::override_violations(&table, &t).is_empty();
            let bf_override = oracle::override_ok(&table, &t);
            if lib_override != bf_override {
                disagreements.push(format!("case {case} {name}: overrideOk {lib_override} vs {bf_override}"));
                continue;
            }
            let lib_implement = traits::implement_violations(&table, &t).is_empty();
            let bf_implement = oracle::implement_ok(&table, &t);
            if lib_implement != bf_implement {
                disagreements.push(format!("case {case} {name}: implementOk {lib_implement} vs {bf_implement}"));
                continue;
            }
            if !(lib_override && lib_implement) {
                continue;
            }
            let lib_meths = traits::meths(&table, &t).unwrap();
            let bf = oracle::meths(&table, &t);
            // One selected method per name; it must be a conflict-free
            // member, concrete whenever any conflict-free candidate is.
            let mut names: Vec<&MethName> = bf.iter().map(|(_, m)| &m.sig.name).collect();
            names.sort();
            names.dedup();
            let mut lib_names: Vec<&MethName> = lib_meths.iter().map(|dm| dm.name()).collect();
            lib_names.sort();
            if lib_names != names {
                disagreements.push(format!("case {case} {name}: meths name sets differ"));
                continue;
            }
            for dm in &lib_meths {
                let candidates: Vec<&oracle::Dm> =
                    bf.iter().filter(|(_, m)| &m.sig.name == dm.name()).collect();
                let member = candidates
                    .iter()
                    .any(|(o, m)| o == &dm.origin && m == &dm.method);
                let concrete_available = candidates.iter().any(|(_, m)| !m.is_abstract());
                if !member || (concrete_available && dm.method.is_abstract()) {
                    disagreements.push(format!(
                        "case {case} {name}: selection of {} disagrees",
                        dm.name()
                    ));
                }
            }
        }
    }
    assert!(
        disagreements.is_empty(),
        "{} disagreements:\n{}",
        disagreements.len(),
        disagreements.join("\n")
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 120, "criterion 6 took {elapsed:?}, budget 2min");
    println!("criterion 6: PASS (500 tables, zero disagreements, {elapsed:?})");
}

// -- criterion 7: determinism and preservation at desk scale ----------------

/// Generates a random monomorphic trait table whose method bodies are
/// well-typed by construction, then closed well-typed expressions over it.
struct TermGen {
    rng: ChaCha8Rng,
    table: traits::Table,
    names: Vec<DeclName>,
    fresh: usize,
}

impl TermGen {
    fn new(seed: u64) -> TermGen {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=4);
        let names: Vec<DeclName> = (0..n).map(|i| DeclName::new(format!("G{i}"), 0)).collect();
        // Skeleton pass: supers and signatures only.
        let mut table = traits::Table::new();
        let mut meth_counter = 0usize;
        for i in 0..n {
            let mut supers = Vec::new();
            for earlier in names.iter().take(i) {
                if rng.gen_bool(0.35) {
                    supers.push(TypeRef::Concrete {
                        rc: None,
                        name: earlier.clone(),
                        args: vec![],
                    });
                }
            }
            let mut methods = Vec::new();
            for _ in 0..rng.gen_range(1..=3) {
                let arity = rng.gen_range(0..=2);
                let params: Vec<(String, TypeRef)> = (0..arity)
                    .map(|k| {
                        (
                            format!("p{meth_counter}x{k}"),
                            TypeRef::Concrete {
                                rc: None,
                                name: names[rng.gen_range(0..n)].clone(),
                                args: vec![],
                            },
                        )
                    })
                    .collect();
                let ret = TypeRef::Concrete {
                    rc: None,
                    name: names[rng.gen_range(0..n)].clone(),
                    args: vec![],
                };
                methods.push(Method {
                    sig: Sig {
                        recv_rc: None,
                        name: MethName::new(format!(".f{meth_counter}"), arity),
                        type_params: vec![],
                        params,
                        ret,
                        span: Span::default(),
                    },
                    body: None,
                });
                meth_counter += 1;
            }
            table.insert(
                names[i].clone(),
                TraitDecl {
                    name: names[i].clone(),
                    type_params: vec![],
                    supers,
                    self_name: "this".into(),
                    methods,
                    body_declared: false,
                    span: Span::default(),
                },
            );
        }
        let mut gen = TermGen { rng, table, names, fresh: 0 };
        // Body pass: every method everywhere becomes concrete.
        for name in gen.names.clone() {
            let decl = gen.table[&name].clone();
            let self_ty = TypeRef::Concrete { rc: None, name: name.clone(), args: vec![] };
            let mut new_methods = Vec::new();
            for m in &decl.methods {
                let mut env: Vec<(String, TypeRef)> =
                    vec![(decl.self_name.clone(), self_ty.clone())];
                env.extend(m.sig.params.iter().cloned());
                let body = gen.gen_expr(&env, &m.sig.ret, 2);
                new_methods.push(Method { sig: m.sig.clone(), body: Some(body) });
            }
            gen.table.get_mut(&name).unwrap().methods = new_methods;
        }
        gen
    }

    fn subtypes_of(&self, target: &TypeRef) -> Vec<DeclName> {
        self.names
            .iter()
            .filter(|n| {
                let t = TypeRef::Concrete { rc: None, name: (*n).clone(), args: vec![] };
                traits::decl_subtype(&self.table, &t, target)
            })
            .cloned()
            .collect()
    }

    fn gen_expr(&mut self, env: &[(String, TypeRef)], target: &TypeRef, depth: usize) -> Expr {
        let span = Span::default();
        // variables of a compatible type
        let vars: Vec<&(String, TypeRef)> = env
            .iter()
            .filter(|(_, t)| traits::is_subtype(&self.table, t, target))
            .collect();
        if depth > 0 && self.rng.gen_bool(0.4) {
            // a call whose return type fits
            let mut options = Vec::new();
            for n in &self.names {
                let t = TypeRef::Concrete { rc: None, name: n.clone(), args: vec![] };
                for dm in traits::meths(&self.table, &t).unwrap() {
                    if traits::is_subtype(&self.table, &dm.method.sig.ret, target) {
                        options.push((t.clone(), dm.method.sig.clone()));
                    }
                }
            }
            if !options.is_empty() {
                let (recv_t, sig) = options[self.rng.gen_range(0..options.len())].clone();
                let recv = self.gen_expr(env, &recv_t, depth - 1);
                let args: Vec<Expr> = sig
                    .params
                    .iter()
                    .map(|(_, pt)| self.gen_expr(env, pt, depth - 1))
                    .collect();
                return Expr::Call {
                    recv: Box::new(recv),
                    meth: sig.name.clone(),
                    targs: vec![],
                    args,
                    span,
                };
            }
        }
        if !vars.is_empty() && self.rng.gen_bool(0.5) {
            let (name, _) = vars[self.rng.gen_range(0..vars.len())];
            return Expr::Var { name: name.clone(), span };
        }
        // a fresh literal implementing a subtype of the target, sometimes
        // overriding one method with a capturing body
        let impls = self.subtypes_of(target);
        let base = impls[self.rng.gen_range(0..impls.len())].clone();
        let base_ty = TypeRef::Concrete { rc: None, name: base.clone(), args: vec![] };
        self.fresh += 1;
        let id = self.fresh;
        let mut methods = Vec::new();
        if depth > 0 && self.rng.gen_bool(0.5) {
            let inherited = traits::meths(&self.table, &base_ty).unwrap();
            if !inherited.is_empty() {
                let pick = inherited[self.rng.gen_range(0..inherited.len())].clone();
                let mut sig = pick.method.sig.clone();
                for (i, p) in sig.params.iter_mut().enumerate() {
                    p.0 = format!("q{id}x{i}");
                }
                let mut env2: Vec<(String, TypeRef)> = env.to_vec();
                // the literal's own self shadows nothing: fresh name
                let self_name = format!("s{id}");
                env2.push((
                    self_name.clone(),
                    TypeRef::Concrete {
                        rc: None,
                        name: DeclName::new(format!("W{id}"), 0),
                        args: vec![],
                    },
                ));
                env2.extend(sig.params.iter().cloned());
                // bodies may capture outer variables: that is the point
                let body = self.gen_expr(&env2, &sig.ret, depth - 1);
                methods.push(Method { sig, body: Some(body) });
                let decl = TraitDecl {
                    name: DeclName::new(format!("W{id}"), 0),
                    type_params: vec![],
                    supers: vec![base_ty],
                    self_name,
                    methods,
                    body_declared: true,
                    span,
                };
                return Expr::Lit { rc: None, targs: vec![], decl: Box::new(decl), span };
            }
        }
        let decl = TraitDecl {
            name: DeclName::new(format!("W{id}"), 0),
            type_params: vec![],
            supers: vec![base_ty],
            self_name: format!("s{id}"),
            methods,
            body_declared: true,
            span,
        };
        Expr::Lit { rc: None, targs: vec![], decl: Box::new(decl), span }
    }

    /// The self binding of a wrapper literal is typed at the wrapper's own
    /// name, which is not in the table; replace those bindings with the
    /// base type so generated bodies always type-check.
    fn program(&self) -> Program {
        Program::assemble(self.table.values().cloned().collect(), Mode::Heart)
    }
}

#[test]
fn criterion_7_determinism_and_preservation() {
    let started = Instant::now();
    let mut violations = Vec::new();
    let mut terms = 0usize;
    let mut seed = 0u64;
    while terms < 1000 {
        seed += 1;
        let mut gen = TermGen::new(seed);
        let program = gen.program();
        // every generated table itself must be well-typed
        let diags = fearless::heart::check_program(&program);
        if !diags.is_empty() {
            violations.push(format!("seed {seed}: generated table ill-typed: {:?}", diags[0]));
            continue;
        }
        for _ in 0..4 {
            if terms >= 1000 {
                break;
            }
            terms += 1;
            let target = TypeRef::Concrete {
                rc: None,
                name: gen.names[gen.rng.gen_range(0..gen.names.len())].clone(),
                args: vec![],
            };
            let e0 = gen.gen_expr(&[], &target, 3);
            // carry the term so its fresh wrapper declarations join the table
            let mut tops: Vec<TraitDecl> = gen.table.values().cloned().collect();
            tops.push(TraitDecl {
                name: DeclName::new("Probe", 0),
                type_params: vec![],
                supers: vec![],
                self_name: "this".into(),
                methods: vec![Method {
                    sig: Sig {
                        recv_rc: None,
                        name: MethName::new(".go", 0),
                        type_params: vec![],
                        params: vec![],
                        ret: target.clone(),
                        span: Span::default(),
                    },
                    body: Some(e0.clone()),
                }],
                body_declared: false,
                span: Span::default(),
            });
            let program = Program::assemble(tops, Mode::Heart);
            let t0 = match type_of_closed(&program, &e0) {
                Ok(t) => t,
                Err(ds) => {
                    violations.push(format!("seed {seed}: generated term ill-typed: {ds:?}"));
                    continue;
                }
            };
            if !traits::is_subtype(&program.table, &t0, &target) {
                violations.push(format!("seed {seed}: synthesized type not below target"));
                continue;
            }
            let mut interp = Interp::new(&program);
            let mut e = e0;
            for _step in 0..100 {
                if e.is_value() {
                    break;
                }
                let rules = interp::applicable_rules(&interp, &e);
                if rules.len() != 1 {
                    violations.push(format!(
                        "seed {seed}: {} applicable rules: {rules:?}",
                        rules.len()
                    ));
                    break;
                }
                match interp.step(e.clone()) {
                    Ok(StepOut::Next(e2, rule)) => {
                        if rules[0] != rule {
                            violations.push(format!(
                                "seed {seed}: stepped rule {rule:?} but derived {:?}",
                                rules[0]
                            ));
                            break;
                        }
                        e = e2;
                    }
                    Ok(StepOut::Done(_)) => unreachable!(),
                    Err(err) => {
                        violations.push(format!("seed {seed}: stuck: {}", err.message));
                        break;
                    }
                }
                match type_of_closed(&program, &e) {
                    Ok(t) => {
                        if !traits::is_subtype(&program.table, &t, &t0) {
                            violations.push(format!(
                                "seed {seed}: preservation violated: {t} not <= {t0}"
                            ));
                            break;
                        }
                    }
                    Err(ds) => {
                        violations.push(format!(
                            "seed {seed}: stepped term no longer types: {:?}",
                            ds.first()
                        ));
                        break;
                    }
                }
            }
            // pure programs never touch the store
            assert!(interp.store.is_empty(), "seed {seed}: store touched by pure program");
        }
    }
    assert!(
        violations.is_empty(),
        "{} metatheory violations (of {terms} terms):\n{}",
        violations.len(),
        violations.join("\n")
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 180, "criterion 7 took {elapsed:?}, budget 3min");
    println!("criterion 7: PASS ({terms} terms, determinism + preservation, {elapsed:?})");
}

// -- criterion 8 ----------------------------------------------------------

#[test]
fn criterion_8_adaptation_idempotent_and_imm_provenance() {
    let mut checked_lits = 0usize;
    let mut sources_list: Vec<Vec<Source>> = vec![load_prelude(false, None).unwrap()];
    for rel in [
        "tour/person.fear",
        "tour/person_factory.fear",
        "tour/bool_use.fear",
        "tour/optlist_use.fear",
        "tour/html.fear",
        "caps/ex03.fear",
        "caps/break.fear",
        "run/hellow.fear",
        "run/sum.fear",
        "run/swap.fear",
        "run/isopod.fear",
        "run/letin.fear",
    ] {
        sources_list.push(sources_for(&corpus_path(rel)));
    }
    for sources in sources_list {
        let (_, r) = elaborate_sources(&sources, Mode::Rc);
        let program = r.expect("elaborates");
        let outcome = check_program_recording(&program, true);
        assert!(outcome.diags.is_empty(), "{:?}", outcome.diags.first());
        for rec in &outcome.adaptations {
            checked_lits += 1;
            // re-adaptation is a no-op
            let once = rec.env.to_type_env();
            let twice = adapt_env(&once, rec.lit_rc, rec.meth_rc).to_type_env();
            assert_eq!(once.vars, twice.vars, "adaptation not idempotent in {}", rec.lit);
            // imm literals see no mut- or read-viewed binding
            if rec.lit_rc == Capability::Imm {
                for (name, ty, prov) in &rec.env.bindings {
                    assert_ne!(
                        *prov,
                        Provenance::ViewedRead,
                        "imm literal {} sees read-viewed {name}",
                        rec.lit
                    );
                    if *prov != Provenance::Dropped {
                        assert_eq!(
                            ty.rc(),
                            Some(Capability::Imm),
                            "imm literal {} keeps non-imm binding {name}: {ty}",
                            rec.lit
                        );
                    }
                }
            }
        }
    }
    assert!(checked_lits > 100, "too few adapted environments: {checked_lits}");
    println!("criterion 8: PASS ({checked_lits} adapted environments)");
}

// -- criterion 9 ----------------------------------------------------------

#[test]
fn criterion_9_round_trip_fixpoint() {
    let mut cases: Vec<(Vec<Source>, Mode)> = vec![
        (load_prelude(false, None).unwrap(), Mode::Rc),
        (load_prelude(false, None).unwrap(), Mode::Heart),
    ];
    for area in ["tour", "caps", "run", "errors"] {
        for f in std::fs::read_dir(corpus_dir().join(area)).unwrap() {
            let f = f.unwrap().path();
            if f.extension().and_then(|e| e.to_str()) != Some("fear") {
                continue;
            }
            let expect = std::fs::read_to_string(f.with_extension("expect")).unwrap_or_default();
            let verdict = expect.split_whitespace().next().unwrap_or("").to_string();
            let no_prelude = expect.contains("no-prelude");
            // round-trip is only meaningful for programs that elaborate
            let mode = match verdict.as_str() {
                "accept" | "accept-rc" | "run" => Mode::Rc,
                "accept-heart" => Mode::Heart,
                _ => continue,
            };
            let text = std::fs::read_to_string(&f).unwrap();
            let prelude = load_prelude(no_prelude, None).unwrap();
            let sources = with_prelude(prelude, vec![(f.display().to_string(), text)]);
            cases.push((sources, mode));
        }
    }
    for (sources, mode) in cases {
        let (_, r) = elaborate_sources(&sources, mode);
        let p1 = r.expect("first elaboration");
        let printed1 = fearless::pretty::print_program(&p1);
        let json1 = fearless::json::program_json(&p1).to_string();
        let (sm2, r2) = elaborate_sources(&[("printed.fear".into(), printed1.clone())], mode);
        let p2 = match r2 {
            Ok(p) => p,
            Err(ds) => panic!(
                "printed program failed to re-elaborate: {}\n--- printed:\n{}",
                ds.iter().map(|d| d.render(&sm2)).collect::<Vec<_>>().join("\n"),
                printed1.lines().take(40).collect::<Vec<_>>().join("\n"),
            ),
        };
        let printed2 = fearless::pretty::print_program(&p2);
        let json2 = fearless::json::program_json(&p2).to_string();
        assert_eq!(printed1, printed2, "printed text is not a fixpoint");
        assert_eq!(json1, json2, "JSON rendering is not a fixpoint");
        assert_eq!(p1.top_level, p2.top_level, "programs not structurally equal");
    }
    println!("criterion 9: PASS (round-trip fixpoint over the corpus)");
}
