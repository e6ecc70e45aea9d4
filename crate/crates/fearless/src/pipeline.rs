//! The front-to-back driver: lex, parse, desugar, elaborate, check.
//! One compilation unit is the concatenation of the prelude files and the
//! user files.

use crate::ast::{Mode, Program};
use crate::diag::Diagnostic;
use crate::parse::SProgram;
use crate::span::SourceMap;

pub type Source = (String, String);

/// Lexes, parses, and desugars a set of sources into one surface program.
pub fn parse_and_sugar(files: &[Source]) -> (SourceMap, Result<SProgram, Vec<Diagnostic>>) {
    let mut sm = SourceMap::new();
    let mut decls = Vec::new();
    for (name, text) in files {
        let file = sm.add_file(name, text);
        let toks = match crate::lex::tokenize(file, text) {
            Ok(t) => t,
            Err(d) => return (sm, Err(vec![d])),
        };
        match crate::parse::parse_program(&toks, file) {
            Ok(p) => decls.extend(p.decls),
            Err(d) => return (sm, Err(vec![d])),
        }
    }
    let sugared = crate::sugar::apply_sugar(SProgram { decls });
    (sm, Ok(sugared))
}

/// Front end through elaboration.
pub fn elaborate_sources(
    files: &[Source],
    mode: Mode,
) -> (SourceMap, Result<Program, Vec<Diagnostic>>) {
    let (sm, surface) = parse_and_sugar(files);
    match surface {
        Ok(sp) => {
            let r = crate::elab::elaborate(&sp, mode);
            (sm, r)
        }
        Err(ds) => (sm, Err(ds)),
    }
}

/// The full static pipeline: elaborate, well-formedness, then the mode's
/// type checker. Returns the program only when everything is clean.
pub fn check_sources(
    files: &[Source],
    mode: Mode,
) -> (SourceMap, Result<Program, Vec<Diagnostic>>) {
    let (sm, elaborated) = elaborate_sources(files, mode);
    let p = match elaborated {
        Ok(p) => p,
        Err(ds) => return (sm, Err(ds)),
    };
    let wf = crate::wf::check_well_formed(&p);
    if !wf.is_empty() {
        return (sm, Err(wf));
    }
    let ty = match mode {
        Mode::Heart => crate::heart::check_program(&p),
        Mode::Rc => crate::rc::check_program(&p),
    };
    if !ty.is_empty() {
        return (sm, Err(ty));
    }
    (sm, Ok(p))
}

/// Prepends the prelude to user sources.
pub fn with_prelude(prelude: Vec<Source>, user: Vec<Source>) -> Vec<Source> {
    let mut all = prelude;
    all.extend(user);
    all
}
