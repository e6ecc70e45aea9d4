//! Fearless: a minimal object calculus where traits, object literals, and
//! closures are one construct, extended with reference capabilities.
//!
//! The pipeline is `tokenize -> parse -> desugar -> elaborate`, after which
//! the fully explicit program can be checked for well-formedness, type-checked
//! in heart (capability-free) or rc mode, and run by the small-step
//! interpreter.

pub mod ast;
pub mod diag;
pub mod elab;
pub mod heart;
pub mod interp;
pub mod json;
pub mod lex;
pub mod par;
pub mod parse;
pub mod pipeline;
pub mod prelude;
pub mod pretty;
pub mod rc;
pub mod span;
pub mod sugar;
pub mod traits;
pub mod wf;
