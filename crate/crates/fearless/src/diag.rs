//! Diagnostics: stable codes, spans, deterministic ordering.

use crate::span::{SourceMap, Span};

/// The registry of diagnostic codes. Every diagnostic carries one of these.
pub mod codes {
    pub const E_LEX_CHAR: &str = "E-LEX-CHAR";
    pub const E_LEX_STR: &str = "E-LEX-STR";
    pub const E_PARSE: &str = "E-PARSE";
    pub const E_ELAB_UNKNOWN: &str = "E-ELAB-UNKNOWN";
    pub const E_ELAB_INFER: &str = "E-ELAB-INFER";
    pub const E_ELAB_SUPER: &str = "E-ELAB-SUPER";
    pub const E_WF_DUP_DECL: &str = "E-WF-DUP-DECL";
    pub const E_WF_DUP_METH: &str = "E-WF-DUP-METH";
    pub const E_WF_DUP_PARAM: &str = "E-WF-DUP-PARAM";
    pub const E_WF_SHADOW: &str = "E-WF-SHADOW";
    pub const E_WF_CYCLE: &str = "E-WF-CYCLE";
    pub const E_WF_SELF: &str = "E-WF-SELF";
    pub const E_WF_FINAL_IMPL: &str = "E-WF-FINAL-IMPL";
    pub const E_WF_FUNNEL: &str = "E-WF-FUNNEL";
    pub const E_WF_ISO_TARG: &str = "E-WF-ISO-TARG";
    pub const E_WF_ISO_AFFINE: &str = "E-WF-ISO-AFFINE";
    pub const E_WF_MODE: &str = "E-WF-MODE";
    pub const E_TY_OVERRIDE: &str = "E-TY-OVERRIDE";
    pub const E_TY_CONFLICT: &str = "E-TY-CONFLICT";
    pub const E_TY_BODY: &str = "E-TY-BODY";
    pub const E_TY_UNBOUND_VAR: &str = "E-TY-UNBOUND-VAR";
    pub const E_TY_NO_METHOD: &str = "E-TY-NO-METHOD";
    pub const E_TY_ARG: &str = "E-TY-ARG";
    pub const E_TY_ABSTRACT: &str = "E-TY-ABSTRACT";
    pub const E_TY_SUBSUME: &str = "E-TY-SUBSUME";
    pub const E_TY_CALLABLE: &str = "E-TY-CALLABLE";
    pub const E_TY_DEAD_METHOD: &str = "E-TY-DEAD-METHOD";
    pub const E_RT_STUCK: &str = "E-RT-STUCK";
    pub const E_RT_FUEL: &str = "E-RT-FUEL";
    pub const E_RT_NO_ENTRY: &str = "E-RT-NO-ENTRY";
    pub const E_RT_MAGIC_UNKNOWN: &str = "E-RT-MAGIC-UNKNOWN";
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: &'static str, span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic { severity: Severity::Error, code, span, message: message.into() }
    }

    pub fn render(&self, sm: &SourceMap) -> String {
        let (line, col) = sm.line_col(self.span);
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        format!(
            "{}:{}:{}: {}[{}]: {}",
            sm.file_name(self.span.file),
            line,
            col,
            sev,
            self.code,
            self.message
        )
    }

    pub fn to_json(&self, sm: &SourceMap) -> serde_json::Value {
        let (line, col) = sm.line_col(self.span);
        serde_json::json!({
            "file": sm.file_name(self.span.file),
            "line": line,
            "col": col,
            "severity": match self.severity { Severity::Error => "error", Severity::Warning => "warning" },
            "code": self.code,
            "message": self.message,
        })
    }
}

/// Order: span, then code. Keeps golden files stable.
pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        a.span
            .order_key()
            .cmp(&b.span.order_key())
            .then_with(|| a.code.cmp(b.code))
            .then_with(|| a.message.cmp(&b.message))
    });
}
