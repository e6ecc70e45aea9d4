//! Source positions and the source map used to render diagnostics.

/// A half-open byte range inside one source file.
///
/// Spans compare equal to each other unconditionally so that AST equality is
/// structural: two pipelines over different texts can produce equal trees.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub file: u16,
    pub lo: u32,
    pub hi: u32,
}

impl Span {
    pub fn new(file: u16, lo: usize, hi: usize) -> Span {
        Span { file, lo: lo as u32, hi: hi as u32 }
    }

    pub fn join(self, other: Span) -> Span {
        Span { file: self.file, lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    /// Key used to order diagnostics; not an `Ord` impl since `eq` ignores position.
    pub fn order_key(self) -> (u16, u32, u32) {
        (self.file, self.lo, self.hi)
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

struct SourceFile {
    name: String,
    line_starts: Vec<u32>,
}

/// All source text fed to one pipeline run, addressable by `Span.file`.
#[derive(Default)]
pub struct SourceMap {
    files: Vec<SourceFile>,
}

impl SourceMap {
    pub fn new() -> SourceMap {
        SourceMap::default()
    }

    pub fn add_file(&mut self, name: &str, text: &str) -> u16 {
        let mut line_starts = vec![0u32];
        for (i, b) in text.bytes().enumerate() {
            if b == b'\n' {
                line_starts.push(i as u32 + 1);
            }
        }
        self.files.push(SourceFile { name: name.to_string(), line_starts });
        (self.files.len() - 1) as u16
    }

    pub fn file_name(&self, file: u16) -> &str {
        self.files
            .get(file as usize)
            .map(|f| f.name.as_str())
            .unwrap_or("<unknown>")
    }

    /// 1-based line and column of the start of `span`.
    pub fn line_col(&self, span: Span) -> (usize, usize) {
        let Some(f) = self.files.get(span.file as usize) else {
            return (1, 1);
        };
        let line = match f.line_starts.binary_search(&span.lo) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let col = span.lo - f.line_starts[line];
        (line + 1, col as usize + 1)
    }
}
