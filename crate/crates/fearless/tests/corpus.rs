//! Golden corpus harness: every `.fear` file with a sibling `.expect` file
//! must match its verdict, diagnostic code, and (for run files) exact
//! stdout, byte for byte.
//!
//! Expect format, first line:
//!   accept                  clean in both heart and rc mode
//!   accept-rc               clean in rc mode only
//!   accept-heart            clean in heart mode only
//!   reject CODE             rc mode produces a diagnostic with CODE
//!   reject-heart CODE       heart mode produces a diagnostic with CODE
//!   run EXIT [fuel=N] [entry=NAME]   checks clean in rc, then runs
//! The token `no-prelude` may follow. After an optional `---` line, the
//! rest of the file is the expected stdout, verbatim.

use std::path::{Path, PathBuf};

use fearless::ast::{DeclName, Mode};
use fearless::interp::{evaluate, DEFAULT_FUEL};
use fearless::par::pmap;
use fearless::pipeline::{check_sources, with_prelude, Source};
use fearless::prelude::load_prelude;

struct Expectation {
    verdict: Verdict,
    no_prelude: bool,
    fuel: u64,
    entry: Option<String>,
    stdout: Option<Vec<u8>>,
}

enum Verdict {
    AcceptBoth,
    AcceptRc,
    AcceptHeart,
    Reject(Mode, String),
    Run(i32),
}

fn parse_expect(text: &str) -> Expectation {
    let (header, body) = match text.split_once("---\n") {
        Some((h, b)) => (h, Some(b.as_bytes().to_vec())),
        None => (text, None),
    };
    let mut tokens = header.split_whitespace();
    let verdict = match tokens.next().expect("empty expect file") {
        "accept" => Verdict::AcceptBoth,
        "accept-rc" => Verdict::AcceptRc,
        "accept-heart" => Verdict::AcceptHeart,
        "reject" => Verdict::Reject(
            Mode::Rc,
            tokens.next().expect("reject needs a code").to_string(),
        ),
        "reject-heart" => Verdict::Reject(
            Mode::Heart,
            tokens.next().expect("reject-heart needs a code").to_string(),
        ),
        "run" => Verdict::Run(
            tokens
                .next()
                .expect("run needs an exit code")
                .parse()
                .expect("run exit code"),
        ),
        other => panic!("unknown verdict `{other}`"),
    };
    let mut e = Expectation {
        verdict,
        no_prelude: false,
        fuel: DEFAULT_FUEL,
        entry: None,
        stdout: body,
    };
    for t in tokens {
        if t == "no-prelude" {
            e.no_prelude = true;
        } else if let Some(n) = t.strip_prefix("fuel=") {
            e.fuel = n.parse().expect("fuel value");
        } else if let Some(n) = t.strip_prefix("entry=") {
            e.entry = Some(n.to_string());
        } else {
            panic!("unknown expect token `{t}`");
        }
    }
    e
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn corpus_cases() -> Vec<PathBuf> {
    let mut cases = Vec::new();
    for area in std::fs::read_dir(corpus_dir()).expect("corpus dir") {
        let area = area.unwrap().path();
        if !area.is_dir() {
            continue;
        }
        for f in std::fs::read_dir(&area).unwrap() {
            let f = f.unwrap().path();
            if f.extension().and_then(|e| e.to_str()) == Some("fear")
                && f.with_extension("expect").exists()
            {
                cases.push(f);
            }
        }
    }
    cases.sort();
    cases
}

fn sources_for(path: &Path, no_prelude: bool) -> Vec<Source> {
    let text = std::fs::read_to_string(path).unwrap();
    let prelude = load_prelude(no_prelude, None).unwrap();
    with_prelude(prelude, vec![(path.display().to_string(), text)])
}

fn check_case(path: &Path) -> Result<(), String> {
    let expect = parse_expect(&std::fs::read_to_string(path.with_extension("expect")).unwrap());
    let name = path.display();
    let sources = sources_for(path, expect.no_prelude);
    let assert_clean = |mode: Mode| -> Result<(), String> {
        let (sm, r) = check_sources(&sources, mode);
        match r {
            Ok(_) => Ok(()),
            Err(ds) => Err(format!(
                "{name}: expected {mode:?} accept, got {}",
                ds.iter()
                    .map(|d| d.render(&sm))
                    .collect::<Vec<_>>()
                    .join("; ")
            )),
        }
    };
    match &expect.verdict {
        Verdict::AcceptBoth => {
            assert_clean(Mode::Heart)?;
            assert_clean(Mode::Rc)
        }
        Verdict::AcceptRc => assert_clean(Mode::Rc),
        Verdict::AcceptHeart => assert_clean(Mode::Heart),
        Verdict::Reject(mode, code) => {
            let (sm, r) = check_sources(&sources, *mode);
            match r {
                Ok(_) => Err(format!("{name}: expected reject with {code}, got accept")),
                Err(ds) => {
                    if ds.iter().any(|d| d.code == code) {
                        Ok(())
                    } else {
                        Err(format!(
                            "{name}: expected {code}, got {}",
                            ds.iter()
                                .map(|d| d.render(&sm))
                                .collect::<Vec<_>>()
                                .join("; ")
                        ))
                    }
                }
            }
        }
        Verdict::Run(exit) => {
            let (sm, r) = check_sources(&sources, Mode::Rc);
            let p = match r {
                Ok(p) => p,
                Err(ds) => {
                    return Err(format!(
                        "{name}: run file failed to check: {}",
                        ds.iter()
                            .map(|d| d.render(&sm))
                            .collect::<Vec<_>>()
                            .join("; ")
                    ))
                }
            };
            let entry = match &expect.entry {
                Some(e) => DeclName::new(e.clone(), 0),
                None => {
                    let main = DeclName::new("Main", 0);
                    p.top_level
                        .iter()
                        .find(|d| {
                            d.type_params.is_empty()
                                && d.name != main
                                && fearless::heart::implements(&p.table, &d.name, &main)
                        })
                        .map(|d| d.name.clone())
                        .ok_or_else(|| format!("{name}: no entry trait found"))?
                }
            };
            let (result, output) = evaluate(&p, &entry, expect.fuel);
            let got_exit = match &result {
                Ok(_) => 0,
                Err(_) => 3,
            };
            if got_exit != *exit {
                return Err(format!(
                    "{name}: expected exit {exit}, got {got_exit} ({:?})",
                    result.err().map(|e| e.code)
                ));
            }
            if let Some(want) = &expect.stdout {
                if &output != want {
                    return Err(format!(
                        "{name}: stdout mismatch\n want: {:?}\n got:  {:?}",
                        String::from_utf8_lossy(want),
                        String::from_utf8_lossy(&output)
                    ));
                }
            }
            Ok(())
        }
    }
}

#[test]
fn golden_corpus() {
    let cases = corpus_cases();
    assert!(cases.len() >= 40, "corpus seems incomplete: {} cases", cases.len());
    let results = pmap(&cases, |c| check_case(c));
    let failures: Vec<String> = results.into_iter().filter_map(Result::err).collect();
    assert!(
        failures.is_empty(),
        "{} corpus failures:\n{}",
        failures.len(),
        failures.join("\n")
    );
}
