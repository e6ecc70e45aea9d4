//! The `fear` command line: check, run, and dump programs.
//!
//! Exit codes: 0 clean, 1 diagnostics, 2 usage or I/O error, 3 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fearless::ast::{DeclName, Mode, Program};
use fearless::diag::Diagnostic;
use fearless::pipeline::{self, Source};
use fearless::span::SourceMap;

#[derive(Parser)]
#[command(name = "fear", version, about = "checker and interpreter for .fear programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct PreludeOpts {
    /// Do not load the built-in prelude.
    #[arg(long)]
    no_prelude: bool,
    /// Load the prelude from a directory of .fear files instead.
    #[arg(long, value_name = "DIR")]
    prelude: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse, elaborate, and type-check files as one program.
    Check {
        files: Vec<PathBuf>,
        /// Typing discipline: heart (no capabilities) or rc.
        #[arg(long, default_value = "rc", value_parser = parse_mode)]
        mode: Mode,
        #[command(flatten)]
        prelude: PreludeOpts,
        /// Print diagnostics as a JSON array.
        #[arg(long)]
        json: bool,
    },
    /// Check a program in rc mode, then run its main trait.
    Run {
        file: PathBuf,
        /// Entry declaration; defaults to the unique trait implementing Main.
        #[arg(long, value_name = "NAME")]
        entry: Option<String>,
        /// Step budget before giving up.
        #[arg(long, default_value_t = fearless::interp::DEFAULT_FUEL)]
        fuel: u64,
        #[command(flatten)]
        prelude: PreludeOpts,
    },
    /// Print a JSON rendering of a pipeline stage.
    Ast {
        file: PathBuf,
        /// One of: parsed, desugared, elaborated.
        #[arg(long, default_value = "elaborated")]
        stage: String,
        #[arg(long, default_value = "rc", value_parser = parse_mode)]
        mode: Mode,
        #[command(flatten)]
        prelude: PreludeOpts,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "heart" => Ok(Mode::Heart),
        "rc" => Ok(Mode::Rc),
        other => Err(format!("unknown mode `{other}` (expected heart or rc)")),
    }
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Check { files, mode, prelude, json } => cmd_check(files, mode, prelude, json),
        Cmd::Run { file, entry, fuel, prelude } => cmd_run(file, entry, fuel, prelude),
        Cmd::Ast { file, stage, mode, prelude } => cmd_ast(file, stage, mode, prelude),
    }
}

fn read_sources(files: &[PathBuf], prelude: &PreludeOpts) -> Result<Vec<Source>, String> {
    let pre = fearless::prelude::load_prelude(prelude.no_prelude, prelude.prelude.as_deref())
        .map_err(|e| format!("cannot load prelude: {e}"))?;
    let mut user = Vec::new();
    for f in files {
        let text = std::fs::read_to_string(f)
            .map_err(|e| format!("cannot read {}: {e}", f.display()))?;
        user.push((f.display().to_string(), text));
    }
    Ok(pipeline::with_prelude(pre, user))
}

fn print_diags(diags: &[Diagnostic], sm: &SourceMap, json: bool) {
    if json {
        let arr: Vec<_> = diags.iter().map(|d| d.to_json(sm)).collect();
        println!("{}", serde_json::to_string_pretty(&arr).unwrap());
    } else {
        for d in diags {
            println!("{}", d.render(sm));
        }
    }
}

fn cmd_check(files: Vec<PathBuf>, mode: Mode, prelude: PreludeOpts, json: bool) -> ExitCode {
    if files.is_empty() {
        eprintln!("fear check: no input files");
        return ExitCode::from(2);
    }
    let sources = match read_sources(&files, &prelude) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("fear check: {e}");
            return ExitCode::from(2);
        }
    };
    let (sm, r) = pipeline::check_sources(&sources, mode);
    match r {
        Ok(_) => ExitCode::SUCCESS,
        Err(ds) => {
            print_diags(&ds, &sm, json);
            ExitCode::from(1)
        }
    }
}

fn find_entry(p: &Program, explicit: Option<String>) -> Result<DeclName, String> {
    if let Some(name) = explicit {
        return Ok(DeclName::new(name, 0));
    }
    let main = DeclName::new("Main", 0);
    let mut candidates: Vec<DeclName> = p
        .top_level
        .iter()
        .filter(|d| {
            d.type_params.is_empty()
                && d.name != main
                && fearless::heart::implements(&p.table, &d.name, &main)
        })
        .map(|d| d.name.clone())
        .collect();
    candidates.dedup();
    match candidates.len() {
        0 => Err("no trait implementing Main found; use --entry".into()),
        1 => Ok(candidates.remove(0)),
        _ => Err(format!(
            "multiple traits implement Main ({}); use --entry",
            candidates
                .iter()
                .map(|c| c.base.clone())
                .collect::<Vec<_>>()
                .join(", ")
        )),
    }
}

fn cmd_run(file: PathBuf, entry: Option<String>, fuel: u64, prelude: PreludeOpts) -> ExitCode {
    let sources = match read_sources(std::slice::from_ref(&file), &prelude) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("fear run: {e}");
            return ExitCode::from(2);
        }
    };
    let (sm, r) = pipeline::check_sources(&sources, Mode::Rc);
    let program = match r {
        Ok(p) => p,
        Err(ds) => {
            print_diags(&ds, &sm, false);
            return ExitCode::from(1);
        }
    };
    let entry = match find_entry(&program, entry) {
        Ok(e) => e,
        Err(msg) => {
            eprintln!("fear run: error[E-RT-NO-ENTRY]: {msg}");
            return ExitCode::from(3);
        }
    };
    let (result, output) = fearless::interp::evaluate(&program, &entry, fuel);
    use std::io::Write;
    std::io::stdout().write_all(&output).ok();
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fear run: error[{}]: {}", e.code, e.message);
            ExitCode::from(3)
        }
    }
}

fn cmd_ast(file: PathBuf, stage: String, mode: Mode, prelude: PreludeOpts) -> ExitCode {
    let text = match std::fs::read_to_string(&file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("fear ast: cannot read {}: {e}", file.display());
            return ExitCode::from(2);
        }
    };
    let value = match stage.as_str() {
        "parsed" => {
            let mut sm = SourceMap::new();
            let id = sm.add_file(&file.display().to_string(), &text);
            let toks = match fearless::lex::tokenize(id, &text) {
                Ok(t) => t,
                Err(d) => {
                    println!("{}", d.render(&sm));
                    return ExitCode::from(1);
                }
            };
            match fearless::parse::parse_program(&toks, id) {
                Ok(p) => fearless::json::surface_program_json(&p),
                // A lone expression is also accepted at this stage.
                Err(d) => match fearless::parse::parse_expression(&toks, id) {
                    Ok(e) => fearless::json::surface_expr_json(&e),
                    Err(_) => {
                        println!("{}", d.render(&sm));
                        return ExitCode::from(1);
                    }
                },
            }
        }
        "desugared" | "elaborated" => {
            let sources = match read_sources(std::slice::from_ref(&file), &prelude) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("fear ast: {e}");
                    return ExitCode::from(2);
                }
            };
            if stage == "desugared" {
                let (sm, r) = pipeline::parse_and_sugar(&sources);
                match r {
                    Ok(sp) => fearless::json::surface_program_json(&sp),
                    Err(ds) => {
                        print_diags(&ds, &sm, false);
                        return ExitCode::from(1);
                    }
                }
            } else {
                let (sm, r) = pipeline::elaborate_sources(&sources, mode);
                match r {
                    Ok(p) => {
                        // Only the decls originating in the requested file
                        // (and the synthetics it pulled in).
                        let user_file = sources.len() as u16 - 1;
                        let filtered = Program {
                            top_level: p
                                .top_level
                                .iter()
                                .filter(|d| d.span.file >= user_file)
                                .cloned()
                                .collect(),
                            table: p.table.clone(),
                            mode: p.mode,
                        };
                        fearless::json::program_json(&filtered)
                    }
                    Err(ds) => {
                        print_diags(&ds, &sm, false);
                        return ExitCode::from(1);
                    }
                }
            }
        }
        other => {
            eprintln!("fear ast: unknown stage `{other}` (expected parsed, desugared, elaborated)");
            return ExitCode::from(2);
        }
    };
    println!("{}", serde_json::to_string_pretty(&value).unwrap());
    ExitCode::SUCCESS
}
