//! Command-line driver: `check`, `eval`, and `lint` over theory files.
//!
//! Exit codes: 0 on success, 1 for domain failures (type errors, invalid
//! theories, fuel exhaustion), 2 for parse, usage, and I/O errors.

use std::fs;
use std::path::Path;

use crate::bidir::{validate_theory, ModedTheory};
use crate::decl::{check_elaborated, erase_elaborated, Telescope};
use crate::error::KernelError;
use crate::rewrite::{lint_left_linear, lint_orthogonal, Fuel};
use crate::surface::{self, parse_theory, LoweredFile, Pos};
use crate::syntax::alpha_eq;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

fn report(path: &Path, pos: Option<Pos>, msg: &str) {
    match pos {
        Some(p) => eprintln!("{}:{p}: {msg}", path.display()),
        None => eprintln!("{}: {msg}", path.display()),
    }
}

fn load(path: &Path) -> Result<LoweredFile, i32> {
    let src = fs::read_to_string(path).map_err(|e| {
        report(path, None, &format!("cannot read file: {e}"));
        EXIT_USAGE
    })?;
    parse_theory(&src).map_err(|d| {
        report(path, d.pos, &d.msg);
        EXIT_USAGE
    })
}

/// Best-effort position for a validation error: find the first
/// backtick-quoted name in the message that names a declared symbol.
fn pos_for_error(file: &LoweredFile, msg: &str) -> Option<Pos> {
    let mut rest = msg;
    while let Some(start) = rest.find('`') {
        let tail = &rest[start + 1..];
        let end = tail.find('`')?;
        let quoted = &tail[..end];
        for (e, p) in file.entries.iter().zip(&file.entry_pos) {
            if &*e.name == quoted {
                return Some(*p);
            }
        }
        rest = &tail[end + 1..];
    }
    None
}

fn validate(
    path: &Path,
    file: &LoweredFile,
    fuel: &mut Fuel,
    verbose: bool,
) -> Result<ModedTheory, i32> {
    match validate_theory(file.entries.clone(), file.rules.clone(), fuel) {
        Ok(mthy) => {
            for w in &mthy.rigidity_warnings {
                report(path, None, &format!("warning: {w}"));
            }
            if verbose {
                eprintln!(
                    "{}: validated {} symbols, {} rules",
                    path.display(),
                    mthy.entries.len(),
                    mthy.rules().rules().len()
                );
            }
            Ok(mthy)
        }
        Err(e) => {
            let msg = e.to_string();
            report(path, pos_for_error(file, &msg), &msg);
            Err(domain_code(&e))
        }
    }
}

fn domain_code(_e: &KernelError) -> i32 {
    EXIT_DOMAIN
}

fn check_defs(
    path: &Path,
    file: &LoweredFile,
    mthy: &ModedTheory,
    fuel: &mut Fuel,
    verbose: bool,
    crosscheck: bool,
) -> i32 {
    for def in &file.defs {
        let mut env = Telescope::new();
        let outcome = (|| -> Result<(crate::syntax::TypeExpr, crate::decl::ElabTerm), KernelError> {
            match &def.ty {
                Some(ty) => {
                    mthy.check_type_wf(&mut env, ty, fuel)?;
                    let elab = mthy.check(&mut env, &def.body, ty, fuel)?;
                    Ok((ty.clone(), elab))
                }
                None => mthy.infer(&mut env, &def.body, fuel),
            }
        })();
        let (ty, elab) = match outcome {
            Ok(r) => r,
            Err(e) => {
                report(
                    path,
                    Some(def.pos),
                    &format!("in definition `{}`: {e}", def.name),
                );
                return domain_code(&e);
            }
        };
        if crosscheck {
            let ok = (|| -> Result<(), KernelError> {
                let erased = erase_elaborated(&mthy.theory.sig, &elab)?;
                if !alpha_eq(&erased, &def.body) {
                    return Err(KernelError::Other(
                        "elaboration does not erase back to the surface term".into(),
                    ));
                }
                check_elaborated(&mthy.theory, &mut Telescope::new(), &elab, &ty, fuel)
            })();
            if let Err(e) = ok {
                report(
                    path,
                    Some(def.pos),
                    &format!("oracle crosscheck failed for `{}`: {e}", def.name),
                );
                return domain_code(&e);
            }
        }
        if verbose {
            println!(
                "def {} : {}",
                def.name,
                surface::print_type(&ty, &mut Vec::new())
            );
        }
    }
    EXIT_OK
}

pub fn run_check(path: &Path, fuel_budget: u64, verbose: bool, crosscheck: bool) -> i32 {
    let file = match load(path) {
        Ok(f) => f,
        Err(c) => return c,
    };
    let mut fuel = Fuel::new(fuel_budget);
    let mthy = match validate(path, &file, &mut fuel, verbose) {
        Ok(m) => m,
        Err(c) => return c,
    };
    let code = check_defs(path, &file, &mthy, &mut fuel, verbose, crosscheck);
    if code == EXIT_OK {
        println!(
            "ok: {} symbols, {} rules, {} definitions",
            mthy.entries.len(),
            mthy.rules().rules().len(),
            file.defs.len()
        );
    }
    code
}

pub fn run_eval(path: &Path, fuel_budget: u64, verbose: bool) -> i32 {
    let file = match load(path) {
        Ok(f) => f,
        Err(c) => return c,
    };
    let mut fuel = Fuel::new(fuel_budget);
    let mthy = match validate(path, &file, &mut fuel, verbose) {
        Ok(m) => m,
        Err(c) => return c,
    };
    if file.evals.is_empty() {
        report(path, None, "nothing to evaluate (no `eval` declarations)");
    }
    for ev in &file.evals {
        match mthy.rules().normalize(&ev.term, &mut fuel) {
            Ok(nf) => {
                println!("{}", surface::print_term(&nf, &mut Vec::new()));
                if verbose {
                    eprintln!("  ({} fuel remaining)", fuel.remaining());
                }
            }
            Err(e) => {
                report(path, Some(ev.pos), &e.to_string());
                return domain_code(&e);
            }
        }
    }
    EXIT_OK
}

pub fn run_lint(path: &Path, fuel_budget: u64, verbose: bool) -> i32 {
    let file = match load(path) {
        Ok(f) => f,
        Err(c) => return c,
    };
    let mut fuel = Fuel::new(fuel_budget);
    let mthy = match validate(path, &file, &mut fuel, verbose) {
        Ok(m) => m,
        Err(c) => return c,
    };
    let mut findings = 0usize;
    for (i, rule) in mthy.rules().rules().iter().enumerate() {
        for v in lint_left_linear(rule) {
            let pos = file.rule_pos.get(i).copied();
            report(
                path,
                pos,
                &format!("rule {} is not left-linear in `{v}`", i + 1),
            );
            findings += 1;
        }
    }
    for f in lint_orthogonal(mthy.rules()) {
        let pos = file.rule_pos.get(f.outer).copied();
        report(
            path,
            pos,
            &format!(
                "rules {} and {} overlap at {}",
                f.outer + 1,
                f.inner + 1,
                f.position
            ),
        );
        findings += 1;
    }
    if findings == 0 {
        println!("ok: rules are left-linear and non-overlapping");
    } else {
        println!("{findings} finding(s)");
    }
    EXIT_OK
}
