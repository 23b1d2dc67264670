//! Structural checks on a parsed netlist. Both checks collect every problem
//! they find.

use std::collections::HashSet;

use super::{ElementKind, Netlist};
use crate::error::Diagnostic;
use crate::term::{is_identifier, Prim, Term};

fn finish(diagnostics: Vec<Diagnostic>) -> Result<(), Vec<Diagnostic>> {
    if diagnostics.is_empty() {
        Ok(())
    } else {
        Err(diagnostics)
    }
}

fn term_problem(term: &Term) -> Option<String> {
    match term {
        Term::Const(_) => None,
        Term::Var(name) if is_identifier(name) => None,
        Term::Var(name) => Some(format!("`{name}` is not a valid signal name")),
        Term::App(prim, args) => {
            if args.len() != prim.arity() {
                return Some(format!("`{prim}` takes {} argument(s), got {}", prim.arity(), args.len()));
            }
            if *prim == Prim::Hist && !matches!(args[0], Term::Var(_)) {
                return Some("first argument of `f-hist` must be a signal name".into());
            }
            args.iter().find_map(term_problem)
        }
    }
}

/// Names are identifiers, component types are known devices or defined
/// modules, occurrence names are distinct within each module, and value
/// terms are well formed.
pub fn netlist_syntax_check(netlist: &Netlist) -> Result<(), Vec<Diagnostic>> {
    let mut out = Vec::new();
    let mut module_names = HashSet::new();
    for module in &netlist.modules {
        if !is_identifier(&module.name) {
            out.push(Diagnostic::error(format!("module name `{}` is not a valid name", module.name)));
        }
        if !module_names.insert(module.name.as_str()) {
            out.push(Diagnostic::error(format!("module `{}` is defined more than once", module.name)));
        }
    }
    for module in &netlist.modules {
        let mut seen = HashSet::new();
        for occ in &module.occurrences {
            let at = format!("module `{}`, occurrence `{}`", module.name, occ.name);
            if !is_identifier(&occ.name) {
                out.push(Diagnostic::error(format!("{at}: `{}` is not a valid name", occ.name)));
            }
            if !seen.insert(occ.name.as_str()) {
                out.push(Diagnostic::error(format!(
                    "module `{}`: occurrence name `{}` is used more than once",
                    module.name, occ.name
                )));
            }
            if let ElementKind::Module(tag) = &occ.kind {
                if !module_names.contains(tag.as_str()) {
                    out.push(Diagnostic::error(format!("{at}: unrecognized component `{tag}`")));
                }
            }
            for name in occ.nodes.iter().chain(&occ.branches) {
                if name.is_empty() || name.chars().any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '\'' | ';')) {
                    out.push(Diagnostic::error(format!("{at}: `{name}` is not a valid node or branch name")));
                }
            }
            for value in &occ.values {
                if let Some(problem) = term_problem(value) {
                    out.push(Diagnostic::error(format!("{at}: malformed value `{value}`: {problem}")));
                }
            }
        }
    }
    finish(out)
}

/// Field counts match each device's arity; module references pass one
/// connection per external.
pub fn netlist_arity_check(netlist: &Netlist) -> Result<(), Vec<Diagnostic>> {
    let mut out = Vec::new();
    for module in &netlist.modules {
        for occ in &module.occurrences {
            let at = format!("module `{}`, occurrence `{}`", module.name, occ.name);
            match &occ.kind {
                ElementKind::Device(kind) => {
                    let arity = kind.arity();
                    for (what, expected, got) in [
                        ("nodes", arity.nodes, occ.nodes.len()),
                        ("branches", arity.branches, occ.branches.len()),
                        ("values", arity.values, occ.values.len()),
                    ] {
                        if expected != got {
                            out.push(Diagnostic::error(format!(
                                "{at}: a {kind} takes {expected} {what}, found {got}"
                            )));
                        }
                    }
                }
                ElementKind::Module(name) => {
                    if let Some(target) = netlist.module(name) {
                        if target.externals.len() != occ.nodes.len() {
                            out.push(Diagnostic::error(format!(
                                "{at}: module `{name}` has {} externals, found {} connections",
                                target.externals.len(),
                                occ.nodes.len()
                            )));
                        }
                    }
                    if !occ.branches.is_empty() || !occ.values.is_empty() {
                        out.push(Diagnostic::error(format!("{at}: a module reference takes no branches or values")));
                    }
                }
            }
        }
    }
    finish(out)
}
