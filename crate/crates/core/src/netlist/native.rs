//! The native netlist format: a list of modules, each
//! `(name externals (occurrence ...))`, each occurrence
//! `(name type (nodes) (branches) (values))`.

use std::fmt::Write as _;

use super::{DeviceKind, ElementKind, Module, Netlist, Occurrence};
use crate::error::ParseError;
use crate::sexpr::{self, Sexpr};
use crate::term::{is_identifier, Term};

/// Parses native netlist text. Accepts a `(defconst *name* '(...))` form, a
/// list of modules, or one or more bare module forms.
pub fn parse_native(text: &str) -> Result<Netlist, ParseError> {
    let forms = sexpr::read_all(text)?;
    let module_forms: Vec<&Sexpr> = match forms.as_slice() {
        [] => return Err(ParseError::new(1, "no netlist found")),
        [single] => {
            let single = single.unquoted();
            let items = single
                .as_list()
                .ok_or_else(|| ParseError::new(single.line(), "netlist must be a list"))?;
            match items.first() {
                Some(head) if head.as_atom().is_some_and(|a| a.eq_ignore_ascii_case("defconst")) => {
                    if items.len() != 3 {
                        return Err(ParseError::new(single.line(), "defconst takes a name and a netlist"));
                    }
                    let body = items[2].unquoted();
                    body.as_list()
                        .ok_or_else(|| ParseError::new(body.line(), "netlist must be a list of modules"))?
                        .iter()
                        .collect()
                }
                Some(Sexpr::Atom { .. }) => vec![single],
                _ => items.iter().collect(),
            }
        }
        many => many.iter().map(Sexpr::unquoted).collect(),
    };
    let modules = module_forms.into_iter().map(parse_module).collect::<Result<_, _>>()?;
    Ok(Netlist::new(modules))
}

fn parse_module(form: &Sexpr) -> Result<Module, ParseError> {
    let line = form.line();
    let items = form
        .as_list()
        .ok_or_else(|| ParseError::new(line, format!("module must be a list, found `{form}`")))?;
    if items.len() != 3 {
        return Err(ParseError::new(
            line,
            format!("module needs 3 fields (name externals occurrences), found {}", items.len()),
        ));
    }
    let name = identifier(&items[0], "module name")?;
    let externals = name_list(&items[1], "externals")?;
    let occurrences = items[2]
        .as_list()
        .ok_or_else(|| ParseError::new(items[2].line(), "occurrences must be a list"))?
        .iter()
        .map(parse_occurrence)
        .collect::<Result<_, _>>()?;
    Ok(Module { name, externals, occurrences })
}

fn parse_occurrence(form: &Sexpr) -> Result<Occurrence, ParseError> {
    let line = form.line();
    let items = form
        .as_list()
        .ok_or_else(|| ParseError::new(line, format!("occurrence must be a list, found `{form}`")))?;
    if items.len() != 5 {
        return Err(ParseError::new(
            line,
            format!("occurrence needs 5 fields (name type nodes branches values), found {}", items.len()),
        ));
    }
    let name = identifier(&items[0], "occurrence name")?;
    let tag = identifier(&items[1], "component type")?;
    let kind = match DeviceKind::from_tag(&tag) {
        Some(device) => ElementKind::Device(device),
        None => ElementKind::Module(tag),
    };
    let nodes = name_list(&items[2], "nodes")?;
    let branches = name_list(&items[3], "branches")?;
    let values = items[4]
        .as_list()
        .ok_or_else(|| ParseError::new(items[4].line(), "values must be a list"))?
        .iter()
        .map(Term::from_sexpr)
        .collect::<Result<_, _>>()?;
    Ok(Occurrence { name, kind, nodes, branches, values })
}

fn identifier(form: &Sexpr, what: &str) -> Result<String, ParseError> {
    match form.as_atom() {
        Some(text) if is_identifier(text) => Ok(text.to_string()),
        _ => Err(ParseError::new(form.line(), format!("{what} `{form}` is not a valid name"))),
    }
}

/// Node and branch lists; node names may be numeric, as in SPICE decks.
fn name_list(form: &Sexpr, what: &str) -> Result<Vec<String>, ParseError> {
    form.as_list()
        .ok_or_else(|| ParseError::new(form.line(), format!("{what} must be a list, found `{form}`")))?
        .iter()
        .map(|item| {
            item.as_atom()
                .map(str::to_string)
                .ok_or_else(|| ParseError::new(item.line(), format!("{what} entry `{item}` is not a name")))
        })
        .collect()
}

fn write_names(out: &mut String, names: &[String]) {
    if names.is_empty() {
        out.push_str("nil");
    } else {
        out.push('(');
        out.push_str(&names.join(" "));
        out.push(')');
    }
}

/// Prints a netlist in the native format. Reparsing the output with
/// [`parse_native`] gives back the same modules.
pub fn print_native(netlist: &Netlist) -> String {
    let mut out = String::from("(");
    for (i, module) in netlist.modules.iter().enumerate() {
        if i > 0 {
            out.push_str("\n ");
        }
        let _ = write!(out, "({}\n  ", module.name);
        write_names(&mut out, &module.externals);
        out.push_str("\n  (");
        for (j, occ) in module.occurrences.iter().enumerate() {
            if j > 0 {
                out.push_str("\n   ");
            }
            let _ = write!(out, "({} {} ", occ.name, occ.kind.tag());
            write_names(&mut out, &occ.nodes);
            out.push(' ');
            write_names(&mut out, &occ.branches);
            out.push_str(" (");
            let values: Vec<String> = occ.values.iter().map(Term::to_string).collect();
            out.push_str(&values.join(" "));
            out.push_str("))");
        }
        out.push_str("))");
    }
    out.push_str(")\n");
    out
}
