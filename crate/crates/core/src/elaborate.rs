//! Module sorting and hierarchy flattening.

use std::collections::{HashMap, HashSet};

use crate::error::{Diagnostic, ElaborateError};
use crate::netlist::{is_ground, DeviceKind, ElementKind, Module, Netlist, Occurrence};
use crate::term::{Term, HN, TIME};

/// Separator between instance path segments in flattened names.
pub const DEFAULT_CONCAT: char = '|';

/// Canonical name of the ground node.
pub const GROUND: &str = "gnd";

/// A circuit of primitive devices only.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatCircuit {
    pub occurrences: Vec<Occurrence>,
    /// Non-ground nodes in first-appearance order.
    pub nodes: Vec<String>,
    pub ground: String,
    pub globals: Vec<String>,
}

impl FlatCircuit {
    pub fn occurrence(&self, name: &str) -> Option<&Occurrence> {
        self.occurrences.iter().find(|o| o.name == name)
    }

    /// Views the circuit as a single module, e.g. to flatten it again.
    pub fn as_module(&self, name: &str) -> Module {
        Module { name: name.to_string(), externals: Vec::new(), occurrences: self.occurrences.clone() }
    }

    pub fn from_occurrences(occurrences: Vec<Occurrence>, globals: &[String]) -> Self {
        let mut nodes = Vec::new();
        let mut seen = HashSet::new();
        for occ in &occurrences {
            for node in &occ.nodes {
                if node != GROUND && seen.insert(node.clone()) {
                    nodes.push(node.clone());
                }
            }
        }
        Self { occurrences, nodes, ground: GROUND.to_string(), globals: globals.to_vec() }
    }
}

fn references(module: &Module) -> impl Iterator<Item = &str> {
    module.occurrences.iter().filter_map(|o| match &o.kind {
        ElementKind::Module(name) => Some(name.as_str()),
        ElementKind::Device(_) => None,
    })
}

/// Orders modules so that every module comes after the modules it
/// references. References to undefined modules are left for
/// [`flatten`] to report.
pub fn sort_modules(netlist: &Netlist) -> Result<Netlist, ElaborateError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let index: HashMap<&str, usize> = netlist.modules.iter().enumerate().map(|(i, m)| (m.name.as_str(), i)).collect();
    let mut marks = vec![Mark::New; netlist.modules.len()];
    let mut order = Vec::with_capacity(netlist.modules.len());
    let mut path: Vec<usize> = Vec::new();

    fn visit(
        i: usize,
        netlist: &Netlist,
        index: &HashMap<&str, usize>,
        marks: &mut [Mark],
        order: &mut Vec<usize>,
        path: &mut Vec<usize>,
    ) -> Result<(), ElaborateError> {
        match marks[i] {
            Mark::Done => return Ok(()),
            Mark::Active => {
                let start = path.iter().position(|&p| p == i).unwrap_or(0);
                let mut cycle: Vec<String> = path[start..].iter().map(|&p| netlist.modules[p].name.clone()).collect();
                cycle.push(netlist.modules[i].name.clone());
                return Err(ElaborateError::Cycle(cycle));
            }
            Mark::New => {}
        }
        marks[i] = Mark::Active;
        path.push(i);
        for child in references(&netlist.modules[i]) {
            if let Some(&c) = index.get(child) {
                visit(c, netlist, index, marks, order, path)?;
            }
        }
        path.pop();
        marks[i] = Mark::Done;
        order.push(i);
        Ok(())
    }

    for i in 0..netlist.modules.len() {
        visit(i, netlist, &index, &mut marks, &mut order, &mut path)?;
    }
    Ok(Netlist {
        modules: order.into_iter().map(|i| netlist.modules[i].clone()).collect(),
        controls: netlist.controls.clone(),
    })
}

struct Flattener<'a> {
    netlist: &'a Netlist,
    concat: char,
    globals: &'a [String],
    out: Vec<Occurrence>,
}

impl Flattener<'_> {
    fn is_global(&self, node: &str) -> bool {
        self.globals.iter().any(|g| g.eq_ignore_ascii_case(node))
    }

    fn prefixed(&self, prefix: &str, name: &str) -> String {
        if prefix.is_empty() {
            name.to_string()
        } else {
            format!("{prefix}{}{name}", self.concat)
        }
    }

    fn node(&self, prefix: &str, connections: &HashMap<&str, String>, node: &str) -> String {
        if is_ground(node) {
            GROUND.to_string()
        } else if let Some(outer) = connections.get(node) {
            outer.clone()
        } else if self.is_global(node) {
            node.to_string()
        } else {
            self.prefixed(prefix, node)
        }
    }

    fn expand(
        &mut self,
        module: &Module,
        prefix: &str,
        connections: &HashMap<&str, String>,
        depth: usize,
    ) -> Result<(), ElaborateError> {
        if depth > self.netlist.modules.len() {
            return Err(ElaborateError::Cycle(vec![module.name.clone(), module.name.clone()]));
        }
        // Names a value term may use to refer to something inside this module.
        let mut named: HashSet<&str> = HashSet::new();
        let mut local_nodes: HashSet<&str> = HashSet::new();
        for occ in &module.occurrences {
            named.insert(&occ.name);
            named.extend(occ.branches.iter().map(String::as_str));
            local_nodes.extend(occ.nodes.iter().map(String::as_str));
        }
        for occ in &module.occurrences {
            let name = self.prefixed(prefix, &occ.name);
            let nodes: Vec<String> = occ.nodes.iter().map(|n| self.node(prefix, connections, n)).collect();
            match &occ.kind {
                ElementKind::Device(_) => {
                    let branches = occ.branches.iter().map(|b| self.prefixed(prefix, b)).collect();
                    let values = occ
                        .values
                        .iter()
                        .map(|v| {
                            v.map_vars(&mut |var| {
                                if var == TIME || var == HN {
                                    var.to_string()
                                } else if named.contains(var) {
                                    self.prefixed(prefix, var)
                                } else if local_nodes.contains(var) {
                                    self.node(prefix, connections, var)
                                } else {
                                    var.to_string()
                                }
                            })
                        })
                        .collect();
                    self.out.push(Occurrence { name, kind: occ.kind.clone(), nodes, branches, values });
                }
                ElementKind::Module(target) => {
                    let child = self.netlist.module(target).ok_or_else(|| ElaborateError::UndefinedModule {
                        occurrence: name.clone(),
                        module: target.clone(),
                    })?;
                    if child.externals.len() != nodes.len() {
                        return Err(ElaborateError::ConnectionCount {
                            occurrence: name,
                            module: target.clone(),
                            given: nodes.len(),
                            expected: child.externals.len(),
                        });
                    }
                    let inner: HashMap<&str, String> =
                        child.externals.iter().map(String::as_str).zip(nodes).collect();
                    self.expand(child, &name, &inner, depth + 1)?;
                }
            }
        }
        Ok(())
    }
}

/// Expands every module reference below `top`. Inner occurrence, node and
/// branch names get the instance path as a prefix, joined by `concat`;
/// ground and `globals` keep their names.
pub fn flatten(netlist: &Netlist, top: &str, concat: char, globals: &[String]) -> Result<FlatCircuit, ElaborateError> {
    let module = netlist.module(top).ok_or_else(|| ElaborateError::UnknownTop(top.to_string()))?;
    let mut flattener = Flattener { netlist, concat, globals, out: Vec::new() };
    flattener.expand(module, "", &HashMap::new(), 0)?;
    Ok(FlatCircuit::from_occurrences(flattener.out, globals))
}

/// Sorts, then flattens the first module of `netlist`.
pub fn elaborate(netlist: &Netlist, concat: char, globals: &[String]) -> Result<FlatCircuit, ElaborateError> {
    let top = netlist.top().ok_or(ElaborateError::Empty)?.name.clone();
    let sorted = sort_modules(netlist)?;
    flatten(&sorted, &top, concat, globals)
}

/// Consistency checks on a flat circuit. Floating and dangling nodes are
/// warnings; a mutual inductance naming something other than an inductor
/// is an error.
pub fn check_flat(flat: &FlatCircuit) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let kinds: HashMap<&str, &ElementKind> = flat.occurrences.iter().map(|o| (o.name.as_str(), &o.kind)).collect();
    for occ in &flat.occurrences {
        match &occ.kind {
            ElementKind::Module(name) => {
                out.push(Diagnostic::error(format!("occurrence `{}` is an unexpanded reference to `{name}`", occ.name)))
            }
            ElementKind::Device(DeviceKind::MutualInductance) => {
                for value in occ.values.iter().take(2) {
                    let Term::Var(target) = value else {
                        out.push(Diagnostic::error(format!(
                            "mutual inductance `{}`: `{value}` is not an inductor name",
                            occ.name
                        )));
                        continue;
                    };
                    match kinds.get(target.as_str()) {
                        Some(ElementKind::Device(DeviceKind::Inductor)) => {}
                        Some(_) => out.push(Diagnostic::error(format!(
                            "mutual inductance `{}` names `{target}`, which is not an inductor",
                            occ.name
                        ))),
                        None => out.push(Diagnostic::error(format!(
                            "mutual inductance `{}` names undefined inductor `{target}`",
                            occ.name
                        ))),
                    }
                }
            }
            ElementKind::Device(_) => {}
        }
    }

    // Connectivity: count terminals per node and join nodes through devices.
    let mut index: HashMap<&str, usize> = HashMap::new();
    index.insert(&flat.ground, 0);
    for node in &flat.nodes {
        let next = index.len();
        index.entry(node).or_insert(next);
    }
    let mut parent: Vec<usize> = (0..index.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut terminals = vec![0usize; index.len()];
    for occ in &flat.occurrences {
        let ids: Vec<usize> = occ.nodes.iter().filter_map(|n| index.get(n.as_str()).copied()).collect();
        for &id in &ids {
            terminals[id] += 1;
        }
        // A transmission line joins each port pair; the two ports are only
        // coupled through the delay.
        for pair in ids.chunks(2) {
            if let [a, b] = *pair {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    for node in &flat.nodes {
        let id = index[node.as_str()];
        if terminals[id] < 2 {
            out.push(Diagnostic::warning(format!("node `{node}` has only one connection")));
        }
        if find(&mut parent, id) != find(&mut parent, 0) {
            out.push(Diagnostic::warning(format!("node `{node}` has no path to ground")));
        }
    }
    out
}
