//! Hierarchical netlists and their two text formats.

mod check;
mod native;
mod spice;

pub use check::{netlist_arity_check, netlist_syntax_check};
pub use native::{parse_native, print_native};
pub use spice::{parse_spice, parse_spice_number, MAIN_MODULE};

use std::fmt;

use num_rational::BigRational;

use crate::term::Term;

/// The primitive devices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DeviceKind {
    Resistor,
    Capacitor,
    Inductor,
    JosephsonJunction,
    TransmissionLine,
    MutualInductance,
    VoltageSource,
    CurrentSource,
    PhaseSource,
}

/// Field counts a device occurrence must have.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arity {
    pub nodes: usize,
    pub branches: usize,
    pub values: usize,
}

impl DeviceKind {
    pub const ALL: [DeviceKind; 9] = [
        DeviceKind::Resistor,
        DeviceKind::Capacitor,
        DeviceKind::Inductor,
        DeviceKind::JosephsonJunction,
        DeviceKind::TransmissionLine,
        DeviceKind::MutualInductance,
        DeviceKind::VoltageSource,
        DeviceKind::CurrentSource,
        DeviceKind::PhaseSource,
    ];

    /// Type tag used in native netlists; also the SPICE element letter.
    pub fn letter(self) -> char {
        match self {
            DeviceKind::Resistor => 'r',
            DeviceKind::Capacitor => 'c',
            DeviceKind::Inductor => 'l',
            DeviceKind::JosephsonJunction => 'b',
            DeviceKind::TransmissionLine => 't',
            DeviceKind::MutualInductance => 'k',
            DeviceKind::VoltageSource => 'v',
            DeviceKind::CurrentSource => 'i',
            DeviceKind::PhaseSource => 'p',
        }
    }

    pub fn from_letter(letter: char) -> Option<Self> {
        let letter = letter.to_ascii_lowercase();
        Self::ALL.into_iter().find(|k| k.letter() == letter)
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        let mut chars = tag.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Self::from_letter(c),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DeviceKind::Resistor => "resistor",
            DeviceKind::Capacitor => "capacitor",
            DeviceKind::Inductor => "inductor",
            DeviceKind::JosephsonJunction => "josephson-junction",
            DeviceKind::TransmissionLine => "transmission-line",
            DeviceKind::MutualInductance => "mutual-inductance",
            DeviceKind::VoltageSource => "voltage-source",
            DeviceKind::CurrentSource => "current-source",
            DeviceKind::PhaseSource => "phase-source",
        }
    }

    /// Node, branch and value counts.
    ///
    /// | kind | nodes | branches | values |
    /// |------|-------|----------|--------|
    /// | r, c, l, v, i | 2 | current | value |
    /// | b | 2 | current, phase, capacitor current | icrit, r, c |
    /// | t | 4 | port 1 current, port 2 current | z0, delay |
    /// | k | 0 | none | inductor 1, inductor 2, coupling |
    /// | p | 2 | current, source phase | phase |
    pub fn arity(self) -> Arity {
        let (nodes, branches, values) = match self {
            DeviceKind::Resistor
            | DeviceKind::Capacitor
            | DeviceKind::Inductor
            | DeviceKind::VoltageSource
            | DeviceKind::CurrentSource => (2, 1, 1),
            DeviceKind::JosephsonJunction => (2, 3, 3),
            DeviceKind::TransmissionLine => (4, 2, 2),
            DeviceKind::MutualInductance => (0, 0, 3),
            DeviceKind::PhaseSource => (2, 2, 1),
        };
        Arity { nodes, branches, values }
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What an occurrence instantiates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ElementKind {
    Device(DeviceKind),
    /// A module defined in the same netlist (or an unrecognized tag, which
    /// the syntax check reports).
    Module(String),
}

impl ElementKind {
    pub fn tag(&self) -> String {
        match self {
            ElementKind::Device(d) => d.letter().to_string(),
            ElementKind::Module(name) => name.clone(),
        }
    }

    pub fn device(&self) -> Option<DeviceKind> {
        match self {
            ElementKind::Device(d) => Some(*d),
            ElementKind::Module(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Occurrence {
    pub name: String,
    pub kind: ElementKind,
    pub nodes: Vec<String>,
    pub branches: Vec<String>,
    pub values: Vec<Term>,
}

impl Occurrence {
    pub fn device(
        name: impl Into<String>,
        kind: DeviceKind,
        nodes: &[&str],
        branches: &[&str],
        values: Vec<Term>,
    ) -> Self {
        Self {
            name: name.into(),
            kind: ElementKind::Device(kind),
            nodes: nodes.iter().map(|s| s.to_string()).collect(),
            branches: branches.iter().map(|s| s.to_string()).collect(),
            values,
        }
    }

    pub fn instance(name: impl Into<String>, module: impl Into<String>, nodes: &[&str]) -> Self {
        Self {
            name: name.into(),
            kind: ElementKind::Module(module.into()),
            nodes: nodes.iter().map(|s| s.to_string()).collect(),
            branches: Vec::new(),
            values: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Module {
    pub name: String,
    pub externals: Vec<String>,
    pub occurrences: Vec<Occurrence>,
}

impl Module {
    pub fn new(name: impl Into<String>, externals: &[&str], occurrences: Vec<Occurrence>) -> Self {
        Self {
            name: name.into(),
            externals: externals.iter().map(|s| s.to_string()).collect(),
            occurrences,
        }
    }
}

/// One `.PRINT` request.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PrintRequest {
    /// Node voltage, or the difference between two nodes.
    Voltage(String, Option<String>),
    /// Current through a device.
    Current(String),
    /// Phase of a node or a junction.
    Phase(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Control {
    Tran { step: BigRational, stop: BigRational, start: Option<BigRational> },
    Print(Vec<PrintRequest>),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Netlist {
    /// The first module is the one simulated.
    pub modules: Vec<Module>,
    pub controls: Vec<Control>,
}

impl Netlist {
    pub fn new(modules: Vec<Module>) -> Self {
        Self { modules, controls: Vec::new() }
    }

    pub fn top(&self) -> Option<&Module> {
        self.modules.first()
    }

    pub fn module(&self, name: &str) -> Option<&Module> {
        self.modules.iter().find(|m| m.name == name)
    }

    /// The `.TRAN` settings, if the deck had any.
    pub fn tran(&self) -> Option<(&BigRational, &BigRational, Option<&BigRational>)> {
        self.controls.iter().find_map(|c| match c {
            Control::Tran { step, stop, start } => Some((step, stop, start.as_ref())),
            Control::Print(_) => None,
        })
    }

    pub fn print_requests(&self) -> Vec<&PrintRequest> {
        self.controls
            .iter()
            .flat_map(|c| match c {
                Control::Print(reqs) => reqs.iter().collect(),
                Control::Tran { .. } => Vec::new(),
            })
            .collect()
    }
}

/// True for any spelling of the ground node.
pub fn is_ground(node: &str) -> bool {
    node == "0" || node.eq_ignore_ascii_case("gnd")
}

/// Reads either format: text whose first form starts with `(` is native,
/// anything else is a SPICE deck.
pub fn parse_any(text: &str) -> Result<Netlist, crate::error::ParseError> {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with(';'));
    match first {
        Some(line) if line.starts_with('(') => parse_native(text),
        _ => parse_spice(text),
    }
}
