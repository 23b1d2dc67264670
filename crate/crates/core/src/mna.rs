//! Symbolic modified nodal analysis.
//!
//! Unknowns are the non-ground node potentials followed by the branch
//! unknowns of each device in occurrence order. There is one current-balance
//! row per node and one constitutive row per branch unknown. Dynamic
//! elements use trapezoidal companions written over `$hn$` and the previous
//! values of recorded signals, so the system is built once and only its
//! numbers change from step to step.
//!
//! In phase mode the node unknowns are phases, and every node also gets an
//! auxiliary voltage unknown `v.<node>` tied to its phase by the trapezoidal
//! rule. Resistors, capacitors and sources stamp against those voltages;
//! inductors stamp directly against phases.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::elaborate::FlatCircuit;
use crate::error::{BuildError, EngineError};
use crate::netlist::{DeviceKind, ElementKind, Occurrence};
use crate::record::SimulationRecord;
use crate::term::{vw_eval, Clock, Prim, Term, HN, TIME};

/// Magnetic flux quantum h/(2e), in webers.
pub const PHI0: f64 = 2.067833848461929e-15;

/// 2π/Φ0: phase advance per volt-second.
pub fn phase_per_volt_second() -> f64 {
    2.0 * std::f64::consts::PI / PHI0
}

/// Prefix of the auxiliary voltage unknowns of phase mode.
pub const AUX_VOLTAGE_PREFIX: &str = "v.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum SimType {
    #[default]
    Voltage,
    Phase,
}

impl SimType {
    pub fn name(self) -> &'static str {
        match self {
            SimType::Voltage => "voltage",
            SimType::Phase => "phase",
        }
    }
}

impl fmt::Display for SimType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SimType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "voltage" => Ok(SimType::Voltage),
            "phase" => Ok(SimType::Phase),
            other => Err(format!("unknown simulation type `{other}` (expected voltage or phase)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnknownKind {
    Node,
    Branch,
    AuxVoltage,
}

/// Column numbering of the unknowns.
#[derive(Clone, Debug, PartialEq)]
pub struct UnknownIndex {
    names: Vec<String>,
    kinds: Vec<UnknownKind>,
    index: HashMap<String, usize>,
}

impl UnknownIndex {
    fn push(&mut self, name: &str, kind: UnknownKind) -> Result<(), BuildError> {
        let key = name.to_uppercase();
        if self.index.contains_key(&key) || key == "GND" {
            return Err(BuildError::DuplicateUnknown(name.to_string()));
        }
        self.index.insert(key, self.names.len());
        self.names.push(name.to_string());
        self.kinds.push(kind);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Column of `name`, ignoring case.
    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(&name.to_uppercase()).copied()
    }

    pub fn name(&self, col: usize) -> &str {
        &self.names[col]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kind(&self, col: usize) -> UnknownKind {
        self.kinds[col]
    }

    pub fn columns_of(&self, kind: UnknownKind) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&c| self.kinds[c] == kind)
    }
}

/// Branch names that get a column. Resistor currents and the junction
/// current itself are computed after the run.
fn branch_unknowns(occ: &Occurrence) -> &[String] {
    match occ.kind.device() {
        Some(DeviceKind::Resistor) | Some(DeviceKind::MutualInductance) | None => &[],
        Some(DeviceKind::JosephsonJunction) => occ.branches.get(1..).unwrap_or(&[]),
        Some(_) => &occ.branches,
    }
}

/// Node unknowns in first-appearance order, then branch unknowns in
/// occurrence order, then (phase mode) one auxiliary voltage per node.
pub fn assign_unknowns(flat: &FlatCircuit, sim_type: SimType) -> Result<UnknownIndex, BuildError> {
    let mut index = UnknownIndex { names: Vec::new(), kinds: Vec::new(), index: HashMap::new() };
    for node in &flat.nodes {
        index.push(node, UnknownKind::Node)?;
    }
    for occ in &flat.occurrences {
        for branch in branch_unknowns(occ) {
            index.push(branch, UnknownKind::Branch)?;
        }
    }
    if sim_type == SimType::Phase {
        for node in &flat.nodes {
            index.push(&format!("{AUX_VOLTAGE_PREFIX}{node}"), UnknownKind::AuxVoltage)?;
        }
    }
    Ok(index)
}

/// The symbolic system `A x = b`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicSystem {
    /// Sparse rows of `(column, term)`, ascending by column.
    pub a: Vec<Vec<(usize, Term)>>,
    pub b: Vec<Term>,
    pub unknowns: UnknownIndex,
    pub sim_type: SimType,
}

impl SymbolicSystem {
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Every term of A (row by row) and then of b.
    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.a.iter().flat_map(|row| row.iter().map(|(_, t)| t)).chain(&self.b)
    }

    /// Names read by the terms, other than `$time$` and `$hn$`.
    pub fn signal_names(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for term in self.terms() {
            for v in term.vars() {
                if v != TIME && v != HN && !out.iter().any(|o| o == v) {
                    out.push(v.to_string());
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy)]
enum Sign {
    Plus,
    Minus,
}

struct Builder<'a> {
    unknowns: &'a UnknownIndex,
    sim: SimType,
    a: Vec<BTreeMap<usize, Vec<(Sign, Term)>>>,
    b: Vec<Vec<(Sign, Term)>>,
    k: Term,
}

fn fold(parts: Vec<(Sign, Term)>) -> Term {
    let mut iter = parts.into_iter();
    let Some((sign, first)) = iter.next() else {
        return Term::int(0);
    };
    let start = match sign {
        Sign::Plus => first,
        Sign::Minus => Term::neg(first),
    };
    iter.fold(start, |acc, (sign, t)| match sign {
        Sign::Plus => Term::add(acc, t),
        Sign::Minus => Term::sub(acc, t),
    })
}

/// `2 * x / $hn$`
fn companion(x: Term) -> Term {
    Term::div(Term::mul(Term::int(2), x), Term::hn())
}

fn constant_zero(t: &Term) -> bool {
    t.is_zero_const()
}

impl Builder<'_> {
    fn col(&self, name: &str) -> Option<usize> {
        self.unknowns.get(name)
    }

    /// Column of a node's potential (voltage or phase by mode); `None` for
    /// ground.
    fn node(&self, node: &str) -> Option<usize> {
        self.col(node)
    }

    /// Column holding a node's voltage.
    fn volt(&self, node: &str) -> Option<usize> {
        match self.sim {
            SimType::Voltage => self.col(node),
            SimType::Phase => self.col(&format!("{AUX_VOLTAGE_PREFIX}{node}")),
        }
    }

    /// Previous-step voltage of a node.
    fn volt_prev(&self, node: &str) -> Option<Term> {
        self.volt(node).map(|c| Term::var(self.unknowns.name(c)))
    }

    fn vdiff_prev(&self, a: &str, b: &str) -> Term {
        match (self.volt_prev(a), self.volt_prev(b)) {
            (Some(x), Some(y)) => Term::sub(x, y),
            (Some(x), None) => x,
            (None, Some(y)) => Term::neg(y),
            (None, None) => Term::int(0),
        }
    }

    fn branch(&self, name: &str) -> usize {
        self.col(name).expect("branch unknowns are assigned before stamping")
    }

    fn add(&mut self, row: Option<usize>, col: Option<usize>, sign: Sign, term: Term) {
        if let (Some(r), Some(c)) = (row, col) {
            self.a[r].entry(c).or_default().push((sign, term));
        }
    }

    fn rhs(&mut self, row: Option<usize>, sign: Sign, term: Term) {
        if let Some(r) = row {
            self.b[r].push((sign, term));
        }
    }

    /// `g * (v_a - v_b)` into the current-balance rows of `a` and `b`.
    fn conductance(&mut self, a: &str, b: &str, g: Term) {
        let (ra, rb) = (self.node(a), self.node(b));
        let (va, vb) = (self.volt(a), self.volt(b));
        self.add(ra, va, Sign::Plus, g.clone());
        self.add(ra, vb, Sign::Minus, g.clone());
        self.add(rb, va, Sign::Minus, g.clone());
        self.add(rb, vb, Sign::Plus, g);
    }

    /// Branch current leaving `a` and entering `b`.
    fn incidence(&mut self, a: &str, b: &str, branch: usize) {
        let (ra, rb) = (self.node(a), self.node(b));
        self.add(ra, Some(branch), Sign::Plus, Term::int(1));
        self.add(rb, Some(branch), Sign::Minus, Term::int(1));
    }

    /// Row `row`: `v_a - v_b` with coefficient `scale`.
    fn voltage_across(&mut self, row: usize, a: &str, b: &str, sign: Sign, scale: Term) {
        let (va, vb) = (self.volt(a), self.volt(b));
        let flip = match sign {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        };
        self.add(Some(row), va, sign, scale.clone());
        self.add(Some(row), vb, flip, scale);
    }

    /// Trapezoidal capacitor: `i - (2C/h)(va - vb) = -(2C/h)(va' - vb') - i'`.
    fn capacitor(&mut self, a: &str, b: &str, c: &Term, branch: usize) {
        self.incidence(a, b, branch);
        let g = companion(c.clone());
        self.add(Some(branch), Some(branch), Sign::Plus, Term::int(1));
        self.voltage_across(branch, a, b, Sign::Minus, g.clone());
        let history = Term::mul(g, self.vdiff_prev(a, b));
        self.rhs(Some(branch), Sign::Minus, history);
        self.rhs(Some(branch), Sign::Minus, Term::var(self.unknowns.name(branch)));
    }

    fn stamp(&mut self, occ: &Occurrence, mutual: &HashMap<usize, Vec<(usize, Term)>>) -> Result<(), BuildError> {
        let Some(kind) = occ.kind.device() else {
            return Err(BuildError::Malformed { occurrence: occ.name.clone(), message: "not a primitive device".into() });
        };
        let arity = kind.arity();
        if occ.nodes.len() != arity.nodes || occ.branches.len() != arity.branches || occ.values.len() != arity.values {
            return Err(BuildError::Malformed {
                occurrence: occ.name.clone(),
                message: format!("wrong field counts for a {kind}"),
            });
        }
        let n = &occ.nodes;
        let v = &occ.values;
        let zero = |what: &'static str| BuildError::ZeroValue { occurrence: occ.name.clone(), what };
        match kind {
            DeviceKind::Resistor => {
                if constant_zero(&v[0]) {
                    return Err(zero("resistance"));
                }
                self.conductance(&n[0], &n[1], Term::div(Term::int(1), v[0].clone()));
            }
            DeviceKind::Capacitor => {
                let branch = self.branch(&occ.branches[0]);
                self.capacitor(&n[0], &n[1], &v[0], branch);
            }
            DeviceKind::Inductor => {
                if constant_zero(&v[0]) {
                    return Err(zero("inductance"));
                }
                let branch = self.branch(&occ.branches[0]);
                self.incidence(&n[0], &n[1], branch);
                let couplings = mutual.get(&branch).cloned().unwrap_or_default();
                match self.sim {
                    SimType::Voltage => {
                        // (va - vb) - (2L/h) i - (2M/h) j = -(va' - vb') - (2L/h) i' - (2M/h) j'
                        self.voltage_across(branch, &n[0], &n[1], Sign::Plus, Term::int(1));
                        let g = companion(v[0].clone());
                        self.add(Some(branch), Some(branch), Sign::Minus, g.clone());
                        self.rhs(Some(branch), Sign::Minus, self.vdiff_prev(&n[0], &n[1]));
                        self.rhs(Some(branch), Sign::Minus, Term::mul(g, Term::var(self.unknowns.name(branch))));
                        for (other, m) in couplings {
                            let gm = companion(m);
                            self.add(Some(branch), Some(other), Sign::Minus, gm.clone());
                            self.rhs(Some(branch), Sign::Minus, Term::mul(gm, Term::var(self.unknowns.name(other))));
                        }
                    }
                    SimType::Phase => {
                        // L i + M j - (pa - pb)/k = 0
                        self.add(Some(branch), Some(branch), Sign::Plus, v[0].clone());
                        for (other, m) in couplings {
                            self.add(Some(branch), Some(other), Sign::Plus, m);
                        }
                        let inv_k = Term::div(Term::int(1), self.k.clone());
                        let (pa, pb) = (self.node(&n[0]), self.node(&n[1]));
                        self.add(Some(branch), pa, Sign::Minus, inv_k.clone());
                        self.add(Some(branch), pb, Sign::Plus, inv_k);
                    }
                }
            }
            DeviceKind::VoltageSource => {
                let branch = self.branch(&occ.branches[0]);
                self.incidence(&n[0], &n[1], branch);
                self.voltage_across(branch, &n[0], &n[1], Sign::Plus, Term::int(1));
                self.rhs(Some(branch), Sign::Plus, v[0].clone());
            }
            DeviceKind::CurrentSource => {
                let branch = self.branch(&occ.branches[0]);
                self.incidence(&n[0], &n[1], branch);
                self.add(Some(branch), Some(branch), Sign::Plus, Term::int(1));
                self.rhs(Some(branch), Sign::Plus, v[0].clone());
            }
            DeviceKind::PhaseSource => {
                let current = self.branch(&occ.branches[0]);
                let phase = self.branch(&occ.branches[1]);
                self.incidence(&n[0], &n[1], current);
                self.add(Some(phase), Some(phase), Sign::Plus, Term::int(1));
                self.rhs(Some(phase), Sign::Plus, v[0].clone());
                match self.sim {
                    SimType::Voltage => {
                        // (va - vb) - (2/(hk)) p = -(2/(hk)) p' - (va' - vb')
                        let g = Term::div(companion(Term::int(1)), self.k.clone());
                        self.voltage_across(current, &n[0], &n[1], Sign::Plus, Term::int(1));
                        self.add(Some(current), Some(phase), Sign::Minus, g.clone());
                        self.rhs(Some(current), Sign::Minus, Term::mul(g, Term::var(self.unknowns.name(phase))));
                        self.rhs(Some(current), Sign::Minus, self.vdiff_prev(&n[0], &n[1]));
                    }
                    SimType::Phase => {
                        let (pa, pb) = (self.node(&n[0]), self.node(&n[1]));
                        self.add(Some(current), pa, Sign::Plus, Term::int(1));
                        self.add(Some(current), pb, Sign::Minus, Term::int(1));
                        self.add(Some(current), Some(phase), Sign::Minus, Term::int(1));
                    }
                }
            }
            DeviceKind::JosephsonJunction => {
                if constant_zero(&v[1]) {
                    return Err(zero("shunt resistance"));
                }
                let (a, b) = (&n[0], &n[1]);
                let phi = self.branch(&occ.branches[1]);
                let cap = self.branch(&occ.branches[2]);
                let phi_prev = Term::var(self.unknowns.name(phi));
                // Supercurrent linearized around the predicted phase.
                let predicted = Term::add(
                    phi_prev.clone(),
                    Term::mul(Term::mul(Term::hn(), self.k.clone()), self.vdiff_prev(a, b)),
                );
                let cos = Term::app(Prim::Cos, vec![predicted.clone()]);
                let slope = Term::mul(v[0].clone(), cos.clone());
                let offset = Term::mul(
                    v[0].clone(),
                    Term::sub(Term::app(Prim::Sin, vec![predicted.clone()]), Term::mul(predicted, cos)),
                );
                let (ra, rb) = (self.node(a), self.node(b));
                self.add(ra, Some(phi), Sign::Plus, slope.clone());
                self.add(rb, Some(phi), Sign::Minus, slope);
                self.rhs(ra, Sign::Minus, offset.clone());
                self.rhs(rb, Sign::Plus, offset);
                self.conductance(a, b, Term::div(Term::int(1), v[1].clone()));
                self.capacitor(a, b, &v[2], cap);
                self.add(Some(phi), Some(phi), Sign::Plus, Term::int(1));
                match self.sim {
                    SimType::Voltage => {
                        // phi - (hk/2)(va - vb) = phi' + (hk/2)(va' - vb')
                        let half = Term::div(Term::mul(Term::hn(), self.k.clone()), Term::int(2));
                        self.voltage_across(phi, a, b, Sign::Minus, half.clone());
                        self.rhs(Some(phi), Sign::Plus, phi_prev);
                        self.rhs(Some(phi), Sign::Plus, Term::mul(half, self.vdiff_prev(a, b)));
                    }
                    SimType::Phase => {
                        let (pa, pb) = (self.node(a), self.node(b));
                        self.add(Some(phi), pa, Sign::Minus, Term::int(1));
                        self.add(Some(phi), pb, Sign::Plus, Term::int(1));
                    }
                }
            }
            DeviceKind::TransmissionLine => {
                let z0 = v[0].clone();
                let delay = v[1].clone();
                let i1 = self.branch(&occ.branches[0]);
                let i2 = self.branch(&occ.branches[1]);
                self.incidence(&n[0], &n[1], i1);
                self.incidence(&n[2], &n[3], i2);
                // v1 - Z0 i1 = v2(t - td) + Z0 i2(t - td), and the mirror image.
                for (row, near, far, far_branch) in [(i1, (0, 1), (2, 3), i2), (i2, (2, 3), (0, 1), i1)] {
                    self.voltage_across(row, &n[near.0], &n[near.1], Sign::Plus, Term::int(1));
                    self.add(Some(row), Some(row), Sign::Minus, z0.clone());
                    let far_v = match (self.volt_prev(&n[far.0]), self.volt_prev(&n[far.1])) {
                        (Some(x), Some(y)) => Some(Term::sub(hist(x, &delay), hist(y, &delay))),
                        (Some(x), None) => Some(hist(x, &delay)),
                        (None, Some(y)) => Some(Term::neg(hist(y, &delay))),
                        (None, None) => None,
                    };
                    if let Some(far_v) = far_v {
                        self.rhs(Some(row), Sign::Plus, far_v);
                    }
                    let far_i = hist(Term::var(self.unknowns.name(far_branch)), &delay);
                    self.rhs(Some(row), Sign::Plus, Term::mul(z0.clone(), far_i));
                }
            }
            DeviceKind::MutualInductance => {}
        }
        Ok(())
    }
}

fn hist(signal: Term, delay: &Term) -> Term {
    Term::app(Prim::Hist, vec![signal, delay.clone()])
}

/// Mutual couplings per inductor branch column: `(other column, M)`.
fn couplings(flat: &FlatCircuit, unknowns: &UnknownIndex) -> Result<HashMap<usize, Vec<(usize, Term)>>, BuildError> {
    let mut out: HashMap<usize, Vec<(usize, Term)>> = HashMap::new();
    for occ in &flat.occurrences {
        if occ.kind.device() != Some(DeviceKind::MutualInductance) {
            continue;
        }
        let mut ends = Vec::new();
        for value in occ.values.iter().take(2) {
            let Term::Var(name) = value else {
                return Err(BuildError::NotAnInductor { occurrence: occ.name.clone(), name: value.to_string() });
            };
            let target = flat
                .occurrence(name)
                .filter(|o| o.kind == ElementKind::Device(DeviceKind::Inductor))
                .ok_or_else(|| BuildError::NotAnInductor { occurrence: occ.name.clone(), name: name.clone() })?;
            let column = unknowns.get(&target.branches[0]).expect("inductor branch is an unknown");
            ends.push((column, target.values[0].clone()));
        }
        let (Some(&(c1, ref l1)), Some(&(c2, ref l2))) = (ends.first(), ends.get(1)) else {
            return Err(BuildError::Malformed { occurrence: occ.name.clone(), message: "needs two inductors".into() });
        };
        let coupling = occ.values.get(2).cloned().unwrap_or_else(|| Term::int(0));
        let m = Term::mul(coupling, Term::app(Prim::Sqrt, vec![Term::mul(l1.clone(), l2.clone())]));
        out.entry(c1).or_default().push((c2, m.clone()));
        out.entry(c2).or_default().push((c1, m));
    }
    Ok(out)
}

/// Builds the symbolic system of `flat`.
pub fn build_system(flat: &FlatCircuit, sim_type: SimType) -> Result<SymbolicSystem, BuildError> {
    let unknowns = assign_unknowns(flat, sim_type)?;
    let n = unknowns.len();
    let mutual = couplings(flat, &unknowns)?;
    let mut builder = Builder {
        unknowns: &unknowns,
        sim: sim_type,
        a: vec![BTreeMap::new(); n],
        b: vec![Vec::new(); n],
        k: Term::float(phase_per_volt_second()),
    };
    for occ in &flat.occurrences {
        builder.stamp(occ, &mutual)?;
    }
    if sim_type == SimType::Phase {
        // v - (2/(hk)) p = -(2/(hk)) p' - v'
        for node in &flat.nodes {
            let p = unknowns.get(node).expect("node unknown");
            let v = unknowns.get(&format!("{AUX_VOLTAGE_PREFIX}{node}")).expect("aux unknown");
            let g = Term::div(companion(Term::int(1)), builder.k.clone());
            builder.add(Some(v), Some(v), Sign::Plus, Term::int(1));
            builder.add(Some(v), Some(p), Sign::Minus, g.clone());
            builder.rhs(Some(v), Sign::Minus, Term::mul(g, Term::var(node)));
            builder.rhs(Some(v), Sign::Minus, Term::var(unknowns.name(v)));
        }
    }
    let Builder { a, b, .. } = builder;
    let a = a.into_iter().map(|row| row.into_iter().map(|(c, parts)| (c, fold(parts))).collect()).collect();
    let b = b.into_iter().map(fold).collect();
    Ok(SymbolicSystem { a, b, unknowns, sim_type })
}

/// Prints the system as reparsable forms: the unknowns, then the rows of A
/// as `(column term)` pairs, then b.
pub fn format_equations(system: &SymbolicSystem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "; {} system, {} unknowns", system.sim_type, system.dim());
    let _ = writeln!(out, "(unknowns {})", system.unknowns.names().join(" "));
    out.push_str("(a");
    for (i, row) in system.a.iter().enumerate() {
        let _ = write!(out, "\n ; row {i}\n (");
        let entries: Vec<String> = row.iter().map(|(c, t)| format!("({c} {t})")).collect();
        out.push_str(&entries.join(" "));
        out.push(')');
    }
    out.push_str(")\n(b");
    for term in &system.b {
        let _ = write!(out, "\n {term}");
    }
    out.push_str(")\n");
    out
}

struct ColumnEnv<'a> {
    record: &'a SimulationRecord,
    column: usize,
}

impl crate::term::Env for ColumnEnv<'_> {
    fn value(&self, name: &str) -> Option<f64> {
        self.record.series(name).map(|s| s[self.column])
    }
}

/// Adds a current row for every resistor (`(va - vb)/R`) and junction
/// (`Ic sin(phi) + (va - vb)/R + i_C`), named by the device's current
/// branch. Rows that already exist are left alone.
pub fn derive_post_currents(record: &mut SimulationRecord, flat: &FlatCircuit, sim_type: SimType) -> Result<(), EngineError> {
    let volt_name = |node: &str| match sim_type {
        SimType::Voltage => node.to_string(),
        SimType::Phase => format!("{AUX_VOLTAGE_PREFIX}{node}"),
    };
    let times = record.series(crate::record::TIME_ROW).map(<[f64]>::to_vec).unwrap_or_default();
    let steps = record.series(crate::record::HN_ROW).map(<[f64]>::to_vec).unwrap_or_default();
    let mut new_rows = Vec::new();
    for occ in &flat.occurrences {
        let kind = occ.kind.device();
        if !matches!(kind, Some(DeviceKind::Resistor | DeviceKind::JosephsonJunction)) {
            continue;
        }
        let Some(name) = occ.branches.first() else { continue };
        if record.position(name).is_some() {
            continue;
        }
        let resistance = if kind == Some(DeviceKind::Resistor) { &occ.values[0] } else { &occ.values[1] };
        let mut values = Vec::with_capacity(record.len());
        for k in 0..record.len() {
            let env = ColumnEnv { record, column: k };
            let time = crate::rational::from_f64(times.get(k).copied().unwrap_or(0.0)).unwrap_or_default();
            let hn = crate::rational::from_f64(steps.get(k).copied().unwrap_or(0.0)).unwrap_or_default();
            let clock = Clock::new(time, hn);
            let eval = |t: &Term| {
                vw_eval(t, &env, &clock).map_err(|source| EngineError::Eval { time: times[k].to_string(), source })
            };
            let volt = |node: &str| -> f64 {
                if crate::netlist::is_ground(node) {
                    0.0
                } else {
                    record.series(&volt_name(node)).map_or(0.0, |s| s[k])
                }
            };
            let vdiff = volt(&occ.nodes[0]) - volt(&occ.nodes[1]);
            let mut current = vdiff / eval(resistance)?;
            if kind == Some(DeviceKind::JosephsonJunction) {
                let series = |i: usize| record.series(&occ.branches[i]).map_or(0.0, |s| s[k]);
                current += eval(&occ.values[0])? * series(1).sin() + series(2);
            }
            values.push(current);
        }
        new_rows.push((name.clone(), values));
    }
    for (name, values) in new_rows {
        record.add_row(&name, values).map_err(EngineError::Config)?;
    }
    Ok(())
}
