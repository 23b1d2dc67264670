//! Record files and record selection.

use std::io::{Read, Write};
use std::path::Path;

use crate::elaborate::FlatCircuit;
use crate::error::{EngineError, OutputError};
use crate::mna::{derive_post_currents, phase_per_volt_second, SimType, AUX_VOLTAGE_PREFIX};
use crate::netlist::{is_ground, DeviceKind, Occurrence, PrintRequest};
use crate::record::{SimulationRecord, TIME_ROW};

/// Writes a header of signal names and one line per time point. Values use
/// the shortest text that reads back to the same double.
pub fn write_csv<W: Write>(record: &SimulationRecord, writer: W) -> Result<(), OutputError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(record.names())?;
    for k in 0..record.len() {
        out.write_record(record.rows().iter().map(|row| format!("{:?}", row[k])))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv_file(record: &SimulationRecord, path: &Path) -> Result<(), OutputError> {
    write_csv(record, std::fs::File::create(path)?)
}

pub fn read_csv<R: Read>(reader: R) -> Result<SimulationRecord, OutputError> {
    let mut input = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let names: Vec<String> = input.headers()?.iter().map(str::to_string).collect();
    let mut rows = vec![Vec::new(); names.len()];
    for line in input.records() {
        let line = line?;
        for (row, field) in rows.iter_mut().zip(line.iter()) {
            let value = field.trim().parse::<f64>().map_err(|_| OutputError::Malformed(format!("`{field}` is not a number")))?;
            row.push(value);
        }
    }
    let mut record = SimulationRecord::default();
    for (name, row) in names.iter().zip(rows) {
        record.add_row(name, row).map_err(OutputError::Malformed)?;
    }
    Ok(record)
}

/// Sub-record of `names` in request order. Resistor and junction currents
/// that were not simulated directly are derived first.
pub fn extract_records<S: AsRef<str>>(
    record: &SimulationRecord,
    names: &[S],
    flat: &FlatCircuit,
    sim_type: SimType,
) -> Result<SimulationRecord, EngineError> {
    if names.iter().all(|n| record.position(n.as_ref()).is_some()) {
        return record.extract(names);
    }
    let mut full = record.clone();
    derive_post_currents(&mut full, flat, sim_type)?;
    full.extract(names)
}

fn find_occurrence<'a>(flat: &'a FlatCircuit, name: &str, concat: char) -> Option<&'a Occurrence> {
    let lookup = |n: &str| flat.occurrences.iter().find(|o| o.name.eq_ignore_ascii_case(n));
    lookup(name).or_else(|| lookup(&name.replace('.', &concat.to_string())))
}

/// Row `name`, or the row of `name` with `.` read as the concatenation
/// character. Returns the stored name with the values.
fn find_row<'a>(record: &'a SimulationRecord, name: &str, concat: char) -> Option<(String, &'a [f64])> {
    [name.to_string(), name.replace('.', &concat.to_string())]
        .into_iter()
        .find_map(|n| record.position(&n).map(|i| (record.names()[i].clone(), record.row(i))))
}

struct Printer<'a> {
    record: &'a SimulationRecord,
    flat: &'a FlatCircuit,
    sim_type: SimType,
    concat: char,
}

impl Printer<'_> {
    /// Recorded name and values of a node voltage.
    fn named_voltage(&self, node: &str) -> Option<(String, Vec<f64>)> {
        if is_ground(node) {
            return Some(("GND".to_string(), vec![0.0; self.record.len()]));
        }
        let name = match self.sim_type {
            SimType::Voltage => node.to_string(),
            SimType::Phase => format!("{AUX_VOLTAGE_PREFIX}{node}"),
        };
        find_row(self.record, &name, self.concat).map(|(n, s)| (n, s.to_vec()))
    }

    fn voltage(&self, node: &str) -> Option<Vec<f64>> {
        self.named_voltage(node).map(|(_, s)| s)
    }

    fn voltage_between(&self, a: &str, b: &str) -> Option<Vec<f64>> {
        let (a, b) = (self.voltage(a)?, self.voltage(b)?);
        Some(a.iter().zip(&b).map(|(x, y)| x - y).collect())
    }

    /// Node phase: recorded in phase mode, integrated from the voltage
    /// (trapezoidal rule over the recorded times) in voltage mode.
    fn node_phase(&self, node: &str) -> Option<Vec<f64>> {
        if is_ground(node) {
            return Some(vec![0.0; self.record.len()]);
        }
        match self.sim_type {
            SimType::Phase => find_row(self.record, node, self.concat).map(|(_, s)| s.to_vec()),
            SimType::Voltage => {
                let v = self.voltage(node)?;
                let times = self.record.series(TIME_ROW)?;
                let scale = phase_per_volt_second();
                let mut phase = Vec::with_capacity(v.len());
                let mut acc = 0.0;
                for k in 0..v.len() {
                    if k > 0 {
                        acc += 0.5 * (times[k] - times[k - 1]) * (v[k] + v[k - 1]) * scale;
                    }
                    phase.push(acc);
                }
                Some(phase)
            }
        }
    }

    fn column(&self, request: &PrintRequest) -> Result<(String, Vec<f64>), String> {
        match request {
            PrintRequest::Voltage(name, None) if name.starts_with('@') => {
                let dev = &name[1..];
                let occ = find_occurrence(self.flat, dev, self.concat).ok_or("no such device")?;
                if occ.nodes.len() < 2 {
                    return Err("device has no terminals".into());
                }
                let series = self.voltage_between(&occ.nodes[0], &occ.nodes[1]).ok_or("terminal voltages are not recorded")?;
                Ok((format!("V({})", dev.to_uppercase()), series))
            }
            PrintRequest::Voltage(node, None) => Ok(self.named_voltage(node).ok_or("no such node")?),
            PrintRequest::Voltage(a, Some(b)) => {
                let series = self.voltage_between(a, b).ok_or("no such node")?;
                Ok((format!("V({},{})", a.to_uppercase(), b.to_uppercase()), series))
            }
            PrintRequest::Current(dev) => {
                let occ = find_occurrence(self.flat, dev, self.concat).ok_or("no such device")?;
                let branch = occ.branches.first().ok_or("device carries no current")?;
                let series = self.record.series(branch).ok_or("current is not recorded")?;
                Ok((branch.to_uppercase(), series.to_vec()))
            }
            PrintRequest::Phase(name) => {
                if let Some(occ) = find_occurrence(self.flat, name, self.concat) {
                    if occ.kind.device() == Some(DeviceKind::JosephsonJunction) {
                        let branch = &occ.branches[1];
                        let series = self.record.series(branch).ok_or("phase is not recorded")?;
                        return Ok((branch.to_uppercase(), series.to_vec()));
                    }
                }
                let series = self.node_phase(name).ok_or("no such node or junction")?;
                Ok((format!("P({})", name.to_uppercase()), series))
            }
        }
    }
}

fn request_text(request: &PrintRequest) -> String {
    match request {
        PrintRequest::Voltage(n, None) => format!("v({n})"),
        PrintRequest::Voltage(a, Some(b)) => format!("v({a},{b})"),
        PrintRequest::Current(d) => format!("i({d})"),
        PrintRequest::Phase(n) => format!("p({n})"),
    }
}

/// The columns a SPICE deck asked for: `$TIME$` followed by one column per
/// print request, in request order. Hierarchical names may be written with
/// `.` in place of the concatenation character.
pub fn spice_print_record(
    record: &SimulationRecord,
    requests: &[&PrintRequest],
    flat: &FlatCircuit,
    sim_type: SimType,
    concat: char,
) -> Result<SimulationRecord, OutputError> {
    let mut full = record.clone();
    derive_post_currents(&mut full, flat, sim_type)
        .map_err(|e| OutputError::Print { request: "currents".into(), message: e.to_string() })?;
    let printer = Printer { record: &full, flat, sim_type, concat };
    let mut out = SimulationRecord::default();
    let times = full.series(TIME_ROW).map(<[f64]>::to_vec).unwrap_or_default();
    out.add_row(TIME_ROW, times).map_err(OutputError::Malformed)?;
    for request in requests {
        let (title, series) = printer
            .column(request)
            .map_err(|message| OutputError::Print { request: request_text(request), message })?;
        if out.position(&title).is_none() {
            out.add_row(&title, series).map_err(OutputError::Malformed)?;
        }
    }
    Ok(out)
}
