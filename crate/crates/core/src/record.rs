//! Named time series produced by a simulation.

use std::collections::HashMap;

use crate::error::EngineError;

/// Name of the time row.
pub const TIME_ROW: &str = "$TIME$";
/// Name of the step row.
pub const HN_ROW: &str = "$HN$";

/// Rows of equal length, one per signal. Names are stored upper-cased and
/// looked up without regard to case.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimulationRecord {
    names: Vec<String>,
    index: HashMap<String, usize>,
    rows: Vec<Vec<f64>>,
}

fn key(name: &str) -> String {
    name.to_uppercase()
}

impl SimulationRecord {
    /// An empty record with the given rows. Fails on a repeated name.
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self, String> {
        let mut record = Self::default();
        for name in names {
            record.add_row(name.as_ref(), Vec::new())?;
        }
        Ok(record)
    }

    /// Appends a row. Its length must match the existing rows.
    pub fn add_row(&mut self, name: &str, values: Vec<f64>) -> Result<(), String> {
        let name = key(name);
        if self.index.contains_key(&name) {
            return Err(format!("signal `{name}` is recorded twice"));
        }
        if !self.rows.is_empty() && values.len() != self.len() {
            return Err(format!("row `{name}` has {} values, other rows have {}", values.len(), self.len()));
        }
        self.index.insert(name.clone(), self.names.len());
        self.names.push(name);
        self.rows.push(values);
        Ok(())
    }

    /// Appends one value to every row, in row order.
    pub fn push_column(&mut self, column: &[f64]) {
        assert_eq!(column.len(), self.rows.len(), "column length must match the row count");
        for (row, &v) in self.rows.iter_mut().zip(column) {
            row.push(v);
        }
    }

    /// Number of time points.
    pub fn len(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(&key(name)).copied()
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.position(name).map(|i| self.rows[i].as_slice())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[k]).collect()
    }

    pub fn last_column(&self) -> Option<Vec<f64>> {
        self.len().checked_sub(1).map(|k| self.column(k))
    }

    /// Value of row `name` at time `at`, interpolated linearly between
    /// recorded points and held constant outside them.
    pub fn value_at(&self, name: &str, at: f64) -> Option<f64> {
        let times = self.series(TIME_ROW)?;
        let values = self.series(name)?;
        interpolate(times, values, at)
    }

    /// Sub-record holding `names`, in request order.
    pub fn extract<S: AsRef<str>>(&self, names: &[S]) -> Result<SimulationRecord, EngineError> {
        let mut out = SimulationRecord::default();
        for name in names {
            let name = name.as_ref();
            let values = self.series(name).ok_or_else(|| EngineError::UnknownSignal {
                name: name.to_string(),
                available: self.names.clone(),
            })?;
            out.add_row(name, values.to_vec()).map_err(EngineError::Config)?;
        }
        Ok(out)
    }
}

pub(crate) fn interpolate(times: &[f64], values: &[f64], at: f64) -> Option<f64> {
    let last = times.len().checked_sub(1)?;
    if at <= times[0] {
        return Some(values[0]);
    }
    if at >= times[last] {
        return Some(values[last]);
    }
    let hi = times.partition_point(|&t| t <= at);
    let lo = hi - 1;
    if times[lo] == at {
        return Some(values[lo]);
    }
    let w = (at - times[lo]) / (times[hi] - times[lo]);
    Some(values[lo] + w * (values[hi] - values[lo]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_upper_cased_and_case_insensitive() {
        let mut rec = SimulationRecord::new(&["$time$", "vc1"]).unwrap();
        rec.push_column(&[0.0, 1.0]);
        assert_eq!(rec.names(), ["$TIME$", "VC1"]);
        assert_eq!(rec.series("Vc1"), Some(&[1.0][..]));
        assert!(SimulationRecord::new(&["a", "A"]).is_err());
    }

    #[test]
    fn interpolation_holds_at_the_ends() {
        let times = [0.0, 1.0, 2.0];
        let values = [0.0, 10.0, 30.0];
        assert_eq!(interpolate(&times, &values, -1.0), Some(0.0));
        assert_eq!(interpolate(&times, &values, 0.5), Some(5.0));
        assert_eq!(interpolate(&times, &values, 1.0), Some(10.0));
        assert_eq!(interpolate(&times, &values, 1.5), Some(20.0));
        assert_eq!(interpolate(&times, &values, 9.0), Some(30.0));
        assert_eq!(interpolate(&[], &[], 1.0), None);
    }

    #[test]
    fn extract_in_request_order() {
        let mut rec = SimulationRecord::new(&["a", "b"]).unwrap();
        rec.push_column(&[1.0, 2.0]);
        let sub = rec.extract(&["B", "a"]).unwrap();
        assert_eq!(sub.names(), ["B", "A"]);
        assert!(rec.extract::<&str>(&[]).unwrap().names().is_empty());
        let err = rec.extract(&["zz"]).unwrap_err();
        assert!(err.to_string().contains("available: A, B"), "{err}");
    }
}
