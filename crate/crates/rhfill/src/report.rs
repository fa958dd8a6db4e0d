//! Scenario reports, per-property verdicts and CSV tables.

use std::collections::BTreeMap;

use rhfill_core::egf::Outcome;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    pub fn of(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Fail => "fail",
        }
    }
}

impl From<Outcome> for Verdict {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Pass => Verdict::Pass,
            Outcome::Inconclusive => Verdict::Inconclusive,
            Outcome::Fail => Verdict::Fail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyVerdict {
    pub verdict: Verdict,
    /// What the task asserts; `pass` unless the scenario says otherwise.
    pub expected: Verdict,
    pub asserted: bool,
}

impl PropertyVerdict {
    pub fn ok(&self) -> bool {
        !self.asserted || self.verdict == self.expected
    }
}

/// A named table with a header row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(cell))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv of utf-8 cells"))
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: String,
    pub name: String,
    pub status: Verdict,
    pub verdicts: BTreeMap<String, PropertyVerdict>,
    pub data: Value,
    pub tables: Vec<Table>,
}

impl TaskReport {
    pub fn failures(&self) -> Vec<String> {
        self.verdicts
            .iter()
            .filter(|(_, v)| !v.ok())
            .map(|(k, v)| format!("{}: {k} is {}, expected {}", self.name, v.verdict.name(), v.expected.name()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub status: Verdict,
    pub tasks: Vec<TaskReport>,
}

impl Report {
    pub fn failures(&self) -> Vec<String> {
        self.tasks.iter().flat_map(TaskReport::failures).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn tables(&self) -> impl Iterator<Item = (&TaskReport, &Table)> {
        self.tasks.iter().flat_map(|t| t.tables.iter().map(move |x| (t, x)))
    }
}

/// CSV of the named table, or of the only table when `name` is `None`.
pub fn emit_plot_data(report: &Report, name: Option<&str>) -> CliResult<String> {
    let tables: Vec<&Table> = report.tables().map(|(_, t)| t).collect();
    if tables.is_empty() {
        return Err(CliError::NoTabularData);
    }
    let t = match name {
        Some(n) => tables.iter().find(|t| t.name == n).ok_or_else(|| CliError::Usage(format!("no table `{n}`")))?,
        None if tables.len() == 1 => &tables[0],
        None => {
            let names: Vec<&str> = tables.iter().map(|t| t.name.as_str()).collect();
            return Err(CliError::Usage(format!("several tables, pick one of {}", names.join(", "))));
        }
    };
    t.to_csv()
}
