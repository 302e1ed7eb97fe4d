//! CSV tables per suite and the combined plain-text report.

use std::fmt;
use std::path::Path;

use crate::LabError;

/// A table destined for one CSV file.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        let r: Vec<String> = row.into_iter().map(|s| s.to_string()).collect();
        debug_assert_eq!(r.len(), self.header.len());
        self.rows.push(r);
    }

    pub fn to_csv(&self) -> Result<String, LabError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| LabError::InvalidArgument(e.to_string());
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| LabError::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write(&self, path: &Path) -> Result<(), LabError> {
        std::fs::write(path, self.to_csv()?).map_err(|e| LabError::InvalidArgument(format!("{}: {e}", path.display())))
    }
}

/// Outcome of one suite: verdict, summary lines and its table.
#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub name: String,
    pub pass: bool,
    pub lines: Vec<String>,
    pub table: Table,
}

impl SuiteOutcome {
    pub fn new(name: &str, pass: bool, table: Table) -> Self {
        SuiteOutcome { name: name.into(), pass, lines: Vec::new(), table }
    }

    pub fn note(mut self, line: impl Into<String>) -> Self {
        self.lines.push(line.into());
        self
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub header: Vec<String>,
    pub suites: Vec<SuiteOutcome>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.pass)
    }

    /// `report.txt` plus one `<suite>.csv` per suite.
    pub fn write_dir(&self, dir: &Path) -> Result<(), LabError> {
        let io = |e: std::io::Error| LabError::InvalidArgument(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        for s in &self.suites {
            s.table.write(&dir.join(format!("{}.csv", s.name)))?;
        }
        std::fs::write(dir.join("report.txt"), self.to_string()).map_err(io)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for h in &self.header {
            writeln!(f, "{h}")?;
        }
        for s in &self.suites {
            writeln!(f, "[{}] {}", if s.pass { "PASS" } else { "FAIL" }, s.name)?;
            for l in &s.lines {
                writeln!(f, "    {l}")?;
            }
        }
        let fails = self.suites.iter().filter(|s| !s.pass).count();
        writeln!(f, "{} suites, {} failed", self.suites.len(), fails)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_commas() {
        let mut t = Table::new(&["point", "value"]);
        t.push(["1/2,1/3", "4"]);
        assert_eq!(t.to_csv().unwrap(), "point,value\n\"1/2,1/3\",4\n");
    }

    #[test]
    fn report_verdict() {
        let mut r = Report::default();
        r.suites.push(SuiteOutcome::new("a", true, Table::new(&["x"])));
        assert!(r.passed());
        r.suites.push(SuiteOutcome::new("b", false, Table::new(&["x"])).note("bad"));
        assert!(!r.passed());
        let s = r.to_string();
        assert!(s.contains("[FAIL] b") && s.contains("    bad"));
    }
}
