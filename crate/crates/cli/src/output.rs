//! Run reports and their two serializations: a self-describing structured
//! text report and `#`-metadata CSV. Both round-trip: `parse(emit(r)) == r`,
//! so emitted files double as golden fixtures.

use std::fmt::Write as _;

use crate::error::CliError;

pub const MAGIC: &str = "mechsim-report v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Report,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub timestamp: String,
    /// Config echo, in declaration order.
    pub config: Vec<(String, String)>,
    /// Scalar results, in declaration order.
    pub results: Vec<(String, String)>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            config: Vec::new(),
            results: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn config_entry(&mut self, key: &str, value: impl ToString) {
        self.config.push((key.to_string(), value.to_string()));
    }

    pub fn result(&mut self, key: &str, value: impl ToString) {
        self.results.push((key.to_string(), value.to_string()));
    }

    pub fn table(&mut self, table: Table) {
        self.tables.push(table);
    }

    pub fn emit(&self, format: Format) -> String {
        match format {
            Format::Report => self.emit_report(),
            Format::Csv => self.emit_csv(),
        }
    }

    pub fn parse(text: &str, format: Format) -> Result<Report, CliError> {
        match format {
            Format::Report => parse_report(text),
            Format::Csv => parse_csv(text),
        }
    }

    fn emit_report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "command: {}", self.command);
        let _ = writeln!(out, "timestamp: {}", self.timestamp);
        let _ = writeln!(out, "[config]");
        for (k, v) in &self.config {
            let _ = writeln!(out, "{k} = {v}");
        }
        let _ = writeln!(out, "[results]");
        for (k, v) in &self.results {
            let _ = writeln!(out, "{k} = {v}");
        }
        for t in &self.tables {
            let _ = writeln!(out, "[table {}]", t.name);
            let _ = writeln!(out, "{}", t.columns.join(","));
            for row in &t.rows {
                let _ = writeln!(out, "{}", row.join(","));
            }
        }
        out
    }

    fn emit_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {MAGIC}");
        let _ = writeln!(out, "# command = {}", self.command);
        let _ = writeln!(out, "# timestamp = {}", self.timestamp);
        for (k, v) in &self.config {
            let _ = writeln!(out, "# config.{k} = {v}");
        }
        for (k, v) in &self.results {
            let _ = writeln!(out, "# result.{k} = {v}");
        }
        for t in &self.tables {
            let _ = writeln!(out, "# table = {}", t.name);
            let _ = writeln!(out, "{}", t.columns.join(","));
            for row in &t.rows {
                let _ = writeln!(out, "{}", row.join(","));
            }
        }
        out
    }
}

/// Shortest round-trip decimal formatting for table cells and results.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn split_kv<'a>(line: &'a str, context: &str) -> Result<(&'a str, &'a str), CliError> {
    line.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| CliError::Validation(format!("malformed {context} line: {line:?}")))
}

fn parse_report(text: &str) -> Result<Report, CliError> {
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err(CliError::Validation(format!("missing `{MAGIC}` header")));
    }
    let mut report = Report {
        command: String::new(),
        timestamp: String::new(),
        config: Vec::new(),
        results: Vec::new(),
        tables: Vec::new(),
    };
    #[derive(PartialEq)]
    enum Section {
        Head,
        Config,
        Results,
        Table,
    }
    let mut section = Section::Head;
    for line in lines {
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix("[table ").and_then(|s| s.strip_suffix(']')) {
            report.tables.push(Table {
                name: name.to_string(),
                columns: Vec::new(),
                rows: Vec::new(),
            });
            section = Section::Table;
        } else if line == "[config]" {
            section = Section::Config;
        } else if line == "[results]" {
            section = Section::Results;
        } else {
            match section {
                Section::Head => {
                    let (k, v) = line
                        .split_once(": ")
                        .ok_or_else(|| CliError::Validation(format!("bad header line {line:?}")))?;
                    match k {
                        "command" => report.command = v.to_string(),
                        "timestamp" => report.timestamp = v.to_string(),
                        _ => {
                            return Err(CliError::Validation(format!("unknown header key {k:?}")))
                        }
                    }
                }
                Section::Config => {
                    let (k, v) = split_kv(line, "config")?;
                    report.config.push((k.to_string(), v.to_string()));
                }
                Section::Results => {
                    let (k, v) = split_kv(line, "result")?;
                    report.results.push((k.to_string(), v.to_string()));
                }
                Section::Table => {
                    let t = report.tables.last_mut().expect("inside a table");
                    let cells: Vec<String> = line.split(',').map(str::to_string).collect();
                    if t.columns.is_empty() {
                        t.columns = cells;
                    } else {
                        t.rows.push(cells);
                    }
                }
            }
        }
    }
    Ok(report)
}

fn parse_csv(text: &str) -> Result<Report, CliError> {
    let mut lines = text.lines();
    if lines.next() != Some(&format!("# {MAGIC}")[..]) {
        return Err(CliError::Validation(format!("missing `# {MAGIC}` header")));
    }
    let mut report = Report {
        command: String::new(),
        timestamp: String::new(),
        config: Vec::new(),
        results: Vec::new(),
        tables: Vec::new(),
    };
    for line in lines {
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix("# ") {
            let (k, v) = split_kv(meta, "metadata")?;
            if k == "command" {
                report.command = v.to_string();
            } else if k == "timestamp" {
                report.timestamp = v.to_string();
            } else if let Some(key) = k.strip_prefix("config.") {
                report.config.push((key.to_string(), v.to_string()));
            } else if let Some(key) = k.strip_prefix("result.") {
                report.results.push((key.to_string(), v.to_string()));
            } else if k == "table" {
                report.tables.push(Table {
                    name: v.to_string(),
                    columns: Vec::new(),
                    rows: Vec::new(),
                });
            } else {
                return Err(CliError::Validation(format!("unknown metadata key {k:?}")));
            }
        } else {
            let t = report
                .tables
                .last_mut()
                .ok_or_else(|| CliError::Validation("data row before any `# table`".into()))?;
            let cells: Vec<String> = line.split(',').map(str::to_string).collect();
            if t.columns.is_empty() {
                t.columns = cells;
            } else {
                t.rows.push(cells);
            }
        }
    }
    Ok(report)
}

/// Writes the emitted report to `out`, or stdout when no path is given.
pub fn write_report(report: &Report, format: Format, out: Option<&std::path::Path>) -> Result<(), CliError> {
    let text = report.emit(format);
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("solve-angle");
        r.config_entry("lambda", fmt_f64(0.1));
        r.config_entry("phi", fmt_f64(0.0));
        r.result("n_solutions", 2);
        r.table(Table {
            name: "solutions".into(),
            columns: vec!["theta".into(), "branch".into()],
            rows: vec![
                vec![fmt_f64(4.317597860700482), "minus".into()],
                vec![fmt_f64(5.107182099878898), "plus".into()],
            ],
        });
        r
    }

    #[test]
    fn report_round_trips() {
        let r = sample();
        let parsed = Report::parse(&r.emit(Format::Report), Format::Report).unwrap();
        assert_eq!(parsed, r);
    }

    #[test]
    fn csv_round_trips() {
        let r = sample();
        let parsed = Report::parse(&r.emit(Format::Csv), Format::Csv).unwrap();
        assert_eq!(parsed, r);
    }

    #[test]
    fn float_cells_round_trip_exactly() {
        for v in [0.1, 1.0 / 3.0, 2.5e-17, std::f64::consts::PI] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn rejects_missing_header() {
        assert!(Report::parse("nope", Format::Report).is_err());
        assert!(Report::parse("nope", Format::Csv).is_err());
    }
}
