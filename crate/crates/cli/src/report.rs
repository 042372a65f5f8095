//! Byte-stable report emission: CSV tables and a JSON summary, all numbers
//! at 17 significant digits so reruns compare with `cmp`.

use std::fmt::Write as _;
use std::path::Path;

/// 17 significant digits, locale-free.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    format!("{x:.16e}")
}

/// One estimator row of a suite report.
#[derive(Debug, Clone)]
pub struct ReportRow {
    /// query columns, e.g. [("lambda1", 2.0), ("theta", 0.5)]
    pub query: Vec<(&'static str, f64)>,
    pub estimate: f64,
    pub stderr: f64,
    pub oracle: Option<f64>,
    pub z: Option<f64>,
    pub pass: bool,
    pub note: String,
}

impl ReportRow {
    pub fn new(query: Vec<(&'static str, f64)>, estimate: f64, stderr: f64, oracle: Option<f64>) -> Self {
        let z = oracle.map(|o| (estimate - o) / stderr);
        let pass = z.map(|z| z.abs() < 3.0).unwrap_or(true);
        ReportRow { query, estimate, stderr, oracle, z, pass, note: String::new() }
    }

    pub fn with_pass(mut self, pass: bool, note: impl Into<String>) -> Self {
        self.pass = pass;
        self.note = note.into();
        self
    }
}

/// A suite report: one CSV per table plus a JSON summary.
#[derive(Debug, Default)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub tables: Vec<(String, Vec<ReportRow>)>,
}

impl Report {
    pub fn new(suite: &str, seed: u64) -> Self {
        Report { suite: suite.into(), seed, tables: Vec::new() }
    }

    pub fn table(&mut self, name: &str, rows: Vec<ReportRow>) {
        self.tables.push((name.into(), rows));
    }

    pub fn pass(&self) -> bool {
        self.tables.iter().all(|(_, rows)| rows.iter().all(|r| r.pass))
    }

    fn csv_for(rows: &[ReportRow]) -> String {
        let mut out = String::new();
        let query_cols: Vec<&str> = rows
            .first()
            .map(|r| r.query.iter().map(|(k, _)| *k).collect())
            .unwrap_or_default();
        for col in &query_cols {
            let _ = write!(out, "{col},");
        }
        out.push_str("estimate,stderr,oracle,z,pass,note\n");
        for r in rows {
            for (_, v) in &r.query {
                let _ = write!(out, "{},", fmt17(*v));
            }
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt17(r.estimate),
                fmt17(r.stderr),
                r.oracle.map(fmt17).unwrap_or_default(),
                r.z.map(fmt17).unwrap_or_default(),
                r.pass,
                r.note
            );
        }
        out
    }

    /// Hand-rolled JSON so field order and float formatting stay fixed.
    fn summary_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"suite\": \"{}\",", self.suite);
        let _ = writeln!(out, "  \"seed\": {},", self.seed);
        let _ = writeln!(out, "  \"pass\": {},", self.pass());
        out.push_str("  \"tables\": [\n");
        for (ti, (name, rows)) in self.tables.iter().enumerate() {
            let _ = writeln!(out, "    {{\"name\": \"{name}\", \"rows\": [");
            for (ri, r) in rows.iter().enumerate() {
                out.push_str("      {\"query\": {");
                for (qi, (k, v)) in r.query.iter().enumerate() {
                    let _ = write!(out, "\"{k}\": {}", fmt17(*v));
                    if qi + 1 < r.query.len() {
                        out.push_str(", ");
                    }
                }
                let _ = write!(out, "}}, \"estimate\": {}", fmt17(r.estimate));
                let _ = write!(out, ", \"stderr\": {}", fmt17(r.stderr));
                if let Some(o) = r.oracle {
                    let _ = write!(out, ", \"oracle\": {}", fmt17(o));
                }
                if let Some(z) = r.z {
                    let _ = write!(out, ", \"z\": {}", fmt17(z));
                }
                let _ = write!(out, ", \"pass\": {}", r.pass);
                if !r.note.is_empty() {
                    let _ = write!(out, ", \"note\": \"{}\"", r.note);
                }
                out.push('}');
                out.push_str(if ri + 1 < rows.len() { ",\n" } else { "\n" });
            }
            out.push_str("    ]}");
            out.push_str(if ti + 1 < self.tables.len() { ",\n" } else { "\n" });
        }
        out.push_str("  ]\n}\n");
        out
    }

    /// Write `<suite>_<table>.csv` files and `<suite>_summary.json`.
    pub fn write_to(&self, dir: &Path, extra_files: &[(String, String)]) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, rows) in &self.tables {
            let path = dir.join(format!("{}_{}.csv", self.suite, name));
            std::fs::write(path, Self::csv_for(rows))?;
        }
        for (name, content) in extra_files {
            std::fs::write(dir.join(name), content)?;
        }
        std::fs::write(
            dir.join(format!("{}_summary.json", self.suite)),
            self.summary_json(),
        )?;
        Ok(())
    }
}
