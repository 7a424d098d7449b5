use std::fmt::Write as _;
use std::path::Path;

use super::config::Module;
use crate::error::Result;
use crate::solution::fmt12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
}

/// One named check with its measured value and threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Verdict {
    /// Passes iff `measured <= threshold` (NaN fails).
    pub fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            relation: Relation::AtMost,
            pass: measured <= threshold,
        }
    }

    /// Passes iff `measured >= threshold` (NaN fails).
    pub fn at_least(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            relation: Relation::AtLeast,
            pass: measured >= threshold,
        }
    }

    pub fn line(&self) -> String {
        let op = match self.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        };
        format!(
            "{} {} measured={} threshold{op}{}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            fmt12(self.measured),
            fmt12(self.threshold)
        )
    }
}

/// A named point estimate; `se = 0` for deterministic quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem; written as `<name>.csv`.
    pub name: String,
    pub csv: String,
}

/// Everything a scenario run produces.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub scenario: String,
    pub module: Module,
    pub anchor: String,
    pub seed: u64,
    pub config_echo: String,
    pub version: &'static str,
    pub runtime_secs: f64,
    pub verdicts: Vec<Verdict>,
    pub estimates: Vec<Estimate>,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
}

impl ReportBundle {
    pub fn new(scenario: &str, module: Module, anchor: &str, seed: u64, config_echo: &str) -> Self {
        Self {
            scenario: scenario.to_string(),
            module,
            anchor: anchor.to_string(),
            seed,
            config_echo: config_echo.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            runtime_secs: 0.0,
            verdicts: Vec::new(),
            estimates: Vec::new(),
            tables: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn estimate(&mut self, name: impl Into<String>, value: f64, se: f64) {
        self.estimates.push(Estimate {
            name: name.into(),
            value,
            se,
        });
    }

    pub fn table(&mut self, name: impl Into<String>, csv: String) {
        self.tables.push(Table { name: name.into(), csv });
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// True iff there is at least one verdict and all pass.
    pub fn passed(&self) -> bool {
        !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.pass)
    }

    /// 0 when every verdict passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn find(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn report_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario: {}", self.scenario);
        let _ = writeln!(s, "module: {}", self.module.as_str());
        let _ = writeln!(s, "anchor: {}", self.anchor);
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "version: {}", self.version);
        let _ = writeln!(s, "runtime_secs: {:.3}", self.runtime_secs);
        let _ = writeln!(s, "status: {}", if self.passed() { "PASS" } else { "FAIL" });
        let _ = writeln!(s, "\n[verdicts]");
        for v in &self.verdicts {
            let _ = writeln!(s, "{}", v.line());
        }
        if !self.estimates.is_empty() {
            let _ = writeln!(s, "\n[estimates]");
            for e in &self.estimates {
                let _ = writeln!(s, "{} = {} (se {})", e.name, fmt12(e.value), fmt12(e.se));
            }
        }
        if !self.notes.is_empty() {
            let _ = writeln!(s, "\n[notes]");
            for n in &self.notes {
                let _ = writeln!(s, "{n}");
            }
        }
        let _ = writeln!(s, "\n[config]\n{}", self.config_echo.trim_end());
        s
    }

    /// Writes `report.txt` and one CSV per table into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.txt"), self.report_text())?;
        for t in &self.tables {
            std::fs::write(dir.join(format!("{}.csv", t.name)), &t.csv)?;
        }
        Ok(())
    }
}

/// CSV text from a header and rows of numbers, 12 significant digits.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|&v| fmt12(v)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_twelve_digits_and_lf() {
        let s = csv_table(&["a", "b"], [vec![1.0, -0.25]]);
        assert_eq!(s, "a,b\n1.00000000000e0,-2.50000000000e-1\n");
    }

    #[test]
    fn bundle_status_follows_verdicts() {
        let mut b = ReportBundle::new("s", Module::Wiener, "anchor", 3, "[experiment]\n");
        assert!(!b.passed(), "no verdicts is not a pass");
        b.verdict(Verdict::at_most("ok", 1.0, 1.0));
        assert_eq!(b.exit_code(), 0);
        b.verdict(Verdict::at_least("low", 0.1, 0.2));
        assert_eq!(b.exit_code(), 1);
        let text = b.report_text();
        assert!(text.contains("status: FAIL") && text.contains("FAIL low measured="));
        assert!(text.contains("[config]\n[experiment]"));
    }

    #[test]
    fn write_creates_report_and_tables() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("bundle");
        let mut b = ReportBundle::new("s", Module::Chain, "anchor", 1, "");
        b.table("t", csv_table(&["x"], [vec![2.0]]));
        b.write(&dir).unwrap();
        assert!(dir.join("report.txt").is_file());
        assert_eq!(
            std::fs::read_to_string(dir.join("t.csv")).unwrap(),
            "x\n2.00000000000e0\n"
        );
    }
}
