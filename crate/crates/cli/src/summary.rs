//! `summary.txt`: one `name = pass|fail : value` line per check, then one
//! `name = value` line per measured constant, in the order recorded.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum SummaryLine {
    Check { name: String, passed: bool, value: String },
    Measure { name: String, value: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub lines: Vec<SummaryLine>,
}

impl Summary {
    pub fn check(&mut self, name: &str, passed: bool, value: impl Into<String>) {
        self.lines.push(SummaryLine::Check {
            name: name.to_string(),
            passed,
            value: value.into(),
        });
    }

    pub fn measure(&mut self, name: &str, value: impl Into<String>) {
        self.lines.push(SummaryLine::Measure {
            name: name.to_string(),
            value: value.into(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.lines
            .iter()
            .all(|l| !matches!(l, SummaryLine::Check { passed: false, .. }))
    }

    /// Outcome of the named check, if recorded.
    pub fn passed(&self, name: &str) -> Option<bool> {
        self.lines.iter().find_map(|l| match l {
            SummaryLine::Check { name: n, passed, .. } if n == name => Some(*passed),
            _ => None,
        })
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.lines {
            if let SummaryLine::Check { name, passed, value } = line {
                writeln!(f, "{name} = {} : {value}", if *passed { "pass" } else { "fail" })?;
            }
        }
        for line in &self.lines {
            if let SummaryLine::Measure { name, value } = line {
                writeln!(f, "{name} = {value}")?;
            }
        }
        Ok(())
    }
}
