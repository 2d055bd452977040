use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::ArrError;
use crate::kexpr::SymbolTable;
use crate::picdet::parse_graded_lenient;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub rule: String,
    pub anchor: String,
    pub before: String,
    pub after: String,
    pub conditions: Vec<Condition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Step {
    pub fn holds(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Verified,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    pub n: u32,
    pub p: u32,
}

/// A replayed chain of rule applications from `goal.lhs` to `goal.rhs`.
/// `failed_step` counts from 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofTrace {
    pub goal: Goal,
    pub params: Params,
    pub steps: Vec<Step>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_step: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Text,
    Json,
}

impl ProofTrace {
    pub fn is_verified(&self) -> bool {
        self.status == Status::Verified
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> Result<ProofTrace, ArrError> {
        serde_json::from_str(text).map_err(|e| ArrError::BadTrace(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "goal: {}", self.goal.lhs);
        let _ = writeln!(out, "   ~= {}", self.goal.rhs);
        let _ = writeln!(out, "params: n={} p={}", self.params.n, self.params.p);
        for (i, s) in self.steps.iter().enumerate() {
            let label = s.label.clone().unwrap_or_else(|| format!("({})", i + 1));
            let _ = writeln!(out, "{} {}  [{}]", label, s.rule, s.anchor);
            let _ = writeln!(out, "    before: {}", s.before);
            let _ = writeln!(out, "    after:  {}", s.after);
            for c in &s.conditions {
                let _ = writeln!(out, "    [{}] {}", if c.holds { "ok" } else { "FAIL" }, c.name);
            }
        }
        match self.status {
            Status::Verified => {
                let _ = writeln!(out, "status: verified");
            }
            Status::Failed => {
                let _ = writeln!(out, "status: failed at step {}", self.failed_step.unwrap_or(0));
                if let Some(r) = &self.residual {
                    let _ = writeln!(out, "residual: {}", r);
                }
            }
        }
        out
    }

    /// Structural checks on a trace read back from text: the forms chain,
    /// every form parses, and the status agrees with the recorded checks.
    pub fn revalidate(&self) -> Result<(), ArrError> {
        let bad = |m: String| Err(ArrError::BadTrace(m));
        let table = self.form_table();
        let mut prev = &self.goal.lhs;
        for (i, s) in self.steps.iter().enumerate() {
            if &s.before != prev {
                return bad(format!("step {} does not start where step {} ended", i + 1, i));
            }
            for form in [&s.before, &s.after] {
                if let Err(e) = parse_graded_lenient(form, &table) {
                    return bad(format!("step {}: unreadable form `{}`: {}", i + 1, form, e));
                }
            }
            prev = &s.after;
        }
        let first_bad = self.steps.iter().position(|s| !s.holds()).map(|i| i + 1);
        match self.status {
            Status::Verified => {
                if self.failed_step.is_some() || first_bad.is_some() {
                    return bad("verified trace records a failing check".into());
                }
                if prev != &self.goal.rhs {
                    return bad("chain does not end at the goal".into());
                }
            }
            Status::Failed => match self.failed_step {
                Some(k) if k >= 1 && k <= self.steps.len() => {}
                _ => return bad("failed trace without a valid step index".into()),
            },
        }
        Ok(())
    }

    /// A table declaring every morphism mentioned by the forms with the
    /// trace's relative dimension.
    fn form_table(&self) -> SymbolTable {
        let mut table = SymbolTable::new();
        let forms = std::iter::once(&self.goal.lhs)
            .chain(std::iter::once(&self.goal.rhs))
            .chain(self.steps.iter().flat_map(|s| [&s.before, &s.after]));
        for form in forms {
            for piece in form.split("DetRf[").skip(1) {
                if let Some(end) = piece.find(']') {
                    let _ = table.declare_morphism(&piece[..end], self.params.n);
                }
            }
        }
        table
    }
}

pub fn emit_trace(t: &ProofTrace, format: TraceFormat) -> String {
    match format {
        TraceFormat::Text => t.to_text(),
        TraceFormat::Json => t.to_json(),
    }
}

/// Reads a JSON trace and revalidates it.
pub fn parse_trace(text: &str) -> Result<ProofTrace, ArrError> {
    let t = ProofTrace::from_json(text)?;
    t.revalidate()?;
    Ok(t)
}
