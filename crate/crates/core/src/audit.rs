//! Append-only audit trail, one record per protocol step or revoked edge.

use std::fmt;

use crate::constraint::Date;
use crate::policy::{RuleId, Subject};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    DlgClaim,
    DlgApproval,
    GrWrite,
    DpRead,
    DlgLegitimacy,
    AddRule,
    ModifyRule,
    DpWrite,
    GtRead,
    Deny,
    GrRead,
    Revoke,
    Reparent,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Step::DlgClaim => "dlg-claim",
            Step::DlgApproval => "dlg-approval",
            Step::GrWrite => "gr-write",
            Step::DpRead => "DP-read",
            Step::DlgLegitimacy => "dlg-legitimacy",
            Step::AddRule => "add-rule",
            Step::ModifyRule => "modify-rule",
            Step::DpWrite => "DP-write",
            Step::GtRead => "gt-read",
            Step::Deny => "deny",
            Step::GrRead => "gr-read",
            Step::Revoke => "revoke",
            Step::Reparent => "reparent",
        })
    }
}

/// A record before it is sequenced into a log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditEntry {
    pub step: Step,
    pub subjects: Vec<Subject>,
    pub rule: Option<RuleId>,
    pub verdict: String,
    pub scheme: Option<String>,
}

impl AuditEntry {
    pub fn new(step: Step, subjects: &[&Subject], verdict: impl Into<String>) -> Self {
        AuditEntry {
            step,
            subjects: subjects.iter().map(|s| (*s).clone()).collect(),
            rule: None,
            verdict: verdict.into(),
            scheme: None,
        }
    }

    pub fn with_rule(mut self, rule: Option<&RuleId>) -> Self {
        self.rule = rule.cloned();
        self
    }

    pub fn with_scheme(mut self, scheme: Option<String>) -> Self {
        self.scheme = scheme;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditRecord {
    pub seq: u64,
    pub clock: Date,
    pub entry: AuditEntry,
}

pub const AUDIT_HEADER: &str = "seq\tclock\tstep\tsubjects\trule\tverdict\tscheme";

/// Tab-separated: seq, clock, step, subjects, rule, verdict, scheme.
impl fmt::Display for AuditRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let subjects: Vec<&str> = self.entry.subjects.iter().map(Subject::as_str).collect();
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.seq,
            self.clock,
            self.entry.step,
            subjects.join(","),
            self.entry.rule.as_ref().map_or("-", RuleId::as_str),
            self.entry.verdict,
            self.entry.scheme.as_deref().unwrap_or("-"),
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditLog {
    records: Vec<AuditRecord>,
}

impl AuditLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, clock: Date, entry: AuditEntry) {
        let seq = self.records.len() as u64 + 1;
        self.records.push(AuditRecord { seq, clock, entry });
    }

    pub fn extend(&mut self, clock: Date, entries: impl IntoIterator<Item = AuditEntry>) {
        for entry in entries {
            self.append(clock, entry);
        }
    }

    pub fn records(&self) -> &[AuditRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Header line followed by one line per record.
    pub fn render(&self) -> String {
        let mut out = String::from(AUDIT_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}
