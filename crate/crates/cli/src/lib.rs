//! Policy files, request scripts and audit output for the `dlg` tool.

pub mod document;
pub mod script;

use std::path::Path;

use dlg_core::audit::AuditLog;
use dlg_core::consistency::{check_consistency, ConflictPair, ConflictReport};
use dlg_core::policy::SecurityPolicy;

/// Writes the audit log (header plus one line per record), replacing any
/// existing file.
pub fn emit_audit(log: &AuditLog, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, log.render())
}

/// Conflicts between every pair of rules, each pair reported once with the
/// earlier rule first.
pub fn all_conflicts(sp: &SecurityPolicy) -> ConflictReport {
    let rules = sp.rules();
    let mut pairs: Vec<ConflictPair> = Vec::new();
    for (i, later) in rules.iter().enumerate() {
        let earlier: Vec<_> = rules[..i].iter().map(|r| &r.id).collect();
        pairs.extend(
            check_consistency(sp, later)
                .pairs
                .into_iter()
                .filter(|p| earlier.contains(&&p.existing)),
        );
    }
    ConflictReport { pairs }
}
