//! Hand-built delegation fixtures with hand-derived revocation results.

use dlg_core::constraint::{Constraint, ContextUniverse};
use dlg_core::engine::Engine;
use dlg_core::policy::{
    DelegationRule, GrantorHierarchy, Modality, Permission, PermissionKey, PolicyRule, SecurityPolicy, Subject,
};

use crate::{date, subject};

pub fn present_course() -> Permission {
    Permission::new("present", "course")
}

pub fn present_course_key() -> PermissionKey {
    present_course().key()
}

fn grant(gr: &str, gt: &str, multi_level: bool) -> DelegationRule {
    let rule = DelegationRule::grant(subject(gr), subject(gt), present_course());
    if multi_level {
        rule.with_dc(Constraint::MultiLevelDelegation)
    } else {
        rule
    }
}

/// Two grantors, P dominating Q, all on `present course`.
///
/// | edge | grantor | grantee | kind     | multi-level |
/// |------|---------|---------|----------|-------------|
/// | e1   | P       | A       | grant    | yes         |
/// | e2   | P       | B       | grant    | no          |
/// | e3   | Q       | C       | transfer | yes         |
/// | e4   | A       | D       | grant    | yes         |
/// | e5   | D       | E       | grant    | no          |
/// | e6   | Q       | A       | grant    | no          |
/// | e7   | C       | F       | grant    | no          |
///
/// Q owns `rq1` (unconstrained, moved to C by e3) and `rq2` (`IN lab`,
/// backing e6). P owns `rp1`.
pub fn scheme_matrix() -> Engine {
    let universe = ContextUniverse::new(date("06/01/25"), date("10/01/25"), ["lab"], Vec::<String>::new())
        .expect("fixture universe");
    let mut sp = SecurityPolicy::new(universe);
    let base = |id: &str, owner: &str| PolicyRule::base(id, Modality::Positive, subject(owner), "present", "course");
    sp.insert_rule(base("rp1", "P")).expect("rp1");
    sp.insert_rule(base("rq1", "Q")).expect("rq1");
    sp.insert_rule(base("rq2", "Q").with_constraint(Constraint::In("lab".into())))
        .expect("rq2");
    let mut hierarchy = GrantorHierarchy::new();
    hierarchy.add_dominance(subject("P"), subject("Q")).expect("dominance");
    let mut engine = Engine::new(sp, hierarchy);
    let requests = [
        grant("P", "A", true),
        grant("P", "B", false),
        DelegationRule::transfer(subject("Q"), subject("C"), present_course())
            .with_dc(Constraint::MultiLevelDelegation),
        grant("A", "D", true),
        grant("D", "E", false),
        grant("Q", "A", false),
        grant("C", "F", false),
    ];
    for request in requests {
        let n = engine.delegate(request).expect("fixture request");
        assert!(n.is_accepted(), "fixture request denied: {n}");
    }
    engine
}

/// Revoker for every scheme of the matrix.
pub const MATRIX_REVOKER: &str = "P";

/// Single-scheme target: A for delete schemes, C for modify schemes.
pub fn matrix_target(scheme_name: &str) -> Subject {
    subject(if scheme_name.ends_with("delete") { "A" } else { "C" })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expected {
    /// Live edges afterwards as `(edge number, grantor, grantee)`.
    Survivors(&'static [(u64, &'static str, &'static str)]),
    /// Some selected edge has the wrong kind for the scheme.
    Mismatch,
    /// The revoker selects nothing.
    NoVictim,
}

/// Derived by hand from the fixture table above; not computed.
pub const MATRIX_TABLE: [(&str, Expected); 16] = [
    ("weak local single modify", Expected::NoVictim),
    ("weak local plural modify", Expected::Mismatch),
    ("weak global single modify", Expected::NoVictim),
    ("weak global plural modify", Expected::Mismatch),
    (
        "strong local single modify",
        Expected::Survivors(&[
            (1, "P", "A"),
            (2, "P", "B"),
            (4, "A", "D"),
            (5, "D", "E"),
            (6, "Q", "A"),
            (7, "P", "F"),
        ]),
    ),
    ("strong local plural modify", Expected::Mismatch),
    (
        "strong global single modify",
        Expected::Survivors(&[
            (1, "P", "A"),
            (2, "P", "B"),
            (4, "A", "D"),
            (5, "D", "E"),
            (6, "Q", "A"),
        ]),
    ),
    ("strong global plural modify", Expected::Mismatch),
    (
        "weak local single delete",
        Expected::Survivors(&[
            (2, "P", "B"),
            (3, "Q", "C"),
            (4, "A", "D"),
            (5, "D", "E"),
            (6, "Q", "A"),
            (7, "C", "F"),
        ]),
    ),
    (
        "weak local plural delete",
        Expected::Survivors(&[
            (3, "Q", "C"),
            (4, "A", "D"),
            (5, "D", "E"),
            (6, "Q", "A"),
            (7, "C", "F"),
        ]),
    ),
    (
        "weak global single delete",
        Expected::Survivors(&[(2, "P", "B"), (3, "Q", "C"), (6, "Q", "A"), (7, "C", "F")]),
    ),
    (
        "weak global plural delete",
        Expected::Survivors(&[(3, "Q", "C"), (6, "Q", "A"), (7, "C", "F")]),
    ),
    (
        "strong local single delete",
        Expected::Survivors(&[
            (2, "P", "B"),
            (3, "Q", "C"),
            (4, "P", "D"),
            (5, "D", "E"),
            (7, "C", "F"),
        ]),
    ),
    ("strong local plural delete", Expected::Mismatch),
    (
        "strong global single delete",
        Expected::Survivors(&[(2, "P", "B"), (3, "Q", "C"), (7, "C", "F")]),
    ),
    ("strong global plural delete", Expected::Mismatch),
];

/// Grants only, P dominating Q and R independent:
/// P->A (multi-level), P->B, Q->C, Q->D, A->X, R->Y.
pub fn plural_grants() -> Engine {
    let universe = ContextUniverse::new(
        date("06/01/25"),
        date("10/01/25"),
        Vec::<String>::new(),
        Vec::<String>::new(),
    )
    .expect("fixture universe");
    let mut sp = SecurityPolicy::new(universe);
    for owner in ["P", "Q", "R"] {
        sp.insert_rule(PolicyRule::base(
            format!("r{owner}"),
            Modality::Positive,
            subject(owner),
            "present",
            "course",
        ))
        .expect("owner rule");
    }
    let mut hierarchy = GrantorHierarchy::new();
    hierarchy.add_dominance(subject("P"), subject("Q")).expect("dominance");
    let mut engine = Engine::new(sp, hierarchy);
    for request in [
        grant("P", "A", true),
        grant("P", "B", false),
        grant("Q", "C", false),
        grant("Q", "D", false),
        grant("A", "X", false),
        grant("R", "Y", false),
    ] {
        assert!(engine.delegate(request).expect("fixture request").is_accepted());
    }
    engine
}

/// Legal agreement steps as `(mode, state, event, next state)`, written out
/// by hand from the agreement choreography. Every other triple must be rejected.
pub const AGREEMENT_STEPS: [(&str, &str, &str, &str); 12] = [
    ("spontaneous", "idle", "submit", "submitted"),
    ("spontaneous", "submitted", "decide", "decided"),
    ("grantee-initiated", "idle", "claim", "claimed"),
    ("grantee-initiated", "claimed", "approve", "approved"),
    ("grantee-initiated", "claimed", "refuse", "decided"),
    ("grantee-initiated", "approved", "submit", "submitted"),
    ("grantee-initiated", "submitted", "decide", "decided"),
    ("grantor-initiated", "idle", "claim", "claimed"),
    ("grantor-initiated", "claimed", "approve", "approved"),
    ("grantor-initiated", "claimed", "refuse", "decided"),
    ("grantor-initiated", "approved", "submit", "submitted"),
    ("grantor-initiated", "submitted", "decide", "decided"),
];
