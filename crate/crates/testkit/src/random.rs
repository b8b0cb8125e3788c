//! Seeded random policies, requests and delegation graphs.

use dlg_core::constraint::{Constraint, Date, Interval};
use dlg_core::engine::Engine;
use dlg_core::policy::{
    DelegationRule, EventSpec, GrantorHierarchy, Modality, Permission, PermissionKey, PolicyRule, Provenance,
    SecurityPolicy, Subject,
};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::{small_universe, subject, ATTRIBUTES, LOCATIONS};

pub const SUBJECTS: [&str; 5] = ["s0", "s1", "s2", "s3", "s4"];
pub const ACTIONS: [&str; 2] = ["read", "write"];
pub const OBJECTS: [&str; 2] = ["f1", "f2"];

fn random_date<R: Rng>(rng: &mut R) -> Date {
    Date::from_dmy(rng.gen_range(4..=12), 1, 25).expect("january date")
}

fn random_atom<R: Rng>(rng: &mut R) -> Constraint {
    match rng.gen_range(0..6) {
        0 => {
            let a = random_date(rng);
            let b = random_date(rng);
            Constraint::During(Interval::new(a.min(b), a.max(b)).expect("ordered"))
        }
        1 => Constraint::Before(random_date(rng)),
        2 => Constraint::After(random_date(rng)),
        3 => Constraint::In(LOCATIONS.choose(rng).expect("location").to_string()),
        4 => Constraint::Has(ATTRIBUTES.choose(rng).expect("attribute").to_string()),
        _ => Constraint::Is(ATTRIBUTES.choose(rng).expect("attribute").to_string()),
    }
}

/// Random constraint tree of depth at most `depth`.
pub fn random_constraint<R: Rng>(rng: &mut R, depth: u32) -> Constraint {
    if depth <= 1 || rng.gen_bool(0.4) {
        return random_atom(rng);
    }
    match rng.gen_range(0..3) {
        0 => Constraint::negate(random_constraint(rng, depth - 1)),
        1 => Constraint::and(random_constraint(rng, depth - 1), random_constraint(rng, depth - 1)),
        _ => Constraint::or(random_constraint(rng, depth - 1), random_constraint(rng, depth - 1)),
    }
}

fn maybe_constraint<R: Rng>(rng: &mut R) -> Option<Constraint> {
    rng.gen_bool(0.6).then(|| random_constraint(rng, 3))
}

fn pick<R: Rng>(rng: &mut R, items: &[&str]) -> String {
    items.choose(rng).expect("non-empty pool").to_string()
}

pub fn random_permission<R: Rng>(rng: &mut R) -> Permission {
    let mut p = Permission::new(pick(rng, &ACTIONS), pick(rng, &OBJECTS));
    p.constraint = maybe_constraint(rng);
    p
}

pub fn random_base_rule<R: Rng>(rng: &mut R, id: &str) -> PolicyRule {
    let modality = if rng.gen_bool(0.6) {
        Modality::Positive
    } else {
        Modality::Negative
    };
    let mut rule = PolicyRule::base(
        id,
        modality,
        subject(&pick(rng, &SUBJECTS)),
        pick(rng, &ACTIONS),
        pick(rng, &OBJECTS),
    );
    rule.constraint = maybe_constraint(rng);
    rule
}

/// Up to `max_rules` unlabelled base rules over the small universe.
pub fn random_policy<R: Rng>(rng: &mut R, max_rules: usize) -> SecurityPolicy {
    let mut sp = SecurityPolicy::new(small_universe());
    let n = rng.gen_range(0..=max_rules);
    for i in 1..=n {
        sp.insert_rule(random_base_rule(rng, &format!("r{i}")))
            .expect("fresh rule id");
    }
    sp
}

/// A rule as the engine would build it for a grant, not yet inserted.
pub fn random_delegated_rule<R: Rng>(rng: &mut R) -> PolicyRule {
    let mut rule = random_base_rule(rng, "d1");
    if rng.gen_bool(0.5) {
        rule.modality = rule.modality.negate();
    }
    rule.provenance = Provenance::Delegated {
        edge: dlg_core::policy::EdgeId(1),
    };
    rule
}

/// A request from a subject that holds some positive rule, or `None` when
/// the policy grants nothing. Grants, transfers and obligations are mixed.
pub fn random_request<R: Rng>(rng: &mut R, sp: &SecurityPolicy) -> Option<DelegationRule> {
    let holders: Vec<&PolicyRule> = sp.rules().iter().filter(|r| r.modality == Modality::Positive).collect();
    let source = holders.choose(rng)?;
    let gr = source.subject.clone();
    let others: Vec<&str> = SUBJECTS.iter().copied().filter(|s| *s != gr.as_str()).collect();
    let gt = subject(&pick(rng, &others));
    let p = Permission::new(source.action.clone(), source.object.clone());
    let dc = rng.gen_bool(0.4).then(|| random_constraint(rng, 2));
    let rule = match rng.gen_range(0..4) {
        0 => DelegationRule::transfer(gr, gt, p),
        1 => DelegationRule::obligation(gr, gt, p, EventSpec::new("done").expect("event")),
        _ => DelegationRule::grant(gr, gt, p),
    };
    Some(match dc {
        Some(dc) => rule.with_dc(dc),
        None => rule,
    })
}

pub const DAG_KEY: (&str, &str) = ("read", "file");

pub fn dag_key() -> PermissionKey {
    Permission::new(DAG_KEY.0, DAG_KEY.1).key()
}

/// Engine with owners `n0` and `n1` of `read file` and up to `max_edges`
/// grants along random forward pairs of `n0..n6`, some single-level and
/// some dated. Rejected requests are simply absent from the graph.
pub fn random_dag<R: Rng>(rng: &mut R, max_edges: usize) -> Engine {
    random_dag_with(rng, max_edges, GrantorHierarchy::new())
}

/// [`random_dag`] under the given grantor hierarchy.
pub fn random_dag_with<R: Rng>(rng: &mut R, max_edges: usize, hierarchy: GrantorHierarchy) -> Engine {
    let mut sp = SecurityPolicy::new(small_universe());
    for (i, owner) in ["n0", "n1"].into_iter().enumerate() {
        sp.insert_rule(PolicyRule::base(
            format!("o{i}"),
            Modality::Positive,
            subject(owner),
            DAG_KEY.0,
            DAG_KEY.1,
        ))
        .expect("owner rule");
    }
    let mut engine = Engine::new(sp, hierarchy);
    let n = rng.gen_range(1..=max_edges);
    for _ in 0..n {
        let i = rng.gen_range(0..6);
        let j = rng.gen_range(i + 1..7);
        let gr = subject(&format!("n{i}"));
        let gt = subject(&format!("n{j}"));
        let mut dc = None;
        if rng.gen_bool(0.7) {
            dc = Some(Constraint::MultiLevelDelegation);
        }
        if rng.gen_bool(0.2) {
            let bound = Constraint::Before(random_date(rng));
            dc = Some(match dc {
                Some(level) => Constraint::and(level, bound),
                None => bound,
            });
        }
        let request = DelegationRule::grant(gr, gt, Permission::new(DAG_KEY.0, DAG_KEY.1));
        let request = match dc {
            Some(dc) => request.with_dc(dc),
            None => request,
        };
        engine.delegate(request).expect("request processed");
    }
    engine
}

pub fn dag_subjects() -> Vec<Subject> {
    (0..7).map(|i| subject(&format!("n{i}"))).collect()
}
