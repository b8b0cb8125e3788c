//! Reference implementations by exhaustive enumeration. They share no
//! code with the engine beyond its data types.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use dlg_core::constraint::{Constraint, ContextUniverse, Date, EvalContext};
use dlg_core::policy::{
    Decision, Modality, Permission, PermissionKey, PolicyRule, PriorityLabel, RuleId, SecurityPolicy, Subject,
    BOTTOM_LABEL,
};
use dlg_core::revocation::DelegationGraph;

/// Truth of `c` on `day` for a grantee in `locations` with `attributes`.
pub fn truth(c: &Constraint, day: Date, locations: &BTreeSet<String>, attributes: &BTreeSet<String>) -> bool {
    match c {
        Constraint::During(iv) => iv.begin() <= day && day <= iv.end(),
        Constraint::Before(d) => day < *d,
        Constraint::After(d) => *d < day,
        Constraint::In(l) => locations.contains(l),
        Constraint::Has(a) | Constraint::Is(a) => attributes.contains(a),
        Constraint::MultiLevelDelegation => true,
        Constraint::Not(x) => !truth(x, day, locations, attributes),
        Constraint::And(l, r) => truth(l, day, locations, attributes) && truth(r, day, locations, attributes),
        Constraint::Or(l, r) => truth(l, day, locations, attributes) || truth(r, day, locations, attributes),
    }
}

pub fn truth_in(c: &Constraint, ctx: &EvalContext) -> bool {
    truth(c, ctx.now, &ctx.locations, &ctx.attributes)
}

fn holds(c: Option<&Constraint>, ctx: &EvalContext) -> bool {
    c.is_none_or(|c| truth_in(c, ctx))
}

fn powerset(items: &BTreeSet<String>) -> Vec<BTreeSet<String>> {
    let items: Vec<&String> = items.iter().collect();
    (0..1usize << items.len())
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, s)| (*s).clone())
                .collect()
        })
        .collect()
}

fn days(first: Date, last: Date) -> Vec<Date> {
    let mut out = Vec::new();
    let mut day = first;
    while day <= last {
        out.push(day);
        match day.add_days(1) {
            Some(next) => day = next,
            None => break,
        }
    }
    out
}

fn contexts_between(u: &ContextUniverse, first: Date, last: Date) -> Vec<EvalContext> {
    let locs = powerset(u.locations());
    let attrs = powerset(u.attributes());
    let mut out = Vec::new();
    for day in days(first, last) {
        for l in &locs {
            for a in &attrs {
                out.push(EvalContext {
                    now: day,
                    locations: l.clone(),
                    attributes: a.clone(),
                });
            }
        }
    }
    out
}

/// Every context of the universe.
pub fn all_contexts(u: &ContextUniverse) -> Vec<EvalContext> {
    contexts_between(u, u.first_day(), u.last_day())
}

/// Some context satisfies every constraint in `cs`.
pub fn jointly_satisfiable(u: &ContextUniverse, cs: &[&Constraint]) -> bool {
    all_contexts(u).iter().any(|ctx| cs.iter().all(|c| truth_in(c, ctx)))
}

fn dates_in(c: &Constraint, out: &mut Vec<Date>) {
    match c {
        Constraint::During(iv) => {
            out.push(iv.begin());
            out.push(iv.end());
        }
        Constraint::Before(d) | Constraint::After(d) => out.push(*d),
        Constraint::Not(x) => dates_in(x, out),
        Constraint::And(l, r) | Constraint::Or(l, r) => {
            dates_in(l, out);
            dates_in(r, out);
        }
        _ => {}
    }
}

/// `c` holds in some context dated `clock` or later. Past every date `c`
/// mentions the answer no longer changes, so one extra day suffices.
pub fn satisfiable_from(u: &ContextUniverse, c: &Constraint, clock: Date) -> bool {
    let mut mentioned = Vec::new();
    dates_in(c, &mut mentioned);
    let mut last = if u.last_day() > clock { u.last_day() } else { clock };
    for d in mentioned {
        if let Some(next) = d.add_days(1) {
            if next > last {
                last = next;
            }
        }
    }
    contexts_between(u, clock, last).iter().any(|ctx| truth_in(c, ctx))
}

fn overlap(u: &ContextUniverse, a: Option<&Constraint>, b: Option<&Constraint>) -> bool {
    all_contexts(u).iter().any(|ctx| holds(a, ctx) && holds(b, ctx))
}

/// `gr` holds a positive rule whose domain meets `p`'s.
pub fn legitimate(sp: &SecurityPolicy, gr: &Subject, p: &Permission) -> bool {
    sp.rules().iter().any(|r| {
        r.subject == *gr
            && r.modality == Modality::Positive
            && r.action == p.action
            && r.object == p.object
            && overlap(sp.universe(), r.constraint.as_ref(), p.constraint.as_ref())
    })
}

/// Ids of the rules of `sp` in conflict with `dr`: same subject, action and
/// object, opposite modality, overlapping constraints.
pub fn conflicts(sp: &SecurityPolicy, dr: &PolicyRule) -> BTreeSet<RuleId> {
    let mut out = BTreeSet::new();
    for r in sp.rules() {
        if r.id == dr.id {
            continue;
        }
        let opposite = matches!(
            (r.modality, dr.modality),
            (Modality::Positive, Modality::Negative) | (Modality::Negative, Modality::Positive)
        );
        if opposite
            && r.subject == dr.subject
            && r.action == dr.action
            && r.object == dr.object
            && overlap(sp.universe(), r.constraint.as_ref(), dr.constraint.as_ref())
        {
            out.insert(r.id.clone());
        }
    }
    out
}

/// Subjects reachable from `from` over live edges for `key`, by fixpoint.
pub fn reachable(graph: &DelegationGraph, from: &Subject, key: &PermissionKey) -> BTreeSet<Subject> {
    let mut seen = BTreeSet::from([from.clone()]);
    loop {
        let before = seen.len();
        for e in graph.edges() {
            if e.is_live() && e.key == *key && seen.contains(&e.gr) {
                seen.insert(e.gt.clone());
            }
        }
        if seen.len() == before {
            return seen;
        }
    }
}

/// Live subgraph for `key` has no cycle (Kahn's algorithm).
pub fn acyclic(graph: &DelegationGraph, key: &PermissionKey) -> bool {
    let edges: Vec<(Subject, Subject)> = graph
        .edges()
        .filter(|e| e.is_live() && e.key == *key)
        .map(|e| (e.gr.clone(), e.gt.clone()))
        .collect();
    let mut indegree: BTreeMap<Subject, usize> = BTreeMap::new();
    for (gr, gt) in &edges {
        indegree.entry(gr.clone()).or_default();
        *indegree.entry(gt.clone()).or_default() += 1;
    }
    let mut queue: VecDeque<Subject> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(s, _)| s.clone())
        .collect();
    let mut removed = 0;
    while let Some(node) = queue.pop_front() {
        removed += 1;
        for (gr, gt) in &edges {
            if *gr == node {
                let d = indegree.get_mut(gt).expect("indegree");
                *d -= 1;
                if *d == 0 {
                    queue.push_back(gt.clone());
                }
            }
        }
    }
    removed == indegree.len()
}

/// Strict order over labels from the policy's declared pairs, closed here
/// by Warshall's algorithm.
fn strictly_below(sp: &SecurityPolicy) -> BTreeSet<(PriorityLabel, PriorityLabel)> {
    let mut less: BTreeSet<(PriorityLabel, PriorityLabel)> =
        sp.priorities().pairs().map(|(a, b)| (a.clone(), b.clone())).collect();
    let labels: Vec<PriorityLabel> = sp.priorities().labels().iter().cloned().collect();
    for k in &labels {
        for i in &labels {
            for j in &labels {
                if less.contains(&(i.clone(), k.clone())) && less.contains(&(k.clone(), j.clone())) {
                    less.insert((i.clone(), j.clone()));
                }
            }
        }
    }
    less
}

fn label_of(r: &PolicyRule) -> PriorityLabel {
    r.priority.clone().unwrap_or_else(|| PriorityLabel::new(BOTTOM_LABEL))
}

/// Decision by direct scan: maximal applicable rules decide when they agree.
pub fn decide(sp: &SecurityPolicy, subject: &Subject, action: &str, object: &str, ctx: &EvalContext) -> Decision {
    let less = strictly_below(sp);
    let applicable: Vec<&PolicyRule> = sp
        .rules()
        .iter()
        .filter(|r| {
            r.subject == *subject && r.action == action && r.object == object && holds(r.constraint.as_ref(), ctx)
        })
        .collect();
    let mut modalities = BTreeSet::new();
    for r in &applicable {
        let beaten = applicable.iter().any(|o| less.contains(&(label_of(r), label_of(o))));
        if !beaten {
            modalities.insert(r.modality == Modality::Positive);
        }
    }
    match (modalities.contains(&true), modalities.contains(&false)) {
        (true, true) => Decision::Undecidable,
        (true, false) => Decision::Permit,
        (false, true) => Decision::Deny,
        (false, false) => Decision::NotApplicable,
    }
}

/// Every query point of the policy: each (subject, action, object) that a
/// rule mentions, in every context of the universe.
pub fn query_points(sp: &SecurityPolicy) -> Vec<(Subject, String, String, EvalContext)> {
    let triples: BTreeSet<(Subject, String, String)> = sp
        .rules()
        .iter()
        .map(|r| (r.subject.clone(), r.action.clone(), r.object.clone()))
        .collect();
    let contexts = all_contexts(sp.universe());
    let mut out = Vec::new();
    for (s, a, o) in triples {
        for ctx in &contexts {
            out.push((s.clone(), a.clone(), o.clone(), ctx.clone()));
        }
    }
    out
}

/// Points where two policies decide differently, over the query points of
/// both and the extra `subjects`.
pub fn decision_differences(
    before: &SecurityPolicy,
    after: &SecurityPolicy,
    subjects: &[Subject],
) -> Vec<(Subject, String, String, EvalContext)> {
    let mut keys: BTreeSet<(String, String)> = BTreeSet::new();
    let mut who: BTreeSet<Subject> = subjects.iter().cloned().collect();
    for r in before.rules().iter().chain(after.rules()) {
        keys.insert((r.action.clone(), r.object.clone()));
        who.insert(r.subject.clone());
    }
    let contexts = all_contexts(before.universe());
    let mut out = Vec::new();
    for s in &who {
        for (a, o) in &keys {
            for ctx in &contexts {
                if decide(before, s, a, o, ctx) != decide(after, s, a, o, ctx) {
                    out.push((s.clone(), a.clone(), o.clone(), ctx.clone()));
                }
            }
        }
    }
    out
}
