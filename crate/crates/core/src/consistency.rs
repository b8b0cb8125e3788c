//! Conflict detection between a delegated rule and the policy, and
//! resolution by priority.

use std::fmt;

use crate::constraint::{eval_optional, Constraint, EvalContext};
use crate::policy::{PolicyError, PolicyRule, PriorityLabel, RuleId, SecurityPolicy};

/// How rule domains `(action, object, constraint)` are related.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DomainRelation {
    /// Some context satisfies both constraints.
    #[default]
    Overlap,
    /// Both constraints hold in exactly the same contexts (and some exist).
    Equality,
    /// One constraint's contexts include the other's (non-empty) ones.
    Subsumption,
}

impl fmt::Display for DomainRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainRelation::Overlap => "overlap",
            DomainRelation::Equality => "equality",
            DomainRelation::Subsumption => "subsumption",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationWitness {
    pub relation: DomainRelation,
    pub action: String,
    pub object: String,
    /// A context in both domains.
    pub context: EvalContext,
}

impl fmt::Display for RelationWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} at {}",
            self.action, self.object, self.relation, self.context.now
        )?;
        let list = |items: &std::collections::BTreeSet<String>| items.iter().cloned().collect::<Vec<_>>().join(",");
        if !self.context.locations.is_empty() {
            write!(f, " in {}", list(&self.context.locations))?;
        }
        if !self.context.attributes.is_empty() {
            write!(f, " with {}", list(&self.context.attributes))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictPair {
    pub existing: RuleId,
    pub delegated: RuleId,
    pub witness: RelationWitness,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConflictReport {
    pub pairs: Vec<ConflictPair>,
}

impl ConflictReport {
    pub fn is_consistent(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl fmt::Display for ConflictReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for pair in &self.pairs {
            writeln!(f, "CONFLICT {} <> {}: {}", pair.existing, pair.delegated, pair.witness)?;
        }
        Ok(())
    }
}

/// Domain overlap between two rules.
pub fn domain_relation(sp: &SecurityPolicy, r1: &PolicyRule, r2: &PolicyRule) -> Option<RelationWitness> {
    domain_relation_with(sp, DomainRelation::Overlap, r1, r2)
}

pub fn domain_relation_with(
    sp: &SecurityPolicy,
    relation: DomainRelation,
    r1: &PolicyRule,
    r2: &PolicyRule,
) -> Option<RelationWitness> {
    if r1.action != r2.action || r1.object != r2.object {
        return None;
    }
    let universe = sp.universe();
    let conjuncts: Vec<&Constraint> = r1.constraint.iter().chain(r2.constraint.iter()).collect();
    let context = universe.find_witness(&conjuncts)?;
    let holds = match relation {
        DomainRelation::Overlap => true,
        DomainRelation::Equality => universe
            .contexts()
            .all(|ctx| eval_optional(r1.constraint.as_ref(), &ctx) == eval_optional(r2.constraint.as_ref(), &ctx)),
        DomainRelation::Subsumption => {
            let within = |a: &PolicyRule, b: &PolicyRule| {
                universe.contexts().all(|ctx| {
                    !eval_optional(a.constraint.as_ref(), &ctx) || eval_optional(b.constraint.as_ref(), &ctx)
                })
            };
            within(r1, r2) || within(r2, r1)
        }
    };
    holds.then(|| RelationWitness {
        relation,
        action: r1.action.clone(),
        object: r1.object.clone(),
        context,
    })
}

/// Conflicts between `dr` and the rules of its subject under domain overlap.
///
/// A rule of `sp` with the same id as `dr` is the rule being modified and is
/// skipped.
pub fn check_consistency(sp: &SecurityPolicy, dr: &PolicyRule) -> ConflictReport {
    check_consistency_with(sp, DomainRelation::Overlap, dr)
}

pub fn check_consistency_with(sp: &SecurityPolicy, relation: DomainRelation, dr: &PolicyRule) -> ConflictReport {
    let pairs = sp
        .rules_for(&dr.subject)
        .filter(|r| r.id != dr.id && r.modality != dr.modality)
        .filter_map(|r| {
            domain_relation_with(sp, relation, r, dr).map(|witness| ConflictPair {
                existing: r.id.clone(),
                delegated: dr.id.clone(),
                witness,
            })
        })
        .collect();
    ConflictReport { pairs }
}

/// Inserts `dr` under a fresh label placed above every conflict partner.
///
/// Unlabelled partners rank at the bottom label, which is added to the
/// order on demand. No other rule is edited.
pub fn resolve_with_priority(
    sp: &SecurityPolicy,
    dr: &PolicyRule,
    report: &ConflictReport,
) -> Result<SecurityPolicy, PolicyError> {
    let mut next = sp.clone();
    resolve_in_place(&mut next, dr.clone(), report)?;
    Ok(next)
}

pub(crate) fn resolve_in_place(
    sp: &mut SecurityPolicy,
    mut dr: PolicyRule,
    report: &ConflictReport,
) -> Result<PriorityLabel, PolicyError> {
    let label = sp.fresh_label();
    for pair in &report.pairs {
        let partner = sp.rule(&pair.existing).ok_or_else(|| PolicyError::UnknownRule {
            id: pair.existing.clone(),
        })?;
        let lower = SecurityPolicy::effective_priority(partner);
        sp.priorities_mut().add_label(lower.clone());
        sp.priorities_mut().add_less(lower, label.clone())?;
    }
    dr.priority = Some(label.clone());
    sp.upsert_rule(dr)?;
    Ok(label)
}

/// Removes the rule's label and every order pair mentioning it; the rule
/// keeps no priority afterwards.
pub fn retract_priority(sp: &SecurityPolicy, rule: &RuleId) -> Result<SecurityPolicy, PolicyError> {
    let mut next = sp.clone();
    retract_in_place(&mut next, rule)?;
    Ok(next)
}

pub(crate) fn retract_in_place(sp: &mut SecurityPolicy, rule: &RuleId) -> Result<(), PolicyError> {
    let target = sp
        .rule_mut(rule)
        .ok_or_else(|| PolicyError::UnknownRule { id: rule.clone() })?;
    if let Some(label) = target.priority.take() {
        sp.drop_label(&label);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{parse_constraint_with, ContextUniverse, Date, Interval};
    use crate::policy::{Decision, EdgeId, Modality, PolicyRule, Provenance, Subject};

    fn date(s: &str) -> Date {
        s.parse().unwrap()
    }

    fn s(id: &str) -> Subject {
        Subject::new(id).unwrap()
    }

    fn course_policy() -> SecurityPolicy {
        let mut u = ContextUniverse::new(date("06/01/25"), date("10/01/25"), ["classroom"], ["senior"]).unwrap();
        u.add_interval(
            "professor-absence",
            Interval::new(date("06/01/25"), date("08/01/25")).unwrap(),
        )
        .unwrap();
        let mut sp = SecurityPolicy::new(u);
        sp.insert_rule(PolicyRule::base(
            "r2",
            Modality::Negative,
            s("assistant"),
            "present",
            "course",
        ))
        .unwrap();
        sp
    }

    fn rule1(sp: &SecurityPolicy) -> PolicyRule {
        let c = parse_constraint_with("DURING professor-absence", sp.universe().intervals()).unwrap();
        let mut r = PolicyRule::base("d1", Modality::Positive, s("assistant"), "present", "course").with_constraint(c);
        r.provenance = Provenance::Delegated { edge: EdgeId(1) };
        r
    }

    #[test]
    fn delegated_rule_conflicts_with_prohibition() {
        let sp = course_policy();
        let dr = rule1(&sp);
        let report = check_consistency(&sp, &dr);
        assert_eq!(report.pairs.len(), 1);
        assert_eq!(report.pairs[0].existing.as_str(), "r2");
        assert_eq!(
            report.to_string(),
            "CONFLICT r2 <> d1: present course overlap at 06/01/25\n"
        );
    }

    #[test]
    fn resolution_orders_bottom_below_delegated_label() {
        let sp = course_policy();
        let dr = rule1(&sp);
        let report = check_consistency(&sp, &dr);
        let resolved = resolve_with_priority(&sp, &dr, &report).unwrap();
        let p1 = SecurityPolicy::bottom_label();
        let p2 = resolved.rule(&dr.id).unwrap().priority.clone().unwrap();
        assert_eq!(p2.as_str(), "p2");
        assert!(resolved.priorities().precedes(&p1, &p2));
        assert_eq!(resolved.rules().len(), 2);
        assert_eq!(resolved.rules()[0], sp.rules()[0]);

        let during = EvalContext::at(date("07/01/25"));
        let after = EvalContext::at(date("09/01/25"));
        assert_eq!(
            resolved.decide(&s("assistant"), "present", "course", &during),
            Decision::Permit
        );
        assert_eq!(
            resolved.decide(&s("assistant"), "present", "course", &after),
            Decision::Deny
        );

        let mut removed = resolved.clone();
        removed.remove_rule(&dr.id).unwrap();
        let retracted = retract_priority(&resolved, &dr.id).unwrap();
        assert!(retracted.priorities().labels().is_empty());
        removed.drop_label(&p2);
        assert_eq!(removed.rules(), sp.rules());
        assert_eq!(removed.priorities(), sp.priorities());
    }

    #[test]
    fn empty_report_adds_unordered_label() {
        let sp = course_policy();
        let mut dr = rule1(&sp);
        dr.subject = s("tutor");
        let report = check_consistency(&sp, &dr);
        assert!(report.is_consistent());
        let resolved = resolve_with_priority(&sp, &dr, &report).unwrap();
        assert_eq!(resolved.priorities().pairs().count(), 0);
        assert_eq!(resolved.priorities().labels().len(), 1);
    }

    #[test]
    fn same_modality_or_other_object_is_no_conflict() {
        let sp = course_policy();
        let mut dr = rule1(&sp);
        dr.modality = Modality::Negative;
        assert!(check_consistency(&sp, &dr).is_consistent());
        let mut other = rule1(&sp);
        other.object = "exam".into();
        assert!(check_consistency(&sp, &other).is_consistent());
    }

    #[test]
    fn alternate_relations() {
        let sp = course_policy();
        let dr = rule1(&sp);
        let r2 = sp.rules()[0].clone();
        assert!(domain_relation_with(&sp, DomainRelation::Equality, &r2, &dr).is_none());
        assert!(domain_relation_with(&sp, DomainRelation::Subsumption, &r2, &dr).is_some());
        assert!(domain_relation_with(&sp, DomainRelation::Equality, &r2, &r2).is_some());
    }

    #[test]
    fn retract_unknown_rule_fails() {
        let sp = course_policy();
        assert!(matches!(
            retract_priority(&sp, &RuleId::new("nope")),
            Err(PolicyError::UnknownRule { .. })
        ));
    }
}
