//! Subjects, permissions, rules, priorities and the security policy.

mod hierarchy;
mod priority;
mod types;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use hierarchy::GrantorHierarchy;
pub use priority::{PriorityOrder, PriorityOrdering};
pub use types::{
    is_token, DelegationRule, EdgeId, EventSpec, Modality, Permission, PermissionKey, PolicyRule, PriorityLabel,
    Provenance, RuleId, RuleType, Subject, TransferLayer,
};

use crate::constraint::{eval_optional, Constraint, ConstraintError, ContextUniverse, EvalContext};
use types::check_token;

/// Label implicitly carried by every rule without an explicit priority.
pub const BOTTOM_LABEL: &str = "p1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("invalid {what} `{text}`")]
    InvalidToken { what: &'static str, text: String },
    #[error("duplicate rule id `{id}`")]
    DuplicateRule { id: RuleId },
    #[error("unknown rule `{id}`")]
    UnknownRule { id: RuleId },
    #[error("unknown priority label `{label}`")]
    UnknownLabel { label: PriorityLabel },
    #[error("priority `{label}` cannot be below itself")]
    ReflexivePriority { label: PriorityLabel },
    #[error("ordering {lower} < {higher} would create a priority cycle")]
    PriorityCycle {
        lower: PriorityLabel,
        higher: PriorityLabel,
    },
    #[error("`{subject}` cannot dominate itself")]
    ReflexiveDominance { subject: Subject },
    #[error("`{superior}` dominating `{inferior}` would create a dominance cycle")]
    DominanceCycle { superior: Subject, inferior: Subject },
    #[error("delegated rule `{id}` has no priority label")]
    MissingPriority { id: RuleId },
    #[error("Nd for `{key}` must be positive")]
    InvalidNd { key: PermissionKey },
    #[error("rule `{id}`: {source}")]
    RuleConstraint {
        id: RuleId,
        #[source]
        source: ConstraintError,
    },
}

/// Evidence that a rule and a permission overlap: a context satisfying both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionWitness {
    pub context: EvalContext,
}

/// Overlap of a rule with a permission.
///
/// Action and object must match exactly, and the constraints that are
/// present must be jointly satisfiable in the universe. A missing
/// constraint holds everywhere.
pub fn rule_intersection(universe: &ContextUniverse, r: &PolicyRule, p: &Permission) -> Option<IntersectionWitness> {
    if r.action != p.action || r.object != p.object {
        return None;
    }
    let conjuncts: Vec<&Constraint> = r.constraint.iter().chain(p.constraint.iter()).collect();
    universe
        .find_witness(&conjuncts)
        .map(|context| IntersectionWitness { context })
}

/// Answer of the decision procedure for one access query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Permit,
    Deny,
    /// Incomparable applicable rules disagree.
    Undecidable,
    /// No rule applies.
    NotApplicable,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Permit => "permit",
            Decision::Deny => "deny",
            Decision::Undecidable => "undecidable",
            Decision::NotApplicable => "not-applicable",
        })
    }
}

/// Rules, priorities and the permission-Nd list over a context universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecurityPolicy {
    universe: Arc<ContextUniverse>,
    rules: Vec<PolicyRule>,
    priorities: PriorityOrder,
    nd_list: BTreeMap<PermissionKey, u32>,
    next_label: u64,
    next_rule: u64,
}

impl SecurityPolicy {
    pub fn new(universe: impl Into<Arc<ContextUniverse>>) -> Self {
        SecurityPolicy {
            universe: universe.into(),
            rules: Vec::new(),
            priorities: PriorityOrder::new(),
            nd_list: BTreeMap::new(),
            next_label: 2,
            next_rule: 1,
        }
    }

    pub fn universe(&self) -> &ContextUniverse {
        &self.universe
    }

    pub fn universe_arc(&self) -> Arc<ContextUniverse> {
        Arc::clone(&self.universe)
    }

    /// Rules in insertion order.
    pub fn rules(&self) -> &[PolicyRule] {
        &self.rules
    }

    pub fn rule(&self, id: &RuleId) -> Option<&PolicyRule> {
        self.rules.iter().find(|r| r.id == *id)
    }

    pub(crate) fn rule_mut(&mut self, id: &RuleId) -> Option<&mut PolicyRule> {
        self.rules.iter_mut().find(|r| r.id == *id)
    }

    pub fn rules_for<'a>(&'a self, subject: &'a Subject) -> impl Iterator<Item = &'a PolicyRule> + 'a {
        self.rules.iter().filter(move |r| r.subject == *subject)
    }

    pub fn priorities(&self) -> &PriorityOrder {
        &self.priorities
    }

    pub(crate) fn priorities_mut(&mut self) -> &mut PriorityOrder {
        &mut self.priorities
    }

    /// Makes `label` known to the order without relating it.
    pub fn declare_label(&mut self, label: PriorityLabel) -> bool {
        self.priorities.add_label(label)
    }

    /// Declares `lower < higher`, adding unknown labels.
    pub fn declare_priority(&mut self, lower: PriorityLabel, higher: PriorityLabel) -> Result<(), PolicyError> {
        self.priorities.add_less(lower, higher)
    }

    pub fn nd_list(&self) -> &BTreeMap<PermissionKey, u32> {
        &self.nd_list
    }

    pub fn nd(&self, key: &PermissionKey) -> Option<u32> {
        self.nd_list.get(key).copied()
    }

    pub fn set_nd(&mut self, key: PermissionKey, nd: u32) -> Result<(), PolicyError> {
        if nd == 0 {
            return Err(PolicyError::InvalidNd { key });
        }
        self.nd_list.insert(key, nd);
        Ok(())
    }

    /// Adds a rule after checking the policy invariants.
    pub fn insert_rule(&mut self, rule: PolicyRule) -> Result<(), PolicyError> {
        self.validate_rule(&rule)?;
        if self.rule(&rule.id).is_some() {
            return Err(PolicyError::DuplicateRule { id: rule.id });
        }
        self.rules.push(rule);
        Ok(())
    }

    /// Replaces the rule with the same id, or appends it.
    pub(crate) fn upsert_rule(&mut self, rule: PolicyRule) -> Result<(), PolicyError> {
        self.validate_rule(&rule)?;
        match self.rules.iter_mut().find(|r| r.id == rule.id) {
            Some(slot) => *slot = rule,
            None => self.rules.push(rule),
        }
        Ok(())
    }

    fn validate_rule(&self, rule: &PolicyRule) -> Result<(), PolicyError> {
        check_token("rule id", rule.id.as_str())?;
        check_token("rule type", &rule.rtype)?;
        check_token("action", &rule.action)?;
        check_token("object", &rule.object)?;
        if let Some(c) = &rule.constraint {
            let err = |source| PolicyError::RuleConstraint {
                id: rule.id.clone(),
                source,
            };
            c.validate().map_err(err)?;
            if c.contains_level() {
                return Err(err(ConstraintError::LevelPlacement));
            }
        }
        match &rule.priority {
            Some(label) if !self.priorities.contains(label) => Err(PolicyError::UnknownLabel { label: label.clone() }),
            None if !rule.is_base() => Err(PolicyError::MissingPriority { id: rule.id.clone() }),
            _ => Ok(()),
        }
    }

    pub fn remove_rule(&mut self, id: &RuleId) -> Result<PolicyRule, PolicyError> {
        let index = self
            .rules
            .iter()
            .position(|r| r.id == *id)
            .ok_or_else(|| PolicyError::UnknownRule { id: id.clone() })?;
        Ok(self.rules.remove(index))
    }

    /// A label not yet used by this policy; the counter never goes back.
    pub fn fresh_label(&mut self) -> PriorityLabel {
        loop {
            let label = PriorityLabel::new(format!("p{}", self.next_label));
            self.next_label += 1;
            if !self.priorities.contains(&label) {
                self.priorities.add_label(label.clone());
                return label;
            }
        }
    }

    /// A rule id of the form `d<n>` not yet used by this policy.
    pub fn fresh_rule_id(&mut self) -> RuleId {
        loop {
            let id = RuleId::new(format!("d{}", self.next_rule));
            self.next_rule += 1;
            if self.rule(&id).is_none() {
                return id;
            }
        }
    }

    pub fn bottom_label() -> PriorityLabel {
        PriorityLabel::new(BOTTOM_LABEL)
    }

    /// The explicit label, or the bottom label for unlabelled rules.
    pub fn effective_priority(rule: &PolicyRule) -> PriorityLabel {
        rule.priority.clone().unwrap_or_else(Self::bottom_label)
    }

    /// Drops `label` from the order, then the bottom label if it became
    /// unused.
    pub(crate) fn drop_label(&mut self, label: &PriorityLabel) {
        self.priorities.remove_label(label);
        let bottom = Self::bottom_label();
        let referenced = self.rules.iter().any(|r| r.priority.as_ref() == Some(&bottom));
        if !referenced && !self.priorities.is_ordered(&bottom) {
            self.priorities.remove_label(&bottom);
        }
    }

    /// True iff `a` takes precedence over `b`.
    pub fn outranks(&self, a: &PolicyRule, b: &PolicyRule) -> bool {
        self.priorities
            .precedes(&Self::effective_priority(b), &Self::effective_priority(a))
    }

    /// Rules of `subject` on `(action, object)` whose constraint holds in `ctx`.
    pub fn applicable<'a>(
        &'a self,
        subject: &'a Subject,
        action: &'a str,
        object: &'a str,
        ctx: &'a EvalContext,
    ) -> impl Iterator<Item = &'a PolicyRule> + 'a {
        self.rules.iter().filter(move |r| {
            r.subject == *subject
                && r.action == action
                && r.object == object
                && eval_optional(r.constraint.as_ref(), ctx)
        })
    }

    /// Decision procedure: among applicable rules keep those not outranked
    /// by another applicable rule; agreeing modalities decide, disagreeing
    /// ones are undecidable.
    pub fn decide(&self, subject: &Subject, action: &str, object: &str, ctx: &EvalContext) -> Decision {
        let applicable: Vec<&PolicyRule> = self.applicable(subject, action, object, ctx).collect();
        let maximal = applicable
            .iter()
            .filter(|r| !applicable.iter().any(|other| self.outranks(other, r)));
        let mut positive = false;
        let mut negative = false;
        for r in maximal {
            match r.modality {
                Modality::Positive => positive = true,
                Modality::Negative => negative = true,
            }
        }
        match (positive, negative) {
            (true, false) => Decision::Permit,
            (false, true) => Decision::Deny,
            (true, true) => Decision::Undecidable,
            (false, false) => Decision::NotApplicable,
        }
    }

    /// Every priority label referenced by a rule is known and the order is
    /// a strict partial order.
    pub fn check_invariants(&self) -> bool {
        let labels_known = self
            .rules
            .iter()
            .filter_map(|r| r.priority.as_ref())
            .all(|l| self.priorities.contains(l));
        let delegated_labelled = self.rules.iter().all(|r| r.is_base() || r.priority.is_some());
        let mut ids: Vec<&RuleId> = self.rules.iter().map(|r| &r.id).collect();
        ids.sort();
        let unique = ids.windows(2).all(|w| w[0] != w[1]);
        labels_known && delegated_labelled && unique && self.priorities.is_strict_partial_order()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{parse_constraint, Date};

    fn date(s: &str) -> Date {
        s.parse().unwrap()
    }

    fn s(id: &str) -> Subject {
        Subject::new(id).unwrap()
    }

    fn universe() -> ContextUniverse {
        ContextUniverse::new(date("01/01/25"), date("10/01/25"), ["classroom", "lab"], ["senior"]).unwrap()
    }

    #[test]
    fn professor_holds_present_course() {
        let u = universe();
        let r = PolicyRule::base("r1", Modality::Positive, s("professor"), "present", "course");
        assert!(rule_intersection(&u, &r, &Permission::new("present", "course")).is_some());
        assert!(rule_intersection(&u, &r, &Permission::new("grade", "course")).is_none());
    }

    #[test]
    fn disjoint_dates_do_not_intersect() {
        let u = universe();
        let r = PolicyRule::base("r1", Modality::Positive, s("professor"), "present", "course")
            .with_constraint(parse_constraint("BEFORE 03/01/25").unwrap());
        let p = Permission::new("present", "course").with_constraint(parse_constraint("AFTER 05/01/25").unwrap());
        assert!(rule_intersection(&u, &r, &p).is_none());
        let q = Permission::new("present", "course").with_constraint(parse_constraint("AFTER 01/01/25").unwrap());
        let w = rule_intersection(&u, &r, &q).unwrap();
        assert_eq!(w.context.now, date("02/01/25"));
    }

    #[test]
    fn insert_rejects_duplicates_and_unknown_labels() {
        let mut sp = SecurityPolicy::new(universe());
        let r = PolicyRule::base("r1", Modality::Positive, s("a"), "read", "file");
        sp.insert_rule(r.clone()).unwrap();
        assert!(matches!(
            sp.insert_rule(r.clone()),
            Err(PolicyError::DuplicateRule { .. })
        ));
        let mut labelled = r.clone();
        labelled.id = RuleId::new("r2");
        labelled.priority = Some(PriorityLabel::new("p7"));
        assert!(matches!(
            sp.insert_rule(labelled),
            Err(PolicyError::UnknownLabel { .. })
        ));
        let mut delegated = r;
        delegated.id = RuleId::new("r3");
        delegated.provenance = Provenance::Delegated { edge: EdgeId(1) };
        assert!(matches!(
            sp.insert_rule(delegated),
            Err(PolicyError::MissingPriority { .. })
        ));
    }

    #[test]
    fn fresh_labels_start_above_bottom() {
        let mut sp = SecurityPolicy::new(universe());
        assert_eq!(sp.fresh_label().as_str(), "p2");
        assert_eq!(sp.fresh_label().as_str(), "p3");
        assert_eq!(sp.fresh_rule_id().as_str(), "d1");
    }

    #[test]
    fn higher_priority_rule_decides() {
        let mut sp = SecurityPolicy::new(universe());
        sp.insert_rule(PolicyRule::base(
            "r2",
            Modality::Negative,
            s("assistant"),
            "present",
            "course",
        ))
        .unwrap();
        let ctx = EvalContext::at(date("02/01/25"));
        assert_eq!(sp.decide(&s("assistant"), "present", "course", &ctx), Decision::Deny);
        assert_eq!(
            sp.decide(&s("assistant"), "grade", "course", &ctx),
            Decision::NotApplicable
        );

        let mut r1 = PolicyRule::base("d1", Modality::Positive, s("assistant"), "present", "course");
        r1.provenance = Provenance::Delegated { edge: EdgeId(1) };
        let label = sp.fresh_label();
        r1.priority = Some(label.clone());
        sp.insert_rule(r1).unwrap();
        assert_eq!(
            sp.decide(&s("assistant"), "present", "course", &ctx),
            Decision::Undecidable
        );
        sp.priorities_mut()
            .add_less(SecurityPolicy::bottom_label(), label)
            .unwrap();
        assert_eq!(sp.decide(&s("assistant"), "present", "course", &ctx), Decision::Permit);
        assert!(sp.check_invariants());
    }
}
