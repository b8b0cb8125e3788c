use crate::audit::{AuditEntry, Step};
use crate::constraint::{conjoin, Date};
use crate::engine::check_legitimacy;
use crate::policy::{
    EdgeId, GrantorHierarchy, Modality, Permission, PermissionKey, PolicyRule, SecurityPolicy, Subject,
};

use super::graph::{DelegationEdge, DelegationGraph, EdgeKind, EdgeStatus};
use super::scheme::{AffiliationTrigger, Dominance, Monotonicity, Plurality, Propagation, RevocationScheme};
use super::RevocationError;

/// A live edge whose grantor was replaced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reparent {
    pub edge: EdgeId,
    pub from: Subject,
    pub to: Subject,
}

#[derive(Debug, Clone)]
pub struct RevocationOutcome {
    pub policy: SecurityPolicy,
    pub graph: DelegationGraph,
    /// Edges closed, in processing order.
    pub revoked: Vec<EdgeId>,
    pub reparented: Vec<Reparent>,
    pub trail: Vec<AuditEntry>,
}

struct Run {
    sp: SecurityPolicy,
    graph: DelegationGraph,
    trigger: Option<AffiliationTrigger>,
    revoked: Vec<EdgeId>,
    reparented: Vec<Reparent>,
    trail: Vec<AuditEntry>,
}

impl Run {
    fn new(sp: &SecurityPolicy, graph: &DelegationGraph, trigger: Option<AffiliationTrigger>) -> Self {
        Run {
            sp: sp.clone(),
            graph: graph.clone(),
            trigger,
            revoked: Vec::new(),
            reparented: Vec::new(),
            trail: Vec::new(),
        }
    }

    fn finish(self) -> RevocationOutcome {
        RevocationOutcome {
            policy: self.sp,
            graph: self.graph,
            revoked: self.revoked,
            reparented: self.reparented,
            trail: self.trail,
        }
    }

    /// Revokes one edge. With `heir`, the grantee's own grants are handed
    /// to the heir (or to the edge's grantor) if the grantee is left
    /// without the permission.
    fn close(&mut self, id: EdgeId, status: EdgeStatus, heir: Option<&Subject>) -> Result<(), RevocationError> {
        let Some(edge) = self.graph.edge(id).filter(|e| e.is_live()).cloned() else {
            return Ok(());
        };
        match edge.kind {
            EdgeKind::Grant => {
                if self.sp.rule(&edge.rule).is_some() {
                    let rule = self.sp.remove_rule(&edge.rule)?;
                    if let Some(label) = &rule.priority {
                        self.sp.drop_label(label);
                    }
                }
            }
            EdgeKind::Transfer | EdgeKind::TransferOb => self.restore(&edge)?,
        }
        self.graph.close(id, status);
        self.revoked.push(id);
        self.trail.push(
            AuditEntry::new(
                Step::Revoke,
                &[&edge.gr, &edge.gt],
                match &self.trigger {
                    Some(trigger) => format!("{status}:{trigger}"),
                    None => status.to_string(),
                },
            )
            .with_rule(Some(&edge.rule))
            .with_scheme(self.scheme_name()),
        );
        if let Some(heir) = heir {
            self.adopt_orphans(&edge.gt, &edge.key, heir, &edge.gr)?;
        }
        Ok(())
    }

    /// Undoes the transfer layer recorded for `edge`.
    fn restore(&mut self, edge: &DelegationEdge) -> Result<(), RevocationError> {
        let Some(mut rule) = self.sp.rule(&edge.rule).cloned() else {
            return Ok(());
        };
        let Some(pos) = rule.transfers.iter().position(|l| l.edge == edge.id) else {
            return Ok(());
        };
        let layer = rule.transfers.remove(pos);
        let orphan = if pos == rule.transfers.len() {
            rule.subject = layer.from;
            rule.constraint = layer.prior_constraint;
            std::mem::replace(&mut rule.priority, layer.prior_priority)
        } else {
            // A later holder moved the rule on: the next hop now starts
            // where this one did.
            let next = &mut rule.transfers[pos];
            next.from = layer.from.clone();
            let orphan = std::mem::replace(&mut next.prior_priority, layer.prior_priority);
            let next_edge = next.edge;
            let mut constraint = layer.prior_constraint;
            for l in &mut rule.transfers[pos..] {
                l.prior_constraint = constraint.clone();
                constraint = conjoin(constraint, l.dc.clone());
            }
            rule.constraint = constraint;
            if let Some(old) = self.graph.edge(next_edge).map(|e| e.gr.clone()) {
                self.graph.set_grantor(next_edge, layer.from.clone());
                self.note_reparent(next_edge, old, layer.from);
            }
            orphan
        };
        self.sp.upsert_rule(rule)?;
        if let Some(label) = orphan {
            self.sp.drop_label(&label);
        }
        Ok(())
    }

    fn scheme_name(&self) -> Option<String> {
        self.trigger
            .as_ref()
            .and_then(AffiliationTrigger::scheme)
            .map(|s| s.to_string())
    }

    fn note_reparent(&mut self, edge: EdgeId, from: Subject, to: Subject) {
        let gt = self.graph.edge(edge).map(|e| e.gt.clone());
        let mut subjects = vec![&from, &to];
        if let Some(gt) = &gt {
            subjects.push(gt);
        }
        self.trail
            .push(AuditEntry::new(Step::Reparent, &subjects, "reparented").with_scheme(self.scheme_name()));
        self.reparented.push(Reparent { edge, from, to });
    }

    fn adopt_orphans(
        &mut self,
        holder: &Subject,
        key: &PermissionKey,
        heir: &Subject,
        fallback: &Subject,
    ) -> Result<(), RevocationError> {
        let p = Permission::from(key);
        if check_legitimacy(&self.sp, holder, &p) {
            return Ok(());
        }
        let children: Vec<DelegationEdge> = self
            .graph
            .live_from(holder, key)
            .filter(|e| e.kind == EdgeKind::Grant)
            .cloned()
            .collect();
        for child in children {
            let chosen = [heir, fallback].into_iter().find(|h| {
                **h != child.gt
                    && **h != *holder
                    && check_legitimacy(&self.sp, h, &p)
                    && !self.graph.reaches(&child.gt, h, key)
            });
            match chosen {
                Some(h) => {
                    let h = h.clone();
                    self.graph.set_grantor(child.id, h.clone());
                    self.note_reparent(child.id, holder.clone(), h);
                }
                None => self.close(child.id, EdgeStatus::Revoked, Some(heir))?,
            }
        }
        Ok(())
    }

    /// Revokes `id` and every live edge issued by a subject reachable from
    /// its grantee.
    fn cascade(&mut self, id: EdgeId) -> Result<(), RevocationError> {
        let Some(edge) = self.graph.edge(id).filter(|e| e.is_live()).cloned() else {
            return Ok(());
        };
        let mut victims = vec![id];
        for node in self.graph.reachable_order(&edge.gt, &edge.key) {
            victims.extend(
                self.graph
                    .live_from(&node, &edge.key)
                    .map(|e| e.id)
                    .filter(|e| *e != id),
            );
        }
        for victim in victims {
            self.close(victim, EdgeStatus::Revoked, None)?;
        }
        Ok(())
    }
}

/// Local revocation of every live delegation of `key` to `gt`.
pub fn l_revoke(
    sp: &SecurityPolicy,
    graph: &DelegationGraph,
    key: &PermissionKey,
    gt: &Subject,
) -> Result<RevocationOutcome, RevocationError> {
    let victims = incoming(graph, key, gt)?;
    let mut run = Run::new(sp, graph, None);
    for e in victims {
        run.close(e.id, EdgeStatus::Revoked, Some(&e.gr))?;
    }
    Ok(run.finish())
}

/// Revokes the delegations of `key` to `gt` and every delegation derived
/// from them.
pub fn g_revoke(
    sp: &SecurityPolicy,
    graph: &DelegationGraph,
    key: &PermissionKey,
    gt: &Subject,
) -> Result<RevocationOutcome, RevocationError> {
    let victims = incoming(graph, key, gt)?;
    let mut run = Run::new(sp, graph, None);
    for e in victims {
        run.cascade(e.id)?;
    }
    Ok(run.finish())
}

fn incoming(
    graph: &DelegationGraph,
    key: &PermissionKey,
    gt: &Subject,
) -> Result<Vec<DelegationEdge>, RevocationError> {
    let victims: Vec<DelegationEdge> = graph.live_to(gt, key).cloned().collect();
    if victims.is_empty() {
        return Err(RevocationError::NoSuchDelegation {
            gt: gt.clone(),
            key: key.clone(),
        });
    }
    Ok(victims)
}

/// Live edges a revoker may revoke under `scheme`, in id order.
pub fn select_victims(
    graph: &DelegationGraph,
    hierarchy: &GrantorHierarchy,
    revoker: &Subject,
    key: &PermissionKey,
    target: Option<&Subject>,
    scheme: &RevocationScheme,
) -> Vec<EdgeId> {
    graph
        .live()
        .filter(|e| e.key == *key)
        .filter(|e| e.gr == *revoker || (scheme.dominance == Dominance::Strong && hierarchy.dominates(revoker, &e.gr)))
        .filter(|e| scheme.plurality == Plurality::Plural || Some(&e.gt) == target)
        .map(|e| e.id)
        .collect()
}

/// Grantor-requested revocation under one of the sixteen schemes.
///
/// The scheme's monotonicity must match every selected edge: delete for
/// grants, modify for transfers.
pub fn revoke(
    sp: &SecurityPolicy,
    graph: &DelegationGraph,
    hierarchy: &GrantorHierarchy,
    revoker: &Subject,
    key: &PermissionKey,
    target: Option<&Subject>,
    scheme: &RevocationScheme,
) -> Result<RevocationOutcome, RevocationError> {
    if scheme.plurality == Plurality::Single && target.is_none() {
        return Err(RevocationError::MissingTarget { scheme: *scheme });
    }
    let victims = select_victims(graph, hierarchy, revoker, key, target, scheme);
    if victims.is_empty() {
        return Err(RevocationError::NoVictim {
            revoker: revoker.clone(),
            key: key.clone(),
        });
    }
    for id in &victims {
        let kind = graph.edge(*id).map(|e| e.kind).unwrap_or(EdgeKind::Grant);
        let matches = match scheme.monotonicity {
            Monotonicity::Delete => kind == EdgeKind::Grant,
            Monotonicity::Modify => kind.is_transfer(),
        };
        if !matches {
            return Err(RevocationError::SchemeMismatch {
                edge: *id,
                kind,
                scheme: *scheme,
            });
        }
    }
    let mut run = Run::new(sp, graph, Some(AffiliationTrigger::GrantorRequest(*scheme)));
    for id in victims {
        match scheme.propagation {
            Propagation::Local => run.close(id, EdgeStatus::Revoked, Some(revoker))?,
            Propagation::Global => run.cascade(id)?,
        }
    }
    Ok(run.finish())
}

/// Expires every live edge whose constraint cannot hold on or after `clock`.
pub fn on_constraint_violation(
    sp: &SecurityPolicy,
    graph: &DelegationGraph,
    clock: Date,
) -> Result<RevocationOutcome, RevocationError> {
    let expired: Vec<DelegationEdge> = graph
        .live()
        .filter(|e| {
            e.dc.as_ref()
                .is_some_and(|dc| !sp.universe().satisfiable_from(dc, clock))
        })
        .cloned()
        .collect();
    let mut run = Run::new(sp, graph, Some(AffiliationTrigger::ConstraintViolation));
    for e in expired {
        run.close(e.id, EdgeStatus::Expired, Some(&e.gr))?;
    }
    Ok(run.finish())
}

/// If `gr` no longer holds `key`, revokes its delegations of `key` and all
/// delegations derived from them.
pub fn on_grantor_permission_loss(
    sp: &SecurityPolicy,
    graph: &DelegationGraph,
    gr: &Subject,
    key: &PermissionKey,
) -> Result<RevocationOutcome, RevocationError> {
    let mut run = Run::new(sp, graph, Some(AffiliationTrigger::GrantorPermissionLoss));
    if !check_legitimacy(sp, gr, &Permission::from(key)) {
        let issued: Vec<EdgeId> = graph.live_from(gr, key).map(|e| e.id).collect();
        for id in issued {
            run.cascade(id)?;
        }
    }
    Ok(run.finish())
}

/// Removes the positive base rules `subject` owns for `key` (including
/// ones it transferred away), then runs the permission-loss trigger.
pub fn lose_permission(
    sp: &SecurityPolicy,
    graph: &DelegationGraph,
    subject: &Subject,
    key: &PermissionKey,
) -> Result<RevocationOutcome, RevocationError> {
    let mut next = sp.clone();
    let owned: Vec<PolicyRule> = sp
        .rules()
        .iter()
        .filter(|r| r.is_base() && r.modality == Modality::Positive && r.key() == *key && r.owner() == subject)
        .cloned()
        .collect();
    for rule in owned {
        next.remove_rule(&rule.id)?;
        let labels = rule
            .priority
            .iter()
            .chain(rule.transfers.iter().filter_map(|l| l.prior_priority.as_ref()));
        for label in labels {
            next.drop_label(label);
        }
    }
    on_grantor_permission_loss(&next, graph, subject, key)
}

/// Revokes the live transfer obligations bound to event `name`.
pub fn fire_event(
    sp: &SecurityPolicy,
    graph: &DelegationGraph,
    name: &str,
) -> Result<RevocationOutcome, RevocationError> {
    let bound: Vec<DelegationEdge> = graph
        .live()
        .filter(|e| e.kind == EdgeKind::TransferOb && e.event.as_ref().is_some_and(|ev| ev.name == name))
        .cloned()
        .collect();
    let mut run = Run::new(sp, graph, Some(AffiliationTrigger::DelegationEvent(name.to_string())));
    for e in bound {
        run.close(e.id, EdgeStatus::Revoked, Some(&e.gr))?;
    }
    Ok(run.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{Constraint, ContextUniverse};
    use crate::engine::Engine;
    use crate::policy::DelegationRule;

    fn s(id: &str) -> Subject {
        Subject::new(id).unwrap()
    }

    fn p() -> Permission {
        Permission::new("present", "course")
    }

    /// professor -> a (multi-level) -> b, professor -> c.
    fn chain() -> Engine {
        let u = ContextUniverse::new(
            "06/01/25".parse().unwrap(),
            "10/01/25".parse().unwrap(),
            Vec::<String>::new(),
            Vec::<String>::new(),
        )
        .unwrap();
        let mut sp = SecurityPolicy::new(u);
        sp.insert_rule(PolicyRule::base(
            "r1",
            Modality::Positive,
            s("professor"),
            "present",
            "course",
        ))
        .unwrap();
        let mut e = Engine::new(sp, GrantorHierarchy::new());
        for r in [
            DelegationRule::grant(s("professor"), s("a"), p()).with_dc(Constraint::MultiLevelDelegation),
            DelegationRule::grant(s("a"), s("b"), p()),
            DelegationRule::grant(s("professor"), s("c"), p()),
        ] {
            assert!(e.delegate(r).unwrap().is_accepted());
        }
        e
    }

    #[test]
    fn local_revoke_hands_orphans_to_grantor() {
        let e = chain();
        let out = l_revoke(e.policy(), e.graph(), &p().key(), &s("a")).unwrap();
        assert_eq!(out.revoked, [EdgeId(1)]);
        assert_eq!(
            out.reparented,
            [Reparent {
                edge: EdgeId(2),
                from: s("a"),
                to: s("professor")
            }]
        );
        assert_eq!(out.graph.edge(EdgeId(2)).unwrap().gr, s("professor"));
        assert_eq!(out.trail[0].verdict, "revoked");
    }

    #[test]
    fn global_revoke_follows_the_chain() {
        let e = chain();
        let out = g_revoke(e.policy(), e.graph(), &p().key(), &s("a")).unwrap();
        assert_eq!(out.revoked, [EdgeId(1), EdgeId(2)]);
        assert_eq!(out.graph.live_ids().into_iter().collect::<Vec<_>>(), [EdgeId(3)]);
        assert_eq!(out.policy.rules().len(), 2);
    }

    #[test]
    fn revoking_nothing_is_an_error() {
        let e = chain();
        assert!(matches!(
            l_revoke(e.policy(), e.graph(), &p().key(), &s("nobody")),
            Err(RevocationError::NoSuchDelegation { .. })
        ));
    }

    #[test]
    fn modify_scheme_rejects_grant_edges() {
        let e = chain();
        let scheme: RevocationScheme = "weak local single modify".parse().unwrap();
        let err = revoke(
            e.policy(),
            e.graph(),
            e.hierarchy(),
            &s("professor"),
            &p().key(),
            Some(&s("c")),
            &scheme,
        )
        .unwrap_err();
        assert!(matches!(err, RevocationError::SchemeMismatch { edge: EdgeId(3), .. }));
    }

    #[test]
    fn select_victims_respects_plurality() {
        let e = chain();
        let key = p().key();
        let single = "weak local single delete".parse().unwrap();
        let plural = "weak local plural delete".parse().unwrap();
        let professor = s("professor");
        assert_eq!(
            select_victims(e.graph(), e.hierarchy(), &professor, &key, Some(&s("c")), &single),
            [EdgeId(3)]
        );
        assert_eq!(
            select_victims(e.graph(), e.hierarchy(), &professor, &key, None, &plural),
            [EdgeId(1), EdgeId(3)]
        );
    }
}
