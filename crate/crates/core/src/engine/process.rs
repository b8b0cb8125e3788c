use std::collections::BTreeSet;

use crate::audit::{AuditEntry, Step};
use crate::consistency::{check_consistency_with, resolve_in_place, DomainRelation};
use crate::constraint::{conjoin, split_level, Constraint, Date};
use crate::policy::{
    is_token, rule_intersection, DelegationRule, EdgeId, Modality, Permission, PolicyRule, Provenance, RuleId,
    RuleType, SecurityPolicy, Subject, TransferLayer,
};
use crate::revocation::{DelegationEdge, DelegationGraph, EdgeKind, EdgeStatus};

use super::channel::{Channel, DenialReason, Notification};
use super::EngineError;

/// What happens when an accepted request conflicts with existing rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ConflictMode {
    /// Insert the delegated rule above its conflict partners.
    #[default]
    ResolveByPriority,
    /// Refuse the request as inconsistent.
    Deny,
}

/// What the Nd bound counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NdCounting {
    /// Live delegation acts.
    #[default]
    LiveDelegations,
    /// Distinct grantees of live delegations.
    DistinctGrantees,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct EngineConfig {
    pub conflict_mode: ConflictMode,
    pub relation: DomainRelation,
    pub nd_counting: NdCounting,
}

/// True iff `gr` has a positive rule intersecting `p`.
pub fn check_legitimacy(sp: &SecurityPolicy, gr: &Subject, p: &Permission) -> bool {
    sp.rules_for(gr)
        .any(|r| r.modality == Modality::Positive && rule_intersection(sp.universe(), r, p).is_some())
}

/// Live edges from `gr` for the key of `p` whose constraint can still hold
/// on or after `clock`.
pub fn live_delegations<'a>(
    sp: &'a SecurityPolicy,
    graph: &'a DelegationGraph,
    gr: &'a Subject,
    p: &'a Permission,
    clock: Date,
) -> Vec<&'a DelegationEdge> {
    let key = p.key();
    graph
        .live()
        .filter(|e| e.gr == *gr && e.key == key)
        .filter(|e| e.dc.as_ref().is_none_or(|dc| sp.universe().satisfiable_from(dc, clock)))
        .collect()
}

pub fn check_multiplicity(
    sp: &SecurityPolicy,
    graph: &DelegationGraph,
    gr: &Subject,
    p: &Permission,
    clock: Date,
) -> bool {
    check_multiplicity_with(sp, graph, gr, p, clock, NdCounting::LiveDelegations)
}

/// Without an Nd entry for the key, delegation is unrestricted.
pub fn check_multiplicity_with(
    sp: &SecurityPolicy,
    graph: &DelegationGraph,
    gr: &Subject,
    p: &Permission,
    clock: Date,
    counting: NdCounting,
) -> bool {
    let Some(nd) = sp.nd(&p.key()) else {
        return true;
    };
    let live = live_delegations(sp, graph, gr, p, clock);
    let count = match counting {
        NdCounting::LiveDelegations => live.len(),
        NdCounting::DistinctGrantees => live.iter().map(|e| &e.gt).collect::<BTreeSet<_>>().len(),
    };
    (count as u64) < u64::from(nd)
}

/// `holder` owns an untransferred positive base rule intersecting `p`.
fn owns_base(sp: &SecurityPolicy, holder: &Subject, p: &Permission) -> bool {
    sp.rules_for(holder).any(|r| {
        r.is_base()
            && r.transfers.is_empty()
            && r.modality == Modality::Positive
            && rule_intersection(sp.universe(), r, p).is_some()
    })
}

/// Owners may always delegate. Other holders need a chain of live
/// multi-level edges reaching an owner.
pub fn redelegation_allowed(sp: &SecurityPolicy, graph: &DelegationGraph, holder: &Subject, p: &Permission) -> bool {
    let mut failed = BTreeSet::new();
    chain_allows(sp, graph, holder, p, &mut failed)
}

fn chain_allows(
    sp: &SecurityPolicy,
    graph: &DelegationGraph,
    holder: &Subject,
    p: &Permission,
    failed: &mut BTreeSet<Subject>,
) -> bool {
    if owns_base(sp, holder, p) {
        return true;
    }
    if !failed.insert(holder.clone()) {
        return false;
    }
    let key = p.key();
    let incoming: Vec<&DelegationEdge> = graph.live_to(holder, &key).filter(|e| e.multi_level).collect();
    let allowed = incoming.into_iter().any(|e| chain_allows(sp, graph, &e.gr, p, failed));
    if allowed {
        failed.remove(holder);
    }
    allowed
}

/// The base rule a transfer from `gr` would move.
pub fn transfer_source<'a>(sp: &'a SecurityPolicy, gr: &'a Subject, p: &Permission) -> Option<&'a PolicyRule> {
    sp.rules_for(gr)
        .find(|r| r.is_base() && r.modality == Modality::Positive && rule_intersection(sp.universe(), r, p).is_some())
}

/// Result of one DP cycle.
#[derive(Debug, Clone)]
pub struct Processed {
    pub policy: SecurityPolicy,
    pub graph: DelegationGraph,
    pub channel: Channel,
    pub notification: Notification,
    pub trail: Vec<AuditEntry>,
}

/// Pops one request and either applies it or drops it with a reason.
///
/// Checks run structural, legitimacy, multiplicity, consistency. A denied
/// request leaves policy and graph untouched.
pub fn process_request(
    sp: &SecurityPolicy,
    graph: &DelegationGraph,
    channel: &Channel,
    clock: Date,
    config: &EngineConfig,
) -> Result<Processed, EngineError> {
    let mut channel = channel.clone();
    let request = channel.inbox.pop_front().ok_or(EngineError::EmptyInbox)?;
    let mut trail = vec![AuditEntry::new(
        Step::DpRead,
        &[&request.gr, &request.gt],
        request.t.to_string(),
    )];
    match admit(sp, graph, &request, clock, config, &mut trail)? {
        Ok(accepted) => {
            let (step, subjects) = if request.t == RuleType::GrtReq {
                (Step::AddRule, vec![&request.gt])
            } else {
                (Step::ModifyRule, vec![&request.gr, &request.gt])
            };
            trail.push(AuditEntry::new(step, &subjects, "accepted").with_rule(Some(&accepted.rule)));
            for step in [Step::DpWrite, Step::GtRead] {
                trail.push(AuditEntry::new(step, &[&request.gt], "accepted").with_rule(Some(&accepted.rule)));
            }
            let notification = Notification::accepted(request.gt.clone(), accepted.rule, accepted.edge);
            channel.outbox.push_back(notification.clone());
            Ok(Processed {
                policy: accepted.policy,
                graph: accepted.graph,
                channel,
                notification,
                trail,
            })
        }
        Err(reason) => {
            let verdict = reason.to_string();
            trail.push(AuditEntry::new(
                Step::Deny,
                &[&request.gr, &request.gt],
                verdict.clone(),
            ));
            for step in [Step::DpWrite, Step::GrRead] {
                trail.push(AuditEntry::new(step, &[&request.gr], verdict.clone()));
            }
            let notification = Notification::denied(request.gr.clone(), reason);
            channel.outbox.push_back(notification.clone());
            channel.dropped.push_back(request);
            Ok(Processed {
                policy: sp.clone(),
                graph: graph.clone(),
                channel,
                notification,
                trail,
            })
        }
    }
}

struct Accepted {
    policy: SecurityPolicy,
    graph: DelegationGraph,
    rule: RuleId,
    edge: EdgeId,
}

/// Delegation constraint without the level flag, and the flag.
fn structural_check(request: &DelegationRule) -> Result<(Option<Constraint>, bool), DenialReason> {
    if request.gr == request.gt {
        return Err(DenialReason::SelfDelegation);
    }
    if request.m == Modality::Negative || request.p.modality == Modality::Negative {
        return Err(DenialReason::NegativePermission);
    }
    let p = &request.p;
    let tokens_ok = is_token(&p.action) && is_token(&p.object) && is_token(&p.rtype);
    let events_ok = [&p.event, &request.de].into_iter().flatten().all(|e| is_token(&e.name));
    let constraint_ok = p
        .constraint
        .as_ref()
        .is_none_or(|c| c.validate().is_ok() && !c.contains_level());
    if !tokens_ok || !events_ok || !constraint_ok {
        return Err(DenialReason::Malformed);
    }
    if request.t == RuleType::TsfOb && request.de.is_none() {
        return Err(DenialReason::Malformed);
    }
    match &request.dc {
        None => Ok((None, false)),
        Some(dc) => {
            let (rest, multi_level) = split_level(dc).map_err(|_| DenialReason::Malformed)?;
            if rest.as_ref().is_some_and(|c| c.validate().is_err()) {
                return Err(DenialReason::Malformed);
            }
            Ok((rest, multi_level))
        }
    }
}

fn transfer_permitted(sp: &SecurityPolicy, graph: &DelegationGraph, request: &DelegationRule) -> bool {
    let Some(source) = transfer_source(sp, &request.gr, &request.p) else {
        return false;
    };
    let key = request.p.key();
    let outgoing: Vec<&DelegationEdge> = graph.live_from(&request.gr, &key).collect();
    if outgoing.iter().any(|e| e.kind.is_transfer()) {
        return false;
    }
    if outgoing.is_empty() {
        return true;
    }
    // Existing grants must stay backed once the rule moves.
    let mut after = sp.clone();
    if let Some(rule) = after.rule_mut(&source.id) {
        rule.subject = request.gt.clone();
    }
    check_legitimacy(&after, &request.gr, &Permission::from(&key))
}

fn admit(
    sp: &SecurityPolicy,
    graph: &DelegationGraph,
    request: &DelegationRule,
    clock: Date,
    config: &EngineConfig,
    trail: &mut Vec<AuditEntry>,
) -> Result<Result<Accepted, DenialReason>, EngineError> {
    let (dc, multi_level) = match structural_check(request) {
        Ok(parts) => parts,
        Err(reason) => return Ok(Err(reason)),
    };
    let key = request.p.key();
    let transfer = request.t != RuleType::GrtReq;
    let legitimate = check_legitimacy(sp, &request.gr, &request.p)
        && redelegation_allowed(sp, graph, &request.gr, &request.p)
        && !graph.reaches(&request.gt, &request.gr, &key)
        && (!transfer || transfer_permitted(sp, graph, request));
    trail.push(AuditEntry::new(
        Step::DlgLegitimacy,
        &[&request.gr],
        if legitimate { "pass" } else { "fail" },
    ));
    if !legitimate {
        return Ok(Err(DenialReason::Illegitimate));
    }
    if !check_multiplicity_with(sp, graph, &request.gr, &request.p, clock, config.nd_counting) {
        return Ok(Err(DenialReason::NdExceeded));
    }

    let mut policy = sp.clone();
    let edge_id = graph.peek_id();
    let candidate = if transfer {
        let Some(source) = transfer_source(sp, &request.gr, &request.p) else {
            return Ok(Err(DenialReason::Illegitimate));
        };
        let mut rule = source.clone();
        rule.transfers.push(TransferLayer {
            edge: edge_id,
            from: request.gr.clone(),
            dc: dc.clone(),
            prior_constraint: rule.constraint.clone(),
            prior_priority: rule.priority.clone(),
        });
        rule.subject = request.gt.clone();
        rule.constraint = conjoin(rule.constraint.take(), dc.clone());
        rule
    } else {
        let p = &request.p;
        PolicyRule {
            id: policy.fresh_rule_id(),
            rtype: p.rtype.clone(),
            modality: Modality::Positive,
            subject: request.gt.clone(),
            action: p.action.clone(),
            object: p.object.clone(),
            constraint: conjoin(p.constraint.clone(), dc.clone()),
            event: p.event.clone(),
            priority: None,
            provenance: Provenance::Delegated { edge: edge_id },
            transfers: Vec::new(),
        }
    };
    let report = check_consistency_with(&policy, config.relation, &candidate);
    if !report.is_consistent() && config.conflict_mode == ConflictMode::Deny {
        return Ok(Err(DenialReason::Inconsistent));
    }
    let rule_id = candidate.id.clone();
    resolve_in_place(&mut policy, candidate, &report)?;

    let mut graph = graph.clone();
    let inserted = graph.insert(DelegationEdge {
        id: edge_id,
        gr: request.gr.clone(),
        gt: request.gt.clone(),
        key,
        rule: rule_id.clone(),
        kind: EdgeKind::from_rule_type(request.t),
        dc,
        multi_level,
        event: request.de.clone(),
        status: EdgeStatus::Live,
    });
    debug_assert_eq!(inserted, edge_id);
    Ok(Ok(Accepted {
        policy,
        graph,
        rule: rule_id,
        edge: edge_id,
    }))
}
