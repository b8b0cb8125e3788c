//! Delegation processing: agreement sessions, the request channel, the DP
//! checks and a stateful facade over policy snapshots.

mod channel;
mod process;
mod session;

pub use channel::{gr_write, Channel, DenialReason, Notification, Verdict};
pub use process::{
    check_legitimacy, check_multiplicity, check_multiplicity_with, live_delegations, process_request,
    redelegation_allowed, transfer_source, ConflictMode, EngineConfig, NdCounting, Processed,
};
pub use session::{
    dlg_approval, dlg_claim, transition, AgreementMode, AgreementSession, SessionEvent, SessionOutcome, SessionState,
};

use crate::audit::{AuditEntry, AuditLog, Step};
use crate::constraint::{Constraint, Date, EvalContext};
use crate::policy::{
    Decision, DelegationRule, EdgeId, EventSpec, GrantorHierarchy, Permission, PermissionKey, PolicyError, RuleType,
    SecurityPolicy, Subject,
};
use crate::revocation::{self, DelegationGraph, Reparent, RevocationError, RevocationOutcome, RevocationScheme};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("no request waiting in the channel")]
    EmptyInbox,
    #[error("{mode} session in state {state} cannot {event}")]
    InvalidTransition {
        mode: AgreementMode,
        state: SessionState,
        event: SessionEvent,
    },
    #[error("session in state {state} has not been approved")]
    SessionNotApproved { state: SessionState },
    #[error("unknown session {id}")]
    UnknownSession { id: usize },
    #[error("clock cannot move back from {clock} to {requested}")]
    ClockBackwards { clock: Date, requested: Date },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Revocation(#[from] RevocationError),
}

/// Edges affected by a revocation call.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RevocationReport {
    pub revoked: Vec<EdgeId>,
    pub reparented: Vec<Reparent>,
}

/// Single writer over the current policy, graph and channel. Every
/// operation replaces the snapshots atomically and appends to the audit
/// log; the clock moves only through [`Engine::tick`].
#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    policy: SecurityPolicy,
    graph: DelegationGraph,
    hierarchy: GrantorHierarchy,
    channel: Channel,
    sessions: Vec<AgreementSession>,
    clock: Date,
    audit: AuditLog,
}

impl Engine {
    pub fn new(policy: SecurityPolicy, hierarchy: GrantorHierarchy) -> Self {
        Self::with_config(policy, hierarchy, EngineConfig::default())
    }

    /// The clock starts on the first day of the policy's universe.
    pub fn with_config(policy: SecurityPolicy, hierarchy: GrantorHierarchy, config: EngineConfig) -> Self {
        let clock = policy.universe().first_day();
        Engine {
            config,
            policy,
            graph: DelegationGraph::new(),
            hierarchy,
            channel: Channel::new(),
            sessions: Vec::new(),
            clock,
            audit: AuditLog::new(),
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn policy(&self) -> &SecurityPolicy {
        &self.policy
    }

    pub fn graph(&self) -> &DelegationGraph {
        &self.graph
    }

    pub fn hierarchy(&self) -> &GrantorHierarchy {
        &self.hierarchy
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn clock(&self) -> Date {
        self.clock
    }

    pub fn audit(&self) -> &AuditLog {
        &self.audit
    }

    pub fn session(&self, id: usize) -> Option<&AgreementSession> {
        self.sessions.get(id)
    }

    fn log(&mut self, entries: impl IntoIterator<Item = AuditEntry>) {
        self.audit.extend(self.clock, entries);
    }

    pub fn open_session(
        &mut self,
        mode: AgreementMode,
        gr: Subject,
        gt: Subject,
        p: Permission,
        dc: Option<Constraint>,
    ) -> usize {
        self.sessions.push(AgreementSession::new(mode, gr, gt, p, dc));
        self.sessions.len() - 1
    }

    fn session_checked(&self, id: usize) -> Result<&AgreementSession, EngineError> {
        self.sessions.get(id).ok_or(EngineError::UnknownSession { id })
    }

    pub fn claim(&mut self, id: usize) -> Result<(), EngineError> {
        let next = dlg_claim(self.session_checked(id)?)?;
        self.log([AuditEntry::new(
            Step::DlgClaim,
            &[next.initiator(), next.counterpart()],
            "claimed",
        )]);
        self.sessions[id] = next;
        Ok(())
    }

    pub fn approve(&mut self, id: usize, approve: bool) -> Result<(), EngineError> {
        let next = dlg_approval(self.session_checked(id)?, approve)?;
        let verdict = if approve { "approved" } else { "refused" };
        self.log([AuditEntry::new(
            Step::DlgApproval,
            &[next.counterpart(), next.initiator()],
            verdict,
        )]);
        self.sessions[id] = next;
        Ok(())
    }

    /// Writes the session's request to the channel and processes it.
    pub fn submit_session(
        &mut self,
        id: usize,
        t: RuleType,
        de: Option<EventSpec>,
    ) -> Result<Notification, EngineError> {
        let session = self.session_checked(id)?.clone();
        let submitted = session.apply(SessionEvent::Submit)?;
        let rule = session.to_rule(t, de);
        self.channel.write(rule.clone(), Some(&session))?;
        self.sessions[id] = submitted;
        self.log([AuditEntry::new(
            Step::GrWrite,
            &[&rule.gr, &rule.gt],
            rule.t.to_string(),
        )]);
        let notification = self.process_next()?;
        let mut decided = self.sessions[id].apply(SessionEvent::Decide)?;
        decided.outcome = Some(match notification.reason {
            None => SessionOutcome::Accepted,
            Some(reason) => SessionOutcome::Denied(reason),
        });
        self.sessions[id] = decided;
        Ok(notification)
    }

    /// Spontaneous submission followed by processing.
    pub fn delegate(&mut self, rule: DelegationRule) -> Result<Notification, EngineError> {
        self.log([AuditEntry::new(
            Step::GrWrite,
            &[&rule.gr, &rule.gt],
            rule.t.to_string(),
        )]);
        self.channel.write(rule, None)?;
        self.process_next()
    }

    /// Processes the oldest request in the channel.
    pub fn process_next(&mut self) -> Result<Notification, EngineError> {
        let out = process_request(&self.policy, &self.graph, &self.channel, self.clock, &self.config)?;
        self.policy = out.policy;
        self.graph = out.graph;
        self.channel = out.channel;
        self.log(out.trail);
        Ok(out.notification)
    }

    fn install(&mut self, outcome: RevocationOutcome) -> RevocationReport {
        self.policy = outcome.policy;
        self.graph = outcome.graph;
        self.log(outcome.trail);
        RevocationReport {
            revoked: outcome.revoked,
            reparented: outcome.reparented,
        }
    }

    pub fn revoke(
        &mut self,
        revoker: &Subject,
        key: &PermissionKey,
        target: Option<&Subject>,
        scheme: &RevocationScheme,
    ) -> Result<RevocationReport, EngineError> {
        let outcome = revocation::revoke(&self.policy, &self.graph, &self.hierarchy, revoker, key, target, scheme)?;
        Ok(self.install(outcome))
    }

    /// Advances the clock and expires delegations that can no longer hold.
    pub fn tick(&mut self, to: Date) -> Result<RevocationReport, EngineError> {
        if to < self.clock {
            return Err(EngineError::ClockBackwards {
                clock: self.clock,
                requested: to,
            });
        }
        self.clock = to;
        let outcome = revocation::on_constraint_violation(&self.policy, &self.graph, to)?;
        Ok(self.install(outcome))
    }

    /// `subject` loses its base permission for `key`.
    pub fn lose(&mut self, subject: &Subject, key: &PermissionKey) -> Result<RevocationReport, EngineError> {
        let outcome = revocation::lose_permission(&self.policy, &self.graph, subject, key)?;
        Ok(self.install(outcome))
    }

    pub fn fire_event(&mut self, name: &str) -> Result<RevocationReport, EngineError> {
        let outcome = revocation::fire_event(&self.policy, &self.graph, name)?;
        Ok(self.install(outcome))
    }

    /// Decision at the current clock with the given locations and attributes.
    pub fn query<L, A>(&self, subject: &Subject, action: &str, object: &str, locations: L, attributes: A) -> Decision
    where
        L: IntoIterator<Item = String>,
        A: IntoIterator<Item = String>,
    {
        let ctx = EvalContext {
            now: self.clock,
            locations: locations.into_iter().collect(),
            attributes: attributes.into_iter().collect(),
        };
        self.policy.decide(subject, action, object, &ctx)
    }
}
