use std::fmt;

use crate::constraint::Constraint;
use crate::policy::{DelegationRule, EventSpec, Modality, Permission, RuleType, Subject};

use super::{DenialReason, EngineError};

/// How the parties agree before a request reaches the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgreementMode {
    /// The grantor submits without asking the grantee.
    Spontaneous,
    /// The grantee claims, the grantor approves.
    GranteeInitiated,
    /// The grantor proposes, the grantee approves.
    GrantorInitiated,
}

impl AgreementMode {
    pub const ALL: [AgreementMode; 3] = [
        AgreementMode::Spontaneous,
        AgreementMode::GranteeInitiated,
        AgreementMode::GrantorInitiated,
    ];
}

impl fmt::Display for AgreementMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgreementMode::Spontaneous => "spontaneous",
            AgreementMode::GranteeInitiated => "grantee-initiated",
            AgreementMode::GrantorInitiated => "grantor-initiated",
        })
    }
}

impl std::str::FromStr for AgreementMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgreementMode::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| format!("unknown agreement mode `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SessionState {
    Idle,
    Claimed,
    Approved,
    Submitted,
    Decided,
}

impl SessionState {
    pub const ALL: [SessionState; 5] = [
        SessionState::Idle,
        SessionState::Claimed,
        SessionState::Approved,
        SessionState::Submitted,
        SessionState::Decided,
    ];
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionState::Idle => "idle",
            SessionState::Claimed => "claimed",
            SessionState::Approved => "approved",
            SessionState::Submitted => "submitted",
            SessionState::Decided => "decided",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SessionEvent {
    Claim,
    Approve,
    Refuse,
    Submit,
    Decide,
}

impl SessionEvent {
    pub const ALL: [SessionEvent; 5] = [
        SessionEvent::Claim,
        SessionEvent::Approve,
        SessionEvent::Refuse,
        SessionEvent::Submit,
        SessionEvent::Decide,
    ];
}

impl fmt::Display for SessionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionEvent::Claim => "claim",
            SessionEvent::Approve => "approve",
            SessionEvent::Refuse => "refuse",
            SessionEvent::Submit => "submit",
            SessionEvent::Decide => "decide",
        })
    }
}

/// The agreement choreography. `None` marks an illegal transition.
pub fn transition(mode: AgreementMode, state: SessionState, event: SessionEvent) -> Option<SessionState> {
    use SessionEvent as E;
    use SessionState as S;
    let spontaneous = mode == AgreementMode::Spontaneous;
    match (state, event) {
        (S::Idle, E::Submit) if spontaneous => Some(S::Submitted),
        (S::Idle, E::Claim) if !spontaneous => Some(S::Claimed),
        (S::Claimed, E::Approve) if !spontaneous => Some(S::Approved),
        (S::Claimed, E::Refuse) if !spontaneous => Some(S::Decided),
        (S::Approved, E::Submit) if !spontaneous => Some(S::Submitted),
        (S::Submitted, E::Decide) => Some(S::Decided),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionOutcome {
    Accepted,
    Denied(DenialReason),
    /// The counterpart refused; the request never reached the DP.
    DeniedByParty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementSession {
    pub mode: AgreementMode,
    pub state: SessionState,
    pub gr: Subject,
    pub gt: Subject,
    pub p: Permission,
    pub dc: Option<Constraint>,
    pub outcome: Option<SessionOutcome>,
}

impl AgreementSession {
    pub fn new(mode: AgreementMode, gr: Subject, gt: Subject, p: Permission, dc: Option<Constraint>) -> Self {
        AgreementSession {
            mode,
            state: SessionState::Idle,
            gr,
            gt,
            p,
            dc,
            outcome: None,
        }
    }

    pub fn apply(&self, event: SessionEvent) -> Result<AgreementSession, EngineError> {
        let state = transition(self.mode, self.state, event).ok_or(EngineError::InvalidTransition {
            mode: self.mode,
            state: self.state,
            event,
        })?;
        let mut next = self.clone();
        next.state = state;
        if event == SessionEvent::Refuse {
            next.outcome = Some(SessionOutcome::DeniedByParty);
        }
        Ok(next)
    }

    /// The party that opens the agreement.
    pub fn initiator(&self) -> &Subject {
        match self.mode {
            AgreementMode::GranteeInitiated => &self.gt,
            _ => &self.gr,
        }
    }

    pub fn counterpart(&self) -> &Subject {
        match self.mode {
            AgreementMode::GranteeInitiated => &self.gr,
            _ => &self.gt,
        }
    }

    /// The request the grantor writes to the channel.
    pub fn to_rule(&self, t: RuleType, de: Option<EventSpec>) -> DelegationRule {
        DelegationRule {
            t,
            m: Modality::Positive,
            gr: self.gr.clone(),
            gt: self.gt.clone(),
            p: self.p.clone(),
            dc: self.dc.clone(),
            de,
        }
    }
}

pub fn dlg_claim(session: &AgreementSession) -> Result<AgreementSession, EngineError> {
    session.apply(SessionEvent::Claim)
}

pub fn dlg_approval(session: &AgreementSession, approve: bool) -> Result<AgreementSession, EngineError> {
    session.apply(if approve {
        SessionEvent::Approve
    } else {
        SessionEvent::Refuse
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session(mode: AgreementMode) -> AgreementSession {
        AgreementSession::new(
            mode,
            Subject::new("professor").unwrap(),
            Subject::new("assistant").unwrap(),
            Permission::new("present", "course"),
            None,
        )
    }

    #[test]
    fn claim_then_approve() {
        for mode in [AgreementMode::GranteeInitiated, AgreementMode::GrantorInitiated] {
            let claimed = dlg_claim(&session(mode)).unwrap();
            assert_eq!(claimed.state, SessionState::Claimed);
            let approved = dlg_approval(&claimed, true).unwrap();
            assert_eq!(approved.state, SessionState::Approved);
            assert!(dlg_approval(&approved, true).is_err());
        }
    }

    #[test]
    fn spontaneous_cannot_claim() {
        assert!(matches!(
            dlg_claim(&session(AgreementMode::Spontaneous)),
            Err(EngineError::InvalidTransition { .. })
        ));
    }

    #[test]
    fn refusal_decides() {
        let claimed = dlg_claim(&session(AgreementMode::GranteeInitiated)).unwrap();
        let refused = dlg_approval(&claimed, false).unwrap();
        assert_eq!(refused.state, SessionState::Decided);
        assert_eq!(refused.outcome, Some(SessionOutcome::DeniedByParty));
    }

    #[test]
    fn initiator_depends_on_mode() {
        let s = session(AgreementMode::GranteeInitiated);
        assert_eq!(s.initiator().as_str(), "assistant");
        assert_eq!(
            session(AgreementMode::GrantorInitiated).initiator().as_str(),
            "professor"
        );
    }
}
