use std::collections::VecDeque;
use std::fmt;

use crate::policy::{DelegationRule, EdgeId, RuleId, Subject};

use super::session::{AgreementMode, AgreementSession, SessionState};
use super::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DenialReason {
    Illegitimate,
    NdExceeded,
    Inconsistent,
    Malformed,
    SelfDelegation,
    NegativePermission,
}

impl fmt::Display for DenialReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DenialReason::Illegitimate => "illegitimate",
            DenialReason::NdExceeded => "nd-exceeded",
            DenialReason::Inconsistent => "inconsistent",
            DenialReason::Malformed => "malformed",
            DenialReason::SelfDelegation => "self-delegation",
            DenialReason::NegativePermission => "negative-permission",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Accepted,
    Denied,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Accepted => "accepted",
            Verdict::Denied => "denied",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Notification {
    pub recipient: Subject,
    pub verdict: Verdict,
    pub reason: Option<DenialReason>,
    pub rule: Option<RuleId>,
    pub edge: Option<EdgeId>,
}

impl Notification {
    pub fn accepted(recipient: Subject, rule: RuleId, edge: EdgeId) -> Self {
        Notification {
            recipient,
            verdict: Verdict::Accepted,
            reason: None,
            rule: Some(rule),
            edge: Some(edge),
        }
    }

    pub fn denied(recipient: Subject, reason: DenialReason) -> Self {
        Notification {
            recipient,
            verdict: Verdict::Denied,
            reason: Some(reason),
            rule: None,
            edge: None,
        }
    }

    pub fn is_accepted(&self) -> bool {
        self.verdict == Verdict::Accepted
    }
}

impl fmt::Display for Notification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.reason {
            Some(reason) => write!(f, "denied {reason}"),
            None => {
                f.write_str("accepted")?;
                if let Some(rule) = &self.rule {
                    write!(f, " rule={rule}")?;
                }
                if let Some(edge) = self.edge {
                    write!(f, " edge={edge}")?;
                }
                Ok(())
            }
        }
    }
}

/// In-memory queues between parties and the DP.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Channel {
    pub inbox: VecDeque<DelegationRule>,
    pub outbox: VecDeque<Notification>,
    pub dropped: VecDeque<DelegationRule>,
}

impl Channel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a request, checking the enclosing session if there is one.
    pub fn write(&mut self, rule: DelegationRule, session: Option<&AgreementSession>) -> Result<(), EngineError> {
        if let Some(s) = session {
            let ready = match s.mode {
                AgreementMode::Spontaneous => s.state == SessionState::Idle,
                _ => s.state == SessionState::Approved,
            };
            if !ready {
                return Err(EngineError::SessionNotApproved { state: s.state });
            }
        }
        self.inbox.push_back(rule);
        Ok(())
    }
}

/// The grantor puts a request into the channel.
pub fn gr_write(
    channel: &Channel,
    rule: DelegationRule,
    session: Option<&AgreementSession>,
) -> Result<Channel, EngineError> {
    let mut next = channel.clone();
    next.write(rule, session)?;
    Ok(next)
}
