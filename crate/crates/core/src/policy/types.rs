use std::collections::BTreeMap;
use std::fmt;

use crate::constraint::Constraint;

use super::PolicyError;

/// Tokens (subjects, actions, objects, event names) are non-empty runs of
/// ASCII letters, digits, `_`, `-`, `.` and `@`.
pub fn is_token(text: &str) -> bool {
    !text.is_empty()
        && text
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '@'))
}

pub(crate) fn check_token(what: &'static str, text: &str) -> Result<(), PolicyError> {
    if is_token(text) {
        Ok(())
    } else {
        Err(PolicyError::InvalidToken {
            what,
            text: text.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subject(String);

impl Subject {
    pub fn new(id: impl Into<String>) -> Result<Self, PolicyError> {
        let id = id.into();
        check_token("subject", &id)?;
        Ok(Subject(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for Subject {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Subject::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Modality {
    Positive,
    Negative,
}

impl Modality {
    pub fn negate(self) -> Self {
        match self {
            Modality::Positive => Modality::Negative,
            Modality::Negative => Modality::Positive,
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Positive => "positive",
            Modality::Negative => "negative",
        })
    }
}

impl std::str::FromStr for Modality {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(Modality::Positive),
            "negative" => Ok(Modality::Negative),
            _ => Err(PolicyError::InvalidToken {
                what: "modality",
                text: s.to_string(),
            }),
        }
    }
}

/// Kind of delegation request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleType {
    GrtReq,
    TsfReq,
    TsfOb,
}

impl fmt::Display for RuleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleType::GrtReq => "grt-req",
            RuleType::TsfReq => "tsf-req",
            RuleType::TsfOb => "tsf-ob",
        })
    }
}

impl std::str::FromStr for RuleType {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grt-req" => Ok(RuleType::GrtReq),
            "tsf-req" => Ok(RuleType::TsfReq),
            "tsf-ob" => Ok(RuleType::TsfOb),
            _ => Err(PolicyError::InvalidToken {
                what: "rule type",
                text: s.to_string(),
            }),
        }
    }
}

/// Named event with an optional payload.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EventSpec {
    pub name: String,
    pub payload: BTreeMap<String, String>,
}

impl EventSpec {
    pub fn new(name: impl Into<String>) -> Result<Self, PolicyError> {
        let name = name.into();
        check_token("event", &name)?;
        Ok(EventSpec {
            name,
            payload: BTreeMap::new(),
        })
    }
}

impl fmt::Display for EventSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// The `(action, object)` pair used to count and revoke delegations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PermissionKey {
    pub action: String,
    pub object: String,
}

impl PermissionKey {
    pub fn new(action: impl Into<String>, object: impl Into<String>) -> Self {
        PermissionKey {
            action: action.into(),
            object: object.into(),
        }
    }
}

impl fmt::Display for PermissionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.action, self.object)
    }
}

/// The delegable unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permission {
    /// Free-form rule-kind tag such as `req`.
    pub rtype: String,
    pub modality: Modality,
    pub action: String,
    pub object: String,
    pub constraint: Option<Constraint>,
    pub event: Option<EventSpec>,
}

impl Permission {
    /// A positive `req` permission without constraint or event.
    pub fn new(action: impl Into<String>, object: impl Into<String>) -> Self {
        Permission {
            rtype: "req".into(),
            modality: Modality::Positive,
            action: action.into(),
            object: object.into(),
            constraint: None,
            event: None,
        }
    }

    pub fn with_constraint(mut self, constraint: Constraint) -> Self {
        self.constraint = Some(constraint);
        self
    }

    pub fn key(&self) -> PermissionKey {
        PermissionKey::new(&self.action, &self.object)
    }
}

impl From<&PermissionKey> for Permission {
    fn from(key: &PermissionKey) -> Self {
        Permission::new(&key.action, &key.object)
    }
}

/// A delegation request `(t, m, gr, gt, p, dc, de)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DelegationRule {
    pub t: RuleType,
    pub m: Modality,
    pub gr: Subject,
    pub gt: Subject,
    pub p: Permission,
    pub dc: Option<Constraint>,
    pub de: Option<EventSpec>,
}

impl DelegationRule {
    pub fn new(t: RuleType, gr: Subject, gt: Subject, p: Permission) -> Self {
        DelegationRule {
            t,
            m: Modality::Positive,
            gr,
            gt,
            p,
            dc: None,
            de: None,
        }
    }

    pub fn grant(gr: Subject, gt: Subject, p: Permission) -> Self {
        Self::new(RuleType::GrtReq, gr, gt, p)
    }

    pub fn transfer(gr: Subject, gt: Subject, p: Permission) -> Self {
        Self::new(RuleType::TsfReq, gr, gt, p)
    }

    pub fn obligation(gr: Subject, gt: Subject, p: Permission, de: EventSpec) -> Self {
        let mut rule = Self::new(RuleType::TsfOb, gr, gt, p);
        rule.de = Some(de);
        rule
    }

    pub fn with_dc(mut self, dc: Constraint) -> Self {
        self.dc = Some(dc);
        self
    }
}

macro_rules! string_id {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                $name(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

string_id!(
    /// Identifier of a rule in the security policy.
    RuleId
);
string_id!(PriorityLabel);

/// Identifier of a delegation edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u64);

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Base,
    /// Added by an accepted grant along the given edge.
    Delegated {
        edge: EdgeId,
    },
}

/// One hand-over of a base rule. Popping the last layer undoes a transfer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransferLayer {
    pub edge: EdgeId,
    /// Holder before the transfer.
    pub from: Subject,
    /// Delegation constraint of the transfer, level flag removed.
    pub dc: Option<Constraint>,
    pub prior_constraint: Option<Constraint>,
    pub prior_priority: Option<PriorityLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PolicyRule {
    pub id: RuleId,
    pub rtype: String,
    pub modality: Modality,
    pub subject: Subject,
    pub action: String,
    pub object: String,
    pub constraint: Option<Constraint>,
    pub event: Option<EventSpec>,
    pub priority: Option<PriorityLabel>,
    pub provenance: Provenance,
    /// Transfers applied to this rule, oldest first.
    pub transfers: Vec<TransferLayer>,
}

impl PolicyRule {
    /// A base rule without constraint, event or priority.
    pub fn base(
        id: impl Into<String>,
        modality: Modality,
        subject: Subject,
        action: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        PolicyRule {
            id: RuleId::new(id),
            rtype: "req".into(),
            modality,
            subject,
            action: action.into(),
            object: object.into(),
            constraint: None,
            event: None,
            priority: None,
            provenance: Provenance::Base,
            transfers: Vec::new(),
        }
    }

    pub fn with_constraint(mut self, constraint: Constraint) -> Self {
        self.constraint = Some(constraint);
        self
    }

    pub fn key(&self) -> PermissionKey {
        PermissionKey::new(&self.action, &self.object)
    }

    /// Subject that owned the rule before any transfer.
    pub fn owner(&self) -> &Subject {
        self.transfers.first().map_or(&self.subject, |l| &l.from)
    }

    pub fn is_base(&self) -> bool {
        self.provenance == Provenance::Base
    }
}

/// Tuple form `(type, modality, subject, action, object[, constraint][, event])`.
impl fmt::Display for PolicyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {}, {}",
            self.rtype, self.modality, self.subject, self.action, self.object
        )?;
        if let Some(c) = &self.constraint {
            write!(f, ", {c}")?;
        }
        if let Some(e) = &self.event {
            write!(f, ", {e}")?;
        }
        if let Some(p) = &self.priority {
            write!(f, ", {p}")?;
        }
        f.write_str(")")
    }
}
