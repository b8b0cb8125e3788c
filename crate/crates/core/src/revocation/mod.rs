//! Delegation graph, revocation schemes and affiliation triggers.

mod graph;
mod revoke;
mod scheme;

pub use graph::{DelegationEdge, DelegationGraph, EdgeKind, EdgeStatus};
pub use revoke::{
    fire_event, g_revoke, l_revoke, lose_permission, on_constraint_violation, on_grantor_permission_loss, revoke,
    select_victims, Reparent, RevocationOutcome,
};
pub use scheme::{
    enumerate_schemes, AffiliationTrigger, Dominance, Monotonicity, Plurality, Propagation, RevocationScheme,
    UnknownScheme,
};

use crate::policy::{EdgeId, PermissionKey, PolicyError, Subject};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RevocationError {
    #[error("no live delegation of `{key}` to `{gt}`")]
    NoSuchDelegation { gt: Subject, key: PermissionKey },
    #[error("`{revoker}` has no revocable delegation of `{key}` under the scheme")]
    NoVictim { revoker: Subject, key: PermissionKey },
    #[error("scheme `{scheme}` does not match {kind} edge {edge}")]
    SchemeMismatch {
        edge: EdgeId,
        kind: EdgeKind,
        scheme: RevocationScheme,
    },
    #[error("scheme `{scheme}` needs a target grantee")]
    MissingTarget { scheme: RevocationScheme },
    #[error(transparent)]
    Policy(#[from] PolicyError),
}
