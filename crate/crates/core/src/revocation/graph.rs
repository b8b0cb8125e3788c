use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::constraint::Constraint;
use crate::policy::{EdgeId, EventSpec, PermissionKey, RuleId, RuleType, Subject};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Grant,
    Transfer,
    TransferOb,
}

impl EdgeKind {
    pub fn from_rule_type(t: RuleType) -> Self {
        match t {
            RuleType::GrtReq => EdgeKind::Grant,
            RuleType::TsfReq => EdgeKind::Transfer,
            RuleType::TsfOb => EdgeKind::TransferOb,
        }
    }

    pub fn is_transfer(self) -> bool {
        self != EdgeKind::Grant
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::Grant => "grant",
            EdgeKind::Transfer => "transfer",
            EdgeKind::TransferOb => "transfer-ob",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeStatus {
    Live,
    Revoked,
    Expired,
}

impl fmt::Display for EdgeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeStatus::Live => "live",
            EdgeStatus::Revoked => "revoked",
            EdgeStatus::Expired => "expired",
        })
    }
}

/// One accepted delegation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelegationEdge {
    pub id: EdgeId,
    pub gr: Subject,
    pub gt: Subject,
    pub key: PermissionKey,
    /// Rule added (grant) or moved (transfer) by the delegation.
    pub rule: RuleId,
    pub kind: EdgeKind,
    /// Delegation constraint without the level flag.
    pub dc: Option<Constraint>,
    pub multi_level: bool,
    pub event: Option<EventSpec>,
    pub status: EdgeStatus,
}

impl DelegationEdge {
    pub fn is_live(&self) -> bool {
        self.status == EdgeStatus::Live
    }
}

impl fmt::Display for DelegationEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}->{} {} {} rule={} {}",
            self.id, self.gr, self.gt, self.kind, self.key, self.rule, self.status
        )?;
        if self.multi_level {
            f.write_str(" multi-level")?;
        }
        if let Some(dc) = &self.dc {
            write!(f, " IF {dc}")?;
        }
        Ok(())
    }
}

/// Who delegated what to whom. Edges are never deleted; revocation only
/// changes their status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelegationGraph {
    edges: BTreeMap<EdgeId, DelegationEdge>,
    next_id: u64,
}

impl Default for DelegationGraph {
    fn default() -> Self {
        DelegationGraph {
            edges: BTreeMap::new(),
            next_id: 1,
        }
    }
}

impl DelegationGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Id the next inserted edge will receive.
    pub fn peek_id(&self) -> EdgeId {
        EdgeId(self.next_id)
    }

    /// Inserts a live edge under the next id. The edge's own id is ignored.
    pub fn insert(&mut self, mut edge: DelegationEdge) -> EdgeId {
        let id = EdgeId(self.next_id);
        self.next_id += 1;
        edge.id = id;
        edge.status = EdgeStatus::Live;
        self.edges.insert(id, edge);
        id
    }

    pub fn edge(&self, id: EdgeId) -> Option<&DelegationEdge> {
        self.edges.get(&id)
    }

    /// All edges in id order.
    pub fn edges(&self) -> impl Iterator<Item = &DelegationEdge> {
        self.edges.values()
    }

    pub fn live(&self) -> impl Iterator<Item = &DelegationEdge> {
        self.edges.values().filter(|e| e.is_live())
    }

    pub fn live_ids(&self) -> BTreeSet<EdgeId> {
        self.live().map(|e| e.id).collect()
    }

    pub fn live_from<'a>(
        &'a self,
        gr: &'a Subject,
        key: &'a PermissionKey,
    ) -> impl Iterator<Item = &'a DelegationEdge> + 'a {
        self.live().filter(move |e| e.gr == *gr && e.key == *key)
    }

    pub fn live_to<'a>(
        &'a self,
        gt: &'a Subject,
        key: &'a PermissionKey,
    ) -> impl Iterator<Item = &'a DelegationEdge> + 'a {
        self.live().filter(move |e| e.gt == *gt && e.key == *key)
    }

    /// True iff `to` is reachable from `from` along live edges for `key`
    /// (every subject reaches itself).
    pub fn reaches(&self, from: &Subject, to: &Subject, key: &PermissionKey) -> bool {
        self.reachable(from, key).contains(to)
    }

    /// Subjects reachable from `from` along live edges for `key`, in
    /// breadth-first order, `from` first.
    pub fn reachable_order(&self, from: &Subject, key: &PermissionKey) -> Vec<Subject> {
        let mut seen = BTreeSet::from([from.clone()]);
        let mut order = vec![from.clone()];
        let mut queue = VecDeque::from([from.clone()]);
        while let Some(node) = queue.pop_front() {
            for e in self.live_from(&node, key) {
                if seen.insert(e.gt.clone()) {
                    order.push(e.gt.clone());
                    queue.push_back(e.gt.clone());
                }
            }
        }
        order
    }

    pub fn reachable(&self, from: &Subject, key: &PermissionKey) -> BTreeSet<Subject> {
        self.reachable_order(from, key).into_iter().collect()
    }

    /// Marks a live edge revoked or expired. Status never returns to live.
    pub(crate) fn close(&mut self, id: EdgeId, status: EdgeStatus) -> bool {
        debug_assert!(status != EdgeStatus::Live);
        match self.edges.get_mut(&id) {
            Some(e) if e.is_live() => {
                e.status = status;
                true
            }
            _ => false,
        }
    }

    pub(crate) fn set_grantor(&mut self, id: EdgeId, gr: Subject) {
        if let Some(e) = self.edges.get_mut(&id) {
            e.gr = gr;
        }
    }

    /// No live cycle exists for any key.
    pub fn is_acyclic(&self) -> bool {
        self.live().all(|e| !self.reaches(&e.gt, &e.gr, &e.key))
    }
}
