use std::collections::BTreeSet;

use super::{PolicyError, PriorityLabel};

/// Outcome of comparing two priority labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PriorityOrdering {
    Less,
    Greater,
    Equal,
    Incomparable,
}

/// A finite set of priority labels with a strict partial order.
///
/// `less` is stored transitively closed, so `(a, b) ∈ less` means `a < b`
/// (b takes precedence over a).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PriorityOrder {
    labels: BTreeSet<PriorityLabel>,
    less: BTreeSet<(PriorityLabel, PriorityLabel)>,
}

impl PriorityOrder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn labels(&self) -> &BTreeSet<PriorityLabel> {
        &self.labels
    }

    /// Closed order pairs `(lower, higher)`.
    pub fn pairs(&self) -> impl Iterator<Item = (&PriorityLabel, &PriorityLabel)> {
        self.less.iter().map(|(a, b)| (a, b))
    }

    pub fn contains(&self, label: &PriorityLabel) -> bool {
        self.labels.contains(label)
    }

    /// Returns false if the label was already present.
    pub fn add_label(&mut self, label: PriorityLabel) -> bool {
        self.labels.insert(label)
    }

    /// Records `lower < higher`, adding either label if missing.
    pub fn add_less(&mut self, lower: PriorityLabel, higher: PriorityLabel) -> Result<(), PolicyError> {
        if lower == higher {
            return Err(PolicyError::ReflexivePriority { label: lower });
        }
        if self.precedes(&higher, &lower) {
            return Err(PolicyError::PriorityCycle { lower, higher });
        }
        self.labels.insert(lower.clone());
        self.labels.insert(higher.clone());
        let below: Vec<PriorityLabel> = self
            .labels
            .iter()
            .filter(|x| **x == lower || self.precedes(x, &lower))
            .cloned()
            .collect();
        let above: Vec<PriorityLabel> = self
            .labels
            .iter()
            .filter(|y| **y == higher || self.precedes(&higher, y))
            .cloned()
            .collect();
        for x in &below {
            for y in &above {
                self.less.insert((x.clone(), y.clone()));
            }
        }
        Ok(())
    }

    /// Drops the label and every pair mentioning it. Pairs that were implied
    /// through the label remain, so the result is still transitive.
    pub fn remove_label(&mut self, label: &PriorityLabel) -> bool {
        let present = self.labels.remove(label);
        self.less.retain(|(a, b)| a != label && b != label);
        present
    }

    /// True iff `a < b`.
    pub fn precedes(&self, a: &PriorityLabel, b: &PriorityLabel) -> bool {
        self.less.contains(&(a.clone(), b.clone()))
    }

    /// True iff some stored pair mentions `label`.
    pub fn is_ordered(&self, label: &PriorityLabel) -> bool {
        self.less.iter().any(|(a, b)| a == label || b == label)
    }

    pub fn compare(&self, a: &PriorityLabel, b: &PriorityLabel) -> Result<PriorityOrdering, PolicyError> {
        for l in [a, b] {
            if !self.labels.contains(l) {
                return Err(PolicyError::UnknownLabel { label: l.clone() });
            }
        }
        Ok(if a == b {
            PriorityOrdering::Equal
        } else if self.precedes(a, b) {
            PriorityOrdering::Less
        } else if self.precedes(b, a) {
            PriorityOrdering::Greater
        } else {
            PriorityOrdering::Incomparable
        })
    }

    /// Irreflexive, antisymmetric, transitive, and closed over known labels.
    pub fn is_strict_partial_order(&self) -> bool {
        let known = self
            .less
            .iter()
            .all(|(a, b)| self.labels.contains(a) && self.labels.contains(b));
        let irreflexive = self.less.iter().all(|(a, b)| a != b);
        let antisymmetric = self.less.iter().all(|(a, b)| !self.precedes(b, a));
        let transitive = self.less.iter().all(|(a, b)| {
            self.less
                .iter()
                .filter(|(c, _)| c == b)
                .all(|(_, d)| self.precedes(a, d))
        });
        known && irreflexive && antisymmetric && transitive
    }
}
