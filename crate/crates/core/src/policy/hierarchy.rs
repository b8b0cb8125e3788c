use std::collections::BTreeSet;

use super::{PolicyError, Subject};

/// Grantors ordered by dominance; acyclic by construction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GrantorHierarchy {
    nodes: BTreeSet<Subject>,
    declared: BTreeSet<(Subject, Subject)>,
    closure: BTreeSet<(Subject, Subject)>,
}

impl GrantorHierarchy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> &BTreeSet<Subject> {
        &self.nodes
    }

    /// Pairs as declared, before closure.
    pub fn declared(&self) -> impl Iterator<Item = (&Subject, &Subject)> {
        self.declared.iter().map(|(a, b)| (a, b))
    }

    /// Records that `superior` dominates `inferior`.
    pub fn add_dominance(&mut self, superior: Subject, inferior: Subject) -> Result<(), PolicyError> {
        if superior == inferior {
            return Err(PolicyError::ReflexiveDominance { subject: superior });
        }
        if self.dominates(&inferior, &superior) {
            return Err(PolicyError::DominanceCycle { superior, inferior });
        }
        self.nodes.insert(superior.clone());
        self.nodes.insert(inferior.clone());
        self.declared.insert((superior.clone(), inferior.clone()));
        let above: Vec<Subject> = self
            .nodes
            .iter()
            .filter(|x| **x == superior || self.dominates(x, &superior))
            .cloned()
            .collect();
        let below: Vec<Subject> = self
            .nodes
            .iter()
            .filter(|y| **y == inferior || self.dominates(&inferior, y))
            .cloned()
            .collect();
        for x in &above {
            for y in &below {
                self.closure.insert((x.clone(), y.clone()));
            }
        }
        Ok(())
    }

    /// Transitive dominance; subjects outside the hierarchy dominate nobody
    /// and are dominated by nobody.
    pub fn dominates(&self, superior: &Subject, inferior: &Subject) -> bool {
        self.closure.contains(&(superior.clone(), inferior.clone()))
    }
}
