use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Monotonicity {
    /// Undo a transfer by restoring the rule's subject.
    Modify,
    /// Undo a grant by removing the delegated rule.
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dominance {
    Weak,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Propagation {
    Local,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Plurality {
    Single,
    Plural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RevocationScheme {
    pub monotonicity: Monotonicity,
    pub dominance: Dominance,
    pub propagation: Propagation,
    pub plurality: Plurality,
}

impl RevocationScheme {
    pub fn new(
        dominance: Dominance,
        propagation: Propagation,
        plurality: Plurality,
        monotonicity: Monotonicity,
    ) -> Self {
        RevocationScheme {
            monotonicity,
            dominance,
            propagation,
            plurality,
        }
    }

    fn words(&self) -> [&'static str; 4] {
        [
            match self.dominance {
                Dominance::Weak => "weak",
                Dominance::Strong => "strong",
            },
            match self.propagation {
                Propagation::Local => "local",
                Propagation::Global => "global",
            },
            match self.plurality {
                Plurality::Single => "single",
                Plurality::Plural => "plural",
            },
            match self.monotonicity {
                Monotonicity::Modify => "modify",
                Monotonicity::Delete => "delete",
            },
        ]
    }

    /// Command-line form, e.g. `weak-local-single-delete`.
    pub fn hyphenated(&self) -> String {
        self.words().join("-")
    }
}

/// Space-separated name, e.g. `weak local single delete`.
impl fmt::Display for RevocationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.words().join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown revocation scheme `{0}`")]
pub struct UnknownScheme(pub String);

/// Accepts the spaced or the hyphenated name.
impl std::str::FromStr for RevocationScheme {
    type Err = UnknownScheme;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.trim().replace('-', " ");
        enumerate_schemes()
            .into_iter()
            .find(|scheme| scheme.to_string() == normalized)
            .ok_or_else(|| UnknownScheme(s.to_string()))
    }
}

/// All sixteen schemes, monotonicity varying slowest and plurality fastest.
pub fn enumerate_schemes() -> Vec<RevocationScheme> {
    let mut out = Vec::with_capacity(16);
    for monotonicity in [Monotonicity::Modify, Monotonicity::Delete] {
        for dominance in [Dominance::Weak, Dominance::Strong] {
            for propagation in [Propagation::Local, Propagation::Global] {
                for plurality in [Plurality::Single, Plurality::Plural] {
                    out.push(RevocationScheme {
                        monotonicity,
                        dominance,
                        propagation,
                        plurality,
                    });
                }
            }
        }
    }
    out
}

/// What caused a revocation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AffiliationTrigger {
    /// The delegation constraint can no longer hold.
    ConstraintViolation,
    GrantorRequest(RevocationScheme),
    GrantorPermissionLoss,
    /// The event bound to a transfer obligation occurred.
    DelegationEvent(String),
}

impl AffiliationTrigger {
    pub fn scheme(&self) -> Option<RevocationScheme> {
        match self {
            AffiliationTrigger::GrantorRequest(s) => Some(*s),
            _ => None,
        }
    }
}

impl fmt::Display for AffiliationTrigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AffiliationTrigger::ConstraintViolation => "constraint-violation",
            AffiliationTrigger::GrantorRequest(_) => "grantor-request",
            AffiliationTrigger::GrantorPermissionLoss => "grantor-permission-loss",
            AffiliationTrigger::DelegationEvent(_) => "delegation-event",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn sixteen_distinct_names() {
        let schemes = enumerate_schemes();
        assert_eq!(schemes.len(), 16);
        let names: BTreeSet<String> = schemes.iter().map(|s| s.to_string()).collect();
        assert_eq!(names.len(), 16);
        assert_eq!(schemes[0].to_string(), "weak local single modify");
        assert_eq!(schemes[12].to_string(), "strong local single delete");
        assert_eq!(schemes[15].to_string(), "strong global plural delete");
    }

    #[test]
    fn parses_both_spellings() {
        let s: RevocationScheme = "weak-local-single-delete".parse().unwrap();
        assert_eq!(s.to_string(), "weak local single delete");
        assert_eq!(s.hyphenated(), "weak-local-single-delete");
        assert_eq!(
            "strong global plural modify"
                .parse::<RevocationScheme>()
                .unwrap()
                .plurality,
            Plurality::Plural
        );
        assert!("weak local".parse::<RevocationScheme>().is_err());
    }
}
