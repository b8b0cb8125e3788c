use std::fmt;

use super::{ConstraintError, Date, Interval};

/// Reserved words of the constraint surface syntax (matched case-insensitively).
pub const KEYWORDS: &[&str] = &[
    "DURING",
    "BEFORE",
    "AFTER",
    "IN",
    "HAS",
    "IS",
    "NOT",
    "AND",
    "OR",
    "MULTI-LEVEL",
];

/// Parsed delegation constraint.
///
/// Temporal, spatial, general and level atoms combined with negation,
/// conjunction and disjunction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Constraint {
    During(Interval),
    Before(Date),
    After(Date),
    In(String),
    Has(String),
    Is(String),
    /// Authorises re-delegation; carries no context condition.
    MultiLevelDelegation,
    Not(Box<Constraint>),
    And(Box<Constraint>, Box<Constraint>),
    Or(Box<Constraint>, Box<Constraint>),
}

impl Constraint {
    pub fn negate(inner: Constraint) -> Self {
        Constraint::Not(Box::new(inner))
    }

    pub fn and(lhs: Constraint, rhs: Constraint) -> Self {
        Constraint::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: Constraint, rhs: Constraint) -> Self {
        Constraint::Or(Box::new(lhs), Box::new(rhs))
    }

    pub fn is_atom(&self) -> bool {
        !matches!(self, Constraint::Not(_) | Constraint::And(..) | Constraint::Or(..))
    }

    pub fn depth(&self) -> usize {
        match self {
            Constraint::Not(x) => 1 + x.depth(),
            Constraint::And(l, r) | Constraint::Or(l, r) => 1 + l.depth().max(r.depth()),
            _ => 1,
        }
    }

    pub fn contains_level(&self) -> bool {
        match self {
            Constraint::MultiLevelDelegation => true,
            Constraint::Not(x) => x.contains_level(),
            Constraint::And(l, r) | Constraint::Or(l, r) => l.contains_level() || r.contains_level(),
            _ => false,
        }
    }

    /// Location identifiers mentioned by `IN` atoms.
    pub fn locations(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |atom| {
            if let Constraint::In(loc) = atom {
                out.push(loc.as_str());
            }
        });
        out
    }

    /// Attribute identifiers mentioned by `HAS` / `IS` atoms.
    pub fn attributes(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |atom| {
            if let Constraint::Has(a) | Constraint::Is(a) = atom {
                out.push(a.as_str());
            }
        });
        out
    }

    fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a Constraint)) {
        match self {
            Constraint::Not(x) => x.visit_atoms(f),
            Constraint::And(l, r) | Constraint::Or(l, r) => {
                l.visit_atoms(f);
                r.visit_atoms(f);
            }
            atom => f(atom),
        }
    }

    /// The latest calendar date any temporal atom refers to.
    pub fn latest_date(&self) -> Option<Date> {
        let mut latest: Option<Date> = None;
        self.visit_atoms(&mut |atom| {
            let d = match atom {
                Constraint::During(iv) => Some(iv.end()),
                Constraint::Before(d) | Constraint::After(d) => Some(*d),
                _ => None,
            };
            latest = latest.max(d);
        });
        latest
    }

    /// Checks identifier syntax in every atom so that printing round-trips.
    pub fn validate(&self) -> Result<(), ConstraintError> {
        let mut result = Ok(());
        self.visit_atoms(&mut |atom| {
            if let Constraint::In(id) | Constraint::Has(id) | Constraint::Is(id) = atom {
                if result.is_ok() && !is_identifier(id) {
                    result = Err(ConstraintError::InvalidIdentifier { text: id.clone() });
                }
            }
        });
        result
    }

    fn fmt_at(&self, level: Level, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let needs_parens = match self {
            Constraint::Or(..) => level > Level::Or,
            Constraint::And(..) => level > Level::And,
            _ => false,
        };
        if needs_parens {
            f.write_str("(")?;
        }
        match self {
            Constraint::During(iv) => write!(f, "DURING {iv}")?,
            Constraint::Before(d) => write!(f, "BEFORE {d}")?,
            Constraint::After(d) => write!(f, "AFTER {d}")?,
            Constraint::In(loc) => write!(f, "IN {loc}")?,
            Constraint::Has(a) => write!(f, "HAS {a}")?,
            Constraint::Is(a) => write!(f, "IS {a}")?,
            Constraint::MultiLevelDelegation => f.write_str("MULTI-LEVEL DELEGATION")?,
            Constraint::Not(x) => {
                f.write_str("NOT ")?;
                x.fmt_at(Level::Unary, f)?;
            }
            // Both operators associate to the left, so only a right operand
            // of the same operator needs grouping.
            Constraint::And(l, r) => {
                l.fmt_at(Level::And, f)?;
                f.write_str(" AND ")?;
                r.fmt_at(Level::Unary, f)?;
            }
            Constraint::Or(l, r) => {
                l.fmt_at(Level::Or, f)?;
                f.write_str(" OR ")?;
                r.fmt_at(Level::And, f)?;
            }
        }
        if needs_parens {
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Or,
    And,
    Unary,
}

/// Canonical surface text; `parse_constraint` inverts it.
impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(Level::Or, f)
    }
}

pub fn print_constraint(ast: &Constraint) -> String {
    ast.to_string()
}

/// Identifier syntax shared by locations, attributes and named intervals:
/// a letter or `_`, then letters, digits, `_`, `-` or `.`; never a keyword.
pub fn is_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    (first.is_ascii_alphabetic() || first == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !is_keyword(text)
}

pub fn is_keyword(text: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(text))
}

/// Conjunction of two optional constraints; absence means "always true".
pub fn conjoin(lhs: Option<Constraint>, rhs: Option<Constraint>) -> Option<Constraint> {
    match (lhs, rhs) {
        (Some(l), Some(r)) => Some(Constraint::and(l, r)),
        (l, None) => l,
        (None, r) => r,
    }
}

/// Separates the level constraint from a delegation constraint.
///
/// `MULTI-LEVEL DELEGATION` is only meaningful as a top-level conjunct.
/// Returns the remaining constraint (if any) and whether the flag was present.
pub fn split_level(dc: &Constraint) -> Result<(Option<Constraint>, bool), ConstraintError> {
    let mut conjuncts = Vec::new();
    flatten_and(dc, &mut conjuncts);
    let mut multi_level = false;
    let mut rest: Option<Constraint> = None;
    for c in conjuncts {
        if *c == Constraint::MultiLevelDelegation {
            multi_level = true;
        } else if c.contains_level() {
            return Err(ConstraintError::LevelPlacement);
        } else {
            rest = conjoin(rest, Some(c.clone()));
        }
    }
    Ok((rest, multi_level))
}

fn flatten_and<'a>(c: &'a Constraint, out: &mut Vec<&'a Constraint>) {
    match c {
        Constraint::And(l, r) => {
            flatten_and(l, out);
            flatten_and(r, out);
        }
        other => out.push(other),
    }
}
