use std::collections::BTreeSet;

use super::{Constraint, Date};

/// The circumstances a constraint is evaluated against.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EvalContext {
    pub now: Date,
    /// Locations the grantee currently occupies.
    pub locations: BTreeSet<String>,
    /// Attributes that hold for the grantee.
    pub attributes: BTreeSet<String>,
}

impl EvalContext {
    pub fn at(now: Date) -> Self {
        EvalContext {
            now,
            locations: BTreeSet::new(),
            attributes: BTreeSet::new(),
        }
    }

    pub fn with_location(mut self, location: impl Into<String>) -> Self {
        self.locations.insert(location.into());
        self
    }

    pub fn with_attribute(mut self, attribute: impl Into<String>) -> Self {
        self.attributes.insert(attribute.into());
        self
    }
}

/// `DURING` is inclusive at both ends; `BEFORE` and `AFTER` are strict.
pub fn eval_constraint(ast: &Constraint, ctx: &EvalContext) -> bool {
    match ast {
        Constraint::During(iv) => iv.contains(ctx.now),
        Constraint::Before(d) => ctx.now < *d,
        Constraint::After(d) => ctx.now > *d,
        Constraint::In(loc) => ctx.locations.contains(loc),
        Constraint::Has(a) | Constraint::Is(a) => ctx.attributes.contains(a),
        Constraint::MultiLevelDelegation => true,
        Constraint::Not(x) => !eval_constraint(x, ctx),
        Constraint::And(l, r) => eval_constraint(l, ctx) && eval_constraint(r, ctx),
        Constraint::Or(l, r) => eval_constraint(l, ctx) || eval_constraint(r, ctx),
    }
}

/// A missing constraint is permanent: it holds in every context.
pub fn eval_optional(ast: Option<&Constraint>, ctx: &EvalContext) -> bool {
    ast.is_none_or(|c| eval_constraint(c, ctx))
}
