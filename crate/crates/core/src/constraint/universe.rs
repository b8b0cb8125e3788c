use std::collections::{BTreeMap, BTreeSet};

use super::ast::is_identifier;
use super::eval::{eval_constraint, EvalContext};
use super::{Constraint, ConstraintError, Date, Interval};

/// Default bound on the number of contexts a universe may contain.
pub const DEFAULT_MAX_CONTEXTS: u64 = 1_000_000;

/// The finite set of evaluation contexts the engine reasons over.
///
/// A context is a day in `[first_day, last_day]` together with any subset of
/// the declared locations and any subset of the declared attributes. The
/// size bound is checked on construction, so every query on a built universe
/// terminates within `max_contexts` evaluations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextUniverse {
    first_day: Date,
    last_day: Date,
    locations: BTreeSet<String>,
    attributes: BTreeSet<String>,
    intervals: BTreeMap<String, Interval>,
    max_contexts: u64,
}

impl ContextUniverse {
    pub fn new<L, A>(first_day: Date, last_day: Date, locations: L, attributes: A) -> Result<Self, ConstraintError>
    where
        L: IntoIterator,
        L::Item: Into<String>,
        A: IntoIterator,
        A::Item: Into<String>,
    {
        Self::with_max_contexts(first_day, last_day, locations, attributes, DEFAULT_MAX_CONTEXTS)
    }

    pub fn with_max_contexts<L, A>(
        first_day: Date,
        last_day: Date,
        locations: L,
        attributes: A,
        max_contexts: u64,
    ) -> Result<Self, ConstraintError>
    where
        L: IntoIterator,
        L::Item: Into<String>,
        A: IntoIterator,
        A::Item: Into<String>,
    {
        if first_day > last_day {
            return Err(ConstraintError::IntervalOrder {
                begin: first_day,
                end: last_day,
            });
        }
        let locations: BTreeSet<String> = locations.into_iter().map(Into::into).collect();
        let attributes: BTreeSet<String> = attributes.into_iter().map(Into::into).collect();
        if let Some(bad) = locations.iter().chain(&attributes).find(|id| !is_identifier(id)) {
            return Err(ConstraintError::InvalidIdentifier { text: bad.clone() });
        }
        let universe = ContextUniverse {
            first_day,
            last_day,
            locations,
            attributes,
            intervals: BTreeMap::new(),
            max_contexts,
        };
        match universe.context_count() {
            Some(n) if n <= max_contexts => Ok(universe),
            n => Err(ConstraintError::UniverseTooLarge {
                contexts: n,
                limit: max_contexts,
            }),
        }
    }

    /// Registers a named interval usable as `DURING <name>`.
    pub fn add_interval(&mut self, name: &str, interval: Interval) -> Result<(), ConstraintError> {
        if !is_identifier(name) {
            return Err(ConstraintError::InvalidIdentifier { text: name.into() });
        }
        if self.intervals.contains_key(name) {
            return Err(ConstraintError::DuplicateInterval { name: name.into() });
        }
        self.intervals.insert(name.to_string(), interval);
        Ok(())
    }

    pub fn first_day(&self) -> Date {
        self.first_day
    }

    pub fn last_day(&self) -> Date {
        self.last_day
    }

    pub fn locations(&self) -> &BTreeSet<String> {
        &self.locations
    }

    pub fn attributes(&self) -> &BTreeSet<String> {
        &self.attributes
    }

    pub fn intervals(&self) -> &BTreeMap<String, Interval> {
        &self.intervals
    }

    pub fn max_contexts(&self) -> u64 {
        self.max_contexts
    }

    /// Number of contexts, `None` on overflow.
    pub fn context_count(&self) -> Option<u64> {
        let days = self.first_day.days_through(self.last_day);
        let bits = u32::try_from(self.locations.len() + self.attributes.len()).ok()?;
        days.checked_mul(1u64.checked_shl(bits).filter(|_| bits < 64)?)
    }

    pub fn contains(&self, ctx: &EvalContext) -> bool {
        self.first_day <= ctx.now
            && ctx.now <= self.last_day
            && ctx.locations.is_subset(&self.locations)
            && ctx.attributes.is_subset(&self.attributes)
    }

    /// Every context of the universe, days outermost.
    pub fn contexts(&self) -> impl Iterator<Item = EvalContext> + '_ {
        let locations: Vec<&String> = self.locations.iter().collect();
        let attributes: Vec<&String> = self.attributes.iter().collect();
        self.first_day
            .iter_through(self.last_day)
            .flat_map(move |day| subset_contexts(day, locations.clone(), attributes.clone()))
    }

    /// True iff some context of the universe satisfies `ast`.
    pub fn satisfiable(&self, ast: &Constraint) -> bool {
        self.find_witness(&[ast]).is_some()
    }

    /// A context satisfying every constraint in `conjuncts`, if one exists.
    pub fn find_witness(&self, conjuncts: &[&Constraint]) -> Option<EvalContext> {
        self.search(self.first_day, self.last_day, conjuncts)
    }

    /// True iff `ast` holds in some context dated `clock` or later.
    ///
    /// The window runs to the later of the declared range, `clock`, and the
    /// day after the latest date `ast` mentions; temporal atoms are constant
    /// beyond their bounds, so no later day can change the answer.
    pub fn satisfiable_from(&self, ast: &Constraint, clock: Date) -> bool {
        let mut horizon = self.last_day.max(clock);
        if let Some(latest) = ast.latest_date() {
            horizon = horizon.max(latest.succ().unwrap_or(latest));
        }
        self.search(clock, horizon, &[ast]).is_some()
    }

    // Truth of the conjuncts depends only on membership of the identifiers
    // they mention, so subsets are enumerated over those alone.
    fn search(&self, first: Date, last: Date, conjuncts: &[&Constraint]) -> Option<EvalContext> {
        let mut locations: Vec<&String> = Vec::new();
        let mut attributes: Vec<&String> = Vec::new();
        for c in conjuncts {
            for loc in c.locations() {
                if let Some(known) = self.locations.get(loc) {
                    locations.push(known);
                }
            }
            for attr in c.attributes() {
                if let Some(known) = self.attributes.get(attr) {
                    attributes.push(known);
                }
            }
        }
        locations.sort();
        locations.dedup();
        attributes.sort();
        attributes.dedup();
        first.iter_through(last).find_map(|day| {
            subset_contexts(day, locations.clone(), attributes.clone())
                .find(|ctx| conjuncts.iter().all(|c| eval_constraint(c, ctx)))
        })
    }
}

fn subset_contexts<'a>(
    day: Date,
    locations: Vec<&'a String>,
    attributes: Vec<&'a String>,
) -> impl Iterator<Item = EvalContext> + 'a {
    let loc_masks = 1u64 << locations.len();
    let attr_masks = 1u64 << attributes.len();
    (0..loc_masks).flat_map(move |lm| {
        let locations = locations.clone();
        let attributes = attributes.clone();
        (0..attr_masks).map(move |am| EvalContext {
            now: day,
            locations: pick(&locations, lm),
            attributes: pick(&attributes, am),
        })
    })
}

fn pick(items: &[&String], mask: u64) -> BTreeSet<String> {
    items
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, s)| (*s).clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::parse_constraint;

    fn date(s: &str) -> Date {
        s.parse().unwrap()
    }

    fn week() -> ContextUniverse {
        ContextUniverse::new(
            date("06/01/25"),
            date("10/01/25"),
            ["classroom", "lab"],
            ["member", "senior"],
        )
        .unwrap()
    }

    #[test]
    fn counts_days_times_subsets() {
        let u = week();
        assert_eq!(u.context_count(), Some(5 * 4 * 4));
        assert_eq!(u.contexts().count(), 80);
        assert!(u.contexts().all(|ctx| u.contains(&ctx)));
    }

    #[test]
    fn strict_bounds_conflict_is_unsatisfiable() {
        let u = week();
        let d = date("08/01/25");
        let c = Constraint::and(Constraint::Before(d), Constraint::After(d));
        assert!(!u.satisfiable(&c));
    }

    #[test]
    fn declared_location_has_witness() {
        let u = week();
        let c = Constraint::In("classroom".into());
        assert!(u.satisfiable(&c));
        let witness = u.find_witness(&[&c]).unwrap();
        assert!(witness.locations.contains("classroom"));
        assert!(!u.satisfiable(&Constraint::In("gym".into())));
    }

    #[test]
    fn witness_satisfies_all_conjuncts() {
        let u = week();
        let a = parse_constraint("AFTER 07/01/25 AND HAS member").unwrap();
        let b = parse_constraint("NOT IN lab AND BEFORE 10/01/25").unwrap();
        let w = u.find_witness(&[&a, &b]).unwrap();
        assert!(eval_constraint(&a, &w) && eval_constraint(&b, &w));
        assert_eq!(w.now, date("08/01/25"));
    }

    #[test]
    fn rejects_oversized_universe() {
        let locs: Vec<String> = (0..20).map(|i| format!("l{i}")).collect();
        let err = ContextUniverse::new(date("01/01/25"), date("31/12/25"), locs, Vec::<String>::new()).unwrap_err();
        assert!(matches!(err, ConstraintError::UniverseTooLarge { .. }));
        let tight =
            ContextUniverse::with_max_contexts(date("01/01/25"), date("10/01/25"), ["a"], Vec::<String>::new(), 19);
        assert!(matches!(
            tight,
            Err(ConstraintError::UniverseTooLarge { contexts: Some(20), .. })
        ));
        let too_many_bits: Vec<String> = (0..70).map(|i| format!("a{i}")).collect();
        assert!(matches!(
            ContextUniverse::new(date("01/01/25"), date("01/01/25"), too_many_bits, Vec::<String>::new()),
            Err(ConstraintError::UniverseTooLarge { contexts: None, .. })
        ));
    }

    #[test]
    fn rejects_reversed_range_and_bad_identifiers() {
        assert!(ContextUniverse::new(date("02/01/25"), date("01/01/25"), ["a"], ["b"]).is_err());
        assert!(ContextUniverse::new(date("01/01/25"), date("02/01/25"), ["IN"], ["b"]).is_err());
    }

    #[test]
    fn future_window_detects_expiry() {
        let u = week();
        let during = parse_constraint("DURING [06/01/25-07/01/25]").unwrap();
        assert!(u.satisfiable_from(&during, date("07/01/25")));
        assert!(!u.satisfiable_from(&during, date("08/01/25")));
        // Beyond the declared range, a location constraint is still live.
        let spatial = Constraint::In("lab".into());
        assert!(u.satisfiable_from(&spatial, date("20/01/25")));
        let after = Constraint::After(date("15/01/25"));
        assert!(u.satisfiable_from(&after, date("20/01/25")));
        // Dates named by the constraint extend the horizon.
        assert!(u.satisfiable_from(&after, date("06/01/25")));
        assert!(!u.satisfiable(&after));
        let late = parse_constraint("DURING [20/01/25-21/01/25]").unwrap();
        assert!(u.satisfiable_from(&late, date("10/01/25")));
        assert!(!u.satisfiable_from(&late, date("22/01/25")));
    }

    #[test]
    fn named_intervals_must_be_unique_identifiers() {
        let mut u = week();
        let iv = Interval::new(date("06/01/25"), date("07/01/25")).unwrap();
        u.add_interval("absence", iv).unwrap();
        assert!(matches!(
            u.add_interval("absence", iv),
            Err(ConstraintError::DuplicateInterval { .. })
        ));
        assert!(u.add_interval("DURING", iv).is_err());
        assert_eq!(u.intervals().len(), 1);
    }
}
