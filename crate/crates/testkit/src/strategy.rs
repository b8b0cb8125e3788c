//! Proptest strategies over the small fixture universe.

use dlg_core::constraint::{Constraint, Date, EvalContext, Interval};
use proptest::prelude::*;

use crate::{ATTRIBUTES, LOCATIONS};

/// Days 03/01/25 to 13/01/25, a little wider than the small universe so
/// bounds fall on both sides of it.
pub fn arb_date() -> impl Strategy<Value = Date> {
    (3u32..=13).prop_map(|d| Date::from_dmy(d, 1, 25).expect("january date"))
}

pub fn arb_interval() -> impl Strategy<Value = Interval> {
    (arb_date(), arb_date()).prop_map(|(a, b)| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        Interval::new(lo, hi).expect("ordered interval")
    })
}

fn arb_location() -> impl Strategy<Value = String> {
    prop::sample::select(LOCATIONS.to_vec()).prop_map(str::to_string)
}

fn arb_attribute() -> impl Strategy<Value = String> {
    prop::sample::select(ATTRIBUTES.to_vec()).prop_map(str::to_string)
}

/// Context atoms (no level flag).
pub fn arb_atom() -> impl Strategy<Value = Constraint> {
    prop_oneof![
        arb_interval().prop_map(Constraint::During),
        arb_date().prop_map(Constraint::Before),
        arb_date().prop_map(Constraint::After),
        arb_location().prop_map(Constraint::In),
        arb_attribute().prop_map(Constraint::Has),
        arb_attribute().prop_map(Constraint::Is),
    ]
}

/// Constraint trees of depth at most `depth`.
pub fn arb_constraint_depth(depth: u32) -> impl Strategy<Value = Constraint> {
    arb_atom().prop_recursive(depth.saturating_sub(1), 32, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Constraint::negate),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Constraint::and(l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| Constraint::or(l, r)),
        ]
    })
}

pub fn arb_constraint() -> impl Strategy<Value = Constraint> {
    arb_constraint_depth(5)
}

/// Trees that may also contain the level flag anywhere; these parse and
/// print but are not all valid delegation constraints.
pub fn arb_constraint_with_level() -> impl Strategy<Value = Constraint> {
    let atom = prop_oneof![4 => arb_atom(), 1 => Just(Constraint::MultiLevelDelegation)];
    atom.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Constraint::negate),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Constraint::and(l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| Constraint::or(l, r)),
        ]
    })
}

pub fn arb_context() -> impl Strategy<Value = EvalContext> {
    (
        arb_date(),
        prop::sample::subsequence(LOCATIONS.to_vec(), 0..=2),
        prop::sample::subsequence(ATTRIBUTES.to_vec(), 0..=2),
    )
        .prop_map(|(now, l, a)| EvalContext {
            now,
            locations: l.into_iter().map(str::to_string).collect(),
            attributes: a.into_iter().map(str::to_string).collect(),
        })
}
