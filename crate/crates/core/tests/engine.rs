use std::collections::BTreeSet;

use dlg_core::consistency::check_consistency;
use dlg_core::constraint::Constraint;
use dlg_core::engine::{check_legitimacy, transition, AgreementMode, DenialReason, Engine, SessionEvent, SessionState};
use dlg_core::policy::{
    DelegationRule, GrantorHierarchy, Modality, Permission, PolicyRule, RuleId, RuleType, SecurityPolicy,
};
use dlg_core::revocation::{Dominance, Monotonicity, Plurality, Propagation, RevocationScheme};
use dlg_testkit::fixture::AGREEMENT_STEPS;
use dlg_testkit::random::{random_delegated_rule, random_permission, random_policy, random_request, SUBJECTS};
use dlg_testkit::{oracle, small_universe, subject};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn legitimacy_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..400 {
        let sp = random_policy(&mut rng, 10);
        let p = random_permission(&mut rng);
        for s in SUBJECTS {
            let gr = subject(s);
            assert_eq!(check_legitimacy(&sp, &gr, &p), oracle::legitimate(&sp, &gr, &p));
        }
    }
}

#[test]
fn consistency_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..400 {
        let sp = random_policy(&mut rng, 10);
        let dr = random_delegated_rule(&mut rng);
        let found: BTreeSet<RuleId> = check_consistency(&sp, &dr)
            .pairs
            .into_iter()
            .map(|p| p.existing)
            .collect();
        assert_eq!(found, oracle::conflicts(&sp, &dr));
    }
}

/// After a run of random requests the policy still decides like the
/// reference procedure, keeps its invariants and resolves every conflict.
#[test]
fn decisions_match_oracle_after_requests() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..60 {
        let mut engine = Engine::new(random_policy(&mut rng, 8), GrantorHierarchy::new());
        for _ in 0..4 {
            if let Some(request) = random_request(&mut rng, engine.policy()) {
                engine.delegate(request).unwrap();
            }
        }
        let sp = engine.policy();
        assert!(sp.check_invariants());
        for (s, a, o, ctx) in oracle::query_points(sp) {
            assert_eq!(sp.decide(&s, &a, &o, &ctx), oracle::decide(sp, &s, &a, &o, &ctx));
        }
        for r in sp.rules().iter().filter(|r| !r.is_base() || !r.transfers.is_empty()) {
            for partner in oracle::conflicts(sp, r) {
                let partner = sp.rule(&partner).unwrap();
                assert!(sp.outranks(r, partner), "{} does not outrank {}", r.id, partner.id);
            }
        }
    }
}

fn matching_scheme<R: Rng>(rng: &mut R, t: RuleType) -> RevocationScheme {
    RevocationScheme::new(
        if rng.gen_bool(0.5) {
            Dominance::Weak
        } else {
            Dominance::Strong
        },
        if rng.gen_bool(0.5) {
            Propagation::Local
        } else {
            Propagation::Global
        },
        if rng.gen_bool(0.5) {
            Plurality::Single
        } else {
            Plurality::Plural
        },
        if t == RuleType::GrtReq {
            Monotonicity::Delete
        } else {
            Monotonicity::Modify
        },
    )
}

#[test]
fn revoking_a_delegation_restores_decisions() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let everyone: Vec<_> = SUBJECTS.iter().map(|s| subject(s)).collect();
    let mut checked = 0;
    while checked < 150 {
        let sp = random_policy(&mut rng, 8);
        let Some(request) = random_request(&mut rng, &sp) else {
            continue;
        };
        let mut engine = Engine::new(sp.clone(), GrantorHierarchy::new());
        let (gr, gt, t, key) = (request.gr.clone(), request.gt.clone(), request.t, request.p.key());
        if !engine.delegate(request).unwrap().is_accepted() {
            continue;
        }
        let scheme = matching_scheme(&mut rng, t);
        engine.revoke(&gr, &key, Some(&gt), &scheme).unwrap();
        let diff = oracle::decision_differences(&sp, engine.policy(), &everyone);
        assert!(diff.is_empty(), "{scheme}: {diff:?}");
        assert_eq!(engine.policy().rules(), sp.rules());
        checked += 1;
    }
}

#[test]
fn transitions_match_choreography() {
    let legal: BTreeSet<(String, String, String, String)> = AGREEMENT_STEPS
        .iter()
        .map(|(m, s, e, n)| (m.to_string(), s.to_string(), e.to_string(), n.to_string()))
        .collect();
    let mut seen = 0;
    for mode in AgreementMode::ALL {
        for state in SessionState::ALL {
            for event in SessionEvent::ALL {
                let got = transition(mode, state, event);
                let row = legal
                    .iter()
                    .find(|(m, s, e, _)| *m == mode.to_string() && *s == state.to_string() && *e == event.to_string());
                match (row, got) {
                    (Some((.., next)), Some(actual)) => {
                        assert_eq!(*next, actual.to_string());
                        seen += 1;
                    }
                    (None, None) => {}
                    (row, got) => panic!("{mode} {state} {event}: table {row:?}, machine {got:?}"),
                }
            }
        }
    }
    assert_eq!(seen, legal.len());
}

fn nd_policy(nd: Option<u32>) -> SecurityPolicy {
    let mut sp = SecurityPolicy::new(small_universe());
    sp.insert_rule(PolicyRule::base(
        "r1",
        Modality::Positive,
        subject("boss"),
        "sign",
        "form",
    ))
    .unwrap();
    if let Some(nd) = nd {
        sp.set_nd(Permission::new("sign", "form").key(), nd).unwrap();
    }
    sp
}

#[test]
fn nd_bounds_live_delegations() {
    for k in 1..=4u32 {
        let mut engine = Engine::new(nd_policy(Some(k)), GrantorHierarchy::new());
        for i in 0..k {
            let r = DelegationRule::grant(
                subject("boss"),
                subject(&format!("g{i}")),
                Permission::new("sign", "form"),
            );
            assert!(engine.delegate(r).unwrap().is_accepted());
        }
        let extra = DelegationRule::grant(subject("boss"), subject("late"), Permission::new("sign", "form"));
        assert_eq!(engine.delegate(extra).unwrap().reason, Some(DenialReason::NdExceeded));

        let mut open = Engine::new(nd_policy(None), GrantorHierarchy::new());
        for i in 0..2 * k {
            let r = DelegationRule::grant(
                subject("boss"),
                subject(&format!("g{i}")),
                Permission::new("sign", "form"),
            );
            assert!(open.delegate(r).unwrap().is_accepted());
        }
    }
}

#[test]
fn expired_delegations_free_nd_slots() {
    let mut engine = Engine::new(nd_policy(Some(1)), GrantorHierarchy::new());
    let dated = DelegationRule::grant(subject("boss"), subject("a"), Permission::new("sign", "form"))
        .with_dc(Constraint::Before("08/01/25".parse().unwrap()));
    assert!(engine.delegate(dated).unwrap().is_accepted());
    let next = || DelegationRule::grant(subject("boss"), subject("b"), Permission::new("sign", "form"));
    assert!(!engine.delegate(next()).unwrap().is_accepted());
    engine.tick("08/01/25".parse().unwrap()).unwrap();
    assert!(engine.delegate(next()).unwrap().is_accepted());
}
