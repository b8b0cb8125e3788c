//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every check compares against an independent oracle from
//! `dlg-testkit` or a hand-written table.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use dlg_cli::document::parse_policy;
use dlg_cli::script::{parse_script, run_script, RunOptions};
use dlg_core::consistency::check_consistency;
use dlg_core::constraint::{eval_constraint, parse_constraint, print_constraint, Constraint, EvalContext};
use dlg_core::engine::{
    check_legitimacy, transition, AgreementMode, AgreementSession, DenialReason, Engine, EngineError, SessionEvent,
    SessionState,
};
use dlg_core::policy::{
    DelegationRule, GrantorHierarchy, Modality, Permission, PolicyRule, Provenance, RuleId, RuleType, SecurityPolicy,
};
use dlg_core::revocation::{
    enumerate_schemes, on_grantor_permission_loss, Dominance, Monotonicity, Plurality, Propagation, RevocationError,
    RevocationScheme,
};
use dlg_testkit::fixture::{
    matrix_target, present_course_key, scheme_matrix, Expected, AGREEMENT_STEPS, MATRIX_REVOKER, MATRIX_TABLE,
};
use dlg_testkit::random::{
    dag_key, dag_subjects, random_constraint, random_dag, random_delegated_rule, random_permission, random_policy,
    random_request, SUBJECTS,
};
use dlg_testkit::{date, oracle, small_universe, subject};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

const RULE2_POLICY: &str = "\
format dlg/1
universe 06/01/25 10/01/25
locations classroom
attributes tenured
interval professor-absence [06/01/25-08/01/25]
Rule2: (req, negative, assistant, present, course)
r0: (req, positive, professor, present, course)
";

const RULE1_SCRIPT: &str = "\
DELEGATE professor assistant present course WHEN DURING professor-absence
QUERY assistant present course
REVOKE weak-local-single-delete professor present course TARGET assistant
QUERY assistant present course
";

fn rule1_rule2() -> Outcome {
    let doc = parse_policy(RULE2_POLICY).map_err(|e| e.to_string())?;
    let script = parse_script(RULE1_SCRIPT, doc.policy.universe()).map_err(|e| e.to_string())?;

    // Stop after the delegation to inspect the added rule.
    let partial =
        parse_script(RULE1_SCRIPT.lines().next().unwrap_or(""), doc.policy.universe()).map_err(|e| e.to_string())?;
    let delegated = run_script(&doc, &partial, &RunOptions::default());
    let sp = delegated.engine.policy();
    let rule1 = sp
        .rules()
        .iter()
        .find(|r| !r.is_base())
        .ok_or("delegation added no rule")?;
    let rule2 = sp.rule(&RuleId::new("Rule2")).ok_or("Rule2 missing")?;
    ensure(
        rule1.subject == subject("assistant")
            && rule1.modality == Modality::Positive
            && (rule1.action.as_str(), rule1.object.as_str()) == ("present", "course")
            && rule1.constraint.as_ref().map(print_constraint).as_deref() == Some("DURING [06/01/25-08/01/25]"),
        || format!("unexpected delegated rule {rule1:?}"),
    )?;
    ensure(sp.outranks(rule1, rule2), || "Rule1 does not outrank Rule2".into())?;

    let report = run_script(&doc, &script, &RunOptions::default());
    ensure(report.failures.is_empty(), || format!("failures {:?}", report.failures))?;
    let decisions: Vec<&str> = report
        .transcript
        .iter()
        .filter(|l| l.contains("QUERY"))
        .filter_map(|l| l.rsplit(" -> ").next())
        .collect();
    ensure(decisions == ["permit", "deny"], || format!("decisions {decisions:?}"))?;
    let before = &doc.policy;
    let after = report.engine.policy();
    let diff = oracle::decision_differences(before, after, &[subject("assistant"), subject("professor")]);
    ensure(diff.is_empty(), || format!("{} decision differences", diff.len()))?;
    ensure(after.rules() == before.rules(), || "rule set differs".into())?;
    Ok(format!(
        "permit then deny; final policy matches initial over {} contexts",
        oracle::all_contexts(before.universe()).len()
    ))
}

fn legitimacy_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut mismatches = 0;
    let mut checks = 0;
    for _ in 0..1000 {
        let sp = random_policy(&mut rng, 10);
        ensure(
            sp.rules().len() <= 10 && sp.universe().context_count().is_some_and(|n| n <= 200),
            || "generator exceeded bounds".into(),
        )?;
        let p = random_permission(&mut rng);
        for s in SUBJECTS {
            let gr = subject(s);
            checks += 1;
            if check_legitimacy(&sp, &gr, &p) != oracle::legitimate(&sp, &gr, &p) {
                mismatches += 1;
            }
        }
    }
    ensure(mismatches == 0, || {
        format!("{mismatches} mismatches in {checks} checks")
    })?;
    Ok(format!("1000 policies, {checks} checks, 0 mismatches"))
}

fn consistency_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let mut mismatches = 0;
    let mut conflicts = 0;
    for _ in 0..1000 {
        let sp = random_policy(&mut rng, 10);
        let dr = random_delegated_rule(&mut rng);
        let found: BTreeSet<RuleId> = check_consistency(&sp, &dr)
            .pairs
            .into_iter()
            .map(|p| p.existing)
            .collect();
        let expected = oracle::conflicts(&sp, &dr);
        conflicts += expected.len();
        if found != expected {
            mismatches += 1;
        }
    }
    ensure(mismatches == 0, || format!("{mismatches} mismatching pairs"))?;
    Ok(format!("1000 pairs, {conflicts} conflicts, 0 mismatches"))
}

/// Scheme names that must appear verbatim.
const TABLE_ROWS: [&str; 13] = [
    "weak local single modify",
    "weak local plural modify",
    "weak global single modify",
    "weak global plural modify",
    "strong local single modify",
    "strong local plural modify",
    "strong global single modify",
    "strong global plural modify",
    "weak local single delete",
    "weak local plural delete",
    "weak global single delete",
    "weak global plural delete",
    "strong local single delete",
];

fn scheme_matrix_check() -> Outcome {
    let names: Vec<String> = enumerate_schemes().iter().map(|s| s.to_string()).collect();
    let distinct: BTreeSet<&String> = names.iter().collect();
    ensure(names.len() == 16 && distinct.len() == 16, || {
        format!("{} names, {} distinct", names.len(), distinct.len())
    })?;
    for row in TABLE_ROWS {
        ensure(names.iter().any(|n| n == row), || format!("missing table row `{row}`"))?;
    }
    for (name, expected) in MATRIX_TABLE {
        let scheme: RevocationScheme = name.parse().map_err(|e| format!("{e}"))?;
        let mut engine = scheme_matrix();
        let result = engine.revoke(
            &subject(MATRIX_REVOKER),
            &present_course_key(),
            Some(&matrix_target(name)),
            &scheme,
        );
        let ok = match (&expected, &result) {
            (Expected::Survivors(rows), Ok(_)) => {
                let want: Vec<(u64, String, String)> = rows
                    .iter()
                    .map(|(n, gr, gt)| (*n, gr.to_string(), gt.to_string()))
                    .collect();
                let got: Vec<(u64, String, String)> = engine
                    .graph()
                    .live()
                    .map(|e| (e.id.0, e.gr.to_string(), e.gt.to_string()))
                    .collect();
                want == got
            }
            (Expected::Mismatch, Err(EngineError::Revocation(RevocationError::SchemeMismatch { .. }))) => true,
            (Expected::NoVictim, Err(EngineError::Revocation(RevocationError::NoVictim { .. }))) => true,
            _ => false,
        };
        ensure(ok, || format!("{name}: expected {expected:?}, got {result:?}"))?;
    }
    Ok("16 distinct schemes, 13 table rows present, 16/16 match the hand table".into())
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

fn inversion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let everyone: Vec<_> = SUBJECTS.iter().map(|s| subject(s)).collect();
    let mut pairs = 0;
    let mut violations = 0;
    let mut attempts = 0;
    while pairs < 500 {
        attempts += 1;
        ensure(attempts < 20_000, || format!("only {pairs} accepted delegations"))?;
        let sp = random_policy(&mut rng, 10);
        let Some(request) = random_request(&mut rng, &sp) else {
            continue;
        };
        let mut engine = Engine::new(sp.clone(), GrantorHierarchy::new());
        let (gr, gt, t, key) = (request.gr.clone(), request.gt.clone(), request.t, request.p.key());
        match engine.delegate(request) {
            Ok(n) if n.is_accepted() => {}
            _ => continue,
        }
        pairs += 1;
        let scheme = matching_scheme(&mut rng, t);
        let restored = engine.revoke(&gr, &key, Some(&gt), &scheme).is_ok()
            && oracle::decision_differences(&sp, engine.policy(), &everyone).is_empty();
        if !restored {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} violations in {pairs} pairs"))?;
    Ok("500 pairs, 0 violations".into())
}

fn constraint_language() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    let universe = small_universe();
    let contexts = oracle::all_contexts(&universe);
    ensure(contexts.len() == 80, || format!("{} contexts", contexts.len()))?;
    let mut deepest = 0;
    for _ in 0..1000 {
        let c = random_constraint(&mut rng, 5);
        ensure(c.depth() <= 5, || format!("depth {} exceeds 5", c.depth()))?;
        deepest = deepest.max(c.depth());
        let text = print_constraint(&c);
        let back = parse_constraint(&text).map_err(|e| format!("`{text}`: {e}"))?;
        ensure(back == c, || format!("round trip changed `{text}`"))?;
        for ctx in &contexts {
            ensure(eval_constraint(&c, ctx) == oracle::truth_in(&c, ctx), || {
                format!("`{text}` disagrees with the truth table at {ctx:?}")
            })?;
        }
    }

    let wednesday = date("08/01/25");
    ensure(wednesday.weekday().to_string() == "Wed", || {
        "08/01/25 is not a Wednesday".into()
    })?;
    let before = parse_constraint("BEFORE 08/01/25").map_err(|e| e.to_string())?;
    let permitted: Vec<String> = universe
        .first_day()
        .iter_through(universe.last_day())
        .filter(|d| {
            eval_constraint(
                &before,
                &EvalContext {
                    now: *d,
                    locations: BTreeSet::new(),
                    attributes: BTreeSet::new(),
                },
            )
        })
        .map(|d| d.to_string())
        .collect();
    ensure(permitted == ["06/01/25", "07/01/25"], || {
        format!("BEFORE Wednesday permits {permitted:?}")
    })?;
    Ok(format!(
        "1000 ASTs (max depth {deepest}) round-trip and match the 80-context truth table; BEFORE Wednesday permits Monday and Tuesday"
    ))
}

fn cascade_fixpoint() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1007);
    let key = dag_key();
    let mut cascaded = 0;
    for i in 0..200 {
        let mut engine = random_dag(&mut rng, 12);
        ensure(engine.graph().edges().count() <= 12, || "DAG exceeds 12 edges".into())?;
        let owner = subject(if rng.gen_bool(0.5) { "n0" } else { "n1" });
        let first = engine.lose(&owner, &key).map_err(|e| format!("DAG {i}: {e}"))?;
        cascaded += first.revoked.len();
        for s in dag_subjects() {
            let again = on_grantor_permission_loss(engine.policy(), engine.graph(), &s, &key)
                .map_err(|e| format!("DAG {i}: {e}"))?;
            ensure(again.revoked.is_empty(), || {
                format!("DAG {i}: second pass revoked {:?}", again.revoked)
            })?;
        }
    }
    Ok(format!(
        "200 DAGs, {cascaded} edges cascaded, second pass revoked nothing"
    ))
}

fn state_machine() -> Outcome {
    let legal: BTreeSet<(String, String, String, String)> = AGREEMENT_STEPS
        .iter()
        .map(|(m, s, e, n)| (m.to_string(), s.to_string(), e.to_string(), n.to_string()))
        .collect();
    let (mut allowed, mut rejected) = (0, 0);
    for mode in AgreementMode::ALL {
        for state in SessionState::ALL {
            for event in SessionEvent::ALL {
                let row = legal
                    .iter()
                    .find(|(m, s, e, _)| *m == mode.to_string() && *s == state.to_string() && *e == event.to_string());
                let session = AgreementSession {
                    state,
                    ..AgreementSession::new(
                        mode,
                        subject("gr"),
                        subject("gt"),
                        Permission::new("a", "o"),
                        None::<Constraint>,
                    )
                };
                let applied = session.apply(event);
                match (row, transition(mode, state, event), applied) {
                    (Some((.., next)), Some(got), Ok(s)) if *next == got.to_string() && s.state == got => allowed += 1,
                    (None, None, Err(EngineError::InvalidTransition { .. })) => rejected += 1,
                    (row, got, applied) => {
                        return Err(format!(
                            "{mode} {state} {event}: table {row:?}, machine {got:?}, session {applied:?}"
                        ))
                    }
                }
            }
        }
    }
    ensure(allowed == legal.len(), || {
        format!("{allowed} of {} legal steps seen", legal.len())
    })?;
    Ok(format!(
        "{} triples: {allowed} legal, {rejected} rejected with an error",
        allowed + rejected
    ))
}

fn nd_policy(nd: Option<u32>) -> Result<SecurityPolicy, String> {
    let mut sp = SecurityPolicy::new(small_universe());
    sp.insert_rule(PolicyRule::base(
        "r1",
        Modality::Positive,
        subject("boss"),
        "sign",
        "form",
    ))
    .map_err(|e| e.to_string())?;
    if let Some(nd) = nd {
        sp.set_nd(Permission::new("sign", "form").key(), nd)
            .map_err(|e| e.to_string())?;
    }
    Ok(sp)
}

fn nd_enforcement() -> Outcome {
    let request = |i: u32| {
        DelegationRule::grant(
            subject("boss"),
            subject(&format!("g{i}")),
            Permission::new("sign", "form"),
        )
    };
    for k in 1..=6u32 {
        let mut bounded = Engine::new(nd_policy(Some(k))?, GrantorHierarchy::new());
        for i in 0..k {
            let n = bounded.delegate(request(i)).map_err(|e| e.to_string())?;
            ensure(n.is_accepted(), || format!("k={k}: request {} denied: {n}", i + 1))?;
        }
        let n = bounded.delegate(request(k)).map_err(|e| e.to_string())?;
        ensure(n.reason == Some(DenialReason::NdExceeded), || {
            format!("k={k}: extra request gave {n}")
        })?;
        let live = bounded
            .policy()
            .rules()
            .iter()
            .filter(|r| matches!(r.provenance, Provenance::Delegated { .. }))
            .count();
        ensure(live == k as usize, || format!("k={k}: {live} delegated rules"))?;

        let mut open = Engine::new(nd_policy(None)?, GrantorHierarchy::new());
        for i in 0..2 * k {
            let n = open.delegate(request(i)).map_err(|e| e.to_string())?;
            ensure(n.is_accepted(), || {
                format!("k={k} without Nd: request {} denied: {n}", i + 1)
            })?;
        }
    }
    Ok("k = 1..6: request k+1 denied nd-exceeded; without Nd all 2k accepted".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("Rule1/Rule2 delegate-query-revoke scenario", rule1_rule2),
        ("legitimacy matches brute force", legitimacy_oracle),
        ("consistency matches brute force", consistency_oracle),
        ("revocation scheme matrix", scheme_matrix_check),
        ("delegate/revoke inversion", inversion),
        ("constraint language", constraint_language),
        ("cascade fixpoint", cascade_fixpoint),
        ("agreement state machine", state_machine),
        ("Nd enforcement", nd_enforcement),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
