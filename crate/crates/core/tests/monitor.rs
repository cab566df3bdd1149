mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use iupc_core::base::ConstraintBase;
use iupc_core::dsl::{parse_constraint, parse_document};
use iupc_core::expr::Value;
use iupc_core::model::{parse_trace, ActivityRepository, Event, EventKind, ProcessSchema, ResourceModel, Trace};
use iupc_core::eval::ViolationReason;
use iupc_core::monitor::{replay, MonitorSession};
use iupc_core::time::{Duration, Timestamp};
use proptest::prelude::*;

fn schemas() -> Vec<ProcessSchema> {
    vec![
        schema_fixture("schemas/invasive-surgery.json"),
        schema_fixture("schemas/treatment.json"),
    ]
}

fn resources() -> ResourceModel {
    ResourceModel::parse(&read_fixture("resources.json")).unwrap()
}

fn identified(text: &str) -> ConstraintBase {
    let mut base = ConstraintBase::from_items(parse_document(text).unwrap()).unwrap();
    base.identify(&schemas(), &ActivityRepository::parse(&read_fixture("repository.json")).unwrap());
    base
}

fn replay_fixture(base: &ConstraintBase, name: &str) -> Vec<(String, ViolationReason)> {
    let traces = parse_trace(&read_fixture(&format!("traces/{name}.jsonl"))).unwrap();
    let mut session = MonitorSession::open(base, &schemas(), &resources());
    replay(&mut session, &traces)
        .unwrap()
        .violations
        .into_iter()
        .map(|v| (v.constraint, v.reason))
        .collect()
}

#[test]
fn session_holds_only_run_time_constraints() {
    let text = ["c3", "c6", "c11"].map(|n| read_fixture(&format!("constraints/{n}.iupc"))).join("\n");
    let base = identified(&text);
    let session = MonitorSession::open(&base, &schemas(), &resources());
    assert_eq!(session.constraint_ids(), vec!["C11", "C3"]);
}

#[test]
fn empty_base_monitors_nothing() {
    let base = identified("");
    let session = MonitorSession::open(&base, &schemas(), &resources());
    assert!(session.constraint_ids().is_empty());
    assert!(replay_fixture(&base, "c3-three-hours").is_empty());
}

#[test]
fn fixture_traces() {
    let base = identified(&read_fixture("constraints/fig1.iupc"));
    let only = |name: &str, id: &str| -> Vec<ViolationReason> {
        replay_fixture(&base, name).into_iter().filter(|(c, _)| c == id).map(|(_, r)| r).collect()
    };
    assert_eq!(only("c3-three-hours", "C3"), vec![ViolationReason::Time]);
    assert!(only("c3-compliant", "C3").is_empty());
    assert!(only("c3-different-patient", "C3").is_empty());
    assert_eq!(only("c11-nurse", "C11"), vec![ViolationReason::Resource]);
    assert!(only("c11-doctor", "C11").is_empty());
}

fn ev(kind: EventKind, label: &str, occ: &str, minute: i64) -> Event {
    Event {
        kind,
        activity_label: label.into(),
        occurrence_id: occ.into(),
        timestamp: Timestamp::from_millis(0) + Duration::minutes(minute),
        actor: None,
        data: BTreeMap::new(),
    }
}

#[test]
fn pending_obligations_are_sorted() {
    let c6 = parse_constraint(&read_fixture("constraints/c6.iupc")).unwrap();
    let mut m = MonitorSession::with_constraints([c6], &schemas(), &resources());
    let mut minute = 0;
    for inst in ["case-b", "case-a"] {
        for kind in [EventKind::Start, EventKind::Complete] {
            m.step_event(inst, "Invasive Surgery", &ev(kind, "conduct surgery", "s", minute)).unwrap();
            minute += 1;
        }
    }
    let pending = m.pending_obligations();
    let instances: Vec<&str> = pending.iter().map(|p| p.instance.as_str()).collect();
    assert_eq!(instances, vec!["case-a", "case-b"]);
    assert!(pending.iter().all(|p| p.constraint == "C6" && p.anchor_occurrence == "s"));
    assert_eq!(m.close_instance("case-a").len(), 1);
    assert_eq!(m.pending_obligations().len(), 1);
}

/// Events of `count` instances each running one centrifuge step, interleaved
/// by `order` (instance index per event).
fn centrifuge_events(order: &[usize], count: usize) -> Vec<(String, Event)> {
    let mut started = vec![false; count];
    let mut done = vec![false; count];
    let mut out = Vec::new();
    for (minute, &i) in order.iter().enumerate() {
        let i = i % count;
        if done[i] {
            continue;
        }
        let kind = if started[i] { EventKind::Complete } else { EventKind::Start };
        if started[i] {
            done[i] = true;
        }
        started[i] = true;
        out.push((format!("case-{i}"), ev(kind, "centrifuge sample", "c", minute as i64)));
    }
    out
}

fn c10_session() -> MonitorSession {
    let c10 = parse_constraint(
        "constraint C10 { context all; on exists c is 'centrifuge sample'; behavior synchronize c 'centrifuge'; }",
    )
    .unwrap();
    MonitorSession::with_constraints([c10], &schemas(), &resources())
}

fn random_traces(seed: u64, instances: usize) -> Vec<Trace> {
    use rand::{rngs::StdRng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(seed);
    let model = RandomModel {
        tree: Tree::Seq(vec![Tree::Act(0), Tree::Act(1), Tree::Act(2)]),
        labels: vec!["blood test", "centrifuge sample", "sonography"],
    };
    let origin = Timestamp::parse_iso("2024-03-01T08:00:00Z").unwrap();
    (0..instances)
        .map(|i| {
            let run = model.linearize(&mut rng);
            let mut t = trace_of(&model, &run, &format!("case-{i}"), "treatment", origin + Duration::minutes(i as i64 * 37));
            for e in &mut t.events {
                e.data.insert("patient".into(), Value::Str(format!("p{}", i % 2)));
            }
            t
        })
        .collect()
}

proptest! {
    #[test]
    fn resource_holder_is_always_a_running_occurrence(count in 1usize..5, order in prop::collection::vec(0usize..5, 1..30)) {
        let mut m = c10_session();
        let mut running: BTreeSet<String> = BTreeSet::new();
        for (inst, e) in centrifuge_events(&order, count) {
            m.step_event(&inst, "treatment", &e).unwrap();
            match e.kind {
                EventKind::Start => running.insert(inst.clone()),
                EventKind::Complete => running.remove(&inst),
            };
            match m.mutexes().holder("centrifuge") {
                Some((holder, occ)) => {
                    prop_assert!(running.contains(holder));
                    prop_assert_eq!(occ, "c");
                }
                None => prop_assert!(running.is_empty()),
            }
            for (qi, _) in m.mutexes().queued("centrifuge") {
                prop_assert!(running.contains(qi));
            }
        }
    }

    #[test]
    fn outcomes_do_not_depend_on_absolute_time(seed in any::<u64>(), instances in 1usize..4, hours in -1000i64..1000) {
        let c3 = read_fixture("constraints/c3.iupc");
        let c10 = "constraint C10 { context all; on exists c is 'centrifuge sample'; behavior synchronize c 'centrifuge'; }";
        let cs: Vec<_> = [c3.as_str(), c10].iter().map(|s| parse_constraint(s).unwrap()).collect();
        let traces = random_traces(seed, instances);
        let shift = Duration::hours(hours);
        let moved: Vec<Trace> = traces.iter().map(|t| t.shifted(shift)).collect();
        let first = replay(&mut MonitorSession::with_constraints(cs.clone(), &schemas(), &resources()), &traces).unwrap();
        let second = replay(&mut MonitorSession::with_constraints(cs, &schemas(), &resources()), &moved).unwrap();
        let mut expected = first.clone();
        expected.violations.iter_mut().for_each(|v| v.timestamp = v.timestamp + shift);
        expected.actions.iter_mut().for_each(|a| a.timestamp = a.timestamp + shift);
        prop_assert_eq!(second, expected);
    }
}
