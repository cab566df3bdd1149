mod common;

use std::collections::BTreeMap;

use common::*;
use iupc_core::dsl::parse_constraint;
use iupc_core::matcher::{holds_on_path, match_schema, match_trace_prefix, Completeness, MatchBinding};
use iupc_core::model::{enumerate_paths, Event, EventKind, ExecutionPath, Trace};
use iupc_core::time::{Duration, Timestamp};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn pattern(src: &str) -> iupc_core::constraint::StructuralPattern {
    parse_constraint(src).unwrap().linkage.pattern
}

const C6: &str = "constraint C6 { context all; on exists s is 'conduct surgery'; \
    require exists e is 'examine patient' and e eventually-precedes s; }";
const C3: &str = "constraint C3 { context all; on exists a1 is 'blood test'; \
    require exists a2 is 'sonography' and a1 eventually-precedes a2; }";

#[test]
fn single_anchor_occurrence_gives_one_binding() {
    let s = schema_fixture("schemas/invasive-surgery.json");
    let m = match_schema(&pattern(C6), &s);
    assert_eq!(m.len(), 1);
    assert_eq!(m[0].vars["s"], "surgery");
    assert_eq!(m[0].completeness, Completeness::AnchorOnly);
}

#[test]
fn absent_anchor_label_gives_no_binding() {
    let s = schema_fixture("schemas/treatment.json");
    assert!(match_schema(&pattern(C6), &s).is_empty());
}

#[test]
fn repeated_anchor_label_gives_one_binding_per_node() {
    let model = RandomModel {
        tree: Tree::Seq(vec![Tree::Act(0), Tree::Act(1), Tree::Act(2)]),
        labels: vec!["conduct surgery", "examine patient", "conduct surgery"],
    };
    let m = match_schema(&pattern(C6), &model.schema("S"));
    let nodes: Vec<&str> = m.iter().map(|b| b.vars["s"].as_str()).collect();
    assert_eq!(nodes, vec!["t0", "t2"]);
}

fn path(nodes: &[&str]) -> ExecutionPath {
    ExecutionPath {
        nodes: nodes.iter().map(|n| n.to_string()).collect(),
        guards: Vec::new(),
    }
}

fn anchor(var: &str, node: &str) -> MatchBinding {
    MatchBinding {
        vars: BTreeMap::from([(var.to_string(), node.to_string())]),
        completeness: Completeness::AnchorOnly,
    }
}

#[test]
fn holds_on_path_examples() {
    let s = schema_fixture("schemas/invasive-surgery.json");
    let p = pattern(C6);
    let full = path(&["examine", "affirm", "inform", "surgery", "ward"]);
    assert!(holds_on_path(&p, &s, &full, &anchor("s", "surgery")));
    assert!(!holds_on_path(&p, &s, &path(&["surgery"]), &anchor("s", "surgery")));

    let direct = pattern(
        "constraint D { context all; on exists s is 'conduct surgery'; \
         require exists e is 'examine patient' and e directly-precedes s; }",
    );
    assert!(!holds_on_path(&direct, &s, &full, &anchor("s", "surgery")));
    assert!(holds_on_path(&direct, &s, &path(&["examine", "surgery"]), &anchor("s", "surgery")));
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

fn run(steps: &[(&str, &str)]) -> Trace {
    let mut events = Vec::new();
    for (i, (label, occ)) in steps.iter().enumerate() {
        events.push(ev(EventKind::Start, label, occ, 2 * i as i64));
        events.push(ev(EventKind::Complete, label, occ, 2 * i as i64 + 1));
    }
    Trace::new("i", "treatment", events).unwrap()
}

#[test]
fn trace_prefix_examples() {
    let p = pattern(C3);
    let t = run(&[("blood test", "b"), ("sonography", "s")]);
    let full = match_trace_prefix(&p, &t, t.events.len()).unwrap();
    assert_eq!(full.len(), 1);
    assert_eq!(full[0].completeness, Completeness::Full);
    assert_eq!(full[0].vars["a2"], "s");

    let before_sono = match_trace_prefix(&p, &t, 2).unwrap();
    assert_eq!(before_sono.len(), 1);
    assert_eq!(before_sono[0].completeness, Completeness::AnchorOnly);

    let twice = run(&[("blood test", "b1"), ("blood test", "b2"), ("sonography", "s")]);
    let m = match_trace_prefix(&p, &twice, twice.events.len()).unwrap();
    assert_eq!(m.len(), 2);
    assert!(m.iter().all(|b| b.completeness == Completeness::Full));
}

proptest! {
    #[test]
    fn full_bindings_stay_full(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let model = random_model(&mut rng, 8);
        let p = random_pattern(&mut rng, &model.used_labels()).constraint("P").linkage.pattern;
        let runs: Vec<Vec<usize>> = (0..3).map(|_| model.linearize(&mut rng)).collect();
        for r in runs {
            let t = trace_of(&model, &r, "i", "R", Timestamp::from_millis(0));
            let mut earlier: Vec<MatchBinding> = Vec::new();
            for k in 0..=t.events.len() {
                let now = match_trace_prefix(&p, &t, k).unwrap();
                for b in earlier.iter().filter(|b| b.completeness == Completeness::Full) {
                    prop_assert!(now.contains(b), "binding {:?} lost at prefix {}", b, k);
                }
                earlier = now;
            }
        }
    }

    #[test]
    fn path_holds_agrees_with_brute_force(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let model = random_model(&mut rng, 7);
        let s = model.schema("R");
        let rp = random_pattern(&mut rng, &model.used_labels());
        let p = rp.constraint("P").linkage.pattern;
        let concurrent = model.concurrent_pairs();
        for path in enumerate_paths(&s, 2).unwrap() {
            let acts: Vec<usize> = path.nodes.iter().map(|n| n[1..].parse().unwrap()).collect();
            let expected = rp.holds(&model, &acts, &concurrent);
            let bindings = match_schema(&p, &s);
            let on_path: Vec<&MatchBinding> = bindings.iter().filter(|b| b.vars.values().all(|n| path.contains(n))).collect();
            match expected {
                None => prop_assert!(on_path.is_empty()),
                Some(all_hold) => {
                    let each: Vec<bool> = on_path.iter().map(|b| holds_on_path(&p, &s, &path, b)).collect();
                    prop_assert_eq!(each.iter().all(|&h| h), all_hold);
                }
            }
        }
    }
}
