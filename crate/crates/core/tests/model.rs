mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use iupc_core::expr::Value;
use iupc_core::model::{enumerate_paths, parse_trace, serialize_trace, Event, EventKind, ProcessSchema, Trace};
use iupc_core::time::{Duration, Timestamp};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

/// prefix -> [body] -> suffix, where the body may repeat through a guarded back edge.
fn loop_schema(prefix: usize, body: usize, suffix: usize) -> ProcessSchema {
    let ids = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let (p, b, s) = (ids("p", prefix), ids("b", body), ids("s", suffix));
    let mut nodes = vec![
        r#"{"id": "start", "kind": "start"}"#.to_string(),
        r#"{"id": "end", "kind": "end"}"#.to_string(),
        r#"{"id": "j", "kind": "xor-join"}"#.to_string(),
        r#"{"id": "x", "kind": "xor-split"}"#.to_string(),
    ];
    for a in p.iter().chain(&b).chain(&s) {
        nodes.push(format!(r#"{{"id": "{a}", "kind": "activity", "label": "{a}"}}"#));
    }
    let main: Vec<String> = ["start".to_string()]
        .into_iter()
        .chain(p)
        .chain(["j".to_string()])
        .chain(b)
        .chain(["x".to_string()])
        .collect();
    let exit: Vec<String> = ["x".to_string()].into_iter().chain(s).chain(["end".to_string()]).collect();
    let mut edges: Vec<String> = main
        .windows(2)
        .map(|w| format!(r#"{{"from": "{}", "to": "{}"}}"#, w[0], w[1]))
        .collect();
    edges.push(r#"{"from": "x", "to": "j", "guard": "again == true"}"#.into());
    for (i, w) in exit.windows(2).enumerate() {
        let guard = if i == 0 { r#", "guard": "again == false""# } else { "" };
        edges.push(format!(r#"{{"from": "{}", "to": "{}"{guard}}}"#, w[0], w[1]));
    }
    let text = format!(
        r#"{{"id": "loop", "nodes": [{}], "control_edges": [{}], "data_elements": [{{"name": "again", "type": "boolean"}}]}}"#,
        nodes.join(","),
        edges.join(",")
    );
    ProcessSchema::parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

fn node_sequences(s: &ProcessSchema, bound: usize) -> BTreeSet<Vec<String>> {
    enumerate_paths(s, bound).unwrap().into_iter().map(|p| p.nodes).collect()
}

#[test]
fn three_activity_sequence() {
    let linear = loop_free_chain(&["a", "b", "c"]);
    assert_eq!(linear.nodes.len(), 5);
    assert_eq!(linear.control_edges.len(), 4);
    assert_eq!(enumerate_paths(&linear, 2).unwrap().len(), 1);
}

fn loop_free_chain(labels: &[&str]) -> ProcessSchema {
    let mut nodes = vec![r#"{"id": "start", "kind": "start"}"#.to_string()];
    let mut edges = Vec::new();
    let mut prev = "start".to_string();
    for l in labels {
        nodes.push(format!(r#"{{"id": "{l}", "kind": "activity", "label": "{l}"}}"#));
        edges.push(format!(r#"{{"from": "{prev}", "to": "{l}"}}"#));
        prev = l.to_string();
    }
    nodes.push(r#"{"id": "end", "kind": "end"}"#.into());
    edges.push(format!(r#"{{"from": "{prev}", "to": "end"}}"#));
    ProcessSchema::parse(&format!(
        r#"{{"id": "chain", "nodes": [{}], "control_edges": [{}]}}"#,
        nodes.join(","),
        edges.join(",")
    ))
    .unwrap()
}

#[test]
fn guarded_branch_fixture() {
    let s = schema_fixture("gap/schemas/treatment.json");
    let paths = enumerate_paths(&s, 2).unwrap();
    assert_eq!(paths.len(), 2);
    assert!(paths.iter().all(|p| p.guards.len() == 1));
    assert_eq!(s.data_elements.len(), 1);
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

proptest! {
    #[test]
    fn higher_loop_bounds_only_add_paths(prefix in 0usize..3, body in 1usize..3, suffix in 0usize..3, bound in 2usize..5) {
        let s = loop_schema(prefix, body, suffix);
        let lower = node_sequences(&s, bound - 1);
        let upper = node_sequences(&s, bound);
        prop_assert!(lower.is_subset(&upper));
        let expected: BTreeSet<Vec<String>> = (1..=bound)
            .map(|reps| {
                let mut seq: Vec<String> = (0..prefix).map(|i| format!("p{i}")).collect();
                for _ in 0..reps {
                    seq.extend((0..body).map(|i| format!("b{i}")));
                }
                seq.extend((0..suffix).map(|i| format!("s{i}")));
                seq
            })
            .collect();
        prop_assert_eq!(upper, expected);
    }

    #[test]
    fn parallel_branches_interleave_in_every_order(left in 1usize..4, right in 1usize..4) {
        let branch = |name: &str, n: usize| -> String {
            let acts: Vec<String> = (0..n).map(|i| format!("{name}{i}")).collect();
            let mut out = Vec::new();
            let mut prev = "fork".to_string();
            for a in &acts {
                out.push(format!(r#"{{"from": "{prev}", "to": "{a}"}}"#));
                prev = a.clone();
            }
            out.push(format!(r#"{{"from": "{prev}", "to": "sync"}}"#));
            out.join(",")
        };
        let nodes: Vec<String> = (0..left)
            .map(|i| format!("l{i}"))
            .chain((0..right).map(|i| format!("r{i}")))
            .map(|id| format!(r#"{{"id": "{id}", "kind": "activity", "label": "{id}"}}"#))
            .collect();
        let text = format!(
            r#"{{"id": "par", "nodes": [{{"id": "start", "kind": "start"}}, {{"id": "fork", "kind": "and-split"}},
                {{"id": "sync", "kind": "and-join"}}, {{"id": "end", "kind": "end"}}, {}],
              "control_edges": [{{"from": "start", "to": "fork"}}, {}, {}, {{"from": "sync", "to": "end"}}]}}"#,
            nodes.join(","),
            branch("l", left),
            branch("r", right)
        );
        let s = ProcessSchema::parse(&text).unwrap();
        let paths = node_sequences(&s, 2);
        prop_assert_eq!(paths.len(), binomial(left + right, left));
        for p in &paths {
            let l: Vec<&String> = p.iter().filter(|n| n.starts_with('l')).collect();
            prop_assert!(l.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn random_schemas_round_trip_and_match_their_tree(seed in any::<u64>()) {
        let model = random_model(&mut StdRng::seed_from_u64(seed), 8);
        let s = model.schema("R");
        prop_assert_eq!(&ProcessSchema::parse(&s.to_json()).unwrap(), &s);
        let expected: BTreeSet<Vec<String>> = model
            .paths()
            .into_iter()
            .map(|p| p.into_iter().map(act_id).collect())
            .collect();
        prop_assert_eq!(node_sequences(&s, 2), expected);
    }

    #[test]
    fn traces_round_trip(seed in any::<u64>(), instances in 1usize..4, age in 0i64..120) {
        let mut rng = StdRng::seed_from_u64(seed);
        let model = random_model(&mut rng, 6);
        let origin = Timestamp::parse_iso("2024-05-01T12:00:00Z").unwrap();
        let traces: Vec<Trace> = (0..instances)
            .map(|i| {
                let run = model.linearize(&mut rng);
                let mut t = trace_of(&model, &run, &format!("inst-{i}"), "R", origin + Duration::minutes(i as i64));
                if let Some(first) = t.events.first_mut() {
                    first.data = BTreeMap::from([
                        ("age".to_string(), Value::Int(age)),
                        ("urgent".to_string(), Value::Bool(age > 60)),
                        ("patient".to_string(), Value::Str(format!("p{i}"))),
                    ]);
                    first.actor = Some("dr-grey".into());
                }
                t
            })
            .filter(|t: &Trace| !t.events.is_empty())
            .collect();
        prop_assert_eq!(parse_trace(&serialize_trace(&traces)).unwrap(), traces);
    }
}

#[test]
fn events_keep_start_before_complete() {
    let ev = |kind, at| Event {
        kind,
        activity_label: "blood test".into(),
        occurrence_id: "b".into(),
        timestamp: Timestamp::from_millis(at),
        actor: None,
        data: BTreeMap::new(),
    };
    let t = Trace::new("i", "treatment", vec![ev(EventKind::Complete, 10), ev(EventKind::Start, 5)]).unwrap();
    assert_eq!(t.events[0].kind, EventKind::Start);
    assert!(Trace::new("i", "treatment", vec![ev(EventKind::Start, 10), ev(EventKind::Complete, 5)]).is_err());
}
