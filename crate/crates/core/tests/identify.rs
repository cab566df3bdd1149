mod common;

use common::*;
use iupc_core::dsl::{parse_constraint, parse_document};
use iupc_core::identify::{
    apply_change, identify, recompute_on_change, Change, DomainRuleSet, IdentificationStatus,
};
use iupc_core::model::{ActivityRepository, ProcessSchema};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use IdentificationStatus::*;

fn schemas() -> Vec<ProcessSchema> {
    vec![
        schema_fixture("schemas/invasive-surgery.json"),
        schema_fixture("schemas/treatment.json"),
    ]
}

fn repo() -> ActivityRepository {
    ActivityRepository::parse(&read_fixture("repository.json")).unwrap()
}

fn rules(extra: &str) -> DomainRuleSet {
    let text = read_fixture("constraints/fig1.iupc") + extra;
    DomainRuleSet::from_items(parse_document(&text).unwrap()).unwrap()
}

fn status(results: &[iupc_core::identify::IdentificationResult], id: &str) -> IdentificationStatus {
    results.iter().find(|r| r.rule == id).unwrap().status
}

#[test]
fn scenario_statuses() {
    let rs = rules("\nrule R1 'A loan above 10000 needs two approvals';\n");
    let results = identify(&rs, &schemas(), &repo());
    assert_eq!(status(&results, "C1"), Idle);
    assert_eq!(results.iter().find(|r| r.rule == "C1").unwrap().evidence.repository_labels.len(), 2);
    assert_eq!(status(&results, "C3"), Enabled);
    assert_eq!(status(&results, "C6"), Enabled);
    assert_eq!(status(&results, "R1"), NonProcess);
}

#[test]
fn unknown_labels_make_a_rule_non_process() {
    let c = parse_constraint(
        "constraint L { context all; on exists a is 'approve loan'; \
         require exists b is 'blood test' and a eventually-precedes b; }",
    )
    .unwrap();
    let rs = DomainRuleSet::from_constraints([c]).unwrap();
    let r = &identify(&rs, &schemas(), &repo())[0];
    assert_eq!(r.status, NonProcess);
    assert_eq!(r.evidence.unresolved_labels, vec!["approve loan".to_string()]);
}

#[test]
fn context_limits_which_schemas_count() {
    let c = parse_constraint(
        "constraint S { context process 'treatment' all; on exists s is 'conduct surgery'; }",
    )
    .unwrap();
    let rs = DomainRuleSet::from_constraints([c]).unwrap();
    assert_eq!(identify(&rs, &schemas(), &repo())[0].status, Idle);
}

#[test]
fn unrelated_change_has_no_transitions() {
    let rs = rules("");
    let before = identify(&rs, &schemas(), &repo());
    let change = Change { schema_id: "treatment".into(), label: "take vital signs".into() };
    let after = apply_change(&schemas(), &change).unwrap();
    let out = recompute_on_change(&before, &rs, &after, &repo(), &change);
    assert!(out.transitions.is_empty());
    assert_eq!(out.results, identify(&rs, &after, &repo()));
}

#[test]
fn new_activity_can_enable_a_non_process_rule() {
    let rs = rules(
        "\nconstraint X1 { context process 'treatment' all; on exists l is 'approve loan'; }\n",
    );
    let before = identify(&rs, &schemas(), &repo());
    assert_eq!(status(&before, "X1"), NonProcess);
    let change = Change { schema_id: "treatment".into(), label: "approve loan".into() };
    let after = apply_change(&schemas(), &change).unwrap();
    let out = recompute_on_change(&before, &rs, &after, &repo(), &change);
    assert_eq!(out.transitions.len(), 1);
    assert_eq!((out.transitions[0].from, out.transitions[0].to), (NonProcess, Enabled));
}

#[test]
fn change_to_unknown_schema_is_rejected() {
    let change = Change { schema_id: "nowhere".into(), label: "x".into() };
    assert!(apply_change(&schemas(), &change).is_err());
}

proptest! {
    /// Exactly one result per rule, and the status agrees with a direct
    /// reading of the schemas and the repository.
    #[test]
    fn statuses_partition_rules(seed in any::<u64>(), count in 1usize..8) {
        let mut rng = StdRng::seed_from_u64(seed);
        let model = random_model(&mut rng, 6);
        let s = model.schema("R");
        let repo = ActivityRepository { labels: ["F".to_string()].into() };
        let pool: Vec<&'static str> = LABELS.iter().copied().chain(["F", "G"]).collect();
        let cs: Vec<_> = (0..count)
            .map(|i| random_pattern(&mut rng, &pool).constraint(&format!("P{i}")))
            .collect();
        let rs = DomainRuleSet::from_constraints(cs.clone()).unwrap();
        let results = identify(&rs, std::slice::from_ref(&s), &repo);
        prop_assert_eq!(results.len(), cs.len());
        for (c, r) in cs.iter().zip(&results) {
            prop_assert_eq!(&r.rule, &c.id);
            let refs = c.pattern().referenced_labels();
            let known = |l: &str| s.contains_label(l) || repo.contains(l);
            let expected = if !refs.iter().all(|l| known(l)) {
                NonProcess
            } else if c.pattern().anchor_labels().iter().any(|l| s.contains_label(l)) {
                Enabled
            } else {
                Idle
            };
            prop_assert_eq!(r.status, expected);
        }
    }

    #[test]
    fn incremental_matches_full_recomputation(seed in any::<u64>(), steps in 1usize..4) {
        let mut rng = StdRng::seed_from_u64(seed);
        let rs = rules("\nconstraint X1 { context process 'treatment' all; on exists l is 'approve loan'; }\n");
        let labels = ["approve loan", "administer Aspirin", "MRI scan", "conduct surgery", "sonography"];
        let mut current = schemas();
        let mut results = identify(&rs, &current, &repo());
        for _ in 0..steps {
            let change = Change {
                schema_id: if rng.gen() { "treatment".into() } else { "Invasive Surgery".into() },
                label: labels[rng.gen_range(0..labels.len())].into(),
            };
            current = apply_change(&current, &change).unwrap();
            results = recompute_on_change(&results, &rs, &current, &repo(), &change).results;
            prop_assert_eq!(&results, &identify(&rs, &current, &repo()));
        }
    }
}
