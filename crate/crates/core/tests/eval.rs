use std::collections::BTreeSet;

use grounded_planner::eval::{
    check_report, generate_records, read_meta, read_split, run_on_records, sampled_system, split_sizes,
    write_dataset, AccuracyTriple, EvalReport, ExperimentConfig, ReportRow, Split, SuccessRates,
};
use grounded_planner::graph2nl::{ContextOptions, ContextVariant};
use grounded_planner::lm::DecodingStrategy;

#[test]
fn splits_keep_unseen_scenes_apart() {
    let records = generate_records(60, 2, 5.0 / 6.0).unwrap();
    assert_eq!(split_sizes(60, 5.0 / 6.0), (50, 5, 5));
    let scenes = |split| records.iter().filter(|r| r.split == split).map(|r| r.scene_seed).collect::<BTreeSet<_>>();
    let count = |split| records.iter().filter(|r| r.split == split).count();
    assert_eq!((count(Split::Train), count(Split::Seen), count(Split::Unseen)), (50, 5, 5));
    assert!(scenes(Split::Seen).is_subset(&scenes(Split::Train)));
    assert!(scenes(Split::Unseen).is_disjoint(&scenes(Split::Train)));
    assert_eq!(generate_records(60, 2, 5.0 / 6.0).unwrap(), records);
    assert_ne!(generate_records(60, 3, 5.0 / 6.0).unwrap(), records);
    assert!(generate_records(0, 2, 0.5).is_err());
}

#[test]
fn dataset_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let records = generate_records(24, 1, 0.5).unwrap();
    let opts = ContextOptions::default();
    let meta = write_dataset(dir.path(), &records, ContextVariant::SceneGraph, opts, 1, 0.5).unwrap();
    assert_eq!(read_meta(dir.path()).unwrap(), meta);
    let mut back = Vec::new();
    for split in Split::ALL {
        let rows = read_split(dir.path(), split).unwrap();
        assert_eq!(rows.len(), meta.counts[&split]);
        for row in &rows {
            assert!(row.text.contains("<SEP> [") && row.text.ends_with("<EOS>"), "{}", row.text);
        }
        back.extend(rows.into_iter().map(|r| r.record));
    }
    assert_eq!(back, records);
}

#[test]
fn the_planner_baseline_reproduces_the_gold_plans() {
    let records = generate_records(40, 4, 0.5).unwrap();
    let config = ExperimentConfig {
        variants: vec![ContextVariant::None],
        sampled: vec![DecodingStrategy::Sampled { k: 5, p: 0.9, seed: 1 }],
        ..Default::default()
    };
    let report = run_on_records(&config, &records).unwrap();
    for split in [Split::Seen, Split::Unseen] {
        let row = report.row("baseline", split, "all").unwrap();
        assert_eq!(row.accuracy.full_plan_acc, 1.0);
        assert_eq!(row.goal_success, 1.0);
        assert!(report.row("none", split, "all").is_some());
    }
    let sampled = sampled_system(ContextVariant::None, &config.sampled[0]);
    assert!(report.row(&sampled, Split::Unseen, "all").is_some());
    assert!(report.rows.iter().all(|r| r.accuracy.is_consistent()));
}

fn row(system: &str, action: f64, argument: f64, full: f64) -> ReportRow {
    ReportRow {
        system: system.into(),
        split: Split::Unseen,
        category: "all".into(),
        samples: 100,
        accuracy: AccuracyTriple { action_acc: action, argument_acc: argument, full_plan_acc: full },
        goal_success: full,
        rates: SuccessRates::default(),
    }
}

fn verdicts(report: &EvalReport) -> Vec<(String, bool)> {
    check_report(report).into_iter().map(|c| (c.name, c.passed)).collect()
}

#[test]
fn report_checks() {
    let mut report = EvalReport {
        rows: vec![
            row("none", 0.9, 0.2, 0.2),
            row("scene_knowledge", 0.9, 0.3, 0.3),
            row("scene_graph", 0.95, 0.8, 0.8),
            row("full_context", 0.95, 0.8, 0.78),
            row("first_step_hint", 0.95, 0.85, 0.85),
        ],
    };
    let passed = |names: &[&str]| names.iter().map(|n| (n.to_string(), true)).collect::<Vec<_>>();
    let four = ["metric consistency", "action accuracy floor", "context improves arguments", "first-step hint is best"];
    assert_eq!(verdicts(&report), passed(&four));

    report.rows.push(row("first_step_hint+sampled0", 0.95, 0.84, 0.84));
    report.rows.push(row("none+sampled0", 0.9, 0.19, 0.12));
    let checks = verdicts(&report);
    assert_eq!(checks.last().unwrap(), &("sampling close to greedy".to_string(), false));

    // inconsistent rows and a tie for the best full-plan accuracy fail
    let mut bad = EvalReport { rows: report.rows[..5].to_vec() };
    bad.rows[4].accuracy.full_plan_acc = 0.8;
    bad.rows[0].accuracy.full_plan_acc = 0.5;
    let checks = verdicts(&bad);
    assert_eq!(checks[0], ("metric consistency".to_string(), false));
    assert_eq!(checks[3], ("first-step hint is best".to_string(), false));

    // without every variant only the consistency check runs
    assert_eq!(verdicts(&EvalReport { rows: vec![row("none", 0.5, 0.5, 0.5)] }).len(), 1);
}
