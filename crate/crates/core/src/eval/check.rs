use serde::{Deserialize, Serialize};

use super::dataset::Split;
use super::experiment::EvalReport;
use crate::graph2nl::ContextVariant;

/// Minimum unseen action accuracy of every variant.
pub const ACTION_FLOOR: f64 = 0.80;
/// Largest allowed distance between mean sampled and greedy full-plan accuracy.
pub const SAMPLING_TOLERANCE: f64 = 0.05;
/// Largest allowed gain of mean sampled over greedy full-plan accuracy.
pub const SAMPLING_GAIN_LIMIT: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name: name.to_string(), passed, detail }
}

/// Threshold checks over a report. Checks whose rows are missing from the
/// report are skipped; the metric consistency check always runs.
pub fn check_report(report: &EvalReport) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let bad: Vec<String> = report
        .rows
        .iter()
        .filter(|r| !r.accuracy.is_consistent())
        .map(|r| format!("{}/{}/{}", r.system, r.split, r.category))
        .collect();
    out.push(outcome(
        "metric consistency",
        bad.is_empty(),
        if bad.is_empty() { format!("{} rows", report.rows.len()) } else { format!("inconsistent: {}", bad.join(", ")) },
    ));
    let unseen = |system: &str| report.row(system, Split::Unseen, "all").map(|r| r.accuracy);
    let all: Option<Vec<_>> = ContextVariant::ALL.iter().map(|v| unseen(v.as_str()).map(|a| (*v, a))).collect();
    let Some(all) = all else { return out };
    let get = |v: ContextVariant| all.iter().find(|(x, _)| *x == v).expect("all variants").1;

    let low: Vec<String> = all
        .iter()
        .filter(|(_, a)| a.action_acc < ACTION_FLOOR)
        .map(|(v, a)| format!("{v}={:.3}", a.action_acc))
        .collect();
    let min = all.iter().map(|(_, a)| a.action_acc).fold(f64::INFINITY, f64::min);
    out.push(outcome(
        "action accuracy floor",
        low.is_empty(),
        if low.is_empty() { format!("min {min:.3} >= {ACTION_FLOOR}") } else { format!("below {ACTION_FLOOR}: {}", low.join(", ")) },
    ));

    let none = get(ContextVariant::None).argument_acc;
    let ctx = [ContextVariant::SceneKnowledge, ContextVariant::SceneGraph, ContextVariant::FullContext];
    let args: Vec<String> = ctx.iter().map(|v| format!("{v}={:.3}", get(*v).argument_acc)).collect();
    out.push(outcome(
        "context improves arguments",
        ctx.iter().all(|v| get(*v).argument_acc > none),
        format!("none={none:.3} vs {}", args.join(", ")),
    ));

    let hint = get(ContextVariant::FirstStepHint).full_plan_acc;
    let best_other = all
        .iter()
        .filter(|(v, _)| *v != ContextVariant::FirstStepHint)
        .map(|(v, a)| (a.full_plan_acc, *v))
        .fold((f64::NEG_INFINITY, ContextVariant::None), |a, b| if b.0 > a.0 { b } else { a });
    out.push(outcome(
        "first-step hint is best",
        hint > best_other.0,
        format!("first_step_hint={hint:.3}, next {}={:.3}", best_other.1, best_other.0),
    ));

    let mut diffs = Vec::new();
    for (v, greedy) in &all {
        let prefix = format!("{v}+sampled");
        let sampled: Vec<f64> = report
            .rows
            .iter()
            .filter(|r| r.split == Split::Unseen && r.category == "all" && r.system.starts_with(&prefix))
            .map(|r| r.accuracy.full_plan_acc)
            .collect();
        if !sampled.is_empty() {
            let mean = sampled.iter().sum::<f64>() / sampled.len() as f64;
            diffs.push((*v, mean - greedy.full_plan_acc));
        }
    }
    if !diffs.is_empty() {
        let ok = diffs.iter().all(|(_, d)| d.abs() <= SAMPLING_TOLERANCE && *d <= SAMPLING_GAIN_LIMIT);
        let detail: Vec<String> = diffs.iter().map(|(v, d)| format!("{v} {d:+.3}")).collect();
        out.push(outcome("sampling close to greedy", ok, format!("mean sampled - greedy: {}", detail.join(", "))));
    }
    out
}
