use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::DomainKnowledge;
use crate::grounding::{ExecutionTrace, TaskKind};
use crate::plandsl::{HighLevelAction, Plan};

/// Per-sample outcome of comparing a predicted plan with the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PlanScore {
    pub action: bool,
    pub argument: bool,
    pub full: bool,
}

/// Scores a prediction; `None` (unparseable) scores zero everywhere.
/// Actions match when the sequences of action names are equal, arguments
/// when the sequences of alias-normalized argument tuples are equal.
pub fn plan_accuracy(predicted: Option<&Plan>, reference: &Plan) -> PlanScore {
    let Some(p) = predicted else { return PlanScore::default() };
    let dk = DomainKnowledge::builtin();
    let norm = |a: &String| dk.normalize(&a.to_ascii_lowercase()).to_string();
    let same_len = p.steps.len() == reference.steps.len();
    let action = same_len && p.steps.iter().zip(&reference.steps).all(|(a, b)| a.action == b.action);
    let argument = same_len
        && p.steps.iter().zip(&reference.steps).all(|(a, b)| {
            a.args.len() == b.args.len() && a.args.iter().zip(&b.args).all(|(x, y)| norm(x) == norm(y))
        });
    PlanScore { action, argument, full: action && argument }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AccuracyTriple {
    pub action_acc: f64,
    pub argument_acc: f64,
    pub full_plan_acc: f64,
}

impl AccuracyTriple {
    /// Mean of the per-sample scores; zero for no samples.
    pub fn from_scores<'a>(scores: impl IntoIterator<Item = &'a PlanScore>) -> AccuracyTriple {
        let (mut n, mut a, mut g, mut f) = (0usize, 0usize, 0usize, 0usize);
        for s in scores {
            n += 1;
            a += s.action as usize;
            g += s.argument as usize;
            f += s.full as usize;
        }
        if n == 0 {
            return AccuracyTriple::default();
        }
        let d = n as f64;
        AccuracyTriple { action_acc: a as f64 / d, argument_acc: g as f64 / d, full_plan_acc: f as f64 / d }
    }

    pub fn is_consistent(&self) -> bool {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        unit(self.action_acc)
            && unit(self.argument_acc)
            && unit(self.full_plan_acc)
            && self.full_plan_acc <= self.action_acc.min(self.argument_acc)
    }
}

/// Actions reported in the per-action success table. Composites are left out.
pub const RATED_ACTIONS: [HighLevelAction; 5] = [
    HighLevelAction::GotoLocation,
    HighLevelAction::PickupObject,
    HighLevelAction::PutObject,
    HighLevelAction::SliceObject,
    HighLevelAction::ToggleObject,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub successes: usize,
    pub attempts: usize,
}

impl Tally {
    /// Success fraction, absent when nothing was attempted.
    pub fn rate(&self) -> Option<f64> {
        (self.attempts > 0).then(|| self.successes as f64 / self.attempts as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SuccessRates {
    pub per_action: BTreeMap<HighLevelAction, Tally>,
}

impl SuccessRates {
    pub fn rate(&self, action: HighLevelAction) -> Option<f64> {
        self.per_action.get(&action).and_then(Tally::rate)
    }

    pub fn merge(&mut self, other: &SuccessRates) {
        for (a, t) in &other.per_action {
            let e = self.per_action.entry(*a).or_default();
            e.successes += t.successes;
            e.attempts += t.attempts;
        }
    }
}

pub fn success_rates<'a>(traces: impl IntoIterator<Item = &'a ExecutionTrace>) -> SuccessRates {
    let mut out = SuccessRates::default();
    for t in traces {
        for s in t.steps.iter().filter(|s| s.kind != TaskKind::Composite) {
            let e = out.per_action.entry(s.step.action).or_default();
            e.attempts += 1;
            e.successes += s.success as usize;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(s: &str) -> Plan {
        s.parse().unwrap()
    }

    #[test]
    fn scoring_examples() {
        let gold = plan("0.GotoLocation(countertop) 1.PickupObject(soap) 2.GotoLocation(drawer) 3.PutObject(soap,drawer)");
        let full = PlanScore { action: true, argument: true, full: true };
        assert_eq!(plan_accuracy(Some(&gold), &gold), full);
        let alias = plan("0.GotoLocation(countertop) 1.PickupObject(soapbar) 2.GotoLocation(drawer) 3.PutObject(soap,drawer)");
        assert_eq!(plan_accuracy(Some(&alias), &gold), full);
        let wrong_arg = plan("0.GotoLocation(countertop) 1.PickupObject(soap) 2.GotoLocation(shelf) 3.PutObject(soap,drawer)");
        assert_eq!(plan_accuracy(Some(&wrong_arg), &gold), PlanScore { action: true, argument: false, full: false });
        let extra = plan(&format!("{gold} 4.ToggleObject(floorlamp)"));
        assert_eq!(plan_accuracy(Some(&extra), &gold), PlanScore::default());
        assert_eq!(plan_accuracy(None, &gold), PlanScore::default());
    }

    #[test]
    fn triple_means() {
        let s = [
            PlanScore { action: true, argument: true, full: true },
            PlanScore { action: true, argument: false, full: false },
        ];
        let t = AccuracyTriple::from_scores(&s);
        assert_eq!((t.action_acc, t.argument_acc, t.full_plan_acc), (1.0, 0.5, 0.5));
        assert!(t.is_consistent());
    }
}
