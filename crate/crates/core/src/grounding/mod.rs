//! Turns high-level plan steps into low-level simulator actions and runs
//! them: argument symbols resolve to object instances, composites expand to
//! fixed appliance sequences, and navigation uses A* on the free cells.

mod nav;

use serde::{Deserialize, Serialize};

use crate::domain::{Appliance, DomainKnowledge};
use crate::error::GroundingError;
use crate::plandsl::{HighLevelAction, Plan, PlanStep};
use crate::world::{
    ActionKind, LowLevelAction, ObjectId, StateFlag, StepResult, SubtaskCondition, WorldState,
};

pub use nav::{build_navgraph, navigate_to, rotations, to_motion, NavigationGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    Navigation,
    Manipulation,
    Composite,
}

pub fn classify(action: HighLevelAction) -> TaskKind {
    match action {
        HighLevelAction::GotoLocation => TaskKind::Navigation,
        HighLevelAction::PickupObject
        | HighLevelAction::PutObject
        | HighLevelAction::ToggleObject
        | HighLevelAction::SliceObject => TaskKind::Manipulation,
        HighLevelAction::HeatObject | HighLevelAction::CoolObject | HighLevelAction::CleanObject => {
            TaskKind::Composite
        }
    }
}

pub fn appliance_effect(action: HighLevelAction) -> Option<Appliance> {
    match action {
        HighLevelAction::HeatObject => Some(Appliance::Heat),
        HighLevelAction::CoolObject => Some(Appliance::Cool),
        HighLevelAction::CleanObject => Some(Appliance::Clean),
        _ => None,
    }
}

/// Instances of a category (aliases resolved), nearest first by walking
/// distance to a cell next to them. Unreachable instances come last; ties
/// fall back to straight-line distance, then id.
pub fn ground_args(symbol: &str, state: &WorldState) -> Vec<ObjectId> {
    let dk = DomainKnowledge::builtin();
    let Some(category) = dk.canonical(symbol) else { return vec![] };
    let dist = build_navgraph(state).distances_from(state.agent.cell);
    let here = state.agent_position();
    let mut ranked: Vec<(u32, f64, &str)> = state
        .instances_of(category)
        .map(|o| {
            let cell = state.grid.cell_of(o.position.x, o.position.y);
            let walk = std::iter::once(cell)
                .chain(cell.neighbors4())
                .filter_map(|c| dist.get(&c).copied())
                .min()
                .unwrap_or(u32::MAX);
            (walk, o.position.sub(here).norm(), o.id.as_str())
        })
        .collect();
    ranked.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(b.2)));
    ranked.into_iter().map(|r| r.2.to_string()).collect()
}

/// The six appliance interactions of a heat/cool/clean step, preceded by
/// navigation when the appliance is out of view.
pub fn expand_composite(step: &PlanStep, state: &WorldState) -> Result<Vec<LowLevelAction>, GroundingError> {
    let effect = appliance_effect(step.action).ok_or(GroundingError::NotInGraph)?;
    let dk = DomainKnowledge::builtin();
    let app_cat = dk
        .appliance_category(effect)
        .ok_or_else(|| GroundingError::MissingAppliance(format!("{effect:?}")))?;
    let appliance = ground_args(app_cat, state)
        .into_iter()
        .next()
        .ok_or_else(|| GroundingError::MissingAppliance(app_cat.to_string()))?;
    let wanted = dk.normalize(step.object());
    let object = state
        .held
        .clone()
        .filter(|h| state.object(h).is_some_and(|o| o.category == wanted))
        .or_else(|| ground_args(step.object(), state).into_iter().next())
        .unwrap_or_else(|| step.object().to_string());
    let mut out = if state.is_visible(&appliance) { vec![] } else { navigate_to(state, &appliance)? };
    let toggle = || LowLevelAction::interact(ActionKind::ToggleObject, appliance.clone());
    out.extend([
        toggle(),
        LowLevelAction::interact(ActionKind::PutObject, appliance.clone()),
        toggle(),
        toggle(),
        LowLevelAction::interact(ActionKind::PickupObject, object),
        toggle(),
    ]);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub action: LowLevelAction,
    pub result: StepResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    /// Object instance the step was grounded to.
    pub candidate: ObjectId,
    pub actions: Vec<ActionRecord>,
    /// Grounding error that prevented building the action list, if any.
    pub error: Option<String>,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub index: usize,
    pub step: PlanStep,
    pub kind: TaskKind,
    pub attempts: Vec<Attempt>,
    pub success: bool,
    /// Failed attempts undone by restoring the pre-step snapshot.
    pub rollbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub steps: Vec<StepTrace>,
}

impl ExecutionTrace {
    pub fn rollbacks(&self) -> usize {
        self.steps.iter().map(|s| s.rollbacks).sum()
    }

    pub fn all_succeeded(&self) -> bool {
        self.steps.iter().all(|s| s.success)
    }
}

/// Condition a high-level step must leave true to count as completed.
pub fn step_condition(step: &PlanStep) -> Option<SubtaskCondition> {
    let obj = step.object().to_string();
    match step.action {
        HighLevelAction::GotoLocation => Some(SubtaskCondition::AgentNear { object: obj }),
        HighLevelAction::PickupObject => Some(SubtaskCondition::Holding { object: obj }),
        HighLevelAction::PutObject => {
            Some(SubtaskCondition::placed(&obj, step.args.get(1).map_or("", String::as_str)))
        }
        HighLevelAction::SliceObject => Some(SubtaskCondition::state(&obj, StateFlag::Sliced)),
        HighLevelAction::ToggleObject => None,
        a => appliance_effect(a).map(|e| SubtaskCondition::state(&obj, StateFlag::for_appliance(e))),
    }
}

/// Symbol whose instances a step is grounded to.
fn grounding_symbol(step: &PlanStep) -> &str {
    match step.action {
        HighLevelAction::PutObject => step.args.get(1).map_or("", String::as_str),
        _ => step.object(),
    }
}

fn actions_for(step: &PlanStep, candidate: &str, state: &WorldState) -> Result<Vec<LowLevelAction>, GroundingError> {
    let interact = |k| Ok(vec![LowLevelAction::interact(k, candidate)]);
    match step.action {
        HighLevelAction::GotoLocation => navigate_to(state, candidate),
        HighLevelAction::PickupObject => interact(ActionKind::PickupObject),
        HighLevelAction::PutObject => interact(ActionKind::PutObject),
        HighLevelAction::ToggleObject => interact(ActionKind::ToggleObject),
        HighLevelAction::SliceObject => interact(ActionKind::SliceObject),
        _ => expand_composite(step, state),
    }
}

/// Runs one high-level step. On failure the state is left as it was before
/// the step.
pub fn execute_step(state: &mut WorldState, index: usize, step: &PlanStep, try_all: bool) -> StepTrace {
    let kind = classify(step.action);
    let mut trace = StepTrace { index, step: step.clone(), kind, attempts: vec![], success: false, rollbacks: 0 };
    let candidates = if kind == TaskKind::Composite {
        // the appliance is resolved inside the expansion
        vec![step.object().to_string()]
    } else {
        ground_args(grounding_symbol(step), state)
    };
    let condition = step_condition(step);
    let limit = if try_all { candidates.len() } else { candidates.len().min(1) };
    let snapshot = state.snapshot();
    for candidate in candidates.into_iter().take(limit) {
        let mut attempt = Attempt { candidate: candidate.clone(), actions: vec![], error: None, success: false };
        match actions_for(step, &candidate, state) {
            Ok(actions) => {
                let mut ok = true;
                for a in actions {
                    let result = state.apply(&a);
                    attempt.actions.push(ActionRecord { action: a, result });
                    if !result.success {
                        ok = false;
                        break;
                    }
                }
                let holds = condition
                    .as_ref()
                    .map_or(Ok(true), |c| state.check_condition(c))
                    .unwrap_or(false);
                attempt.success = ok && holds;
            }
            Err(e) => attempt.error = Some(e.to_string()),
        }
        let success = attempt.success;
        trace.attempts.push(attempt);
        if success {
            trace.success = true;
            return trace;
        }
        *state = snapshot.restore();
        trace.rollbacks += 1;
    }
    trace
}

/// Executes every step in order; failed steps are recorded and skipped.
pub fn execute_plan(plan: &Plan, state: &mut WorldState, try_all: bool) -> ExecutionTrace {
    let steps = plan
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| execute_step(state, i, s, try_all))
        .collect();
    ExecutionTrace { steps }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_is_total() {
        use HighLevelAction::*;
        assert_eq!(classify(GotoLocation), TaskKind::Navigation);
        assert_eq!(classify(PickupObject), TaskKind::Manipulation);
        assert_eq!(classify(HeatObject), TaskKind::Composite);
        for a in HighLevelAction::ALL {
            assert_eq!(classify(a) == TaskKind::Composite, appliance_effect(a).is_some());
        }
    }
}
