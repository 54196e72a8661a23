use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Appliance, DomainKnowledge};
use crate::error::PlannerError;
use crate::world::{StateFlag, SubtaskCondition, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskCategory {
    LookAt,
    PickAndPlace,
    PickTwoAndPlace,
    PickAndPlaceMovable,
    PickCleanPlace,
    PickCoolPlace,
    PickHeatPlace,
}

impl TaskCategory {
    pub const ALL: [TaskCategory; 7] = [
        TaskCategory::LookAt,
        TaskCategory::PickAndPlace,
        TaskCategory::PickTwoAndPlace,
        TaskCategory::PickAndPlaceMovable,
        TaskCategory::PickCleanPlace,
        TaskCategory::PickCoolPlace,
        TaskCategory::PickHeatPlace,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskCategory::LookAt => "look_at",
            TaskCategory::PickAndPlace => "pick_and_place",
            TaskCategory::PickTwoAndPlace => "pick_two_and_place",
            TaskCategory::PickAndPlaceMovable => "pick_and_place_movable",
            TaskCategory::PickCleanPlace => "pick_clean_place",
            TaskCategory::PickCoolPlace => "pick_cool_place",
            TaskCategory::PickHeatPlace => "pick_heat_place",
        }
    }

    pub fn treatment(self) -> Option<Appliance> {
        match self {
            TaskCategory::PickCleanPlace => Some(Appliance::Clean),
            TaskCategory::PickCoolPlace => Some(Appliance::Cool),
            TaskCategory::PickHeatPlace => Some(Appliance::Heat),
            _ => None,
        }
    }
}

impl fmt::Display for TaskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        TaskCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown task category `{s}`"))
    }
}

pub const LAMP: &str = "floorlamp";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskSpec {
    pub category: TaskCategory,
    /// Category of the object being manipulated.
    pub target: String,
    /// Final destination; the lamp for look-at tasks.
    pub receptacle: String,
    pub movable_receptacle: Option<String>,
    /// Pick-and-place variant that slices the target first.
    pub sliced: bool,
    pub goal_conditions: Vec<SubtaskCondition>,
    /// Index into the goal template bank.
    pub template: usize,
}

impl TaskSpec {
    /// Builds a task with the goal conditions its category implies.
    pub fn new(
        category: TaskCategory,
        target: &str,
        receptacle: &str,
        movable_receptacle: Option<&str>,
        sliced: bool,
    ) -> TaskSpec {
        let mut goal = Vec::new();
        match category {
            TaskCategory::LookAt => {
                goal.push(SubtaskCondition::Holding { object: target.into() });
                goal.push(SubtaskCondition::state(receptacle, StateFlag::ToggledOn));
            }
            TaskCategory::PickAndPlace => {
                if sliced {
                    goal.push(SubtaskCondition::state(target, StateFlag::Sliced));
                }
                goal.push(SubtaskCondition::placed(target, receptacle));
            }
            TaskCategory::PickTwoAndPlace => goal.push(SubtaskCondition::Placed {
                object: target.into(),
                receptacle: receptacle.into(),
                count: 2,
            }),
            TaskCategory::PickAndPlaceMovable => {
                let m = movable_receptacle.unwrap_or_default();
                goal.push(SubtaskCondition::placed(target, m));
                goal.push(SubtaskCondition::placed(m, receptacle));
            }
            c => {
                let a = c.treatment().expect("treatment categories");
                goal.push(SubtaskCondition::state(target, StateFlag::for_appliance(a)));
                goal.push(SubtaskCondition::placed(target, receptacle));
            }
        }
        TaskSpec {
            category,
            target: target.into(),
            receptacle: receptacle.into(),
            movable_receptacle: movable_receptacle.map(str::to_string),
            sliced,
            goal_conditions: goal,
            template: 0,
        }
    }

    /// Checks category-specific required fields against the domain table.
    pub fn validate(&self) -> Result<(), PlannerError> {
        let dk = DomainKnowledge::builtin();
        let bad = |m: String| Err(PlannerError::MalformedTask(m));
        for c in self.categories() {
            if dk.category(c).is_none() {
                return bad(format!("unknown category `{c}`"));
            }
        }
        if self.category == TaskCategory::PickAndPlaceMovable && self.movable_receptacle.is_none() {
            return bad("movable-receptacle task without a movable receptacle".into());
        }
        if self.sliced && self.category != TaskCategory::PickAndPlace {
            return bad("only pick-and-place tasks can require slicing".into());
        }
        let expected = TaskSpec::new(
            self.category,
            &self.target,
            &self.receptacle,
            self.movable_receptacle.as_deref(),
            self.sliced,
        );
        if expected.goal_conditions != self.goal_conditions {
            return bad("goal conditions do not match the task category".into());
        }
        Ok(())
    }

    pub fn categories(&self) -> Vec<&str> {
        let mut v = vec![self.target.as_str(), self.receptacle.as_str()];
        v.extend(self.movable_receptacle.as_deref());
        v
    }

    pub fn goal_satisfied(&self, state: &WorldState) -> bool {
        self.goal_conditions.iter().all(|c| state.check_condition(c).unwrap_or(false))
    }
}

const TEMPLATES: [(TaskCategory, bool, [&str; 3]); 8] = [
    (TaskCategory::LookAt, false, [
        "Examine the {t} under the lamp:",
        "Look at the {t} in the light of the lamp:",
        "Pick up the {t} and turn on the lamp:",
    ]),
    (TaskCategory::PickAndPlace, false, [
        "Put the {t} into the {r}:",
        "Place the {t} in the {r}:",
        "Move the {t} to the {r}:",
    ]),
    (TaskCategory::PickAndPlace, true, [
        "Put a sliced {t} into the {r}:",
        "Slice the {t} and place it in the {r}:",
        "Cut the {t} and put it in the {r}:",
    ]),
    (TaskCategory::PickTwoAndPlace, false, [
        "Put two {t}s into the {r}:",
        "Place both {t}s in the {r}:",
        "Move two {t}s to the {r}:",
    ]),
    (TaskCategory::PickAndPlaceMovable, false, [
        "Put the {t} in the {m} and place it in the {r}:",
        "Place the {m} with the {t} in the {r}:",
        "Move the {t} in a {m} to the {r}:",
    ]),
    (TaskCategory::PickCleanPlace, false, [
        "Clean the {t} and put it in the {r}:",
        "Rinse the {t} and place it in the {r}:",
        "Put a clean {t} into the {r}:",
    ]),
    (TaskCategory::PickCoolPlace, false, [
        "Chill the {t} and put it in the {r}:",
        "Cool the {t} and place it in the {r}:",
        "Put a cold {t} into the {r}:",
    ]),
    (TaskCategory::PickHeatPlace, false, [
        "Heat the {t} and put it in the {r}:",
        "Warm the {t} and place it in the {r}:",
        "Put a hot {t} into the {r}:",
    ]),
];

pub const TEMPLATES_PER_CATEGORY: usize = 3;

/// Natural-language goal for a task, using display names.
pub fn render_goal(task: &TaskSpec) -> String {
    let dk = DomainKnowledge::builtin();
    let bank = TEMPLATES
        .iter()
        .find(|(c, s, _)| *c == task.category && *s == task.sliced)
        .map(|t| t.2)
        .expect("every category has templates");
    bank[task.template % bank.len()]
        .replace("{t}", dk.display_name(&task.target))
        .replace("{r}", dk.display_name(&task.receptacle))
        .replace("{m}", dk.display_name(task.movable_receptacle.as_deref().unwrap_or("")))
}

/// Every goal sentence shape with every category filled in, so a tokenizer
/// can cover goals it never saw in training.
pub fn goal_lexicon() -> Vec<String> {
    let dk = DomainKnowledge::builtin();
    let mut out = Vec::new();
    for (_, _, bank) in TEMPLATES {
        for tpl in bank {
            for c in dk.categories.keys() {
                let d = dk.display_name(c);
                out.push(tpl.replace("{t}", d).replace("{r}", d).replace("{m}", d));
            }
        }
    }
    out
}

/// Root fixture category of every instance of a category.
fn roots<'a>(state: &'a WorldState, category: &'a str) -> Vec<&'a str> {
    state
        .instances_of(category)
        .filter_map(|o| {
            let mut cur = o;
            while let Some(p) = cur.parent.as_deref().and_then(|p| state.object(p)) {
                cur = p;
            }
            (cur.id != o.id).then_some(cur.category.as_str())
        })
        .collect()
}

/// All task instances of a category the scene supports.
pub fn feasible_tasks(state: &WorldState, category: TaskCategory) -> Vec<TaskSpec> {
    let dk = DomainKnowledge::builtin();
    let mut fixtures: Vec<&str> = state
        .objects
        .iter()
        .filter(|o| !o.caps.pickupable)
        .map(|o| o.category.as_str())
        .collect();
    fixtures.sort();
    fixtures.dedup();
    let mut pickups: Vec<&str> = state
        .objects
        .iter()
        .filter(|o| o.caps.pickupable)
        .map(|o| o.category.as_str())
        .collect();
    pickups.sort();
    pickups.dedup();
    // destinations: plain receptacles (no doors, no appliance)
    let dests: Vec<&str> = fixtures
        .iter()
        .copied()
        .filter(|f| dk.category(f).is_some_and(|c| c.receptacle && !c.openable && c.appliance.is_none()))
        .collect();
    let fresh = |t: &str, r: &str| !roots(state, t).contains(&r);
    let mut out = Vec::new();
    match category {
        TaskCategory::LookAt => {
            if fixtures.contains(&LAMP) {
                for t in &pickups {
                    out.push(TaskSpec::new(category, t, LAMP, None, false));
                }
            }
        }
        TaskCategory::PickAndPlace | TaskCategory::PickTwoAndPlace => {
            for t in &pickups {
                if category == TaskCategory::PickTwoAndPlace && state.instances_of(t).count() < 2 {
                    continue;
                }
                for r in &dests {
                    if dk.can_contain(r, t) && fresh(t, r) {
                        out.push(TaskSpec::new(category, t, r, None, false));
                        if category == TaskCategory::PickAndPlace
                            && dk.category(t).is_some_and(|c| c.sliceable)
                        {
                            out.push(TaskSpec::new(category, t, r, None, true));
                        }
                    }
                }
            }
        }
        TaskCategory::PickAndPlaceMovable => {
            for m in pickups.iter().filter(|m| dk.category(m).is_some_and(|c| c.receptacle)) {
                for t in pickups.iter().filter(|t| *t != m && dk.can_contain(m, t)) {
                    if state.instances_of(t).any(|o| o.parent.as_deref().and_then(|p| state.object(p)).is_some_and(|p| &p.category == m)) {
                        continue;
                    }
                    for r in &dests {
                        if dk.can_contain(r, m) && fresh(m, r) && fresh(t, r) {
                            out.push(TaskSpec::new(category, t, r, Some(m), false));
                        }
                    }
                }
            }
        }
        c => {
            let a = c.treatment().expect("treatment categories");
            let Some(app) = dk.appliance_category(a) else { return out };
            if !fixtures.contains(&app) {
                return out;
            }
            for t in pickups.iter().filter(|t| dk.category(t).is_some_and(|i| i.treat.contains(&a))) {
                for r in dests.iter().filter(|r| **r != app) {
                    if dk.can_contain(r, t) && fresh(t, r) {
                        out.push(TaskSpec::new(c, t, r, None, false));
                    }
                }
            }
        }
    }
    out
}

/// Uniformly picks a feasible category, then a task and a goal template.
pub fn sample_task(seed: u64, state: &WorldState) -> Result<TaskSpec, PlannerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7461_736b);
    let options: Vec<Vec<TaskSpec>> = TaskCategory::ALL
        .into_iter()
        .map(|c| feasible_tasks(state, c))
        .filter(|v| !v.is_empty())
        .collect();
    let tasks = options.choose(&mut rng).ok_or(PlannerError::NoFeasibleCategory)?;
    let mut task = tasks.choose(&mut rng).expect("non-empty").clone();
    task.template = rand::Rng::gen_range(&mut rng, 0..TEMPLATES_PER_CATEGORY);
    Ok(task)
}
