use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::task::{TaskCategory, TaskSpec, LAMP};
use crate::domain::DomainKnowledge;
use crate::error::PlannerError;
use crate::grounding::{build_navgraph, execute_step};
use crate::plandsl::{HighLevelAction, Plan, PlanStep};
use crate::world::{ObjectId, Pose, WorldState};

pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Predicate {
    /// The agent stands at (faces) this fixture.
    At(ObjectId),
    Holding(ObjectId),
    In(ObjectId, ObjectId),
    Clean(ObjectId),
    Hot(ObjectId),
    Cold(ObjectId),
    Sliced(ObjectId),
    On(ObjectId),
    Open(ObjectId),
}

/// Set of ground predicates describing a world state.
pub type SymbolicState = BTreeSet<Predicate>;

/// Fixture in the cell directly in front of the agent.
pub fn fixture_at(state: &WorldState) -> Option<&str> {
    let front = state.agent.cell.offset(state.agent.heading.delta());
    state
        .objects
        .iter()
        .filter(|o| !o.caps.pickupable)
        .find(|o| state.object_cell(&o.id) == Some(front))
        .map(|o| o.id.as_str())
}

pub fn abstract_state(state: &WorldState) -> SymbolicState {
    let mut s = SymbolicState::new();
    if let Some(f) = fixture_at(state) {
        s.insert(Predicate::At(f.to_string()));
    }
    if let Some(h) = &state.held {
        s.insert(Predicate::Holding(h.clone()));
    }
    for o in &state.objects {
        let id = || o.id.clone();
        if let Some(p) = &o.parent {
            s.insert(Predicate::In(id(), p.clone()));
        }
        let st = &o.status;
        let flags = [
            (st.is_clean, Predicate::Clean(id())),
            (st.is_hot, Predicate::Hot(id())),
            (st.is_cold, Predicate::Cold(id())),
            (st.is_sliced, Predicate::Sliced(id())),
            (st.is_toggled_on, Predicate::On(id())),
            (st.is_open, Predicate::Open(id())),
        ];
        s.extend(flags.into_iter().filter(|f| f.0).map(|f| f.1));
    }
    s
}

/// Category of the outermost container of an object (itself if loose).
pub fn root_category<'a>(state: &'a WorldState, id: &str) -> Option<&'a str> {
    let mut cur = state.object(id)?;
    while let Some(p) = cur.parent.as_deref().and_then(|p| state.object(p)) {
        cur = p;
    }
    Some(cur.category.as_str())
}

/// Operator set the search expands. The relevant domain only moves between
/// fixtures that matter to the task and only touches task objects; the full
/// domain considers every fixture and every pickupable category.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub goto_fixtures: Vec<String>,
    /// Expand Gotos in list order; otherwise nearest first.
    pub ordered: bool,
    pub objects: Vec<String>,
    pub receptacles: Vec<String>,
    pub treat: Vec<HighLevelAction>,
    pub slice: bool,
    pub toggle: Vec<String>,
}

impl Domain {
    pub fn relevant(task: &TaskSpec, state: &WorldState) -> Domain {
        let dk = DomainKnowledge::builtin();
        let mut objects = vec![task.target.clone()];
        objects.extend(task.movable_receptacle.clone());
        // Goto order sets which of several shortest plans is found first:
        // fetch the objects, visit the appliance, deliver, then the lamp.
        let dist = build_navgraph(state).distances_from(state.agent.cell);
        let walk = |f: &str| {
            let cell = state.instances_of(f).next().and_then(|o| state.object_cell(&o.id));
            cell.and_then(|c| c.neighbors4().into_iter().filter_map(|n| dist.get(&n).copied()).min())
                .unwrap_or(u32::MAX)
        };
        let mut fixtures: Vec<String> = Vec::new();
        for c in &objects {
            let mut roots: Vec<&str> =
                state.instances_of(c).filter_map(|o| root_category(state, &o.id)).filter(|r| r != c).collect();
            roots.sort_by_key(|r| (walk(r), *r));
            fixtures.extend(roots.into_iter().map(str::to_string));
        }
        let treat: Vec<HighLevelAction> = task
            .category
            .treatment()
            .map(|a| match a {
                crate::domain::Appliance::Heat => HighLevelAction::HeatObject,
                crate::domain::Appliance::Cool => HighLevelAction::CoolObject,
                crate::domain::Appliance::Clean => HighLevelAction::CleanObject,
            })
            .into_iter()
            .collect();
        if let Some(app) = task.category.treatment().and_then(|a| dk.appliance_category(a)) {
            fixtures.push(app.to_string());
        }
        fixtures.push(task.receptacle.clone());
        let toggle = if task.category == TaskCategory::LookAt { vec![LAMP.to_string()] } else { vec![] };
        fixtures.extend(toggle.iter().cloned());
        let mut seen = BTreeSet::new();
        fixtures.retain(|f| seen.insert(f.clone()));
        let mut receptacles = vec![task.receptacle.clone()];
        receptacles.extend(task.movable_receptacle.clone());
        Domain { goto_fixtures: fixtures, ordered: true, objects, receptacles, treat, slice: task.sliced, toggle }
    }

    /// Every fixture, pickupable category and action type present.
    pub fn full(state: &WorldState) -> Domain {
        let cats = |pick: bool| -> Vec<String> {
            let set: BTreeSet<String> = state
                .objects
                .iter()
                .filter(|o| o.caps.pickupable == pick)
                .map(|o| o.category.clone())
                .collect();
            set.into_iter().collect()
        };
        let fixtures = cats(false);
        let objects = cats(true);
        let receptacles = fixtures.iter().chain(&objects).cloned().collect();
        let toggle = fixtures
            .iter()
            .filter(|f| DomainKnowledge::builtin().category(f).is_some_and(|c| c.toggleable))
            .cloned()
            .collect();
        Domain {
            goto_fixtures: fixtures,
            ordered: false,
            objects,
            receptacles,
            treat: vec![HighLevelAction::HeatObject, HighLevelAction::CoolObject, HighLevelAction::CleanObject],
            slice: true,
            toggle,
        }
    }
}

fn step(action: HighLevelAction, args: &[&str]) -> PlanStep {
    let dk = DomainKnowledge::builtin();
    let syms: Vec<&str> = args.iter().map(|a| dk.plan_symbol(a)).collect();
    PlanStep::new(action, &syms)
}

/// Candidate steps in a state, gated on where the agent stands.
pub fn applicable_steps(state: &WorldState, domain: &Domain) -> Vec<PlanStep> {
    let dk = DomainKnowledge::builtin();
    let at = fixture_at(state).and_then(|f| state.object(f)).map(|o| o.category.as_str());
    let held = state.held.as_deref().and_then(|h| state.object(h)).map(|o| o.category.as_str());
    let mut out = Vec::new();
    match held {
        None => {
            for c in &domain.objects {
                if state.instances_of(c).any(|o| root_category(state, &o.id) == at) && at.is_some() {
                    out.push(step(HighLevelAction::PickupObject, &[c]));
                }
            }
        }
        Some(h) => {
            for r in &domain.receptacles {
                let here = state.instances_of(r).any(|o| root_category(state, &o.id) == at) && at.is_some();
                if r != h && here && dk.can_contain(r, h) {
                    out.push(step(HighLevelAction::PutObject, &[h, r]));
                }
            }
            for a in &domain.treat {
                let effect = crate::grounding::appliance_effect(*a).expect("composite action");
                if at.is_some() && at == dk.appliance_category(effect) {
                    out.push(step(*a, &[h]));
                }
            }
        }
    }
    if domain.slice {
        for c in &domain.objects {
            let here = state.instances_of(c).any(|o| {
                !o.status.is_sliced && o.caps.sliceable && root_category(state, &o.id) == at && o.parent.is_some()
            });
            if here && at.is_some() {
                out.push(step(HighLevelAction::SliceObject, &[c]));
            }
        }
    }
    for t in &domain.toggle {
        if at == Some(t.as_str()) {
            out.push(step(HighLevelAction::ToggleObject, &[t]));
        }
    }
    let dist = build_navgraph(state).distances_from(state.agent.cell);
    let mut gotos: Vec<(usize, u32, &str)> = domain
        .goto_fixtures
        .iter()
        .enumerate()
        .filter(|(_, f)| Some(f.as_str()) != at)
        .filter_map(|(i, f)| {
            let cell = state.instances_of(f).next().and_then(|o| state.object_cell(&o.id))?;
            let d = cell.neighbors4().into_iter().filter_map(|c| dist.get(&c).copied()).min()?;
            Some((if domain.ordered { i } else { 0 }, d, f.as_str()))
        })
        .collect();
    gotos.sort();
    out.extend(gotos.into_iter().map(|(_, _, f)| step(HighLevelAction::GotoLocation, &[f])));
    out
}

/// Applies a step by executing it in the simulator on the first grounding
/// candidate. Returns the successor when the step succeeds.
pub fn transition(state: &WorldState, s: &PlanStep) -> Option<WorldState> {
    let mut next = state.clone();
    execute_step(&mut next, 0, s, false).success.then_some(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub plan: Plan,
    pub expanded: usize,
}

/// Breadth-first search for a shortest plan reaching the task goal.
pub fn solve(task: &TaskSpec, state: &WorldState, budget: usize) -> Result<SearchResult, PlannerError> {
    task.validate()?;
    search(state, &Domain::relevant(task, state), |s| task.goal_satisfied(s), budget)
}

pub fn search(
    start: &WorldState,
    domain: &Domain,
    goal: impl Fn(&WorldState) -> bool,
    budget: usize,
) -> Result<SearchResult, PlannerError> {
    struct Node {
        state: WorldState,
        parent: usize,
        step: Option<PlanStep>,
    }
    let extract = |nodes: &[Node], mut i: usize| {
        let mut steps = Vec::new();
        while let Some(s) = &nodes[i].step {
            steps.push(s.clone());
            i = nodes[i].parent;
        }
        steps.reverse();
        Plan { steps }
    };
    let key = |s: &WorldState| -> (SymbolicState, Pose) { (abstract_state(s), s.agent) };
    let mut nodes = vec![Node { state: start.clone(), parent: 0, step: None }];
    if goal(start) {
        return Ok(SearchResult { plan: Plan { steps: vec![] }, expanded: 0 });
    }
    let mut seen: HashSet<(SymbolicState, Pose)> = HashSet::from([key(start)]);
    let mut queue = VecDeque::from([0usize]);
    let mut expanded = 0;
    while let Some(i) = queue.pop_front() {
        if expanded >= budget {
            return Err(PlannerError::BudgetExceeded(budget));
        }
        expanded += 1;
        for s in applicable_steps(&nodes[i].state, domain) {
            let Some(next) = transition(&nodes[i].state, &s) else { continue };
            if !seen.insert(key(&next)) {
                continue;
            }
            let done = goal(&next);
            nodes.push(Node { state: next, parent: i, step: Some(s) });
            let j = nodes.len() - 1;
            if done {
                return Ok(SearchResult { plan: extract(&nodes, j), expanded });
            }
            queue.push_back(j);
        }
    }
    Err(PlannerError::Unsolvable)
}
