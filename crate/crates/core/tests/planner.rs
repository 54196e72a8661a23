use grounded_planner::domain::RoomKind;
use grounded_planner::error::PlannerError;
use grounded_planner::grounding::execute_plan;
use grounded_planner::planner::{
    applicable_steps, parse_problem, problem_pddl, render_goal, sample_task, solve, transition, Domain,
    TaskCategory, TaskSpec, DEFAULT_BUDGET,
};
use grounded_planner::world::{generate_scene, WorldState};
use proptest::prelude::*;

/// Depth-limited search over every operator, without duplicate pruning.
fn exists_plan_within(state: &WorldState, domain: &Domain, task: &TaskSpec, depth: usize) -> bool {
    if task.goal_satisfied(state) {
        return true;
    }
    if depth == 0 {
        return false;
    }
    applicable_steps(state, domain).iter().any(|s| {
        transition(state, s)
            .filter(|next| next != state)
            .is_some_and(|next| exists_plan_within(&next, domain, task, depth - 1))
    })
}

#[test]
fn shortest_plans_match_exhaustive_search() {
    let mut checked = 0;
    for room in RoomKind::ALL {
        for seed in 0..40 {
            let s = generate_scene(seed, room).unwrap();
            let task = sample_task(seed, &s).unwrap();
            let plan = solve(&task, &s, DEFAULT_BUDGET).unwrap().plan;
            if plan.steps.len() > 5 {
                continue;
            }
            let full = Domain::full(&s);
            assert!(exists_plan_within(&s, &full, &task, plan.steps.len()), "{room} {seed}");
            assert!(
                !exists_plan_within(&s, &full, &task, plan.steps.len() - 1),
                "shorter plan exists for {room} {seed}: {plan}"
            );
            checked += 1;
        }
    }
    assert!(checked >= 30, "only {checked} scenes small enough");
}

#[test]
fn budget_and_unsolvable_are_reported() {
    let s = generate_scene(3, RoomKind::Kitchen).unwrap();
    let task = sample_task(3, &s).unwrap();
    assert!(matches!(solve(&task, &s, 1), Err(PlannerError::BudgetExceeded(1))));
    // a destination that is not in the scene
    let missing = grounded_planner::domain::DomainKnowledge::builtin()
        .rooms
        .values()
        .flat_map(|r| r.required.iter().chain(&r.optional))
        .find(|f| s.instances_of(f).next().is_none() && f.as_str() != "floorlamp")
        .unwrap()
        .clone();
    let apple = s.objects.iter().find(|o| o.caps.pickupable).unwrap().category.clone();
    let task = TaskSpec::new(TaskCategory::PickAndPlace, &apple, &missing, None, false);
    assert!(matches!(solve(&task, &s, DEFAULT_BUDGET), Err(PlannerError::Unsolvable)));
}

#[test]
fn problem_files_round_trip() {
    for room in RoomKind::ALL {
        for seed in 0..10 {
            let s = generate_scene(seed, room).unwrap();
            let task = sample_task(seed, &s).unwrap();
            let parts = parse_problem(&problem_pddl(&task, &s, "p")).unwrap();
            assert_eq!(parts.goal, task.goal_conditions);
            let mut ids: Vec<_> = parts.objects.iter().map(|(n, t)| (n.clone(), t.clone())).collect();
            ids.sort();
            let mut expect: Vec<_> = s.objects.iter().map(|o| (o.id.to_ascii_lowercase(), o.category.clone())).collect();
            expect.sort();
            assert_eq!(ids, expect);
            assert!(parts.init.iter().any(|f| f.to_string() == "(hand-empty)"));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn found_plans_execute_and_reach_the_goal(seed in 0u64..10_000, room in 0usize..4) {
        let s = generate_scene(seed, RoomKind::ALL[room]).unwrap();
        let task = sample_task(seed, &s).unwrap();
        prop_assert!(render_goal(&task).ends_with(':'));
        let plan = solve(&task, &s, DEFAULT_BUDGET).unwrap().plan;
        prop_assert_eq!(&plan, &solve(&task, &s, DEFAULT_BUDGET).unwrap().plan);
        let mut w = s.clone();
        let trace = execute_plan(&plan, &mut w, false);
        prop_assert!(trace.all_succeeded());
        prop_assert!(task.goal_satisfied(&w));
    }
}

#[test]
fn kitchens_support_every_category() {
    for seed in 0..30 {
        let s = generate_scene(seed, RoomKind::Kitchen).unwrap();
        for c in TaskCategory::ALL {
            assert!(!grounded_planner::planner::feasible_tasks(&s, c).is_empty(), "seed {seed} lacks {c}");
        }
    }
}

#[test]
fn abstraction_tracks_holding_and_containment() {
    use grounded_planner::planner::{abstract_state, Predicate};
    use grounded_planner::world::{ActionKind, LowLevelAction};
    let mut s = generate_scene(5, RoomKind::Bathroom).unwrap();
    let before = abstract_state(&s);
    for o in s.objects.iter().filter(|o| o.parent.is_some()) {
        assert!(before.contains(&Predicate::In(o.id.clone(), o.parent.clone().unwrap())));
    }
    // a failing action leaves the abstraction unchanged
    let r = s.apply(&LowLevelAction::interact(ActionKind::PutObject, "nothing"));
    assert!(!r.success);
    assert_eq!(abstract_state(&s), before);
    let task = sample_task(5, &s).unwrap();
    let plan = solve(&task, &s, DEFAULT_BUDGET).unwrap().plan;
    let pickup = plan.steps.iter().position(|p| p.action == grounded_planner::plandsl::HighLevelAction::PickupObject).unwrap();
    let prefix = grounded_planner::plandsl::Plan { steps: plan.steps[..=pickup].to_vec() };
    execute_plan(&prefix, &mut s, false);
    let held = s.held.clone().unwrap();
    assert!(abstract_state(&s).contains(&Predicate::Holding(held)));
}
