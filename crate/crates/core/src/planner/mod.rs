//! Task sampling, goal rendering and plan search.
//!
//! Plans are found by breadth-first search over high-level steps. Each step
//! is applied by executing it in the simulator, so a plan returned here
//! executes successfully by construction.

mod pddl;
mod search;
mod task;

pub use pddl::{domain_pddl, parse_problem, parse_sexps, problem_pddl, ProblemParts, Sexp};
pub use search::{
    abstract_state, applicable_steps, fixture_at, root_category, search, solve, transition, Domain,
    Predicate, SearchResult, SymbolicState, DEFAULT_BUDGET,
};
pub use task::{
    feasible_tasks, goal_lexicon, render_goal, sample_task, TaskCategory, TaskSpec, LAMP, TEMPLATES_PER_CATEGORY,
};
