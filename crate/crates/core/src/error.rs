use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("failed to parse domain table: {0}")]
    Parse(String),
    #[error("unsupported domain table schema version {0}")]
    SchemaVersion(u32),
    #[error("category `{0}` is defined twice")]
    Duplicate(String),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("unsupported room kind `{0}`")]
    UnsupportedRoom(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("scene generation failed after {0} attempts")]
    GenerationFailed(usize),
    #[error("unknown category `{0}` in condition")]
    UnknownCategory(String),
    #[error("scene file line {line}: {msg}")]
    SceneFile { line: usize, msg: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum Graph2NlError {
    #[error("distance must be finite and non-negative, got {0}")]
    Distance(f64),
    #[error("yaw must lie in [0, 360), got {0}")]
    Yaw(f64),
    #[error("pitch must lie in [-90, 90], got {0}")]
    Pitch(f64),
    #[error("target `{0}` is not present in the scene graph")]
    TargetAbsent(String),
    #[error("search depth must be at least 1")]
    Depth,
    #[error("first-step hint requires a gold plan")]
    MissingGoldPlan,
    #[error("cannot parse relation text `{0}`")]
    BadRelation(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanParseError {
    #[error("unknown action `{name}` at byte {pos}")]
    UnknownAction { name: String, pos: usize },
    #[error("{action} expects {expected} argument(s), got {got} at byte {pos}")]
    BadArity { action: String, expected: usize, got: usize, pos: usize },
    #[error("plan text truncated at byte {pos}")]
    Truncated { pos: usize },
    #[error("unexpected input at byte {pos}")]
    Syntax { pos: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarkerError {
    #[error("generated text has no <BOS> marker")]
    NoBeginMarker,
}

#[derive(Debug, Error, PartialEq)]
pub enum LmError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("model order must be at least 1")]
    BadOrder,
    #[error("unknown token `{0}` in prompt")]
    UnknownToken(String),
    #[error("max_len {max_len} is shorter than the prompt ({prompt_len} tokens)")]
    MaxLen { max_len: usize, prompt_len: usize },
    #[error("sampled decoding requires k >= 1 and p in [0, 1]")]
    BadStrategy,
    #[error("model file: {0}")]
    ModelFile(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum GroundingError {
    #[error("scene has no `{0}` appliance")]
    MissingAppliance(String),
    #[error("no path between cells")]
    NoPath,
    #[error("path is not contiguous at index {0}")]
    NonContiguous(usize),
    #[error("cell is not part of the navigation graph")]
    NotInGraph,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlannerError {
    #[error("task is unsolvable")]
    Unsolvable,
    #[error("node-expansion budget of {0} exceeded")]
    BudgetExceeded(usize),
    #[error("scene supports no task category")]
    NoFeasibleCategory,
    #[error("task is malformed: {0}")]
    MalformedTask(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum PddlError {
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("unexpected PDDL structure: {0}")]
    Structure(String),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Graph2Nl(#[from] Graph2NlError),
}
