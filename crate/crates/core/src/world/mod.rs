//! Deterministic gridworld household simulator.
//!
//! The floor is a lattice of square cells; fixtures (counters, sinks, lamps,
//! ...) block exactly one cell each, pickupable objects rest inside
//! receptacles or float in front of the agent while held. Low-level actions
//! move or rotate the agent in fixed steps or interact with a target that
//! must be in view: within range and inside the agent's facing cone.

mod generate;
mod scene_file;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{Appliance, DomainKnowledge, RoomKind};
use crate::error::WorldError;

pub use generate::{generate_scene, generate_scene_with};
pub use scene_file::{read_scene, write_scene, SCENE_FILE_HEADER};

pub type ObjectId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub col: i32,
    pub row: i32,
}

impl Cell {
    pub const fn new(col: i32, row: i32) -> Self {
        Cell { col, row }
    }

    pub fn offset(self, (dc, dr): (i32, i32)) -> Cell {
        Cell::new(self.col + dc, self.row + dr)
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        self.col.abs_diff(other.col) + self.row.abs_diff(other.row)
    }

    pub fn neighbors4(self) -> [Cell; 4] {
        [
            self.offset((0, 1)),
            self.offset((1, 0)),
            self.offset((0, -1)),
            self.offset((-1, 0)),
        ]
    }
}

/// One of four headings; yaw grows clockwise from north (+row).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    pub fn yaw_deg(self) -> f64 {
        match self {
            Heading::North => 0.0,
            Heading::East => 90.0,
            Heading::South => 180.0,
            Heading::West => 270.0,
        }
    }

    /// Unit step in (col, row).
    pub fn delta(self) -> (i32, i32) {
        match self {
            Heading::North => (0, 1),
            Heading::East => (1, 0),
            Heading::South => (0, -1),
            Heading::West => (-1, 0),
        }
    }

    pub fn from_delta(delta: (i32, i32)) -> Option<Heading> {
        Heading::ALL.into_iter().find(|h| h.delta() == delta)
    }

    pub fn cw(self) -> Heading {
        match self {
            Heading::North => Heading::East,
            Heading::East => Heading::South,
            Heading::South => Heading::West,
            Heading::West => Heading::North,
        }
    }

    pub fn ccw(self) -> Heading {
        self.cw().cw().cw()
    }

    pub fn letter(self) -> char {
        match self {
            Heading::North => 'N',
            Heading::East => 'E',
            Heading::South => 'S',
            Heading::West => 'W',
        }
    }

    pub fn from_letter(c: char) -> Option<Heading> {
        Heading::ALL.into_iter().find(|h| h.letter() == c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pose {
    pub cell: Cell,
    pub heading: Heading,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn planar_norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Capabilities {
    pub pickupable: bool,
    pub receptacle: bool,
    pub openable: bool,
    pub toggleable: bool,
    pub sliceable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ObjectStatus {
    pub is_clean: bool,
    pub is_hot: bool,
    pub is_cold: bool,
    pub is_sliced: bool,
    pub is_toggled_on: bool,
    pub is_open: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateFlag {
    Clean,
    Hot,
    Cold,
    Sliced,
    ToggledOn,
    Open,
}

impl StateFlag {
    pub fn get(self, s: &ObjectStatus) -> bool {
        match self {
            StateFlag::Clean => s.is_clean,
            StateFlag::Hot => s.is_hot,
            StateFlag::Cold => s.is_cold,
            StateFlag::Sliced => s.is_sliced,
            StateFlag::ToggledOn => s.is_toggled_on,
            StateFlag::Open => s.is_open,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StateFlag::Clean => "is_clean",
            StateFlag::Hot => "is_hot",
            StateFlag::Cold => "is_cold",
            StateFlag::Sliced => "is_sliced",
            StateFlag::ToggledOn => "is_toggled_on",
            StateFlag::Open => "is_open",
        }
    }

    pub fn for_appliance(a: Appliance) -> StateFlag {
        match a {
            Appliance::Heat => StateFlag::Hot,
            Appliance::Cool => StateFlag::Cold,
            Appliance::Clean => StateFlag::Clean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: ObjectId,
    pub category: String,
    pub position: Vec3,
    /// Yaw in degrees, clockwise from north.
    pub rotation: f64,
    pub caps: Capabilities,
    pub status: ObjectStatus,
    pub parent: Option<ObjectId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub width: i32,
    pub height: i32,
    pub cell_size: f64,
    blocked: Vec<bool>,
}

impl Grid {
    pub fn new(width: i32, height: i32, cell_size: f64) -> Self {
        assert!(width > 0 && height > 0);
        Grid { width, height, cell_size, blocked: vec![false; (width * height) as usize] }
    }

    /// Grid with blocked border cells.
    pub fn walled(width: i32, height: i32, cell_size: f64) -> Self {
        let mut g = Grid::new(width, height, cell_size);
        for c in 0..width {
            g.set_blocked(Cell::new(c, 0), true);
            g.set_blocked(Cell::new(c, height - 1), true);
        }
        for r in 0..height {
            g.set_blocked(Cell::new(0, r), true);
            g.set_blocked(Cell::new(width - 1, r), true);
        }
        g
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.col >= 0 && c.row >= 0 && c.col < self.width && c.row < self.height
    }

    fn index(&self, c: Cell) -> usize {
        (c.row * self.width + c.col) as usize
    }

    pub fn is_blocked(&self, c: Cell) -> bool {
        !self.in_bounds(c) || self.blocked[self.index(c)]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        !self.is_blocked(c)
    }

    pub fn set_blocked(&mut self, c: Cell, blocked: bool) {
        let i = self.index(c);
        self.blocked[i] = blocked;
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |r| (0..self.width).map(move |c| Cell::new(c, r)))
    }

    pub fn center(&self, c: Cell) -> (f64, f64) {
        (
            (c.col as f64 + 0.5) * self.cell_size,
            (c.row as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Cell {
        Cell::new(
            (x / self.cell_size).floor() as i32,
            (y / self.cell_size).floor() as i32,
        )
    }

    /// Free cells reachable from `start` over 4-neighbor moves.
    pub fn flood_fill(&self, start: Cell) -> BTreeSet<Cell> {
        let mut seen = BTreeSet::new();
        if self.is_blocked(start) {
            return seen;
        }
        let mut stack = vec![start];
        seen.insert(start);
        while let Some(c) = stack.pop() {
            for n in c.neighbors4() {
                if self.is_free(n) && seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub cell_size: f64,
    /// Maximum 3D distance for interactions, meters.
    pub interaction_range: f64,
    /// Full opening angle of the facing cone, degrees.
    pub view_cone_deg: f64,
    /// Height of the agent's camera, meters.
    pub agent_height: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig { cell_size: 0.25, interaction_range: 1.5, view_cone_deg: 90.0, agent_height: 0.9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionKind {
    MoveForward,
    MoveBackward,
    MoveLeft,
    MoveRight,
    RotateCW,
    RotateCCW,
    PickupObject,
    PutObject,
    ToggleObject,
    SliceObject,
}

impl ActionKind {
    pub fn is_interaction(self) -> bool {
        matches!(
            self,
            ActionKind::PickupObject
                | ActionKind::PutObject
                | ActionKind::ToggleObject
                | ActionKind::SliceObject
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LowLevelAction {
    pub kind: ActionKind,
    pub target: Option<ObjectId>,
}

impl LowLevelAction {
    pub fn motion(kind: ActionKind) -> Self {
        debug_assert!(!kind.is_interaction());
        LowLevelAction { kind, target: None }
    }

    pub fn interact(kind: ActionKind, target: impl Into<ObjectId>) -> Self {
        debug_assert!(kind.is_interaction());
        LowLevelAction { kind, target: Some(target.into()) }
    }

    pub fn is_well_formed(&self) -> bool {
        self.kind.is_interaction() == self.target.is_some()
    }
}

impl fmt::Display for LowLevelAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.target {
            Some(t) => write!(f, "{:?}({t})", self.kind),
            None => write!(f, "{:?}", self.kind),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FailReason {
    Malformed,
    Blocked,
    UnknownTarget,
    NotVisible,
    HandFull,
    HandEmpty,
    NotPickupable,
    NotReceptacle,
    Incompatible,
    Closed,
    NotToggleable,
    NotSliceable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepResult {
    pub success: bool,
    pub failure: Option<FailReason>,
}

impl StepResult {
    const OK: StepResult = StepResult { success: true, failure: None };

    fn fail(reason: FailReason) -> StepResult {
        StepResult { success: false, failure: Some(reason) }
    }
}

/// Goal predicate over categories (alias-normalized).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubtaskCondition {
    /// At least `count` instances of `object` sit directly in some `receptacle`.
    Placed { object: String, receptacle: String, count: usize },
    Holding { object: String },
    StateIs { object: String, flag: StateFlag, value: bool },
    /// Some instance of `object` is in view of the agent.
    AgentNear { object: String },
}

impl SubtaskCondition {
    pub fn placed(object: &str, receptacle: &str) -> Self {
        SubtaskCondition::Placed { object: object.into(), receptacle: receptacle.into(), count: 1 }
    }

    pub fn state(object: &str, flag: StateFlag) -> Self {
        SubtaskCondition::StateIs { object: object.into(), flag, value: true }
    }

    pub fn categories(&self) -> Vec<&str> {
        match self {
            SubtaskCondition::Placed { object, receptacle, .. } => vec![object, receptacle],
            SubtaskCondition::Holding { object }
            | SubtaskCondition::StateIs { object, .. }
            | SubtaskCondition::AgentNear { object } => vec![object],
        }
    }
}

impl fmt::Display for SubtaskCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubtaskCondition::Placed { object, receptacle, count } if *count == 1 => {
                write!(f, "Placed({object},{receptacle})")
            }
            SubtaskCondition::Placed { object, receptacle, count } => {
                write!(f, "Placed({object},{receptacle},{count})")
            }
            SubtaskCondition::Holding { object } => write!(f, "Holding({object})"),
            SubtaskCondition::StateIs { object, flag, value } => {
                write!(f, "StateIs({object},{}={value})", flag.as_str())
            }
            SubtaskCondition::AgentNear { object } => write!(f, "AgentNear({object})"),
        }
    }
}

/// Complete simulator state. Cloning yields an independent value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub room_kind: RoomKind,
    pub config: WorldConfig,
    pub grid: Grid,
    /// Sorted by id.
    pub objects: Vec<ObjectInstance>,
    pub agent: Pose,
    pub held: Option<ObjectId>,
}

/// Opaque saved simulator state.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot(Arc<WorldState>);

impl Snapshot {
    pub fn restore(&self) -> WorldState {
        (*self.0).clone()
    }
}

/// Placement offsets keeping contents well within their container's cell.
const SLOT_OFFSETS: [(f64, f64); 5] = [(0.0, 0.0), (0.03, 0.0), (-0.03, 0.0), (0.0, 0.03), (0.0, -0.03)];

impl WorldState {
    pub fn new(room_kind: RoomKind, config: WorldConfig, grid: Grid, agent: Pose) -> Self {
        WorldState { room_kind, config, grid, objects: Vec::new(), agent, held: None }
    }

    /// Adds an object, keeping the list sorted. Panics on duplicate id.
    pub fn insert_object(&mut self, obj: ObjectInstance) {
        match self.objects.binary_search_by(|o| o.id.cmp(&obj.id)) {
            Ok(_) => panic!("duplicate object id {}", obj.id),
            Err(i) => self.objects.insert(i, obj),
        }
    }

    pub fn object(&self, id: &str) -> Option<&ObjectInstance> {
        self.objects
            .binary_search_by(|o| o.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.objects[i])
    }

    fn object_mut(&mut self, id: &str) -> Option<&mut ObjectInstance> {
        self.objects
            .binary_search_by(|o| o.id.as_str().cmp(id))
            .ok()
            .map(move |i| &mut self.objects[i])
    }

    pub fn instances_of<'a>(&'a self, category: &'a str) -> impl Iterator<Item = &'a ObjectInstance> + 'a {
        self.objects.iter().filter(move |o| o.category == category)
    }

    pub fn children<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a ObjectInstance> + 'a {
        self.objects.iter().filter(move |o| o.parent.as_deref() == Some(id))
    }

    /// All objects transitively contained in `id`.
    pub fn descendants(&self, id: &str) -> Vec<ObjectId> {
        let mut out = Vec::new();
        let mut frontier = vec![id.to_string()];
        while let Some(cur) = frontier.pop() {
            for c in self.children(&cur) {
                out.push(c.id.clone());
                frontier.push(c.id.clone());
            }
        }
        out.sort();
        out
    }

    pub fn is_ancestor(&self, ancestor: &str, id: &str) -> bool {
        let mut cur = self.object(id).and_then(|o| o.parent.clone());
        // bounded walk so malformed inputs with cycles terminate
        for _ in 0..=self.objects.len() {
            let Some(p) = cur else { return false };
            if p == ancestor {
                return true;
            }
            cur = self.object(&p).and_then(|o| o.parent.clone());
        }
        false
    }

    pub fn agent_position(&self) -> Vec3 {
        let (x, y) = self.grid.center(self.agent.cell);
        Vec3::new(x, y, self.config.agent_height)
    }

    /// Cell an object occupies (its container's cell when contained).
    pub fn object_cell(&self, id: &str) -> Option<Cell> {
        self.object(id).map(|o| self.grid.cell_of(o.position.x, o.position.y))
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot(Arc::new(self.clone()))
    }

    /// True when the target is within interaction range and inside the
    /// agent's facing cone.
    pub fn is_visible(&self, id: &str) -> bool {
        let Some(obj) = self.object(id) else { return false };
        if self.held.as_deref() == Some(id) {
            return true;
        }
        let d = obj.position.sub(self.agent_position());
        if d.norm() > self.config.interaction_range + 1e-9 {
            return false;
        }
        let planar = d.planar_norm();
        if planar < 1e-9 {
            return true;
        }
        let bearing = d.x.atan2(d.y).to_degrees();
        let mut rel = (bearing - self.agent.heading.yaw_deg()).rem_euclid(360.0);
        if rel > 180.0 {
            rel = 360.0 - rel;
        }
        rel <= self.config.view_cone_deg / 2.0 + 1e-9
    }

    fn inside_closed(&self, id: &str) -> bool {
        let mut cur = self.object(id).and_then(|o| o.parent.clone());
        while let Some(p) = cur {
            let Some(po) = self.object(&p) else { break };
            if po.caps.openable && !po.status.is_open {
                return true;
            }
            cur = po.parent.clone();
        }
        false
    }

    /// Moves an object and its contents by the same displacement.
    fn relocate(&mut self, id: &str, to: Vec3) {
        let Some(from) = self.object(id).map(|o| o.position) else { return };
        let delta = to.sub(from);
        let mut ids = self.descendants(id);
        ids.push(id.to_string());
        for i in ids {
            if let Some(o) = self.object_mut(&i) {
                o.position = o.position.add(delta);
            }
        }
    }

    fn apply_appliance(&mut self, appliance_id: &str, effect: Appliance) {
        for id in self.descendants(appliance_id) {
            if let Some(o) = self.object_mut(&id) {
                match effect {
                    Appliance::Heat => {
                        o.status.is_hot = true;
                        o.status.is_cold = false;
                    }
                    Appliance::Cool => {
                        o.status.is_cold = true;
                        o.status.is_hot = false;
                    }
                    Appliance::Clean => o.status.is_clean = true,
                }
            }
        }
    }

    fn hand_position(&self) -> Vec3 {
        let (dc, dr) = self.agent.heading.delta();
        let p = self.agent_position();
        let reach = 0.1 * self.config.cell_size;
        Vec3::new(p.x + dc as f64 * reach, p.y + dr as f64 * reach, p.z - 0.2)
    }

    /// Applies one low-level action in place. Failed actions leave the state
    /// untouched.
    pub fn apply(&mut self, action: &LowLevelAction) -> StepResult {
        if !action.is_well_formed() {
            return StepResult::fail(FailReason::Malformed);
        }
        let dk = DomainKnowledge::builtin();
        let heading = self.agent.heading;
        match action.kind {
            ActionKind::MoveForward
            | ActionKind::MoveBackward
            | ActionKind::MoveLeft
            | ActionKind::MoveRight => {
                let dir = match action.kind {
                    ActionKind::MoveForward => heading,
                    ActionKind::MoveBackward => heading.cw().cw(),
                    ActionKind::MoveLeft => heading.ccw(),
                    _ => heading.cw(),
                };
                let next = self.agent.cell.offset(dir.delta());
                if self.grid.is_blocked(next) {
                    return StepResult::fail(FailReason::Blocked);
                }
                self.agent.cell = next;
                if let Some(h) = self.held.clone() {
                    let hp = self.hand_position();
                    self.relocate(&h, hp);
                }
                StepResult::OK
            }
            ActionKind::RotateCW | ActionKind::RotateCCW => {
                self.agent.heading = if action.kind == ActionKind::RotateCW {
                    heading.cw()
                } else {
                    heading.ccw()
                };
                if let Some(h) = self.held.clone() {
                    let hp = self.hand_position();
                    self.relocate(&h, hp);
                }
                StepResult::OK
            }
            ActionKind::PickupObject => {
                let target = action.target.as_deref().unwrap_or_default();
                let Some(obj) = self.object(target) else {
                    return StepResult::fail(FailReason::UnknownTarget);
                };
                if self.held.is_some() {
                    return StepResult::fail(FailReason::HandFull);
                }
                if !obj.caps.pickupable {
                    return StepResult::fail(FailReason::NotPickupable);
                }
                if !self.is_visible(target) {
                    return StepResult::fail(FailReason::NotVisible);
                }
                if self.inside_closed(target) {
                    return StepResult::fail(FailReason::Closed);
                }
                let hp = self.hand_position();
                self.relocate(target, hp);
                if let Some(o) = self.object_mut(target) {
                    o.parent = None;
                }
                self.held = Some(target.to_string());
                StepResult::OK
            }
            ActionKind::PutObject => {
                let target = action.target.as_deref().unwrap_or_default();
                let Some(recep) = self.object(target) else {
                    return StepResult::fail(FailReason::UnknownTarget);
                };
                let Some(held) = self.held.clone() else {
                    return StepResult::fail(FailReason::HandEmpty);
                };
                if !recep.caps.receptacle || held == target || self.is_ancestor(&held, target) {
                    return StepResult::fail(FailReason::NotReceptacle);
                }
                let held_cat = &self.object(&held).expect("held object exists").category;
                if !dk.can_contain(&recep.category, held_cat) {
                    return StepResult::fail(FailReason::Incompatible);
                }
                if !self.is_visible(target) {
                    return StepResult::fail(FailReason::NotVisible);
                }
                if recep.caps.openable && !recep.status.is_open {
                    return StepResult::fail(FailReason::Closed);
                }
                let slot = self.children(target).count() % SLOT_OFFSETS.len();
                let (ox, oy) = SLOT_OFFSETS[slot];
                let base = recep.position;
                let lift = if recep.caps.pickupable { 0.05 } else { 0.0 };
                let dest = Vec3::new(base.x + ox, base.y + oy, base.z + lift);
                self.relocate(&held, dest);
                if let Some(o) = self.object_mut(&held) {
                    o.parent = Some(target.to_string());
                }
                self.held = None;
                StepResult::OK
            }
            ActionKind::ToggleObject => {
                let target = action.target.as_deref().unwrap_or_default();
                let Some(obj) = self.object(target) else {
                    return StepResult::fail(FailReason::UnknownTarget);
                };
                if !(obj.caps.openable || obj.caps.toggleable) {
                    return StepResult::fail(FailReason::NotToggleable);
                }
                if !self.is_visible(target) {
                    return StepResult::fail(FailReason::NotVisible);
                }
                let appliance = dk.category(&obj.category).and_then(|c| c.appliance);
                let openable = obj.caps.openable;
                let o = self.object_mut(target).expect("checked above");
                if openable {
                    o.status.is_open = !o.status.is_open;
                    // closing a door starts the appliance
                    let closed_now = !o.status.is_open;
                    if let (true, Some(a)) = (closed_now, appliance) {
                        self.apply_appliance(target, a);
                    }
                } else {
                    o.status.is_toggled_on = !o.status.is_toggled_on;
                    let on_now = o.status.is_toggled_on;
                    if let (true, Some(a)) = (on_now, appliance) {
                        self.apply_appliance(target, a);
                    }
                }
                StepResult::OK
            }
            ActionKind::SliceObject => {
                let target = action.target.as_deref().unwrap_or_default();
                let Some(obj) = self.object(target) else {
                    return StepResult::fail(FailReason::UnknownTarget);
                };
                if !obj.caps.sliceable || obj.status.is_sliced || self.held.as_deref() == Some(target) {
                    return StepResult::fail(FailReason::NotSliceable);
                }
                if !self.is_visible(target) {
                    return StepResult::fail(FailReason::NotVisible);
                }
                let mut sliced = obj.clone();
                let idx = self
                    .objects
                    .binary_search_by(|o| o.id.as_str().cmp(target))
                    .expect("present");
                self.objects.remove(idx);
                sliced.id = format!("{target}-sliced");
                sliced.status.is_sliced = true;
                sliced.caps.sliceable = false;
                self.insert_object(sliced);
                StepResult::OK
            }
        }
    }

    /// Pure transition: returns the successor and the outcome.
    pub fn step(&self, action: &LowLevelAction) -> (WorldState, StepResult) {
        let mut next = self.clone();
        let r = next.apply(action);
        (next, r)
    }

    pub fn check_condition(&self, cond: &SubtaskCondition) -> Result<bool, WorldError> {
        let dk = DomainKnowledge::builtin();
        let resolve = |c: &str| -> Result<String, WorldError> {
            dk.canonical(c)
                .map(str::to_string)
                .ok_or_else(|| WorldError::UnknownCategory(c.to_string()))
        };
        Ok(match cond {
            SubtaskCondition::Placed { object, receptacle, count } => {
                let (object, receptacle) = (resolve(object)?, resolve(receptacle)?);
                self.instances_of(&object)
                    .filter(|o| {
                        o.parent
                            .as_deref()
                            .and_then(|p| self.object(p))
                            .is_some_and(|p| p.category == receptacle)
                    })
                    .count()
                    >= *count
            }
            SubtaskCondition::Holding { object } => {
                let object = resolve(object)?;
                self.held
                    .as_deref()
                    .and_then(|h| self.object(h))
                    .is_some_and(|h| h.category == object)
            }
            SubtaskCondition::StateIs { object, flag, value } => {
                let object = resolve(object)?;
                let found = self.instances_of(&object).any(|o| flag.get(&o.status) == *value);
                found
            }
            SubtaskCondition::AgentNear { object } => {
                let object = resolve(object)?;
                let found = self.instances_of(&object).any(|o| self.is_visible(&o.id));
                found
            }
        })
    }

    /// Checks the structural invariants of a state.
    pub fn validate(&self) -> Result<(), String> {
        let mut ids = BTreeSet::new();
        for o in &self.objects {
            if !ids.insert(o.id.as_str()) {
                return Err(format!("duplicate id {}", o.id));
            }
        }
        if self.grid.is_blocked(self.agent.cell) {
            return Err("agent stands in a blocked cell".into());
        }
        if let Some(h) = &self.held {
            if self.object(h).is_none() {
                return Err(format!("held object {h} missing"));
            }
        }
        for o in &self.objects {
            if let Some(p) = &o.parent {
                let Some(po) = self.object(p) else {
                    return Err(format!("{} has missing parent {p}", o.id));
                };
                if self.is_ancestor(&o.id, &o.id) {
                    return Err(format!("containment cycle through {}", o.id));
                }
                let oc = self.grid.cell_of(o.position.x, o.position.y);
                let pc = self.grid.cell_of(po.position.x, po.position.y);
                if oc != pc {
                    return Err(format!("{} lies outside its parent {p}", o.id));
                }
            }
        }
        Ok(())
    }
}
