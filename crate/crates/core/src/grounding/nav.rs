use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use crate::error::GroundingError;
use crate::world::{ActionKind, Cell, Grid, Heading, LowLevelAction, WorldState};

/// Free cells with 4-neighbor adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct NavigationGraph {
    grid: Grid,
}

pub fn build_navgraph(state: &WorldState) -> NavigationGraph {
    NavigationGraph { grid: state.grid.clone() }
}

impl NavigationGraph {
    pub fn from_grid(grid: Grid) -> Self {
        NavigationGraph { grid }
    }

    pub fn contains(&self, c: Cell) -> bool {
        self.grid.is_free(c)
    }

    pub fn neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        c.neighbors4().into_iter().filter(|n| self.contains(*n))
    }

    /// A* with the Manhattan heuristic. The path includes both endpoints.
    pub fn shortest_path(&self, from: Cell, to: Cell) -> Result<Vec<Cell>, GroundingError> {
        if !self.contains(from) || !self.contains(to) {
            return Err(GroundingError::NotInGraph);
        }
        let mut open = BinaryHeap::new();
        let mut g: HashMap<Cell, u32> = HashMap::from([(from, 0)]);
        let mut came: HashMap<Cell, Cell> = HashMap::new();
        open.push(Reverse((from.manhattan(to), 0u32, from)));
        while let Some(Reverse((_, cost, cell))) = open.pop() {
            if cell == to {
                let mut path = vec![to];
                let mut cur = to;
                while let Some(p) = came.get(&cur) {
                    path.push(*p);
                    cur = *p;
                }
                path.reverse();
                return Ok(path);
            }
            if cost > g[&cell] {
                continue;
            }
            for n in self.neighbors(cell) {
                let nc = cost + 1;
                if g.get(&n).is_none_or(|old| nc < *old) {
                    g.insert(n, nc);
                    came.insert(n, cell);
                    open.push(Reverse((nc + n.manhattan(to), nc, n)));
                }
            }
        }
        Err(GroundingError::NoPath)
    }

    /// Breadth-first step counts from `from` to every reachable cell.
    pub fn distances_from(&self, from: Cell) -> HashMap<Cell, u32> {
        let mut dist = HashMap::new();
        if !self.contains(from) {
            return dist;
        }
        dist.insert(from, 0);
        let mut queue = VecDeque::from([from]);
        while let Some(c) = queue.pop_front() {
            let d = dist[&c];
            for n in self.neighbors(c) {
                if let Entry::Vacant(e) = dist.entry(n) {
                    e.insert(d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }
}

/// Shortest rotation sequence from one heading to another.
pub fn rotations(from: Heading, to: Heading) -> Vec<LowLevelAction> {
    if from == to {
        vec![]
    } else if from.cw() == to {
        vec![LowLevelAction::motion(ActionKind::RotateCW)]
    } else if from.ccw() == to {
        vec![LowLevelAction::motion(ActionKind::RotateCCW)]
    } else {
        vec![LowLevelAction::motion(ActionKind::RotateCW); 2]
    }
}

/// Rotations and forward moves that walk `path`, ending on its last cell
/// facing the last movement direction.
pub fn to_motion(path: &[Cell], start: Heading) -> Result<Vec<LowLevelAction>, GroundingError> {
    let mut out = Vec::new();
    let mut heading = start;
    for (i, w) in path.windows(2).enumerate() {
        let dir = Heading::from_delta((w[1].col - w[0].col, w[1].row - w[0].row))
            .ok_or(GroundingError::NonContiguous(i + 1))?;
        out.extend(rotations(heading, dir));
        out.push(LowLevelAction::motion(ActionKind::MoveForward));
        heading = dir;
    }
    Ok(out)
}

/// Motion that brings the agent next to the cell of `target`, facing it.
/// The goal is the nearest free cell adjacent to the target's cell.
pub fn navigate_to(state: &WorldState, target: &str) -> Result<Vec<LowLevelAction>, GroundingError> {
    let cell = state.object_cell(target).ok_or(GroundingError::NotInGraph)?;
    let start = state.agent.cell;
    if cell == start {
        return Ok(vec![]);
    }
    let nav = build_navgraph(state);
    let dist = nav.distances_from(start);
    let goal = cell
        .neighbors4()
        .into_iter()
        .filter_map(|c| dist.get(&c).map(|d| (*d, c)))
        .min()
        .map(|(_, c)| c)
        .ok_or(GroundingError::NoPath)?;
    let path = nav.shortest_path(start, goal)?;
    let mut actions = to_motion(&path, state.agent.heading)?;
    let end_heading = path
        .windows(2)
        .last()
        .and_then(|w| Heading::from_delta((w[1].col - w[0].col, w[1].row - w[0].row)))
        .unwrap_or(state.agent.heading);
    let face = Heading::from_delta((cell.col - goal.col, cell.row - goal.row))
        .expect("goal is adjacent to the target cell");
    actions.extend(rotations(end_heading, face));
    Ok(actions)
}
