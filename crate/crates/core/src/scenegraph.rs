//! Object-centric scene graph built from a world snapshot.
//!
//! Node 0 is always the agent. Edges carry the geometric relation of the
//! target as seen from the source: Euclidean distance, yaw in the source's
//! own frame (the agent's heading, or an object's rotation) and pitch from
//! the altitude difference.

use std::collections::{BTreeMap, BTreeSet};

use crate::domain::RoomKind;
use crate::world::{Vec3, WorldState};

pub use crate::domain::DomainKnowledge;

pub const AGENT_NODE: usize = 0;
pub const AGENT_CATEGORY: &str = "agent";

#[derive(Debug, Clone, PartialEq)]
pub struct GraphNode {
    pub id: String,
    pub category: String,
    pub position: Vec3,
    /// Yaw of the node's frame, degrees clockwise from north.
    pub rotation: f64,
    /// Whether the agent can walk up to this node.
    pub navigable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeAttrs {
    pub distance: f64,
    /// Degrees in [0, 360), measured in the source node's frame.
    pub yaw: f64,
    /// Degrees in [-90, 90].
    pub pitch: f64,
}

impl EdgeAttrs {
    pub fn between(from: &GraphNode, to: &GraphNode) -> EdgeAttrs {
        let d = to.position.sub(from.position);
        let distance = d.norm();
        let planar = d.planar_norm();
        let yaw = if planar < 1e-12 {
            0.0
        } else {
            normalize_yaw(d.x.atan2(d.y).to_degrees() - from.rotation)
        };
        let pitch = if distance < 1e-12 { 0.0 } else { d.z.atan2(planar).to_degrees() };
        EdgeAttrs { distance, yaw, pitch }
    }
}

fn normalize_yaw(deg: f64) -> f64 {
    let y = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if y >= 360.0 {
        0.0
    } else {
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneGraph {
    pub room_kind: RoomKind,
    pub nodes: Vec<GraphNode>,
    pub edges: BTreeMap<(usize, usize), EdgeAttrs>,
}

impl SceneGraph {
    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn add_edge(&mut self, from: usize, to: usize) {
        let attrs = EdgeAttrs::between(&self.nodes[from], &self.nodes[to]);
        self.edges.insert((from, to), attrs);
    }

    pub fn successors(&self, from: usize) -> impl Iterator<Item = (usize, &EdgeAttrs)> + '_ {
        self.edges.range((from, 0)..(from + 1, 0)).map(|((_, to), a)| (*to, a))
    }

    pub fn out_degree(&self, from: usize) -> usize {
        self.successors(from).count()
    }

    pub fn categories(&self) -> BTreeSet<&str> {
        self.nodes[1..].iter().map(|n| n.category.as_str()).collect()
    }
}

/// One node per object plus the agent; only containment edges.
pub fn build_graph(state: &WorldState) -> SceneGraph {
    let reach = state.grid.flood_fill(state.agent.cell);
    let mut nodes = vec![GraphNode {
        id: AGENT_CATEGORY.into(),
        category: AGENT_CATEGORY.into(),
        position: state.agent_position(),
        rotation: state.agent.heading.yaw_deg(),
        navigable: true,
    }];
    for o in &state.objects {
        let cell = state.grid.cell_of(o.position.x, o.position.y);
        let navigable =
            reach.contains(&cell) || cell.neighbors4().iter().any(|n| reach.contains(n));
        nodes.push(GraphNode {
            id: o.id.clone(),
            category: o.category.clone(),
            position: o.position,
            rotation: o.rotation,
            navigable,
        });
    }
    let mut g = SceneGraph { room_kind: state.room_kind, nodes, edges: BTreeMap::new() };
    let index: BTreeMap<&str, usize> =
        state.objects.iter().enumerate().map(|(i, o)| (o.id.as_str(), i + 1)).collect();
    for (i, o) in state.objects.iter().enumerate() {
        if let Some(p) = o.parent.as_deref().and_then(|p| index.get(p)) {
            g.add_edge(*p, i + 1);
        }
    }
    g
}

/// Adds receptacle → allowed-content edges. Idempotent.
pub fn infuse_domain_knowledge(mut g: SceneGraph, dk: &DomainKnowledge) -> SceneGraph {
    let n = g.nodes.len();
    for from in 1..n {
        for to in 1..n {
            if from != to && dk.can_contain(&g.nodes[from].category, &g.nodes[to].category) {
                g.add_edge(from, to);
            }
        }
    }
    g
}

/// Connects the agent to every node it can walk up to (with domain
/// knowledge) or to every node (without).
pub fn connect_agent(mut g: SceneGraph, dk: Option<&DomainKnowledge>) -> SceneGraph {
    for to in 1..g.nodes.len() {
        if dk.is_none() || g.nodes[to].navigable {
            g.add_edge(AGENT_NODE, to);
        }
    }
    g
}

/// The full pipeline used for context generation.
pub fn full_graph(state: &WorldState, dk: &DomainKnowledge) -> SceneGraph {
    connect_agent(infuse_domain_knowledge(build_graph(state), dk), Some(dk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{generate_scene, Cell, Grid, Heading, Pose, WorldConfig};

    fn empty_room() -> WorldState {
        let config = WorldConfig::default();
        WorldState::new(
            RoomKind::Bathroom,
            config,
            Grid::walled(40, 40, config.cell_size),
            Pose { cell: Cell::new(10, 10), heading: Heading::North },
        )
    }

    fn node_at(pos: Vec3, rotation: f64) -> GraphNode {
        GraphNode { id: "n".into(), category: "n".into(), position: pos, rotation, navigable: true }
    }

    #[test]
    fn ahead_of_agent_is_yaw_zero() {
        let a = node_at(Vec3::new(1.0, 1.0, 0.9), 0.0);
        let b = node_at(Vec3::new(1.0, 4.0, 0.9), 0.0);
        let e = EdgeAttrs::between(&a, &b);
        assert!((e.distance - 3.0).abs() < 1e-12);
        assert!(e.yaw < 45.0 || e.yaw >= 315.0);
        assert_eq!(e.pitch, 0.0);
    }

    #[test]
    fn yaw_is_relative_to_source_frame() {
        // facing east, a point to the north lies on the left
        let a = node_at(Vec3::new(0.0, 0.0, 0.0), 90.0);
        let b = node_at(Vec3::new(0.0, 2.0, -2.0), 0.0);
        let e = EdgeAttrs::between(&a, &b);
        assert!((e.yaw - 270.0).abs() < 1e-9);
        assert!((e.pitch + 45.0).abs() < 1e-9);
        assert!((e.distance - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn coincident_nodes_have_zero_distance() {
        let a = node_at(Vec3::new(1.0, 1.0, 1.0), 30.0);
        let e = EdgeAttrs::between(&a, &a.clone());
        assert_eq!((e.distance, e.yaw, e.pitch), (0.0, 0.0, 0.0));
    }

    #[test]
    fn node_count_is_objects_plus_agent() {
        let s = generate_scene(4, RoomKind::Kitchen).unwrap();
        let g = build_graph(&s);
        assert_eq!(g.nodes.len(), s.objects.len() + 1);
        assert_eq!(g.nodes.iter().filter(|n| n.category == AGENT_CATEGORY).count(), 1);
        let contained = s.objects.iter().filter(|o| o.parent.is_some()).count();
        assert_eq!(g.edges.len(), contained);
    }

    #[test]
    fn empty_room_graph_is_just_the_agent() {
        let g = full_graph(&empty_room(), DomainKnowledge::builtin());
        assert_eq!(g.nodes.len(), 1);
        assert!(g.edges.is_empty());
    }
}
