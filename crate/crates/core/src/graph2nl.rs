//! Scene graph → text. Edge geometry is binned into one of 64 relations
//! (8 distance × 2 pitch × 4 yaw bins), each with a word form and a
//! one-letter symbol; paths from the agent to a target become lines such as
//! `- fnk sink dnj soapbar`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::DomainKnowledge;
use crate::error::Graph2NlError;
use crate::plandsl::{HighLevelAction, Plan};
use crate::scenegraph::{full_graph, EdgeAttrs, SceneGraph, AGENT_NODE};
use crate::world::WorldState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DistanceBin {
    Distant,
    Far,
    Reachable,
    Near,
    Close,
    Closer,
    Next,
    In,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum YawBin {
    Right,
    Back,
    Left,
    Front,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PitchBin {
    Above,
    Below,
}

/// (lower bound exclusive, bin); checked top-down, `In` is the fallthrough.
const DISTANCE_ROWS: [(f64, DistanceBin, &str, char); 7] = [
    (5.0, DistanceBin::Distant, "distant", 'a'),
    (4.0, DistanceBin::Far, "far", 'b'),
    (3.0, DistanceBin::Reachable, "reachable", 'c'),
    (2.0, DistanceBin::Near, "near", 'd'),
    (1.0, DistanceBin::Close, "close", 'e'),
    (0.5, DistanceBin::Closer, "closer", 'f'),
    (0.1, DistanceBin::Next, "next", 'g'),
];

impl DistanceBin {
    pub const ALL: [DistanceBin; 8] = [
        DistanceBin::Distant,
        DistanceBin::Far,
        DistanceBin::Reachable,
        DistanceBin::Near,
        DistanceBin::Close,
        DistanceBin::Closer,
        DistanceBin::Next,
        DistanceBin::In,
    ];

    pub fn word(self) -> &'static str {
        DISTANCE_ROWS.iter().find(|r| r.1 == self).map_or("in", |r| r.2)
    }

    pub fn symbol(self) -> char {
        DISTANCE_ROWS.iter().find(|r| r.1 == self).map_or('h', |r| r.3)
    }
}

impl YawBin {
    pub const ALL: [YawBin; 4] = [YawBin::Right, YawBin::Back, YawBin::Left, YawBin::Front];

    pub fn word(self) -> &'static str {
        match self {
            YawBin::Right => "right",
            YawBin::Back => "back",
            YawBin::Left => "left",
            YawBin::Front => "front",
        }
    }

    pub fn symbol(self) -> char {
        match self {
            YawBin::Right => 'i',
            YawBin::Back => 'j',
            YawBin::Left => 'k',
            YawBin::Front => 'l',
        }
    }
}

impl PitchBin {
    pub const ALL: [PitchBin; 2] = [PitchBin::Above, PitchBin::Below];

    pub fn word(self) -> &'static str {
        match self {
            PitchBin::Above => "above",
            PitchBin::Below => "below",
        }
    }

    pub fn symbol(self) -> char {
        match self {
            PitchBin::Above => 'm',
            PitchBin::Below => 'n',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GeoRelation {
    pub distance: DistanceBin,
    pub yaw: YawBin,
    pub pitch: PitchBin,
}

impl GeoRelation {
    /// All 64 relations, in bin order.
    pub fn all() -> Vec<GeoRelation> {
        let mut out = Vec::with_capacity(64);
        for distance in DistanceBin::ALL {
            for pitch in PitchBin::ALL {
                for yaw in YawBin::ALL {
                    out.push(GeoRelation { distance, yaw, pitch });
                }
            }
        }
        out
    }

    /// `"closer below left"` or `"fnk"`.
    pub fn to_text(self, condensed: bool) -> String {
        if condensed {
            [self.distance.symbol(), self.pitch.symbol(), self.yaw.symbol()].iter().collect()
        } else {
            format!("{} {} {}", self.distance.word(), self.pitch.word(), self.yaw.word())
        }
    }

    /// Inverse of [`GeoRelation::to_text`] for either form.
    pub fn parse(text: &str) -> Result<GeoRelation, Graph2NlError> {
        let bad = || Graph2NlError::BadRelation(text.to_string());
        let words: Vec<&str> = text.split_whitespace().collect();
        let (d, p, y) = match words.as_slice() {
            [d, p, y] => (
                DistanceBin::ALL.into_iter().find(|b| b.word() == *d),
                PitchBin::ALL.into_iter().find(|b| b.word() == *p),
                YawBin::ALL.into_iter().find(|b| b.word() == *y),
            ),
            [sym] if sym.chars().count() == 3 => {
                let c: Vec<char> = sym.chars().collect();
                (
                    DistanceBin::ALL.into_iter().find(|b| b.symbol() == c[0]),
                    PitchBin::ALL.into_iter().find(|b| b.symbol() == c[1]),
                    YawBin::ALL.into_iter().find(|b| b.symbol() == c[2]),
                )
            }
            _ => return Err(bad()),
        };
        match (d, p, y) {
            (Some(distance), Some(pitch), Some(yaw)) => Ok(GeoRelation { distance, yaw, pitch }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for GeoRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text(false))
    }
}

/// The 64 condensed symbols, for registration as atomic tokens.
pub fn condensed_symbols() -> Vec<String> {
    GeoRelation::all().into_iter().map(|r| r.to_text(true)).collect()
}

pub fn map_relation(distance: f64, yaw: f64, pitch: f64) -> Result<GeoRelation, Graph2NlError> {
    if !distance.is_finite() || distance < 0.0 {
        return Err(Graph2NlError::Distance(distance));
    }
    if !(0.0..360.0).contains(&yaw) {
        return Err(Graph2NlError::Yaw(yaw));
    }
    if !(-90.0..=90.0).contains(&pitch) {
        return Err(Graph2NlError::Pitch(pitch));
    }
    let distance = DISTANCE_ROWS
        .iter()
        .find(|r| distance > r.0)
        .map_or(DistanceBin::In, |r| r.1);
    let yaw = if (45.0..135.0).contains(&yaw) {
        YawBin::Right
    } else if (135.0..225.0).contains(&yaw) {
        YawBin::Back
    } else if (225.0..315.0).contains(&yaw) {
        YawBin::Left
    } else {
        YawBin::Front
    };
    let pitch = if pitch >= 0.0 { PitchBin::Above } else { PitchBin::Below };
    Ok(GeoRelation { distance, yaw, pitch })
}

pub fn edge_relation(e: &EdgeAttrs) -> GeoRelation {
    map_relation(e.distance, e.yaw, e.pitch).expect("edge attributes are always in range")
}

/// Simple paths from the agent to any node of `target` with at most
/// `depth` edges, as `(cost, node sequence)` in output order.
pub fn target_paths(g: &SceneGraph, target: &str, depth: usize) -> Vec<(f64, Vec<usize>)> {
    fn walk(
        g: &SceneGraph,
        target: &str,
        depth: usize,
        path: &mut Vec<usize>,
        cost: f64,
        out: &mut Vec<(f64, Vec<usize>)>,
    ) {
        let last = *path.last().expect("path starts at the agent");
        for (next, e) in g.successors(last) {
            if path.contains(&next) {
                continue;
            }
            path.push(next);
            if g.nodes[next].category == target {
                out.push((cost + e.distance, path.clone()));
            } else if path.len() <= depth {
                walk(g, target, depth, path, cost + e.distance, out);
            }
            path.pop();
        }
    }
    let mut out = Vec::new();
    walk(g, target, depth, &mut vec![AGENT_NODE], 0.0, &mut out);
    out
}

fn path_line(g: &SceneGraph, path: &[usize], condensed: bool) -> String {
    let mut line = String::from("-");
    for w in path.windows(2) {
        let rel = edge_relation(&g.edges[&(w[0], w[1])]);
        line.push(' ');
        line.push_str(&rel.to_text(condensed));
        line.push(' ');
        line.push_str(&g.nodes[w[1]].category);
    }
    line
}

/// `[Room=` followed by one `- rel cat rel cat ...` line per path, closed
/// by `]`. Lines are ordered by path length in meters, then text.
pub fn describe_target(
    g: &SceneGraph,
    target: &str,
    depth: usize,
    condensed: bool,
) -> Result<String, Graph2NlError> {
    if depth == 0 {
        return Err(Graph2NlError::Depth);
    }
    let dk = DomainKnowledge::builtin();
    let target = dk.normalize(target);
    if !g.nodes.iter().skip(1).any(|n| n.category == target) {
        return Err(Graph2NlError::TargetAbsent(target.to_string()));
    }
    let mut lines: Vec<(f64, String)> = target_paths(g, target, depth)
        .into_iter()
        .map(|(cost, p)| (cost, path_line(g, &p, condensed)))
        .collect();
    lines.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let mut seen = std::collections::HashSet::new();
    lines.retain(|(_, l)| seen.insert(l.clone()));
    let body: Vec<String> = lines.into_iter().map(|(_, l)| l).collect();
    Ok(format!("[{}={}]", g.room_kind.title(), if body.is_empty() {
        String::new()
    } else {
        format!("\n{}", body.join("\n"))
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextVariant {
    None,
    SceneKnowledge,
    SceneGraph,
    FullContext,
    FirstStepHint,
}

impl ContextVariant {
    pub const ALL: [ContextVariant; 5] = [
        ContextVariant::None,
        ContextVariant::SceneKnowledge,
        ContextVariant::SceneGraph,
        ContextVariant::FullContext,
        ContextVariant::FirstStepHint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ContextVariant::None => "none",
            ContextVariant::SceneKnowledge => "scene_knowledge",
            ContextVariant::SceneGraph => "scene_graph",
            ContextVariant::FullContext => "full_context",
            ContextVariant::FirstStepHint => "first_step_hint",
        }
    }
}

impl fmt::Display for ContextVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ContextVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ContextVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown context variant `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextOptions {
    pub depth: usize,
    pub condensed: bool,
}

impl Default for ContextOptions {
    fn default() -> Self {
        ContextOptions { depth: 2, condensed: true }
    }
}

/// Sentence describing one plan step, e.g. "walk to the countertop".
pub fn describe_step(action: HighLevelAction, args: &[String]) -> String {
    let a = args.first().map(String::as_str).unwrap_or("");
    match action {
        HighLevelAction::GotoLocation => format!("walk to the {a}"),
        HighLevelAction::PickupObject => format!("pick up the {a}"),
        HighLevelAction::PutObject => {
            format!("put the {a} in the {}", args.get(1).map(String::as_str).unwrap_or(""))
        }
        HighLevelAction::CoolObject => format!("cool the {a}"),
        HighLevelAction::HeatObject => format!("heat the {a}"),
        HighLevelAction::CleanObject => format!("clean the {a}"),
        HighLevelAction::SliceObject => format!("slice the {a}"),
        HighLevelAction::ToggleObject => format!("toggle the {a}"),
    }
}

/// Context text for one task. `target` is the task's target category.
pub fn emit_context(
    variant: ContextVariant,
    state: &WorldState,
    target: &str,
    gold: Option<&Plan>,
    opts: ContextOptions,
) -> Result<String, Graph2NlError> {
    let dk = DomainKnowledge::builtin();
    match variant {
        ContextVariant::None => Ok(String::new()),
        ContextVariant::SceneKnowledge => {
            let cats: std::collections::BTreeSet<&str> =
                state.objects.iter().map(|o| o.category.as_str()).collect();
            Ok(cats.into_iter().collect::<Vec<_>>().join(" "))
        }
        ContextVariant::SceneGraph => {
            describe_target(&full_graph(state, dk), target, opts.depth, opts.condensed)
        }
        ContextVariant::FullContext => {
            let g = full_graph(state, dk);
            let cats: std::collections::BTreeSet<&str> = state
                .objects
                .iter()
                .filter(|o| o.caps.pickupable)
                .map(|o| o.category.as_str())
                .collect();
            let blocks: Result<Vec<String>, _> = cats
                .into_iter()
                .map(|c| describe_target(&g, c, opts.depth, opts.condensed))
                .collect();
            Ok(blocks?.join("\n"))
        }
        ContextVariant::FirstStepHint => {
            let plan = gold.ok_or(Graph2NlError::MissingGoldPlan)?;
            Ok(plan
                .steps
                .first()
                .map(|s| describe_step(s.action, &s.args))
                .unwrap_or_default())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_examples() {
        let r = map_relation(3.5, 90.0, -10.0).unwrap();
        assert_eq!(r.to_text(false), "reachable below right");
        assert_eq!(r.to_text(true), "cni");
        let r = map_relation(0.05, 0.0, 0.0).unwrap();
        assert_eq!(r.to_text(false), "in above front");
        let r = map_relation(0.7, 250.0, -5.0).unwrap();
        assert_eq!(r.to_text(true), "fnk");
        assert_eq!(r.to_text(false), "closer below left");
    }

    #[test]
    fn boundaries_follow_first_match() {
        assert_eq!(map_relation(5.0, 0.0, 0.0).unwrap().distance, DistanceBin::Far);
        assert_eq!(map_relation(5.0001, 0.0, 0.0).unwrap().distance, DistanceBin::Distant);
        assert_eq!(map_relation(0.1, 0.0, 0.0).unwrap().distance, DistanceBin::In);
        assert_eq!(map_relation(0.0, 45.0, 0.0).unwrap().yaw, YawBin::Right);
        assert_eq!(map_relation(0.0, 315.0, 0.0).unwrap().yaw, YawBin::Front);
        assert_eq!(map_relation(0.0, 44.999, 0.0).unwrap().yaw, YawBin::Front);
        assert_eq!(map_relation(0.0, 0.0, -0.0).unwrap().pitch, PitchBin::Above);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(map_relation(-1.0, 0.0, 0.0).is_err());
        assert!(map_relation(f64::NAN, 0.0, 0.0).is_err());
        assert!(map_relation(1.0, 360.0, 0.0).is_err());
        assert!(map_relation(1.0, 0.0, 91.0).is_err());
    }

    #[test]
    fn sixty_four_distinct_relations_round_trip() {
        let all = GeoRelation::all();
        assert_eq!(all.len(), 64);
        for condensed in [true, false] {
            let texts: std::collections::HashSet<String> =
                all.iter().map(|r| r.to_text(condensed)).collect();
            assert_eq!(texts.len(), 64);
            for r in &all {
                assert_eq!(GeoRelation::parse(&r.to_text(condensed)).unwrap(), *r);
            }
        }
        assert!(GeoRelation::parse("zzz").is_err());
    }

    #[test]
    fn step_templates() {
        let args = vec!["countertop".to_string()];
        assert_eq!(describe_step(HighLevelAction::GotoLocation, &args), "walk to the countertop");
    }
}
