use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    Capabilities, Cell, Grid, Heading, ObjectInstance, ObjectStatus, Pose, Vec3, WorldConfig,
    WorldState, SLOT_OFFSETS,
};
use crate::domain::{DomainKnowledge, RoomKind};
use crate::error::WorldError;

const MAX_ATTEMPTS: usize = 200;
/// Minimum Chebyshev spacing between fixtures, in cells.
const FIXTURE_SPACING: i32 = 3;

fn room_salt(kind: RoomKind) -> u64 {
    match kind {
        RoomKind::Kitchen => 0x6b69_7463,
        RoomKind::Bathroom => 0x6261_7468,
        RoomKind::Bedroom => 0x6265_6472,
        RoomKind::Livingroom => 0x6c69_7669,
    }
}

/// Procedurally builds a room. Identical `(seed, room_kind)` pairs always
/// produce identical states.
pub fn generate_scene(seed: u64, room_kind: RoomKind) -> Result<WorldState, WorldError> {
    generate_scene_with(seed, room_kind, WorldConfig::default())
}

pub fn generate_scene_with(
    seed: u64,
    room_kind: RoomKind,
    config: WorldConfig,
) -> Result<WorldState, WorldError> {
    let dk = DomainKnowledge::builtin();
    let room = dk
        .room(room_kind)
        .ok_or_else(|| crate::error::DomainError::UnsupportedRoom(room_kind.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ room_salt(room_kind));
    for _ in 0..MAX_ATTEMPTS {
        if let Some(state) = try_generate(&mut rng, room_kind, room, dk, config) {
            return Ok(state);
        }
    }
    Err(WorldError::GenerationFailed(MAX_ATTEMPTS))
}

fn try_generate(
    rng: &mut ChaCha8Rng,
    room_kind: RoomKind,
    room: &crate::domain::RoomInventory,
    dk: &DomainKnowledge,
    config: WorldConfig,
) -> Option<WorldState> {
    let width = rng.gen_range(16..=20);
    let height = rng.gen_range(16..=20);
    let mut grid = Grid::walled(width, height, config.cell_size);

    // short interior wall segments
    for _ in 0..rng.gen_range(0..=2) {
        let horizontal = rng.gen_bool(0.5);
        let len = rng.gen_range(2..=4);
        let start = Cell::new(rng.gen_range(3..width - 3), rng.gen_range(3..height - 3));
        for i in 0..len {
            let c = if horizontal { start.offset((i, 0)) } else { start.offset((0, i)) };
            if grid.in_bounds(c) {
                grid.set_blocked(c, true);
            }
        }
    }

    let mut fixtures: Vec<&str> = room.required.iter().map(String::as_str).collect();
    for opt in &room.optional {
        if rng.gen_bool(0.6) {
            fixtures.push(opt);
        }
    }

    let mut fixture_cells: Vec<(String, Cell)> = Vec::new();
    for cat in &fixtures {
        let mut placed = false;
        for _ in 0..60 {
            let c = Cell::new(rng.gen_range(2..width - 2), rng.gen_range(2..height - 2));
            if grid.is_blocked(c) {
                continue;
            }
            let spaced = fixture_cells.iter().all(|(_, o)| {
                (o.col - c.col).abs().max((o.row - c.row).abs()) >= FIXTURE_SPACING
            });
            if spaced {
                grid.set_blocked(c, true);
                fixture_cells.push((cat.to_string(), c));
                placed = true;
                break;
            }
        }
        if !placed {
            return None;
        }
    }

    let free: Vec<Cell> = grid.cells().filter(|c| grid.is_free(*c)).collect();
    let agent_cell = *free.choose(rng)?;
    let reach = grid.flood_fill(agent_cell);
    let accessible = |c: Cell| c.neighbors4().iter().any(|n| reach.contains(n));
    if !fixture_cells.iter().all(|(_, c)| accessible(*c)) {
        return None;
    }

    let agent = Pose { cell: agent_cell, heading: *Heading::ALL.choose(rng)? };
    let mut state = WorldState::new(room_kind, config, grid, agent);

    let mut counters: BTreeMap<String, usize> = BTreeMap::new();
    let mut next_id = |cat: &str| {
        let n = counters.entry(cat.to_string()).or_insert(0);
        *n += 1;
        format!("{cat}_{n}")
    };

    for (cat, cell) in &fixture_cells {
        let info = dk.category(cat)?;
        let (x, y) = state.grid.center(*cell);
        state.insert_object(ObjectInstance {
            id: next_id(cat),
            category: cat.clone(),
            position: Vec3::new(x, y, info.height),
            rotation: Heading::ALL.choose(rng)?.yaw_deg(),
            caps: Capabilities {
                pickupable: false,
                receptacle: info.receptacle,
                openable: info.openable,
                toggleable: info.toggleable,
                sliceable: false,
            },
            status: ObjectStatus::default(),
            parent: None,
        });
    }

    // Pickupable selection: a random subset, then enforce what the room's
    // task categories need.
    let present: BTreeSet<&str> = fixtures.iter().copied().collect();
    let hosts = |p: &str| -> Vec<&str> {
        present
            .iter()
            .copied()
            .filter(|f| dk.can_contain(f, p) && !dk.category(f).is_some_and(|c| c.openable))
            .collect()
    };
    let mut pool: Vec<&str> = room
        .pickupables
        .iter()
        .map(String::as_str)
        .filter(|p| !hosts(p).is_empty())
        .collect();
    pool.shuffle(rng);
    let count = rng.gen_range(5..=8).min(pool.len());
    let mut chosen: Vec<&str> = pool[..count].to_vec();

    if room_kind == RoomKind::Kitchen && !chosen.contains(&"apple") {
        chosen.push("apple");
    }
    // a movable receptacle together with something that fits in it
    let movables: Vec<&str> = pool
        .iter()
        .copied()
        .filter(|p| dk.category(p).is_some_and(|c| c.receptacle))
        .collect();
    if !movables.is_empty() {
        let has_pair = chosen.iter().any(|m| {
            movables.contains(m) && chosen.iter().any(|o| o != m && dk.can_contain(m, o))
        });
        if !has_pair {
            let m = *movables.choose(rng)?;
            if !chosen.contains(&m) {
                chosen.push(m);
            }
            if !chosen.iter().any(|o| *o != m && dk.can_contain(m, o)) {
                let fits: Vec<&str> =
                    pool.iter().copied().filter(|o| *o != m && dk.can_contain(m, o)).collect();
                chosen.push(*fits.choose(rng)?);
            }
        }
    }
    chosen.sort();
    chosen.dedup();

    // the duplicated category needs a plain destination free of both
    // copies, so both copies share a host
    let plain_dests = |p: &str| {
        state
            .objects
            .iter()
            .filter(|f| {
                dk.category(&f.category)
                    .is_some_and(|c| c.receptacle && !c.openable && c.appliance.is_none())
                    && dk.can_contain(&f.category, p)
            })
            .count()
    };
    let twins: Vec<&str> = chosen.iter().copied().filter(|p| plain_dests(p) >= 2).collect();
    let twin = *if twins.is_empty() { &chosen } else { &twins }.choose(rng)?;
    let mut instances: Vec<&str> = chosen.clone();
    instances.push(twin);
    instances.sort();

    let fixture_ids: BTreeMap<String, Vec<String>> = {
        let mut m: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for o in &state.objects {
            m.entry(o.category.clone()).or_default().push(o.id.clone());
        }
        m
    };
    let mut twin_host: Option<String> = None;
    for cat in instances {
        let info = dk.category(cat)?;
        let host_cat = *hosts(cat).choose(rng)?;
        let mut host_id = fixture_ids.get(host_cat)?.choose(rng)?.clone();
        if cat == twin {
            host_id = twin_host.get_or_insert(host_id).clone();
        }
        let host = state.object(&host_id)?;
        let slot = state.children(&host_id).count() % SLOT_OFFSETS.len();
        let (ox, oy) = SLOT_OFFSETS[slot];
        let position = Vec3::new(host.position.x + ox, host.position.y + oy, host.position.z);
        let status = ObjectStatus::default();
        state.insert_object(ObjectInstance {
            id: next_id(cat),
            category: cat.to_string(),
            position,
            rotation: Heading::ALL.choose(rng)?.yaw_deg(),
            caps: Capabilities {
                pickupable: true,
                receptacle: info.receptacle,
                openable: false,
                toggleable: false,
                sliceable: info.sliceable,
            },
            status,
            parent: Some(host_id),
        });
    }
    debug_assert!(state.validate().is_ok());
    Some(state)
}
