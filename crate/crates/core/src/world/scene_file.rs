//! Line-structured scene files, one scene per file.
//!
//! ```text
//! gplan-scene v1
//! room kitchen
//! config 0.25 1.5 90 0.9
//! grid 18 17
//! row ##################
//! ...
//! agent 4 6 N
//! held -
//! object apple_1 apple 1.125 2.375 0.9 90 10001 000000 countertop_1
//! end
//! ```
//!
//! Rows are listed from row 0 upward. Capability bits are pickupable,
//! receptacle, openable, toggleable, sliceable; status bits are clean, hot,
//! cold, sliced, toggled_on, open. Floats use shortest round-trip notation.

use std::fmt::Write as _;

use super::{
    Capabilities, Cell, Grid, Heading, ObjectInstance, ObjectStatus, Pose, Vec3, WorldConfig,
    WorldState,
};
use crate::domain::RoomKind;
use crate::error::WorldError;

pub const SCENE_FILE_HEADER: &str = "gplan-scene v1";

fn bits(values: &[bool]) -> String {
    values.iter().map(|b| if *b { '1' } else { '0' }).collect()
}

pub fn write_scene(state: &WorldState) -> String {
    let mut out = String::new();
    let c = &state.config;
    let _ = writeln!(out, "{SCENE_FILE_HEADER}");
    let _ = writeln!(out, "room {}", state.room_kind);
    let _ = writeln!(
        out,
        "config {} {} {} {}",
        c.cell_size, c.interaction_range, c.view_cone_deg, c.agent_height
    );
    let _ = writeln!(out, "grid {} {}", state.grid.width, state.grid.height);
    for r in 0..state.grid.height {
        let row: String = (0..state.grid.width)
            .map(|col| if state.grid.is_blocked(Cell::new(col, r)) { '#' } else { '.' })
            .collect();
        let _ = writeln!(out, "row {row}");
    }
    let a = state.agent;
    let _ = writeln!(out, "agent {} {} {}", a.cell.col, a.cell.row, a.heading.letter());
    let _ = writeln!(out, "held {}", state.held.as_deref().unwrap_or("-"));
    for o in &state.objects {
        let caps = bits(&[
            o.caps.pickupable,
            o.caps.receptacle,
            o.caps.openable,
            o.caps.toggleable,
            o.caps.sliceable,
        ]);
        let s = &o.status;
        let status = bits(&[s.is_clean, s.is_hot, s.is_cold, s.is_sliced, s.is_toggled_on, s.is_open]);
        let _ = writeln!(
            out,
            "object {} {} {} {} {} {} {} {} {}",
            o.id,
            o.category,
            o.position.x,
            o.position.y,
            o.position.z,
            o.rotation,
            caps,
            status,
            o.parent.as_deref().unwrap_or("-")
        );
    }
    out.push_str("end\n");
    out
}

fn err(line: usize, msg: impl Into<String>) -> WorldError {
    WorldError::SceneFile { line, msg: msg.into() }
}

fn parse_bits<const N: usize>(line: usize, s: &str) -> Result<[bool; N], WorldError> {
    if s.len() != N || !s.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(err(line, format!("expected {N} bits, got `{s}`")));
    }
    let mut out = [false; N];
    for (i, b) in s.bytes().enumerate() {
        out[i] = b == b'1';
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(line: usize, s: Option<&str>) -> Result<T, WorldError> {
    s.ok_or_else(|| err(line, "missing field"))?
        .parse()
        .map_err(|_| err(line, "bad number"))
}

pub fn read_scene(text: &str) -> Result<WorldState, WorldError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    match lines.next() {
        Some((_, SCENE_FILE_HEADER)) => {}
        Some((n, other)) => return Err(err(n, format!("unsupported header `{other}`"))),
        None => return Err(err(0, "empty scene file")),
    }
    let mut room = None;
    let mut config = WorldConfig::default();
    let mut grid: Option<Grid> = None;
    let mut next_row = 0;
    let mut agent = None;
    let mut held = None;
    let mut objects = Vec::new();
    let mut ended = false;
    for (n, line) in lines.by_ref() {
        let mut f = line.split_whitespace();
        match f.next() {
            None => continue,
            Some("room") => {
                room = Some(f.next().ok_or_else(|| err(n, "missing room"))?.parse::<RoomKind>()?)
            }
            Some("config") => {
                config = WorldConfig {
                    cell_size: num(n, f.next())?,
                    interaction_range: num(n, f.next())?,
                    view_cone_deg: num(n, f.next())?,
                    agent_height: num(n, f.next())?,
                }
            }
            Some("grid") => {
                let (w, h): (i32, i32) = (num(n, f.next())?, num(n, f.next())?);
                if w <= 0 || h <= 0 {
                    return Err(err(n, "grid must be non-empty"));
                }
                grid = Some(Grid::new(w, h, config.cell_size));
            }
            Some("row") => {
                let g = grid.as_mut().ok_or_else(|| err(n, "row before grid"))?;
                let cells = f.next().unwrap_or("");
                if cells.len() != g.width as usize || next_row >= g.height {
                    return Err(err(n, "row has wrong shape"));
                }
                for (col, ch) in cells.chars().enumerate() {
                    match ch {
                        '#' => g.set_blocked(Cell::new(col as i32, next_row), true),
                        '.' => {}
                        _ => return Err(err(n, format!("bad cell `{ch}`"))),
                    }
                }
                next_row += 1;
            }
            Some("agent") => {
                let col = num(n, f.next())?;
                let row = num(n, f.next())?;
                let heading = f
                    .next()
                    .and_then(|h| h.chars().next())
                    .and_then(Heading::from_letter)
                    .ok_or_else(|| err(n, "bad heading"))?;
                agent = Some(Pose { cell: Cell::new(col, row), heading });
            }
            Some("held") => {
                held = match f.next() {
                    Some("-") => None,
                    Some(id) => Some(id.to_string()),
                    None => return Err(err(n, "missing held")),
                }
            }
            Some("object") => {
                let id = f.next().ok_or_else(|| err(n, "missing id"))?.to_string();
                let category = f.next().ok_or_else(|| err(n, "missing category"))?.to_string();
                let position = Vec3::new(num(n, f.next())?, num(n, f.next())?, num(n, f.next())?);
                let rotation = num(n, f.next())?;
                let c = parse_bits::<5>(n, f.next().unwrap_or(""))?;
                let s = parse_bits::<6>(n, f.next().unwrap_or(""))?;
                let parent = match f.next() {
                    Some("-") => None,
                    Some(p) => Some(p.to_string()),
                    None => return Err(err(n, "missing parent")),
                };
                objects.push(ObjectInstance {
                    id,
                    category,
                    position,
                    rotation,
                    caps: Capabilities {
                        pickupable: c[0],
                        receptacle: c[1],
                        openable: c[2],
                        toggleable: c[3],
                        sliceable: c[4],
                    },
                    status: ObjectStatus {
                        is_clean: s[0],
                        is_hot: s[1],
                        is_cold: s[2],
                        is_sliced: s[3],
                        is_toggled_on: s[4],
                        is_open: s[5],
                    },
                    parent,
                });
            }
            Some("end") => {
                ended = true;
                break;
            }
            Some(other) => return Err(err(n, format!("unknown record `{other}`"))),
        }
    }
    if !ended {
        return Err(err(0, "missing `end` record"));
    }
    let grid = grid.ok_or_else(|| err(0, "missing grid"))?;
    if next_row != grid.height {
        return Err(err(0, "grid rows incomplete"));
    }
    let mut state = WorldState::new(
        room.ok_or_else(|| err(0, "missing room"))?,
        config,
        grid,
        agent.ok_or_else(|| err(0, "missing agent"))?,
    );
    objects.sort_by(|a, b| a.id.cmp(&b.id));
    for w in objects.windows(2) {
        if w[0].id == w[1].id {
            return Err(err(0, format!("duplicate object id {}", w[0].id)));
        }
    }
    state.objects = objects;
    state.held = held;
    state.validate().map_err(|m| err(0, m))?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::generate_scene;

    #[test]
    fn scene_file_round_trips() {
        for kind in RoomKind::ALL {
            let s = generate_scene(3, kind).unwrap();
            let text = write_scene(&s);
            assert!(text.starts_with(SCENE_FILE_HEADER));
            assert_eq!(read_scene(&text).unwrap(), s);
        }
    }

    #[test]
    fn rejects_bad_header_and_truncation() {
        assert!(read_scene("something else\n").is_err());
        let s = generate_scene(3, RoomKind::Bedroom).unwrap();
        let text = write_scene(&s);
        let truncated = text.trim_end_matches("end\n");
        assert!(read_scene(truncated).is_err());
    }
}
