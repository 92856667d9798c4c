//! Line-oriented step log used for golden-trace comparisons.
//!
//! One line per step: `t;agent_positions;poacher_positions;events;reward`.
//! Positions are `x,y` pairs joined by `|` (alive poachers only). Events are
//! `D<agent>-<poacher>` detections, `C<a>-<b>` collisions and `N<count>`
//! newly covered high-risk cells, joined by `|`. The reward has six
//! fractional digits.

use std::fmt::Write;

use super::{Cell, StepOutcome, WorldState};

fn join_cells(cells: impl Iterator<Item = Cell>) -> String {
    let parts: Vec<String> = cells.map(|c| format!("{},{}", c.x, c.y)).collect();
    parts.join("|")
}

/// Formats the state reached after a step together with that step's outcome.
pub fn trace_line(state: &WorldState, outcome: &StepOutcome) -> String {
    let mut events: Vec<String> = Vec::new();
    for (a, p) in &outcome.detections {
        events.push(format!("D{a}-{p}"));
    }
    for (a, b) in &outcome.collisions {
        events.push(format!("C{a}-{b}"));
    }
    if outcome.new_highrisk_cells > 0 {
        events.push(format!("N{}", outcome.new_highrisk_cells));
    }
    let mut line = String::new();
    write!(
        line,
        "{};{};{};{};{:.6}",
        state.t,
        join_cells(state.uavs.iter().map(|u| u.pos)),
        join_cells(state.poachers.iter().filter(|p| p.alive).map(|p| p.pos)),
        events.join("|"),
        outcome.team_reward
    )
    .unwrap();
    line
}
