//! Wildlife-patrol grid world.
//!
//! UAVs move on a grid with occluded terrain, poachers gravitate toward a
//! cluster of risk hotspots picked by the hidden scenario mode, and the team
//! is rewarded for detections and for covering hotspot neighbourhoods.
//!
//! Terrain and hotspots are a function of [`EnvConfig::seed`] alone, so every
//! episode of a run shares one map. Spawns, the scenario mode and all
//! transition noise come from the generator passed to [`reset`] and
//! [`WorldState::step`].

mod dynamics;
mod layout;
mod sensing;
pub mod trace;

use std::collections::BTreeSet;

use crate::error::{Error, Result};

pub use dynamics::{reward_from_events, StepOutcome};
pub use layout::reset;
pub use sensing::{line_of_sight, supercover_line, Observation, OBS_DIM};

/// Reward per detected poacher.
pub const DETECTION_REWARD: f64 = 10.0;
/// Reward per newly visited high-risk cell.
pub const COVERAGE_REWARD: f64 = 0.1;
/// Cost per agent per step.
pub const STEP_COST: f64 = 0.01;
/// Cost per collision event.
pub const COLLISION_COST: f64 = 1.0;
/// Chebyshev radius of the high-risk neighbourhood around each hotspot.
pub const HIGHRISK_RADIUS: i32 = 2;
/// Poachers spawn within this Chebyshev distance of their hotspot.
pub const SPAWN_RADIUS: i32 = 3;
/// Probability that a non-evading poacher steps toward its target.
pub const POACHER_GOAL_PROB: f64 = 0.8;
/// Per-step decay of a relayed poacher sighting.
pub const SIGHTING_DECAY: f64 = 0.9;

/// A grid cell, `x` grows east and `y` grows south.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn chebyshev(self, other: Cell) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn offset(self, dx: i32, dy: i32) -> Cell {
        Cell::new(self.x + dx, self.y + dy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub grid_w: usize,
    pub grid_h: usize,
    pub n_agents: usize,
    pub n_poachers: usize,
    pub n_hotspots: usize,
    /// Number of latent scenario modes.
    pub n_modes: usize,
    pub sensor_radius: usize,
    pub comm_radius: usize,
    pub occlusion_fraction: f64,
    pub horizon: usize,
    pub evasion_radius: usize,
    /// Seeds the terrain and hotspot layout.
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            grid_w: 25,
            grid_h: 25,
            n_agents: 10,
            n_poachers: 3,
            n_hotspots: 6,
            n_modes: 4,
            sensor_radius: 3,
            comm_radius: 6,
            occlusion_fraction: 0.12,
            horizon: 200,
            evasion_radius: 4,
            seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.grid_w < 5 || self.grid_h < 5 {
            return bad(format!(
                "grid must be at least 5x5, got {}x{}",
                self.grid_w, self.grid_h
            ));
        }
        if self.n_agents < 1 {
            return bad("n_agents must be at least 1".into());
        }
        if self.n_modes < 1 || self.n_modes > self.n_hotspots {
            return bad(format!(
                "need 1 <= n_modes <= n_hotspots, got n_modes={} n_hotspots={}",
                self.n_modes, self.n_hotspots
            ));
        }
        if self.sensor_radius > self.comm_radius {
            return bad(format!(
                "sensor_radius {} exceeds comm_radius {}",
                self.sensor_radius, self.comm_radius
            ));
        }
        if self.horizon < 1 {
            return bad("horizon must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.occlusion_fraction) {
            return bad(format!(
                "occlusion_fraction must lie in [0, 1], got {}",
                self.occlusion_fraction
            ));
        }
        Ok(())
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.grid_w && (c.y as usize) < self.grid_h
    }

    pub(crate) fn index(&self, c: Cell) -> usize {
        c.y as usize * self.grid_w + c.x as usize
    }
}

/// The six discrete agent actions. `Broadcast` leaves the agent in place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
    Stay = 4,
    Broadcast = 5,
}

impl Action {
    pub const COUNT: usize = 6;
    pub const ALL: [Action; 6] = [
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::Stay,
        Action::Broadcast,
    ];

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn delta(self) -> (i32, i32) {
        match self {
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
            Action::Stay | Action::Broadcast => (0, 0),
        }
    }
}

/// Realised displacement of a UAV, as seen in the one-hot "last move" block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
    Stay = 4,
}

impl Move {
    pub fn from_delta(dx: i32, dy: i32) -> Move {
        match (dx, dy) {
            (0, -1) => Move::Up,
            (0, 1) => Move::Down,
            (-1, 0) => Move::Left,
            (1, 0) => Move::Right,
            _ => Move::Stay,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Uav {
    pub pos: Cell,
    pub last_move: Move,
    pub energy_spent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Poacher {
    pub pos: Cell,
    pub target_hotspot: usize,
    pub alive: bool,
}

/// A relayed poacher position and how many steps old it is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sighting {
    pub cell: Cell,
    pub age: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub config: EnvConfig,
    /// Row-major, `true` where terrain blocks movement and sight.
    pub occlusion: Vec<bool>,
    /// Ordered clockwise by compass bearing from the grid centre.
    pub hotspots: Vec<Cell>,
    highrisk: Vec<bool>,
    highrisk_total: usize,
    pub uavs: Vec<Uav>,
    pub poachers: Vec<Poacher>,
    pub scenario_mode: usize,
    visited: Vec<bool>,
    visited_count: usize,
    pub t: usize,
    pub mailbox: Vec<Option<Sighting>>,
}

impl WorldState {
    pub fn is_occluded(&self, c: Cell) -> bool {
        self.occlusion[self.config.index(c)]
    }

    /// In bounds and not occluded.
    pub fn is_free(&self, c: Cell) -> bool {
        self.config.in_bounds(c) && !self.is_occluded(c)
    }

    pub fn is_highrisk(&self, c: Cell) -> bool {
        self.config.in_bounds(c) && self.highrisk[self.config.index(c)]
    }

    pub fn highrisk_count(&self) -> usize {
        self.highrisk_total
    }

    pub fn visited_highrisk_count(&self) -> usize {
        self.visited_count
    }

    /// High-risk cells visited by any UAV so far this episode.
    pub fn visited_highrisk(&self) -> BTreeSet<Cell> {
        self.cells_where(&self.visited)
    }

    pub fn highrisk_cells(&self) -> BTreeSet<Cell> {
        self.cells_where(&self.highrisk)
    }

    pub fn alive_poachers(&self) -> usize {
        self.poachers.iter().filter(|p| p.alive).count()
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.config.horizon || self.alive_poachers() == 0
    }

    fn cells_where(&self, mask: &[bool]) -> BTreeSet<Cell> {
        let w = self.config.grid_w;
        mask.iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| Cell::new((i % w) as i32, (i / w) as i32))
            .collect()
    }

    pub(crate) fn mark_visited(&mut self, c: Cell) -> bool {
        let i = self.config.index(c);
        if self.highrisk[i] && !self.visited[i] {
            self.visited[i] = true;
            self.visited_count += 1;
            true
        } else {
            false
        }
    }
}

/// Union of the Chebyshev-radius-2 neighbourhoods of `hotspots`, clipped to
/// a `w` by `h` grid.
pub fn highrisk_cells(hotspots: &[Cell], w: usize, h: usize) -> BTreeSet<Cell> {
    let mut out = BTreeSet::new();
    for &hs in hotspots {
        for dy in -HIGHRISK_RADIUS..=HIGHRISK_RADIUS {
            for dx in -HIGHRISK_RADIUS..=HIGHRISK_RADIUS {
                let c = hs.offset(dx, dy);
                if c.x >= 0 && c.y >= 0 && (c.x as usize) < w && (c.y as usize) < h {
                    out.insert(c);
                }
            }
        }
    }
    out
}

fn highrisk_mask(hotspots: &[Cell], config: &EnvConfig) -> Vec<bool> {
    let mut mask = vec![false; config.grid_w * config.grid_h];
    for c in highrisk_cells(hotspots, config.grid_w, config.grid_h) {
        mask[config.index(c)] = true;
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn highrisk_interior_hotspot_is_5x5() {
        assert_eq!(highrisk_cells(&[Cell::new(10, 10)], 25, 25).len(), 25);
    }

    #[test]
    fn highrisk_corner_hotspot_is_clipped() {
        assert_eq!(highrisk_cells(&[Cell::new(0, 0)], 25, 25).len(), 9);
        assert_eq!(highrisk_cells(&[Cell::new(24, 24)], 25, 25).len(), 9);
    }

    fn enumerate_union(a: Cell, b: Cell) -> usize {
        // Brute force over the whole grid.
        let mut n = 0;
        for y in 0..25 {
            for x in 0..25 {
                let c = Cell::new(x, y);
                if c.chebyshev(a) <= 2 || c.chebyshev(b) <= 2 {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn highrisk_union_of_two_hotspots_matches_enumeration() {
        // Axis-aligned pair at Chebyshev distance 2: two 5x5 squares sharing a 3x5 strip.
        let (a, b) = (Cell::new(10, 10), Cell::new(12, 10));
        assert_eq!(enumerate_union(a, b), 35);
        assert_eq!(highrisk_cells(&[a, b], 25, 25).len(), 35);
        // Diagonal pair at Chebyshev distance 2 shares a 3x3 block.
        let (a, b) = (Cell::new(10, 10), Cell::new(12, 12));
        assert_eq!(enumerate_union(a, b), 41);
        assert_eq!(highrisk_cells(&[a, b], 25, 25).len(), 41);
        // Axis-aligned pair at distance 3 shares a 2x5 strip.
        let (a, b) = (Cell::new(10, 10), Cell::new(13, 10));
        assert_eq!(enumerate_union(a, b), 40);
        assert_eq!(highrisk_cells(&[a, b], 25, 25).len(), 40);
    }

    #[test]
    fn config_validation() {
        assert!(EnvConfig::default().validate().is_ok());
        let bad = [
            EnvConfig { grid_w: 4, ..Default::default() },
            EnvConfig { n_agents: 0, ..Default::default() },
            EnvConfig { n_modes: 0, ..Default::default() },
            EnvConfig { n_modes: 7, ..Default::default() },
            EnvConfig { sensor_radius: 7, ..Default::default() },
            EnvConfig { horizon: 0, ..Default::default() },
            EnvConfig { occlusion_fraction: 1.5, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn action_round_trip() {
        for a in Action::ALL {
            assert_eq!(Action::from_index(a.index()), Some(a));
        }
        assert_eq!(Action::from_index(6), None);
    }
}
