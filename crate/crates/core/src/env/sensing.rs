use std::ops::Deref;

use super::{Cell, Move, WorldState, SIGHTING_DECAY};

pub const PATCH_RADIUS: i32 = 2;
const PATCH_SIDE: usize = (2 * PATCH_RADIUS + 1) as usize;
const PATCH_CELLS: usize = PATCH_SIDE * PATCH_SIDE;
const MAX_NEIGHBOURS: usize = 3;

/// Length of an agent observation vector.
///
/// Layout: own position (2), last move one-hot (5), local patch
/// channel-major occlusion/high-risk/visible-poacher (3 x 25), three
/// nearest neighbours as (dx, dy, present) (9), poacher estimate
/// (dx, dy, weight) (3).
pub const OBS_DIM: usize = 2 + 5 + 3 * PATCH_CELLS + 3 * MAX_NEIGHBOURS + 3;

const OFF_MOVE: usize = 2;
const OFF_PATCH: usize = OFF_MOVE + 5;
const OFF_NEIGH: usize = OFF_PATCH + 3 * PATCH_CELLS;
const OFF_EST: usize = OFF_NEIGH + 3 * MAX_NEIGHBOURS;

#[derive(Debug, Clone, PartialEq)]
pub struct Observation(pub Vec<f64>);

impl Deref for Observation {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Observation {
    pub fn position(&self) -> &[f64] {
        &self.0[..OFF_MOVE]
    }

    pub fn last_move(&self) -> &[f64] {
        &self.0[OFF_MOVE..OFF_PATCH]
    }

    /// Channel `c` (0 occlusion, 1 high-risk, 2 visible poacher) of the 5x5
    /// patch, row-major from the north-west corner.
    pub fn patch_channel(&self, c: usize) -> &[f64] {
        let start = OFF_PATCH + c * PATCH_CELLS;
        &self.0[start..start + PATCH_CELLS]
    }

    pub fn neighbours(&self) -> &[f64] {
        &self.0[OFF_NEIGH..OFF_EST]
    }

    pub fn poacher_estimate(&self) -> &[f64] {
        &self.0[OFF_EST..]
    }
}

/// Cells crossed by the segment between two cell centres, including both
/// cells at any corner the segment passes exactly through.
pub fn supercover_line(from: Cell, to: Cell) -> Vec<Cell> {
    let (dx, dy) = (to.x - from.x, to.y - from.y);
    let (nx, ny) = (dx.abs(), dy.abs());
    let (sx, sy) = (dx.signum(), dy.signum());
    let mut p = from;
    let mut cells = vec![p];
    let (mut ix, mut iy) = (0, 0);
    while ix < nx || iy < ny {
        let decision = (1 + 2 * ix) * ny - (1 + 2 * iy) * nx;
        if decision == 0 {
            cells.push(Cell::new(p.x + sx, p.y));
            cells.push(Cell::new(p.x, p.y + sy));
            p = p.offset(sx, sy);
            ix += 1;
            iy += 1;
        } else if decision < 0 {
            p = p.offset(sx, 0);
            ix += 1;
        } else {
            p = p.offset(0, sy);
            iy += 1;
        }
        cells.push(p);
    }
    cells
}

/// True when no cell strictly between `from` and `to` on the supercover
/// line is occluded.
pub fn line_of_sight(state: &WorldState, from: Cell, to: Cell) -> bool {
    supercover_line(from, to)
        .into_iter()
        .filter(|&c| c != from && c != to)
        .all(|c| !state.is_occluded(c))
}

impl WorldState {
    /// Whether a UAV at `from` sees the cell `target`.
    pub fn sees(&self, from: Cell, target: Cell) -> bool {
        from.chebyshev(target) <= self.config.sensor_radius as i32
            && line_of_sight(self, from, target)
    }

    /// Nearest alive poacher visible from `from`, ties by poacher index.
    pub(crate) fn nearest_visible_poacher(&self, from: Cell) -> Option<Cell> {
        self.poachers
            .iter()
            .filter(|p| p.alive && self.sees(from, p.pos))
            .min_by_key(|p| from.chebyshev(p.pos))
            .map(|p| p.pos)
    }

    /// Freshest poacher estimate available to `agent`: its own sighting at
    /// age 0, else its mailbox entry.
    pub(crate) fn poacher_estimate(&self, agent: usize) -> Option<(Cell, u32)> {
        let pos = self.uavs[agent].pos;
        if let Some(c) = self.nearest_visible_poacher(pos) {
            return Some((c, 0));
        }
        self.mailbox[agent].map(|s| (s.cell, s.age))
    }

    pub fn observe(&self, agent: usize) -> Observation {
        let cfg = &self.config;
        let mut v = vec![0.0; OBS_DIM];
        let me = &self.uavs[agent];
        let pos = me.pos;
        v[0] = pos.x as f64 / (cfg.grid_w - 1) as f64;
        v[1] = pos.y as f64 / (cfg.grid_h - 1) as f64;
        let mv = match me.last_move {
            Move::Up => 0,
            Move::Down => 1,
            Move::Left => 2,
            Move::Right => 3,
            Move::Stay => 4,
        };
        v[OFF_MOVE + mv] = 1.0;

        let mut k = 0;
        for dy in -PATCH_RADIUS..=PATCH_RADIUS {
            for dx in -PATCH_RADIUS..=PATCH_RADIUS {
                let c = pos.offset(dx, dy);
                if cfg.in_bounds(c) {
                    if self.is_occluded(c) {
                        v[OFF_PATCH + k] = 1.0;
                    }
                    if self.is_highrisk(c) {
                        v[OFF_PATCH + PATCH_CELLS + k] = 1.0;
                    }
                    if self
                        .poachers
                        .iter()
                        .any(|p| p.alive && p.pos == c && self.sees(pos, c))
                    {
                        v[OFF_PATCH + 2 * PATCH_CELLS + k] = 1.0;
                    }
                }
                k += 1;
            }
        }

        let rc = cfg.comm_radius as i32;
        let mut neigh: Vec<(i32, usize)> = self
            .uavs
            .iter()
            .enumerate()
            .filter(|&(j, u)| j != agent && pos.chebyshev(u.pos) <= rc)
            .map(|(j, u)| (pos.chebyshev(u.pos), j))
            .collect();
        neigh.sort_unstable();
        let scale = rc.max(1) as f64;
        for (slot, &(_, j)) in neigh.iter().take(MAX_NEIGHBOURS).enumerate() {
            let o = self.uavs[j].pos;
            let base = OFF_NEIGH + 3 * slot;
            v[base] = (o.x - pos.x) as f64 / scale;
            v[base + 1] = (o.y - pos.y) as f64 / scale;
            v[base + 2] = 1.0;
        }

        if let Some((c, age)) = self.poacher_estimate(agent) {
            v[OFF_EST] = (c.x - pos.x) as f64 / (cfg.grid_w - 1) as f64;
            v[OFF_EST + 1] = (c.y - pos.y) as f64 / (cfg.grid_h - 1) as f64;
            v[OFF_EST + 2] = SIGHTING_DECAY.powi(age as i32);
        }
        Observation(v)
    }
}
