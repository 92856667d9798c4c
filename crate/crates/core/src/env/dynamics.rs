use rand::Rng;

use super::{
    Action, Cell, Move, Sighting, WorldState, COLLISION_COST, COVERAGE_REWARD, DETECTION_REWARD,
    POACHER_GOAL_PROB, STEP_COST,
};

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub team_reward: f64,
    /// (agent, poacher) pairs; the agent is the lowest-index UAV that saw it.
    pub detections: Vec<(usize, usize)>,
    /// Unordered agent pairs, smaller index first.
    pub collisions: Vec<(usize, usize)>,
    pub new_highrisk_cells: usize,
    pub done: bool,
}

/// The team reward table applied to one step's events.
pub fn reward_from_events(
    detections: usize,
    new_highrisk_cells: usize,
    n_agents: usize,
    collisions: usize,
) -> f64 {
    DETECTION_REWARD * detections as f64 + COVERAGE_REWARD * new_highrisk_cells as f64
        - STEP_COST * n_agents as f64
        - COLLISION_COST * collisions as f64
}

const DIRS: [(i32, i32); 4] = [(0, -1), (0, 1), (-1, 0), (1, 0)];

impl WorldState {
    /// Advances the world by one step.
    ///
    /// # Panics
    ///
    /// If the episode is already done or `actions` has the wrong length.
    pub fn step<R: Rng + ?Sized>(&mut self, actions: &[Action], rng: &mut R) -> StepOutcome {
        assert!(!self.is_done(), "step called on a finished episode");
        assert_eq!(actions.len(), self.uavs.len(), "one action per agent");
        let n = self.uavs.len();

        // UAV moves
        let current: Vec<Cell> = self.uavs.iter().map(|u| u.pos).collect();
        let mut target: Vec<Cell> = actions
            .iter()
            .zip(&current)
            .map(|(a, &c)| {
                let (dx, dy) = a.delta();
                let t = c.offset(dx, dy);
                if self.is_free(t) {
                    t
                } else {
                    c
                }
            })
            .collect();
        let mut collisions: Vec<(usize, usize)> = Vec::new();
        loop {
            let mut contested = false;
            for i in 0..n {
                let group: Vec<usize> = (0..n).filter(|&j| target[j] == target[i]).collect();
                if group.len() < 2 {
                    continue;
                }
                contested = true;
                for (a, &gi) in group.iter().enumerate() {
                    for &gj in &group[a + 1..] {
                        if !collisions.contains(&(gi, gj)) {
                            collisions.push((gi, gj));
                        }
                    }
                }
                for &g in &group {
                    target[g] = current[g];
                }
            }
            if !contested {
                break;
            }
        }
        collisions.sort_unstable();
        let mut new_cells = 0;
        for (i, uav) in self.uavs.iter_mut().enumerate() {
            let (dx, dy) = (target[i].x - uav.pos.x, target[i].y - uav.pos.y);
            uav.last_move = Move::from_delta(dx, dy);
            if (dx, dy) != (0, 0) {
                uav.energy_spent += 1.0;
            }
            uav.pos = target[i];
        }
        for c in target {
            if self.mark_visited(c) {
                new_cells += 1;
            }
        }

        // Broadcasts relay the sender's freshest estimate to its neighbours.
        let rc = self.config.comm_radius as i32;
        let mut deliveries: Vec<(usize, Sighting)> = Vec::new();
        for (i, a) in actions.iter().enumerate() {
            if *a != Action::Broadcast {
                continue;
            }
            if let Some((cell, age)) = self.poacher_estimate(i) {
                let from = self.uavs[i].pos;
                for (j, u) in self.uavs.iter().enumerate() {
                    if j != i && from.chebyshev(u.pos) <= rc {
                        deliveries.push((j, Sighting { cell, age }));
                    }
                }
            }
        }
        for (j, s) in deliveries {
            self.receive(j, s);
        }

        // Poachers
        let er = self.config.evasion_radius as i32;
        for p in 0..self.poachers.len() {
            if !self.poachers[p].alive {
                continue;
            }
            let pos = self.poachers[p].pos;
            let threat = self
                .uavs
                .iter()
                .map(|u| u.pos)
                .filter(|u| u.chebyshev(pos) <= er)
                .min_by_key(|u| u.chebyshev(pos));
            let next = if let Some(u) = threat {
                self.axis_step(pos, pos.x - u.x, pos.y - u.y)
            } else if rng.gen_bool(POACHER_GOAL_PROB) {
                let goal = self.hotspots[self.poachers[p].target_hotspot];
                self.axis_step(pos, goal.x - pos.x, goal.y - pos.y)
            } else {
                let (dx, dy) = DIRS[rng.gen_range(0..4)];
                let c = pos.offset(dx, dy);
                if self.is_free(c) {
                    c
                } else {
                    pos
                }
            };
            self.poachers[p].pos = next;
        }

        // Detection
        let mut detections = Vec::new();
        for p in 0..self.poachers.len() {
            if !self.poachers[p].alive {
                continue;
            }
            let pc = self.poachers[p].pos;
            if let Some(a) = self.uavs.iter().position(|u| self.sees(u.pos, pc)) {
                detections.push((a, p));
                self.poachers[p].alive = false;
                self.receive(a, Sighting { cell: pc, age: 0 });
            }
        }

        let team_reward = reward_from_events(detections.len(), new_cells, n, collisions.len());
        self.t += 1;
        for s in self.mailbox.iter_mut().flatten() {
            s.age += 1;
        }
        StepOutcome {
            team_reward,
            detections,
            collisions,
            new_highrisk_cells: new_cells,
            done: self.is_done(),
        }
    }

    fn receive(&mut self, agent: usize, s: Sighting) {
        let slot = &mut self.mailbox[agent];
        if slot.is_none_or(|old| s.age <= old.age) {
            *slot = Some(s);
        }
    }

    /// One 4-neighbour step along direction `(dx, dy)`: the dominant axis
    /// first (x on ties), then the other axis, else stay.
    fn axis_step(&self, pos: Cell, dx: i32, dy: i32) -> Cell {
        let x_move = Cell::new(pos.x + dx.signum(), pos.y);
        let y_move = Cell::new(pos.x, pos.y + dy.signum());
        let order = if dx.abs() >= dy.abs() {
            [(dx != 0, x_move), (dy != 0, y_move)]
        } else {
            [(dy != 0, y_move), (dx != 0, x_move)]
        };
        order
            .into_iter()
            .find(|&(ok, c)| ok && self.is_free(c))
            .map_or(pos, |(_, c)| c)
    }
}
