use crate::env::Observation;

/// One collected episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    /// `observations[agent][t]`
    pub observations: Vec<Vec<Observation>>,
    /// `actions[agent][t]`, action indices in `0..6`.
    pub actions: Vec<Vec<usize>>,
    pub rewards: Vec<f64>,
    /// Latent the policies were conditioned on.
    pub z: usize,
    /// Scenario mode the environment was reset with.
    pub true_mode: usize,
    pub horizon: usize,
    pub detections: usize,
    pub collisions: usize,
    pub spawned_poachers: usize,
    /// Percent of high-risk cells visited by the end of the episode.
    pub coverage: f64,
    /// Mean entropy of the action distributions actually sampled from.
    pub mean_entropy: f64,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn n_agents(&self) -> usize {
        self.actions.len()
    }

    pub fn team_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Joint observation at step `t`.
    pub fn joint_obs(&self, t: usize) -> Vec<&[f64]> {
        self.observations.iter().map(|o| &o[t][..]).collect()
    }

    pub fn joint_actions(&self, t: usize) -> Vec<usize> {
        self.actions.iter().map(|a| a[t]).collect()
    }
}

/// Episodes collected under one set of policy parameters.
pub type TrajectoryBatch = Vec<Episode>;
